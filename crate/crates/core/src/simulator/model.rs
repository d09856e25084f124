//! Segment-by-segment crossflow model of a two-row evaporator.
//!
//! Each tube is cut into `segments_per_tube` segments along its length. Air
//! crosses the coil in streams aligned with those segments: a stream first
//! meets segment `s` of the row-1 tube at position `p`, then segment `s` of
//! the row-2 tube at the same position. Refrigerant enters every circuit at
//! the front face and alternates direction at each bend.
//!
//! Because row-2 air inlet temperatures depend on row-1 duties, which depend
//! on the refrigerant state reaching them, the air field is solved by an
//! under-relaxed Gauss–Seidel sweep: every sweep re-marches all circuits,
//! reading the current row-2 inlet estimates and updating them as soon as
//! the feeding row-1 segment is computed.
//!
//! Refrigerant properties are evaluated at the inlet pressure throughout; the
//! computed pressure drop is reported but does not shift the saturation
//! temperature.

use serde::Serialize;

use crate::circuitry::CircuitryDesign;
use crate::error::{Error, Result};
use crate::thermo::{air, PropertyTable, RefrigerantState, SaturationRow};

use super::instance::{HexInstance, SimulatorConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitResult {
    pub mass_flow_kg_s: f64,
    pub outlet: RefrigerantState,
    pub delta_p_kpa: f64,
    pub q_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentDetail {
    pub circuit: usize,
    pub tube: usize,
    pub segment: usize,
    pub air_in_c: f64,
    pub air_out_c: f64,
    pub refrigerant_enthalpy_out: f64,
    pub q_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    /// Total heat transferred from air to refrigerant, W.
    pub q_w: f64,
    /// Largest circuit pressure drop, kPa.
    pub delta_p_kpa: f64,
    pub per_circuit: Vec<CircuitResult>,
    /// Heat removed from the air, from the final air temperature field, W.
    pub air_side_duty_w: f64,
    /// Refrigerant enthalpy gain times mass flow, summed over circuits, W.
    pub refrigerant_side_duty_w: f64,
    pub iterations: usize,
    pub segments: Option<Vec<SegmentDetail>>,
}

impl SimulationResult {
    /// `|air duty - refrigerant duty| / Q`, zero when `Q` is zero.
    pub fn energy_imbalance(&self) -> f64 {
        let diff = (self.air_side_duty_w - self.refrigerant_side_duty_w).abs();
        if self.q_w.abs() < 1e-9 {
            diff
        } else {
            diff / self.q_w.abs()
        }
    }
}

/// Geometry-derived quantities shared by every segment.
#[derive(Debug, Clone)]
struct SegmentModel {
    segments: usize,
    seg_length: f64,
    inner_diameter: f64,
    flow_area: f64,
    inner_area: f64,
    /// Air-side conductance `h·(A_bare + η·A_fin)` of one segment, W/K.
    air_conductance: f64,
    /// Capacity rate of one air stream, W/K.
    air_capacity: f64,
}

impl SegmentModel {
    fn new(instance: &HexInstance, config: &SimulatorConfig) -> Self {
        let mm = 1e-3;
        let segments = config.segments_per_tube;
        let length = instance.tube_length_mm * mm;
        let d_i = instance.tube_inner_diameter_mm * mm;
        let d_o = instance.tube_outer_diameter_mm * mm;
        let s_v = instance.tube_vertical_spacing_mm * mm;
        let s_h = instance.tube_horizontal_spacing_mm * mm;
        let fin_pitch = 25.4 * mm / instance.fins_per_inch;
        let fin_t = instance.fin_thickness_mm * mm;
        let per_row = instance.layout.tubes_per_row() as f64;

        let seg_length = length / segments as f64;
        let fins_per_m = 1.0 / fin_pitch;
        let fin_area_per_m =
            fins_per_m * 2.0 * (s_v * s_h - std::f64::consts::PI * d_o * d_o / 4.0);
        let bare_area_per_m = std::f64::consts::PI * d_o * (1.0 - fins_per_m * fin_t);
        let effective_area =
            (bare_area_per_m + config.fin_efficiency * fin_area_per_m) * seg_length;

        let face_area = length * per_row * s_v;
        let sigma = ((s_v - d_o) / s_v) * ((fin_pitch - fin_t) / fin_pitch);
        let rho_air = air::density(instance.air_inlet_pressure_kpa, instance.air_inlet_temperature_c);
        let v_max = instance.air_flow_m3_s / face_area / sigma;
        let cp_air = air::CP * 1e3;
        let h_air = config.air_j_factor * rho_air * v_max * cp_air / air::PRANDTL.powf(2.0 / 3.0);
        let air_mass = rho_air * instance.air_flow_m3_s;
        let streams = per_row * segments as f64;

        SegmentModel {
            segments,
            seg_length,
            inner_diameter: d_i,
            flow_area: std::f64::consts::PI * d_i * d_i / 4.0,
            inner_area: std::f64::consts::PI * d_i * seg_length,
            air_conductance: h_air * effective_area,
            air_capacity: air_mass / streams * cp_air,
        }
    }

    fn ua(&self, refrigerant_htc: f64) -> f64 {
        1.0 / (1.0 / self.air_conductance + 1.0 / (refrigerant_htc * self.inner_area))
    }
}

/// Unmixed–unmixed crossflow effectiveness.
pub(crate) fn crossflow_unmixed_effectiveness(ntu: f64, cr: f64) -> f64 {
    if ntu <= 0.0 {
        return 0.0;
    }
    if cr <= 1e-12 {
        return 1.0 - (-ntu).exp();
    }
    1.0 - ((ntu.powf(0.22) / cr) * ((-cr * ntu.powf(0.78)).exp() - 1.0)).exp()
}

/// Per-circuit refrigerant-side constants.
struct Stream<'a> {
    sat: &'a SaturationRow,
    mass_flow: f64,
    mass_flux: f64,
    vapour_htc: f64,
    vapour_capacity: f64,
}

impl SegmentModel {
    /// Heat picked up by refrigerant at enthalpy `h` [kJ/kg] from air at
    /// `air_in` [°C] over one segment, W. Never negative.
    fn segment_duty(&self, stream: &Stream<'_>, config: &SimulatorConfig, h: f64, air_in: f64) -> f64 {
        let sat = stream.sat;
        let mut q = 0.0;
        let mut fraction = 1.0;
        let mut h = h;
        if h < sat.h_g {
            let ntu = self.ua(config.two_phase_htc) / self.air_capacity;
            let eff = 1.0 - (-ntu).exp();
            let full = (eff * self.air_capacity * (air_in - sat.t_sat)).max(0.0);
            let room = stream.mass_flow * (sat.h_g - h) * 1e3;
            if full <= room {
                return full;
            }
            // Dry-out inside the segment: the wetted part takes the fraction of
            // area (and of the air stream) that brings the flow to saturated vapour.
            fraction = 1.0 - room / full;
            q = room;
            h = sat.h_g;
            if fraction <= 0.0 {
                return q;
            }
        }
        let t_ref = sat.t_sat + (h - sat.h_g) / sat.cp_g;
        let c_air = self.air_capacity * fraction;
        let c_ref = stream.vapour_capacity;
        let (c_min, c_max) = if c_air < c_ref { (c_air, c_ref) } else { (c_ref, c_air) };
        let ntu = self.ua(stream.vapour_htc) * fraction / c_min;
        let eff = crossflow_unmixed_effectiveness(ntu, c_min / c_max);
        q + (eff * c_min * (air_in - t_ref)).max(0.0)
    }

    /// Homogeneous-flow friction plus optional bend loss at mean quality `x`, Pa.
    fn pressure_drop(&self, stream: &Stream<'_>, config: &SimulatorConfig, x: f64, bend: bool) -> f64 {
        let sat = stream.sat;
        let x = x.clamp(0.0, 1.0);
        let rho = 1.0 / (x / sat.rho_g + (1.0 - x) / sat.rho_f);
        let mu = 1.0 / (x / sat.mu_g + (1.0 - x) / sat.mu_f);
        let re = stream.mass_flux * self.inner_diameter / mu;
        let f = config.friction_coefficient * re.powf(-config.friction_exponent);
        let head = stream.mass_flux * stream.mass_flux / (2.0 * rho);
        let mut dp = f * (self.seg_length / self.inner_diameter) * head;
        if bend {
            dp += config.bend_loss_coefficient * head;
        }
        dp
    }
}

/// Simulates a directed circuitry design on a coil.
pub fn simulate(
    design: &CircuitryDesign,
    instance: &HexInstance,
    config: &SimulatorConfig,
    props: &PropertyTable,
) -> Result<SimulationResult> {
    if !design.is_directed() {
        return Err(Error::contract("simulate needs a directed design"));
    }
    if design.layout() != instance.layout {
        return Err(Error::contract(format!(
            "design has {} tubes but the instance has {}",
            design.layout().tubes(),
            instance.layout.tubes()
        )));
    }
    instance.validate()?;
    config.validate()?;

    let layout = instance.layout;
    let model = SegmentModel::new(instance, config);
    let sat = props.sat_props(instance.refrigerant_pressure_kpa)?;
    let h_in = props.enthalpy_at(instance.refrigerant_pressure_kpa, instance.refrigerant_inlet_quality)?;
    let circuits = design.circuits();
    let mass_flow = instance.refrigerant_mass_flow_kg_s / circuits.len() as f64;
    let mass_flux = mass_flow / model.flow_area;

    let re_vapour = mass_flux * model.inner_diameter / sat.mu_g;
    let pr_vapour = sat.cp_g * 1e3 * sat.mu_g / sat.k_g;
    let vapour_htc = config.dittus_boelter_coefficient
        * re_vapour.powf(0.8)
        * pr_vapour.powf(0.4)
        * sat.k_g
        / model.inner_diameter;
    let stream = Stream {
        sat: &sat,
        mass_flow,
        mass_flux,
        vapour_htc,
        vapour_capacity: mass_flow * sat.cp_g * 1e3,
    };

    let per_row = layout.tubes_per_row();
    let segs = model.segments;
    let t_face = instance.air_inlet_temperature_c;
    let mut row2_inlet = vec![t_face; per_row * segs];
    let mut row2_outlet = vec![t_face; per_row * segs];
    let mut trace = Vec::new();

    for iteration in 1..=config.max_iterations {
        let mut residual: f64 = 0.0;
        let mut per_circuit = Vec::with_capacity(circuits.len());
        let mut details = config.record_segments.then(Vec::new);

        for (ci, circuit) in circuits.iter().enumerate() {
            let mut h = h_in;
            let mut dp = 0.0;
            let mut q_circuit = 0.0;
            for (k, &tube) in circuit.tubes.iter().enumerate() {
                let (row, pos) = layout.position(tube)?;
                let forward = k % 2 == 0;
                for step in 0..segs {
                    let s = if forward { step } else { segs - 1 - step };
                    let slot = (pos - 1) * segs + s;
                    let air_in = if row == 1 { t_face } else { row2_inlet[slot] };
                    let x_in = (h - sat.h_f) / sat.h_fg();
                    let q = model.segment_duty(&stream, config, h, air_in);
                    h += q / (mass_flow * 1e3);
                    let x_out = (h - sat.h_f) / sat.h_fg();
                    let air_out = air_in - q / model.air_capacity;
                    let bend = step == segs - 1 && k + 1 < circuit.tubes.len();
                    dp += model.pressure_drop(&stream, config, 0.5 * (x_in + x_out), bend);
                    q_circuit += q;
                    if row == 1 {
                        let old = row2_inlet[slot];
                        residual = residual.max((air_out - old).abs());
                        row2_inlet[slot] = old + config.relaxation * (air_out - old);
                    } else {
                        row2_outlet[slot] = air_out;
                    }
                    if let Some(d) = details.as_mut() {
                        d.push(SegmentDetail {
                            circuit: ci,
                            tube,
                            segment: s,
                            air_in_c: air_in,
                            air_out_c: air_out,
                            refrigerant_enthalpy_out: h,
                            q_w: q,
                        });
                    }
                }
            }
            per_circuit.push(CircuitResult {
                mass_flow_kg_s: mass_flow,
                outlet: props.state(instance.refrigerant_pressure_kpa, h)?,
                delta_p_kpa: dp * 1e-3,
                q_w: q_circuit,
            });
        }
        trace.push(residual);

        if residual < config.tolerance_k {
            let q_w: f64 = per_circuit.iter().map(|c| c.q_w).sum();
            let refrigerant_side_duty_w = per_circuit
                .iter()
                .map(|c| c.mass_flow_kg_s * (c.outlet.enthalpy - h_in) * 1e3)
                .sum();
            let air_side_duty_w = row2_outlet
                .iter()
                .map(|&t_out| model.air_capacity * (t_face - t_out))
                .sum();
            let delta_p_kpa = per_circuit
                .iter()
                .map(|c| c.delta_p_kpa)
                .fold(0.0, f64::max);
            return Ok(SimulationResult {
                q_w,
                delta_p_kpa,
                per_circuit,
                air_side_duty_w,
                refrigerant_side_duty_w,
                iterations: iteration,
                segments: details,
            });
        }
    }

    Err(Error::NotConverged {
        iterations: config.max_iterations,
        last_residual: *trace.last().unwrap_or(&f64::NAN),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuitry::{base_vector, decode, CircuitryVector, HexLayout};
    use approx::assert_relative_eq;

    fn run(instance: &HexInstance, x: &CircuitryVector, orientation: u64) -> SimulationResult {
        let design = decode(x).unwrap().orientation(orientation).unwrap();
        simulate(&design, instance, &SimulatorConfig::default(), &PropertyTable::embedded()).unwrap()
    }

    fn fig2() -> CircuitryVector {
        CircuitryVector::from_ones(HexLayout::with_tubes(8).unwrap(), &[1, 12, 14, 16, 23, 28]).unwrap()
    }

    #[test]
    fn effectiveness_limits() {
        assert_eq!(crossflow_unmixed_effectiveness(0.0, 0.5), 0.0);
        assert_relative_eq!(crossflow_unmixed_effectiveness(1.0, 0.0), 1.0 - (-1.0f64).exp());
        assert_relative_eq!(crossflow_unmixed_effectiveness(1.0, 1e-9), 1.0 - (-1.0f64).exp(), epsilon = 1e-6);
        // The exact series gives 0.476 at NTU=1, Cr=1; the correlation is within 2%.
        assert_relative_eq!(crossflow_unmixed_effectiveness(1.0, 1.0), 1.0 - ((-1.0f64).exp() - 1.0).exp());
        assert!((crossflow_unmixed_effectiveness(1.0, 1.0) - 0.476).abs() < 0.01);
        let mut last = 0.0;
        for n in 1..50 {
            let e = crossflow_unmixed_effectiveness(n as f64 * 0.2, 0.5);
            assert!(e > last && e < 1.0);
            last = e;
        }
    }

    #[test]
    fn undirected_design_rejected() {
        let inst = HexInstance::reference(2).unwrap();
        let d = decode(&base_vector(inst.layout)).unwrap();
        let err = simulate(&d, &inst, &SimulatorConfig::default(), &PropertyTable::embedded());
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn zero_driving_difference() {
        let mut inst = HexInstance::reference(4).unwrap();
        inst.air_inlet_temperature_c = PropertyTable::embedded().sat_props(350.0).unwrap().t_sat;
        let r = run(&inst, &fig2(), 0);
        assert!(r.q_w.abs() <= 1e-6, "Q={}", r.q_w);
    }

    #[test]
    fn equal_split() {
        let inst = HexInstance::reference(4).unwrap();
        let r = run(&inst, &fig2(), 0);
        assert_eq!(r.per_circuit.len(), 2);
        for c in &r.per_circuit {
            assert_relative_eq!(c.mass_flow_kg_s, 0.01);
        }
        assert_relative_eq!(r.q_w, r.per_circuit.iter().map(|c| c.q_w).sum::<f64>());
    }

    #[test]
    fn reference_band_and_balance() {
        let inst = HexInstance::reference(4).unwrap();
        let r = run(&inst, &fig2(), 0);
        assert!((1500.0..=6000.0).contains(&r.q_w), "Q={}", r.q_w);
        assert!(r.energy_imbalance() <= 1e-3, "imbalance={}", r.energy_imbalance());
        assert!(r.delta_p_kpa > 0.0);
    }

    #[test]
    fn orientations_nearly_equal() {
        let inst = HexInstance::reference(4).unwrap();
        let qs: Vec<f64> = (0..4).map(|o| run(&inst, &fig2(), o).q_w).collect();
        let max = qs.iter().cloned().fold(f64::MIN, f64::max);
        let min = qs.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - min) / max <= 0.02, "{qs:?}");
    }

    #[test]
    fn quality_never_drops() {
        let inst = HexInstance::reference(4).unwrap();
        let cfg = SimulatorConfig { record_segments: true, ..Default::default() };
        let design = decode(&fig2()).unwrap().orientation(0).unwrap();
        let r = simulate(&design, &inst, &cfg, &PropertyTable::embedded()).unwrap();
        let segs = r.segments.unwrap();
        for c in 0..2 {
            let hs: Vec<f64> = segs.iter().filter(|s| s.circuit == c).map(|s| s.refrigerant_enthalpy_out).collect();
            assert!(hs.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn merging_circuits_raises_pressure_drop() {
        let inst = HexInstance::reference(4).unwrap();
        let split = run(&inst, &fig2(), 0);
        // Join the two circuits at tubes 8 and 5.
        let mut joined = fig2();
        joined.set_pair(5, 8, true);
        let merged = run(&inst, &joined, 0);
        assert!(merged.delta_p_kpa > split.delta_p_kpa);
    }

    #[test]
    fn deterministic() {
        let inst = HexInstance::reference(4).unwrap();
        assert_eq!(run(&inst, &fig2(), 1), run(&inst, &fig2(), 1));
    }

    #[test]
    fn non_convergence_reported() {
        let inst = HexInstance::reference(4).unwrap();
        let cfg = SimulatorConfig { max_iterations: 1, tolerance_k: 1e-12, ..Default::default() };
        let design = decode(&fig2()).unwrap().orientation(0).unwrap();
        match simulate(&design, &inst, &cfg, &PropertyTable::embedded()) {
            Err(Error::NotConverged { iterations: 1, trace, .. }) => assert_eq!(trace.len(), 1),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn pressure_out_of_table() {
        let mut inst = HexInstance::reference(2).unwrap();
        inst.refrigerant_pressure_kpa = 50.0;
        let design = decode(&base_vector(inst.layout)).unwrap().orientation(0).unwrap();
        let err = simulate(&design, &inst, &SimulatorConfig::default(), &PropertyTable::embedded());
        assert!(matches!(err, Err(Error::Domain(_))));
    }
}
