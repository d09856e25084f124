use serde::{Deserialize, Serialize};

use crate::circuitry::HexLayout;
use crate::error::{Error, Result};

/// Coil geometry and operating point. Lengths in mm, pressures in kPa,
/// temperatures in °C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HexInstance {
    #[serde(rename = "tubes_per_row", with = "layout_as_count")]
    pub layout: HexLayout,
    pub tube_length_mm: f64,
    pub tube_inner_diameter_mm: f64,
    pub tube_outer_diameter_mm: f64,
    pub tube_thickness_mm: f64,
    /// Row-to-row pitch, along the air flow.
    pub tube_horizontal_spacing_mm: f64,
    /// Tube-to-tube pitch within a row.
    pub tube_vertical_spacing_mm: f64,
    pub fin_spacing_mm: f64,
    pub fin_thickness_mm: f64,
    pub fins_per_inch: f64,
    pub refrigerant_pressure_kpa: f64,
    /// Listed with the operating point but unused: the saturation state is
    /// taken from the pressure.
    pub refrigerant_temperature_c: f64,
    pub refrigerant_inlet_quality: f64,
    pub refrigerant_mass_flow_kg_s: f64,
    pub air_inlet_temperature_c: f64,
    pub air_inlet_pressure_kpa: f64,
    pub air_flow_m3_s: f64,
}

mod layout_as_count {
    use super::*;

    pub fn serialize<S: serde::Serializer>(l: &HexLayout, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(l.tubes_per_row() as u64)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<HexLayout, D::Error> {
        let n = usize::deserialize(d)?;
        HexLayout::two_row(n).map_err(serde::de::Error::custom)
    }
}

impl HexInstance {
    /// The reference coil and operating point with `tubes_per_row` tubes in
    /// each of the two rows.
    pub fn reference(tubes_per_row: usize) -> Result<Self> {
        Ok(HexInstance {
            layout: HexLayout::two_row(tubes_per_row)?,
            tube_length_mm: 1143.0,
            tube_inner_diameter_mm: 9.40,
            tube_outer_diameter_mm: 10.06,
            tube_thickness_mm: 0.33,
            tube_horizontal_spacing_mm: 19.05,
            tube_vertical_spacing_mm: 25.40,
            fin_spacing_mm: 1.17,
            fin_thickness_mm: 0.10,
            fins_per_inch: 20.0,
            refrigerant_pressure_kpa: 350.0,
            refrigerant_temperature_c: 7.0,
            refrigerant_inlet_quality: 0.15,
            refrigerant_mass_flow_kg_s: 0.02,
            air_inlet_temperature_c: 24.0,
            air_inlet_pressure_kpa: 101.325,
            air_flow_m3_s: 2.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tube_length_mm", self.tube_length_mm),
            ("tube_inner_diameter_mm", self.tube_inner_diameter_mm),
            ("tube_outer_diameter_mm", self.tube_outer_diameter_mm),
            ("tube_thickness_mm", self.tube_thickness_mm),
            ("tube_horizontal_spacing_mm", self.tube_horizontal_spacing_mm),
            ("tube_vertical_spacing_mm", self.tube_vertical_spacing_mm),
            ("fin_spacing_mm", self.fin_spacing_mm),
            ("fin_thickness_mm", self.fin_thickness_mm),
            ("fins_per_inch", self.fins_per_inch),
            ("refrigerant_pressure_kpa", self.refrigerant_pressure_kpa),
            ("refrigerant_mass_flow_kg_s", self.refrigerant_mass_flow_kg_s),
            ("air_inlet_pressure_kpa", self.air_inlet_pressure_kpa),
            ("air_flow_m3_s", self.air_flow_m3_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.refrigerant_inlet_quality) {
            return Err(Error::Config(format!(
                "refrigerant_inlet_quality must be in [0, 1], got {}",
                self.refrigerant_inlet_quality
            )));
        }
        if self.tube_outer_diameter_mm <= self.tube_inner_diameter_mm
            || self.tube_outer_diameter_mm >= self.tube_vertical_spacing_mm
        {
            return Err(Error::Config(
                "need inner diameter < outer diameter < vertical spacing".into(),
            ));
        }
        if self.fin_thickness_mm >= 25.4 / self.fins_per_inch {
            return Err(Error::Config("fins thicker than the fin pitch".into()));
        }
        Ok(())
    }
}

/// Model constants. Everything here is a tunable stand-in, not a fitted value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    pub segments_per_tube: usize,
    /// Refrigerant-side coefficient while two-phase, W/(m²·K).
    pub two_phase_htc: f64,
    /// Colburn j-factor of the fin surface.
    pub air_j_factor: f64,
    pub fin_efficiency: f64,
    pub dittus_boelter_coefficient: f64,
    /// `f = friction_coefficient · Re^(-friction_exponent)`.
    pub friction_coefficient: f64,
    pub friction_exponent: f64,
    /// Velocity heads lost per tube-to-tube bend.
    pub bend_loss_coefficient: f64,
    pub relaxation: f64,
    /// Air-temperature convergence tolerance, K.
    pub tolerance_k: f64,
    pub max_iterations: usize,
    /// Keep per-segment detail in results.
    pub record_segments: bool,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig {
            segments_per_tube: 10,
            two_phase_htc: 2500.0,
            air_j_factor: 0.010,
            fin_efficiency: 0.85,
            dittus_boelter_coefficient: 0.023,
            friction_coefficient: 0.046,
            friction_exponent: 0.2,
            bend_loss_coefficient: 1.5,
            relaxation: 0.7,
            tolerance_k: 1e-4,
            max_iterations: 100,
            record_segments: false,
        }
    }
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("two_phase_htc", self.two_phase_htc),
            ("air_j_factor", self.air_j_factor),
            ("fin_efficiency", self.fin_efficiency),
            ("dittus_boelter_coefficient", self.dittus_boelter_coefficient),
            ("friction_coefficient", self.friction_coefficient),
            ("friction_exponent", self.friction_exponent),
            ("bend_loss_coefficient", self.bend_loss_coefficient),
            ("relaxation", self.relaxation),
            ("tolerance_k", self.tolerance_k),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.segments_per_tube == 0 || self.max_iterations == 0 {
            return Err(Error::Config(
                "segments_per_tube and max_iterations must be positive".into(),
            ));
        }
        if self.tolerance_k >= 0.1 {
            return Err(Error::Config("tolerance_k must be below 0.1 K".into()));
        }
        if self.fin_efficiency > 1.0 || self.relaxation > 1.0 {
            return Err(Error::Config(
                "fin_efficiency and relaxation must not exceed 1".into(),
            ));
        }
        Ok(())
    }
}
