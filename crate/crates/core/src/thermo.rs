//! R134a saturation properties and dry-air properties.
//!
//! Refrigerant properties come from a static saturation table, linearly
//! interpolated in pressure. The table ships with the crate and can be
//! replaced by any file in the same comma-separated format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EMBEDDED_TABLE: &str = include_str!("../data/r134a_saturation_v1.csv");

/// One saturation state. Pressure in kPa, temperature in °C, enthalpy in
/// kJ/kg, density in kg/m³, viscosity in Pa·s, vapour cp in kJ/(kg·K),
/// vapour conductivity in W/(m·K).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationRow {
    #[serde(rename = "pressure_kPa")]
    pub pressure: f64,
    #[serde(rename = "t_sat_C")]
    pub t_sat: f64,
    #[serde(rename = "h_f_kJ_per_kg")]
    pub h_f: f64,
    #[serde(rename = "h_g_kJ_per_kg")]
    pub h_g: f64,
    #[serde(rename = "rho_f_kg_per_m3")]
    pub rho_f: f64,
    #[serde(rename = "rho_g_kg_per_m3")]
    pub rho_g: f64,
    #[serde(rename = "mu_f_Pa_s")]
    pub mu_f: f64,
    #[serde(rename = "mu_g_Pa_s")]
    pub mu_g: f64,
    #[serde(rename = "cp_g_kJ_per_kg_K")]
    pub cp_g: f64,
    #[serde(rename = "k_g_W_per_m_K")]
    pub k_g: f64,
}

impl SaturationRow {
    pub fn h_fg(&self) -> f64 {
        self.h_g - self.h_f
    }

    fn lerp(&self, other: &SaturationRow, w: f64) -> SaturationRow {
        let mix = |a: f64, b: f64| a + w * (b - a);
        SaturationRow {
            pressure: mix(self.pressure, other.pressure),
            t_sat: mix(self.t_sat, other.t_sat),
            h_f: mix(self.h_f, other.h_f),
            h_g: mix(self.h_g, other.h_g),
            rho_f: mix(self.rho_f, other.rho_f),
            rho_g: mix(self.rho_g, other.rho_g),
            mu_f: mix(self.mu_f, other.mu_f),
            mu_g: mix(self.mu_g, other.mu_g),
            cp_g: mix(self.cp_g, other.cp_g),
            k_g: mix(self.k_g, other.k_g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Phase {
    TwoPhase { quality: f64 },
    Superheated { superheat: f64 },
}

/// Refrigerant state at pressure `p` [kPa] with enthalpy [kJ/kg] and temperature [°C].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefrigerantState {
    pub pressure: f64,
    pub enthalpy: f64,
    pub temperature: f64,
    pub phase: Phase,
}

impl RefrigerantState {
    /// Vapour mass fraction, clamped to 1 once superheated.
    pub fn quality(&self) -> f64 {
        match self.phase {
            Phase::TwoPhase { quality } => quality,
            Phase::Superheated { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyTable {
    rows: Vec<SaturationRow>,
}

impl PropertyTable {
    /// The table bundled with the crate (100–1000 kPa).
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_TABLE).expect("embedded table is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    /// Parses the comma-separated format. Lines starting with `#` are comments;
    /// the first other line is the header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<SaturationRow>, _>>()?;
        Self::from_rows(rows)
    }

    pub fn from_rows(rows: Vec<SaturationRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Config("property table needs at least two rows".into()));
        }
        for (n, r) in rows.iter().enumerate() {
            if r.h_g <= r.h_f || r.rho_f <= r.rho_g {
                return Err(Error::Config(format!(
                    "row {n} (p={}) violates h_g > h_f or rho_f > rho_g",
                    r.pressure
                )));
            }
            let positive = [r.rho_g, r.mu_f, r.mu_g, r.cp_g, r.k_g, r.pressure];
            if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Config(format!("row {n} has a non-positive property")));
            }
        }
        if rows.windows(2).any(|w| w[1].pressure <= w[0].pressure) {
            return Err(Error::Config(
                "pressures must be strictly increasing".into(),
            ));
        }
        Ok(PropertyTable { rows })
    }

    pub fn rows(&self) -> &[SaturationRow] {
        &self.rows
    }

    pub fn pressure_range(&self) -> (f64, f64) {
        (self.rows[0].pressure, self.rows[self.rows.len() - 1].pressure)
    }

    /// Saturation properties at `p` kPa.
    pub fn sat_props(&self, p: f64) -> Result<SaturationRow> {
        let (lo, hi) = self.pressure_range();
        if !(lo..=hi).contains(&p) {
            return Err(Error::domain(format!(
                "pressure {p} kPa outside table range [{lo}, {hi}]"
            )));
        }
        let upper = self.rows.partition_point(|r| r.pressure < p);
        if upper == 0 || self.rows[upper].pressure == p {
            return Ok(self.rows[upper]);
        }
        let (a, b) = (&self.rows[upper - 1], &self.rows[upper]);
        Ok(a.lerp(b, (p - a.pressure) / (b.pressure - a.pressure)))
    }

    pub fn enthalpy_at(&self, p: f64, quality: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&quality) {
            return Err(Error::domain(format!("quality {quality} outside [0, 1]")));
        }
        let s = self.sat_props(p)?;
        Ok(s.h_f + quality * s.h_fg())
    }

    /// Inverse of [`PropertyTable::enthalpy_at`]. Values above 1 indicate superheat.
    pub fn quality_at(&self, p: f64, h: f64) -> Result<f64> {
        let s = self.sat_props(p)?;
        Ok((h - s.h_f) / s.h_fg())
    }

    /// State from pressure and enthalpy. Superheated vapour uses the
    /// saturated-vapour cp. Subcooled liquid is outside the model.
    pub fn state(&self, p: f64, h: f64) -> Result<RefrigerantState> {
        let s = self.sat_props(p)?;
        if h < s.h_f {
            return Err(Error::domain(format!(
                "enthalpy {h} kJ/kg is subcooled at {p} kPa"
            )));
        }
        let (temperature, phase) = if h <= s.h_g {
            (s.t_sat, Phase::TwoPhase { quality: (h - s.h_f) / s.h_fg() })
        } else {
            let superheat = (h - s.h_g) / s.cp_g;
            (s.t_sat + superheat, Phase::Superheated { superheat })
        };
        Ok(RefrigerantState {
            pressure: p,
            enthalpy: h,
            temperature,
            phase,
        })
    }
}

impl Default for PropertyTable {
    fn default() -> Self {
        Self::embedded()
    }
}

/// Dry air as an ideal gas.
pub mod air {
    /// Specific heat, kJ/(kg·K).
    pub const CP: f64 = 1.006;
    /// Gas constant, kJ/(kg·K).
    pub const GAS_CONSTANT: f64 = 0.287;
    pub const PRANDTL: f64 = 0.71;

    /// Density in kg/m³ at `p` kPa and `t` °C.
    pub fn density(p: f64, t: f64) -> f64 {
        p / (GAS_CONSTANT * (t + 273.15))
    }
}
