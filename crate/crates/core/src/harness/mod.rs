//! Experiment runner: enumeration studies, solver comparisons and oracle
//! checks, with CSV tables, JSON-lines evaluation logs and a run manifest.

mod compare;
mod study;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuitry::MAX_TUBES_PER_ROW;
use crate::error::{Error, Result};
use crate::simulator::{HexInstance, SimulatorConfig};
use crate::solvers::{Budget, Objective, PenaltyConfig, SolverKind, SolverOptions};
use crate::thermo::PropertyTable;

pub use compare::{
    geometric_mean, read_comparison_csv, relative_gap, run_solver_comparison, verify_against_oracle,
    write_comparison_csv, ComparisonRow, ComparisonTable, Dashed, OracleVerdict, SolverVerdict,
    COMPARISON_FOOTNOTE,
};
pub use study::{
    histogram, read_enumeration_csv, run_enumeration_study, EnumerationRow, EnumerationStudy, HistogramBin,
};

/// The reference instance with `tubes_per_row` tubes in each of two rows.
pub fn make_instance(tubes_per_row: usize) -> Result<HexInstance> {
    if !(1..=MAX_TUBES_PER_ROW).contains(&tubes_per_row) {
        return Err(Error::Config(format!(
            "tubes per row must be in 1..={MAX_TUBES_PER_ROW}, got {tubes_per_row}"
        )));
    }
    HexInstance::reference(tubes_per_row)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Q,
    Ratio,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 2] = [ObjectiveKind::Q, ObjectiveKind::Ratio];

    pub fn objective(self, penalty: &PenaltyConfig) -> Objective {
        match self {
            ObjectiveKind::Q => Objective::HeatCapacity,
            ObjectiveKind::Ratio => Objective::RatioWithLimit(*penalty),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Q => "q",
            ObjectiveKind::Ratio => "ratio",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q" => Ok(ObjectiveKind::Q),
            "ratio" => Ok(ObjectiveKind::Ratio),
            _ => Err(Error::parse(format!("unknown objective {s:?}, expected q|ratio"))),
        }
    }
}

/// Knobs of the enumeration study and the oracle checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyOptions {
    pub histogram_bins: usize,
    /// Largest relative gap to the enumerated optimum that still passes.
    pub gap_threshold: f64,
    /// Comparison rows for instances up to this many tubes get the enumerated
    /// optimum and the gap to it.
    pub oracle_max_tubes: usize,
    /// Write a JSON-lines evaluation log per run.
    pub write_logs: bool,
    /// Allow enumerating above the default tube cap.
    pub override_enum_cap: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            histogram_bins: 25,
            gap_threshold: 0.01,
            oracle_max_tubes: 8,
            write_logs: true,
            override_enum_cap: false,
        }
    }
}

/// Everything a run needs. Also the layout of the config file: top-level
/// keys for the experiment matrix, plus `[budget]`, `[instance]` (overrides
/// of the reference coil, applied to every size), `[simulator]`, `[penalty]`,
/// `[solver.direct]`, `[solver.evolutionary]`, `[solver.local]` and `[study]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub tubes_per_row: Vec<usize>,
    pub objectives: Vec<ObjectiveKind>,
    pub solvers: Vec<SolverKind>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Saturation table to use instead of the embedded one.
    pub properties: Option<PathBuf>,
    /// Reuse finished reports and partial logs found in `out_dir`.
    pub resume: bool,
    pub budget: Budget,
    pub instance: toml::Table,
    pub simulator: SimulatorConfig,
    pub penalty: PenaltyConfig,
    pub solver: SolverOptions,
    pub study: StudyOptions,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            tubes_per_row: (2..=MAX_TUBES_PER_ROW).collect(),
            objectives: ObjectiveKind::ALL.to_vec(),
            solvers: SolverKind::ALL.to_vec(),
            seeds: vec![1],
            out_dir: PathBuf::from("results"),
            properties: None,
            resume: false,
            budget: Budget::default(),
            instance: toml::Table::new(),
            simulator: SimulatorConfig::default(),
            penalty: PenaltyConfig::default(),
            solver: SolverOptions::default(),
            study: StudyOptions::default(),
        }
    }
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.tubes_per_row.is_empty() || self.solvers.is_empty() || self.objectives.is_empty() {
            return Err(Error::Config("plan needs instances, solvers and objectives".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("plan needs at least one seed".into()));
        }
        for &n in &self.tubes_per_row {
            self.instance_for(n)?;
        }
        self.budget.validate()?;
        self.simulator.validate()?;
        self.penalty.validate()?;
        if self.study.histogram_bins == 0 {
            return Err(Error::Config("histogram_bins must be positive".into()));
        }
        Ok(())
    }

    /// The reference instance for this size with the `[instance]` overrides.
    pub fn instance_for(&self, tubes_per_row: usize) -> Result<HexInstance> {
        let base = make_instance(tubes_per_row)?;
        if self.instance.is_empty() {
            return Ok(base);
        }
        if self.instance.contains_key("tubes_per_row") {
            return Err(Error::Config(
                "set the size with tubes_per_row at the top level, not in [instance]".into(),
            ));
        }
        let mut table = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in &self.instance {
            table.insert(k.clone(), v.clone());
        }
        let inst: HexInstance = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn property_table(&self) -> Result<Arc<PropertyTable>> {
        Ok(Arc::new(match &self.properties {
            Some(p) => PropertyTable::from_path(p)?,
            None => PropertyTable::embedded(),
        }))
    }

    /// SHA-256 of the plan as TOML, ignoring where the output goes.
    pub fn config_hash(&self) -> Result<String> {
        let mut p = self.clone();
        p.out_dir = PathBuf::new();
        p.resume = false;
        Ok(hex::encode(Sha256::digest(p.to_toml()?.as_bytes())))
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Plain-text record of what produced a result directory.
pub fn write_manifest(plan: &ExperimentPlan, command: &str) -> Result<PathBuf> {
    let props = plan.property_table()?;
    let mut text = String::new();
    text.push_str(&format!("tool = hexcircuit {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("command = {command}\n"));
    text.push_str(&format!("config_sha256 = {}\n", plan.config_hash()?));
    text.push_str(&format!(
        "properties = {}\n",
        plan.properties.as_ref().map_or("embedded".to_string(), |p| p.display().to_string())
    ));
    text.push_str(&format!(
        "properties_sha256 = {}\n",
        hex::encode(Sha256::digest(format!("{:?}", props.rows()).as_bytes()))
    ));
    let seeds: Vec<String> = plan.seeds.iter().map(|s| s.to_string()).collect();
    text.push_str(&format!("seeds = {}\n", seeds.join(",")));
    text.push_str(&format!("threads = {}\n", rayon::current_num_threads()));
    text.push_str("\n[config]\n");
    text.push_str(&plan.to_toml()?);
    let path = plan.out_dir.join("manifest.txt");
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
