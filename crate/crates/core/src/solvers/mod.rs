//! Derivative-free optimizers over the binary circuitry space.
//!
//! All solvers maximize. A "function evaluation" is a simulator call: cache
//! hits and vectors rejected by [`validate`](crate::circuitry::validate) before
//! simulation are counted separately and never consume budget.

mod direct;
mod evolutionary;
mod local;
pub mod moves;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::circuitry::{far_end_edges, pair_index, CircuitryVector, FeasibilityReport, HexLayout, VectorIndex};
use crate::error::{Error, Result};
use crate::simulator::{Evaluation, Evaluator, Lookup};

pub use direct::{solve_direct, solve_direct_with, DirectOptions};
pub use evolutionary::{solve_evolutionary, solve_evolutionary_with, EvolutionOptions};
pub use local::{solve_localsearch, solve_localsearch_with, LocalSearchOptions};

/// Weight and threshold of the quadratic shortfall penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    pub lambda: f64,
    /// Required heat duty, W.
    pub q_lim: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            lambda: 1e6,
            q_lim: 3900.0,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !self.q_lim.is_finite() {
            return Err(Error::Config("q_lim must be finite".into()));
        }
        Ok(())
    }
}

/// `raw − λ·max(0, Q_lim − Q)²`.
///
/// ```
/// use hexcircuit::solvers::{penalized, PenaltyConfig};
/// let cfg = PenaltyConfig::default();
/// assert_eq!(penalized(500.0, 4000.0, &cfg), 500.0);
/// assert_eq!(penalized(500.0, 3800.0, &cfg), 500.0 - 1e6 * 100.0 * 100.0);
/// ```
pub fn penalized(raw: f64, q_w: f64, cfg: &PenaltyConfig) -> f64 {
    let shortfall = (cfg.q_lim - q_w).max(0.0);
    raw - cfg.lambda * shortfall * shortfall
}

/// What the solvers maximize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Heat duty `Q` in W.
    HeatCapacity,
    /// `Q/ΔP` in W/kPa, penalized when `Q < Q_lim`.
    RatioWithLimit(PenaltyConfig),
}

impl Objective {
    pub fn ratio() -> Self {
        Objective::RatioWithLimit(PenaltyConfig::default())
    }

    /// Short label used on the command line and in tables.
    pub fn label(&self) -> &'static str {
        match self {
            Objective::HeatCapacity => "q",
            Objective::RatioWithLimit(_) => "ratio",
        }
    }

    pub fn value(&self, eval: &Evaluation) -> f64 {
        match self {
            Objective::HeatCapacity => eval.q_w,
            Objective::RatioWithLimit(cfg) => penalized(eval.ratio(), eval.q_w, cfg),
        }
    }

    /// `None` for the unconstrained objective.
    pub fn satisfied(&self, eval: &Evaluation) -> Option<bool> {
        match self {
            Objective::HeatCapacity => None,
            Objective::RatioWithLimit(cfg) => Some(eval.q_w >= cfg.q_lim),
        }
    }
}

/// A circuitry instance plus the objective, evaluated through a shared
/// memoizing [`Evaluator`].
#[derive(Clone)]
pub struct Problem {
    pub evaluator: Arc<Evaluator>,
    pub objective: Objective,
    free_indices: Vec<VectorIndex>,
}

impl Problem {
    pub fn new(evaluator: Arc<Evaluator>, objective: Objective) -> Result<Self> {
        evaluator.instance().validate()?;
        evaluator.config().validate()?;
        if let Objective::RatioWithLimit(cfg) = &objective {
            cfg.validate()?;
        }
        let layout = evaluator.instance().layout;
        let fixed: Vec<VectorIndex> = far_end_edges(layout)
            .iter()
            .map(|e| pair_index(e.i, e.j, layout))
            .collect::<Result<_>>()?;
        let free_indices = (1..=layout.vector_len()).filter(|k| !fixed.contains(k)).collect();
        Ok(Problem {
            evaluator,
            objective,
            free_indices,
        })
    }

    pub fn layout(&self) -> HexLayout {
        self.evaluator.instance().layout
    }

    /// Vector indices not pinned by the far-end bends, ascending.
    pub fn free_indices(&self) -> &[VectorIndex] {
        &self.free_indices
    }
}

/// Per-run limits. Simulator calls are the unit of cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub max_simulator_calls: usize,
    pub max_wall_seconds: f64,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_simulator_calls: 2500,
            max_wall_seconds: 86400.0,
            seed: 1,
        }
    }
}

impl Budget {
    pub fn validate(&self) -> Result<()> {
        if self.max_simulator_calls == 0 || !(self.max_wall_seconds > 0.0) {
            return Err(Error::Config("budget limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Direct,
    Evo,
    Local,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Direct, SolverKind::Evo, SolverKind::Local];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Direct => "direct",
            SolverKind::Evo => "evo",
            SolverKind::Local => "local",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(SolverKind::Direct),
            "evo" => Ok(SolverKind::Evo),
            "local" => Ok(SolverKind::Local),
            _ => Err(Error::parse(format!("unknown solver {s:?}, expected direct|evo|local"))),
        }
    }
}

/// Tunables for all three solvers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub direct: DirectOptions,
    pub evolutionary: EvolutionOptions,
    pub local: LocalSearchOptions,
}

/// Runs the chosen solver.
pub fn solve(kind: SolverKind, problem: &Problem, budget: &Budget, options: &SolverOptions) -> Result<SolverReport> {
    match kind {
        SolverKind::Direct => solve_direct_with(problem, budget, &options.direct),
        SolverKind::Evo => solve_evolutionary_with(problem, budget, &options.evolutionary),
        SolverKind::Local => solve_localsearch_with(problem, budget, &options.local),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The next evaluation would have exceeded the simulator-call budget.
    CallBudget,
    WallTime,
    /// The solver ran out of new points to try.
    Exhausted,
    /// A solver-specific iteration or stall limit.
    IterationLimit,
}

/// One point where the incumbent improved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Simulator calls used when the improvement was found.
    pub call: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solver: SolverKind,
    pub objective: String,
    pub tubes: usize,
    /// `None` when no feasible design was evaluated.
    pub best_vector: Option<String>,
    pub best_design: Option<String>,
    pub best_value: Option<f64>,
    pub best_q_w: Option<f64>,
    pub best_dp_kpa: Option<f64>,
    /// `Q ≥ Q_lim` at the incumbent, for the ratio objective.
    pub constraint_satisfied: Option<bool>,
    pub simulator_calls: usize,
    /// Candidates generated, including infeasible rejects and cache hits.
    pub generated: usize,
    pub infeasible_rejects: usize,
    pub cache_hits: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub termination: Termination,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl SolverReport {
    pub fn solved(&self) -> bool {
        self.best_value.is_some()
    }

    /// Equality ignoring wall time, which is the only nondeterministic field.
    pub fn same_outcome(&self, other: &SolverReport) -> bool {
        let mut a = self.clone();
        a.wall_seconds = other.wall_seconds;
        &a == other
    }
}

/// How one candidate fared.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Scored {
    Infeasible(FeasibilityReport),
    Value(f64),
    /// The run is over; stop generating.
    Stop,
}

/// Shared bookkeeping for a run: budget checks, incumbent and trajectory.
pub(crate) struct Tracker<'a> {
    problem: &'a Problem,
    budget: Budget,
    start: Instant,
    limit: Duration,
    calls: usize,
    generated: usize,
    infeasible: usize,
    hits: usize,
    best: Option<(f64, CircuitryVector, Evaluation)>,
    trajectory: Vec<TrajectoryPoint>,
    stopped: Option<Termination>,
    pub restarts: usize,
    pub iterations: usize,
}

impl<'a> Tracker<'a> {
    pub fn new(problem: &'a Problem, budget: &Budget) -> Result<Self> {
        budget.validate()?;
        Ok(Tracker {
            problem,
            budget: *budget,
            start: Instant::now(),
            limit: Duration::from_secs_f64(budget.max_wall_seconds.min(1e9)),
            calls: 0,
            generated: 0,
            infeasible: 0,
            hits: 0,
            best: None,
            trajectory: Vec::new(),
            stopped: None,
            restarts: 0,
            iterations: 0,
        })
    }

    pub fn calls(&self) -> usize {
        self.calls
    }

    pub fn stopped(&self) -> bool {
        if self.stopped.is_some() {
            return true;
        }
        self.start.elapsed() >= self.limit
    }

    pub fn stop(&mut self, why: Termination) {
        self.stopped.get_or_insert(why);
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.0)
    }

    /// Scores `x` in its first orientation.
    pub fn score(&mut self, x: &CircuitryVector) -> Result<Scored> {
        if self.stopped.is_some() {
            return Ok(Scored::Stop);
        }
        if self.start.elapsed() >= self.limit {
            self.stop(Termination::WallTime);
            return Ok(Scored::Stop);
        }
        let may_simulate = self.calls < self.budget.max_simulator_calls;
        let eval = match self.problem.evaluator.lookup(x, 0, may_simulate)? {
            Lookup::Infeasible(r) => {
                self.generated += 1;
                self.infeasible += 1;
                return Ok(Scored::Infeasible(r));
            }
            Lookup::Refused => {
                self.stop(Termination::CallBudget);
                return Ok(Scored::Stop);
            }
            Lookup::Cached(e) => {
                self.hits += 1;
                e
            }
            Lookup::Simulated(e) => {
                self.calls += 1;
                e
            }
        };
        self.generated += 1;
        let value = self.problem.objective.value(&eval);
        if self.best.as_ref().map_or(true, |b| value > b.0) {
            self.best = Some((value, x.clone(), eval));
            self.trajectory.push(TrajectoryPoint {
                call: self.calls,
                value,
            });
        }
        Ok(Scored::Value(value))
    }

    pub fn finish(self, solver: SolverKind, default_reason: Termination) -> Result<SolverReport> {
        let termination = self.stopped.unwrap_or(default_reason);
        let objective = self.problem.objective;
        let (best_vector, best_design, best_value, best_q_w, best_dp_kpa, constraint_satisfied) =
            match &self.best {
                None => (None, None, None, None, None, None),
                Some((v, x, e)) => {
                    let design = crate::circuitry::decode(x)?.orientation(0)?;
                    (
                        Some(x.to_string()),
                        Some(design.key()),
                        Some(*v),
                        Some(e.q_w),
                        Some(e.dp_kpa),
                        objective.satisfied(e),
                    )
                }
            };
        Ok(SolverReport {
            solver,
            objective: objective.label().to_string(),
            tubes: self.problem.layout().tubes(),
            best_vector,
            best_design,
            best_value,
            best_q_w,
            best_dp_kpa,
            constraint_satisfied,
            simulator_calls: self.calls,
            generated: self.generated,
            infeasible_rejects: self.infeasible,
            cache_hits: self.hits,
            restarts: self.restarts,
            iterations: self.iterations,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            termination,
            trajectory: self.trajectory,
        })
    }
}
