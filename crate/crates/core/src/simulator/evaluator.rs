use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::circuitry::{decode, validate, CircuitryDesign, CircuitryVector, FeasibilityReport};
use crate::error::Result;
use crate::thermo::PropertyTable;

use super::instance::{HexInstance, SimulatorConfig};
use super::model::simulate;

/// Pressure drop used in place of anything smaller when forming `Q/ΔP`.
pub const DP_FLOOR_KPA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub q_w: f64,
    pub dp_kpa: f64,
}

impl Evaluation {
    /// `Q / ΔP` in W/kPa.
    pub fn ratio(&self) -> f64 {
        self.q_w / self.dp_kpa.max(DP_FLOOR_KPA)
    }
}

/// Result of an objective call on a vector that may break the circuitry rules.
/// Infeasible vectors are never simulated.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    Infeasible(FeasibilityReport),
    Feasible(T),
}

impl<T> Outcome<T> {
    pub fn feasible(self) -> Option<T> {
        match self {
            Outcome::Feasible(v) => Some(v),
            Outcome::Infeasible(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioOutcome {
    pub ratio: f64,
    pub q_w: f64,
    pub dp_kpa: f64,
    /// `Q ≥ Q_lim`.
    pub satisfies_limit: bool,
}

impl RatioOutcome {
    pub fn new(eval: Evaluation, q_lim: f64) -> Self {
        RatioOutcome {
            ratio: eval.ratio(),
            q_w: eval.q_w,
            dp_kpa: eval.dp_kpa,
            satisfies_limit: eval.q_w >= q_lim,
        }
    }
}

fn canonical(x: &CircuitryVector, orientation: u64) -> Result<Outcome<CircuitryDesign>> {
    let report = validate(x);
    if !report.is_feasible() {
        return Ok(Outcome::Infeasible(report));
    }
    Ok(Outcome::Feasible(decode(x)?.orientation(orientation)?))
}

/// Heat duty of `x` run in its first orientation, without caching.
pub fn evaluate_q(
    x: &CircuitryVector,
    instance: &HexInstance,
    config: &SimulatorConfig,
    props: &PropertyTable,
) -> Result<Outcome<f64>> {
    Ok(match canonical(x, 0)? {
        Outcome::Infeasible(r) => Outcome::Infeasible(r),
        Outcome::Feasible(d) => Outcome::Feasible(simulate(&d, instance, config, props)?.q_w),
    })
}

/// `Q/ΔP` of `x` run in its first orientation, without caching.
pub fn evaluate_ratio(
    x: &CircuitryVector,
    instance: &HexInstance,
    config: &SimulatorConfig,
    props: &PropertyTable,
    q_lim: f64,
) -> Result<Outcome<RatioOutcome>> {
    Ok(match canonical(x, 0)? {
        Outcome::Infeasible(r) => Outcome::Infeasible(r),
        Outcome::Feasible(d) => {
            let r = simulate(&d, instance, config, props)?;
            Outcome::Feasible(RatioOutcome::new(
                Evaluation { q_w: r.q_w, dp_kpa: r.delta_p_kpa },
                q_lim,
            ))
        }
    })
}

/// One line of the evaluation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalLogRecord {
    pub vector: String,
    pub orientation: u64,
    #[serde(rename = "Q_W")]
    pub q_w: f64,
    #[serde(rename = "dP_kPa")]
    pub dp_kpa: f64,
    pub wall_ms: f64,
    pub cache_hit: bool,
}

/// How [`Evaluator::lookup`] answered.
#[derive(Debug, Clone, PartialEq)]
pub enum Lookup {
    Infeasible(FeasibilityReport),
    Cached(Evaluation),
    Simulated(Evaluation),
    /// Not cached and the caller did not allow a simulation.
    Refused,
}

/// Memoizing, logging wrapper around [`simulate`].
///
/// Safe to share between threads. The cache is keyed by the directed design,
/// and only cache misses count as simulator calls; if two threads race on the
/// same key, the one that inserts second is logged as a cache hit.
pub struct Evaluator {
    instance: HexInstance,
    config: SimulatorConfig,
    props: Arc<PropertyTable>,
    cache: Mutex<HashMap<String, Evaluation>>,
    prepaid: Mutex<HashMap<String, Evaluation>>,
    calls: AtomicUsize,
    hits: AtomicUsize,
    log: Mutex<Vec<EvalLogRecord>>,
    sink: Option<Mutex<Box<dyn Write + Send>>>,
}

impl Evaluator {
    pub fn new(instance: HexInstance, config: SimulatorConfig, props: Arc<PropertyTable>) -> Self {
        Evaluator {
            instance,
            config,
            props,
            cache: Mutex::new(HashMap::new()),
            prepaid: Mutex::new(HashMap::new()),
            calls: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
            sink: None,
        }
    }

    /// Also stream every log record as a JSON line to `sink`.
    pub fn with_log_sink(mut self, sink: impl Write + Send + 'static) -> Self {
        self.sink = Some(Mutex::new(Box::new(sink)));
        self
    }

    pub fn instance(&self) -> &HexInstance {
        &self.instance
    }

    pub fn config(&self) -> &SimulatorConfig {
        &self.config
    }

    pub fn props(&self) -> &PropertyTable {
        &self.props
    }

    /// Simulations actually run.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn log_records(&self) -> Vec<EvalLogRecord> {
        self.log.lock().expect("log lock").clone()
    }

    /// Evaluates `x` in the given orientation, simulating on a cache miss only
    /// when `may_simulate` is set.
    pub fn lookup(&self, x: &CircuitryVector, orientation: u64, may_simulate: bool) -> Result<Lookup> {
        let start = Instant::now();
        let design = match canonical(x, orientation)? {
            Outcome::Infeasible(r) => return Ok(Lookup::Infeasible(r)),
            Outcome::Feasible(d) => d,
        };
        let key = design.key();
        let cached = self.cache.lock().expect("cache lock").get(&key).copied();
        if let Some(eval) = cached {
            self.record(x, orientation, eval, start, true)?;
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(Lookup::Cached(eval));
        }
        if !may_simulate {
            return Ok(Lookup::Refused);
        }
        let prepaid = self.prepaid.lock().expect("prepaid lock").remove(&key);
        let eval = match prepaid {
            Some(eval) => eval,
            None => {
                let result = simulate(&design, &self.instance, &self.config, &self.props)?;
                Evaluation {
                    q_w: result.q_w,
                    dp_kpa: result.delta_p_kpa,
                }
            }
        };
        let inserted = {
            let mut cache = self.cache.lock().expect("cache lock");
            if cache.contains_key(&key) {
                false
            } else {
                cache.insert(key, eval);
                true
            }
        };
        self.record(x, orientation, eval, start, !inserted)?;
        if inserted {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(Lookup::Simulated(eval))
        } else {
            self.hits.fetch_add(1, Ordering::SeqCst);
            Ok(Lookup::Cached(eval))
        }
    }

    pub fn evaluate(&self, x: &CircuitryVector, orientation: u64) -> Result<Outcome<Evaluation>> {
        Ok(match self.lookup(x, orientation, true)? {
            Lookup::Infeasible(r) => Outcome::Infeasible(r),
            Lookup::Cached(e) | Lookup::Simulated(e) => Outcome::Feasible(e),
            Lookup::Refused => unreachable!("simulation allowed"),
        })
    }

    /// Heat duty in the first orientation.
    pub fn evaluate_q(&self, x: &CircuitryVector) -> Result<Outcome<f64>> {
        Ok(match self.evaluate(x, 0)? {
            Outcome::Infeasible(r) => Outcome::Infeasible(r),
            Outcome::Feasible(e) => Outcome::Feasible(e.q_w),
        })
    }

    /// `Q/ΔP` in the first orientation, with the `Q ≥ q_lim` flag.
    pub fn evaluate_ratio(&self, x: &CircuitryVector, q_lim: f64) -> Result<Outcome<RatioOutcome>> {
        Ok(match self.evaluate(x, 0)? {
            Outcome::Infeasible(r) => Outcome::Infeasible(r),
            Outcome::Feasible(e) => Outcome::Feasible(RatioOutcome::new(e, q_lim)),
        })
    }

    fn record(
        &self,
        x: &CircuitryVector,
        orientation: u64,
        eval: Evaluation,
        start: Instant,
        cache_hit: bool,
    ) -> Result<()> {
        let rec = EvalLogRecord {
            vector: x.to_string(),
            orientation,
            q_w: eval.q_w,
            dp_kpa: eval.dp_kpa,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            cache_hit,
        };
        if let Some(sink) = &self.sink {
            let mut w = sink.lock().expect("sink lock");
            serde_json::to_writer(&mut *w, &rec)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        self.log.lock().expect("log lock").push(rec);
        Ok(())
    }

    /// Takes simulation results from an earlier log, to resume an interrupted
    /// run. A preloaded design still counts as a simulator call the first time
    /// it is looked up, since it was one, so a resumed deterministic run uses
    /// its budget exactly like an uninterrupted one. Returns the number of
    /// designs added.
    pub fn preload<'a>(&self, records: impl IntoIterator<Item = &'a EvalLogRecord>) -> Result<usize> {
        let cache = self.cache.lock().expect("cache lock");
        let mut prepaid = self.prepaid.lock().expect("prepaid lock");
        let mut added = 0;
        for rec in records {
            let x: CircuitryVector = rec.vector.parse()?;
            if let Outcome::Feasible(d) = canonical(&x, rec.orientation)? {
                let eval = Evaluation {
                    q_w: rec.q_w,
                    dp_kpa: rec.dp_kpa,
                };
                let key = d.key();
                if !cache.contains_key(&key) && prepaid.insert(key, eval).is_none() {
                    added += 1;
                }
            }
        }
        Ok(added)
    }
}

/// Reads a JSON-lines evaluation log. Blank lines are skipped.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<EvalLogRecord>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
