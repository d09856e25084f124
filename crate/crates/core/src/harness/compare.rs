use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::enumeration::{enumerate, EnumOptions};
use crate::error::{Error, Result};
use crate::simulator::{read_log, Evaluator};
use crate::solvers::{solve, Budget, Objective, Problem, SolverKind, SolverReport};
use crate::thermo::PropertyTable;

use super::study::to_csv;
use super::{write_atomic, ExperimentPlan, ObjectiveKind};

pub const COMPARISON_FOOTNOTE: &str = "\
Function evaluations count simulator calls only; cache hits and designs rejected \
as infeasible before simulation are not counted. '-' marks a run that found no \
feasible design within its budget. Geometric-mean rows are taken over the runs \
a solver solved; the objective mean is '-' when any of those values is not \
positive. Times characterize the built-in simulator. Solvers evaluate each \
vector in its first orientation.";

/// A number that prints as `-` when absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dashed(pub Option<f64>);

impl Serialize for Dashed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("-"),
        }
    }
}

impl<'de> Deserialize<'de> for Dashed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.trim() == "-" {
            return Ok(Dashed(None));
        }
        s.trim().parse().map(|v| Dashed(Some(v))).map_err(serde::de::Error::custom)
    }
}

/// One line of a comparison table: a run, or a geometric-mean row with
/// `instance == "geomean"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub instance: String,
    pub objective: String,
    pub solver: String,
    pub seed: Option<u64>,
    pub best_value: Dashed,
    pub time_s: Dashed,
    pub function_evaluations: Dashed,
    pub q_w: Option<f64>,
    pub dp_kpa: Option<f64>,
    pub constraint_satisfied: Option<bool>,
    /// Enumerated optimum of the same objective, when computed.
    pub optimum: Option<f64>,
    pub gap: Option<f64>,
    /// Runs that contributed to a geometric-mean row.
    pub solved_runs: Option<usize>,
    pub termination: String,
    pub best_design: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub reports: Vec<SolverReport>,
}

/// `exp(mean(ln v))`; `None` for an empty input or any value `≤ 0`.
pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    Some((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// `(optimum − value)/|optimum|`, or the plain difference at a zero optimum.
pub fn relative_gap(value: f64, optimum: f64) -> f64 {
    if optimum == 0.0 {
        optimum - value
    } else {
        (optimum - value) / optimum.abs()
    }
}

/// Best objective value over all enumerated vectors in their first
/// orientation: the optimum the solvers can reach.
fn brute_force_optimum(
    plan: &ExperimentPlan,
    per_row: usize,
    objective: Objective,
    props: &Arc<PropertyTable>,
) -> Result<f64> {
    let instance = plan.instance_for(per_row)?;
    let options = EnumOptions {
        override_cap: plan.study.override_enum_cap,
    };
    let vectors: Vec<_> = enumerate(instance.layout, options)?.collect();
    let ev = Evaluator::new(instance, plan.simulator.clone(), Arc::clone(props));
    let values: Vec<f64> = vectors
        .par_iter()
        .map(|x| Ok(objective.value(&ev.evaluate(x, 0)?.feasible().expect("feasible"))))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy)]
struct Job {
    per_row: usize,
    objective: ObjectiveKind,
    solver: SolverKind,
    seed: u64,
}

impl Job {
    fn name(&self) -> String {
        format!("{}_t{}_{}_s{}", self.objective, 2 * self.per_row, self.solver, self.seed)
    }
}

fn run_job(plan: &ExperimentPlan, job: Job, props: &Arc<PropertyTable>) -> Result<SolverReport> {
    let runs = plan.out_dir.join("runs");
    let report_path = runs.join(format!("{}.json", job.name()));
    let log_path = runs.join(format!("{}.jsonl", job.name()));
    if plan.resume && report_path.exists() {
        let text = std::fs::read_to_string(&report_path)?;
        return Ok(serde_json::from_str(&text)?);
    }
    let instance = plan.instance_for(job.per_row)?;
    let mut evaluator = Evaluator::new(instance, plan.simulator.clone(), Arc::clone(props));
    if plan.resume && log_path.exists() {
        evaluator.preload(&read_log(&log_path)?)?;
    }
    if plan.study.write_logs {
        std::fs::create_dir_all(&runs)?;
        evaluator = evaluator.with_log_sink(BufWriter::new(File::create(&log_path)?));
    }
    let problem = Problem::new(Arc::new(evaluator), job.objective.objective(&plan.penalty))?;
    let budget = Budget {
        seed: job.seed,
        ..plan.budget
    };
    let report = solve(job.solver, &problem, &budget, &plan.solver)?;
    write_atomic(&report_path, serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

fn jobs(plan: &ExperimentPlan) -> Vec<Job> {
    let mut out = Vec::new();
    for &per_row in &plan.tubes_per_row {
        for &objective in &plan.objectives {
            for &solver in &plan.solvers {
                for &seed in &plan.seeds {
                    out.push(Job {
                        per_row,
                        objective,
                        solver,
                        seed,
                    });
                }
            }
        }
    }
    out
}

/// Runs every (instance, objective, solver, seed) of the plan, in parallel
/// across runs, and writes `comparison.csv` and `comparison_notes.txt`.
/// Finished runs are saved under `runs/` as they complete; with
/// `plan.resume` they are reused and unfinished ones replay their logs.
pub fn run_solver_comparison(plan: &ExperimentPlan) -> Result<ComparisonTable> {
    plan.validate()?;
    let props = plan.property_table()?;
    let jobs = jobs(plan);

    let mut optima: HashMap<(usize, ObjectiveKind), f64> = HashMap::new();
    for &per_row in &plan.tubes_per_row {
        if 2 * per_row > plan.study.oracle_max_tubes {
            continue;
        }
        for &obj in &plan.objectives {
            let v = brute_force_optimum(plan, per_row, obj.objective(&plan.penalty), &props)?;
            optima.insert((per_row, obj), v);
        }
    }

    let reports: Vec<SolverReport> = jobs
        .par_iter()
        .map(|&job| run_job(plan, job, &props))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (job, r) in jobs.iter().zip(&reports) {
        let optimum = optima.get(&(job.per_row, job.objective)).copied();
        rows.push(ComparisonRow {
            instance: (2 * job.per_row).to_string(),
            objective: job.objective.to_string(),
            solver: job.solver.to_string(),
            seed: Some(job.seed),
            best_value: Dashed(r.best_value),
            time_s: Dashed(r.best_value.map(|_| r.wall_seconds)),
            function_evaluations: Dashed(Some(r.simulator_calls as f64)),
            q_w: r.best_q_w,
            dp_kpa: r.best_dp_kpa,
            constraint_satisfied: r.constraint_satisfied,
            optimum,
            gap: optimum.zip(r.best_value).map(|(o, v)| relative_gap(v, o)),
            solved_runs: None,
            termination: serde_json::to_value(r.termination)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
            best_design: r.best_design.clone().unwrap_or_default(),
        });
    }
    for &objective in &plan.objectives {
        for &solver in &plan.solvers {
            let solved: Vec<&SolverReport> = jobs
                .iter()
                .zip(&reports)
                .filter(|(j, r)| j.objective == objective && j.solver == solver && r.solved())
                .map(|(_, r)| r)
                .collect();
            let values: Vec<f64> = solved.iter().filter_map(|r| r.best_value).collect();
            let times: Vec<f64> = solved.iter().map(|r| r.wall_seconds).collect();
            let evals: Vec<f64> = solved.iter().map(|r| r.simulator_calls as f64).collect();
            rows.push(ComparisonRow {
                instance: "geomean".into(),
                objective: objective.to_string(),
                solver: solver.to_string(),
                seed: None,
                best_value: Dashed(geometric_mean(&values)),
                time_s: Dashed(geometric_mean(&times)),
                function_evaluations: Dashed(geometric_mean(&evals)),
                q_w: None,
                dp_kpa: None,
                constraint_satisfied: None,
                optimum: None,
                gap: None,
                solved_runs: Some(solved.len()),
                termination: String::new(),
                best_design: String::new(),
            });
        }
    }

    let table = ComparisonTable { rows, reports };
    write_comparison_csv(plan.out_dir.join("comparison.csv"), &table.rows)?;
    write_atomic(
        plan.out_dir.join("comparison_notes.txt"),
        format!("{COMPARISON_FOOTNOTE}\n").as_bytes(),
    )?;
    Ok(table)
}

pub fn write_comparison_csv(path: impl AsRef<Path>, rows: &[ComparisonRow]) -> Result<()> {
    write_atomic(path, &to_csv(rows)?)
}

pub fn read_comparison_csv(path: impl AsRef<Path>) -> Result<Vec<ComparisonRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverVerdict {
    pub solver: SolverKind,
    pub seed: u64,
    pub value: Option<f64>,
    pub gap: Option<f64>,
    pub calls: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleVerdict {
    pub tubes: usize,
    pub objective: ObjectiveKind,
    pub optimum: f64,
    pub threshold: f64,
    pub solvers: Vec<SolverVerdict>,
}

impl OracleVerdict {
    pub fn pass(&self) -> bool {
        self.solvers.iter().all(|s| s.pass)
    }
}

/// Runs each planned solver on the instance with `tubes_per_row` tubes per row
/// and compares its best value with the enumerated optimum, per objective.
/// Runs are kept in memory; nothing is written.
pub fn verify_against_oracle(plan: &ExperimentPlan, tubes_per_row: usize) -> Result<Vec<OracleVerdict>> {
    plan.validate()?;
    let props = plan.property_table()?;
    let t = 2 * tubes_per_row;
    if t > crate::enumeration::DEFAULT_TUBE_CAP && !plan.study.override_enum_cap {
        return Err(Error::EnumerationCap {
            tubes: t,
            cap: crate::enumeration::DEFAULT_TUBE_CAP,
        });
    }
    let mut out = Vec::new();
    for &objective in &plan.objectives {
        let obj = objective.objective(&plan.penalty);
        let optimum = brute_force_optimum(plan, tubes_per_row, obj, &props)?;
        let mut runs = Vec::new();
        for &solver in &plan.solvers {
            for &seed in &plan.seeds {
                runs.push((solver, seed));
            }
        }
        let solvers = runs
            .par_iter()
            .map(|&(solver, seed)| {
                let ev = Evaluator::new(plan.instance_for(tubes_per_row)?, plan.simulator.clone(), Arc::clone(&props));
                let problem = Problem::new(Arc::new(ev), obj)?;
                let budget = Budget { seed, ..plan.budget };
                let r = solve(solver, &problem, &budget, &plan.solver)?;
                let gap = r.best_value.map(|v| relative_gap(v, optimum));
                Ok(SolverVerdict {
                    solver,
                    seed,
                    value: r.best_value,
                    gap,
                    calls: r.simulator_calls,
                    pass: gap.is_some_and(|g| g <= plan.study.gap_threshold),
                })
            })
            .collect::<Result<_>>()?;
        out.push(OracleVerdict {
            tubes: t,
            objective,
            optimum,
            threshold: plan.study.gap_threshold,
            solvers,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_mean_examples() {
        assert!((geometric_mean(&[2.0, 8.0]).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(geometric_mean(&[]), None);
        assert_eq!(geometric_mean(&[3.0, -1.0]), None);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(relative_gap(5.0, 5.0), 0.0);
        assert!((relative_gap(3975.0, 3977.0) * 100.0 - 0.0503).abs() < 1e-3);
        assert!(relative_gap(-101.0, -100.0) > 0.0);
    }

    #[test]
    fn dash_roundtrip() {
        let rows = vec![ComparisonRow {
            instance: "4".into(),
            objective: "q".into(),
            solver: "direct".into(),
            seed: Some(1),
            best_value: Dashed(None),
            time_s: Dashed(Some(0.25)),
            function_evaluations: Dashed(Some(12.0)),
            q_w: None,
            dp_kpa: Some(1.5),
            constraint_satisfied: Some(false),
            optimum: None,
            gap: None,
            solved_runs: None,
            termination: "call_budget".into(),
            best_design: "1-2|3-4".into(),
        }];
        let bytes = to_csv(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("4,q,direct,1,-,0.25,12.0,"));
        let back: Vec<ComparisonRow> = csv::Reader::from_reader(&bytes[..])
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        assert_eq!(back, rows);
    }
}
