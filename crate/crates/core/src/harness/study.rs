use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuitry::{decode, CircuitryVector};
use crate::enumeration::{count_deviation_note, count_oracle, enumerate, EnumOptions, PUBLISHED_COUNTS};
use crate::error::Result;
use crate::simulator::{Evaluation, Evaluator};
use crate::solvers::Objective;

use super::{write_atomic, ExperimentPlan};

/// One instance of the complete-enumeration study. `Q/ΔP` statistics are raw
/// ratios; `best_ratio_value` is the penalized objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationRow {
    pub tubes: usize,
    pub solutions: u64,
    pub combinations: u64,
    pub oracle_solutions: u64,
    pub oracle_combinations: u64,
    pub published_solutions: Option<u64>,
    pub published_combinations: Option<u64>,
    pub q_lim_w: f64,
    pub count_q_at_least_q_lim: u64,
    pub q_min_w: f64,
    pub q_max_w: f64,
    pub q_mean_w: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_mean: f64,
    pub best_q_design: String,
    pub best_ratio_value: f64,
    pub best_ratio_design: String,
    /// Optima over the first orientation of each vector, which is what the
    /// solvers search.
    pub solver_optimum_q: f64,
    pub solver_optimum_ratio: f64,
    pub wall_seconds: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub tubes: usize,
    pub metric: String,
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationStudy {
    pub rows: Vec<EnumerationRow>,
    pub histograms: Vec<HistogramBin>,
    /// Deviations from the published counts, one line each.
    pub notes: Vec<String>,
}

/// Equal-width bins over `[min, max]` of `values`, as `(lower, upper, count)`.
/// The last bin is closed. A constant sample lands entirely in the first bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, u64)> {
    let bins = bins.max(1);
    if values.is_empty() {
        return vec![(0.0, 0.0, 0); bins];
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let k = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
        counts[k.min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let lower = lo + width * k as f64;
            let upper = if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 };
            (lower, upper, c)
        })
        .collect()
}

fn log_writer(plan: &ExperimentPlan, name: &str) -> Result<Option<BufWriter<File>>> {
    if !plan.study.write_logs {
        return Ok(None);
    }
    let dir = plan.out_dir.join("logs");
    std::fs::create_dir_all(&dir)?;
    Ok(Some(BufWriter::new(File::create(dir.join(name))?)))
}

/// Simulates every directed combination of every instance in the plan and
/// writes `enumeration.csv`, `enumeration_histograms.csv` and
/// `enumeration_notes.txt` to the output directory.
pub fn run_enumeration_study(plan: &ExperimentPlan) -> Result<EnumerationStudy> {
    plan.validate()?;
    let props = plan.property_table()?;
    let ratio_objective = Objective::RatioWithLimit(plan.penalty);
    let mut study = EnumerationStudy {
        rows: Vec::new(),
        histograms: Vec::new(),
        notes: Vec::new(),
    };

    for &per_row in &plan.tubes_per_row {
        let start = Instant::now();
        let instance = plan.instance_for(per_row)?;
        let layout = instance.layout;
        let t = layout.tubes();
        let options = EnumOptions {
            override_cap: plan.study.override_enum_cap,
        };
        let vectors: Vec<CircuitryVector> = enumerate(layout, options)?.collect();
        let mut jobs = Vec::new();
        for (v, x) in vectors.iter().enumerate() {
            for o in 0..decode(x)?.orientation_count() {
                jobs.push((v, o));
            }
        }
        let mut evaluator = Evaluator::new(instance, plan.simulator.clone(), Arc::clone(&props));
        if let Some(w) = log_writer(plan, &format!("enumerate_t{t}.jsonl"))? {
            evaluator = evaluator.with_log_sink(w);
        }
        let evals: Vec<Evaluation> = jobs
            .par_iter()
            .map(|&(v, o)| {
                Ok(evaluator
                    .evaluate(&vectors[v], o)?
                    .feasible()
                    .expect("enumerated vectors are feasible"))
            })
            .collect::<Result<_>>()?;

        let q: Vec<f64> = evals.iter().map(|e| e.q_w).collect();
        let ratio: Vec<f64> = evals.iter().map(Evaluation::ratio).collect();
        let argmax = |values: &mut dyn Iterator<Item = (usize, f64)>| {
            values.fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best })
        };
        let (best_q, _) = argmax(&mut q.iter().copied().enumerate());
        let (best_r, best_ratio_value) = argmax(&mut evals.iter().map(|e| ratio_objective.value(e)).enumerate());
        let design = |k: usize| -> Result<String> {
            let (v, o) = jobs[k];
            Ok(decode(&vectors[v])?.orientation(o)?.key())
        };
        let first = || jobs.iter().zip(&evals).filter(|((_, o), _)| *o == 0).map(|(_, e)| e);
        let solver_optimum_q = first().map(|e| e.q_w).fold(f64::NEG_INFINITY, f64::max);
        let solver_optimum_ratio = first().map(|e| ratio_objective.value(e)).fold(f64::NEG_INFINITY, f64::max);

        let (oracle_solutions, oracle_combinations) = count_oracle(t / 2)?;
        let published = PUBLISHED_COUNTS.iter().find(|p| p.0 == t);
        let note = count_deviation_note(t, vectors.len() as u64, jobs.len() as u64).unwrap_or_default();
        if !note.is_empty() {
            study.notes.push(note.clone());
        }
        let stats = |v: &[f64]| {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (min, max, v.iter().sum::<f64>() / v.len() as f64)
        };
        let (q_min_w, q_max_w, q_mean_w) = stats(&q);
        let (ratio_min, ratio_max, ratio_mean) = stats(&ratio);
        study.rows.push(EnumerationRow {
            tubes: t,
            solutions: vectors.len() as u64,
            combinations: jobs.len() as u64,
            oracle_solutions: oracle_solutions as u64,
            oracle_combinations: oracle_combinations as u64,
            published_solutions: published.map(|p| p.1),
            published_combinations: published.map(|p| p.2),
            q_lim_w: plan.penalty.q_lim,
            count_q_at_least_q_lim: q.iter().filter(|&&v| v >= plan.penalty.q_lim).count() as u64,
            q_min_w,
            q_max_w,
            q_mean_w,
            ratio_min,
            ratio_max,
            ratio_mean,
            best_q_design: design(best_q)?,
            best_ratio_value,
            best_ratio_design: design(best_r)?,
            solver_optimum_q,
            solver_optimum_ratio,
            wall_seconds: start.elapsed().as_secs_f64(),
            note,
        });
        for (metric, values) in [("q", &q), ("ratio", &ratio)] {
            for (bin, (lower, upper, count)) in histogram(values, plan.study.histogram_bins).into_iter().enumerate() {
                study.histograms.push(HistogramBin {
                    tubes: t,
                    metric: metric.to_string(),
                    bin,
                    lower,
                    upper,
                    count,
                });
            }
        }
    }

    write_atomic(plan.out_dir.join("enumeration.csv"), &to_csv(&study.rows)?)?;
    write_atomic(plan.out_dir.join("enumeration_histograms.csv"), &to_csv(&study.histograms)?)?;
    let mut notes = study.notes.join("\n");
    notes.push('\n');
    write_atomic(plan.out_dir.join("enumeration_notes.txt"), notes.as_bytes())?;
    Ok(study)
}

pub(crate) fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| crate::error::Error::Io(e.into_error()))
}

pub fn read_enumeration_csv(path: impl AsRef<Path>) -> Result<Vec<EnumerationRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
