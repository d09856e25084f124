use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuitry::CircuitryVector;
use crate::error::Result;

use super::moves::{neighbors, random_feasible};
use super::{Budget, Problem, Scored, SolverKind, SolverReport, Termination, Tracker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalSearchOptions {
    pub max_restarts: usize,
    /// Stop after this many climbs in a row that needed no simulator call.
    pub stall_restarts: usize,
}

impl Default for LocalSearchOptions {
    fn default() -> Self {
        LocalSearchOptions {
            max_restarts: 10_000,
            stall_restarts: 100,
        }
    }
}

/// Steepest-ascent hill climbing with random restarts, default options.
pub fn solve_localsearch(problem: &Problem, budget: &Budget) -> Result<SolverReport> {
    solve_localsearch_with(problem, budget, &LocalSearchOptions::default())
}

pub fn solve_localsearch_with(
    problem: &Problem,
    budget: &Budget,
    options: &LocalSearchOptions,
) -> Result<SolverReport> {
    let mut tracker = Tracker::new(problem, budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let layout = problem.layout();
    let free = problem.free_indices().to_vec();
    let mut stall = 0;

    'climbs: loop {
        let calls_before = tracker.calls();
        let start = random_feasible(layout, &free, &mut rng);
        let mut current: (CircuitryVector, f64) = match tracker.score(&start)? {
            Scored::Stop => break,
            Scored::Infeasible(r) => unreachable!("random construction is feasible, got {r}"),
            Scored::Value(v) => (start, v),
        };
        loop {
            tracker.iterations += 1;
            let mut best: Option<(CircuitryVector, f64)> = None;
            for y in neighbors(&current.0, &free) {
                match tracker.score(&y)? {
                    Scored::Stop => break 'climbs,
                    Scored::Infeasible(r) => unreachable!("moves keep feasibility, got {r}"),
                    Scored::Value(v) => {
                        if best.as_ref().map_or(true, |b| v > b.1) {
                            best = Some((y, v));
                        }
                    }
                }
            }
            match best {
                Some(b) if b.1 > current.1 => current = b,
                _ => break,
            }
        }
        if tracker.calls() == calls_before {
            stall += 1;
            if stall >= options.stall_restarts {
                break;
            }
        } else {
            stall = 0;
        }
        if tracker.restarts >= options.max_restarts {
            break;
        }
        tracker.restarts += 1;
    }
    tracker.finish(SolverKind::Local, Termination::IterationLimit)
}
