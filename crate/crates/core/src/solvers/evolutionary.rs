use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuitry::{base_vector, CircuitryVector};
use crate::error::Result;

use super::moves::{mutate, random_feasible};
use super::{Budget, Problem, Scored, SolverKind, SolverReport, Termination, Tracker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionOptions {
    pub mu: usize,
    pub lambda: usize,
    pub relink_probability: f64,
    pub max_generations: usize,
    /// Stop after this many generations in a row without a simulator call.
    pub stall_generations: usize,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        EvolutionOptions {
            mu: 20,
            lambda: 40,
            relink_probability: 0.5,
            max_generations: 2000,
            stall_generations: 200,
        }
    }
}

#[derive(Clone)]
struct Individual {
    x: CircuitryVector,
    key: String,
    value: f64,
}

/// `(μ+λ)` evolution over feasible designs with the default options.
pub fn solve_evolutionary(problem: &Problem, budget: &Budget) -> Result<SolverReport> {
    solve_evolutionary_with(problem, budget, &EvolutionOptions::default())
}

pub fn solve_evolutionary_with(
    problem: &Problem,
    budget: &Budget,
    options: &EvolutionOptions,
) -> Result<SolverReport> {
    let mut tracker = Tracker::new(problem, budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let layout = problem.layout();
    let free = problem.free_indices().to_vec();
    let mu = options.mu.max(1);

    let mut population: Vec<Individual> = Vec::new();
    let mut seen = HashSet::new();
    let mut offer = |tracker: &mut Tracker, population: &mut Vec<Individual>, x: CircuitryVector| -> Result<bool> {
        let key = x.to_string();
        if !seen.insert(key.clone()) {
            return Ok(true);
        }
        match tracker.score(&x)? {
            Scored::Stop => Ok(false),
            Scored::Infeasible(r) => unreachable!("moves keep feasibility, got {r}"),
            Scored::Value(value) => {
                population.push(Individual { x, key, value });
                Ok(true)
            }
        }
    };

    let mut attempts = 0;
    let mut running = offer(&mut tracker, &mut population, base_vector(layout))?;
    while running && population.len() < mu && attempts < 50 * mu {
        attempts += 1;
        let x = random_feasible(layout, &free, &mut rng);
        running = offer(&mut tracker, &mut population, x)?;
    }
    select(&mut population, mu);

    let mut stall = 0;
    while running && tracker.iterations < options.max_generations {
        tracker.iterations += 1;
        let calls_before = tracker.calls();
        let mut offspring = Vec::with_capacity(options.lambda);
        for _ in 0..options.lambda {
            let parent = &population.choose(&mut rng).expect("population nonempty").x;
            if let Some(child) = mutate(parent, &free, options.relink_probability, &mut rng) {
                offspring.push(child);
            }
        }
        for child in offspring {
            if !offer(&mut tracker, &mut population, child)? {
                running = false;
                break;
            }
        }
        select(&mut population, mu);
        if tracker.calls() == calls_before {
            stall += 1;
            if stall >= options.stall_generations {
                break;
            }
        } else {
            stall = 0;
        }
    }
    tracker.finish(SolverKind::Evo, Termination::IterationLimit)
}

/// Truncation to the best `mu`, ties broken by the serialized vector so the
/// result does not depend on evaluation order.
fn select(population: &mut Vec<Individual>, mu: usize) {
    population.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| a.key.cmp(&b.key)));
    population.truncate(mu);
}
