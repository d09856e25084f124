//! DIRECT over the unit hypercube of free coordinates.
//!
//! A sample point rounds to a binary vector (`≥ 0.5 → 1`). Rectangles are
//! trisected along their longest side, lowest index first, so every side is
//! cut in turn and a rectangle at depth `k` has had exactly coordinates
//! `0..k` cut once. That makes depth a complete size class, and the rounded
//! center of a rectangle depends only on which third it took at each cut: the
//! lower third clears the bit, the middle and upper thirds keep it. Cutting a
//! coordinate a second time can only reproduce vectors already reachable at
//! depth `D`, so rectangles that have cut every coordinate are final.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::circuitry::CircuitryVector;
use crate::error::Result;

use super::{Budget, Problem, Scored, SolverKind, SolverReport, Termination, Tracker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectOptions {
    /// Minimum relative improvement a selected rectangle must promise.
    pub epsilon: f64,
    /// Stop once this many rectangles exist, even with budget left.
    pub max_rectangles: usize,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions {
            epsilon: 1e-4,
            max_rectangles: 3_000_000,
        }
    }
}

const LOW: u8 = 0;
const MID: u8 = 1;
const HIGH: u8 = 2;
const ROOT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
enum Value {
    Feasible(f64),
    Infeasible(usize),
}

struct Rect {
    parent: u32,
    third: u8,
    value: Value,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Open rectangles of one depth. Feasible ones by value, infeasible ones by
/// severity; any feasible rectangle beats every infeasible one.
#[derive(Default)]
struct Class {
    feasible: BinaryHeap<(Key, Reverse<u32>)>,
    infeasible: BinaryHeap<(Reverse<usize>, Reverse<u32>)>,
}

impl Class {
    fn push(&mut self, id: u32, value: Value) {
        match value {
            Value::Feasible(v) => self.feasible.push((Key(v), Reverse(id))),
            Value::Infeasible(s) => self.infeasible.push((Reverse(s), Reverse(id))),
        }
    }

    fn best(&self) -> Option<(u32, Value)> {
        if let Some(&(Key(v), Reverse(id))) = self.feasible.peek() {
            return Some((id, Value::Feasible(v)));
        }
        self.infeasible.peek().map(|&(Reverse(s), Reverse(id))| (id, Value::Infeasible(s)))
    }

    fn pop(&mut self) {
        if self.feasible.pop().is_none() {
            self.infeasible.pop();
        }
    }
}

/// Range of feasible values seen so far, used to place infeasible points
/// below everything feasible.
#[derive(Default)]
struct Scale {
    worst: Option<f64>,
    best: Option<f64>,
}

impl Scale {
    fn observe(&mut self, v: f64) {
        self.worst = Some(self.worst.map_or(v, |w| w.min(v)));
        self.best = Some(self.best.map_or(v, |b| b.max(v)));
    }

    fn value(&self, v: Value) -> f64 {
        match v {
            Value::Feasible(v) => v,
            Value::Infeasible(severity) => {
                let worst = self.worst.unwrap_or(0.0);
                let range = self.best.unwrap_or(0.0) - worst;
                let unit = if range > 0.0 { 0.1 * range } else { 0.1 * worst.abs().max(1.0) };
                worst - unit * (1.0 + severity as f64)
            }
        }
    }
}

/// DIRECT with default options. Deterministic: the budget seed is unused.
pub fn solve_direct(problem: &Problem, budget: &Budget) -> Result<SolverReport> {
    solve_direct_with(problem, budget, &DirectOptions::default())
}

pub fn solve_direct_with(problem: &Problem, budget: &Budget, options: &DirectOptions) -> Result<SolverReport> {
    let mut tracker = Tracker::new(problem, budget)?;
    let layout = problem.layout();
    let free = problem.free_indices().to_vec();
    let dims = free.len();
    // Far-end bends are not free, so they come out set as required.
    let mut all_ones = CircuitryVector::zeros(layout);
    for k in 1..=layout.vector_len() {
        all_ones.set(k, true);
    }

    // Half-diagonal of a rectangle at each depth.
    let size: Vec<f64> = (0..=dims)
        .map(|k| 0.5 * ((dims - k) as f64 + k as f64 / 9.0).sqrt())
        .collect();

    let mut rects: Vec<Rect> = Vec::new();
    let mut classes: Vec<Class> = (0..dims).map(|_| Class::default()).collect();
    let mut scale = Scale::default();

    let vector_of = |rects: &[Rect], parent: u32, third: u8, depth: usize| {
        let mut x = all_ones.clone();
        let mut d = depth;
        let (mut id, mut th) = (parent, third);
        while d > 0 {
            if th == LOW {
                x.set(free[d - 1], false);
            }
            d -= 1;
            if id == ROOT {
                break;
            }
            let r = &rects[id as usize];
            th = r.third;
            id = r.parent;
        }
        x
    };

    let score = |tracker: &mut Tracker, scale: &mut Scale, x: &CircuitryVector| -> Result<Option<Value>> {
        Ok(match tracker.score(x)? {
            Scored::Stop => None,
            Scored::Infeasible(r) => Some(Value::Infeasible(r.severity)),
            Scored::Value(v) => {
                scale.observe(v);
                Some(Value::Feasible(v))
            }
        })
    };

    let Some(root) = score(&mut tracker, &mut scale, &all_ones)? else {
        return tracker.finish(SolverKind::Direct, Termination::CallBudget);
    };
    rects.push(Rect {
        parent: ROOT,
        third: MID,
        value: root,
    });
    if dims > 0 {
        classes[0].push(0, root);
    }

    'outer: loop {
        if tracker.stopped() {
            break;
        }
        if rects.len() >= options.max_rectangles {
            tracker.stop(Termination::IterationLimit);
            break;
        }
        // Best open rectangle of each depth, as (depth, id, value) to minimize.
        let candidates: Vec<(usize, u32, f64)> = classes
            .iter()
            .enumerate()
            .filter_map(|(d, c)| c.best().map(|(id, v)| (d, id, -scale.value(v))))
            .collect();
        if candidates.is_empty() {
            tracker.stop(Termination::Exhausted);
            break;
        }
        let f_min = candidates
            .iter()
            .map(|c| c.2)
            .fold(tracker.best_value().map_or(f64::INFINITY, |b| -b), f64::min);
        let selected: Vec<(usize, u32)> = candidates
            .iter()
            .filter(|&&(d, _, f)| potentially_optimal(d, f, &candidates, &size, f_min, options.epsilon))
            .map(|&(d, id, _)| (d, id))
            .collect();
        tracker.iterations += 1;

        for (depth, id) in selected {
            classes[depth].pop();
            let parent_value = rects[id as usize].value;
            let child_depth = depth + 1;
            let x = vector_of(&rects, id, LOW, child_depth);
            let Some(low) = score(&mut tracker, &mut scale, &x)? else {
                break 'outer;
            };
            for (third, value) in [(LOW, low), (MID, parent_value), (HIGH, parent_value)] {
                let child = rects.len() as u32;
                rects.push(Rect {
                    parent: id,
                    third,
                    value,
                });
                if child_depth < dims {
                    classes[child_depth].push(child, value);
                }
            }
        }
    }
    tracker.finish(SolverKind::Direct, Termination::Exhausted)
}

/// Whether some rate constant `K > 0` makes the rectangle at depth `d` the
/// most promising, by at least `epsilon·|f_min|` over the incumbent.
fn potentially_optimal(
    d: usize,
    f: f64,
    candidates: &[(usize, u32, f64)],
    size: &[f64],
    f_min: f64,
    epsilon: f64,
) -> bool {
    let s = size[d];
    let mut k_low: f64 = 0.0;
    let mut k_high = f64::INFINITY;
    for &(e, _, g) in candidates {
        let t = size[e];
        if t < s {
            k_low = k_low.max((f - g) / (s - t));
        } else if t > s {
            k_high = k_high.min((g - f) / (t - s));
        }
    }
    if k_low > k_high || k_high <= 0.0 {
        return false;
    }
    if k_high.is_infinite() {
        return true;
    }
    f - k_high * s <= f_min - epsilon * f_min.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_rectangle_is_always_selected() {
        let size = [2.0, 1.0, 0.5];
        let c = [(0, 0, 10.0), (1, 1, 0.0), (2, 2, -5.0)];
        assert!(potentially_optimal(0, 10.0, &c, &size, -5.0, 1e-4));
        // Best value overall with the smallest size: selected.
        assert!(potentially_optimal(2, -5.0, &c, &size, -5.0, 1e-4));
    }

    #[test]
    fn dominated_middle_is_skipped() {
        let size = [2.0, 1.0, 0.5];
        // The middle point lies above the segment joining its neighbours.
        let c = [(0, 0, 0.0), (1, 1, 5.0), (2, 2, 0.0)];
        assert!(!potentially_optimal(1, 5.0, &c, &size, 0.0, 1e-4));
    }

    #[test]
    fn infeasible_values_rank_below_feasible() {
        let mut s = Scale::default();
        assert_eq!(s.value(Value::Infeasible(0)), -0.1);
        s.observe(100.0);
        s.observe(50.0);
        assert_eq!(s.value(Value::Infeasible(0)), 45.0);
        assert!(s.value(Value::Infeasible(3)) < s.value(Value::Infeasible(1)));
    }
}
