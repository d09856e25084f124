//! Feasibility-preserving moves on front-end bends.
//!
//! A feasible vector is a set of vertex-disjoint paths. Removing a front-end
//! bend splits a path in two; adding a bend between endpoints of two different
//! paths merges them. Neither can break the rules, so every result of this
//! module passes [`validate`](crate::circuitry::validate).

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuitry::{base_vector, inverse_index, CircuitryVector, HexLayout, VectorIndex};
use crate::unionfind::DisjointSets;

/// Degrees and path membership of a feasible vector.
struct Paths {
    degree: Vec<usize>,
    sets: DisjointSets,
}

impl Paths {
    fn of(x: &CircuitryVector) -> Self {
        let t = x.layout().tubes();
        let mut degree = vec![0; t + 1];
        let mut sets = DisjointSets::new(t + 1);
        for (i, j) in x.pairs() {
            degree[i] += 1;
            degree[j] += 1;
            sets.union(i, j);
        }
        Paths { degree, sets }
    }

    fn can_join(&self, i: usize, j: usize) -> bool {
        self.degree[i] < 2 && self.degree[j] < 2 && !self.sets.same(i, j)
    }

    fn join(&mut self, i: usize, j: usize) {
        self.degree[i] += 1;
        self.degree[j] += 1;
        self.sets.union(i, j);
    }
}

fn ends(k: VectorIndex, layout: HexLayout) -> (usize, usize) {
    inverse_index(k, layout).expect("free index in range")
}

/// Free indices currently set, ascending.
pub fn front_bends(x: &CircuitryVector, free: &[VectorIndex]) -> Vec<VectorIndex> {
    free.iter().copied().filter(|&k| x.get(k)).collect()
}

/// Free indices that could be set without breaking feasibility, ascending.
pub fn addable(x: &CircuitryVector, free: &[VectorIndex]) -> Vec<VectorIndex> {
    let paths = Paths::of(x);
    let layout = x.layout();
    free.iter()
        .copied()
        .filter(|&k| {
            if x.get(k) {
                return false;
            }
            let (i, j) = ends(k, layout);
            paths.can_join(i, j)
        })
        .collect()
}

fn with(x: &CircuitryVector, k: VectorIndex, value: bool) -> CircuitryVector {
    let mut y = x.clone();
    y.set(k, value);
    y
}

pub fn splits(x: &CircuitryVector, free: &[VectorIndex]) -> Vec<CircuitryVector> {
    front_bends(x, free).into_iter().map(|k| with(x, k, false)).collect()
}

pub fn merges(x: &CircuitryVector, free: &[VectorIndex]) -> Vec<CircuitryVector> {
    addable(x, free).into_iter().map(|k| with(x, k, true)).collect()
}

/// Remove one front-end bend and add a different one.
pub fn relinks(x: &CircuitryVector, free: &[VectorIndex]) -> Vec<CircuitryVector> {
    let mut out = Vec::new();
    for k in front_bends(x, free) {
        let y = with(x, k, false);
        for a in addable(&y, free) {
            if a != k {
                out.push(with(&y, a, true));
            }
        }
    }
    out
}

/// Splits, then merges, then relinks. Relinks that are also reachable by a
/// cheaper move cannot occur, so there are no duplicates.
pub fn neighbors(x: &CircuitryVector, free: &[VectorIndex]) -> Vec<CircuitryVector> {
    let mut out = splits(x, free);
    out.extend(merges(x, free));
    out.extend(relinks(x, free));
    out
}

/// A random feasible vector: the far-end bends plus `r` front-end bends
/// inserted in random order, with `r` uniform in `0..t/2`.
pub fn random_feasible<R: Rng>(layout: HexLayout, free: &[VectorIndex], rng: &mut R) -> CircuitryVector {
    let mut x = base_vector(layout);
    let target = rng.gen_range(0..layout.tubes() / 2);
    let mut order = free.to_vec();
    order.shuffle(rng);
    let mut paths = Paths::of(&x);
    let mut added = 0;
    for k in order {
        if added == target {
            break;
        }
        let (i, j) = ends(k, layout);
        if paths.can_join(i, j) {
            paths.join(i, j);
            x.set(k, true);
            added += 1;
        }
    }
    x
}

/// One random split, merge or relink. Relinks are chosen with probability
/// `relink_probability`, otherwise split and merge are equally likely; an
/// unavailable move falls back to the other kind. `None` when `x` has no
/// neighbor at all.
pub fn mutate<R: Rng>(
    x: &CircuitryVector,
    free: &[VectorIndex],
    relink_probability: f64,
    rng: &mut R,
) -> Option<CircuitryVector> {
    let bends = front_bends(x, free);
    let adds = addable(x, free);
    if rng.gen_bool(relink_probability.clamp(0.0, 1.0)) && !bends.is_empty() {
        let k = *bends.choose(rng)?;
        let y = with(x, k, false);
        let options: Vec<_> = addable(&y, free).into_iter().filter(|&a| a != k).collect();
        if let Some(&a) = options.choose(rng) {
            return Some(with(&y, a, true));
        }
    }
    let split_first = rng.gen_bool(0.5);
    let split = |rng: &mut R| bends.choose(rng).map(|&k| with(x, k, false));
    let merge = |rng: &mut R| adds.choose(rng).map(|&k| with(x, k, true));
    if split_first {
        split(rng).or_else(|| merge(rng))
    } else {
        merge(rng).or_else(|| split(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuitry::validate;
    use crate::enumeration::{enumerate, EnumOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn free(layout: HexLayout) -> Vec<VectorIndex> {
        let fixed: Vec<_> = crate::circuitry::far_end_edges(layout)
            .iter()
            .map(|e| crate::circuitry::pair_index(e.i, e.j, layout).unwrap())
            .collect();
        (1..=layout.vector_len()).filter(|k| !fixed.contains(k)).collect()
    }

    #[test]
    fn free_index_count() {
        for tpr in 1..=6 {
            let layout = HexLayout::two_row(tpr).unwrap();
            assert_eq!(free(layout).len(), layout.vector_len() - layout.tubes() / 2);
        }
    }

    #[test]
    fn neighborhood_connects_t6() {
        let layout = HexLayout::with_tubes(6).unwrap();
        let free = free(layout);
        let all: BTreeSet<String> = enumerate(layout, EnumOptions::default())
            .unwrap()
            .map(|x| x.to_string())
            .collect();
        let mut seen = BTreeSet::new();
        let mut stack = vec![base_vector(layout)];
        while let Some(x) = stack.pop() {
            if !seen.insert(x.to_string()) {
                continue;
            }
            for y in neighbors(&x, &free) {
                assert!(validate(&y).is_feasible());
                stack.push(y);
            }
        }
        assert_eq!(seen, all);
    }

    #[test]
    fn random_moves_stay_feasible() {
        let layout = HexLayout::with_tubes(12).unwrap();
        let free = free(layout);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = random_feasible(layout, &free, &mut rng);
            assert!(validate(&x).is_feasible());
            let y = mutate(&x, &free, 0.5, &mut rng).unwrap();
            assert!(validate(&y).is_feasible());
            assert_ne!(x, y);
        }
    }

    #[test]
    fn neighbors_are_distinct() {
        let layout = HexLayout::with_tubes(8).unwrap();
        let free = free(layout);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_feasible(layout, &free, &mut rng);
            let n = neighbors(&x, &free);
            let set: BTreeSet<_> = n.iter().map(|y| y.to_string()).collect();
            assert_eq!(set.len(), n.len());
            assert!(!set.contains(&x.to_string()));
        }
    }
}
