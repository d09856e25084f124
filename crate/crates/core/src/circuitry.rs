//! Binary encoding of refrigerant circuitry for two-row fin-tube coils.
//!
//! Tubes are numbered `1..=t`, top to bottom within a depth row, row 1 first
//! (row 1 is the row the air meets first). Every unordered tube pair `(i, j)`
//! with `i < j` owns one bit of a [`CircuitryVector`]; the bits follow the
//! strict upper triangle of the adjacency matrix in row-major order, so
//! `(1, 2)` is bit 1 and `(t-1, t)` is bit `(t² - t) / 2`.
//!
//! A connection is either a far-end U-bend, fixed by manufacturing and given
//! by [`far_end_edges`], or a front-end bend chosen by the designer. A vector
//! is feasible when every far-end bit is set, no tube has more than two
//! connections, and the connection graph is acyclic. Since every tube already
//! carries one far-end bend, a feasible graph is a set of vertex-disjoint
//! paths that covers every tube, and each path starts and ends at the front
//! face of the coil.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unionfind::DisjointSets;

/// One-based tube number.
pub type TubeId = usize;

/// One-based position in a [`CircuitryVector`].
pub type VectorIndex = usize;

pub const MAX_TUBES_PER_ROW: usize = 18;

/// Tube arrangement of a two-row coil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HexLayout {
    tubes_per_row: usize,
}

impl HexLayout {
    pub const ROWS: usize = 2;

    pub fn new(rows: usize, tubes_per_row: usize) -> Result<Self> {
        if rows != Self::ROWS {
            return Err(Error::contract(format!(
                "only two depth rows are supported, got {rows}"
            )));
        }
        if !(1..=MAX_TUBES_PER_ROW).contains(&tubes_per_row) {
            return Err(Error::contract(format!(
                "tubes per row must be in 1..={MAX_TUBES_PER_ROW}, got {tubes_per_row}"
            )));
        }
        Ok(HexLayout { tubes_per_row })
    }

    pub fn two_row(tubes_per_row: usize) -> Result<Self> {
        Self::new(Self::ROWS, tubes_per_row)
    }

    /// Layout with `t` tubes in total.
    pub fn with_tubes(t: usize) -> Result<Self> {
        if t % Self::ROWS != 0 {
            return Err(Error::contract(format!("tube count must be even, got {t}")));
        }
        Self::two_row(t / Self::ROWS)
    }

    pub fn rows(&self) -> usize {
        Self::ROWS
    }

    pub fn tubes_per_row(&self) -> usize {
        self.tubes_per_row
    }

    /// Total tube count `t`.
    pub fn tubes(&self) -> usize {
        Self::ROWS * self.tubes_per_row
    }

    /// Decision-vector length `n = (t² - t) / 2`.
    pub fn vector_len(&self) -> usize {
        let t = self.tubes();
        (t * t - t) / 2
    }

    /// Number of far-end pairs, `t / 2`.
    pub fn pairs(&self) -> usize {
        self.tubes() / 2
    }

    /// `(row, position)` of a tube, both one-based. Position 1 is the top tube.
    pub fn position(&self, tube: TubeId) -> Result<(usize, usize)> {
        self.check_tube(tube)?;
        let zero = tube - 1;
        Ok((zero / self.tubes_per_row + 1, zero % self.tubes_per_row + 1))
    }

    /// Inverse of [`HexLayout::position`].
    pub fn tube_at(&self, row: usize, position: usize) -> Result<TubeId> {
        if !(1..=Self::ROWS).contains(&row) || !(1..=self.tubes_per_row).contains(&position) {
            return Err(Error::contract(format!(
                "no tube at row {row}, position {position}"
            )));
        }
        Ok((row - 1) * self.tubes_per_row + position)
    }

    fn check_tube(&self, tube: TubeId) -> Result<()> {
        if (1..=self.tubes()).contains(&tube) {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "tube {tube} outside 1..={}",
                self.tubes()
            )))
        }
    }
}

/// Maps tube pair `(i, j)`, `i < j`, to its bit position.
pub fn pair_index(i: TubeId, j: TubeId, layout: HexLayout) -> Result<VectorIndex> {
    layout.check_tube(i)?;
    layout.check_tube(j)?;
    if i >= j {
        return Err(Error::contract(format!(
            "pair ({i}, {j}) must satisfy i < j"
        )));
    }
    Ok(pair_index_unchecked(i, j, layout.tubes()))
}

#[inline]
pub(crate) fn pair_index_unchecked(i: TubeId, j: TubeId, t: usize) -> VectorIndex {
    // Rows 1..i-1 of the upper triangle hold (i-1)*t - (i-1)*i/2 cells.
    (i - 1) * t - (i - 1) * i / 2 + (j - i)
}

/// Inverse of [`pair_index`].
pub fn inverse_index(k: VectorIndex, layout: HexLayout) -> Result<(TubeId, TubeId)> {
    let t = layout.tubes();
    if !(1..=layout.vector_len()).contains(&k) {
        return Err(Error::contract(format!(
            "vector index {k} outside 1..={}",
            layout.vector_len()
        )));
    }
    let mut start = 1;
    for i in 1..t {
        let row_len = t - i;
        if k < start + row_len {
            return Ok((i, i + 1 + (k - start)));
        }
        start += row_len;
    }
    unreachable!("index checked against vector length")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BendEnd {
    FarEnd,
    FrontEnd,
}

/// Tube-to-tube connection with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub i: TubeId,
    pub j: TubeId,
    pub end: BendEnd,
}

impl Edge {
    fn new(a: TubeId, b: TubeId, end: BendEnd) -> Self {
        Edge {
            i: a.min(b),
            j: a.max(b),
            end,
        }
    }
}

/// Fixed far-end U-bends.
///
/// When `t` is a multiple of four each row is paired top-down: `(1,2), (3,4), ...`.
/// Otherwise the top tubes of both rows are bent across the coil edge and the
/// remaining tubes of each row are paired top-down.
pub fn far_end_edges(layout: HexLayout) -> Vec<Edge> {
    let per_row = layout.tubes_per_row();
    let mut edges = Vec::with_capacity(layout.pairs());
    let pair_row = |first: TubeId, last: TubeId, edges: &mut Vec<Edge>| {
        let mut k = first;
        while k < last {
            edges.push(Edge::new(k, k + 1, BendEnd::FarEnd));
            k += 2;
        }
    };
    if per_row % 2 == 0 {
        pair_row(1, per_row, &mut edges);
        pair_row(per_row + 1, 2 * per_row, &mut edges);
    } else {
        edges.push(Edge::new(1, per_row + 1, BendEnd::FarEnd));
        pair_row(2, per_row, &mut edges);
        pair_row(per_row + 2, 2 * per_row, &mut edges);
    }
    edges.sort();
    edges
}

/// Far-end partner of every tube, indexed by tube id (slot 0 unused).
pub(crate) fn far_end_partners(layout: HexLayout) -> Vec<TubeId> {
    let mut partner = vec![0; layout.tubes() + 1];
    for e in far_end_edges(layout) {
        partner[e.i] = e.j;
        partner[e.j] = e.i;
    }
    partner
}

/// Binary decision vector; bit `k` (one-based) is the pair `inverse_index(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CircuitryVector {
    layout: HexLayout,
    bits: Vec<bool>,
}

impl CircuitryVector {
    pub fn new(layout: HexLayout, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != layout.vector_len() {
            return Err(Error::contract(format!(
                "vector length {} does not match n={} for t={}",
                bits.len(),
                layout.vector_len(),
                layout.tubes()
            )));
        }
        Ok(CircuitryVector { layout, bits })
    }

    pub fn zeros(layout: HexLayout) -> Self {
        CircuitryVector {
            layout,
            bits: vec![false; layout.vector_len()],
        }
    }

    /// Builds a vector from one-based set positions.
    pub fn from_ones(layout: HexLayout, ones: &[VectorIndex]) -> Result<Self> {
        let mut v = Self::zeros(layout);
        for &k in ones {
            if !(1..=layout.vector_len()).contains(&k) {
                return Err(Error::contract(format!("vector index {k} out of range")));
            }
            v.bits[k - 1] = true;
        }
        Ok(v)
    }

    pub fn layout(&self) -> HexLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, k: VectorIndex) -> bool {
        self.bits[k - 1]
    }

    pub fn set(&mut self, k: VectorIndex, value: bool) {
        self.bits[k - 1] = value;
    }

    pub fn connected(&self, i: TubeId, j: TubeId) -> bool {
        let (a, b) = (i.min(j), i.max(j));
        a != b && self.get(pair_index_unchecked(a, b, self.layout.tubes()))
    }

    pub fn set_pair(&mut self, i: TubeId, j: TubeId, value: bool) {
        let (a, b) = (i.min(j), i.max(j));
        let k = pair_index_unchecked(a, b, self.layout.tubes());
        self.set(k, value);
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// One-based positions of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = VectorIndex> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| k + 1)
    }

    /// Set pairs in ascending bit order.
    pub fn pairs(&self) -> Vec<(TubeId, TubeId)> {
        let t = self.layout.tubes();
        let mut out = Vec::with_capacity(self.popcount());
        for i in 1..t {
            for j in i + 1..=t {
                if self.get(pair_index_unchecked(i, j, t)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Set pairs classified against the layout's far-end bends.
    pub fn edges(&self) -> Vec<Edge> {
        let partner = far_end_partners(self.layout);
        self.pairs()
            .into_iter()
            .map(|(i, j)| {
                let end = if partner[i] == j {
                    BendEnd::FarEnd
                } else {
                    BendEnd::FrontEnd
                };
                Edge::new(i, j, end)
            })
            .collect()
    }

    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// The vector holding only the far-end bends.
pub fn base_vector(layout: HexLayout) -> CircuitryVector {
    let mut v = CircuitryVector::zeros(layout);
    for e in far_end_edges(layout) {
        v.set_pair(e.i, e.j, true);
    }
    v
}

impl fmt::Display for CircuitryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={};bits={}", self.layout.tubes(), self.bit_string())
    }
}

impl FromStr for CircuitryVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (t_part, bits_part) = s
            .split_once(';')
            .ok_or_else(|| Error::parse(format!("expected `t=<int>;bits=<0/1>`, got `{s}`")))?;
        let t: usize = t_part
            .trim()
            .strip_prefix("t=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(format!("bad tube count in `{s}`")))?;
        let bits_str = bits_part
            .trim()
            .strip_prefix("bits=")
            .ok_or_else(|| Error::parse(format!("missing `bits=` in `{s}`")))?;
        let bits = bits_str
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::parse(format!("bad bit `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        CircuitryVector::new(HexLayout::with_tubes(t)?, bits)
    }
}

impl Serialize for CircuitryVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CircuitryVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// First rule a vector breaks, in checking order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingFarEnd { i: TubeId, j: TubeId },
    /// Merge or split.
    DegreeExceeded { tube: TubeId, degree: usize },
    /// The edge `(i, j)` closes a cycle.
    Cycle { i: TubeId, j: TubeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingFarEnd { i, j } => write!(f, "far-end bend ({i},{j}) is missing"),
            Violation::DegreeExceeded { tube, degree } => {
                write!(f, "tube {tube} has {degree} connections (max 2)")
            }
            Violation::Cycle { i, j } => write!(f, "connection ({i},{j}) closes a cycle"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub violation: Option<Violation>,
    /// Total amount of rule breaking: missing far-end bends, connections above
    /// two per tube, and cycle-closing connections. Zero iff feasible.
    pub severity: usize,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violation.is_none()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => write!(f, "feasible"),
            Some(v) => write!(f, "{v} (severity {})", self.severity),
        }
    }
}

/// Checks the manufacturing rules. Reports the first violation found in the
/// order: far-end bends, tube degree, cycles.
///
/// A front-end bend between two far-end partners cannot be expressed, since
/// the pair shares one bit, so that rule needs no check.
pub fn validate(x: &CircuitryVector) -> FeasibilityReport {
    let layout = x.layout();
    let t = layout.tubes();
    let mut first: Option<Violation> = None;
    let mut severity = 0;

    for e in far_end_edges(layout) {
        if !x.connected(e.i, e.j) {
            severity += 1;
            first.get_or_insert(Violation::MissingFarEnd { i: e.i, j: e.j });
        }
    }

    let pairs = x.pairs();
    let mut degree = vec![0usize; t + 1];
    for &(i, j) in &pairs {
        degree[i] += 1;
        degree[j] += 1;
    }
    for (tube, &d) in degree.iter().enumerate().skip(1) {
        if d > 2 {
            severity += d - 2;
            first.get_or_insert(Violation::DegreeExceeded { tube, degree: d });
        }
    }

    let mut sets = DisjointSets::new(t + 1);
    let mut cycle = None;
    for &(i, j) in &pairs {
        if !sets.union(i, j) {
            severity += 1;
            cycle.get_or_insert(Violation::Cycle { i, j });
        }
    }
    if let Some(c) = cycle {
        first.get_or_insert(c);
    }

    FeasibilityReport {
        violation: first,
        severity,
    }
}

/// One refrigerant path through the coil.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Circuit {
    pub tubes: Vec<TubeId>,
}

impl Circuit {
    pub fn inlet(&self) -> TubeId {
        self.tubes[0]
    }

    pub fn outlet(&self) -> TubeId {
        *self.tubes.last().expect("circuit has tubes")
    }

    pub fn len(&self) -> usize {
        self.tubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tubes.is_empty()
    }

    fn reversed(&self) -> Circuit {
        Circuit {
            tubes: self.tubes.iter().rev().copied().collect(),
        }
    }
}

/// A feasible circuitry as explicit tube paths. When `directed`, each path
/// runs inlet to outlet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CircuitryDesign {
    layout: HexLayout,
    circuits: Vec<Circuit>,
    directed: bool,
}

impl CircuitryDesign {
    /// Builds a design from explicit paths and checks that the paths form a
    /// feasible circuitry of `layout`.
    pub fn new(layout: HexLayout, circuits: Vec<Circuit>, directed: bool) -> Result<Self> {
        let t = layout.tubes();
        let mut seen = vec![false; t + 1];
        let mut x = CircuitryVector::zeros(layout);
        for c in &circuits {
            if c.is_empty() {
                return Err(Error::contract("empty circuit"));
            }
            for &tube in &c.tubes {
                layout.check_tube(tube)?;
                if std::mem::replace(&mut seen[tube], true) {
                    return Err(Error::contract(format!("tube {tube} appears twice")));
                }
            }
            for w in c.tubes.windows(2) {
                x.set_pair(w[0], w[1], true);
            }
        }
        if let Some(missing) = (1..=t).find(|&k| !seen[k]) {
            return Err(Error::contract(format!("tube {missing} is plugged")));
        }
        let report = validate(&x);
        if !report.is_feasible() {
            return Err(Error::Infeasible(report));
        }
        // Paths are disjoint so the edge set has no duplicates; a circuit whose
        // consecutive tubes skip the far-end bend would leave the bend bit
        // unset and fail validation above.
        let expected_edges: usize = circuits.iter().map(|c| c.len() - 1).sum();
        if x.popcount() != expected_edges {
            return Err(Error::contract("circuits repeat a connection"));
        }
        Ok(CircuitryDesign {
            layout,
            circuits,
            directed,
        })
    }

    pub fn layout(&self) -> HexLayout {
        self.layout
    }

    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn circuit_count(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Number of distinct inlet/outlet assignments, `2^c`.
    pub fn orientation_count(&self) -> u64 {
        1u64 << self.circuits.len()
    }

    /// Directed variant number `index` of an undirected design.
    ///
    /// Bit `c - 1 - i` of `index` reverses circuit `i`, so variants are ordered
    /// lexicographically by direction flags with circuit 0 most significant.
    /// Variant 0 runs every circuit from its lowest-numbered end.
    pub fn orientation(&self, index: u64) -> Result<CircuitryDesign> {
        let c = self.circuits.len();
        if index >= self.orientation_count() {
            return Err(Error::contract(format!(
                "orientation {index} out of range for {c} circuits"
            )));
        }
        let circuits = self
            .circuits
            .iter()
            .enumerate()
            .map(|(i, circ)| {
                if (index >> (c - 1 - i)) & 1 == 1 {
                    circ.reversed()
                } else {
                    circ.clone()
                }
            })
            .collect();
        Ok(CircuitryDesign {
            layout: self.layout,
            circuits,
            directed: true,
        })
    }

    /// Undirected form, each circuit starting from its lower-numbered end.
    pub fn undirected(&self) -> CircuitryDesign {
        let circuits = self
            .circuits
            .iter()
            .map(|c| {
                if c.inlet() <= c.outlet() {
                    c.clone()
                } else {
                    c.reversed()
                }
            })
            .collect();
        CircuitryDesign {
            layout: self.layout,
            circuits,
            directed: false,
        }
    }

    /// Parses the line format of [`fmt::Display`]: one circuit per line, tubes
    /// joined by `->` (directed) or `-` (undirected). `|` also separates circuits.
    pub fn parse(layout: HexLayout, s: &str) -> Result<Self> {
        let mut circuits = Vec::new();
        let mut directed = None;
        for line in s.split(['\n', '|']).map(str::trim).filter(|l| !l.is_empty()) {
            let is_directed = line.contains("->");
            if *directed.get_or_insert(is_directed) != is_directed {
                return Err(Error::parse("mixed directed and undirected circuits"));
            }
            let sep = if is_directed { "->" } else { "-" };
            let tubes = line
                .split(sep)
                .map(|p| {
                    p.trim()
                        .parse::<TubeId>()
                        .map_err(|_| Error::parse(format!("bad tube id `{p}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            circuits.push(Circuit { tubes });
        }
        Self::new(layout, circuits, directed.unwrap_or(false))
    }

    /// Single-line key form, circuits joined by `|`.
    pub fn key(&self) -> String {
        self.to_string().replace('\n', "|")
    }
}

impl fmt::Display for CircuitryDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.directed { "->" } else { "-" };
        for (n, c) in self.circuits.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            let parts: Vec<String> = c.tubes.iter().map(|t| t.to_string()).collect();
            write!(f, "{}", parts.join(sep))?;
        }
        Ok(())
    }
}

/// Decodes a feasible vector into undirected paths.
///
/// Each circuit is listed from its lower-numbered end and circuits are sorted
/// by their lowest tube.
pub fn decode(x: &CircuitryVector) -> Result<CircuitryDesign> {
    let report = validate(x);
    if !report.is_feasible() {
        return Err(Error::Infeasible(report));
    }
    let layout = x.layout();
    let t = layout.tubes();
    let mut adj: Vec<[TubeId; 2]> = vec![[0, 0]; t + 1];
    let mut degree = vec![0usize; t + 1];
    for (i, j) in x.pairs() {
        adj[i][degree[i]] = j;
        adj[j][degree[j]] = i;
        degree[i] += 1;
        degree[j] += 1;
    }
    let mut visited = vec![false; t + 1];
    let mut circuits = Vec::new();
    for start in 1..=t {
        if visited[start] || degree[start] != 1 {
            continue;
        }
        let mut tubes = vec![start];
        visited[start] = true;
        let (mut prev, mut cur) = (start, adj[start][0]);
        loop {
            tubes.push(cur);
            visited[cur] = true;
            if degree[cur] == 1 {
                break;
            }
            let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
            prev = cur;
            cur = next;
        }
        circuits.push(Circuit { tubes });
    }
    circuits.sort_by_key(|c| *c.tubes.iter().min().expect("nonempty"));
    Ok(CircuitryDesign {
        layout,
        circuits,
        directed: false,
    })
}

/// Inverse of [`decode`]; also accepts directed designs.
pub fn encode(design: &CircuitryDesign) -> CircuitryVector {
    let mut x = CircuitryVector::zeros(design.layout());
    for c in design.circuits() {
        for w in c.tubes.windows(2) {
            x.set_pair(w[0], w[1], true);
        }
    }
    x
}

/// All `2^c` directed variants of an undirected design, in
/// [`CircuitryDesign::orientation`] order.
pub fn orient(design: &CircuitryDesign) -> Vec<CircuitryDesign> {
    let base = design.undirected();
    (0..base.orientation_count())
        .map(|k| base.orientation(k).expect("index in range"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn layout(t: usize) -> HexLayout {
        HexLayout::with_tubes(t).unwrap()
    }

    fn fig2_vector() -> CircuitryVector {
        CircuitryVector::from_ones(layout(8), &[1, 12, 14, 16, 23, 28]).unwrap()
    }

    fn with_front(t: usize, front: &[(TubeId, TubeId)]) -> CircuitryVector {
        let mut x = base_vector(layout(t));
        for &(i, j) in front {
            x.set_pair(i, j, true);
        }
        x
    }

    #[test]
    fn layout_rules() {
        assert!(HexLayout::new(3, 4).is_err());
        assert!(HexLayout::two_row(0).is_err());
        assert!(HexLayout::two_row(19).is_err());
        let l = layout(8);
        assert_eq!(l.vector_len(), 28);
        assert_eq!(l.position(1).unwrap(), (1, 1));
        assert_eq!(l.position(5).unwrap(), (2, 1));
        assert_eq!(l.tube_at(2, 4).unwrap(), 8);
        assert_eq!(layout(36).vector_len(), 630);
    }

    #[test]
    fn index_matrix_corners() {
        let l = layout(8);
        assert_eq!(pair_index(1, 2, l).unwrap(), 1);
        assert_eq!(pair_index(1, 8, l).unwrap(), 7);
        assert_eq!(pair_index(2, 3, l).unwrap(), 8);
        assert_eq!(pair_index(7, 8, l).unwrap(), 28);
        assert_eq!(inverse_index(28, l).unwrap(), (7, 8));
    }

    #[test]
    fn index_contract_errors() {
        let l = layout(8);
        assert!(pair_index(3, 3, l).is_err());
        assert!(pair_index(4, 2, l).is_err());
        assert!(pair_index(0, 2, l).is_err());
        assert!(pair_index(1, 9, l).is_err());
        assert!(inverse_index(0, l).is_err());
        assert!(inverse_index(29, l).is_err());
    }

    #[test]
    fn index_bijection_all_layouts() {
        for per_row in 2..=18 {
            let l = HexLayout::two_row(per_row).unwrap();
            for k in 1..=l.vector_len() {
                let (i, j) = inverse_index(k, l).unwrap();
                assert_eq!(pair_index(i, j, l).unwrap(), k);
            }
        }
    }

    #[test]
    fn far_end_rules() {
        let pairs = |t| -> Vec<(usize, usize)> {
            far_end_edges(layout(t)).iter().map(|e| (e.i, e.j)).collect()
        };
        assert_eq!(pairs(4), vec![(1, 2), (3, 4)]);
        assert_eq!(pairs(8), vec![(1, 2), (3, 4), (5, 6), (7, 8)]);
        assert_eq!(pairs(10), vec![(1, 6), (2, 3), (4, 5), (7, 8), (9, 10)]);
        assert_eq!(pairs(6), vec![(1, 4), (2, 3), (5, 6)]);
        assert_eq!(pairs(2), vec![(1, 2)]);
        for per_row in 1..=18 {
            let l = HexLayout::two_row(per_row).unwrap();
            let edges = far_end_edges(l);
            assert_eq!(edges.len(), l.pairs());
            let mut covered: Vec<_> = edges.iter().flat_map(|e| [e.i, e.j]).collect();
            covered.sort();
            assert_eq!(covered, (1..=l.tubes()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn base_vectors() {
        let b4 = base_vector(layout(4));
        assert_eq!(b4.ones().collect::<Vec<_>>(), vec![1, 6]);
        assert_eq!(base_vector(layout(8)).popcount(), 4);
        assert_eq!(base_vector(layout(10)).popcount(), 5);
        assert!(validate(&b4).is_feasible());
    }

    #[test]
    fn example_vector_is_feasible() {
        let x = fig2_vector();
        assert!(validate(&x).is_feasible());
        let d = decode(&x).unwrap();
        assert_eq!(d.to_string(), "1-2-7-8\n4-3-6-5");
        assert_eq!(encode(&d), x);
    }

    #[test]
    fn merge_split_rejected() {
        let x = with_front(4, &[(2, 3), (2, 4)]);
        let r = validate(&x);
        assert_eq!(r.violation, Some(Violation::DegreeExceeded { tube: 2, degree: 3 }));
        assert!(matches!(decode(&x), Err(Error::Infeasible(_))));
    }

    #[test]
    fn four_cycle_rejected() {
        let x = with_front(4, &[(1, 3), (2, 4)]);
        let r = validate(&x);
        // Edges in bit order: (1,2) (1,3) (2,4) (3,4); the last one closes the loop.
        assert_eq!(r.violation, Some(Violation::Cycle { i: 3, j: 4 }));
        assert_eq!(r.severity, 1);
    }

    #[test]
    fn missing_far_end_reported_first() {
        let mut x = with_front(4, &[(2, 3), (2, 4)]);
        x.set_pair(1, 2, false);
        let r = validate(&x);
        assert_eq!(r.violation, Some(Violation::MissingFarEnd { i: 1, j: 2 }));
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(CircuitryVector::new(layout(4), vec![true; 5]).is_err());
        assert!("t=4;bits=10000".parse::<CircuitryVector>().is_err());
        assert!("t=5;bits=1".parse::<CircuitryVector>().is_err());
    }

    #[test]
    fn decode_small() {
        assert_eq!(decode(&base_vector(layout(4))).unwrap().to_string(), "1-2\n3-4");
        assert_eq!(
            decode(&with_front(4, &[(2, 3)])).unwrap().to_string(),
            "1-2-3-4"
        );
    }

    #[test]
    fn orientation_counts() {
        let two = decode(&fig2_vector()).unwrap();
        let variants = orient(&two);
        assert_eq!(variants.len(), 4);
        assert_eq!(variants[0].to_string(), "1->2->7->8\n4->3->6->5");
        assert_eq!(variants[1].to_string(), "1->2->7->8\n5->6->3->4");
        assert_eq!(variants[2].to_string(), "8->7->2->1\n4->3->6->5");
        for v in &variants {
            assert_eq!(encode(v), fig2_vector());
        }
        let one = decode(&with_front(4, &[(2, 3)])).unwrap();
        assert_eq!(orient(&one).len(), 2);
        let three = decode(&base_vector(layout(6))).unwrap();
        assert_eq!(orient(&three).len(), 8);
    }

    #[test]
    fn design_text_roundtrip() {
        let d = decode(&fig2_vector()).unwrap().orientation(2).unwrap();
        let parsed = CircuitryDesign::parse(layout(8), &d.to_string()).unwrap();
        assert_eq!(parsed, d);
        assert_eq!(CircuitryDesign::parse(layout(8), &d.key()).unwrap(), d);
        // Skipping a far-end bend (2 and 7 paired with 1 and 8) is rejected.
        assert!(CircuitryDesign::parse(layout(8), "1-7-2-8\n3-4\n5-6").is_err());
        assert!(CircuitryDesign::parse(layout(4), "1-2").is_err());
    }

    #[test]
    fn vector_text_roundtrip() {
        let x = fig2_vector();
        let s = x.to_string();
        assert_eq!(s, "t=8;bits=1000000000010101000000100001");
        assert_eq!(s.parse::<CircuitryVector>().unwrap(), x);
    }

    proptest! {
        #[test]
        fn degree_raising_flip_is_infeasible(per_row in 1usize..=6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let l = HexLayout::two_row(per_row).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Random feasible vector by greedy insertion.
            let mut x = base_vector(l);
            for _ in 0..l.vector_len() {
                let k = rng.gen_range(1..=l.vector_len());
                if !x.get(k) {
                    x.set(k, true);
                    if !validate(&x).is_feasible() {
                        x.set(k, false);
                    }
                }
            }
            prop_assert!(validate(&x).is_feasible());
            let t = l.tubes();
            let mut degree = vec![0; t + 1];
            for (i, j) in x.pairs() { degree[i] += 1; degree[j] += 1; }
            let c = decode(&x).unwrap().circuit_count();
            prop_assert_eq!(x.popcount(), t / 2 + (t / 2 - c));
            prop_assert!(degree[1..].iter().all(|&d| d == 1 || d == 2));
            prop_assert_eq!(degree[1..].iter().filter(|&&d| d == 1).count(), 2 * c);
            for k in 1..=l.vector_len() {
                if x.get(k) { continue; }
                let (i, j) = inverse_index(k, l).unwrap();
                if degree[i] == 2 || degree[j] == 2 {
                    let mut y = x.clone();
                    y.set(k, true);
                    prop_assert!(!validate(&y).is_feasible());
                }
            }
        }
    }
}
