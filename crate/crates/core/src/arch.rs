//! Grid geometry of a neutral-atom array.
//!
//! Sites sit on a unit-spaced rectangular grid. Two atoms can take part in
//! the same multi-qubit gate when their Euclidean separation is at most the
//! interaction distance, and every executing gate switches off a restriction
//! zone of nearby atoms for the duration of its time step.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when comparing squared integer distances against a real range.
const RANGE_EPS: f64 = 1e-9;

/// One trap position, addressed by row and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub row: usize,
    pub col: usize,
}

impl Site {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    fn dist2(self, other: Site) -> usize {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        dr * dr + dc * dc
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

impl From<(usize, usize)> for Site {
    fn from((row, col): (usize, usize)) -> Self {
        Site { row, col }
    }
}

/// Euclidean distance in units of the lattice spacing.
pub fn distance(a: Site, b: Site) -> f64 {
    (a.dist2(b) as f64).sqrt()
}

/// True when `a` and `b` are at most `d` apart.
pub fn within(a: Site, b: Site, d: f64) -> bool {
    (a.dist2(b) as f64) <= d * d + RANGE_EPS
}

/// Largest pairwise distance among `sites` (0 for fewer than two).
pub fn span(sites: &[Site]) -> f64 {
    let mut max2 = 0;
    for (i, a) in sites.iter().enumerate() {
        for b in &sites[i + 1..] {
            max2 = max2.max(a.dist2(*b));
        }
    }
    (max2 as f64).sqrt()
}

/// How the restriction-zone radius around a gate is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestrictionRadius {
    /// Half of the largest separation between the interacting atoms.
    #[default]
    HalfGateSpan,
    /// Half of the lattice spacing, independent of the gate.
    HalfSpacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    rows: usize,
    cols: usize,
    d_max: f64,
    restriction: RestrictionRadius,
}

impl Architecture {
    pub fn new_grid(rows: usize, cols: usize, d_max: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension(format!(
                "grid must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if !(d_max >= 1.0) || !d_max.is_finite() {
            return Err(Error::InvalidDimension(format!(
                "maximum interaction distance must be >= 1, got {d_max}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            d_max,
            restriction: RestrictionRadius::default(),
        })
    }

    pub fn with_restriction(mut self, restriction: RestrictionRadius) -> Self {
        self.restriction = restriction;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn restriction(&self) -> RestrictionRadius {
        self.restriction
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, s: Site) -> bool {
        s.row < self.rows && s.col < self.cols
    }

    pub fn check(&self, s: Site) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::SiteOutOfBounds(s, self.rows, self.cols))
        }
    }

    /// Row-major index of an in-bounds site.
    pub fn index(&self, s: Site) -> usize {
        debug_assert!(self.contains(s), "{s} outside {}x{}", self.rows, self.cols);
        s.row * self.cols + s.col
    }

    pub fn site(&self, index: usize) -> Site {
        Site::new(index / self.cols, index % self.cols)
    }

    /// All sites in row-major order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.n_sites()).map(|i| self.site(i))
    }

    pub fn empty_set(&self) -> SiteSet {
        SiteSet::new(self)
    }

    /// Every other site within distance `d` of `s`, row-major.
    pub fn neighbors(&self, s: Site, d: f64) -> Vec<Site> {
        let offsets = Offsets::new(d);
        offsets.around(s, self.rows, self.cols).collect()
    }

    /// Sites that must stay idle while a gate acts on `gate_sites`.
    pub fn blocked_sites(&self, gate_sites: &[Site]) -> Result<BTreeSet<Site>> {
        Ok(self.restriction_zone(gate_sites)?.iter().collect())
    }

    /// Bitset form of [`Architecture::blocked_sites`].
    pub fn restriction_zone(&self, gate_sites: &[Site]) -> Result<SiteSet> {
        for (i, &a) in gate_sites.iter().enumerate() {
            self.check(a)?;
            for &b in &gate_sites[i + 1..] {
                if !within(a, b, self.d_max) {
                    return Err(Error::OutOfRangeInteraction {
                        a,
                        b,
                        distance: distance(a, b),
                        d_max: self.d_max,
                    });
                }
            }
        }
        Ok(self.zone_unchecked(gate_sites))
    }

    pub(crate) fn zone_unchecked(&self, gate_sites: &[Site]) -> SiteSet {
        let mut zone = self.empty_set();
        let radius = match (self.restriction, gate_sites.len()) {
            (_, 0 | 1) | (RestrictionRadius::HalfSpacing, _) => 0.5,
            (RestrictionRadius::HalfGateSpan, _) => span(gate_sites) / 2.0,
        };
        let offsets = Offsets::new(radius);
        for &g in gate_sites {
            for t in offsets.around(g, self.rows, self.cols) {
                zone.insert(t);
            }
        }
        for &g in gate_sites {
            zone.remove(g);
        }
        zone
    }

    /// Minimum-hop path from `src` to `dst` using hops of length at most `d`,
    /// never stepping on a `forbidden` site. Among equally short paths the
    /// row-major lexicographically smallest sequence wins.
    pub fn shortest_interaction_path(
        &self,
        src: Site,
        dst: Site,
        d: f64,
        forbidden: &SiteSet,
    ) -> Option<Vec<Site>> {
        if forbidden.contains(dst) {
            return None;
        }
        self.shortest_path_to(src, d, forbidden, |s| s == dst)
            .map(|search| search.path)
    }

    /// Breadth-first search from `src` to the nearest site satisfying `goal`.
    ///
    /// Neighbours are expanded in row-major order and each node keeps its
    /// first discovering parent, which makes the returned path the
    /// lexicographically smallest among the shortest ones.
    pub fn shortest_path_to(
        &self,
        src: Site,
        d: f64,
        forbidden: &SiteSet,
        goal: impl Fn(Site) -> bool,
    ) -> Option<PathSearch> {
        if goal(src) {
            return Some(PathSearch {
                path: vec![src],
                expansions: 1,
            });
        }
        let offsets = Offsets::new(d);
        let n = self.n_sites();
        let mut parent = vec![usize::MAX; n];
        let src_idx = self.index(src);
        parent[src_idx] = src_idx;
        let mut queue = VecDeque::from([src]);
        let mut expansions = 0;
        while let Some(cur) = queue.pop_front() {
            expansions += 1;
            for next in offsets.around(cur, self.rows, self.cols) {
                let idx = self.index(next);
                if parent[idx] != usize::MAX || forbidden.contains(next) {
                    continue;
                }
                parent[idx] = self.index(cur);
                if goal(next) {
                    let mut path = vec![next];
                    let mut at = idx;
                    while at != src_idx {
                        at = parent[at];
                        path.push(self.site(at));
                    }
                    path.reverse();
                    return Some(PathSearch { path, expansions });
                }
                queue.push_back(next);
            }
        }
        None
    }
}

/// Result of a breadth-first search, with the number of expanded nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSearch {
    pub path: Vec<Site>,
    pub expansions: usize,
}

/// Lattice offsets with Euclidean norm in `(0, d]`, sorted row-major.
struct Offsets(Vec<(isize, isize)>);

impl Offsets {
    fn new(d: f64) -> Self {
        let reach = (d + RANGE_EPS).floor().max(0.0) as isize;
        let mut v = Vec::new();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                if (dr, dc) == (0, 0) {
                    continue;
                }
                if ((dr * dr + dc * dc) as f64) <= d * d + RANGE_EPS {
                    v.push((dr, dc));
                }
            }
        }
        Offsets(v)
    }

    fn around(&self, s: Site, rows: usize, cols: usize) -> impl Iterator<Item = Site> + '_ {
        self.0.iter().filter_map(move |&(dr, dc)| {
            let r = s.row.checked_add_signed(dr)?;
            let c = s.col.checked_add_signed(dc)?;
            (r < rows && c < cols).then_some(Site::new(r, c))
        })
    }
}

/// A set of sites of one architecture, stored as a row-major bitset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteSet {
    bits: FixedBitSet,
    cols: usize,
}

impl SiteSet {
    pub fn new(arch: &Architecture) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(arch.n_sites()),
            cols: arch.cols,
        }
    }

    pub fn from_sites(arch: &Architecture, sites: impl IntoIterator<Item = Site>) -> Self {
        let mut set = Self::new(arch);
        for s in sites {
            set.insert(s);
        }
        set
    }

    fn idx(&self, s: Site) -> usize {
        s.row * self.cols + s.col
    }

    pub fn insert(&mut self, s: Site) -> bool {
        let i = self.idx(s);
        !self.bits.put(i)
    }

    pub fn remove(&mut self, s: Site) {
        let i = self.idx(s);
        if i < self.bits.len() {
            self.bits.set(i, false);
        }
    }

    pub fn contains(&self, s: Site) -> bool {
        s.col < self.cols && self.bits.contains(self.idx(s))
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn clear(&mut self) {
        self.bits.clear();
    }

    pub fn union_with(&mut self, other: &SiteSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn is_disjoint(&self, other: &SiteSet) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    /// Members in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        let cols = self.cols;
        self.bits.ones().map(move |i| Site::new(i / cols, i % cols))
    }
}

/// Atoms that have dropped out of the array since the last reload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossState {
    lost: SiteSet,
}

impl LossState {
    pub fn new(arch: &Architecture) -> Self {
        Self {
            lost: SiteSet::new(arch),
        }
    }

    pub fn from_sites(arch: &Architecture, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let mut state = Self::new(arch);
        for s in sites {
            arch.check(s)?;
            state.lost.insert(s);
        }
        Ok(state)
    }

    pub fn is_lost(&self, s: Site) -> bool {
        self.lost.contains(s)
    }

    /// Marks `s` lost; returns false if it already was.
    pub fn mark_lost(&mut self, s: Site) -> bool {
        self.lost.insert(s)
    }

    pub fn len(&self) -> usize {
        self.lost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lost.is_empty()
    }

    /// A reload restores every atom.
    pub fn clear(&mut self) {
        self.lost.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        self.lost.iter()
    }

    pub fn as_set(&self) -> &SiteSet {
        &self.lost
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(r: usize, c: usize) -> Site {
        Site::new(r, c)
    }

    #[test]
    fn new_grid_validates() {
        let a = Architecture::new_grid(10, 10, 4.0).unwrap();
        assert_eq!(a.n_sites(), 100);
        assert_eq!(a.d_max(), 4.0);
        assert_eq!(Architecture::new_grid(1, 1, 1.0).unwrap().n_sites(), 1);
        for (r, c, d) in [(0, 5, 2.0), (5, 0, 2.0), (3, 3, 0.5), (3, 3, f64::NAN)] {
            assert!(matches!(
                Architecture::new_grid(r, c, d),
                Err(Error::InvalidDimension(_))
            ));
        }
        assert!(Architecture::new_grid(10, 10, 3.0).is_ok());
        assert!(Architecture::new_grid(10, 10, 5.0).is_ok());
    }

    #[test]
    fn distances() {
        assert_eq!(distance(s(0, 0), s(0, 0)), 0.0);
        assert_eq!(distance(s(0, 0), s(3, 4)), 5.0);
        assert_eq!(distance(s(2, 2), s(2, 4)), 2.0);
    }

    #[test]
    fn neighbor_counts() {
        let a = Architecture::new_grid(7, 7, 3.0).unwrap();
        assert_eq!(a.neighbors(s(3, 3), 1.0), vec![s(2, 3), s(3, 2), s(3, 4), s(4, 3)]);
        assert_eq!(a.neighbors(s(3, 3), 2.0).len(), 12);
        assert_eq!(a.neighbors(s(0, 0), 1.0), vec![s(0, 1), s(1, 0)]);
    }

    #[test]
    fn single_qubit_gates_block_nothing() {
        let a = Architecture::new_grid(10, 10, 4.0).unwrap();
        assert!(a.blocked_sites(&[s(5, 5)]).unwrap().is_empty());
    }

    #[test]
    fn zone_of_distance_two_gate() {
        let a = Architecture::new_grid(3, 5, 4.0).unwrap();
        let zone = a.blocked_sites(&[s(0, 0), s(0, 2)]).unwrap();
        let want: BTreeSet<_> = [s(0, 1), s(1, 0), s(1, 2), s(0, 3)].into();
        assert_eq!(zone, want);
        assert!(a.blocked_sites(&[s(0, 0), s(0, 1)]).unwrap().is_empty());
    }

    #[test]
    fn half_spacing_zone_is_empty() {
        let a = Architecture::new_grid(3, 5, 4.0)
            .unwrap()
            .with_restriction(RestrictionRadius::HalfSpacing);
        assert!(a.blocked_sites(&[s(0, 0), s(0, 4)]).unwrap().is_empty());
    }

    #[test]
    fn zone_rejects_out_of_range_gate() {
        let a = Architecture::new_grid(10, 10, 2.0).unwrap();
        let err = a.blocked_sites(&[s(0, 0), s(0, 3)]).unwrap_err();
        assert!(matches!(err, Error::OutOfRangeInteraction { .. }));
    }

    #[test]
    fn paths() {
        let a = Architecture::new_grid(5, 5, 2.0).unwrap();
        let none = a.empty_set();
        assert_eq!(a.shortest_interaction_path(s(1, 1), s(1, 1), 1.0, &none), Some(vec![s(1, 1)]));
        assert_eq!(
            a.shortest_interaction_path(s(0, 0), s(0, 4), 2.0, &none),
            Some(vec![s(0, 0), s(0, 2), s(0, 4)])
        );

        let small = Architecture::new_grid(2, 3, 1.0).unwrap();
        let forbidden = SiteSet::from_sites(&small, [s(0, 1), s(1, 0)]);
        assert_eq!(small.shortest_interaction_path(s(0, 0), s(0, 2), 1.0, &forbidden), None);
    }

    #[test]
    fn path_prefers_row_major_smallest() {
        let a = Architecture::new_grid(3, 3, 1.0).unwrap();
        let p = a.shortest_interaction_path(s(0, 0), s(1, 1), 1.0, &a.empty_set()).unwrap();
        assert_eq!(p, vec![s(0, 0), s(0, 1), s(1, 1)]);
    }

    #[test]
    fn loss_state_basics() {
        let a = Architecture::new_grid(4, 4, 1.0).unwrap();
        let mut loss = LossState::new(&a);
        assert!(loss.mark_lost(s(3, 1)));
        assert!(!loss.mark_lost(s(3, 1)));
        loss.mark_lost(s(0, 2));
        assert_eq!(loss.iter().collect::<Vec<_>>(), vec![s(0, 2), s(3, 1)]);
        loss.clear();
        assert!(loss.is_empty());
        assert!(LossState::from_sites(&a, [s(4, 0)]).is_err());
    }
}
