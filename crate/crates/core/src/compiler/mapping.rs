use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::arch::{distance, Architecture, LossState, Site};
use crate::circuits::Circuit;
use crate::error::{Error, Result};

/// Injective assignment of program qubits to sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    sites: Vec<Site>,
}

impl Mapping {
    pub fn new(sites: Vec<Site>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(sites.len());
        for (q, s) in sites.iter().enumerate() {
            if !seen.insert(*s) {
                return Err(Error::InvalidConfig(format!(
                    "mapping puts qubit {q} on already occupied site {s}"
                )));
            }
        }
        Ok(Self { sites })
    }

    pub fn site(&self, qubit: usize) -> Site {
        self.sites[qubit]
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn qubit_at(&self, s: Site) -> Option<usize> {
        self.sites.iter().position(|&t| t == s)
    }

    pub(crate) fn occupancy(&self) -> HashMap<Site, usize> {
        self.sites.iter().enumerate().map(|(q, &s)| (s, q)).collect()
    }
}

/// Rectangular part of the array a circuit is confined to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub origin: Site,
    pub height: usize,
    pub width: usize,
}

impl Region {
    pub fn new(arch: &Architecture, origin: Site, height: usize, width: usize) -> Result<Self> {
        if height == 0
            || width == 0
            || origin.row + height > arch.rows()
            || origin.col + width > arch.cols()
        {
            return Err(Error::InvalidConfig(format!(
                "region {height}x{width} at {origin} does not fit a {}x{} array",
                arch.rows(),
                arch.cols()
            )));
        }
        Ok(Self {
            origin,
            height,
            width,
        })
    }

    pub fn whole(arch: &Architecture) -> Self {
        Self {
            origin: Site::new(0, 0),
            height: arch.rows(),
            width: arch.cols(),
        }
    }

    pub fn contains(&self, s: Site) -> bool {
        s.row >= self.origin.row
            && s.col >= self.origin.col
            && s.row < self.origin.row + self.height
            && s.col < self.origin.col + self.width
    }

    pub fn overlaps(&self, other: &Region) -> bool {
        self.origin.row < other.origin.row + other.height
            && other.origin.row < self.origin.row + self.height
            && self.origin.col < other.origin.col + other.width
            && other.origin.col < self.origin.col + self.width
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }

    /// Sites of the region in row-major order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.height).flat_map(move |r| {
            (0..self.width).map(move |c| Site::new(self.origin.row + r, self.origin.col + c))
        })
    }

    /// Geometric centre in lattice coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            self.origin.row as f64 + (self.height as f64 - 1.0) / 2.0,
            self.origin.col as f64 + (self.width as f64 - 1.0) / 2.0,
        )
    }
}

fn center_distance(s: Site, center: (f64, f64)) -> f64 {
    let dr = s.row as f64 - center.0;
    let dc = s.col as f64 - center.1;
    (dr * dr + dc * dc).sqrt()
}

/// Pairwise interaction weights: how many multi-qubit gates share two qubits.
pub(crate) struct InteractionGraph {
    weights: Vec<HashMap<usize, usize>>,
    degree: Vec<usize>,
}

impl InteractionGraph {
    pub(crate) fn of(c: &Circuit) -> Self {
        let n = c.n_qubits();
        let mut weights = vec![HashMap::new(); n];
        for g in c.gates().iter().filter(|g| g.arity() >= 2) {
            for (i, &a) in g.qubits.iter().enumerate() {
                for &b in &g.qubits[i + 1..] {
                    *weights[a].entry(b).or_insert(0) += 1;
                    *weights[b].entry(a).or_insert(0) += 1;
                }
            }
        }
        Self {
            weights,
            degree: c.interaction_degree(),
        }
    }

    /// Placement order: the busiest qubit first, then repeatedly the qubit
    /// most strongly tied to those already placed.
    fn placement_order(&self) -> Vec<usize> {
        let n = self.degree.len();
        let mut placed = vec![false; n];
        let mut tie = vec![0usize; n];
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let next = (0..n)
                .filter(|&q| !placed[q])
                .max_by(|&a, &b| {
                    (tie[a], self.degree[a])
                        .cmp(&(tie[b], self.degree[b]))
                        .then(b.cmp(&a))
                })
                .expect("unplaced qubit remains");
            placed[next] = true;
            order.push(next);
            for (&p, &w) in &self.weights[next] {
                tie[p] += w;
            }
        }
        order
    }
}

/// Score of a candidate layout; smaller is better.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct LayoutCost {
    hops: usize,
    spread: f64,
}

fn layout_cost(c: &Circuit, sites: &[Site], d_eff: f64) -> LayoutCost {
    let mut hops = 0;
    let mut spread = 0.0;
    for g in c.gates().iter().filter(|g| g.arity() >= 2) {
        for (i, &a) in g.qubits.iter().enumerate() {
            for &b in &g.qubits[i + 1..] {
                let d = distance(sites[a], sites[b]);
                spread += d;
                hops += ((d / d_eff - 1e-9).ceil() as usize).saturating_sub(1);
            }
        }
    }
    LayoutCost { hops, spread }
}

/// Result of the placement heuristic plus the work it did.
pub struct Placement {
    pub mapping: Mapping,
    pub site_evaluations: usize,
}

/// Greedy, interaction-aware initial placement.
///
/// Qubits are placed one at a time, each at the free usable site minimising
/// the weighted distance to its already-placed partners (then distance to
/// the region centre, then row-major). The first qubit is tried at every
/// usable site, nearest the centre first, and the layout needing the fewest
/// routing hops at range `d_eff` wins.
pub fn map_circuit(
    c: &Circuit,
    arch: &Architecture,
    region: &Region,
    loss: &LossState,
    d_eff: f64,
) -> Result<Placement> {
    let n = c.n_qubits();
    let center = region.center();
    let mut usable: Vec<Site> = region
        .sites()
        .filter(|&s| arch.contains(s) && !loss.is_lost(s))
        .collect();
    if usable.len() < n {
        return Err(Error::InsufficientAtoms {
            needed: n,
            available: usable.len(),
        });
    }
    usable.sort_by(|a, b| {
        center_distance(*a, center)
            .total_cmp(&center_distance(*b, center))
            .then(a.cmp(b))
    });

    let graph = InteractionGraph::of(c);
    let order = graph.placement_order();
    let mut evaluations = 0;
    let mut best: Option<(LayoutCost, Vec<Site>)> = None;

    for &start in &usable {
        let mut pos: Vec<Option<Site>> = vec![None; n];
        let mut taken = vec![false; usable.len()];
        let start_idx = usable.iter().position(|&s| s == start).unwrap();
        taken[start_idx] = true;
        pos[order[0]] = Some(start);

        for &q in &order[1..] {
            let partners: Vec<(Site, usize)> = graph.weights[q]
                .iter()
                .filter_map(|(&p, &w)| pos[p].map(|s| (s, w)))
                .collect();
            let mut choice: Option<(f64, usize)> = None;
            // `usable` is already ordered by centre distance then row-major,
            // so the first strict minimum carries the tie-breaks.
            for (i, &s) in usable.iter().enumerate() {
                if taken[i] {
                    continue;
                }
                evaluations += 1;
                let cost: f64 = partners.iter().map(|&(p, w)| w as f64 * distance(s, p)).sum();
                if choice.is_none_or(|(best_cost, _)| cost < best_cost - 1e-12) {
                    choice = Some((cost, i));
                }
            }
            let (_, i) = choice.expect("enough usable sites");
            taken[i] = true;
            pos[q] = Some(usable[i]);
        }

        let sites: Vec<Site> = pos.into_iter().map(|s| s.unwrap()).collect();
        let cost = layout_cost(c, &sites, d_eff);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, sites));
        }
        if best.as_ref().is_some_and(|(b, _)| b.hops == 0 && n == 1) {
            break;
        }
    }

    let (_, sites) = best.expect("at least one usable start");
    Ok(Placement {
        mapping: Mapping::new(sites)?,
        site_evaluations: evaluations,
    })
}
