#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use atomloss::arch::{Architecture, LossState, Site, SiteSet};
use atomloss::circuits::{Circuit, Gate, GateKind};
use atomloss::compiler::{route_and_schedule, CompiledCircuit, Mapping, OpOrigin, Region};
use atomloss::timing::GateDurations;

pub fn site(r: usize, c: usize) -> Site {
    Site::new(r, c)
}

fn d2(a: Site, b: Site) -> f64 {
    let dr = a.row as f64 - b.row as f64;
    let dc = a.col as f64 - b.col as f64;
    dr * dr + dc * dc
}

pub fn dist(a: Site, b: Site) -> f64 {
    d2(a, b).sqrt()
}

pub fn all_sites(rows: usize, cols: usize) -> Vec<Site> {
    (0..rows).flat_map(|r| (0..cols).map(move |c| site(r, c))).collect()
}

/// Brute-force neighbour list: every other site within `d`.
fn hops(rows: usize, cols: usize, s: Site, d: f64) -> Vec<Site> {
    all_sites(rows, cols)
        .into_iter()
        .filter(|&t| t != s && d2(s, t) <= d * d + 1e-9)
        .collect()
}

/// Hop distance from every site to `dst`, avoiding `forbidden`.
pub fn hop_distances(rows: usize, cols: usize, dst: Site, d: f64, forbidden: &[Site]) -> HashMap<Site, usize> {
    let mut dist = HashMap::new();
    if forbidden.contains(&dst) {
        return dist;
    }
    dist.insert(dst, 0);
    let mut queue = VecDeque::from([dst]);
    while let Some(cur) = queue.pop_front() {
        let k = dist[&cur];
        for n in hops(rows, cols, cur, d) {
            if !forbidden.contains(&n) && !dist.contains_key(&n) {
                dist.insert(n, k + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Shortest path by hop count, breaking ties by taking the row-major
/// smallest site at every position. The source itself may be forbidden.
pub fn oracle_path(rows: usize, cols: usize, src: Site, dst: Site, d: f64, forbidden: &[Site]) -> Option<Vec<Site>> {
    let dist = hop_distances(rows, cols, dst, d, forbidden);
    oracle_path_with(rows, cols, src, dst, d, &dist)
}

/// As `oracle_path`, reusing distances from `hop_distances`.
pub fn oracle_path_with(
    rows: usize,
    cols: usize,
    src: Site,
    dst: Site,
    d: f64,
    dist: &HashMap<Site, usize>,
) -> Option<Vec<Site>> {
    if !dist.contains_key(&dst) {
        return None;
    }
    let mut remaining = if src == dst {
        0
    } else {
        hops(rows, cols, src, d).iter().filter_map(|n| dist.get(n)).min()? + 1
    };
    let mut path = vec![src];
    let mut cur = src;
    while remaining > 0 {
        remaining -= 1;
        cur = hops(rows, cols, cur, d)
            .into_iter()
            .filter(|n| dist.get(n) == Some(&remaining))
            .min()?;
        path.push(cur);
    }
    Some(path)
}

/// Structural checks of a schedule, replayed independently of the library.
pub fn check_schedule(cc: &CompiledCircuit, arch: &Architecture, loss: &LossState, range: f64) -> Result<(), String> {
    let gates = cc.source().gates();
    let region = cc.region();
    let init = cc.initial_mapping().sites().to_vec();
    let mut seen = init.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != init.len() {
        return Err("initial mapping is not injective".into());
    }
    let mut occ: HashMap<Site, usize> = init.iter().enumerate().map(|(q, &s)| (s, q)).collect();
    let mut done = vec![false; gates.len()];
    let mut per_qubit: Vec<Vec<usize>> = vec![Vec::new(); cc.source().n_qubits()];
    for step in cc.steps() {
        for op in &step.ops {
            for &s in &op.sites {
                if s.row >= arch.rows() || s.col >= arch.cols() {
                    return Err(format!("{s} off the array"));
                }
                if loss.is_lost(s) {
                    return Err(format!("{s} is lost"));
                }
                if !region.contains(s) {
                    return Err(format!("{s} outside the region"));
                }
            }
            for (i, a) in op.sites.iter().enumerate() {
                for b in &op.sites[i + 1..] {
                    if dist(*a, *b) > range + 1e-9 {
                        return Err(format!("{a}-{b} exceeds range {range}"));
                    }
                }
            }
        }
        // restriction zones: radius is half the gate's largest separation
        for (i, a) in step.ops.iter().enumerate() {
            let span = a
                .sites
                .iter()
                .flat_map(|x| a.sites.iter().map(move |y| dist(*x, *y)))
                .fold(0.0, f64::max);
            let radius = if a.sites.len() < 2 { 0.5 } else { span / 2.0 };
            for (j, b) in step.ops.iter().enumerate() {
                if i == j {
                    continue;
                }
                for t in &b.sites {
                    if a.sites.contains(t) {
                        return Err(format!("{t} used twice in one step"));
                    }
                    if a.sites.iter().any(|g| dist(*g, *t) <= radius + 1e-9) {
                        return Err(format!("{t} inside a restriction zone"));
                    }
                }
            }
        }
        for op in &step.ops {
            if let OpOrigin::Source(i) = op.origin {
                if std::mem::replace(&mut done[i], true) {
                    return Err(format!("gate {i} twice"));
                }
                for (k, &q) in gates[i].qubits.iter().enumerate() {
                    if occ.get(&op.sites[k]) != Some(&q) {
                        return Err(format!("gate {i} sees the wrong qubit at {}", op.sites[k]));
                    }
                    per_qubit[q].push(i);
                }
            }
        }
        for op in &step.ops {
            if op.kind == GateKind::Swap {
                let (a, b) = (op.sites[0], op.sites[1]);
                let qa = occ.remove(&a);
                let qb = occ.remove(&b);
                if let Some(q) = qa {
                    occ.insert(b, q);
                }
                if let Some(q) = qb {
                    occ.insert(a, q);
                }
            }
        }
    }
    if let Some(i) = done.iter().position(|d| !d) {
        return Err(format!("gate {i} missing"));
    }
    for (q, order) in per_qubit.iter().enumerate() {
        let expected: Vec<usize> = (0..gates.len()).filter(|&i| gates[i].qubits.contains(&q)).collect();
        if *order != expected {
            return Err(format!("qubit {q} gate order changed"));
        }
    }
    Ok(())
}

/// One single-qubit gate per qubit: a circuit that never needs routing.
pub fn idle_circuit(n: usize) -> Circuit {
    Circuit::new(n, (0..n).map(|q| Gate::new(GateKind::H, vec![q]).unwrap()).collect()).unwrap()
}

/// `circuit` placed verbatim on `sites` over the whole array.
pub fn placed(arch: &Architecture, circuit: Circuit, sites: Vec<Site>) -> CompiledCircuit {
    route_and_schedule(
        Arc::new(circuit),
        Mapping::new(sites).unwrap(),
        arch,
        Region::whole(arch),
        arch.d_max(),
        &LossState::new(arch),
        &GateDurations::default(),
    )
    .unwrap()
}

pub fn set_of(arch: &Architecture, sites: impl IntoIterator<Item = Site>) -> SiteSet {
    SiteSet::from_sites(arch, sites)
}

/// A random compile problem: grid, range, circuit, lost atoms and region.
pub struct Instance {
    pub arch: Architecture,
    pub circuit: Arc<Circuit>,
    pub loss: LossState,
    pub region: Region,
}

pub fn fuzz_instance(seed: u64) -> Instance {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.gen_range(2..=8);
    let cols = rng.gen_range(2..=8);
    let d = *[1.0, std::f64::consts::SQRT_2, 2.0, 3.0].choose(&mut rng).unwrap();
    let arch = Architecture::new_grid(rows, cols, d).unwrap();
    let h = rng.gen_range(1..=rows);
    let w = rng.gen_range(1..=cols);
    let origin = site(rng.gen_range(0..=rows - h), rng.gen_range(0..=cols - w));
    let region = Region::new(&arch, origin, h, w).unwrap();
    let mut lost = Vec::new();
    for s in all_sites(rows, cols) {
        if rng.gen_bool(0.12) {
            lost.push(s);
        }
    }
    let loss = LossState::from_sites(&arch, lost).unwrap();
    let n = rng.gen_range(1..=(h * w).clamp(1, 12));
    let max_arity = if d >= std::f64::consts::SQRT_2 { 3 } else { 2 }.min(n);
    let mut gates = Vec::new();
    for _ in 0..rng.gen_range(0..=30) {
        let arity = rng.gen_range(1..=max_arity);
        let mut qubits: Vec<usize> = (0..n).collect();
        qubits.shuffle(&mut rng);
        qubits.truncate(arity);
        let kind = match arity {
            1 => *[GateKind::H, GateKind::X, GateKind::Rz(0.3)].choose(&mut rng).unwrap(),
            2 => *[GateKind::Cx, GateKind::Cz].choose(&mut rng).unwrap(),
            _ => *[GateKind::Ccx, GateKind::Ccz].choose(&mut rng).unwrap(),
        };
        gates.push(Gate::new(kind, qubits).unwrap());
    }
    Instance {
        arch,
        circuit: Arc::new(Circuit::new(n, gates).unwrap()),
        loss,
        region,
    }
}
