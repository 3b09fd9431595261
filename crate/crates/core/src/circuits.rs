//! Circuits in the native neutral-atom gate set and the scalable benchmark
//! generators used throughout the experiments.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    Rx(f64),
    Ry(f64),
    Rz(f64),
    X,
    H,
    Cx,
    Cz,
    Swap,
    Ccx,
    Ccz,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx(_) | GateKind::Ry(_) | GateKind::Rz(_) | GateKind::X | GateKind::H => 1,
            GateKind::Cx | GateKind::Cz | GateKind::Swap => 2,
            GateKind::Ccx | GateKind::Ccz => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx(_) => "rx",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::X => "x",
            GateKind::H => "h",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Ccx => "ccx",
            GateKind::Ccz => "ccz",
        }
    }

    pub fn params(self) -> Vec<f64> {
        match self {
            GateKind::Rx(a) | GateKind::Ry(a) | GateKind::Rz(a) => vec![a],
            _ => Vec::new(),
        }
    }

    pub fn from_parts(name: &str, params: &[f64]) -> Result<Self> {
        let angle = || -> Result<f64> {
            match params {
                [a] => Ok(*a),
                _ => Err(Error::InvalidCircuit(format!(
                    "{name} takes exactly one angle, got {}",
                    params.len()
                ))),
            }
        };
        let plain = |k: GateKind| -> Result<GateKind> {
            if params.is_empty() {
                Ok(k)
            } else {
                Err(Error::InvalidCircuit(format!("{name} takes no parameters")))
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "rx" => Ok(GateKind::Rx(angle()?)),
            "ry" => Ok(GateKind::Ry(angle()?)),
            "rz" => Ok(GateKind::Rz(angle()?)),
            "x" => plain(GateKind::X),
            "h" => plain(GateKind::H),
            "cx" | "cnot" => plain(GateKind::Cx),
            "cz" => plain(GateKind::Cz),
            "swap" => plain(GateKind::Swap),
            "ccx" | "toffoli" => plain(GateKind::Ccx),
            "ccz" => plain(GateKind::Ccz),
            other => Err(Error::InvalidCircuit(format!(
                "gate '{other}' is not in the native gate set"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidCircuit(format!(
                "{} acts on {} qubits, got {:?}",
                kind.name(),
                kind.arity(),
                qubits
            )));
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[i + 1..].contains(q) {
                return Err(Error::InvalidCircuit(format!(
                    "{} repeats qubit {q}",
                    kind.name()
                )));
            }
        }
        Ok(Self { kind, qubits })
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    fn one(kind: GateKind, q: usize) -> Self {
        Self { kind, qubits: vec![q] }
    }

    fn two(kind: GateKind, a: usize, b: usize) -> Self {
        Self { kind, qubits: vec![a, b] }
    }

    fn three(kind: GateKind, a: usize, b: usize, c: usize) -> Self {
        Self { kind, qubits: vec![a, b, c] }
    }
}

/// A hardware-agnostic program: gates in order, then a final measurement of
/// the qubits in `measured`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    measured: BTreeSet<usize>,
}

impl Circuit {
    /// A circuit that measures every qubit.
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        Self::with_measured(n_qubits, gates, (0..n_qubits).collect())
    }

    pub fn with_measured(n_qubits: usize, gates: Vec<Gate>, measured: BTreeSet<usize>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidCircuit("circuit has no qubits".into()));
        }
        for (i, g) in gates.iter().enumerate() {
            if g.qubits.len() != g.kind.arity() {
                return Err(Error::InvalidCircuit(format!("gate {i} has the wrong arity")));
            }
            if let Some(q) = g.qubits.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::InvalidCircuit(format!(
                    "gate {i} uses qubit {q} but the circuit has {n_qubits}"
                )));
            }
            Gate::new(g.kind, g.qubits.clone())?;
        }
        if let Some(q) = measured.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::InvalidCircuit(format!("measured qubit {q} out of range")));
        }
        Ok(Self {
            n_qubits,
            gates,
            measured,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn measured(&self) -> &BTreeSet<usize> {
        &self.measured
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.arity() >= 2).count()
    }

    /// Per-qubit count of multi-qubit gates it takes part in.
    pub fn interaction_degree(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_qubits];
        for g in self.gates.iter().filter(|g| g.arity() >= 2) {
            for &q in &g.qubits {
                deg[q] += 1;
            }
        }
        deg
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CircuitJson::from(self)).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CircuitJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidCircuit(e.to_string()))?;
        raw.try_into()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GateJson {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default)]
    params: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CircuitJson {
    n_qubits: usize,
    gates: Vec<GateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    measured: Option<Vec<usize>>,
}

impl From<&Circuit> for CircuitJson {
    fn from(c: &Circuit) -> Self {
        CircuitJson {
            n_qubits: c.n_qubits,
            gates: c
                .gates
                .iter()
                .map(|g| GateJson {
                    kind: g.kind.name().to_string(),
                    qubits: g.qubits.clone(),
                    params: g.kind.params(),
                })
                .collect(),
            measured: Some(c.measured.iter().copied().collect()),
        }
    }
}

impl TryFrom<CircuitJson> for Circuit {
    type Error = Error;

    fn try_from(raw: CircuitJson) -> Result<Self> {
        let gates = raw
            .gates
            .into_iter()
            .map(|g| Gate::new(GateKind::from_parts(&g.kind, &g.params)?, g.qubits))
            .collect::<Result<Vec<_>>>()?;
        let measured = match raw.measured {
            Some(m) => m.into_iter().collect(),
            None => (0..raw.n_qubits).collect(),
        };
        Circuit::with_measured(raw.n_qubits, gates, measured)
    }
}

/// Log-depth generalized Toffoli on `n_controls` controls.
///
/// Qubit layout: controls `0..n`, scratch `n..2n-1`, target `2n-1`. Controls
/// are ANDed pairwise into fresh scratch qubits level by level (an odd one
/// out is carried to the next level) until one scratch qubit holds the
/// conjunction, which is copied onto the target; the tree is then undone in
/// reverse.
pub fn cnu(n_controls: usize) -> Result<Circuit> {
    if n_controls < 2 {
        return Err(Error::InvalidSize(format!(
            "generalized Toffoli needs at least 2 controls, got {n_controls}"
        )));
    }
    let target = 2 * n_controls - 1;
    let mut next_scratch = n_controls;
    let mut level: Vec<usize> = (0..n_controls).collect();
    let mut forward = Vec::new();
    while level.len() > 1 {
        let mut up = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            match *pair {
                [a, b] => {
                    forward.push(Gate::three(GateKind::Ccx, a, b, next_scratch));
                    up.push(next_scratch);
                    next_scratch += 1;
                }
                [a] => up.push(a),
                _ => unreachable!(),
            }
        }
        level = up;
    }
    debug_assert_eq!(next_scratch, target);
    let mut gates = forward.clone();
    gates.push(Gate::two(GateKind::Cx, level[0], target));
    gates.extend(forward.into_iter().rev());
    Circuit::new(2 * n_controls, gates)
}

/// Largest generalized Toffoli that fits in `total` qubits.
pub fn cnu_total(total: usize) -> Result<Circuit> {
    if total < 4 {
        return Err(Error::InvalidSize(format!(
            "generalized Toffoli needs at least 4 qubits, got {total}"
        )));
    }
    cnu(total / 2)
}

/// Ripple-carry adder of two `n_bits` registers.
///
/// Layout: carry-in `0`, then `b_i = 1 + 2i` and `a_i = 2 + 2i`, carry-out
/// last. The sum is written into the `b` register.
pub fn cuccaro(n_bits: usize) -> Result<Circuit> {
    if n_bits < 1 {
        return Err(Error::InvalidSize("adder needs at least one bit".into()));
    }
    let b = |i: usize| 1 + 2 * i;
    let a = |i: usize| 2 + 2 * i;
    let carry_out = 2 * n_bits + 1;
    let mut gates = Vec::with_capacity(6 * n_bits + 1);

    let maj = |gates: &mut Vec<Gate>, c: usize, b: usize, a: usize| {
        gates.push(Gate::two(GateKind::Cx, a, b));
        gates.push(Gate::two(GateKind::Cx, a, c));
        gates.push(Gate::three(GateKind::Ccx, c, b, a));
    };
    let uma = |gates: &mut Vec<Gate>, c: usize, b: usize, a: usize| {
        gates.push(Gate::three(GateKind::Ccx, c, b, a));
        gates.push(Gate::two(GateKind::Cx, a, c));
        gates.push(Gate::two(GateKind::Cx, c, b));
    };

    let carry_into = |i: usize| if i == 0 { 0 } else { a(i - 1) };
    for i in 0..n_bits {
        maj(&mut gates, carry_into(i), b(i), a(i));
    }
    gates.push(Gate::two(GateKind::Cx, a(n_bits - 1), carry_out));
    for i in (0..n_bits).rev() {
        uma(&mut gates, carry_into(i), b(i), a(i));
    }
    Circuit::new(2 * n_bits + 2, gates)
}

/// Adder occupying `total` qubits (`2N + 2`, rounded down to even).
pub fn cuccaro_total(total: usize) -> Result<Circuit> {
    if total < 4 {
        return Err(Error::InvalidSize(format!(
            "adder needs at least 4 qubits, got {total}"
        )));
    }
    cuccaro((total - 2) / 2)
}

fn angle(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0.0..TAU)
}

/// One QAOA layer over an Erdős–Rényi graph with edge probability `density`.
pub fn qaoa(n: usize, density: f64, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("QAOA needs at least 2 qubits, got {n}")));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidSize(format!("edge density {density} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < density {
                edges.push((u, v));
            }
        }
    }
    let gamma = angle(&mut rng);
    let beta = angle(&mut rng);
    let mut gates: Vec<Gate> = (0..n).map(|q| Gate::one(GateKind::H, q)).collect();
    for (u, v) in edges {
        gates.push(Gate::two(GateKind::Cx, u, v));
        gates.push(Gate::one(GateKind::Rz(gamma), v));
        gates.push(Gate::two(GateKind::Cx, u, v));
    }
    gates.extend((0..n).map(|q| Gate::one(GateKind::Rx(beta), q)));
    Circuit::new(n, gates)
}

/// One iteration of a linearly entangled variational ansatz.
pub fn linear_vqe(n: usize, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("VQE needs at least 2 qubits, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::with_capacity(4 * n);
    for q in 0..n {
        gates.push(Gate::one(GateKind::Ry(angle(&mut rng)), q));
        gates.push(Gate::one(GateKind::Rz(angle(&mut rng)), q));
    }
    for q in 0..n - 1 {
        gates.push(Gate::two(GateKind::Cx, q, q + 1));
    }
    for q in 0..n {
        gates.push(Gate::one(GateKind::Ry(angle(&mut rng)), q));
    }
    Circuit::new(n, gates)
}

/// The benchmark families, addressed by total qubit count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkKind {
    Cnu,
    Cuccaro,
    Qaoa,
    LinearVqe,
}

pub const QAOA_DENSITY: f64 = 0.2;

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 4] = [
        BenchmarkKind::Cnu,
        BenchmarkKind::Cuccaro,
        BenchmarkKind::Qaoa,
        BenchmarkKind::LinearVqe,
    ];

    pub fn generate(self, total_qubits: usize, seed: u64) -> Result<Circuit> {
        match self {
            BenchmarkKind::Cnu => cnu_total(total_qubits),
            BenchmarkKind::Cuccaro => cuccaro_total(total_qubits),
            BenchmarkKind::Qaoa => qaoa(total_qubits, QAOA_DENSITY, seed),
            BenchmarkKind::LinearVqe => linear_vqe(total_qubits, seed),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BenchmarkKind::Cnu => "cnu",
            BenchmarkKind::Cuccaro => "cuccaro",
            BenchmarkKind::Qaoa => "qaoa",
            BenchmarkKind::LinearVqe => "linear-vqe",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cnu" | "toffoli" => Ok(BenchmarkKind::Cnu),
            "cuccaro" | "adder" => Ok(BenchmarkKind::Cuccaro),
            "qaoa" => Ok(BenchmarkKind::Qaoa),
            "linear-vqe" | "vqe" => Ok(BenchmarkKind::LinearVqe),
            other => Err(Error::InvalidSize(format!("unknown benchmark kind '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(c: &Circuit) -> Vec<(&'static str, Vec<usize>)> {
        c.gates().iter().map(|g| (g.kind.name(), g.qubits.clone())).collect()
    }

    /// Number of CCX layers when gates are packed ASAP on disjoint qubits.
    fn ccx_depth(c: &Circuit) -> usize {
        let mut ready = vec![0usize; c.n_qubits()];
        let mut depth = 0;
        for g in c.gates() {
            let start = g.qubits.iter().map(|&q| ready[q]).max().unwrap();
            let end = start + 1;
            for &q in &g.qubits {
                ready[q] = end;
            }
            depth = depth.max(end);
        }
        depth
    }

    #[test]
    fn cnu_two_controls() {
        let c = cnu(2).unwrap();
        assert_eq!(c.n_qubits(), 4);
        assert_eq!(
            kinds(&c),
            vec![("ccx", vec![0, 1, 2]), ("cx", vec![2, 3]), ("ccx", vec![0, 1, 2])]
        );
    }

    #[test]
    fn cnu_four_controls_depth() {
        let c = cnu(4).unwrap();
        assert_eq!(c.n_qubits(), 8);
        // two forward levels, the apex copy, two uncompute levels
        assert_eq!(ccx_depth(&c), 2 * 2 + 1);
        assert_eq!(c.gates().iter().filter(|g| g.kind == GateKind::Ccx).count(), 6);
    }

    #[test]
    fn cnu_sizes() {
        for n in 2..40 {
            assert_eq!(cnu(n).unwrap().n_qubits(), 2 * n);
        }
        assert!(matches!(cnu(1), Err(Error::InvalidSize(_))));
        assert_eq!(cnu_total(30).unwrap().n_qubits(), 30);
        assert!(cnu_total(3).is_err());
    }

    #[test]
    fn cuccaro_one_bit_matches_hand_construction() {
        let c = cuccaro(1).unwrap();
        assert_eq!(c.n_qubits(), 4);
        assert_eq!(
            kinds(&c),
            vec![
                ("cx", vec![2, 1]),
                ("cx", vec![2, 0]),
                ("ccx", vec![0, 1, 2]),
                ("cx", vec![2, 3]),
                ("ccx", vec![0, 1, 2]),
                ("cx", vec![2, 0]),
                ("cx", vec![0, 1]),
            ]
        );
    }

    #[test]
    fn cuccaro_sizes() {
        assert_eq!(cuccaro(4).unwrap().n_qubits(), 10);
        assert_eq!(cuccaro_total(10).unwrap().n_qubits(), 10);
        assert!(cuccaro(0).is_err());
    }

    #[test]
    fn qaoa_extremes() {
        let empty = qaoa(6, 0.0, 3).unwrap();
        assert_eq!(empty.two_qubit_count(), 0);
        let full = qaoa(3, 1.0, 3).unwrap();
        assert_eq!(full.two_qubit_count(), 6);
        let edge_layer = full.gates().len() - 2 * 3;
        assert_eq!(edge_layer, 9);
        assert!(qaoa(1, 0.2, 0).is_err());
        assert!(qaoa(4, 1.5, 0).is_err());
    }

    #[test]
    fn qaoa_is_seeded() {
        assert_eq!(qaoa(12, 0.2, 7).unwrap(), qaoa(12, 0.2, 7).unwrap());
    }

    #[test]
    fn vqe_chain() {
        assert_eq!(linear_vqe(2, 0).unwrap().two_qubit_count(), 1);
        let c = linear_vqe(10, 1).unwrap();
        let cx: Vec<_> = c.gates().iter().filter(|g| g.arity() == 2).map(|g| g.qubits.clone()).collect();
        assert_eq!(cx.len(), 9);
        for (i, q) in cx.iter().enumerate() {
            assert_eq!(q, &vec![i, i + 1]);
        }
    }

    #[test]
    fn json_round_trip() {
        let c = qaoa(8, 0.5, 11).unwrap();
        let back = Circuit::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn json_rejects_bad_gates() {
        let bad = r#"{"n_qubits": 2, "gates": [{"kind": "cccx", "qubits": [0, 1]}]}"#;
        assert!(Circuit::from_json(bad).is_err());
        let bad = r#"{"n_qubits": 2, "gates": [{"kind": "cx", "qubits": [0, 2]}]}"#;
        assert!(Circuit::from_json(bad).is_err());
        let ok = r#"{"n_qubits": 2, "gates": [{"kind": "cx", "qubits": [0, 1]}]}"#;
        assert_eq!(Circuit::from_json(ok).unwrap().measured().len(), 2);
    }

    #[test]
    fn benchmark_names() {
        assert_eq!("linear-vqe".parse::<BenchmarkKind>().unwrap(), BenchmarkKind::LinearVqe);
        assert!("grover".parse::<BenchmarkKind>().is_err());
        for k in BenchmarkKind::ALL {
            assert_eq!(k.label().parse::<BenchmarkKind>().unwrap(), k);
        }
    }
}
