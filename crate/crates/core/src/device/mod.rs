//! Device model, chain layouts and their scoring, fidelity and duration
//! estimates, and the compilation passes targeting CX or RZX hardware.

mod passes;

pub use passes::{
    cancel_cx_pairs, compile, merge_1q, naive_expand, rewrite_to_rzx, transpile_cx, zyz_angles,
    Pipeline,
};

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::evolution::{trotter_circuit, TrotterPlan};
use crate::noise::{wrap_angle, NoiseSpec, ReadoutError, Relaxation};
use crate::pauli::PauliSum;

pub const DEFAULT_1Q_NS: f64 = 35.0;
pub const DEFAULT_CX_NS: f64 = 300.0;
pub const DEFAULT_CR_FULL_NS: f64 = 230.0;
pub const DEFAULT_RZX_OVERHEAD_NS: f64 = 70.0;

const BUNDLED_H7: &str = include_str!("../../devices/h7.toml");

fn default_1q_ns() -> f64 {
    DEFAULT_1Q_NS
}
fn default_cx_ns() -> f64 {
    DEFAULT_CX_NS
}
fn default_cr_ns() -> f64 {
    DEFAULT_CR_FULL_NS
}
fn default_overhead_ns() -> f64 {
    DEFAULT_RZX_OVERHEAD_NS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitCalibration {
    pub id: usize,
    pub t1_us: f64,
    pub t2_us: f64,
    pub p1_given_0: f64,
    pub p0_given_1: f64,
    pub f1q: f64,
    #[serde(default = "default_1q_ns")]
    pub duration_1q_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCalibration {
    pub a: usize,
    pub b: usize,
    pub f2q: f64,
    #[serde(default = "default_cx_ns")]
    pub cx_ns: f64,
    /// Cross-resonance duration of a full-angle (pi/2) RZX.
    #[serde(default = "default_cr_ns")]
    pub cr_full_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_overhead_ns")]
    pub rzx_overhead_ns: f64,
    pub qubits: Vec<QubitCalibration>,
    pub edges: Vec<EdgeCalibration>,
}

/// Logical-to-physical map: logical qubit `i` sits on physical `layout[i]`.
pub type Layout = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutScore {
    pub layout: Layout,
    /// Estimated error; lower is better.
    pub score: f64,
}

fn in_unit_interval(what: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{what} = {v} is outside (0, 1]"
        )));
    }
    Ok(())
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v <= 0.0 || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{what} = {v} must be positive"
        )));
    }
    Ok(())
}

impl DeviceModel {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let model: DeviceModel = toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Seven-qubit H-shaped device shipped with the crate.
    pub fn bundled_h7() -> Self {
        Self::from_toml_str(BUNDLED_H7).expect("bundled device file is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.qubits.len();
        let ids: BTreeSet<usize> = self.qubits.iter().map(|q| q.id).collect();
        if ids.len() != n || ids.iter().next_back().is_some_and(|&m| m >= n) {
            return Err(Error::InvalidParameter(format!(
                "qubit ids must be exactly 0..{n}"
            )));
        }
        for q in &self.qubits {
            positive("t1_us", q.t1_us)?;
            positive("t2_us", q.t2_us)?;
            if q.t2_us > 2.0 * q.t1_us {
                return Err(Error::InvalidParameter(format!(
                    "qubit {}: T2 exceeds 2 T1",
                    q.id
                )));
            }
            for (what, p) in [("p1_given_0", q.p1_given_0), ("p0_given_1", q.p0_given_1)] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "qubit {}: {what} = {p}",
                        q.id
                    )));
                }
            }
            in_unit_interval("f1q", q.f1q)?;
            positive("duration_1q_ns", q.duration_1q_ns)?;
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            if e.a == e.b || e.a >= n || e.b >= n {
                return Err(Error::InvalidParameter(format!(
                    "invalid edge {}-{}",
                    e.a, e.b
                )));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge {}-{}",
                    e.a, e.b
                )));
            }
            in_unit_interval("f2q", e.f2q)?;
            positive("cx_ns", e.cx_ns)?;
            positive("cr_full_ns", e.cr_full_ns)?;
        }
        if self.rzx_overhead_ns < 0.0 || !self.rzx_overhead_ns.is_finite() {
            return Err(Error::InvalidParameter(
                "rzx_overhead_ns must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, id: usize) -> &QubitCalibration {
        self.qubits
            .iter()
            .find(|q| q.id == id)
            .expect("validated qubit id")
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&EdgeCalibration> {
        self.edges
            .iter()
            .find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    pub fn edge_mut(&mut self, a: usize, b: usize) -> Option<&mut EdgeCalibration> {
        self.edges
            .iter_mut()
            .find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.a == q {
                    Some(e.b)
                } else if e.b == q {
                    Some(e.a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    fn check_layout(&self, layout: &[usize], n_logical: usize) -> Result<()> {
        if layout.len() != n_logical {
            return Err(Error::Dimension {
                expected: n_logical,
                found: layout.len(),
            });
        }
        let distinct: BTreeSet<_> = layout.iter().collect();
        if distinct.len() != layout.len() || layout.iter().any(|&p| p >= self.n_qubits()) {
            return Err(Error::Routing(format!(
                "layout {layout:?} is not an injective map into {} qubits",
                self.n_qubits()
            )));
        }
        Ok(())
    }

    fn mapped_edge(&self, layout: &[usize], gate: &Gate) -> Result<&EdgeCalibration> {
        let (a, b) = (layout[gate.qubits[0]], layout[gate.qubits[1]]);
        self.edge(a, b).ok_or_else(|| {
            Error::Routing(format!(
                "{} on logical ({}, {}) needs physical edge {a}-{b}, which does not exist; \
                 choose a chain-compatible layout",
                gate.kind.name(),
                gate.qubits[0],
                gate.qubits[1]
            ))
        })
    }

    /// Mean single-qubit fidelity over the layout's qubits.
    pub fn mean_f1q(&self, layout: &[usize]) -> f64 {
        layout.iter().map(|&p| self.qubit(p).f1q).sum::<f64>() / layout.len().max(1) as f64
    }

    /// Mean two-qubit fidelity over the device edges inside the layout.
    pub fn mean_f2q(&self, layout: &[usize]) -> f64 {
        let inside: BTreeSet<usize> = layout.iter().copied().collect();
        let fs: Vec<f64> = self
            .edges
            .iter()
            .filter(|e| inside.contains(&e.a) && inside.contains(&e.b))
            .map(|e| e.f2q)
            .collect();
        if fs.is_empty() {
            1.0
        } else {
            fs.iter().sum::<f64>() / fs.len() as f64
        }
    }

    /// Noise model over logical qubits for a layout. A depolarizing channel
    /// with probability `p` on `d` dimensions has average gate fidelity
    /// `1 - p (d - 1) / d`, which fixes `p` from each calibrated fidelity.
    pub fn noise_spec(&self, layout: &[usize]) -> Result<NoiseSpec> {
        self.check_layout(layout, layout.len())?;
        let mut spec = NoiseSpec::default();
        for (logical, &phys) in layout.iter().enumerate() {
            let q = self.qubit(phys);
            spec.depol_1q_per_qubit.insert(logical, 2.0 * (1.0 - q.f1q));
            spec.readout
                .insert(logical, ReadoutError::new(q.p1_given_0, q.p0_given_1));
            spec.relaxation.insert(
                logical,
                Relaxation {
                    t1_us: q.t1_us,
                    t2_us: q.t2_us,
                },
            );
        }
        for i in 0..layout.len() {
            for j in i + 1..layout.len() {
                if let Some(e) = self.edge(layout[i], layout[j]) {
                    spec.depol_2q_per_pair
                        .insert((i, j), 4.0 / 3.0 * (1.0 - e.f2q));
                }
            }
        }
        spec.duration_1q_ns =
            self.qubits.iter().map(|q| q.duration_1q_ns).sum::<f64>() / self.n_qubits() as f64;
        spec.duration_2q_ns = if self.edges.is_empty() {
            DEFAULT_CX_NS
        } else {
            self.edges.iter().map(|e| e.cx_ns).sum::<f64>() / self.edges.len() as f64
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// All simple paths on `k` vertices, each listed once with its first vertex
/// below its last, in lexicographic order.
pub fn enumerate_chain_layouts(device: &DeviceModel, k: usize) -> Result<Vec<Layout>> {
    let n = device.n_qubits();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "chain length {k} must be in 1..={n}"
        )));
    }
    let adjacency: Vec<Vec<usize>> = (0..n).map(|q| device.neighbors(q)).collect();
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(k);
    let mut used = vec![false; n];
    fn extend(
        adjacency: &[Vec<usize>],
        k: usize,
        path: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Layout>,
    ) {
        if path.len() == k {
            if path[0] <= path[k - 1] {
                out.push(path.clone());
            }
            return;
        }
        let last = *path.last().expect("path seeded");
        for &next in &adjacency[last] {
            if !used[next] {
                used[next] = true;
                path.push(next);
                extend(adjacency, k, path, used, out);
                path.pop();
                used[next] = false;
            }
        }
    }
    for start in 0..n {
        used[start] = true;
        path.push(start);
        extend(&adjacency, k, &mut path, &mut used, &mut out);
        path.pop();
        used[start] = false;
    }
    out.sort();
    Ok(out)
}

/// Fidelity `1 - (1 - f) |theta| / (pi/2)` of an RZX whose full-angle
/// fidelity is `f2q_full`.
pub fn scaled_rzx_error(theta: f64, f2q_full: f64) -> f64 {
    1.0 - (1.0 - f2q_full) * theta.abs() / FRAC_PI_2
}

/// Two-qubit cost of a gate in CX equivalents; RZX counts its angle as a
/// fraction of a full-angle pulse.
fn two_qubit_weight(kind: &GateKind) -> f64 {
    match kind {
        GateKind::Cx | GateKind::Cz => 1.0,
        GateKind::Rzx(t) => wrap_angle(*t).abs() / FRAC_PI_2,
        GateKind::Rxx(_) | GateKind::Ryy(_) | GateKind::Rzz(_) => 2.0,
        _ => 3.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateCounts {
    pub n1q: usize,
    pub n2q: usize,
    /// Two-qubit count in CX equivalents.
    pub n2q_effective: f64,
}

pub fn gate_counts(circuit: &Circuit) -> GateCounts {
    let mut counts = GateCounts {
        n1q: 0,
        n2q: 0,
        n2q_effective: 0.0,
    };
    for g in circuit.ops() {
        match g.arity() {
            0 => {}
            1 => counts.n1q += 1,
            _ => {
                counts.n2q += 1;
                counts.n2q_effective += two_qubit_weight(&g.kind);
            }
        }
    }
    counts
}

/// `f1q^N1 * f2q^N2` with `N2` in CX equivalents.
pub fn estimate_fidelity(circuit: &Circuit, f1q: f64, f2q: f64) -> f64 {
    let c = gate_counts(circuit);
    f1q.powi(c.n1q as i32) * f2q.powf(c.n2q_effective)
}

/// `1 - prod(gate fidelities at their mapped locations) *
/// prod(1 - mean readout flip)` over measured qubits.
pub fn score_layout(
    device: &DeviceModel,
    layout: &[usize],
    circuit: &Circuit,
) -> Result<LayoutScore> {
    device.check_layout(layout, circuit.n_qubits())?;
    let mut success = 1.0;
    for g in circuit.ops() {
        success *= match g.arity() {
            0 => 1.0,
            1 => device.qubit(layout[g.qubits[0]]).f1q,
            2 => {
                let f = device.mapped_edge(layout, g)?.f2q;
                match g.kind {
                    GateKind::Rzx(t) => scaled_rzx_error(wrap_angle(t), f),
                    ref k => f.powf(two_qubit_weight(k)),
                }
            }
            k => {
                return Err(Error::Routing(format!(
                    "{k}-qubit gate {} must be decomposed before mapping",
                    g.kind.name()
                )))
            }
        };
    }
    for &q in circuit.measured_qubits() {
        let cal = device.qubit(layout[q]);
        success *= 1.0 - (cal.p1_given_0 + cal.p0_given_1) / 2.0;
    }
    Ok(LayoutScore {
        layout: layout.to_vec(),
        score: 1.0 - success,
    })
}

/// Scores every layout, best first; ties keep enumeration order.
pub fn rank_layouts(
    device: &DeviceModel,
    layouts: &[Layout],
    circuit: &Circuit,
) -> Result<Vec<LayoutScore>> {
    let mut scores = layouts
        .par_iter()
        .map(|l| score_layout(device, l, circuit))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| a.score.total_cmp(&b.score));
    Ok(scores)
}

fn gate_duration(device: &DeviceModel, layout: &[usize], gate: &Gate) -> Result<f64> {
    Ok(match gate.arity() {
        0 => 0.0,
        1 => device.qubit(layout[gate.qubits[0]]).duration_1q_ns,
        2 => {
            let e = device.mapped_edge(layout, gate)?;
            let one_q = device.qubit(layout[gate.qubits[0]]).duration_1q_ns;
            match gate.kind {
                GateKind::Cx | GateKind::Cz => e.cx_ns,
                GateKind::Rzx(t) => {
                    device.rzx_overhead_ns + wrap_angle(t).abs() / FRAC_PI_2 * e.cr_full_ns
                }
                GateKind::Rxx(_) | GateKind::Ryy(_) | GateKind::Rzz(_) => 2.0 * e.cx_ns + one_q,
                _ => 3.0 * e.cx_ns,
            }
        }
        k => {
            return Err(Error::Routing(format!(
                "{k}-qubit gate {} must be decomposed before mapping",
                gate.kind.name()
            )))
        }
    })
}

/// Critical-path length in nanoseconds: each gate starts once all of its
/// qubits are free.
pub fn estimate_duration(circuit: &Circuit, device: &DeviceModel, layout: &[usize]) -> Result<f64> {
    device.check_layout(layout, circuit.n_qubits())?;
    let mut free_at = vec![0.0f64; circuit.n_qubits()];
    for g in circuit.ops() {
        let d = gate_duration(device, layout, g)?;
        let start = g.qubits.iter().map(|&q| free_at[q]).fold(0.0, f64::max);
        for &q in &g.qubits {
            free_at[q] = start + d;
        }
    }
    Ok(free_at.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineRow {
    pub m: usize,
    pub pipeline: Pipeline,
    pub n1q: usize,
    pub n2q: usize,
    pub n2q_effective: f64,
    pub est_fidelity: f64,
    pub est_duration_ns: f64,
    /// Sum of `|theta|` over RZX gates.
    pub rzx_angle_sum: f64,
}

/// Compiles the product-formula circuit for `exp(-i time H)` at each step
/// count with every pipeline and estimates fidelity (layout-averaged
/// calibration) and duration. `m = 0` is the empty circuit.
pub fn fidelity_report(
    h: &PauliSum,
    device: &DeviceModel,
    layout: &[usize],
    steps: &[usize],
    time: f64,
    order: usize,
) -> Result<Vec<PipelineRow>> {
    let f1q = device.mean_f1q(layout);
    let f2q = device.mean_f2q(layout);
    let mut rows = Vec::new();
    for &m in steps {
        let base = if m == 0 {
            Circuit::new(h.n_qubits())
        } else {
            trotter_circuit(h, &TrotterPlan::new(order, m, time)?)?
        };
        for pipeline in Pipeline::ALL {
            let circ = compile(&base, pipeline)?;
            let counts = gate_counts(&circ);
            let rzx_angle_sum = circ
                .ops()
                .iter()
                .filter_map(|g| match g.kind {
                    GateKind::Rzx(t) => Some(wrap_angle(t).abs()),
                    _ => None,
                })
                .fold(0.0, |acc, a| acc + a);
            rows.push(PipelineRow {
                m,
                pipeline,
                n1q: counts.n1q,
                n2q: counts.n2q,
                n2q_effective: counts.n2q_effective,
                est_fidelity: estimate_fidelity(&circ, f1q, f2q),
                est_duration_ns: estimate_duration(&circ, device, layout)?,
                rzx_angle_sum,
            });
        }
    }
    Ok(rows)
}
