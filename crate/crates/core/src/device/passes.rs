use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::Result;
use crate::linalg::CMatrix;
use crate::noise::wrap_angle;

/// Single-qubit gates addressed as 0 (first qubit) or 1 (second).
type OneQubitList = Vec<(GateKind, usize)>;

/// Rotation angles below this are treated as zero.
const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Two-CX template for every two-qubit rotation, no optimization.
    Naive,
    /// RXX-RYY pairs fused into one two-CX block, then 1q merging and CX
    /// cancellation.
    Transpiled,
    /// One RZX per two-qubit rotation, then 1q merging.
    Rzx,
}

impl Pipeline {
    pub const ALL: [Pipeline; 3] = [Pipeline::Naive, Pipeline::Transpiled, Pipeline::Rzx];

    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::Naive => "naive",
            Pipeline::Transpiled => "transpiled",
            Pipeline::Rzx => "rzx",
        }
    }
}

pub fn compile(circuit: &Circuit, pipeline: Pipeline) -> Result<Circuit> {
    match pipeline {
        Pipeline::Naive => naive_expand(circuit),
        Pipeline::Transpiled => transpile_cx(circuit),
        Pipeline::Rzx => merge_1q(&rewrite_to_rzx(circuit)?),
    }
}

fn copy_header(circuit: &Circuit) -> Result<Circuit> {
    let mut out = Circuit::new(circuit.n_qubits());
    out.measure(circuit.measured_qubits())?;
    Ok(out)
}

fn push(out: &mut Circuit, kind: GateKind, qubits: &[usize]) -> Result<()> {
    out.add(kind, qubits)?;
    Ok(())
}

/// Emits `pre`, then `core` on `(a, b)`, then `post`, where the 1q lists
/// name their qubit as 0 for `a` and 1 for `b`.
fn conjugated(
    out: &mut Circuit,
    pre: &[(GateKind, usize)],
    core: &[(GateKind, [usize; 2])],
    post: &[(GateKind, usize)],
    a: usize,
    b: usize,
) -> Result<()> {
    let pick = |i: usize| if i == 0 { a } else { b };
    for (k, q) in pre {
        push(out, k.clone(), &[pick(*q)])?;
    }
    for (k, [x, y]) in core {
        if k.arity() == 1 {
            push(out, k.clone(), &[pick(*x)])?;
        } else {
            push(out, k.clone(), &[pick(*x), pick(*y)])?;
        }
    }
    for (k, q) in post {
        push(out, k.clone(), &[pick(*q)])?;
    }
    Ok(())
}

fn zz_core(theta: f64) -> Vec<(GateKind, [usize; 2])> {
    vec![
        (GateKind::Cx, [0, 1]),
        (GateKind::Rz(theta), [1, 1]),
        (GateKind::Cx, [0, 1]),
    ]
}

/// Expands RXX, RYY, RZZ and RZX into the CX-RZ-CX template with basis
/// changes on both qubits.
pub fn naive_expand(circuit: &Circuit) -> Result<Circuit> {
    use GateKind::*;
    let mut out = copy_header(circuit)?;
    for g in circuit.ops() {
        let (a, b) = match g.qubits.as_slice() {
            [a, b] => (*a, *b),
            _ => (0, 0),
        };
        match g.kind {
            Rxx(t) => conjugated(
                &mut out,
                &[(H, 0), (H, 1)],
                &zz_core(t),
                &[(H, 0), (H, 1)],
                a,
                b,
            )?,
            Ryy(t) => conjugated(
                &mut out,
                &[(Rx(FRAC_PI_2), 0), (Rx(FRAC_PI_2), 1)],
                &zz_core(t),
                &[(Rx(-FRAC_PI_2), 0), (Rx(-FRAC_PI_2), 1)],
                a,
                b,
            )?,
            Rzz(t) => conjugated(&mut out, &[], &zz_core(t), &[], a, b)?,
            Rzx(t) => conjugated(&mut out, &[(H, 1)], &zz_core(t), &[(H, 1)], a, b)?,
            _ => {
                out.push(g.clone())?;
            }
        }
    }
    Ok(out)
}

fn same_pair(x: &Gate, y: &Gate) -> bool {
    let mut p = x.qubits.clone();
    let mut q = y.qubits.clone();
    p.sort_unstable();
    q.sort_unstable();
    p == q
}

/// CX-target compilation: each RXX immediately followed by an RYY on the
/// same pair (or the reverse) becomes a single two-CX block, remaining
/// rotations use the template, and then 1q merging and CX cancellation run
/// to a fixed point.
pub fn transpile_cx(circuit: &Circuit) -> Result<Circuit> {
    use GateKind::*;
    let mut fused = copy_header(circuit)?;
    let ops = circuit.ops();
    let mut i = 0;
    while i < ops.len() {
        let g = &ops[i];
        let pair = ops.get(i + 1).and_then(|next| {
            if !same_pair(g, next) {
                return None;
            }
            match (&g.kind, &next.kind) {
                (Rxx(x), Ryy(y)) | (Ryy(y), Rxx(x)) => Some((*x, *y)),
                _ => None,
            }
        });
        match pair {
            Some((tx, ty)) => {
                let v = Rx(FRAC_PI_2);
                let vdg = Rx(-FRAC_PI_2);
                conjugated(
                    &mut fused,
                    &[(v.clone(), 0), (v, 1)],
                    &[
                        (Cx, [0, 1]),
                        (Rx(tx), [0, 0]),
                        (Rz(ty), [1, 1]),
                        (Cx, [0, 1]),
                    ],
                    &[(vdg.clone(), 0), (vdg, 1)],
                    g.qubits[0],
                    g.qubits[1],
                )?;
                i += 2;
            }
            None => {
                fused.push(g.clone())?;
                i += 1;
            }
        }
    }
    let mut current = naive_expand(&fused)?;
    loop {
        let next = cancel_cx_pairs(&merge_1q(&current)?)?;
        if next.len() == current.len() {
            return Ok(next);
        }
        current = next;
    }
}

/// Removes CX pairs with the same control and target that have no gate on
/// either qubit between them.
pub fn cancel_cx_pairs(circuit: &Circuit) -> Result<Circuit> {
    let ops = circuit.ops();
    let mut kept = vec![true; ops.len()];
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); circuit.n_qubits()];
    for (i, g) in ops.iter().enumerate() {
        if g.kind == GateKind::Cx {
            let (c, t) = (g.qubits[0], g.qubits[1]);
            if let (Some(&k), Some(&k2)) = (stacks[c].last(), stacks[t].last()) {
                if k == k2 && ops[k].kind == GateKind::Cx && ops[k].qubits == g.qubits {
                    kept[k] = false;
                    kept[i] = false;
                    stacks[c].pop();
                    stacks[t].pop();
                    continue;
                }
            }
        }
        for &q in &g.qubits {
            stacks[q].push(i);
        }
    }
    let mut out = copy_header(circuit)?;
    for (g, keep) in ops.iter().zip(kept) {
        if keep {
            out.push(g.clone())?;
        }
    }
    Ok(out)
}

/// `(theta, phi, lambda, alpha)` with `u = exp(i alpha) U3(theta, phi, lambda)`.
pub fn zyz_angles(u: &CMatrix) -> (f64, f64, f64, f64) {
    let (u00, u01, u10) = (u[(0, 0)], u[(0, 1)], u[(1, 0)]);
    let theta = 2.0 * u10.norm().atan2(u00.norm());
    if u00.norm() > 1e-9 {
        let alpha = u00.arg();
        let phi = if u10.norm() > 1e-12 {
            u10.arg() - alpha
        } else {
            0.0
        };
        let lam = if u01.norm() > 1e-12 {
            (-u01).arg() - alpha
        } else {
            u[(1, 1)].arg() - alpha - phi
        };
        (theta, phi, lam, alpha)
    } else {
        // theta = pi: only phi + lambda relative to alpha matters
        let alpha = u10.arg();
        let lam = (-u01).arg() - alpha;
        (theta, 0.0, lam, alpha)
    }
}

/// Fuses each run of adjacent single-qubit gates on a qubit into one
/// gate: dropped if the product is the identity up to phase, an RZ if it is
/// diagonal, a U3 otherwise. Runs of one gate are left as they are and
/// global-phase gates are removed.
pub fn merge_1q(circuit: &Circuit) -> Result<Circuit> {
    let mut out = copy_header(circuit)?;
    let mut pending: Vec<Vec<Gate>> = vec![Vec::new(); circuit.n_qubits()];
    fn flush(out: &mut Circuit, run: &mut Vec<Gate>, q: usize) -> Result<()> {
        match run.len() {
            0 => {}
            1 => {
                out.push(run[0].clone())?;
            }
            _ => {
                let mut u = CMatrix::identity(2, 2);
                for g in run.iter() {
                    u = g.matrix() * u;
                }
                if let Some(kind) = canonical_1q(&u) {
                    out.add(kind, &[q])?;
                }
            }
        }
        run.clear();
        Ok(())
    }
    for g in circuit.ops() {
        match g.arity() {
            0 => {}
            1 => pending[g.qubits[0]].push(g.clone()),
            _ => {
                for &q in &g.qubits {
                    flush(&mut out, &mut pending[q], q)?;
                }
                out.push(g.clone())?;
            }
        }
    }
    for (q, run) in pending.iter_mut().enumerate() {
        flush(&mut out, run, q)?;
    }
    Ok(out)
}

fn canonical_1q(u: &CMatrix) -> Option<GateKind> {
    if u[(0, 1)].norm() < ANGLE_EPS && u[(1, 0)].norm() < ANGLE_EPS {
        let angle = wrap_angle(u[(1, 1)].arg() - u[(0, 0)].arg());
        if angle.abs() < ANGLE_EPS {
            return None;
        }
        return Some(GateKind::Rz(angle));
    }
    let (theta, phi, lam, _) = zyz_angles(u);
    Some(GateKind::U3(theta, wrap_angle(phi), wrap_angle(lam)))
}

/// Replaces every RXX, RYY and RZZ by a single RZX between single-qubit
/// basis changes: H on the first qubit for RXX, H on the second for RZZ,
/// and S-type conjugations taking Z to Y and X to Y for RYY. Angles are
/// wrapped to `(-pi, pi]`; beyond `pi/2` the rotation is folded into
/// `RZX(theta -+ pi)` times `Z x X`, so no pulse exceeds the full angle.
pub fn rewrite_to_rzx(circuit: &Circuit) -> Result<Circuit> {
    use GateKind::*;
    let mut out = copy_header(circuit)?;
    for g in circuit.ops() {
        let (pre, post): (OneQubitList, OneQubitList) = match g.kind {
            Rxx(_) => (vec![(H, 0)], vec![(H, 0)]),
            Ryy(_) => (
                vec![(Sdg, 0), (H, 0), (Sdg, 1)],
                vec![(H, 0), (S, 0), (S, 1)],
            ),
            Rzz(_) => (vec![(H, 1)], vec![(H, 1)]),
            Rzx(_) => (vec![], vec![]),
            _ => {
                out.push(g.clone())?;
                continue;
            }
        };
        let theta = wrap_angle(g.kind.angle().expect("rotation gate"));
        if theta.abs() < ANGLE_EPS {
            continue;
        }
        let mut core = Vec::new();
        if theta.abs() > FRAC_PI_2 {
            let folded = theta - theta.signum() * PI;
            core.push((Rzx(folded), [0, 1]));
            core.push((Z, [0, 0]));
            core.push((X, [1, 1]));
        } else {
            core.push((Rzx(theta), [0, 1]));
        }
        conjugated(&mut out, &pre, &core, &post, g.qubits[0], g.qubits[1])?;
    }
    Ok(out)
}
