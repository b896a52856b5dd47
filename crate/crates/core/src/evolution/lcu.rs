use std::collections::HashMap;

use num_complex::Complex64;

use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ZERO};
use crate::pauli::{PauliSum, PauliTerm, Phase, DENSE_QUBIT_CAP};
use crate::state::QuantumState;

/// Largest ancilla register (and so `2^16` unitaries) a decomposition may use.
pub const MAX_LCU_ANCILLAS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcuPlan {
    /// Taylor truncation order `K`.
    pub order: usize,
    pub time: f64,
}

/// Truncated Taylor series of `exp(-i t H)` written as `sum_j alpha_j V_j`
/// with `alpha_j > 0` and each `V_j` a phased Pauli string.
#[derive(Debug, Clone, PartialEq)]
pub struct LcuDecomposition {
    pub unitaries: Vec<PauliTerm>,
    pub weights: Vec<f64>,
    /// `s = sum_j alpha_j`.
    pub s: f64,
    pub n_ancillas: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcuResult {
    /// Normalized system state after projecting the ancillas onto `|0...0>`.
    pub state: QuantumState,
    pub success_probability: f64,
    pub s: f64,
    pub n_ancillas: usize,
    pub n_unitaries: usize,
}

/// Expands `sum_{k<=K} (-i t H)^k / k!` with `H = sum_i a_i V_i`, `a_i >= 0`.
/// Products that are the same unitary (letters and phase) are merged, so
/// every weight stays nonnegative and `s = sum_k (t lambda)^k / k!` with
/// `lambda = sum_i a_i`.
pub fn lcu_decompose(h: &PauliSum, plan: &LcuPlan) -> Result<LcuDecomposition> {
    let n = h.n_qubits();
    let h = h.normalized();
    // each Taylor factor -i t H / k contributes a phase -i sgn(t) to the unitary
    let factor = if plan.time < 0.0 {
        Phase::I
    } else {
        Phase::MINUS_I
    };
    let mut generators = Vec::with_capacity(h.len());
    for (c, t) in h.terms() {
        if c.im.abs() > 1e-12 {
            return Err(Error::NonHermitian(c.im.abs()));
        }
        let term = if c.re < 0.0 {
            t.clone().with_phase(Phase::MINUS_ONE)
        } else {
            t.clone()
        };
        generators.push((
            c.re.abs(),
            PauliTerm::identity(n).with_phase(factor).mul(&term)?,
        ));
    }
    let mut level: Vec<(PauliTerm, f64)> = vec![(PauliTerm::identity(n), 1.0)];
    let mut total: Vec<(PauliTerm, f64)> = level.clone();
    for k in 1..=plan.order {
        let mut next: Vec<(PauliTerm, f64)> = Vec::new();
        let mut index: HashMap<PauliTerm, usize> = HashMap::new();
        for (u, w) in &level {
            for (a, g) in &generators {
                let prod = u.mul(g)?;
                let weight = w * a * plan.time.abs() / k as f64;
                if weight == 0.0 {
                    continue;
                }
                match index.get(&prod) {
                    Some(&i) => next[i].1 += weight,
                    None => {
                        index.insert(prod.clone(), next.len());
                        next.push((prod, weight));
                    }
                }
            }
        }
        total.extend(next.iter().cloned());
        level = next;
    }
    let mut merged: Vec<(PauliTerm, f64)> = Vec::new();
    let mut index: HashMap<PauliTerm, usize> = HashMap::new();
    for (u, w) in total {
        match index.get(&u) {
            Some(&i) => merged[i].1 += w,
            None => {
                index.insert(u.clone(), merged.len());
                merged.push((u, w));
            }
        }
    }
    let s: f64 = merged.iter().map(|(_, w)| w).sum();
    if s <= 0.0 {
        return Err(Error::Plan("LCU normalization s must be positive".into()));
    }
    let n_ancillas = ceil_log2(merged.len());
    if n_ancillas > MAX_LCU_ANCILLAS {
        return Err(Error::Resource(format!(
            "{} unitaries need {n_ancillas} ancillas, above the budget of {MAX_LCU_ANCILLAS}",
            merged.len()
        )));
    }
    let (unitaries, weights) = merged.into_iter().unzip();
    Ok(LcuDecomposition {
        unitaries,
        weights,
        s,
        n_ancillas,
    })
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Householder reflection whose first column is `v` (real, unit, nonnegative).
fn prepare_matrix(v: &[f64]) -> CMatrix {
    let d = v.len();
    let mut w: Vec<f64> = v.iter().map(|x| -x).collect();
    w[0] += 1.0;
    let wn: f64 = w.iter().map(|x| x * x).sum();
    let mut m = CMatrix::identity(d, d);
    if wn < 1e-30 {
        return m;
    }
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] -= Complex64::new(2.0 * w[i] * w[j] / wn, 0.0);
        }
    }
    m
}

/// Multiplexed select `sum_j |j><j| ⊗ V_j` on system qubits `0..n` and
/// ancillas `n..n+a`; unused ancilla values act as the identity.
fn select_matrix(dec: &LcuDecomposition, n: usize) -> Result<CMatrix> {
    let sys = 1usize << n;
    let dim = sys << dec.n_ancillas;
    let mut m = CMatrix::zeros(dim, dim);
    for j in 0..(1usize << dec.n_ancillas) {
        let block = match dec.unitaries.get(j) {
            Some(u) => u.dense_matrix()?,
            None => CMatrix::identity(sys, sys),
        };
        let off = j * sys;
        m.view_mut((off, off), (sys, sys)).copy_from(&block);
    }
    Ok(m)
}

/// Circuit `B^dag · SELECT · B` with `B` preparing `sum_j sqrt(alpha_j/s) |j>`.
pub fn lcu_circuit(dec: &LcuDecomposition, n_system: usize) -> Result<Circuit> {
    let total = n_system + dec.n_ancillas;
    if total > DENSE_QUBIT_CAP {
        return Err(Error::Resource(format!(
            "{total} qubits exceeds the dense select cap of {DENSE_QUBIT_CAP}"
        )));
    }
    let mut circ = Circuit::new(total);
    if dec.n_ancillas == 0 {
        // single unitary: no register needed
        let u = &dec.unitaries[0];
        circ.add(
            GateKind::Unitary(u.dense_matrix()?),
            &(0..n_system).collect::<Vec<_>>(),
        )?;
        return Ok(circ);
    }
    let mut amp = vec![0.0; 1usize << dec.n_ancillas];
    for (a, w) in amp.iter_mut().zip(&dec.weights) {
        *a = (w / dec.s).sqrt();
    }
    let b = prepare_matrix(&amp);
    let ancillas: Vec<usize> = (n_system..total).collect();
    circ.add(GateKind::Unitary(b.clone()), &ancillas)?;
    circ.add(
        GateKind::Unitary(select_matrix(dec, n_system)?),
        &(0..total).collect::<Vec<_>>(),
    )?;
    circ.add(GateKind::Unitary(b.adjoint()), &ancillas)?;
    Ok(circ)
}

/// `out += w * P psi` without forming the matrix of `P`.
fn add_pauli_image(p: &PauliTerm, psi: &[Complex64], w: f64, out: &mut [Complex64]) {
    let (xm, zm) = (p.x_mask() as usize, p.z_mask() as usize);
    // Y = i X Z on each qubit
    let ys = (xm & zm).count_ones() as i64;
    let factor = p.phase().to_complex() * Phase::from_exponent(ys).to_complex() * w;
    for (b, a) in psi.iter().enumerate() {
        let sign = if (b & zm).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        out[b ^ xm] += factor * sign * a;
    }
}

/// Result of running the LCU circuit on `|0...0>_anc ⊗ |psi>` and
/// post-selecting the ancillas on all zeros. The success probability is
/// about `1/s^2`.
pub fn lcu_evolve(h: &PauliSum, plan: &LcuPlan, state: &QuantumState) -> Result<LcuResult> {
    let n = h.n_qubits();
    if state.n_qubits() != n {
        return Err(Error::Dimension {
            expected: n,
            found: state.n_qubits(),
        });
    }
    let psi = state
        .amplitudes()
        .ok_or_else(|| Error::InvalidParameter("LCU evolution needs a pure input state".into()))?;
    let dec = lcu_decompose(h, plan)?;
    // the all-zeros ancilla block of B^dag SELECT B is sum_j (alpha_j / s) V_j
    let mut projected = vec![ZERO; psi.len()];
    for (u, w) in dec.unitaries.iter().zip(&dec.weights) {
        add_pauli_image(u, psi, w / dec.s, &mut projected);
    }
    let success: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
    if success < 1e-300 {
        return Err(Error::Plan("post-selection has zero probability".into()));
    }
    let norm = success.sqrt();
    let state = QuantumState::from_amplitudes(projected.into_iter().map(|a| a / norm).collect())?;
    Ok(LcuResult {
        state,
        success_probability: success,
        s: dec.s,
        n_ancillas: dec.n_ancillas,
        n_unitaries: dec.unitaries.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::exact_evolve;
    use crate::linalg::{c, is_unitary};

    fn fidelity(a: &QuantumState, b: &QuantumState) -> f64 {
        a.fidelity_with_pure(b.amplitudes().unwrap())
    }

    #[test]
    fn zero_time_keeps_state() {
        let h = PauliSum::from_labels(&[(0.7, "XZ"), (-0.2, "YY")]).unwrap();
        let s = QuantumState::basis(2, 2).unwrap();
        let r = lcu_evolve(
            &h,
            &LcuPlan {
                order: 4,
                time: 0.0,
            },
            &s,
        )
        .unwrap();
        assert_eq!(r.n_unitaries, 1);
        assert!((r.success_probability - 1.0).abs() < 1e-12);
        assert!((fidelity(&r.state, &s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_z_small_time() {
        let h = PauliSum::from_labels(&[(1.0, "Z")]).unwrap();
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let s = QuantumState::from_amplitudes(vec![c(r2, 0.0), c(0.0, r2)]).unwrap();
        let plan = LcuPlan {
            order: 4,
            time: 0.1,
        };
        let r = lcu_evolve(&h, &plan, &s).unwrap();
        let exact = exact_evolve(&h, 0.1, &s).unwrap();
        assert!(fidelity(&r.state, &exact) > 1.0 - 1e-6);
    }

    #[test]
    fn weights_sum_to_taylor_norm() {
        let h = PauliSum::from_labels(&[(0.5, "XI"), (-0.25, "ZZ"), (0.75, "IY")]).unwrap();
        let plan = LcuPlan {
            order: 5,
            time: 0.3,
        };
        let dec = lcu_decompose(&h, &plan).unwrap();
        let lambda = 1.5 * 0.3;
        let mut expected = 0.0;
        let mut term = 1.0;
        for k in 0..=5 {
            if k > 0 {
                term *= lambda / k as f64;
            }
            expected += term;
        }
        assert!((dec.s - expected).abs() < 1e-12);
        assert!(dec.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn taylor_sum_matches_truncated_series() {
        let h = PauliSum::from_labels(&[(0.5, "XI"), (-0.25, "ZZ"), (0.75, "IY")]).unwrap();
        let hm = h.dense_matrix().unwrap();
        for time in [0.4, -0.4] {
            let plan = LcuPlan { order: 3, time };
            let dec = lcu_decompose(&h, &plan).unwrap();
            let mut series = CMatrix::zeros(4, 4);
            for (u, w) in dec.unitaries.iter().zip(&dec.weights) {
                series += u.dense_matrix().unwrap() * c(*w, 0.0);
            }
            let mut expected = CMatrix::identity(4, 4);
            let mut power = CMatrix::identity(4, 4);
            for k in 1..=3 {
                power = power * &hm * c(0.0, -time / k as f64);
                expected += &power;
            }
            assert!(crate::linalg::max_abs_diff(&series, &expected) < 1e-12);
        }
    }

    #[test]
    fn prepare_is_unitary_with_first_column() {
        let v = [0.6, 0.0, 0.8, 0.0];
        let b = prepare_matrix(&v);
        assert!(is_unitary(&b, 1e-12));
        for (i, x) in v.iter().enumerate() {
            assert!((b[(i, 0)] - c(*x, 0.0)).norm() < 1e-12);
        }
        assert!(crate::linalg::max_abs_diff(&b, &b.adjoint()) < 1e-15);
    }

    #[test]
    fn ancilla_budget() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(8), 3);
    }

    #[test]
    fn circuit_and_direct_projection_agree() {
        let h = PauliSum::from_labels(&[(0.5, "XY"), (-0.3, "ZI"), (0.4, "YY")]).unwrap();
        let plan = LcuPlan {
            order: 3,
            time: 0.2,
        };
        let s = QuantumState::from_amplitudes(vec![
            c(0.5, 0.0),
            c(0.0, 0.5),
            c(-0.5, 0.0),
            c(0.5, 0.0),
        ])
        .unwrap();
        let dec = lcu_decompose(&h, &plan).unwrap();
        let circ = lcu_circuit(&dec, 2).unwrap();
        let mut amps = vec![ZERO; 1 << circ.n_qubits()];
        amps[..4].copy_from_slice(s.amplitudes().unwrap());
        let mut full = QuantumState::Pure {
            n_qubits: circ.n_qubits(),
            amps,
        };
        for g in circ.ops() {
            full.apply_gate(g);
        }
        let block = &full.amplitudes().unwrap()[..4];
        let r = lcu_evolve(&h, &plan, &s).unwrap();
        let p: f64 = block.iter().map(|a| a.norm_sqr()).sum();
        assert!((p - r.success_probability).abs() < 1e-12);
        for (a, b) in block.iter().zip(r.state.amplitudes().unwrap()) {
            assert!((a / p.sqrt() - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_mixed_input() {
        let h = PauliSum::from_labels(&[(1.0, "Z")]).unwrap();
        let s = QuantumState::zero(1).to_mixed().unwrap();
        assert!(lcu_evolve(
            &h,
            &LcuPlan {
                order: 2,
                time: 0.1
            },
            &s
        )
        .is_err());
    }
}
