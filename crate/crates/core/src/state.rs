//! Pure and mixed quantum states, gate kernels, channels and expectation values.
//!
//! A mixed state on `n` qubits is stored as a flat vector of length `4^n`
//! with `rho[r][c]` at index `(r << n) | c`. Conjugation `U rho U^dag` is then
//! `U` acting on the row bits (qubits `n..2n`) and `conj(U)` on the column
//! bits (qubits `0..n`), so the pure-state kernel is reused unchanged.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ZERO};
use crate::noise::NoiseSpec;
use crate::pauli::{apply_pauli_vec, exp_pauli_vec, PauliSum, PauliTerm};

pub const PURE_QUBIT_CAP: usize = 20;
pub const MIXED_QUBIT_CAP: usize = 10;

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure {
        n_qubits: usize,
        amps: Vec<Complex64>,
    },
    Mixed {
        n_qubits: usize,
        rho: Vec<Complex64>,
    },
}

fn check_pure_cap(n: usize) -> Result<()> {
    if n > PURE_QUBIT_CAP {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the statevector cap of {PURE_QUBIT_CAP}"
        )));
    }
    Ok(())
}

fn check_mixed_cap(n: usize) -> Result<()> {
    if n > MIXED_QUBIT_CAP {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the density-matrix cap of {MIXED_QUBIT_CAP}"
        )));
    }
    Ok(())
}

impl QuantumState {
    /// `|0...0>`. Panics above [`PURE_QUBIT_CAP`]; use [`QuantumState::basis`]
    /// for a fallible constructor.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0).expect("qubit count within the statevector cap")
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_pure_cap(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(QuantumState::Pure { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_pure_cap(n_qubits)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "state has squared norm {norm}, expected 1"
            )));
        }
        Ok(QuantumState::Pure { n_qubits, amps })
    }

    pub fn from_density(m: &CMatrix) -> Result<Self> {
        let dim = m.nrows();
        if !m.is_square() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "density matrix must be square with power-of-two size".into(),
            ));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_mixed_cap(n_qubits)?;
        let trace: Complex64 = (0..dim).map(|i| m[(i, i)]).sum();
        if (trace.re - 1.0).abs() > NORM_TOLERANCE || trace.im.abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "density trace {trace}, expected 1"
            )));
        }
        if !crate::linalg::is_hermitian(m, NORM_TOLERANCE) {
            return Err(Error::InvalidParameter(
                "density matrix is not Hermitian".into(),
            ));
        }
        let mut rho = vec![ZERO; dim * dim];
        for r in 0..dim {
            for col in 0..dim {
                rho[(r << n_qubits) | col] = m[(r, col)];
            }
        }
        Ok(QuantumState::Mixed { n_qubits, rho })
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumState::Pure { n_qubits, .. } | QuantumState::Mixed { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure { .. })
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        match self {
            QuantumState::Pure { amps, .. } => Some(amps),
            QuantumState::Mixed { .. } => None,
        }
    }

    /// Density-matrix form of this state.
    pub fn to_mixed(&self) -> Result<Self> {
        match self {
            QuantumState::Mixed { .. } => Ok(self.clone()),
            QuantumState::Pure { n_qubits, amps } => {
                check_mixed_cap(*n_qubits)?;
                let dim = amps.len();
                let mut rho = vec![ZERO; dim * dim];
                for (r, ar) in amps.iter().enumerate() {
                    for (col, ac) in amps.iter().enumerate() {
                        rho[(r << n_qubits) | col] = ar * ac.conj();
                    }
                }
                Ok(QuantumState::Mixed {
                    n_qubits: *n_qubits,
                    rho,
                })
            }
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        let n = self.n_qubits();
        let dim = 1usize << n;
        match self {
            QuantumState::Pure { amps, .. } => {
                CMatrix::from_fn(dim, dim, |r, col| amps[r] * amps[col].conj())
            }
            QuantumState::Mixed { rho, .. } => {
                CMatrix::from_fn(dim, dim, |r, col| rho[(r << n) | col])
            }
        }
    }

    /// Computational-basis probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure { amps, .. } => amps.iter().map(|a| a.norm_sqr()).collect(),
            QuantumState::Mixed { n_qubits, rho } => {
                let dim = 1usize << n_qubits;
                (0..dim)
                    .map(|i| rho[(i << n_qubits) | i].re.max(0.0))
                    .collect()
            }
        }
    }

    /// Squared norm for pure states, trace for mixed states.
    pub fn trace(&self) -> f64 {
        match self {
            QuantumState::Pure { amps, .. } => amps.iter().map(|a| a.norm_sqr()).sum(),
            QuantumState::Mixed { n_qubits, rho } => {
                let dim = 1usize << n_qubits;
                (0..dim).map(|i| rho[(i << n_qubits) | i].re).sum()
            }
        }
    }

    /// `<psi|rho|psi>` (or `|<psi|phi>|^2` for pure states).
    pub fn fidelity_with_pure(&self, psi: &[Complex64]) -> f64 {
        match self {
            QuantumState::Pure { amps, .. } => crate::linalg::inner(psi, amps).norm_sqr(),
            QuantumState::Mixed { n_qubits, rho } => {
                let mut acc = ZERO;
                for (r, pr) in psi.iter().enumerate() {
                    for (col, pc) in psi.iter().enumerate() {
                        acc += pr.conj() * rho[(r << n_qubits) | col] * pc;
                    }
                }
                acc.re
            }
        }
    }

    /// Applies a validated gate in place.
    pub fn apply_gate(&mut self, gate: &Gate) {
        if let GateKind::PauliRotation { theta, letters } = &gate.kind {
            let ops: Vec<_> = gate
                .qubits
                .iter()
                .cloned()
                .zip(letters.iter().cloned())
                .collect();
            let p = PauliTerm::from_sparse(self.n_qubits(), &ops).expect("validated gate");
            self.apply_pauli_rotation(*theta, &p);
            return;
        }
        let m = gate.matrix();
        self.apply_matrix(&m, &gate.qubits);
    }

    /// Applies a local unitary `m` on `qubits` (first listed = least significant).
    pub fn apply_matrix(&mut self, m: &CMatrix, qubits: &[usize]) {
        let d = m.nrows();
        let row_major: Vec<Complex64> = (0..d * d).map(|i| m[(i / d, i % d)]).collect();
        match self {
            QuantumState::Pure { amps, .. } => apply_local(amps, qubits, &row_major),
            QuantumState::Mixed { n_qubits, rho } => {
                let n = *n_qubits;
                let rows: Vec<usize> = qubits.iter().map(|q| q + n).collect();
                apply_local(rho, &rows, &row_major);
                let conj: Vec<Complex64> = row_major.iter().map(|z| z.conj()).collect();
                apply_local(rho, qubits, &conj);
            }
        }
    }

    /// `exp(-i theta/2 P)` for a Hermitian Pauli string `p` on the full register.
    pub fn apply_pauli_rotation(&mut self, theta: f64, p: &PauliTerm) {
        match self {
            QuantumState::Pure { amps, .. } => exp_pauli_vec(amps, -theta / 2.0, p),
            QuantumState::Mixed { n_qubits, rho } => {
                let n = *n_qubits;
                let shifted: Vec<usize> = (n..2 * n).collect();
                let row_term = p.embed(2 * n, &shifted).expect("embedding fits");
                let col_term = p
                    .embed(2 * n, &(0..n).collect::<Vec<_>>())
                    .expect("embedding fits");
                exp_pauli_vec(rho, -theta / 2.0, &row_term);
                // conj(exp(-i t P)) = exp(+i t conj(P)) and conj(P) = (-1)^{#Y} P
                let n_y = p
                    .letters()
                    .iter()
                    .filter(|l| **l == crate::pauli::Letter::Y)
                    .count();
                let sign = if n_y % 2 == 0 { 1.0 } else { -1.0 };
                exp_pauli_vec(rho, sign * theta / 2.0, &col_term);
            }
        }
    }

    /// `sum_k K rho K^dag` over Kraus operators acting on `qubits`.
    /// Promotes a pure state to mixed.
    pub fn apply_kraus(&mut self, kraus: &[CMatrix], qubits: &[usize]) -> Result<()> {
        if self.is_pure() {
            *self = self.to_mixed()?;
        }
        let QuantumState::Mixed { n_qubits, rho } = self else {
            unreachable!()
        };
        let n = *n_qubits;
        let rows: Vec<usize> = qubits.iter().map(|q| q + n).collect();
        let mut acc = vec![ZERO; rho.len()];
        for k in kraus {
            let d = k.nrows();
            let km: Vec<Complex64> = (0..d * d).map(|i| k[(i / d, i % d)]).collect();
            let kc: Vec<Complex64> = km.iter().map(|z| z.conj()).collect();
            let mut term = rho.clone();
            apply_local(&mut term, &rows, &km);
            apply_local(&mut term, qubits, &kc);
            for (a, t) in acc.iter_mut().zip(term) {
                *a += t;
            }
        }
        *rho = acc;
        Ok(())
    }

    /// `(1 - p) rho + p Tr_Q(rho) ⊗ I/2^|Q|`, the uniform Pauli twirl on `qubits`.
    pub fn depolarize(&mut self, p: f64, qubits: &[usize]) -> Result<()> {
        if p == 0.0 {
            return Ok(());
        }
        if self.is_pure() {
            *self = self.to_mixed()?;
        }
        let QuantumState::Mixed { n_qubits, rho } = self else {
            unreachable!()
        };
        let n = *n_qubits;
        let mut replaced = rho.clone();
        for &q in qubits {
            let rb = 1usize << (q + n);
            let cb = 1usize << q;
            for i in 0..replaced.len() {
                if i & rb != 0 || i & cb != 0 {
                    continue;
                }
                let avg = (replaced[i] + replaced[i | rb | cb]) * 0.5;
                replaced[i] = avg;
                replaced[i | rb | cb] = avg;
                replaced[i | rb] = ZERO;
                replaced[i | cb] = ZERO;
            }
        }
        for (r, t) in rho.iter_mut().zip(replaced) {
            *r = *r * (1.0 - p) + t * p;
        }
        Ok(())
    }

    /// `<obs>` for a Hermitian observable; the imaginary residue is discarded.
    pub fn expectation(&self, obs: &PauliSum) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits() {
            return Err(Error::Dimension {
                expected: self.n_qubits(),
                found: obs.n_qubits(),
            });
        }
        let residue = obs.hermiticity_residue();
        if residue > NORM_TOLERANCE {
            return Err(Error::NonHermitian(residue));
        }
        let value = match self {
            QuantumState::Pure { amps, .. } => crate::linalg::inner(amps, &obs.apply_vec(amps)),
            QuantumState::Mixed { n_qubits, rho } => {
                let n = *n_qubits;
                let dim = 1usize << n;
                let mut acc = ZERO;
                for (coeff, t) in obs.terms() {
                    let (x, z) = (t.x_mask() as usize, t.z_mask() as usize);
                    let f = t.base_factor();
                    let mut tr = ZERO;
                    for r in 0..dim {
                        let v = rho[(r << n) | (r ^ x)];
                        tr += if (r & z).count_ones() % 2 == 1 { -v } else { v };
                    }
                    acc += coeff * f * tr;
                }
                acc
            }
        };
        Ok(value.re)
    }

    /// Flat export with an explicit endianness tag.
    pub fn export(&self) -> ExportedState {
        let (mode, data) = match self {
            QuantumState::Pure { amps, .. } => ("pure", amps),
            QuantumState::Mixed { rho, .. } => ("mixed", rho),
        };
        ExportedState {
            n_qubits: self.n_qubits(),
            mode: mode.into(),
            endianness: "little".into(),
            data: data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedState {
    pub n_qubits: usize,
    pub mode: String,
    pub endianness: String,
    /// Row-major `[re, im]` pairs; `rho[r][c]` at `r * 2^n + c` for mixed states.
    pub data: Vec<[f64; 2]>,
}

/// Spreads the bits of `i` into the positions not occupied by `sorted` qubits.
#[inline]
fn insert_zero_bits(mut i: usize, sorted: &[usize]) -> usize {
    for &q in sorted {
        let low = i & ((1usize << q) - 1);
        i = ((i >> q) << (q + 1)) | low;
    }
    i
}

/// Applies a `2^k x 2^k` row-major matrix on `qubits` of a state vector.
pub(crate) fn apply_local(amps: &mut [Complex64], qubits: &[usize], m: &[Complex64]) {
    let k = qubits.len();
    let d = 1usize << k;
    if k == 0 {
        let ph = m[0];
        for a in amps.iter_mut() {
            *a *= ph;
        }
        return;
    }
    let offsets: Vec<usize> = (0..d)
        .map(|l| {
            (0..k)
                .filter(|b| l >> b & 1 == 1)
                .map(|b| 1usize << qubits[b])
                .sum()
        })
        .collect();
    let mut sorted = qubits.to_vec();
    sorted.sort_unstable();
    let blocks = amps.len() >> k;
    if k == 1 {
        let (o, m00, m01, m10, m11) = (offsets[1], m[0], m[1], m[2], m[3]);
        for i in 0..blocks {
            let base = insert_zero_bits(i, &sorted);
            let (a0, a1) = (amps[base], amps[base + o]);
            amps[base] = m00 * a0 + m01 * a1;
            amps[base + o] = m10 * a0 + m11 * a1;
        }
        return;
    }
    let mut buf = vec![ZERO; d];
    for i in 0..blocks {
        let base = insert_zero_bits(i, &sorted);
        for (l, b) in buf.iter_mut().enumerate() {
            *b = amps[base + offsets[l]];
        }
        for r in 0..d {
            let row = &m[r * d..(r + 1) * d];
            amps[base + offsets[r]] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
        }
    }
}

/// Applies a Pauli string (with its phase) in place to a pure state.
pub fn apply_pauli(state: &mut QuantumState, p: &PauliTerm) -> Result<()> {
    match state {
        QuantumState::Pure { amps, n_qubits } => {
            if p.n_qubits() != *n_qubits {
                return Err(Error::Dimension {
                    expected: *n_qubits,
                    found: p.n_qubits(),
                });
            }
            apply_pauli_vec(amps, p);
            Ok(())
        }
        QuantumState::Mixed { .. } => Err(Error::InvalidParameter(
            "applying a bare Pauli operator needs a pure state".into(),
        )),
    }
}

/// Noise channels applicable to chosen qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// Joint depolarizing with probability `p` on all listed qubits.
    Depolarizing(f64),
    /// Amplitude damping with decay probability `gamma`, per listed qubit.
    AmplitudeDamping(f64),
    /// Pure dephasing with parameter `lambda`, per listed qubit.
    PhaseDamping(f64),
}

impl Channel {
    /// Amplitude damping for `duration_ns` given `T1` in microseconds:
    /// `gamma = 1 - exp(-d/T1)`.
    pub fn amplitude_damping_for(duration_ns: f64, t1_us: f64) -> Channel {
        Channel::AmplitudeDamping(1.0 - (-duration_ns / (t1_us * 1e3)).exp())
    }

    /// Pure dephasing completing `T2` decay on top of `T1` relaxation:
    /// `1/T_phi = 1/T2 - 1/(2 T1)`, `lambda = 1 - exp(-2d/T_phi)`.
    pub fn phase_damping_for(duration_ns: f64, t1_us: f64, t2_us: f64) -> Channel {
        let rate = 1.0 / t2_us - 1.0 / (2.0 * t1_us);
        let lambda = 1.0 - (-2.0 * duration_ns * rate.max(0.0) / 1e3).exp();
        Channel::PhaseDamping(lambda)
    }

    fn parameter(&self) -> f64 {
        match self {
            Channel::Depolarizing(p) | Channel::AmplitudeDamping(p) | Channel::PhaseDamping(p) => {
                *p
            }
        }
    }
}

/// Applies a channel to `qubits`, promoting pure states to mixed.
pub fn apply_channel(
    state: &QuantumState,
    channel: Channel,
    qubits: &[usize],
) -> Result<QuantumState> {
    let p = channel.parameter();
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "channel parameter {p} outside [0, 1]"
        )));
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= state.n_qubits() || qubits[..i].contains(&q) {
            return Err(Error::InvalidParameter(format!("bad channel qubit {q}")));
        }
    }
    let mut out = state.to_mixed()?;
    match channel {
        Channel::Depolarizing(p) => out.depolarize(p, qubits)?,
        Channel::AmplitudeDamping(g) => {
            let k = amplitude_damping_kraus(g);
            for &q in qubits {
                out.apply_kraus(&k, &[q])?;
            }
        }
        Channel::PhaseDamping(l) => {
            let k = phase_damping_kraus(l);
            for &q in qubits {
                out.apply_kraus(&k, &[q])?;
            }
        }
    }
    Ok(out)
}

fn amplitude_damping_kraus(gamma: f64) -> [CMatrix; 2] {
    let r = |v: f64| Complex64::new(v, 0.0);
    [
        CMatrix::from_row_slice(2, 2, &[r(1.0), ZERO, ZERO, r((1.0 - gamma).sqrt())]),
        CMatrix::from_row_slice(2, 2, &[ZERO, r(gamma.sqrt()), ZERO, ZERO]),
    ]
}

fn phase_damping_kraus(lambda: f64) -> [CMatrix; 2] {
    let r = |v: f64| Complex64::new(v, 0.0);
    [
        CMatrix::from_row_slice(2, 2, &[r(1.0), ZERO, ZERO, r((1.0 - lambda).sqrt())]),
        CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, r(lambda.sqrt())]),
    ]
}

/// Executes `circuit` on `initial`. With noise, the state is promoted to a
/// density matrix and each gate is followed by its noise channels; the
/// evolution is deterministic, so no seed is involved.
pub fn run(
    circuit: &Circuit,
    initial: &QuantumState,
    noise: Option<&NoiseSpec>,
) -> Result<QuantumState> {
    if circuit.n_qubits() != initial.n_qubits() {
        return Err(Error::Dimension {
            expected: initial.n_qubits(),
            found: circuit.n_qubits(),
        });
    }
    let mut state = match noise {
        Some(spec) => {
            spec.validate()?;
            initial.to_mixed()?
        }
        None => initial.clone(),
    };
    for gate in circuit.ops() {
        state.apply_gate(gate);
        if let Some(spec) = noise {
            spec.apply_after(&mut state, gate)?;
        }
    }
    Ok(state)
}

/// `<obs>` on `state`; see [`QuantumState::expectation`].
pub fn expectation(state: &QuantumState, obs: &PauliSum) -> Result<f64> {
    state.expectation(obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, is_hermitian, max_abs_diff, random_state, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn min_eigenvalue(m: &CMatrix) -> f64 {
        m.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn empty_circuit_is_identity() {
        let s = QuantumState::zero(3);
        assert_eq!(run(&Circuit::new(3), &s, None).unwrap(), s);
    }

    #[test]
    fn hadamard_on_zero() {
        let mut circ = Circuit::new(1);
        circ.h(0);
        let out = run(&circ, &QuantumState::zero(1), None).unwrap();
        let a = out.amplitudes().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[0] - c(h, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn run_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut circ = Circuit::new(4);
        circ.h(0).cx(0, 3).rxx(0.3, 1, 2).rzx(0.8, 3, 1);
        circ.add(GateKind::Unitary(random_unitary(4, &mut rng)), &[2, 0])
            .unwrap();
        circ.add(
            GateKind::PauliRotation {
                theta: 0.5,
                letters: vec![
                    crate::pauli::Letter::Y,
                    crate::pauli::Letter::Z,
                    crate::pauli::Letter::X,
                ],
            },
            &[3, 0, 2],
        )
        .unwrap();
        let psi = random_state(16, &mut rng);
        let s = QuantumState::from_amplitudes(psi.clone()).unwrap();
        let out = run(&circ, &s, None).unwrap();
        let expected = crate::linalg::mat_vec(&circ.unitary().unwrap(), &psi);
        let got = out.amplitudes().unwrap();
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
        // mixed evolution agrees with U rho U^dag
        let mixed = run(&circ, &s.to_mixed().unwrap(), None).unwrap();
        let u = circ.unitary().unwrap();
        let rho = s.density_matrix();
        assert!(max_abs_diff(&mixed.density_matrix(), &(&u * rho * u.adjoint())) < 1e-12);
    }

    #[test]
    fn expectation_pure_and_mixed_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = QuantumState::from_amplitudes(random_state(8, &mut rng)).unwrap();
        let obs = PauliSum::from_labels(&[(0.7, "XYZ"), (-1.2, "IZZ"), (0.3, "YYI")]).unwrap();
        let a = s.expectation(&obs).unwrap();
        let b = s.to_mixed().unwrap().expectation(&obs).unwrap();
        let dense = (s.density_matrix() * obs.dense_matrix().unwrap()).trace();
        assert!((a - b).abs() < 1e-12);
        assert!((a - dense.re).abs() < 1e-12);
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let obs = PauliSum::from_terms(
            1,
            vec![(
                c(0.0, 1.0),
                crate::pauli::PauliTerm::parse_label("Z").unwrap(),
            )],
        )
        .unwrap();
        assert!(matches!(
            QuantumState::zero(1).expectation(&obs),
            Err(Error::NonHermitian(_))
        ));
    }

    #[test]
    fn depolarizing_limits() {
        let s = QuantumState::zero(2);
        let same = apply_channel(&s, Channel::Depolarizing(0.0), &[0]).unwrap();
        assert!(max_abs_diff(&same.density_matrix(), &s.density_matrix()) < 1e-15);
        let mixed = apply_channel(&s, Channel::Depolarizing(1.0), &[0]).unwrap();
        let rho = mixed.density_matrix();
        // qubit 0 marginal is I/2, qubit 1 still |0>
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((rho[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(rho[(2, 2)].norm() < 1e-15);
    }

    #[test]
    fn two_qubit_depolarizing_matches_pauli_twirl() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = QuantumState::from_amplitudes(random_state(8, &mut rng)).unwrap();
        let p = 0.37;
        let out = apply_channel(&s, Channel::Depolarizing(p), &[0, 2]).unwrap();
        let rho = s.density_matrix();
        let mut twirl = CMatrix::zeros(8, 8);
        let letters = ["I", "X", "Y", "Z"];
        for a in letters {
            for b in letters {
                let label = format!("{a}I{b}");
                let pm = PauliTerm::parse_label(&label)
                    .unwrap()
                    .dense_matrix()
                    .unwrap();
                twirl += &pm * &rho * &pm;
            }
        }
        let expected = rho * c(1.0 - p, 0.0) + twirl * c(p / 16.0, 0.0);
        assert!(max_abs_diff(&out.density_matrix(), &expected) < 1e-12);
    }

    #[test]
    fn amplitude_damping_of_excited_state() {
        let s = QuantumState::basis(1, 1).unwrap();
        let ch = Channel::amplitude_damping_for(100.0, 50.0);
        let Channel::AmplitudeDamping(g) = ch else {
            unreachable!()
        };
        assert!((g - (1.0 - (-100.0f64 / 50_000.0).exp())).abs() < 1e-15);
        let out = apply_channel(&s, ch, &[0]).unwrap();
        assert!((out.probabilities()[0] - g).abs() < 1e-14);
    }

    #[test]
    fn damping_coherence_follows_t2() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = QuantumState::from_amplitudes(vec![c(h, 0.0), c(h, 0.0)]).unwrap();
        let (d, t1, t2) = (500.0, 80.0, 60.0);
        let a = apply_channel(&s, Channel::amplitude_damping_for(d, t1), &[0]).unwrap();
        let b = apply_channel(&a, Channel::phase_damping_for(d, t1, t2), &[0]).unwrap();
        let coherence = b.density_matrix()[(0, 1)].norm();
        assert!((coherence - 0.5 * (-d / (t2 * 1e3)).exp()).abs() < 1e-12);
    }

    #[test]
    fn channel_rejects_bad_parameter() {
        let s = QuantumState::zero(1);
        assert!(apply_channel(&s, Channel::PhaseDamping(1.5), &[0]).is_err());
        assert!(apply_channel(&s, Channel::Depolarizing(-0.1), &[0]).is_err());
    }

    #[test]
    fn channel_sequence_stays_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = QuantumState::from_amplitudes(random_state(8, &mut rng)).unwrap();
        for (i, ch) in [
            Channel::Depolarizing(0.2),
            Channel::AmplitudeDamping(0.3),
            Channel::PhaseDamping(0.6),
            Channel::Depolarizing(0.9),
        ]
        .into_iter()
        .enumerate()
        {
            s = apply_channel(&s, ch, &[i % 3, (i + 1) % 3]).unwrap();
            let rho = s.density_matrix();
            assert!((s.trace() - 1.0).abs() < 1e-12);
            assert!(is_hermitian(&rho, 1e-12));
            assert!(min_eigenvalue(&rho) > -1e-9);
        }
    }

    #[test]
    fn caps_enforced() {
        assert!(matches!(
            QuantumState::basis(21, 0),
            Err(Error::Resource(_))
        ));
        let big = QuantumState::basis(11, 0).unwrap();
        assert!(matches!(big.to_mixed(), Err(Error::Resource(_))));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            run(&Circuit::new(2), &QuantumState::zero(3), None),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn export_has_tag() {
        let e = QuantumState::zero(2).export();
        assert_eq!(e.endianness, "little");
        assert_eq!(e.data.len(), 4);
    }
}
