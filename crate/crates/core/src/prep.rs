//! Initial-state circuits: basis excitations, GHZ states and Slater
//! determinants built from nearest-neighbour Givens rotations.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ZERO};
use crate::pauli::parse_real;
use crate::state::PURE_QUBIT_CAP;

/// X on every set bit of `bits`, which is read most-significant qubit first.
pub fn basis_excitation(bits: &str) -> Result<Circuit> {
    let n = bits.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty bitstring".into()));
    }
    let mut circ = Circuit::new(n);
    for (pos, ch) in bits.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => {
                circ.x(n - 1 - pos);
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "invalid bit {ch:?} in {bits:?}"
                )))
            }
        }
    }
    Ok(circ)
}

/// `(|0...0> + |1...1>)/sqrt(2)` via H on qubit 0 and a CX chain.
pub fn ghz(n: usize) -> Result<Circuit> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "GHZ needs at least one qubit".into(),
        ));
    }
    let mut circ = Circuit::new(n);
    circ.h(0);
    for q in 1..n {
        circ.cx(q - 1, q);
    }
    Ok(circ)
}

/// Two-mode rotation on adjacent qubits `j` and `k`. On the one-particle
/// sector it maps `|j> -> cos(theta)|j> - e^{i phi} sin(theta)|k>` and
/// `|k> -> sin(theta)|j> + e^{i phi} cos(theta)|k>`; `|11>` picks up
/// `e^{i phi}`. The whole unitary carries an extra global phase `e^{-i phi/2}`.
pub fn givens_circuit(
    theta: f64,
    phi: f64,
    j: usize,
    k: usize,
    n_qubits: usize,
) -> Result<Circuit> {
    if j.abs_diff(k) != 1 {
        return Err(Error::InvalidParameter(format!(
            "Givens rotation needs adjacent modes, got {j} and {k}"
        )));
    }
    let mut circ = Circuit::new(n_qubits);
    append_givens(&mut circ, theta, phi, j, k)?;
    Ok(circ)
}

fn append_givens(circ: &mut Circuit, theta: f64, phi: f64, j: usize, k: usize) -> Result<()> {
    circ.add(GateKind::Cx, &[k, j])?;
    circ.add(
        GateKind::Controlled {
            base: Box::new(GateKind::Ry(-2.0 * theta)),
            on_zero: false,
        },
        &[j, k],
    )?;
    circ.add(GateKind::Cx, &[k, j])?;
    circ.add(GateKind::Rz(phi), &[k])?;
    Ok(())
}

/// One-particle matrix of the Givens rotation; column `c` is the image of mode `c`.
pub fn givens_matrix(theta: f64, phi: f64) -> CMatrix {
    let (c, s) = (theta.cos(), theta.sin());
    let e = Complex64::from_polar(1.0, phi);
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(s, 0.0),
            -e * s,
            e * c,
        ],
    )
}

/// Orbital matrix of a Slater determinant: `n` orthonormal rows over `N` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterSpec {
    b: CMatrix,
}

impl SlaterSpec {
    /// Requires `B B^dag = I` within `1e-10`.
    pub fn new(b: CMatrix) -> Result<Self> {
        let (n, modes) = b.shape();
        if n == 0 || n > modes {
            return Err(Error::RankDeficient(format!(
                "{n} orbitals cannot be independent in {modes} modes"
            )));
        }
        let gram = &b * b.adjoint();
        let dev = crate::linalg::max_abs_diff(&gram, &CMatrix::identity(n, n));
        if dev > 1e-10 {
            let rank = b.clone().svd(false, false).rank(1e-10);
            if rank < n {
                return Err(Error::RankDeficient(format!(
                    "orbital matrix has rank {rank} < {n}"
                )));
            }
            return Err(Error::InvalidParameter(format!(
                "orbital rows are not orthonormal (deviation {dev:.2e})"
            )));
        }
        Ok(SlaterSpec { b })
    }

    /// Orthonormalizes the rows of `b` (modified Gram-Schmidt), keeping their span.
    pub fn from_row_space(b: CMatrix) -> Result<Self> {
        let (n, modes) = b.shape();
        let mut rows: Vec<Vec<Complex64>> = (0..n)
            .map(|r| (0..modes).map(|c| b[(r, c)]).collect())
            .collect();
        for r in 0..n {
            for p in 0..r {
                let proj: Complex64 = (0..modes).map(|c| rows[p][c].conj() * rows[r][c]).sum();
                let pivot = rows[p].clone();
                for (x, v) in rows[r].iter_mut().zip(pivot) {
                    *x -= proj * v;
                }
            }
            let norm = rows[r].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-10 {
                return Err(Error::RankDeficient(format!(
                    "orbital {r} is linearly dependent on the previous ones"
                )));
            }
            for z in rows[r].iter_mut() {
                *z /= norm;
            }
        }
        SlaterSpec::new(CMatrix::from_fn(n, modes, |r, c| rows[r][c]))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.b
    }

    pub fn n_particles(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.b.ncols()
    }

    /// Amplitude of each occupation basis state: `det(B[:, S])` for the
    /// ascending occupied set `S`.
    pub fn amplitudes(&self) -> Vec<Complex64> {
        let (n, modes) = self.b.shape();
        let mut out = vec![ZERO; 1usize << modes];
        for (idx, amp) in out.iter_mut().enumerate() {
            if idx.count_ones() as usize != n {
                continue;
            }
            let cols: Vec<usize> = (0..modes).filter(|c| idx >> c & 1 == 1).collect();
            let sub = DMatrix::from_fn(n, n, |r, c| self.b[(r, cols[c])]);
            *amp = sub.determinant();
        }
        out
    }
}

impl FromStr for SlaterSpec {
    type Err = Error;

    /// First line `n N`, then `n` rows of `N` complex numbers as `re im` pairs.
    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty orbital file".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline + 1,
                msg: format!("bad header: {e}"),
            })?;
        let [n, modes] = dims[..] else {
            return Err(Error::Parse {
                line: hline + 1,
                msg: "header must be `n N`".into(),
            });
        };
        let mut b = CMatrix::zeros(n, modes);
        for r in 0..n {
            let (ln, line) = lines.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("expected {n} rows, found {r}"),
            })?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 * modes {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("expected {} numbers, found {}", 2 * modes, toks.len()),
                });
            }
            for c in 0..modes {
                b[(r, c)] = Complex64::new(
                    parse_real(toks[2 * c], ln + 1)?,
                    parse_real(toks[2 * c + 1], ln + 1)?,
                );
            }
        }
        SlaterSpec::new(b)
    }
}

/// One Givens rotation of the decomposition, on modes `(mode - 1, mode)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensStep {
    pub mode: usize,
    pub theta: f64,
    pub phi: f64,
}

/// Rotations `G_1, ..., G_m` (in circuit order) such that applying them to
/// the first `n` modes occupied yields the determinant of `spec`, up to a
/// global phase.
///
/// Row operations first bring `B` to a staircase with row `r` supported on
/// columns `<= N - n + r`; then each row is cleared right to left by column
/// rotations on adjacent modes. The circuit replays the column rotations in
/// reverse with conjugated matrices.
pub fn givens_decomposition(spec: &SlaterSpec) -> Vec<GivensStep> {
    let mut b = spec.b.clone();
    let (n, modes) = b.shape();
    let tol = 1e-14;

    for c in (modes - n + 1..modes).rev() {
        let zero_rows = c - (modes - n);
        for r in 0..zero_rows {
            let (a, bb) = (b[(r, c)], b[(r + 1, c)]);
            let rho = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if a.norm() < tol || rho < tol {
                continue;
            }
            for col in 0..modes {
                let (x, y) = (b[(r, col)], b[(r + 1, col)]);
                b[(r, col)] = (bb * x - a * y) / rho;
                b[(r + 1, col)] = (a.conj() * x + bb.conj() * y) / rho;
            }
        }
    }

    let mut steps = Vec::new();
    for r in 0..n {
        for c in (r + 1..=modes - n + r).rev() {
            let (x, y) = (b[(r, c - 1)], b[(r, c)]);
            if y.norm() < tol {
                continue;
            }
            let theta = y.norm().atan2(x.norm());
            let alpha = if x.norm() < tol { 0.0 } else { x.arg() };
            let phi = y.arg() - alpha + PI;
            // column rotation R = conj(G(theta, phi))
            let rot = givens_matrix(theta, phi).map(|z| z.conj());
            for row in 0..n {
                let (u, v) = (b[(row, c - 1)], b[(row, c)]);
                b[(row, c - 1)] = u * rot[(0, 0)] + v * rot[(1, 0)];
                b[(row, c)] = u * rot[(0, 1)] + v * rot[(1, 1)];
            }
            steps.push(GivensStep {
                mode: c,
                theta,
                phi,
            });
        }
    }
    steps.reverse();
    steps
}

/// Circuit preparing the Slater determinant of `spec` from `|0...0>`.
pub fn slater_circuit(spec: &SlaterSpec) -> Result<Circuit> {
    let modes = spec.n_modes();
    if modes > PURE_QUBIT_CAP {
        return Err(Error::Resource(format!(
            "{modes} modes exceeds the statevector cap of {PURE_QUBIT_CAP}"
        )));
    }
    let mut circ = Circuit::new(modes);
    for q in 0..spec.n_particles() {
        circ.x(q);
    }
    for step in givens_decomposition(spec) {
        append_givens(&mut circ, step.theta, step.phi, step.mode - 1, step.mode)?;
    }
    Ok(circ)
}
