//! Dense reference implementations shared by the integration tests. Nothing
//! here calls into the library's kernels; matrices are assembled from 2x2
//! blocks with explicit Kronecker products.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type M = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn m2(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> M {
    DMatrix::from_row_slice(2, 2, &[a, b, cc, d])
}

pub fn id2() -> M {
    m2(c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.))
}

pub fn sx() -> M {
    m2(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.))
}

pub fn sy() -> M {
    m2(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.))
}

pub fn sz() -> M {
    m2(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.))
}

/// `|0><1|`, lowering the occupation of a mode.
pub fn lower() -> M {
    m2(c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.))
}

pub fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

/// Tensor product of per-qubit factors with qubit 0 least significant:
/// `factors[q]` acts on qubit `q`.
pub fn on_qubits(factors: &[M]) -> M {
    let mut out = DMatrix::from_element(1, 1, c(1., 0.));
    for f in factors.iter().rev() {
        out = kron(&out, f);
    }
    out
}

/// Dense Pauli string from a label written highest qubit first.
pub fn pauli_label(label: &str) -> M {
    let letters: Vec<char> = label.chars().rev().collect();
    let factors: Vec<M> = letters
        .iter()
        .map(|ch| match ch {
            'I' => id2(),
            'X' => sx(),
            'Y' => sy(),
            'Z' => sz(),
            _ => panic!("bad letter {ch}"),
        })
        .collect();
    on_qubits(&factors)
}

/// Jordan-Wigner annihilator for `mode` among `n` modes: Z on lower modes.
pub fn annihilator(n: usize, mode: usize) -> M {
    let factors: Vec<M> = (0..n)
        .map(|q| match q.cmp(&mode) {
            std::cmp::Ordering::Less => sz(),
            std::cmp::Ordering::Equal => lower(),
            std::cmp::Ordering::Greater => id2(),
        })
        .collect();
    on_qubits(&factors)
}

pub fn creator(n: usize, mode: usize) -> M {
    annihilator(n, mode).adjoint()
}

pub fn max_diff(a: &M, b: &M) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `exp(A)` by scaling and squaring with a Taylor series.
pub fn expm(a: &M) -> M {
    let norm: f64 = a.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let squarings = (norm.log2().ceil().max(0.0) as u32) + 4;
    let scaled = a / c(2f64.powi(squarings as i32), 0.0);
    let dim = a.nrows();
    let mut term = DMatrix::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i t H)`.
pub fn propagator(h: &M, t: f64) -> M {
    expm(&(h * c(0.0, -t)))
}

pub fn mat_vec(m: &M, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Up to global phase.
pub fn overlap_sq(a: &[Complex64], b: &[Complex64]) -> f64 {
    inner(a, b).norm_sqr()
}

/// Nearest-neighbour hopping matrix for `n` sites with amplitude `tau` and
/// `tau_d` on the bond starting at `defect`.
pub fn hopping_matrix(n: usize, tau: f64, tau_d: f64, defect: usize) -> M {
    let mut h = DMatrix::from_element(n, n, c(0., 0.));
    for i in 0..n - 1 {
        let t = if i == defect { tau_d } else { tau };
        h[(i, i + 1)] = c(-t, 0.);
        h[(i + 1, i)] = c(-t, 0.);
    }
    h
}

/// Site occupations `|<j| exp(-i h t) |start>|^2` of a single particle.
pub fn single_particle_occupations(h: &M, t: f64, start: usize) -> Vec<f64> {
    let u = propagator(h, t);
    (0..h.nrows()).map(|j| u[(j, start)].norm_sqr()).collect()
}

/// `prod_k (sum_j B[k][j] c_j^dag) |vac>`, with orbital `k = 0` applied last.
pub fn slater_by_ladders(b: &M) -> Vec<Complex64> {
    let (n_orb, n) = b.shape();
    let mut v = vec![c(0., 0.); 1 << n];
    v[0] = c(1., 0.);
    for k in (0..n_orb).rev() {
        let mut op = DMatrix::from_element(1 << n, 1 << n, c(0., 0.));
        for j in 0..n {
            op += creator(n, j) * b[(k, j)];
        }
        v = mat_vec(&op, &v);
    }
    v
}

/// Random complex matrix with orthonormal rows from Gram-Schmidt on
/// Gaussian-like entries drawn from `next`.
pub fn random_orbitals(n_orb: usize, n_modes: usize, mut next: impl FnMut() -> f64) -> M {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    while rows.len() < n_orb {
        let mut v: Vec<Complex64> = (0..n_modes).map(|_| c(next(), next())).collect();
        for r in &rows {
            let p = inner(r, &v);
            for (x, y) in v.iter_mut().zip(r) {
                *x -= p * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            rows.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    DMatrix::from_fn(n_orb, n_modes, |r, col| rows[r][col])
}
