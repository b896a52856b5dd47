//! Phased Pauli strings and weighted sums of them.
//!
//! A [`PauliTerm`] stores its letters as two packed bit-vectors: bit `q` of
//! `x` is set for X or Y on qubit `q`, bit `q` of `z` for Z or Y. The overall
//! phase is kept as an exponent `k` with phase `i^k`, so `Y` is the Hermitian
//! letter and `(x=1, z=1)` with phase `+1` means `Y`, not `XZ`.
//!
//! Basis indexing is little-endian everywhere in this crate: qubit 0 is the
//! least significant bit of a basis index. Text labels are written
//! most-significant qubit first, so the label `"IIIIX"` has X on qubit 0.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::QuantumState;

/// Largest qubit count for which dense matrices are built.
pub const DENSE_QUBIT_CAP: usize = 12;

/// Coefficients with magnitude below this are dropped by normalization.
pub const DROP_TOLERANCE: f64 = 1e-14;

const WORD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// An element of the group `{+1, +i, -1, -i}`, stored as the exponent of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// A phased Pauli string on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliTerm {
    n_qubits: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: Phase,
}

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD).max(1)
}

impl PauliTerm {
    pub fn identity(n_qubits: usize) -> Self {
        let w = words_for(n_qubits);
        PauliTerm {
            n_qubits,
            x: vec![0; w],
            z: vec![0; w],
            phase: Phase::ONE,
        }
    }

    /// Builds a term from letters indexed by qubit (`letters[q]` acts on qubit `q`).
    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidParameter(
                "a Pauli term needs at least one qubit".into(),
            ));
        }
        let mut p = PauliTerm::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set_letter(q, l);
        }
        Ok(p)
    }

    /// Builds a term from `(qubit, letter)` pairs; unlisted qubits get `I`.
    pub fn from_sparse(n_qubits: usize, ops: &[(usize, Letter)]) -> Result<Self> {
        let mut p = PauliTerm::identity(n_qubits);
        for &(q, l) in ops {
            if q >= n_qubits {
                return Err(Error::InvalidParameter(format!(
                    "qubit {q} out of range for {n_qubits} qubits"
                )));
            }
            p.set_letter(q, l);
        }
        Ok(p)
    }

    /// Parses an MSB-first label such as `"IIXXI"`, optionally prefixed by a
    /// phase (`+`, `-`, `i`, `-i`, `+i`).
    pub fn parse_label(label: &str) -> Result<Self> {
        let label = label.trim();
        let (phase, rest) = if let Some(r) = label.strip_prefix("-i") {
            (Phase::MINUS_I, r)
        } else if let Some(r) = label.strip_prefix("+i") {
            (Phase::I, r)
        } else if let Some(r) = label.strip_prefix('i') {
            (Phase::I, r)
        } else if let Some(r) = label.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else if let Some(r) = label.strip_prefix('+') {
            (Phase::ONE, r)
        } else {
            (Phase::ONE, label)
        };
        let mut letters = Vec::with_capacity(rest.len());
        for c in rest.chars().rev() {
            letters.push(Letter::from_char(c).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("invalid Pauli letter {c:?}"),
            })?);
        }
        let mut p = PauliTerm::from_letters(&letters)?;
        p.phase = phase;
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn letter(&self, q: usize) -> Letter {
        let (w, b) = (q / WORD, q % WORD);
        Letter::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    fn set_letter(&mut self, q: usize, l: Letter) {
        let (w, b) = (q / WORD, q % WORD);
        let (xb, zb) = l.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    /// Letters indexed by qubit.
    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n_qubits).map(|q| self.letter(q)).collect()
    }

    /// MSB-first label without phase.
    pub fn label(&self) -> String {
        (0..self.n_qubits)
            .rev()
            .map(|q| self.letter(q).as_char())
            .collect()
    }

    /// Qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n_qubits)
            .filter(|&q| self.letter(q) != Letter::I)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    fn y_count(&self) -> u32 {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x & z).count_ones())
            .sum()
    }

    /// X-bit mask for state-vector kernels; only valid for `n_qubits <= 64`.
    pub fn x_mask(&self) -> u64 {
        self.x[0]
    }

    /// Z-bit mask (Z or Y positions) for state-vector kernels.
    pub fn z_mask(&self) -> u64 {
        self.z[0]
    }

    /// Letter-sequence key, ignoring the phase.
    pub fn key(&self) -> (Vec<u64>, Vec<u64>) {
        (self.x.clone(), self.z.clone())
    }

    fn check_len(&self, other: &PauliTerm) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    /// Product `self * other`, with the phase accumulated site by site.
    pub fn mul(&self, other: &PauliTerm) -> Result<PauliTerm> {
        self.check_len(other)?;
        // Per site, X*Y = iZ, Y*Z = iX, Z*X = iY and the reverses give -i.
        let mut exponent: i64 = 0;
        let mut x = Vec::with_capacity(self.x.len());
        let mut z = Vec::with_capacity(self.z.len());
        for w in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[w], self.z[w], other.x[w], other.z[w]);
            let pos = (x1 & !z1 & x2 & z2) | (x1 & z1 & !x2 & z2) | (!x1 & z1 & x2 & !z2);
            let neg = (x1 & z1 & x2 & !z2) | (!x1 & z1 & x2 & z2) | (x1 & !z1 & !x2 & z2);
            exponent += pos.count_ones() as i64 - neg.count_ones() as i64;
            x.push(x1 ^ x2);
            z.push(z1 ^ z2);
        }
        Ok(PauliTerm {
            n_qubits: self.n_qubits,
            x,
            z,
            phase: self.phase * other.phase * Phase::from_exponent(exponent),
        })
    }

    /// True iff the two terms commute as matrices.
    pub fn commutes(&self, other: &PauliTerm) -> Result<bool> {
        self.check_len(other)?;
        let anti: u32 = (0..self.x.len())
            .map(|w| ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones())
            .sum();
        Ok(anti.is_multiple_of(2))
    }

    /// Hermitian adjoint: letters are Hermitian, so only the phase conjugates.
    pub fn adjoint(&self) -> PauliTerm {
        let mut p = self.clone();
        p.phase = Phase::from_exponent(-(self.phase.0 as i64));
        p
    }

    /// The factor `c` such that `P|j> = c |j ^ x_mask>`, excluding the
    /// `(-1)^{popcount(j & z)}` sign. Only for `n_qubits <= 64`.
    pub(crate) fn base_factor(&self) -> Complex64 {
        (self.phase * Phase::from_exponent(self.y_count() as i64)).to_complex()
    }

    /// Embeds this term into a larger register, placing qubit `q` at `map[q]`.
    pub fn embed(&self, n_qubits: usize, map: &[usize]) -> Result<PauliTerm> {
        if map.len() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: map.len(),
            });
        }
        let ops: Vec<(usize, Letter)> = (0..self.n_qubits)
            .map(|q| (map[q], self.letter(q)))
            .collect();
        Ok(PauliTerm::from_sparse(n_qubits, &ops)?.with_phase(self.phase))
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        PauliSum::from_terms(
            self.n_qubits,
            vec![(Complex64::new(1.0, 0.0), self.clone())],
        )?
        .dense_matrix()
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.label())
    }
}

impl FromStr for PauliTerm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PauliTerm::parse_label(s)
    }
}

/// Applies `P` to a state vector in place. Requires `n <= 64`.
pub(crate) fn apply_pauli_vec(amps: &mut [Complex64], p: &PauliTerm) {
    let x = p.x_mask();
    let z = p.z_mask();
    let f = p.base_factor();
    let sign = |j: usize| {
        if (j as u64 & z).count_ones() % 2 == 1 {
            -f
        } else {
            f
        }
    };
    if x == 0 {
        for (j, a) in amps.iter_mut().enumerate() {
            *a *= sign(j);
        }
        return;
    }
    let pivot = 1u64 << (63 - x.leading_zeros());
    for j in 0..amps.len() {
        if j as u64 & pivot != 0 {
            continue;
        }
        let k = j ^ x as usize;
        let (aj, ak) = (amps[j], amps[k]);
        amps[k] = sign(j) * aj;
        amps[j] = sign(k) * ak;
    }
}

/// `amps <- exp(i * theta * P) amps` for a Hermitian (phase ±1) `P`.
pub(crate) fn exp_pauli_vec(amps: &mut [Complex64], theta: f64, p: &PauliTerm) {
    let (c, s) = (theta.cos(), theta.sin());
    let mut pa = amps.to_vec();
    apply_pauli_vec(&mut pa, p);
    let is = Complex64::new(0.0, s);
    for (a, b) in amps.iter_mut().zip(pa) {
        *a = *a * c + is * b;
    }
}

/// Multiplies `state` by `exp(i * theta * p)`, which for a Hermitian Pauli
/// string equals `cos(theta) I + i sin(theta) p`.
pub fn pauli_exp_apply(theta: f64, p: &PauliTerm, state: &QuantumState) -> Result<QuantumState> {
    if p.phase() != Phase::ONE {
        return Err(Error::InvalidGenerator(format!(
            "exponent generator must have phase +1, got {p}"
        )));
    }
    if p.n_qubits() != state.n_qubits() {
        return Err(Error::Dimension {
            expected: state.n_qubits(),
            found: p.n_qubits(),
        });
    }
    let mut out = state.clone();
    out.apply_pauli_rotation(-2.0 * theta, p);
    Ok(out)
}

/// A complex-weighted sum of Pauli terms on a common register.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(Complex64, PauliTerm)>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(n_qubits: usize, terms: Vec<(Complex64, PauliTerm)>) -> Result<Self> {
        for (_, t) in &terms {
            if t.n_qubits() != n_qubits {
                return Err(Error::Dimension {
                    expected: n_qubits,
                    found: t.n_qubits(),
                });
            }
        }
        Ok(PauliSum { n_qubits, terms })
    }

    /// Parses `(coefficient, MSB-first label)` pairs, a convenience for tests
    /// and hand-written Hamiltonians.
    pub fn from_labels(terms: &[(f64, &str)]) -> Result<Self> {
        let parsed: Vec<(Complex64, PauliTerm)> = terms
            .iter()
            .map(|&(c, l)| Ok((Complex64::new(c, 0.0), PauliTerm::parse_label(l)?)))
            .collect::<Result<_>>()?;
        let n = parsed.first().map(|(_, t)| t.n_qubits()).ok_or_else(|| {
            Error::InvalidParameter("cannot infer qubit count from an empty list".into())
        })?;
        PauliSum::from_terms(n, parsed)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(Complex64, PauliTerm)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, coeff: Complex64, term: PauliTerm) -> Result<()> {
        if term.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: term.n_qubits(),
            });
        }
        self.terms.push((coeff, term));
        Ok(())
    }

    /// Folds phases into coefficients, merges equal letter sequences (keeping
    /// first-occurrence order) and drops coefficients below [`DROP_TOLERANCE`].
    pub fn normalized(&self) -> PauliSum {
        let mut index: HashMap<(Vec<u64>, Vec<u64>), usize> = HashMap::new();
        let mut merged: Vec<(Complex64, PauliTerm)> = Vec::new();
        for (c, t) in &self.terms {
            let coeff = c * t.phase().to_complex();
            let bare = t.clone().with_phase(Phase::ONE);
            match index.get(&bare.key()) {
                Some(&i) => merged[i].0 += coeff,
                None => {
                    index.insert(bare.key(), merged.len());
                    merged.push((coeff, bare));
                }
            }
        }
        merged.retain(|(c, _)| c.norm() >= DROP_TOLERANCE);
        PauliSum {
            n_qubits: self.n_qubits,
            terms: merged,
        }
    }

    /// [`normalized`](Self::normalized) with terms sorted by label, so equal
    /// operators compare equal regardless of term order.
    pub fn canonical(&self) -> PauliSum {
        let mut out = self.normalized();
        out.terms.sort_by_key(|(_, t)| t.label());
        out
    }

    pub fn scaled(&self, s: Complex64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(c, t)| (c * s, t.clone())).collect(),
        }
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms,
        }
        .normalized())
    }

    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                terms.push((a * b, p.mul(q)?));
            }
        }
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms,
        }
        .normalized())
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|(c, t)| (c.conj(), t.adjoint()))
                .collect(),
        }
    }

    /// Largest imaginary part among normalized coefficients; zero iff Hermitian.
    pub fn hermiticity_residue(&self) -> f64 {
        self.normalized()
            .terms
            .iter()
            .map(|(c, _)| c.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residue() <= tol
    }

    /// Sum of coefficient magnitudes, an upper bound on the operator norm.
    pub fn one_norm(&self) -> f64 {
        self.normalized().terms.iter().map(|(c, _)| c.norm()).sum()
    }

    /// Dense `2^n x 2^n` matrix in little-endian basis order.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > DENSE_QUBIT_CAP {
            return Err(Error::Resource(format!(
                "dense matrix of {} qubits exceeds the cap of {DENSE_QUBIT_CAP}",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (c, t) in &self.terms {
            let (x, z) = (t.x_mask() as usize, t.z_mask() as usize);
            let f = c * t.base_factor();
            for j in 0..dim {
                let v = if (j & z).count_ones() % 2 == 1 { -f } else { f };
                m[(j ^ x, j)] += v;
            }
        }
        Ok(m)
    }

    /// Applies the sum to a state vector, returning `H |psi>`.
    pub(crate) fn apply_vec(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        let mut scratch = amps.to_vec();
        for (c, t) in &self.terms {
            scratch.copy_from_slice(amps);
            apply_pauli_vec(&mut scratch, t);
            for (o, s) in out.iter_mut().zip(&scratch) {
                *o += c * s;
            }
        }
        out
    }
}

impl fmt::Display for PauliSum {
    /// One term per line: `<re> <im> <letters>` with letters MSB-first and
    /// any term phase folded into the coefficient.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, t) in &self.terms {
            let c = c * t.phase().to_complex();
            writeln!(f, "{:?} {:?} {}", c.re, c.im, t.label())?;
        }
        Ok(())
    }
}

pub(crate) fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let normalized = tok.replace('\u{2212}', "-");
    normalized.parse::<f64>().map_err(|e| Error::Parse {
        line,
        msg: format!("bad number {tok:?}: {e}"),
    })
}

impl FromStr for PauliSum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n = None;
        for (i, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `<re> <im> <letters>`, got {line:?}"),
                });
            }
            let re = parse_real(toks[0], i + 1)?;
            let im = parse_real(toks[1], i + 1)?;
            let term = PauliTerm::parse_label(toks[2]).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            match n {
                None => n = Some(term.n_qubits()),
                Some(k) if k != term.n_qubits() => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("term has {} qubits, expected {k}", term.n_qubits()),
                    })
                }
                _ => {}
            }
            terms.push((Complex64::new(re, im), term));
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "no terms; qubit count cannot be inferred".into(),
        })?;
        PauliSum::from_terms(n, terms)
    }
}
