//! Second-quantized operators, the Jordan-Wigner map and the tight-binding chain.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{parse_real, Letter, PauliSum, PauliTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ladder {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LadderOp {
    pub mode: usize,
    pub kind: Ladder,
}

impl LadderOp {
    pub fn create(mode: usize) -> Self {
        LadderOp {
            mode,
            kind: Ladder::Create,
        }
    }

    pub fn annihilate(mode: usize) -> Self {
        LadderOp {
            mode,
            kind: Ladder::Annihilate,
        }
    }

    pub fn adjoint(self) -> Self {
        LadderOp {
            mode: self.mode,
            kind: match self.kind {
                Ladder::Create => Ladder::Annihilate,
                Ladder::Annihilate => Ladder::Create,
            },
        }
    }
}

impl fmt::Display for LadderOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Ladder::Create => write!(f, "c+{}", self.mode),
            Ladder::Annihilate => write!(f, "c{}", self.mode),
        }
    }
}

impl FromStr for LadderOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            line: 0,
            msg: format!("invalid ladder token {s:?}"),
        };
        let (kind, digits) = if let Some(d) = s.strip_prefix("c+") {
            (Ladder::Create, d)
        } else if let Some(d) = s.strip_prefix('c') {
            (Ladder::Annihilate, d)
        } else {
            return Err(bad());
        };
        let mode = digits.parse::<usize>().map_err(|_| bad())?;
        Ok(LadderOp { mode, kind })
    }
}

/// Sum of coefficient-weighted products of ladder operators. An empty
/// product is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionExpr {
    n_modes: usize,
    terms: Vec<(Complex64, Vec<LadderOp>)>,
}

impl FermionExpr {
    pub fn new(n_modes: usize) -> Self {
        FermionExpr {
            n_modes,
            terms: Vec::new(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> &[(Complex64, Vec<LadderOp>)] {
        &self.terms
    }

    pub fn push(&mut self, coeff: Complex64, product: Vec<LadderOp>) -> Result<&mut Self> {
        if let Some(op) = product.iter().find(|op| op.mode >= self.n_modes) {
            return Err(Error::Encoding(format!(
                "mode {} out of range for {} modes",
                op.mode, self.n_modes
            )));
        }
        self.terms.push((coeff, product));
        Ok(self)
    }

    /// `c^dag_i c_i`.
    pub fn number(n_modes: usize, mode: usize) -> Result<Self> {
        let mut e = FermionExpr::new(n_modes);
        e.push(
            Complex64::new(1.0, 0.0),
            vec![LadderOp::create(mode), LadderOp::annihilate(mode)],
        )?;
        Ok(e)
    }

    pub fn adjoint(&self) -> FermionExpr {
        FermionExpr {
            n_modes: self.n_modes,
            terms: self
                .terms
                .iter()
                .map(|(c, ops)| (c.conj(), ops.iter().rev().map(|o| o.adjoint()).collect()))
                .collect(),
        }
    }

    pub fn add(&self, other: &FermionExpr) -> FermionExpr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FermionExpr {
            n_modes: self.n_modes.max(other.n_modes),
            terms,
        }
    }

    pub fn mul(&self, other: &FermionExpr) -> FermionExpr {
        let mut terms = Vec::new();
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                let mut prod = p.clone();
                prod.extend(q);
                terms.push((a * b, prod));
            }
        }
        FermionExpr {
            n_modes: self.n_modes.max(other.n_modes),
            terms,
        }
    }
}

impl fmt::Display for FermionExpr {
    /// One term per line: `<re> <im> <token...>` with tokens `c+<i>` / `c<i>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, ops) in &self.terms {
            write!(f, "{:?} {:?}", c.re, c.im)?;
            for op in ops {
                write!(f, " {op}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for FermionExpr {
    type Err = Error;

    /// The mode count is one more than the largest index mentioned.
    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n_modes = 0;
        for (i, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected `<re> <im> <token...>`".into(),
                });
            }
            let c = Complex64::new(parse_real(toks[0], i + 1)?, parse_real(toks[1], i + 1)?);
            let ops = toks[2..]
                .iter()
                .map(|t| {
                    t.parse::<LadderOp>().map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: e.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for op in &ops {
                n_modes = n_modes.max(op.mode + 1);
            }
            terms.push((c, ops));
        }
        Ok(FermionExpr { n_modes, terms })
    }
}

/// Pauli image of one ladder operator on qubit `perm[mode]` with Z strings
/// on the qubits of all lower modes.
fn ladder_image(op: LadderOp, n_qubits: usize, perm: &[usize]) -> Result<PauliSum> {
    let mut x_ops: Vec<(usize, Letter)> = (0..op.mode).map(|m| (perm[m], Letter::Z)).collect();
    let mut y_ops = x_ops.clone();
    x_ops.push((perm[op.mode], Letter::X));
    y_ops.push((perm[op.mode], Letter::Y));
    // c^dag = (X - iY)/2, c = (X + iY)/2
    let y_sign = match op.kind {
        Ladder::Create => -1.0,
        Ladder::Annihilate => 1.0,
    };
    PauliSum::from_terms(
        n_qubits,
        vec![
            (
                Complex64::new(0.5, 0.0),
                PauliTerm::from_sparse(n_qubits, &x_ops)?,
            ),
            (
                Complex64::new(0.0, 0.5 * y_sign),
                PauliTerm::from_sparse(n_qubits, &y_ops)?,
            ),
        ],
    )
}

/// Jordan-Wigner image with mode `i` on qubit `i`.
pub fn jordan_wigner(expr: &FermionExpr, n_modes: usize) -> Result<PauliSum> {
    let identity: Vec<usize> = (0..n_modes).collect();
    jordan_wigner_permuted(expr, n_modes, &identity)
}

/// Jordan-Wigner image with mode `i` on qubit `perm[i]`. The Z string of
/// mode `i` covers the qubits of modes `0..i`.
pub fn jordan_wigner_permuted(
    expr: &FermionExpr,
    n_modes: usize,
    perm: &[usize],
) -> Result<PauliSum> {
    if n_modes == 0 {
        return Err(Error::Encoding("at least one mode is required".into()));
    }
    if perm.len() != n_modes {
        return Err(Error::Encoding(format!(
            "permutation has {} entries for {n_modes} modes",
            perm.len()
        )));
    }
    let mut seen = vec![false; n_modes];
    for &q in perm {
        if q >= n_modes || std::mem::replace(&mut seen[q], true) {
            return Err(Error::Encoding(
                "mode-to-qubit map is not a permutation".into(),
            ));
        }
    }
    let mut total = PauliSum::new(n_modes);
    for (coeff, product) in expr.terms() {
        let mut acc = PauliSum::from_terms(n_modes, vec![(*coeff, PauliTerm::identity(n_modes))])?;
        for op in product {
            if op.mode >= n_modes {
                return Err(Error::Encoding(format!(
                    "mode {} out of range for {n_modes} modes",
                    op.mode
                )));
            }
            acc = acc.mul(&ladder_image(*op, n_modes, perm)?)?;
        }
        total = total.add(&acc)?;
    }
    Ok(total.normalized())
}

/// Nearest-neighbour hopping chain with one bond's amplitude replaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightBindingSpec {
    pub n_sites: usize,
    pub tau: f64,
    pub tau_d: f64,
    pub defect_bond: (usize, usize),
}

impl Default for TightBindingSpec {
    fn default() -> Self {
        TightBindingSpec {
            n_sites: 5,
            tau: 1.0,
            tau_d: 0.6,
            defect_bond: (2, 3),
        }
    }
}

impl TightBindingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidParameter(
                "a chain needs at least 2 sites".into(),
            ));
        }
        let (a, b) = self.defect_bond;
        if a.max(b) >= self.n_sites || a.abs_diff(b) != 1 {
            return Err(Error::InvalidParameter(format!(
                "defect bond ({a}, {b}) is not a bond of a {}-site chain",
                self.n_sites
            )));
        }
        Ok(())
    }

    /// `(left site, hopping amplitude)` for each bond in ascending order.
    pub fn bonds(&self) -> Vec<(usize, f64)> {
        let defect = self.defect_bond.0.min(self.defect_bond.1);
        (0..self.n_sites - 1)
            .map(|i| (i, if i == defect { self.tau_d } else { self.tau }))
            .collect()
    }
}

/// `-sum_bonds t_b (c^dag_i c_{i+1} + c^dag_{i+1} c_i)`.
pub fn tight_binding(spec: &TightBindingSpec) -> Result<FermionExpr> {
    spec.validate()?;
    let mut e = FermionExpr::new(spec.n_sites);
    for (i, t) in spec.bonds() {
        let c = Complex64::new(-t, 0.0);
        e.push(c, vec![LadderOp::create(i), LadderOp::annihilate(i + 1)])?;
        e.push(c, vec![LadderOp::create(i + 1), LadderOp::annihilate(i)])?;
    }
    Ok(e)
}

/// Pauli form of the chain: `-t_b/2 (X_i X_{i+1} + Y_i Y_{i+1})` per bond,
/// XX before YY, bonds in ascending order.
pub fn tight_binding_pauli(spec: &TightBindingSpec) -> Result<PauliSum> {
    spec.validate()?;
    let n = spec.n_sites;
    let mut h = PauliSum::new(n);
    for (i, t) in spec.bonds() {
        let c = Complex64::new(-t / 2.0, 0.0);
        for l in [Letter::X, Letter::Y] {
            h.push(c, PauliTerm::from_sparse(n, &[(i, l), (i + 1, l)])?)?;
        }
    }
    Ok(h.normalized())
}

/// Occupation of one site, `(I - Z_i)/2`.
pub fn site_number(n_sites: usize, site: usize) -> Result<PauliSum> {
    PauliSum::from_terms(
        n_sites,
        vec![
            (Complex64::new(0.5, 0.0), PauliTerm::identity(n_sites)),
            (
                Complex64::new(-0.5, 0.0),
                PauliTerm::from_sparse(n_sites, &[(site, Letter::Z)])?,
            ),
        ],
    )
}

/// Total particle number `sum_i (I - Z_i)/2`.
pub fn total_number(n_sites: usize) -> Result<PauliSum> {
    let mut total = PauliSum::new(n_sites);
    for i in 0..n_sites {
        total = total.add(&site_number(n_sites, i)?)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff};

    #[test]
    fn single_creation() {
        let mut e = FermionExpr::new(1);
        e.push(c(1.0, 0.0), vec![LadderOp::create(0)]).unwrap();
        let p = jordan_wigner(&e, 1).unwrap();
        let expected = PauliSum::from_terms(
            1,
            vec![
                (c(0.5, 0.0), PauliTerm::parse_label("X").unwrap()),
                (c(0.0, -0.5), PauliTerm::parse_label("Y").unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(p, expected);
        // c^dag |0> = |1>
        let m = p.dense_matrix().unwrap();
        assert!((m[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(m[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn number_operator_image() {
        let p = jordan_wigner(&FermionExpr::number(3, 1).unwrap(), 3).unwrap();
        assert_eq!(p, site_number(3, 1).unwrap().normalized());
    }

    #[test]
    fn hopping_pair() {
        let mut e = FermionExpr::new(2);
        e.push(
            c(1.0, 0.0),
            vec![LadderOp::create(0), LadderOp::annihilate(1)],
        )
        .unwrap();
        e.push(
            c(1.0, 0.0),
            vec![LadderOp::create(1), LadderOp::annihilate(0)],
        )
        .unwrap();
        let p = jordan_wigner(&e, 2).unwrap();
        let expected = PauliSum::from_labels(&[(0.5, "XX"), (0.5, "YY")]).unwrap();
        assert!(
            max_abs_diff(
                &p.dense_matrix().unwrap(),
                &expected.dense_matrix().unwrap()
            ) < 1e-12
        );
    }

    #[test]
    fn out_of_range_mode() {
        let mut e = FermionExpr::new(2);
        assert!(matches!(
            e.push(c(1.0, 0.0), vec![LadderOp::create(2)]),
            Err(Error::Encoding(_))
        ));
        let e: FermionExpr = "1 0 c+3 c0".parse().unwrap();
        assert!(matches!(jordan_wigner(&e, 2), Err(Error::Encoding(_))));
    }

    #[test]
    fn scalar_term_is_identity() {
        let e: FermionExpr = "2.5 0\n1 0 c+0 c0".parse().unwrap();
        let p = jordan_wigner(&e, 1).unwrap();
        let m = p.dense_matrix().unwrap();
        assert!((m[(0, 0)] - c(2.5, 0.0)).norm() < 1e-15);
        assert!((m[(1, 1)] - c(3.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn permuted_encoding_relabels_qubits() {
        let e = FermionExpr::number(3, 0).unwrap();
        let p = jordan_wigner_permuted(&e, 3, &[2, 0, 1]).unwrap();
        assert_eq!(p, site_number(3, 2).unwrap().normalized());
        assert!(jordan_wigner_permuted(&e, 3, &[0, 0, 1]).is_err());
    }

    #[test]
    fn smallest_chain() {
        let spec = TightBindingSpec {
            n_sites: 2,
            tau: 1.5,
            tau_d: 1.5,
            defect_bond: (0, 1),
        };
        let e = tight_binding(&spec).unwrap();
        assert_eq!(e.terms().len(), 2);
        assert_eq!(e.to_string(), "-1.5 0.0 c+0 c1\n-1.5 0.0 c+1 c0\n");
    }

    #[test]
    fn five_site_chain_terms() {
        let spec = TightBindingSpec::default();
        let e = tight_binding(&spec).unwrap();
        assert_eq!(e.terms().len(), 8);
        let h = tight_binding_pauli(&spec).unwrap();
        assert_eq!(h.len(), 8);
        let labels: Vec<String> = h.terms().iter().map(|(_, t)| t.label()).collect();
        assert_eq!(labels[0], "IIIXX");
        assert_eq!(labels[1], "IIIYY");
        assert_eq!(labels[4], "IXXII");
        assert_eq!(h.terms()[4].0, c(-0.3, 0.0));
        assert_eq!(h.terms()[6].0, c(-0.5, 0.0));
    }

    #[test]
    fn zero_hopping_is_empty() {
        let spec = TightBindingSpec {
            tau: 0.0,
            tau_d: 0.0,
            ..Default::default()
        };
        assert!(tight_binding_pauli(&spec).unwrap().is_empty());
    }

    #[test]
    fn invalid_specs() {
        let mut spec = TightBindingSpec {
            defect_bond: (1, 3),
            ..Default::default()
        };
        assert!(spec.validate().is_err());
        spec.defect_bond = (4, 5);
        assert!(spec.validate().is_err());
        spec.n_sites = 1;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn text_round_trip() {
        let e = tight_binding(&TightBindingSpec::default()).unwrap();
        let back: FermionExpr = e.to_string().parse().unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn number_operators_are_projectors() {
        for i in 0..3 {
            let m = jordan_wigner(&FermionExpr::number(3, i).unwrap(), 3)
                .unwrap()
                .dense_matrix()
                .unwrap();
            assert!(max_abs_diff(&(&m * &m), &m) < 1e-12);
        }
        let a = site_number(3, 0).unwrap().dense_matrix().unwrap();
        let b = site_number(3, 2).unwrap().dense_matrix().unwrap();
        assert!(max_abs_diff(&(&a * &b), &(&b * &a)) < 1e-12);
    }
}
