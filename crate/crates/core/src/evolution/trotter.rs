use rayon::prelude::*;
use serde::Serialize;

use super::exact::{exact_evolve, exact_unitary};
use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::pauli::{Letter, PauliSum, PauliTerm, Phase};
use crate::state::{run, QuantumState};

/// Product-formula settings: order 1 or an even order, `steps` repetitions
/// of the formula over total time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrotterPlan {
    pub order: usize,
    pub steps: usize,
    pub time: f64,
    /// Permutation of the Hamiltonian's terms; `None` keeps their order.
    pub term_order: Option<Vec<usize>>,
}

impl TrotterPlan {
    pub fn new(order: usize, steps: usize, time: f64) -> Result<Self> {
        let plan = TrotterPlan {
            order,
            steps,
            time,
            term_order: None,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_term_order(mut self, order: Vec<usize>) -> Self {
        self.term_order = Some(order);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || (self.order > 1 && self.order % 2 == 1) {
            return Err(Error::Plan(format!(
                "order must be 1 or even, got {}",
                self.order
            )));
        }
        if self.steps == 0 {
            return Err(Error::Plan("at least one step is required".into()));
        }
        if !self.time.is_finite() {
            return Err(Error::Plan("time must be finite".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.time / self.steps as f64
    }
}

/// `p_k = 1 / (4 - 4^{1/(2k-1)})` used by the order-`2k` recursion.
pub fn suzuki_coefficient(k: usize) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (2.0 * k as f64 - 1.0)))
}

/// Relative durations of the second-order blocks making up one step of the
/// given even order.
fn second_order_blocks(order: usize) -> Vec<f64> {
    if order == 2 {
        return vec![1.0];
    }
    let p = suzuki_coefficient(order / 2);
    let inner = second_order_blocks(order - 2);
    let mut out = Vec::with_capacity(inner.len() * 5);
    for scale in [p, p, 1.0 - 4.0 * p, p, p] {
        out.extend(inner.iter().map(|f| f * scale));
    }
    out
}

/// Gate for `exp(-i coeff * tau * P)`, using the named two-qubit rotations
/// where they apply.
pub fn pauli_evolution_gate(coeff: f64, tau: f64, p: &PauliTerm) -> Gate {
    let theta = 2.0 * coeff * tau;
    let support = p.support();
    let letters: Vec<Letter> = support.iter().map(|&q| p.letter(q)).collect();
    use Letter::*;
    let (kind, qubits) = match letters.as_slice() {
        [] => (GateKind::GlobalPhase(-coeff * tau), vec![]),
        [X] => (GateKind::Rx(theta), support),
        [Y] => (GateKind::Ry(theta), support),
        [Z] => (GateKind::Rz(theta), support),
        [X, X] => (GateKind::Rxx(theta), support),
        [Y, Y] => (GateKind::Ryy(theta), support),
        [Z, Z] => (GateKind::Rzz(theta), support),
        [Z, X] => (GateKind::Rzx(theta), support),
        [X, Z] => (GateKind::Rzx(theta), vec![support[1], support[0]]),
        _ => (GateKind::PauliRotation { theta, letters }, support),
    };
    Gate::new(kind, qubits)
}

fn real_terms(h: &PauliSum, order: &Option<Vec<usize>>) -> Result<Vec<(f64, PauliTerm)>> {
    let terms = h.terms();
    let idx: Vec<usize> = match order {
        Some(perm) => {
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            if sorted != (0..terms.len()).collect::<Vec<_>>() {
                return Err(Error::Plan(format!(
                    "term order is not a permutation of {} terms",
                    terms.len()
                )));
            }
            perm.clone()
        }
        None => (0..terms.len()).collect(),
    };
    idx.into_iter()
        .map(|i| {
            let (c, t) = &terms[i];
            let c = c * t.phase().to_complex();
            if c.im.abs() > 1e-12 {
                return Err(Error::InvalidGenerator(format!(
                    "term {} has non-real coefficient {c}",
                    t.label()
                )));
            }
            Ok((c.re, t.clone().with_phase(Phase::ONE)))
        })
        .collect()
}

/// Circuit approximating `exp(-i t H)` with the plan's product formula.
/// Order 1 applies the terms in sequence; order 2 is a forward half-step
/// followed by the reversed half-step; higher even orders nest second-order
/// blocks through the `p_k` recursion.
pub fn trotter_circuit(h: &PauliSum, plan: &TrotterPlan) -> Result<Circuit> {
    plan.validate()?;
    let terms = real_terms(h, &plan.term_order)?;
    let dt = plan.dt();
    let mut step = Vec::new();
    if plan.order == 1 {
        for (c, p) in &terms {
            step.push(pauli_evolution_gate(*c, dt, p));
        }
    } else {
        for f in second_order_blocks(plan.order) {
            let half = f * dt / 2.0;
            for (c, p) in terms.iter() {
                step.push(pauli_evolution_gate(*c, half, p));
            }
            for (c, p) in terms.iter().rev() {
                step.push(pauli_evolution_gate(*c, half, p));
            }
        }
    }
    let mut circ = Circuit::new(h.n_qubits());
    for _ in 0..plan.steps {
        for g in &step {
            circ.push(g.clone())?;
        }
    }
    Ok(circ)
}

/// Spectral-norm distance between the product formula and `exp(-i t H)`.
pub fn operator_error(h: &PauliSum, plan: &TrotterPlan) -> Result<f64> {
    let approx = trotter_circuit(h, plan)?.unitary()?;
    let exact = exact_unitary(h, plan.time)?;
    Ok(spectral_norm(&(approx - exact)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub t: f64,
    pub value: f64,
    pub exact_value: f64,
    pub abs_error: f64,
}

/// `<obs>` along a time grid under the product formula (steps and order from
/// `plan`, time replaced by each grid point) against exact evolution.
pub fn observable_sweep(
    h: &PauliSum,
    plan: &TrotterPlan,
    initial: &QuantumState,
    obs: &PauliSum,
    times: &[f64],
) -> Result<Vec<SweepPoint>> {
    times
        .par_iter()
        .map(|&t| {
            let p = TrotterPlan {
                time: t,
                ..plan.clone()
            };
            let approx = run(&trotter_circuit(h, &p)?, initial, None)?;
            let exact = exact_evolve(h, t, initial)?;
            let value = approx.expectation(obs)?;
            let exact_value = exact.expectation(obs)?;
            Ok(SweepPoint {
                t,
                value,
                exact_value,
                abs_error: (value - exact_value).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{tight_binding_pauli, TightBindingSpec};

    #[test]
    fn p2_value() {
        assert!((suzuki_coefficient(2) - 0.4144907717).abs() < 1e-10);
    }

    #[test]
    fn block_durations_sum_to_one() {
        for order in [2, 4, 6, 8] {
            let total: f64 = second_order_blocks(order).iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "order {order}");
        }
        assert_eq!(second_order_blocks(4).len(), 5);
        assert_eq!(second_order_blocks(6).len(), 25);
    }

    #[test]
    fn odd_order_rejected() {
        assert!(matches!(TrotterPlan::new(3, 1, 1.0), Err(Error::Plan(_))));
        assert!(matches!(TrotterPlan::new(0, 1, 1.0), Err(Error::Plan(_))));
        assert!(matches!(TrotterPlan::new(2, 0, 1.0), Err(Error::Plan(_))));
    }

    #[test]
    fn first_order_gate_sequence() {
        let h = tight_binding_pauli(&TightBindingSpec::default()).unwrap();
        let circ = trotter_circuit(&h, &TrotterPlan::new(1, 2, 1.0).unwrap()).unwrap();
        assert_eq!(circ.len(), 16);
        let g0 = &circ.ops()[0];
        assert_eq!(g0.kind, GateKind::Rxx(-0.5));
        assert_eq!(g0.qubits, vec![0, 1]);
        assert_eq!(circ.ops()[1].kind, GateKind::Ryy(-0.5));
        assert_eq!(circ.ops()[4].kind, GateKind::Rxx(-0.6 * 0.5));
        assert_eq!(circ.ops()[4].qubits, vec![2, 3]);
    }

    #[test]
    fn zero_time_is_identity() {
        let h = tight_binding_pauli(&TightBindingSpec::default()).unwrap();
        let u = trotter_circuit(&h, &TrotterPlan::new(1, 1, 0.0).unwrap())
            .unwrap()
            .unitary()
            .unwrap();
        assert!(crate::linalg::max_abs_diff(&u, &crate::linalg::identity(32)) < 1e-10);
    }

    #[test]
    fn commuting_terms_exact() {
        let h = PauliSum::from_labels(&[(0.4, "ZZI"), (-1.1, "IZZ"), (0.7, "ZIZ"), (0.3, "III")])
            .unwrap();
        for order in [1, 2, 4] {
            let plan = TrotterPlan::new(order, 1, 2.3).unwrap();
            assert!(operator_error(&h, &plan).unwrap() < 1e-10);
        }
    }

    #[test]
    fn higher_order_converges_faster() {
        let h = PauliSum::from_labels(&[(1.0, "XX"), (0.5, "ZI"), (0.3, "IY")]).unwrap();
        let e1 = operator_error(&h, &TrotterPlan::new(1, 4, 1.0).unwrap()).unwrap();
        let e2 = operator_error(&h, &TrotterPlan::new(2, 4, 1.0).unwrap()).unwrap();
        let e4 = operator_error(&h, &TrotterPlan::new(4, 4, 1.0).unwrap()).unwrap();
        assert!(e2 < e1 && e4 < e2, "{e1} {e2} {e4}");
    }

    #[test]
    fn term_order_permutation() {
        let h = PauliSum::from_labels(&[(1.0, "XX"), (0.5, "ZI")]).unwrap();
        let plan = TrotterPlan::new(1, 1, 1.0)
            .unwrap()
            .with_term_order(vec![1, 0]);
        let circ = trotter_circuit(&h, &plan).unwrap();
        assert_eq!(circ.ops()[0].kind, GateKind::Rz(1.0));
        let bad = TrotterPlan::new(1, 1, 1.0)
            .unwrap()
            .with_term_order(vec![0, 0]);
        assert!(trotter_circuit(&h, &bad).is_err());
    }

    #[test]
    fn xz_term_maps_to_rzx() {
        let p = PauliTerm::parse_label("ZX").unwrap();
        let g = pauli_evolution_gate(0.5, 1.0, &p);
        assert_eq!(g.kind, GateKind::Rzx(1.0));
        assert_eq!(g.qubits, vec![1, 0]);
        let generic = PauliTerm::parse_label("XYZ").unwrap();
        assert!(matches!(
            pauli_evolution_gate(0.5, 1.0, &generic).kind,
            GateKind::PauliRotation { .. }
        ));
    }
}
