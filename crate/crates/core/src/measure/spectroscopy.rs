use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::evolution::exact_unitary;
use crate::linalg::CMatrix;
use crate::pauli::{Letter, PauliSum, PauliTerm};
use crate::state::QuantumState;

/// Probe-qubit spectroscopy settings. The probe is qubit 0 and the system
/// occupies qubits `1..=n`; `probe_target` indexes the system qubit coupled
/// to the probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyPlan {
    pub omega_grid: Vec<f64>,
    pub dt: f64,
    pub coupling: f64,
    pub n_steps: usize,
    pub probe_target: usize,
}

impl SpectroscopyPlan {
    pub fn validate(&self, n_system: usize) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::Plan(
                "spectroscopy needs at least one repetition".into(),
            ));
        }
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(Error::Plan(format!("dt must be positive, got {}", self.dt)));
        }
        if self.probe_target >= n_system {
            return Err(Error::Plan(format!(
                "probe target {} outside a {n_system}-qubit system",
                self.probe_target
            )));
        }
        if self.omega_grid.is_empty() {
            return Err(Error::Plan("empty omega grid".into()));
        }
        Ok(())
    }
}

/// Probe `<Z>` at each probe energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectroscopyCurve {
    pub omega: Vec<f64>,
    pub probe_z: Vec<f64>,
}

impl SpectroscopyCurve {
    /// Probe energy with the lowest `<Z>`.
    pub fn deepest_dip(&self) -> f64 {
        let i = (0..self.probe_z.len())
            .min_by(|&a, &b| self.probe_z[a].total_cmp(&self.probe_z[b]))
            .expect("non-empty curve");
        self.omega[i]
    }

    /// Local minima of `<Z>` at least `depth` below 1.
    pub fn dips(&self, depth: f64) -> Vec<f64> {
        let z = &self.probe_z;
        (0..z.len())
            .filter(|&i| {
                let left = if i > 0 { z[i - 1] } else { f64::INFINITY };
                let right = if i + 1 < z.len() {
                    z[i + 1]
                } else {
                    f64::INFINITY
                };
                z[i] <= 1.0 - depth && z[i] <= left && z[i] < right
            })
            .map(|i| self.omega[i])
            .collect()
    }

    /// Excitation probability `(1 - <Z>) / 2` as an intensity curve.
    pub fn intensity(&self) -> Vec<f64> {
        self.probe_z
            .iter()
            .map(|z| ((1.0 - z) / 2.0).max(0.0))
            .collect()
    }
}

fn with_probe(psi0: &QuantumState) -> Result<QuantumState> {
    // probe is the least significant bit, so system index s maps to 2s
    match psi0 {
        QuantumState::Pure { amps, .. } => {
            let mut out = vec![Complex64::new(0.0, 0.0); amps.len() * 2];
            for (s, a) in amps.iter().enumerate() {
                out[s << 1] = *a;
            }
            QuantumState::from_amplitudes(out)
        }
        QuantumState::Mixed { .. } => {
            let rho = psi0.density_matrix();
            let dim = rho.nrows() * 2;
            let big = CMatrix::from_fn(dim, dim, |r, c| {
                if r & 1 == 0 && c & 1 == 0 {
                    rho[(r >> 1, c >> 1)]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            QuantumState::from_density(&big)
        }
    }
}

/// Repeats `[Rz(-omega dt) on the probe, exp(+i dt H) on the system]` then
/// `exp(-i c dt X_probe X_target)` for `n_steps` rounds and reads the
/// probe's `<Z>`. Dips sit where `omega` matches a transition `E_b - E_a`
/// out of a state populated in `psi0`.
pub fn spectroscopy(
    h: &PauliSum,
    plan: &SpectroscopyPlan,
    psi0: &QuantumState,
) -> Result<SpectroscopyCurve> {
    let n = psi0.n_qubits();
    if h.n_qubits() != n {
        return Err(Error::Dimension {
            expected: n,
            found: h.n_qubits(),
        });
    }
    plan.validate(n)?;
    let initial = with_probe(psi0)?;
    let system_step = Gate::new(
        GateKind::Unitary(exact_unitary(h, -plan.dt)?),
        (1..=n).collect(),
    );
    let coupling = Gate::new(
        GateKind::Rxx(2.0 * plan.coupling * plan.dt),
        vec![0, plan.probe_target + 1],
    );
    let mut probe_z_obs = vec![Letter::I; n + 1];
    probe_z_obs[0] = Letter::Z;
    let probe_z = PauliSum::from_terms(
        n + 1,
        vec![(
            Complex64::new(1.0, 0.0),
            PauliTerm::from_letters(&probe_z_obs)?,
        )],
    )?;

    let values = plan
        .omega_grid
        .par_iter()
        .map(|&omega| {
            let mut step = Circuit::new(n + 1);
            step.add(GateKind::Rz(-omega * plan.dt), &[0])?;
            step.push(system_step.clone())?;
            step.push(coupling.clone())?;
            let mut state = initial.clone();
            for _ in 0..plan.n_steps {
                for g in step.ops() {
                    state.apply_gate(g);
                }
            }
            state.expectation(&probe_z)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectroscopyCurve {
        omega: plan.omega_grid.clone(),
        probe_z: values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn decoupled_probe_stays_up() {
        let h = PauliSum::from_labels(&[(0.5, "Z")]).unwrap();
        let plan = SpectroscopyPlan {
            omega_grid: grid(-2.0, 2.0, 0.5),
            dt: 0.2,
            coupling: 0.0,
            n_steps: 20,
            probe_target: 0,
        };
        let curve = spectroscopy(&h, &plan, &QuantumState::basis(1, 1).unwrap()).unwrap();
        assert!(curve.probe_z.iter().all(|z| (z - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_qubit_gap() {
        let gap = 1.3;
        let h = PauliSum::from_labels(&[(gap / 2.0, "Z")]).unwrap();
        let plan = SpectroscopyPlan {
            omega_grid: grid(0.0, 3.0, 0.05),
            dt: 0.2,
            coupling: 0.05,
            n_steps: 150,
            probe_target: 0,
        };
        let curve = spectroscopy(&h, &plan, &QuantumState::basis(1, 1).unwrap()).unwrap();
        assert!(
            (curve.deepest_dip() - gap).abs() <= 0.1 + 1e-9,
            "{}",
            curve.deepest_dip()
        );
        assert!(curve
            .probe_z
            .iter()
            .all(|z| (-1.0 - 1e-12..=1.0 + 1e-12).contains(z)));
    }

    #[test]
    fn rejects_bad_plan() {
        let h = PauliSum::from_labels(&[(0.5, "Z")]).unwrap();
        let mut plan = SpectroscopyPlan {
            omega_grid: vec![0.0],
            dt: 0.2,
            coupling: 0.1,
            n_steps: 0,
            probe_target: 0,
        };
        assert!(spectroscopy(&h, &plan, &QuantumState::zero(1)).is_err());
        plan.n_steps = 1;
        plan.probe_target = 1;
        assert!(spectroscopy(&h, &plan, &QuantumState::zero(1)).is_err());
    }
}
