use num_complex::Complex64;
use serde::Serialize;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::evolution::exact_unitary;
use crate::linalg::CMatrix;
use crate::pauli::{PauliSum, PauliTerm};
use crate::sampling::stream_rng;
use crate::state::{run, QuantumState};

use super::basis::measure_pauli_with_rng;

/// How the ancilla's `<X>` and `<Y>` are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxMode {
    Exact,
    /// Independent shot budgets for `X_a` and `Y_a` on streams 0 and 1.
    Sampled {
        shots: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxEstimate {
    pub value: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

fn check_width(c: &Circuit, n: usize) -> Result<()> {
    if c.n_qubits() != n {
        return Err(Error::Dimension {
            expected: n,
            found: c.n_qubits(),
        });
    }
    Ok(())
}

/// Ancilla circuit on `n + 1` qubits (ancilla is qubit `n`): H on the
/// ancilla, `v` conditioned on `|1>`, then `u` conditioned on `|0>`.
pub fn aux_circuit(u: &Circuit, v: &Circuit) -> Result<Circuit> {
    check_width(v, u.n_qubits())?;
    let n = u.n_qubits();
    let mut circ = Circuit::new(n + 1);
    circ.h(n);
    circ.append(&v.controlled(false))?;
    circ.append(&u.controlled(true))?;
    Ok(circ)
}

/// Correlation circuit: `b` on `|1>`, uncontrolled `exp(-i t H)`, then `a`
/// on `|0>`. The ancilla then carries `<psi| U^dag A^dag U B |psi>`.
pub fn correlation_circuit(a: &Circuit, b: &Circuit, h: &PauliSum, t: f64) -> Result<Circuit> {
    check_width(b, a.n_qubits())?;
    let n = a.n_qubits();
    if h.n_qubits() != n {
        return Err(Error::Dimension {
            expected: n,
            found: h.n_qubits(),
        });
    }
    let mut circ = Circuit::new(n + 1);
    circ.h(n);
    circ.append(&b.controlled(false))?;
    circ.push(Gate::new(
        GateKind::Unitary(exact_unitary(h, t)?),
        (0..n).collect(),
    ))?;
    circ.append(&a.controlled(true))?;
    Ok(circ)
}

fn ancilla_readout(circ: &Circuit, psi: &QuantumState, mode: AuxMode) -> Result<AuxEstimate> {
    let n = psi.n_qubits();
    // ancilla starts in |0>; the circuit's H prepares |+>
    let extended = {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (n + 1)];
        match psi {
            QuantumState::Pure { amps: a, .. } => {
                amps[..a.len()].copy_from_slice(a);
                QuantumState::from_amplitudes(amps)?
            }
            QuantumState::Mixed { .. } => {
                let rho = psi.density_matrix();
                let dim = 1 << (n + 1);
                let mut big = CMatrix::zeros(dim, dim);
                big.view_mut((0, 0), (1 << n, 1 << n)).copy_from(&rho);
                QuantumState::from_density(&big)?
            }
        }
    };
    let out = run(circ, &extended, None)?;
    let pad = "I".repeat(n);
    let x = PauliTerm::parse_label(&format!("X{pad}"))?;
    let y = PauliTerm::parse_label(&format!("Y{pad}"))?;
    match mode {
        AuxMode::Exact => {
            let one = Complex64::new(1.0, 0.0);
            let re = out.expectation(&PauliSum::from_terms(n + 1, vec![(one, x)])?)?;
            let im = out.expectation(&PauliSum::from_terms(n + 1, vec![(one, y)])?)?;
            Ok(AuxEstimate {
                value: Complex64::new(re, im),
                stderr_re: 0.0,
                stderr_im: 0.0,
            })
        }
        AuxMode::Sampled { shots, seed } => {
            let re = measure_pauli_with_rng(&out, &x, shots, None, &mut stream_rng(seed, 0))?;
            let im = measure_pauli_with_rng(&out, &y, shots, None, &mut stream_rng(seed, 1))?;
            Ok(AuxEstimate {
                value: Complex64::new(re.value, im.value),
                stderr_re: re.stderr,
                stderr_im: im.stderr,
            })
        }
    }
}

/// `<psi| U^dag V |psi>` read from `<X_a> + i <Y_a>` of an ancilla.
pub fn aux_overlap(
    u: &Circuit,
    v: &Circuit,
    psi: &QuantumState,
    mode: AuxMode,
) -> Result<AuxEstimate> {
    check_width(u, psi.n_qubits())?;
    ancilla_readout(&aux_circuit(u, v)?, psi, mode)
}

/// `C_AB(t) = <exp(iHt) A^dag exp(-iHt) B>` in state `psi`.
pub fn correlation(
    a: &Circuit,
    b: &Circuit,
    h: &PauliSum,
    t: f64,
    psi: &QuantumState,
    mode: AuxMode,
) -> Result<AuxEstimate> {
    check_width(a, psi.n_qubits())?;
    ancilla_readout(&correlation_circuit(a, b, h, t)?, psi, mode)
}
