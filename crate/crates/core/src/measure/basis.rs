use rand::Rng;
use serde::Serialize;

use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::pauli::{Letter, PauliTerm, Phase};
use crate::sampling::{sample_qubits, stream_rng};
use crate::state::{run, QuantumState};

/// Sampled estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Estimates `<p>` on stream 0 of `seed`; see [`measure_pauli_with_rng`].
pub fn measure_pauli(
    state: &QuantumState,
    p: &PauliTerm,
    shots: u64,
    noise: Option<&NoiseSpec>,
    seed: u64,
) -> Result<Estimate> {
    measure_pauli_with_rng(state, p, shots, noise, &mut stream_rng(seed, 0))
}

/// Estimates `<p>` from `shots` measurements after rotating each X or Y
/// site into the Z basis (H for X, S^dag then H for Y) and reading the
/// parity of the support. With `q` the fraction of odd parities, the
/// standard error is `2 sqrt(q (1 - q) / N)`.
pub fn measure_pauli_with_rng<R: Rng + ?Sized>(
    state: &QuantumState,
    p: &PauliTerm,
    shots: u64,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<Estimate> {
    if p.phase() != Phase::ONE {
        return Err(Error::InvalidGenerator(format!(
            "measured Pauli must have phase +1, got {p}"
        )));
    }
    if p.n_qubits() != state.n_qubits() {
        return Err(Error::Dimension {
            expected: state.n_qubits(),
            found: p.n_qubits(),
        });
    }
    let support = p.support();
    if support.is_empty() {
        return Ok(Estimate {
            value: 1.0,
            stderr: 0.0,
        });
    }
    let mut rot = Circuit::new(state.n_qubits());
    for &q in &support {
        match p.letter(q) {
            Letter::X => {
                rot.add(GateKind::H, &[q])?;
            }
            Letter::Y => {
                rot.add(GateKind::Sdg, &[q])?;
                rot.add(GateKind::H, &[q])?;
            }
            _ => {}
        }
    }
    let rotated = run(&rot, state, None)?;
    let counts = sample_qubits(&rotated, &support, shots, noise, rng)?;
    let odd: u64 = counts
        .iter()
        .filter(|(k, _)| k.count_ones() % 2 == 1)
        .map(|(_, c)| c)
        .sum();
    let n = shots as f64;
    let q = odd as f64 / n;
    Ok(Estimate {
        value: 1.0 - 2.0 * q,
        stderr: 2.0 * (q * (1.0 - q) / n).sqrt(),
    })
}
