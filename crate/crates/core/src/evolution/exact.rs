use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian, mat_vec, CMatrix};
use crate::pauli::PauliSum;
use crate::state::QuantumState;

/// `exp(-i t H)` as a dense matrix.
pub fn exact_unitary(h: &PauliSum, t: f64) -> Result<CMatrix> {
    expm_hermitian(&h.dense_matrix()?, t)
}

/// `exp(-i t H)` applied to a pure or mixed state.
pub fn exact_evolve(h: &PauliSum, t: f64, state: &QuantumState) -> Result<QuantumState> {
    if h.n_qubits() != state.n_qubits() {
        return Err(Error::Dimension {
            expected: state.n_qubits(),
            found: h.n_qubits(),
        });
    }
    let u = exact_unitary(h, t)?;
    match state {
        QuantumState::Pure { amps, .. } => QuantumState::from_amplitudes(mat_vec(&u, amps)),
        QuantumState::Mixed { .. } => {
            let rho = state.density_matrix();
            QuantumState::from_density(&(&u * rho * u.adjoint()))
        }
    }
}
