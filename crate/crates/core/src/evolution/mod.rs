//! Exact, product-formula and linear-combination-of-unitaries time evolution.

mod exact;
mod lcu;
mod trotter;

pub use exact::{exact_evolve, exact_unitary};
pub use lcu::{
    lcu_circuit, lcu_decompose, lcu_evolve, LcuDecomposition, LcuPlan, LcuResult, MAX_LCU_ANCILLAS,
};
pub use trotter::{
    observable_sweep, operator_error, pauli_evolution_gate, suzuki_coefficient, trotter_circuit,
    SweepPoint, TrotterPlan,
};
