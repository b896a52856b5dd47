//! Calibration-driven noise model.
//!
//! Every gate is followed by depolarizing noise on the qubits it touches with
//! probability `1 - f` for the relevant gate fidelity `f`, and optionally by
//! amplitude and phase damping derived from `T1`/`T2` and the gate duration.
//! Readout flips are applied at sampling time.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::circuit::{Gate, GateKind};
use crate::error::{Error, Result};
use crate::state::{Channel, QuantumState};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReadoutError {
    /// Probability of reading 1 when the qubit is in `|0>`.
    pub p1_given_0: f64,
    /// Probability of reading 0 when the qubit is in `|1>`.
    pub p0_given_1: f64,
}

impl ReadoutError {
    pub fn new(p1_given_0: f64, p0_given_1: f64) -> Self {
        ReadoutError {
            p1_given_0,
            p0_given_1,
        }
    }

    pub fn mean_flip(&self) -> f64 {
        0.5 * (self.p1_given_0 + self.p0_given_1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub t1_us: f64,
    pub t2_us: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Depolarizing probability after single-qubit gates.
    pub depol_1q: f64,
    /// Depolarizing probability after gates on two or more qubits.
    pub depol_2q: f64,
    pub depol_1q_per_qubit: BTreeMap<usize, f64>,
    /// Keyed by the sorted qubit pair.
    pub depol_2q_per_pair: BTreeMap<(usize, usize), f64>,
    pub readout: BTreeMap<usize, ReadoutError>,
    pub relaxation: BTreeMap<usize, Relaxation>,
    pub duration_1q_ns: f64,
    pub duration_2q_ns: f64,
    /// Scale the RZX depolarizing probability by `|theta| / (pi/2)`.
    pub scale_rzx_by_angle: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            depol_1q: 0.0,
            depol_2q: 0.0,
            depol_1q_per_qubit: BTreeMap::new(),
            depol_2q_per_pair: BTreeMap::new(),
            readout: BTreeMap::new(),
            relaxation: BTreeMap::new(),
            duration_1q_ns: 35.0,
            duration_2q_ns: 300.0,
            scale_rzx_by_angle: true,
        }
    }
}

fn check_probability(what: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "{what} = {p} is outside [0, 1]"
        )));
    }
    Ok(())
}

impl NoiseSpec {
    pub fn depolarizing(depol_1q: f64, depol_2q: f64) -> Self {
        NoiseSpec {
            depol_1q,
            depol_2q,
            ..Default::default()
        }
    }

    /// Readout flips only, identical on the first `n_qubits` qubits.
    pub fn readout_only(n_qubits: usize, err: ReadoutError) -> Self {
        NoiseSpec {
            readout: (0..n_qubits).map(|q| (q, err)).collect(),
            ..Default::default()
        }
    }

    pub fn with_readout(mut self, qubit: usize, err: ReadoutError) -> Self {
        self.readout.insert(qubit, err);
        self
    }

    pub fn readout_for(&self, qubit: usize) -> ReadoutError {
        self.readout.get(&qubit).copied().unwrap_or_default()
    }

    pub fn has_readout_error(&self) -> bool {
        self.readout
            .values()
            .any(|r| r.p1_given_0 > 0.0 || r.p0_given_1 > 0.0)
    }

    /// Whether any gate is followed by a nontrivial channel.
    pub fn has_gate_noise(&self) -> bool {
        self.depol_1q > 0.0
            || self.depol_2q > 0.0
            || self.depol_1q_per_qubit.values().any(|&p| p > 0.0)
            || self.depol_2q_per_pair.values().any(|&p| p > 0.0)
            || !self.relaxation.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("depol_1q", self.depol_1q)?;
        check_probability("depol_2q", self.depol_2q)?;
        for p in self
            .depol_1q_per_qubit
            .values()
            .chain(self.depol_2q_per_pair.values())
        {
            check_probability("depolarizing probability", *p)?;
        }
        for r in self.readout.values() {
            check_probability("p(1|0)", r.p1_given_0)?;
            check_probability("p(0|1)", r.p0_given_1)?;
        }
        for (q, r) in &self.relaxation {
            if r.t1_us <= 0.0 || r.t2_us <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "qubit {q}: T1 and T2 must be positive"
                )));
            }
            if r.t2_us > 2.0 * r.t1_us {
                return Err(Error::InvalidParameter(format!(
                    "qubit {q}: T2 = {} exceeds 2 T1 = {}",
                    r.t2_us,
                    2.0 * r.t1_us
                )));
            }
        }
        if self.duration_1q_ns < 0.0 || self.duration_2q_ns < 0.0 {
            return Err(Error::InvalidParameter("negative gate duration".into()));
        }
        Ok(())
    }

    fn gate_depolarizing(&self, gate: &Gate) -> f64 {
        match gate.qubits.as_slice() {
            [] => 0.0,
            [q] => *self.depol_1q_per_qubit.get(q).unwrap_or(&self.depol_1q),
            [a, b, ..] => {
                let key = ((*a).min(*b), (*a).max(*b));
                let p = *self.depol_2q_per_pair.get(&key).unwrap_or(&self.depol_2q);
                match gate.kind {
                    GateKind::Rzx(theta) if self.scale_rzx_by_angle => {
                        (p * wrap_angle(theta).abs() / FRAC_PI_2).min(1.0)
                    }
                    _ => p,
                }
            }
        }
    }

    /// Applies the noise following `gate` to a mixed state.
    pub(crate) fn apply_after(&self, state: &mut QuantumState, gate: &Gate) -> Result<()> {
        let p = self.gate_depolarizing(gate);
        state.depolarize(p, &gate.qubits)?;
        if self.relaxation.is_empty() || gate.qubits.is_empty() {
            return Ok(());
        }
        let duration = if gate.qubits.len() == 1 {
            self.duration_1q_ns
        } else {
            self.duration_2q_ns
        };
        for &q in &gate.qubits {
            if let Some(r) = self.relaxation.get(&q) {
                *state = crate::state::apply_channel(
                    state,
                    Channel::amplitude_damping_for(duration, r.t1_us),
                    &[q],
                )?;
                *state = crate::state::apply_channel(
                    state,
                    Channel::phase_damping_for(duration, r.t1_us, r.t2_us),
                    &[q],
                )?;
            }
        }
        Ok(())
    }
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}
