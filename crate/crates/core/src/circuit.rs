//! Gates and circuits.
//!
//! A gate's local matrix is indexed with the first listed qubit as the least
//! significant bit, matching the global little-endian convention. Rotations
//! follow `R_P(theta) = exp(-i theta/2 P)`; for `Rzx` on `[a, b]` the Z acts on
//! `a` and the X on `b`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, is_unitary, CMatrix, I, ONE, ZERO};
use crate::pauli::{Letter, PauliTerm, DENSE_QUBIT_CAP};
use crate::state::QuantumState;

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    Sx,
    Sxdg,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    /// `U3(theta, phi, lambda) = Rz(phi) Ry(theta) Rz(lambda)` up to phase.
    U3(f64, f64, f64),
    Cx,
    Cz,
    Rxx(f64),
    Ryy(f64),
    Rzz(f64),
    Rzx(f64),
    /// `exp(-i theta/2 P)` with `letters[k]` acting on the `k`-th listed qubit.
    PauliRotation {
        theta: f64,
        letters: Vec<Letter>,
    },
    /// `base` on the trailing qubits, conditioned on the first listed qubit
    /// being `|1>` (or `|0>` when `on_zero`).
    Controlled {
        base: Box<GateKind>,
        on_zero: bool,
    },
    Unitary(CMatrix),
    /// Scalar `e^{i phi}` on zero qubits.
    GlobalPhase(f64),
}

impl GateKind {
    /// Number of qubits the gate acts on.
    pub fn arity(&self) -> usize {
        use GateKind::*;
        match self {
            GlobalPhase(_) => 0,
            H | X | Y | Z | S | Sdg | Sx | Sxdg | Rx(_) | Ry(_) | Rz(_) | U3(..) => 1,
            Cx | Cz | Rxx(_) | Ryy(_) | Rzz(_) | Rzx(_) => 2,
            PauliRotation { letters, .. } => letters.len(),
            Controlled { base, .. } => base.arity() + 1,
            Unitary(m) => m.nrows().trailing_zeros() as usize,
        }
    }

    pub fn name(&self) -> String {
        use GateKind::*;
        match self {
            H => "h".into(),
            X => "x".into(),
            Y => "y".into(),
            Z => "z".into(),
            S => "s".into(),
            Sdg => "sdg".into(),
            Sx => "sx".into(),
            Sxdg => "sxdg".into(),
            Rx(_) => "rx".into(),
            Ry(_) => "ry".into(),
            Rz(_) => "rz".into(),
            U3(..) => "u3".into(),
            Cx => "cx".into(),
            Cz => "cz".into(),
            Rxx(_) => "rxx".into(),
            Ryy(_) => "ryy".into(),
            Rzz(_) => "rzz".into(),
            Rzx(_) => "rzx".into(),
            PauliRotation { .. } => "pauli_rot".into(),
            Controlled { base, on_zero } => {
                format!("{}c{}", if *on_zero { "o" } else { "" }, base.name())
            }
            Unitary(_) => "unitary".into(),
            GlobalPhase(_) => "global_phase".into(),
        }
    }

    /// Local unitary matrix of size `2^arity`.
    pub fn matrix(&self) -> CMatrix {
        use GateKind::*;
        let h = FRAC_1_SQRT_2;
        let m2 = |a: Complex64, b: Complex64, cc: Complex64, d: Complex64| {
            DMatrix::from_row_slice(2, 2, &[a, b, cc, d])
        };
        match self {
            H => m2(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)),
            X => m2(ZERO, ONE, ONE, ZERO),
            Y => m2(ZERO, -I, I, ZERO),
            Z => m2(ONE, ZERO, ZERO, -ONE),
            S => m2(ONE, ZERO, ZERO, I),
            Sdg => m2(ONE, ZERO, ZERO, -I),
            Sx => m2(c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)),
            Sxdg => m2(c(0.5, -0.5), c(0.5, 0.5), c(0.5, 0.5), c(0.5, -0.5)),
            Rx(t) => {
                let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
                m2(c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0))
            }
            Ry(t) => {
                let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
                m2(c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0))
            }
            Rz(t) => m2(
                Complex64::from_polar(1.0, -t / 2.0),
                ZERO,
                ZERO,
                Complex64::from_polar(1.0, t / 2.0),
            ),
            U3(theta, phi, lam) => {
                let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                m2(
                    c(co, 0.0),
                    -Complex64::from_polar(si, *lam),
                    Complex64::from_polar(si, *phi),
                    Complex64::from_polar(co, phi + lam),
                )
            }
            Cx => {
                let mut m = CMatrix::zeros(4, 4);
                m[(0, 0)] = ONE;
                m[(2, 2)] = ONE;
                m[(3, 1)] = ONE;
                m[(1, 3)] = ONE;
                m
            }
            Cz => CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE])),
            Rxx(t) => rotation_matrix(*t, &[Letter::X, Letter::X]),
            Ryy(t) => rotation_matrix(*t, &[Letter::Y, Letter::Y]),
            Rzz(t) => rotation_matrix(*t, &[Letter::Z, Letter::Z]),
            Rzx(t) => rotation_matrix(*t, &[Letter::Z, Letter::X]),
            PauliRotation { theta, letters } => rotation_matrix(*theta, letters),
            Controlled { base, on_zero } => {
                let b = base.matrix();
                let d = b.nrows();
                let active = if *on_zero { 0 } else { 1 };
                let mut m = CMatrix::identity(2 * d, 2 * d);
                for r in 0..d {
                    for col in 0..d {
                        m[(2 * r + active, 2 * col + active)] = b[(r, col)];
                    }
                }
                m
            }
            Unitary(m) => m.clone(),
            GlobalPhase(phi) => CMatrix::from_element(1, 1, Complex64::from_polar(1.0, *phi)),
        }
    }

    /// Rotation angle for single-parameter gates.
    pub fn angle(&self) -> Option<f64> {
        use GateKind::*;
        match self {
            Rx(t) | Ry(t) | Rz(t) | Rxx(t) | Ryy(t) | Rzz(t) | Rzx(t) => Some(*t),
            PauliRotation { theta, .. } => Some(*theta),
            _ => None,
        }
    }

    pub fn inverse(&self) -> GateKind {
        use GateKind::*;
        match self {
            H | X | Y | Z | Cx | Cz => self.clone(),
            S => Sdg,
            Sdg => S,
            Sx => Sxdg,
            Sxdg => Sx,
            Rx(t) => Rx(-t),
            Ry(t) => Ry(-t),
            Rz(t) => Rz(-t),
            U3(theta, phi, lam) => U3(-theta, -lam, -phi),
            Rxx(t) => Rxx(-t),
            Ryy(t) => Ryy(-t),
            Rzz(t) => Rzz(-t),
            Rzx(t) => Rzx(-t),
            PauliRotation { theta, letters } => PauliRotation {
                theta: -theta,
                letters: letters.clone(),
            },
            Controlled { base, on_zero } => Controlled {
                base: Box::new(base.inverse()),
                on_zero: *on_zero,
            },
            Unitary(m) => Unitary(m.adjoint()),
            GlobalPhase(p) => GlobalPhase(-p),
        }
    }

    /// Pauli generator for rotation-type gates: `(angle, letters)` with the
    /// gate equal to `exp(-i angle/2 P)`.
    pub fn pauli_generator(&self) -> Option<(f64, Vec<Letter>)> {
        use GateKind::*;
        use Letter as L;
        match self {
            Rx(t) => Some((*t, vec![L::X])),
            Ry(t) => Some((*t, vec![L::Y])),
            Rz(t) => Some((*t, vec![L::Z])),
            Rxx(t) => Some((*t, vec![L::X, L::X])),
            Ryy(t) => Some((*t, vec![L::Y, L::Y])),
            Rzz(t) => Some((*t, vec![L::Z, L::Z])),
            Rzx(t) => Some((*t, vec![L::Z, L::X])),
            PauliRotation { theta, letters } => Some((*theta, letters.clone())),
            _ => None,
        }
    }
}

/// `exp(-i theta/2 P)` as a dense local matrix.
fn rotation_matrix(theta: f64, letters: &[Letter]) -> CMatrix {
    let p = PauliTerm::from_letters(letters)
        .and_then(|p| p.dense_matrix())
        .expect("rotation on at most the dense cap");
    let d = p.nrows();
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    CMatrix::identity(d, d) * c(co, 0.0) - p * c(0.0, si)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Self {
        Gate { kind, qubits }
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    pub fn matrix(&self) -> CMatrix {
        self.kind.matrix()
    }

    pub fn is_single_qubit(&self) -> bool {
        self.qubits.len() == 1
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }

    pub fn inverse(&self) -> Gate {
        Gate::new(self.kind.inverse(), self.qubits.clone())
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.kind.arity() != self.qubits.len() {
            return Err(Error::InvalidGate(format!(
                "{} expects {} qubits, got {}",
                self.kind.name(),
                self.kind.arity(),
                self.qubits.len()
            )));
        }
        for (i, &q) in self.qubits.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::InvalidGate(format!(
                    "{} on qubit {q} outside a {n_qubits}-qubit register",
                    self.kind.name()
                )));
            }
            if self.qubits[..i].contains(&q) {
                return Err(Error::InvalidGate(format!(
                    "{} repeats qubit {q}",
                    self.kind.name()
                )));
            }
        }
        if let GateKind::Unitary(m) = &self.kind {
            if !m.is_square() || !m.nrows().is_power_of_two() || !is_unitary(m, 1e-10) {
                return Err(Error::InvalidGate(
                    "dense payload is not a unitary of power-of-two size".into(),
                ));
            }
        }
        if let GateKind::Controlled { base, .. } = &self.kind {
            Gate::new((**base).clone(), self.qubits[1..].to_vec()).validate(n_qubits)?;
        }
        Ok(())
    }
}

/// Ordered gate list on a fixed register, plus the qubits read out at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<Gate>,
    measured: Vec<usize>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            ops: Vec::new(),
            measured: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn measured_qubits(&self) -> &[usize] {
        &self.measured
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n_qubits)?;
        self.ops.push(gate);
        Ok(self)
    }

    pub fn add(&mut self, kind: GateKind, qubits: &[usize]) -> Result<&mut Self> {
        self.push(Gate::new(kind, qubits.to_vec()))
    }

    pub fn measure(&mut self, qubits: &[usize]) -> Result<&mut Self> {
        for &q in qubits {
            if q >= self.n_qubits {
                return Err(Error::InvalidGate(format!(
                    "measurement of qubit {q} out of range"
                )));
            }
            if !self.measured.contains(&q) {
                self.measured.push(q);
            }
        }
        Ok(self)
    }

    pub fn measure_all(&mut self) -> &mut Self {
        self.measured = (0..self.n_qubits).collect();
        self
    }

    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        self.ops.extend(other.ops.iter().cloned());
        for &q in &other.measured {
            if !self.measured.contains(&q) {
                self.measured.push(q);
            }
        }
        Ok(self)
    }

    /// Copy of this circuit with each gate's qubits remapped through `map`
    /// onto a register of `n_qubits`.
    pub fn remapped(&self, n_qubits: usize, map: &[usize]) -> Result<Circuit> {
        if map.len() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: map.len(),
            });
        }
        let mut out = Circuit::new(n_qubits);
        for g in &self.ops {
            out.push(Gate::new(
                g.kind.clone(),
                g.qubits.iter().map(|&q| map[q]).collect(),
            ))?;
        }
        let measured: Vec<usize> = self.measured.iter().map(|&q| map[q]).collect();
        out.measure(&measured)?;
        Ok(out)
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            ops: self.ops.iter().rev().map(Gate::inverse).collect(),
            measured: self.measured.clone(),
        }
    }

    /// This circuit on qubits `0..n` of an `n + 1` register, every gate
    /// conditioned on qubit `n` (on `|0>` when `on_zero`).
    pub fn controlled(&self, on_zero: bool) -> Circuit {
        let ctrl = self.n_qubits;
        let mut out = Circuit::new(self.n_qubits + 1);
        for g in &self.ops {
            let mut qubits = vec![ctrl];
            qubits.extend(&g.qubits);
            out.ops.push(Gate::new(
                GateKind::Controlled {
                    base: Box::new(g.kind.clone()),
                    on_zero,
                },
                qubits,
            ));
        }
        out
    }

    pub fn count_1q(&self) -> usize {
        self.ops.iter().filter(|g| g.arity() == 1).count()
    }

    pub fn count_2q(&self) -> usize {
        self.ops.iter().filter(|g| g.arity() == 2).count()
    }

    pub fn count_named(&self, name: &str) -> usize {
        self.ops.iter().filter(|g| g.kind.name() == name).count()
    }

    /// Dense unitary of the whole circuit, built column by column.
    pub fn unitary(&self) -> Result<CMatrix> {
        if self.n_qubits > DENSE_QUBIT_CAP {
            return Err(Error::Resource(format!(
                "dense unitary of {} qubits exceeds the cap of {DENSE_QUBIT_CAP}",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut u = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut s = QuantumState::basis(self.n_qubits, j)?;
            for g in &self.ops {
                s.apply_gate(g);
            }
            let amps = s.amplitudes().expect("pure");
            for (i, a) in amps.iter().enumerate() {
                u[(i, j)] = *a;
            }
        }
        Ok(u)
    }

    // Builder shorthands; they panic on invalid qubits, which is a
    // programming error in the caller.

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::H, &[q]).expect("valid qubit")
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::X, &[q]).expect("valid qubit")
    }

    pub fn rz(&mut self, theta: f64, q: usize) -> &mut Self {
        self.add(GateKind::Rz(theta), &[q]).expect("valid qubit")
    }

    pub fn rx(&mut self, theta: f64, q: usize) -> &mut Self {
        self.add(GateKind::Rx(theta), &[q]).expect("valid qubit")
    }

    pub fn ry(&mut self, theta: f64, q: usize) -> &mut Self {
        self.add(GateKind::Ry(theta), &[q]).expect("valid qubit")
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.add(GateKind::Cx, &[control, target])
            .expect("valid qubits")
    }

    pub fn rxx(&mut self, theta: f64, a: usize, b: usize) -> &mut Self {
        self.add(GateKind::Rxx(theta), &[a, b])
            .expect("valid qubits")
    }

    pub fn ryy(&mut self, theta: f64, a: usize, b: usize) -> &mut Self {
        self.add(GateKind::Ryy(theta), &[a, b])
            .expect("valid qubits")
    }

    pub fn rzz(&mut self, theta: f64, a: usize, b: usize) -> &mut Self {
        self.add(GateKind::Rzz(theta), &[a, b])
            .expect("valid qubits")
    }

    pub fn rzx(&mut self, theta: f64, a: usize, b: usize) -> &mut Self {
        self.add(GateKind::Rzx(theta), &[a, b])
            .expect("valid qubits")
    }
}
