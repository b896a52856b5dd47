//! Readout-error mitigation by confusion-matrix calibration and inversion,
//! and particle-number post-selection.

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::noise::NoiseSpec;
use crate::sampling::{sample_qubits, stream_rng, Counts};
use crate::state::{run, QuantumState};

/// Largest register calibrated with one circuit per bitstring.
pub const FULL_CALIBRATION_CAP: usize = 8;
/// Largest register for which a dense confusion matrix is ever formed.
const DENSE_CAP: usize = 12;
/// Condition number above which a mitigation result carries a warning.
pub const CONDITION_WARNING: f64 = 100.0;

/// Something that executes circuits and returns measurement counts.
pub trait Backend: Sync {
    /// Runs `circuit` from `|0...0>`. Seeds are split into streams so that
    /// independent circuits draw independent samples.
    fn execute(&self, circuit: &Circuit, shots: u64, seed: u64, stream: u64) -> Result<Counts>;
}

/// Simulator backend applying a noise model's gate channels and readout flips.
#[derive(Debug, Clone, Default)]
pub struct NoisyBackend {
    pub noise: NoiseSpec,
}

impl NoisyBackend {
    pub fn new(noise: NoiseSpec) -> Self {
        NoisyBackend { noise }
    }
}

impl Backend for NoisyBackend {
    fn execute(&self, circuit: &Circuit, shots: u64, seed: u64, stream: u64) -> Result<Counts> {
        let n = circuit.n_qubits();
        let gate_noise = self.noise.has_gate_noise().then_some(&self.noise);
        let state = run(circuit, &QuantumState::zero(n), gate_noise)?;
        let measured: Vec<usize> = if circuit.measured_qubits().is_empty() {
            (0..n).collect()
        } else {
            circuit.measured_qubits().to_vec()
        };
        sample_qubits(
            &state,
            &measured,
            shots,
            Some(&self.noise),
            &mut stream_rng(seed, stream),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    /// One circuit per bitstring.
    Full,
    /// All-zeros and all-ones circuits, assuming independent flips.
    Tensor,
}

#[derive(Debug, Clone, PartialEq)]
enum Entries {
    Full(DMatrix<f64>),
    Tensor(Vec<Matrix2<f64>>),
}

/// Column-stochastic map from prepared to measured bitstrings,
/// `A[measured, prepared]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    n_qubits: usize,
    calibration_shots: u64,
    entries: Entries,
}

#[derive(Serialize, Deserialize)]
struct ConfusionFile {
    mode: CalibrationMode,
    n_qubits: usize,
    shots: u64,
    /// Row-major; one 2x2 block per qubit in tensor mode.
    entries: Vec<Vec<f64>>,
}

fn check_stochastic(m: &DMatrix<f64>) -> Result<()> {
    for v in m.iter() {
        if !(0.0..=1.0).contains(v) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "confusion entry {v} is outside [0, 1]"
            )));
        }
    }
    for (j, col) in m.column_iter().enumerate() {
        let s: f64 = col.sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "confusion column {j} sums to {s}"
            )));
        }
    }
    Ok(())
}

impl ConfusionMatrix {
    pub fn from_full(matrix: DMatrix<f64>, calibration_shots: u64) -> Result<Self> {
        let dim = matrix.nrows();
        if !dim.is_power_of_two() || matrix.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim.next_power_of_two(),
                found: matrix.ncols(),
            });
        }
        check_stochastic(&matrix)?;
        Ok(ConfusionMatrix {
            n_qubits: dim.trailing_zeros() as usize,
            calibration_shots,
            entries: Entries::Full(matrix),
        })
    }

    /// Per-qubit 2x2 matrices, qubit 0 first.
    pub fn from_tensor(blocks: Vec<Matrix2<f64>>, calibration_shots: u64) -> Result<Self> {
        for b in &blocks {
            check_stochastic(&DMatrix::from_column_slice(2, 2, b.as_slice()))?;
        }
        Ok(ConfusionMatrix {
            n_qubits: blocks.len(),
            calibration_shots,
            entries: Entries::Tensor(blocks),
        })
    }

    /// Exact matrix implied by a noise model's independent readout flips.
    pub fn from_noise(noise: &NoiseSpec, n_qubits: usize) -> Result<Self> {
        noise.validate()?;
        let blocks = (0..n_qubits)
            .map(|q| {
                let r = noise.readout_for(q);
                Matrix2::new(
                    1.0 - r.p1_given_0,
                    r.p0_given_1,
                    r.p1_given_0,
                    1.0 - r.p0_given_1,
                )
            })
            .collect();
        Self::from_tensor(blocks, 0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn calibration_shots(&self) -> u64 {
        self.calibration_shots
    }

    pub fn mode(&self) -> CalibrationMode {
        match self.entries {
            Entries::Full(_) => CalibrationMode::Full,
            Entries::Tensor(_) => CalibrationMode::Tensor,
        }
    }

    pub fn tensor_blocks(&self) -> Option<&[Matrix2<f64>]> {
        match &self.entries {
            Entries::Tensor(b) => Some(b),
            Entries::Full(_) => None,
        }
    }

    /// Dense `2^n x 2^n` matrix.
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        match &self.entries {
            Entries::Full(m) => Ok(m.clone()),
            Entries::Tensor(blocks) => {
                if self.n_qubits > DENSE_CAP {
                    return Err(Error::Resource(format!(
                        "dense confusion matrix of {} qubits exceeds the cap of {DENSE_CAP}",
                        self.n_qubits
                    )));
                }
                // highest qubit is the leftmost Kronecker factor
                let mut m = DMatrix::from_element(1, 1, 1.0);
                for b in blocks.iter().rev() {
                    m = m.kronecker(&DMatrix::from_column_slice(2, 2, b.as_slice()));
                }
                Ok(m)
            }
        }
    }

    pub fn condition_number(&self) -> f64 {
        match &self.entries {
            Entries::Full(m) => condition_number(m),
            Entries::Tensor(blocks) => blocks
                .iter()
                .map(|b| condition_number(&DMatrix::from_column_slice(2, 2, b.as_slice())))
                .product(),
        }
    }

    /// `A p` for a probability vector over all `2^n` outcomes.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_len(p.len())?;
        match &self.entries {
            Entries::Full(m) => Ok((m * DVector::from_column_slice(p))
                .iter()
                .copied()
                .collect()),
            Entries::Tensor(blocks) => Ok(apply_blocks(blocks, p)),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != 1usize << self.n_qubits {
            return Err(Error::Dimension {
                expected: 1 << self.n_qubits,
                found: len,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let entries = match &self.entries {
            Entries::Full(m) => m.row_iter().map(|r| r.iter().copied().collect()).collect(),
            Entries::Tensor(blocks) => blocks
                .iter()
                .map(|b| vec![b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]])
                .collect(),
        };
        let file = ConfusionFile {
            mode: self.mode(),
            n_qubits: self.n_qubits,
            shots: self.calibration_shots,
            entries,
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfusionFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        match file.mode {
            CalibrationMode::Full => {
                let dim = 1usize << file.n_qubits;
                if file.entries.len() != dim || file.entries.iter().any(|r| r.len() != dim) {
                    return Err(Error::Dimension {
                        expected: dim,
                        found: file.entries.len(),
                    });
                }
                let m = DMatrix::from_fn(dim, dim, |r, c| file.entries[r][c]);
                Self::from_full(m, file.shots)
            }
            CalibrationMode::Tensor => {
                if file.entries.len() != file.n_qubits || file.entries.iter().any(|r| r.len() != 4)
                {
                    return Err(Error::Dimension {
                        expected: file.n_qubits,
                        found: file.entries.len(),
                    });
                }
                let blocks = file
                    .entries
                    .iter()
                    .map(|e| Matrix2::new(e[0], e[1], e[2], e[3]))
                    .collect();
                Self::from_tensor(blocks, file.shots)
            }
        }
    }
}

/// Applies one 2x2 block per qubit to a vector over `2^n` outcomes.
fn apply_blocks(blocks: &[Matrix2<f64>], p: &[f64]) -> Vec<f64> {
    let mut out = p.to_vec();
    for (q, b) in blocks.iter().enumerate() {
        let bit = 1usize << q;
        for i in 0..out.len() {
            if i & bit == 0 {
                let (a0, a1) = (out[i], out[i | bit]);
                out[i] = b[(0, 0)] * a0 + b[(0, 1)] * a1;
                out[i | bit] = b[(1, 0)] * a0 + b[(1, 1)] * a1;
            }
        }
    }
    out
}

fn basis_prep(n: usize, bits: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for q in 0..n {
        if bits >> q & 1 == 1 {
            c.x(q);
        }
    }
    c.measure_all();
    c
}

/// Estimates the confusion matrix by preparing and measuring basis states.
/// Full mode runs all `2^n` preparations (stream `j` for bitstring `j`);
/// tensor mode runs all-zeros and all-ones and reads each qubit's flip
/// rates from its marginal.
pub fn calibrate(
    backend: &dyn Backend,
    n_qubits: usize,
    shots: u64,
    mode: CalibrationMode,
    seed: u64,
) -> Result<ConfusionMatrix> {
    if n_qubits == 0 {
        return Err(Error::InvalidParameter(
            "cannot calibrate zero qubits".into(),
        ));
    }
    match mode {
        CalibrationMode::Full => {
            if n_qubits > FULL_CALIBRATION_CAP {
                return Err(Error::Resource(format!(
                    "full calibration of {n_qubits} qubits needs 2^{n_qubits} circuits \
                     (cap {FULL_CALIBRATION_CAP}); use tensor mode"
                )));
            }
            let dim = 1usize << n_qubits;
            let columns: Vec<Vec<f64>> = (0..dim)
                .into_par_iter()
                .map(|j| {
                    Ok(backend
                        .execute(&basis_prep(n_qubits, j), shots, seed, j as u64)?
                        .probabilities())
                })
                .collect::<Result<_>>()?;
            let m = DMatrix::from_fn(dim, dim, |r, c| columns[c][r]);
            ConfusionMatrix::from_full(m, shots)
        }
        CalibrationMode::Tensor => {
            let zeros = backend.execute(&basis_prep(n_qubits, 0), shots, seed, 0)?;
            let ones =
                backend.execute(&basis_prep(n_qubits, (1 << n_qubits) - 1), shots, seed, 1)?;
            let flips = |counts: &Counts, q: usize, want: usize| -> f64 {
                let hit: u64 = counts
                    .iter()
                    .filter(|(k, _)| k >> q & 1 == want)
                    .map(|(_, c)| c)
                    .sum();
                hit as f64 / counts.total() as f64
            };
            let blocks = (0..n_qubits)
                .map(|q| {
                    let p10 = flips(&zeros, q, 1);
                    let p01 = flips(&ones, q, 0);
                    Matrix2::new(1.0 - p10, p01, p10, 1.0 - p01)
                })
                .collect();
            ConfusionMatrix::from_tensor(blocks, shots)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MitigationMethod {
    /// `A^{-1} p`, possibly with small negative entries.
    #[default]
    Inverse,
    /// Least squares `min |A x - p|` over the probability simplex.
    Constrained,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mitigated {
    pub probabilities: Vec<f64>,
    /// Negative entries clipped to zero and the rest rescaled to sum to one.
    pub renormalized: Vec<f64>,
    pub condition_number: f64,
    pub warning: Option<String>,
}

/// Mitigates the empirical distribution of `counts`.
pub fn mitigate(
    a: &ConfusionMatrix,
    counts: &Counts,
    method: MitigationMethod,
) -> Result<Mitigated> {
    if counts.n_qubits() != a.n_qubits() {
        return Err(Error::Dimension {
            expected: a.n_qubits(),
            found: counts.n_qubits(),
        });
    }
    if counts.is_empty() {
        return Err(Error::InvalidParameter("no counts to mitigate".into()));
    }
    mitigate_probabilities(a, &counts.probabilities(), method)
}

/// Mitigates an explicit noisy probability vector.
pub fn mitigate_probabilities(
    a: &ConfusionMatrix,
    noisy: &[f64],
    method: MitigationMethod,
) -> Result<Mitigated> {
    a.check_len(noisy.len())?;
    let cond = a.condition_number();
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::Conditioning(format!(
            "confusion matrix is singular (condition number {cond:.3e})"
        )));
    }
    let probabilities = match method {
        MitigationMethod::Inverse => solve_inverse(a, noisy)?,
        MitigationMethod::Constrained => constrained_fit(&a.matrix()?, noisy),
    };
    let renormalized = renormalize(&probabilities);
    let warning = (cond > CONDITION_WARNING).then(|| {
        format!("confusion matrix condition number {cond:.1} exceeds {CONDITION_WARNING}")
    });
    Ok(Mitigated {
        probabilities,
        renormalized,
        condition_number: cond,
        warning,
    })
}

fn solve_inverse(a: &ConfusionMatrix, noisy: &[f64]) -> Result<Vec<f64>> {
    match &a.entries {
        Entries::Full(m) => m
            .clone()
            .lu()
            .solve(&DVector::from_column_slice(noisy))
            .map(|x| x.iter().copied().collect())
            .ok_or_else(|| Error::Conditioning("confusion matrix is singular".into())),
        Entries::Tensor(blocks) => {
            let inverses = blocks
                .iter()
                .map(|b| {
                    b.try_inverse()
                        .ok_or_else(|| Error::Conditioning("confusion block is singular".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(apply_blocks(&inverses, noisy))
        }
    }
}

fn renormalize(p: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    if s > 0.0 {
        clipped.iter().map(|v| v / s).collect()
    } else {
        vec![1.0 / p.len() as f64; p.len()]
    }
}

/// Euclidean projection onto `{x : x >= 0, sum x = 1}`.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (i, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    let mut x: Vec<f64> = v.iter().map(|x| (x - shift).max(0.0)).collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}

/// Accelerated projected gradient on `|A x - b|^2` over the simplex.
fn constrained_fit(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let b = DVector::from_column_slice(b);
    let ata = a.transpose() * a;
    let atb = a.transpose() * &b;
    let lipschitz = ata.clone().symmetric_eigen().eigenvalues.max().max(1e-12);
    let mut x = project_to_simplex(b.as_slice());
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let yv = DVector::from_column_slice(&y);
        let grad = &ata * &yv - &atb;
        let step: Vec<f64> = y
            .iter()
            .zip(grad.iter())
            .map(|(yi, g)| yi - g / lipschitz)
            .collect();
        let next = project_to_simplex(&step);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        let change = next
            .iter()
            .zip(&x)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        y = next
            .iter()
            .zip(&x)
            .map(|(n, o)| n + momentum * (n - o))
            .collect();
        x = next;
        t = t_next;
        if change < 1e-15 {
            break;
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostSelection {
    pub counts: Counts,
    pub retained_fraction: f64,
    /// True when no shot survived.
    pub empty: bool,
}

/// Keeps the outcomes with exactly `n_particles` ones.
pub fn postselect(counts: &Counts, n_particles: usize) -> PostSelection {
    let mut kept = counts.clone();
    kept.retain(|k| k.count_ones() as usize == n_particles);
    let total = counts.total();
    let retained_fraction = if total == 0 {
        0.0
    } else {
        kept.total() as f64 / total as f64
    };
    PostSelection {
        empty: kept.is_empty(),
        counts: kept,
        retained_fraction,
    }
}
