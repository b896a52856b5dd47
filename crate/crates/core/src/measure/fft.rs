use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::evolution::exact_unitary;
use crate::linalg::eigh;
use crate::pauli::PauliSum;
use crate::state::QuantumState;

use super::aux::{aux_overlap, AuxMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftOptions {
    /// Zero-padding factor applied before the transform.
    pub padding: usize,
    /// Minimum weight for a reported peak.
    pub threshold: f64,
}

impl Default for FftOptions {
    fn default() -> Self {
        FftOptions {
            padding: 4,
            threshold: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub grid: Vec<f64>,
    pub intensity: Vec<f64>,
    pub peaks: Vec<Peak>,
}

impl SpectrumResult {
    pub fn total_weight(&self) -> f64 {
        self.peaks.iter().map(|p| p.weight).sum()
    }
}

/// `(1/N) sum_k g_k exp(i e k dt)`.
fn dtft(signal: &[Complex64], dt: f64, e: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, e * dt);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for g in signal {
        acc += g * phase;
        phase *= step;
    }
    acc / signal.len() as f64
}

/// Maximizes `f` on `[lo, hi]` by golden-section search.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..60 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    (lo + hi) / 2.0
}

/// Complex amplitudes `w` minimizing `|g - sum_j w_j exp(-i E_j t)|`.
fn fit_amplitudes(signal: &[Complex64], dt: f64, freqs: &[f64]) -> Vec<Complex64> {
    if freqs.is_empty() {
        return Vec::new();
    }
    let a = DMatrix::from_fn(signal.len(), freqs.len(), |k, j| {
        Complex64::from_polar(1.0, -freqs[j] * k as f64 * dt)
    });
    let b = DVector::from_column_slice(signal);
    let svd = a.svd(true, true);
    match svd.solve(&b, 1e-10) {
        Ok(w) => w.iter().copied().collect(),
        Err(_) => vec![Complex64::new(0.0, 0.0); freqs.len()],
    }
}

/// Eigenvalue spectrum of `p` weighted by the overlaps `|c_i|^2` of `psi`,
/// from the FFT of `g(t) = <psi| exp(-i P t) |psi>` sampled at
/// `t_k = k t_max / n_samples`.
///
/// Candidate peaks are local maxima of the padded spectrum above the
/// threshold, refined by quadratic interpolation and then by maximizing the
/// transform of the signal with the other components removed. Weights come
/// from a least-squares fit of the sampled signal at the peak frequencies;
/// candidates below the threshold (sidelobes of the flat window) are dropped
/// and the fit repeated.
pub fn fft_spectrum(
    p: &PauliSum,
    psi: &QuantumState,
    t_max: f64,
    n_samples: usize,
    opts: &FftOptions,
) -> Result<SpectrumResult> {
    if n_samples < 2 || !n_samples.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "n_samples must be a power of two, got {n_samples}"
        )));
    }
    if t_max <= 0.0 || !t_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    if opts.padding == 0 {
        return Err(Error::InvalidParameter(
            "padding factor must be at least 1".into(),
        ));
    }
    if p.n_qubits() != psi.n_qubits() {
        return Err(Error::Dimension {
            expected: psi.n_qubits(),
            found: p.n_qubits(),
        });
    }
    let dt = t_max / n_samples as f64;
    let (evals, _) = eigh(&p.dense_matrix()?)?;
    let radius = evals.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if radius >= PI / dt {
        return Err(Error::Range(format!(
            "spectral radius {radius:.4} aliases at sample spacing {dt:.4}; \
             use at least {} samples for t_max = {t_max}",
            ((radius * t_max / PI).floor() as usize + 1).next_power_of_two()
        )));
    }

    let n = psi.n_qubits();
    let identity = Circuit::new(n);
    let signal: Vec<Complex64> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut v = Circuit::new(n);
            v.push(Gate::new(
                GateKind::Unitary(exact_unitary(p, k as f64 * dt)?),
                (0..n).collect(),
            ))?;
            Ok(aux_overlap(&identity, &v, psi, AuxMode::Exact)?.value)
        })
        .collect::<Result<_>>()?;

    let n_pad = n_samples * opts.padding;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_pad];
    buf[..n_samples].copy_from_slice(&signal);
    FftPlanner::new().plan_fft_inverse(n_pad).process(&mut buf);
    let norm = n_samples as f64;
    let de = 2.0 * PI / (n_pad as f64 * dt);
    // fftshift: bins n_pad/2.. are the negative energies
    let order: Vec<usize> = (n_pad / 2..n_pad).chain(0..n_pad / 2).collect();
    let grid: Vec<f64> = order
        .iter()
        .map(|&j| {
            let j = j as f64 - if j >= n_pad / 2 { n_pad as f64 } else { 0.0 };
            j * de
        })
        .collect();
    let intensity: Vec<f64> = order.iter().map(|&j| buf[j].norm() / norm).collect();

    let mut freqs = Vec::new();
    for i in 0..n_pad {
        let left = intensity[(i + n_pad - 1) % n_pad];
        let right = intensity[(i + 1) % n_pad];
        let mid = intensity[i];
        if mid < opts.threshold || mid < left || mid <= right {
            continue;
        }
        let denom = left - 2.0 * mid + right;
        let offset = if denom.abs() > 1e-15 {
            (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        freqs.push(grid[i] + offset * de);
    }

    let native_bin = 2.0 * PI / t_max;
    let mut amps = fit_amplitudes(&signal, dt, &freqs);
    for _ in 0..4 {
        // drop sidelobes and refine the survivors against the residual
        let keep: Vec<usize> = (0..freqs.len())
            .filter(|&j| amps[j].norm() >= opts.threshold)
            .collect();
        freqs = keep.iter().map(|&j| freqs[j]).collect();
        amps = keep.iter().map(|&j| amps[j]).collect();
        for j in 0..freqs.len() {
            let residual: Vec<Complex64> = signal
                .iter()
                .enumerate()
                .map(|(k, g)| {
                    let t = k as f64 * dt;
                    let others: Complex64 = (0..freqs.len())
                        .filter(|&i| i != j)
                        .map(|i| amps[i] * Complex64::from_polar(1.0, -freqs[i] * t))
                        .sum();
                    g - others
                })
                .collect();
            let centre = freqs[j];
            freqs[j] = golden_max(
                |e| dtft(&residual, dt, e).norm(),
                centre - native_bin / 2.0,
                centre + native_bin / 2.0,
            );
        }
        amps = fit_amplitudes(&signal, dt, &freqs);
    }
    let mut peaks: Vec<Peak> = freqs
        .iter()
        .zip(&amps)
        .filter(|(_, w)| w.norm() >= opts.threshold)
        .map(|(&location, w)| Peak {
            location,
            weight: w.norm(),
        })
        .collect();
    peaks.sort_by(|a, b| a.location.total_cmp(&b.location));

    Ok(SpectrumResult {
        grid,
        intensity,
        peaks,
    })
}
