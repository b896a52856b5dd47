use rayon::prelude::*;
use serde::Serialize;

use qdyn::device::{
    compile, enumerate_chain_layouts, fidelity_report, rank_layouts, DeviceModel, Layout,
    PipelineRow,
};
use qdyn::evolution::{
    exact_evolve, lcu_decompose, lcu_evolve, trotter_circuit, LcuPlan, TrotterPlan,
};
use qdyn::fermion::{site_number, tight_binding_pauli};
use qdyn::linalg::{c, eigh, inner, CMatrix};
use qdyn::measure::{fft_spectrum, spectroscopy, FftOptions, Peak, SpectroscopyPlan};
use qdyn::mitigation::{
    calibrate, mitigate, postselect, Backend, CalibrationMode, MitigationMethod, NoisyBackend,
};
use qdyn::prep::{ghz, slater_circuit, SlaterSpec};
use qdyn::sampling::{sample_with_rng, stream_rng};
use qdyn::state::run;
use qdyn::{Circuit, NoiseSpec, PauliSum, QuantumState, ReadoutError};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load_device(cfg: &RunConfig) -> CliResult<DeviceModel> {
    match &cfg.device {
        Some(path) => Ok(DeviceModel::load(path)?),
        None => Ok(DeviceModel::bundled_h7()),
    }
}

/// Basis state from an occupation string written with site 0 rightmost.
pub fn occupation_state(bits: &str, n_sites: usize) -> CliResult<QuantumState> {
    if bits.len() != n_sites || !bits.chars().all(|ch| ch == '0' || ch == '1') {
        return Err(config_err(format!(
            "initial state {bits:?} is not a {n_sites}-site occupation string"
        )));
    }
    let idx = usize::from_str_radix(bits, 2).expect("checked binary");
    Ok(QuantumState::basis(n_sites, idx)?)
}

fn chain_hamiltonian(cfg: &RunConfig) -> CliResult<PauliSum> {
    Ok(tight_binding_pauli(&cfg.model.spec())?)
}

fn site_occupations(probs: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|site| {
            probs
                .iter()
                .enumerate()
                .filter(|(i, _)| i >> site & 1 == 1)
                .map(|(_, p)| p)
                .sum()
        })
        .collect()
}

/// Chain placement with the lowest score for one compiled step of the model.
pub fn best_chain(cfg: &RunConfig, device: &DeviceModel) -> CliResult<Layout> {
    let h = chain_hamiltonian(cfg)?;
    let plan = TrotterPlan::new(1, cfg.layout.steps.max(1), cfg.layout.time)?;
    let mut circ = compile(&trotter_circuit(&h, &plan)?, cfg.layout.pipeline)?;
    circ.measure_all();
    let layouts = enumerate_chain_layouts(device, h.n_qubits())?;
    let ranked = rank_layouts(device, &layouts, &circ)?;
    ranked
        .into_iter()
        .next()
        .map(|s| s.layout)
        .ok_or_else(|| config_err("device has no chain long enough for the model"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub m: usize,
    pub order: usize,
    pub site: usize,
    pub value: f64,
    pub exact: f64,
    pub error: f64,
}

/// Site occupations along the time grid for every step count. Noiseless runs
/// report exact expectations of the product-formula state; noisy runs
/// sample with the device model on the best chain and apply the configured
/// mitigation.
pub fn trotter_sweep(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let ev = &cfg.evolution;
    let times = ev.times();
    if times.is_empty() {
        return Err(config_err("evolution.n_times must be at least 1"));
    }
    if ev.steps.is_empty() || ev.steps.contains(&0) {
        return Err(config_err(
            "evolution.steps must be a nonempty list of positive counts",
        ));
    }
    let n = cfg.model.n_sites;
    let h = chain_hamiltonian(cfg)?;
    let initial = occupation_state(&ev.initial, n)?;
    let n_particles = ev.initial.matches('1').count();
    let numbers: Vec<PauliSum> = (0..n)
        .map(|s| site_number(n, s))
        .collect::<Result<_, _>>()?;

    let noisy = if cfg.noise {
        cfg.require_shots()?;
        let device = load_device(cfg)?;
        let layout = best_chain(cfg, &device)?;
        let noise = device.noise_spec(&layout)?;
        let confusion = if cfg.mitigation.confusion {
            let readout = NoiseSpec {
                readout: noise.readout.clone(),
                ..Default::default()
            };
            Some(calibrate(
                &NoisyBackend::new(readout),
                n,
                cfg.shots,
                CalibrationMode::Tensor,
                cfg.seed,
            )?)
        } else {
            None
        };
        Some((noise, confusion))
    } else {
        None
    };

    let points: Vec<(usize, f64)> = ev
        .steps
        .iter()
        .flat_map(|&m| times.iter().map(move |&t| (m, t)))
        .collect();
    let rows: Vec<Vec<SweepRow>> = points
        .par_iter()
        .enumerate()
        .map(|(k, &(m, t))| -> CliResult<Vec<SweepRow>> {
            let circ = trotter_circuit(&h, &TrotterPlan::new(ev.order, m, t)?)?;
            let exact_state = exact_evolve(&h, t, &initial)?;
            let exact: Vec<f64> = numbers
                .iter()
                .map(|o| exact_state.expectation(o))
                .collect::<Result<_, _>>()?;
            let value = match &noisy {
                None => {
                    let state = run(&circ, &initial, None)?;
                    numbers
                        .iter()
                        .map(|o| state.expectation(o))
                        .collect::<Result<_, _>>()?
                }
                Some((noise, confusion)) => {
                    let state = run(&circ, &initial, Some(noise))?;
                    let mut rng = stream_rng(cfg.seed, 2 + k as u64);
                    let counts = sample_with_rng(&state, cfg.shots, Some(noise), &mut rng)?;
                    let mut probs = match confusion {
                        Some(a) => {
                            mitigate(a, &counts, MitigationMethod::Constrained)?.probabilities
                        }
                        None => counts.probabilities(),
                    };
                    if cfg.mitigation.postselect {
                        project_to_sector(&mut probs, n_particles);
                    }
                    site_occupations(&probs, n)
                }
            };
            Ok((0..n)
                .map(|site| SweepRow {
                    t,
                    m,
                    order: ev.order,
                    site,
                    value: value[site],
                    exact: exact[site],
                    error: (value[site] - exact[site]).abs(),
                })
                .collect())
        })
        .collect::<CliResult<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Zeroes outcomes outside the particle-number sector and renormalizes.
/// An empty sector leaves all zeros.
fn project_to_sector(probs: &mut [f64], n_particles: usize) {
    for (i, p) in probs.iter_mut().enumerate() {
        if i.count_ones() as usize != n_particles {
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        probs.iter_mut().for_each(|p| *p /= total);
    }
}

pub fn fidelity_rows(cfg: &RunConfig) -> CliResult<Vec<PipelineRow>> {
    let f = &cfg.fidelity;
    if f.steps.is_empty() {
        return Err(config_err("fidelity.steps must not be empty"));
    }
    let device = load_device(cfg)?;
    let layout = match &f.layout {
        Some(l) => l.clone(),
        None => best_chain(cfg, &device)?,
    };
    Ok(fidelity_report(
        &chain_hamiltonian(cfg)?,
        &device,
        &layout,
        &f.steps,
        f.time,
        f.order,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutRow {
    pub rank: usize,
    pub layout: String,
    pub score: f64,
}

pub fn layout_rows(cfg: &RunConfig) -> CliResult<Vec<LayoutRow>> {
    if cfg.layout.steps == 0 {
        return Err(config_err("layout.steps must be at least 1"));
    }
    let device = load_device(cfg)?;
    let h = chain_hamiltonian(cfg)?;
    let plan = TrotterPlan::new(1, cfg.layout.steps, cfg.layout.time)?;
    let mut circ = compile(&trotter_circuit(&h, &plan)?, cfg.layout.pipeline)?;
    circ.measure_all();
    let layouts = enumerate_chain_layouts(&device, h.n_qubits())?;
    Ok(rank_layouts(&device, &layouts, &circ)?
        .into_iter()
        .enumerate()
        .map(|(i, s)| LayoutRow {
            rank: i + 1,
            layout: s
                .layout
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join("-"),
            score: s.score,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremes {
    pub all_zeros: f64,
    pub all_ones: f64,
    pub stderr_all_zeros: f64,
    pub stderr_all_ones: f64,
}

impl Extremes {
    fn from_probs(p: &[f64], shots: u64) -> Self {
        let se = |q: f64| (q.clamp(0.0, 1.0) * (1.0 - q.clamp(0.0, 1.0)) / shots as f64).sqrt();
        let (z, o) = (p[0], p[p.len() - 1]);
        Extremes {
            all_zeros: z,
            all_ones: o,
            stderr_all_zeros: se(z),
            stderr_all_ones: se(o),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostSelectionSummary {
    pub n_particles: usize,
    pub retained_fraction: f64,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhzReport {
    pub n_qubits: usize,
    pub shots: u64,
    pub calibration_shots: u64,
    pub calibration: CalibrationMode,
    pub readout: Vec<ReadoutError>,
    pub raw: Extremes,
    pub mitigated: Extremes,
    pub condition_number: f64,
    pub warning: Option<String>,
    /// Single-particle post-selection of the raw counts, which a GHZ state
    /// is expected to fail.
    pub postselection: PostSelectionSummary,
}

pub fn ghz_report(cfg: &RunConfig) -> CliResult<GhzReport> {
    cfg.require_shots()?;
    let g = &cfg.ghz;
    if g.n_qubits < 2 {
        return Err(config_err("ghz.n_qubits must be at least 2"));
    }
    if g.calibration_shots == 0 {
        return Err(config_err("ghz.calibration_shots must be at least 1"));
    }
    let readout: Vec<ReadoutError> = if !cfg.noise {
        vec![ReadoutError::default(); g.n_qubits]
    } else if let Some(r) = &g.readout {
        if r.len() != g.n_qubits {
            return Err(config_err(format!(
                "ghz.readout lists {} qubits, expected {}",
                r.len(),
                g.n_qubits
            )));
        }
        r.iter().map(|&[a, b]| ReadoutError::new(a, b)).collect()
    } else {
        let device = load_device(cfg)?;
        if device.qubits.len() < g.n_qubits {
            return Err(config_err("device has fewer qubits than ghz.n_qubits"));
        }
        device.qubits[..g.n_qubits]
            .iter()
            .map(|q| ReadoutError::new(q.p1_given_0, q.p0_given_1))
            .collect()
    };
    let noise = readout
        .iter()
        .enumerate()
        .fold(NoiseSpec::default(), |s, (q, &e)| s.with_readout(q, e));
    noise.validate()?;
    let backend = NoisyBackend::new(noise);
    let a = calibrate(
        &backend,
        g.n_qubits,
        g.calibration_shots,
        g.calibration,
        cfg.seed,
    )?;
    let mut circ = ghz(g.n_qubits)?;
    circ.measure_all();
    // streams below 2^n are taken by full calibration
    let counts = backend.execute(&circ, cfg.shots, cfg.seed, 1 << g.n_qubits)?;
    let m = mitigate(&a, &counts, MitigationMethod::Inverse)?;
    let ps = postselect(&counts, 1);
    Ok(GhzReport {
        n_qubits: g.n_qubits,
        shots: cfg.shots,
        calibration_shots: g.calibration_shots,
        calibration: g.calibration,
        readout,
        raw: Extremes::from_probs(&counts.probabilities(), cfg.shots),
        mitigated: Extremes::from_probs(&m.probabilities, cfg.shots),
        condition_number: m.condition_number,
        warning: m.warning,
        postselection: PostSelectionSummary {
            n_particles: 1,
            retained_fraction: ps.retained_fraction,
            empty: ps.empty,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakReport {
    pub t_max: f64,
    pub n_samples: usize,
    pub bin_width: f64,
    pub total_weight: f64,
    pub peaks: Vec<Peak>,
}

pub fn spectrum(cfg: &RunConfig) -> CliResult<(Vec<SpectrumRow>, PeakReport)> {
    let s = &cfg.spectrum;
    let h = chain_hamiltonian(cfg)?;
    let psi = occupation_state(&s.initial, cfg.model.n_sites)?;
    let opts = FftOptions {
        padding: s.padding,
        threshold: s.threshold,
    };
    let res = fft_spectrum(&h, &psi, s.t_max, s.n_samples, &opts)?;
    let rows = res
        .grid
        .iter()
        .zip(&res.intensity)
        .map(|(&omega, &intensity)| SpectrumRow { omega, intensity })
        .collect();
    let report = PeakReport {
        t_max: s.t_max,
        n_samples: s.n_samples,
        bin_width: 2.0 * std::f64::consts::PI / s.t_max,
        total_weight: res.total_weight(),
        peaks: res.peaks,
    };
    Ok((rows, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectroscopyRow {
    pub omega: f64,
    pub probe_z: f64,
    pub intensity: f64,
}

pub fn spectroscopy_rows(cfg: &RunConfig) -> CliResult<Vec<SpectroscopyRow>> {
    let s = &cfg.spectroscopy;
    let omega_grid = s.omega_grid();
    if omega_grid.is_empty() {
        return Err(config_err("spectroscopy.n_omega must be at least 1"));
    }
    let h = chain_hamiltonian(cfg)?;
    let psi = occupation_state(&s.initial, cfg.model.n_sites)?;
    let plan = SpectroscopyPlan {
        omega_grid,
        dt: s.dt,
        coupling: s.coupling,
        n_steps: s.n_steps,
        probe_target: s.target,
    };
    let curve = spectroscopy(&h, &plan, &psi)?;
    let intensity = curve.intensity();
    Ok(curve
        .omega
        .iter()
        .zip(&curve.probe_z)
        .zip(intensity)
        .map(|((&omega, &probe_z), intensity)| SpectroscopyRow {
            omega,
            probe_z,
            intensity,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlaterRow {
    pub site: usize,
    pub occupation: f64,
    pub expected: f64,
}

/// Prepares the chain's lowest `n_particles` orbitals as a Slater determinant
/// and compares the circuit's site occupations with the orbital densities.
pub fn slater_rows(cfg: &RunConfig) -> CliResult<(Vec<SlaterRow>, Circuit)> {
    let n = cfg.model.n_sites;
    let k = cfg.slater.n_particles;
    if k == 0 || k > n {
        return Err(config_err(format!("slater.n_particles must be in 1..={n}")));
    }
    let mut hop = CMatrix::zeros(n, n);
    for (i, t) in cfg.model.spec().bonds() {
        hop[(i, i + 1)] = c(-t, 0.0);
        hop[(i + 1, i)] = c(-t, 0.0);
    }
    let (_, vecs) = eigh(&hop)?;
    let b = CMatrix::from_fn(k, n, |row, site| vecs[(site, row)]);
    let expected: Vec<f64> = (0..n)
        .map(|site| (0..k).map(|row| b[(row, site)].norm_sqr()).sum())
        .collect();
    let circ = slater_circuit(&SlaterSpec::new(b)?)?;
    let state = run(&circ, &QuantumState::zero(n), None)?;
    let probs: Vec<f64> = state
        .amplitudes()
        .expect("pure")
        .iter()
        .map(|a| a.norm_sqr())
        .collect();
    let occ = site_occupations(&probs, n);
    let rows = (0..n)
        .map(|site| SlaterRow {
            site,
            occupation: occ[site],
            expected: expected[site],
        })
        .collect();
    Ok((rows, circ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcuOccupation {
    pub site: usize,
    pub lcu: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcuReport {
    pub order: usize,
    pub time: f64,
    pub s: f64,
    pub success_probability: f64,
    pub inverse_s_squared: f64,
    pub n_ancillas: usize,
    pub n_unitaries: usize,
    pub fidelity: f64,
    pub occupations: Vec<LcuOccupation>,
}

pub fn lcu_report(cfg: &RunConfig) -> CliResult<LcuReport> {
    let l = &cfg.lcu;
    let n = cfg.model.n_sites;
    let h = chain_hamiltonian(cfg)?;
    let psi = occupation_state(&l.initial, n)?;
    let plan = LcuPlan {
        order: l.order,
        time: l.time,
    };
    let s = lcu_decompose(&h, &plan)?.s;
    let res = lcu_evolve(&h, &plan, &psi)?;
    let exact = exact_evolve(&h, l.time, &psi)?;
    let fidelity = inner(
        exact.amplitudes().expect("pure"),
        res.state.amplitudes().expect("pure"),
    )
    .norm_sqr();
    let occupations = (0..n)
        .map(|site| -> CliResult<LcuOccupation> {
            let op = site_number(n, site)?;
            Ok(LcuOccupation {
                site,
                lcu: res.state.expectation(&op)?,
                exact: exact.expectation(&op)?,
            })
        })
        .collect::<CliResult<_>>()?;
    Ok(LcuReport {
        order: l.order,
        time: l.time,
        s,
        success_probability: res.success_probability,
        inverse_s_squared: 1.0 / (s * s),
        n_ancillas: res.n_ancillas,
        n_unitaries: res.n_unitaries,
        fidelity,
        occupations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_projection() {
        let mut p = vec![0.1, 0.2, 0.3, 0.4];
        project_to_sector(&mut p, 1);
        assert_eq!(p, vec![0.0, 0.4, 0.6, 0.0]);
        let mut q = vec![1.0, 0.0];
        project_to_sector(&mut q, 1);
        assert_eq!(q, vec![0.0, 0.0]);
    }

    #[test]
    fn occupation_strings() {
        let s = occupation_state("00001", 5).unwrap();
        let probs: Vec<f64> = s
            .amplitudes()
            .unwrap()
            .iter()
            .map(|a| a.norm_sqr())
            .collect();
        assert_eq!(site_occupations(&probs, 5), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(occupation_state("0001", 5).is_err());
        assert!(occupation_state("0002x", 5).is_err());
    }
}
