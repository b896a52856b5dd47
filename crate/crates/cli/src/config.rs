use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use qdyn::device::Pipeline;
use qdyn::fermion::TightBindingSpec;
use qdyn::mitigation::CalibrationMode;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything a run needs. Loaded from TOML; command-line flags are applied
/// on top with [`RunConfig::apply_overrides`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub shots: u64,
    /// Worker threads; `None` uses every core. Not part of the config hash.
    pub workers: Option<usize>,
    /// Device TOML; `None` uses the bundled 7-qubit H device.
    pub device: Option<PathBuf>,
    /// Output directory. Not part of the config hash.
    pub out: PathBuf,
    /// Sample with the device noise model instead of reading exact values.
    pub noise: bool,
    pub model: ModelConfig,
    pub evolution: EvolutionConfig,
    pub mitigation: MitigationConfig,
    pub fidelity: FidelityConfig,
    pub layout: LayoutConfig,
    pub ghz: GhzConfig,
    pub spectrum: SpectrumConfig,
    pub spectroscopy: SpectroscopyConfig,
    pub slater: SlaterConfig,
    pub lcu: LcuConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            shots: 10_000,
            workers: None,
            device: None,
            out: PathBuf::from("out"),
            noise: false,
            model: ModelConfig::default(),
            evolution: EvolutionConfig::default(),
            mitigation: MitigationConfig::default(),
            fidelity: FidelityConfig::default(),
            layout: LayoutConfig::default(),
            ghz: GhzConfig::default(),
            spectrum: SpectrumConfig::default(),
            spectroscopy: SpectroscopyConfig::default(),
            slater: SlaterConfig::default(),
            lcu: LcuConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_sites: usize,
    pub tau: f64,
    pub tau_d: f64,
    pub defect_bond: (usize, usize),
}

impl Default for ModelConfig {
    fn default() -> Self {
        let spec = TightBindingSpec::default();
        ModelConfig {
            n_sites: spec.n_sites,
            tau: spec.tau,
            tau_d: spec.tau_d,
            defect_bond: spec.defect_bond,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self) -> TightBindingSpec {
        TightBindingSpec {
            n_sites: self.n_sites,
            tau: self.tau,
            tau_d: self.tau_d,
            defect_bond: self.defect_bond,
        }
    }
}

/// Time grid `t_k = t_max * k / (n_times - 1)` and the step counts to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_max: f64,
    pub n_times: usize,
    pub steps: Vec<usize>,
    pub order: usize,
    /// Initial occupation bitstring, site 0 rightmost.
    pub initial: String,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            t_max: 4.0 * PI,
            n_times: 100,
            steps: vec![5, 8],
            order: 1,
            initial: "00001".into(),
        }
    }
}

impl EvolutionConfig {
    pub fn times(&self) -> Vec<f64> {
        match self.n_times {
            1 => vec![0.0],
            n => (0..n)
                .map(|k| self.t_max * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitigationConfig {
    /// Readout correction with a calibrated confusion matrix.
    pub confusion: bool,
    /// Keep only outcomes with the initial state's particle number.
    pub postselect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelityConfig {
    pub steps: Vec<usize>,
    pub time: f64,
    pub order: usize,
    /// Physical qubits for the chain; `None` picks the best-scoring chain.
    pub layout: Option<Vec<usize>>,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        FidelityConfig {
            steps: (1..=10).collect(),
            time: 1.0,
            order: 1,
            layout: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub pipeline: Pipeline,
    pub steps: usize,
    pub time: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            pipeline: Pipeline::Rzx,
            steps: 1,
            time: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GhzConfig {
    pub n_qubits: usize,
    /// Per-qubit `[p(1|0), p(0|1)]`; `None` takes the device's first qubits.
    pub readout: Option<Vec<[f64; 2]>>,
    pub calibration_shots: u64,
    pub calibration: CalibrationMode,
}

impl Default for GhzConfig {
    fn default() -> Self {
        GhzConfig {
            n_qubits: 5,
            readout: None,
            calibration_shots: 100_000,
            calibration: CalibrationMode::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub t_max: f64,
    pub n_samples: usize,
    pub padding: usize,
    pub threshold: f64,
    pub initial: String,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            t_max: 50.0,
            n_samples: 256,
            padding: 4,
            threshold: 0.02,
            initial: "00001".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectroscopyConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub dt: f64,
    pub coupling: f64,
    pub n_steps: usize,
    pub target: usize,
    pub initial: String,
}

impl Default for SpectroscopyConfig {
    fn default() -> Self {
        SpectroscopyConfig {
            omega_min: -3.0,
            omega_max: 3.0,
            n_omega: 121,
            dt: 0.2,
            coupling: 0.05,
            n_steps: 150,
            target: 0,
            initial: "00001".into(),
        }
    }
}

impl SpectroscopyConfig {
    pub fn omega_grid(&self) -> Vec<f64> {
        match self.n_omega {
            0 => vec![],
            1 => vec![self.omega_min],
            n => (0..n)
                .map(|k| {
                    self.omega_min + (self.omega_max - self.omega_min) * k as f64 / (n - 1) as f64
                })
                .collect(),
        }
    }
}

/// Fills the lowest `n_particles` orbitals of the chain's hopping matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlaterConfig {
    pub n_particles: usize,
}

impl Default for SlaterConfig {
    fn default() -> Self {
        SlaterConfig { n_particles: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LcuConfig {
    pub order: usize,
    pub time: f64,
    pub initial: String,
}

impl Default for LcuConfig {
    fn default() -> Self {
        LcuConfig {
            order: 4,
            time: 0.1,
            initial: "00001".into(),
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub device: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Only turns noise on; a config asking for noise keeps it.
    pub noise: bool,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(s) = o.shots {
            self.shots = s;
        }
        if let Some(d) = &o.device {
            self.device = Some(d.clone());
        }
        if let Some(d) = &o.out {
            self.out = d.clone();
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        self.noise |= o.noise;
    }

    /// Checks shared by every command.
    pub fn validate(&self) -> CliResult<()> {
        if let Some(d) = &self.device {
            if !d.is_file() {
                return Err(CliError::Config(format!(
                    "device file {} does not exist",
                    d.display()
                )));
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        self.model
            .spec()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn require_shots(&self) -> CliResult<()> {
        if self.shots == 0 {
            return Err(CliError::Config("shots must be at least 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the settings that determine results.
    pub fn hash(&self, command: &str) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = self.clone();
        canonical.workers = None;
        canonical.out = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::new()
            .chain_update(command.as_bytes())
            .chain_update(b"\n")
            .chain_update(json)
            .finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
