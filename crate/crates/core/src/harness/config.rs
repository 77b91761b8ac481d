//! Experiment configuration: a single JSON document, echoed verbatim into
//! every output for provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hydro::{DensityField, VectorFieldSpec};
use crate::lattice::{Torus, MAX_D};

const TAU: f64 = std::f64::consts::TAU;

/// Initial density profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    Constant {
        rho: f64,
    },
    /// `mean + amplitude · cos(2π mode·x)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        mode: [i64; MAX_D],
    },
}

impl ProfileSpec {
    pub fn build(&self, torus: Torus) -> Result<DensityField> {
        match self {
            ProfileSpec::Constant { rho } => DensityField::constant(torus, *rho),
            ProfileSpec::Cosine {
                mean,
                amplitude,
                mode,
            } => DensityField::from_profile(torus, |x| {
                let phase: f64 = (0..torus.dim()).map(|i| mode[i] as f64 * x[i]).sum::<f64>() * TAU;
                mean + amplitude * phase.cos()
            }),
        }
    }
}

/// Block-scale policy: the balancing choice `ℓ(n)` or an explicit value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EllPolicy {
    Auto,
    Fixed { l: usize },
}

impl EllPolicy {
    pub fn resolve(&self, d: usize, n: usize) -> Result<usize> {
        match self {
            EllPolicy::Auto => crate::obs::ell_of_n(d, n),
            EllPolicy::Fixed { l } => Ok(*l),
        }
    }
}

fn default_mode_cutoff() -> Option<usize> {
    None
}

fn default_ell() -> EllPolicy {
    EllPolicy::Auto
}

fn default_dt() -> Option<f64> {
    None
}

/// Reproducible description of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub d: usize,
    pub n_list: Vec<usize>,
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: Option<f64>,
    pub field: VectorFieldSpec,
    pub u0: ProfileSpec,
    pub replicas: usize,
    pub seed: u64,
    /// Mode cutoff for Fourier outputs; `None` means the per-dimension
    /// default (16 in d=1, 8 in d=2, 5 in d=3).
    #[serde(default = "default_mode_cutoff")]
    pub mode_cutoff: Option<usize>,
    #[serde(default = "default_ell")]
    pub ell: EllPolicy,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > MAX_D {
            return Err(Error::InvalidDimension(self.d));
        }
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must be nonempty".into()));
        }
        if self.t_final <= 0.0 {
            return Err(Error::Config("t_final must be positive".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be positive".into()));
        }
        for &n in &self.n_list {
            Torus::new(self.d, n)?;
        }
        Ok(())
    }

    /// Mode cutoff resolved against the per-dimension default.
    pub fn mode_cutoff(&self) -> usize {
        self.mode_cutoff.unwrap_or(match self.d {
            1 => 16,
            2 => 8,
            _ => 5,
        })
    }

    /// Canonical JSON serialization (what gets hashed and echoed).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization; embedded in every output.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    // Default configurations for each experiment, used by the CLI when no
    // config file is given. Parameters mirror the checks the acceptance
    // suite runs.

    pub fn default_hydro_rate() -> Self {
        ExperimentConfig {
            experiment: "hydro-rate".into(),
            d: 1,
            n_list: vec![32, 64, 128, 256],
            t_final: 0.05,
            dt: None,
            field: VectorFieldSpec::Fourier {
                components: vec![vec![crate::hydro::FourierTerm {
                    mode: [1, 0, 0],
                    cos: 0.0,
                    sin: 1.0,
                }]],
            },
            u0: ProfileSpec::Cosine {
                mean: 0.5,
                amplitude: 0.2,
                mode: [1, 0, 0],
            },
            replicas: 200,
            seed: 7,
            mode_cutoff: None,
            ell: EllPolicy::Auto,
        }
    }

    pub fn default_clt() -> Self {
        ExperimentConfig {
            experiment: "clt".into(),
            d: 1,
            n_list: vec![256],
            t_final: 0.1,
            dt: None,
            field: VectorFieldSpec::Constant {
                value: [1.0, 0.0, 0.0],
            },
            u0: ProfileSpec::Constant { rho: 0.5 },
            replicas: 2000,
            seed: 21,
            mode_cutoff: None,
            ell: EllPolicy::Auto,
        }
    }

    pub fn default_bg() -> Self {
        ExperimentConfig {
            experiment: "bg".into(),
            d: 1,
            n_list: vec![64, 128, 256],
            t_final: 0.1,
            dt: None,
            field: VectorFieldSpec::Constant {
                value: [1.0, 0.0, 0.0],
            },
            u0: ProfileSpec::Constant { rho: 0.5 },
            replicas: 120,
            seed: 13,
            mode_cutoff: None,
            ell: EllPolicy::Auto,
        }
    }

    pub fn default_entropy() -> Self {
        ExperimentConfig {
            experiment: "entropy".into(),
            d: 1,
            n_list: vec![6, 8, 10, 12],
            t_final: 0.05,
            dt: None,
            field: VectorFieldSpec::Zero,
            u0: ProfileSpec::Cosine {
                mean: 0.5,
                amplitude: 0.2,
                mode: [1, 0, 0],
            },
            replicas: 1,
            seed: 17,
            mode_cutoff: None,
            ell: EllPolicy::Auto,
        }
    }

    pub fn default_flows() -> Self {
        ExperimentConfig {
            experiment: "flows".into(),
            d: 3, // sweeps all dimensions up to d
            n_list: vec![64, 64, 32],
            t_final: 1.0,
            dt: None,
            field: VectorFieldSpec::Zero,
            u0: ProfileSpec::Constant { rho: 0.5 },
            replicas: 1,
            seed: 19,
            mode_cutoff: None,
            ell: EllPolicy::Auto,
        }
    }
}
