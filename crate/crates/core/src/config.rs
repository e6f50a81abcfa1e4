//! JSON run configuration shared by the command-line driver and tests.
//!
//! Every field is optional in the document; defaults describe a beam with
//! `c = l = d = 1`. The static target fields are only demanded by commands
//! that need them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::beam::{build_system, BeamParams};
use crate::lq_solver::{HorizonSpec, DEFAULT_SAMPLES};
use crate::model::{OscillatorSystem, StateVector};
use crate::static_opt::TargetSpec;

pub const DEFAULT_N: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// A vector given either element-wise or as one value repeated `N` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fill {
    Scalar(f64),
    Values(Vec<f64>),
}

impl Fill {
    fn expand(&self, n: usize, field: &str) -> Result<Vec<f64>, ConfigError> {
        match self {
            Fill::Scalar(v) => Ok(vec![*v; n]),
            Fill::Values(v) if v.len() >= n => Ok(v[..n].to_vec()),
            Fill::Values(v) => Err(ConfigError::Invalid(format!(
                "`{field}` has {} entries, need {n}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Generator {
    Beam {
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "one")]
        l: f64,
        #[serde(default = "one")]
        d: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative sup-norm gap allowed between the dichotomy and Riccati solvers.
    pub oracle_rel: f64,
    pub pmp: f64,
    /// Allowed `max/min` of envelope constants across a sweep.
    pub envelope_spread: f64,
    /// Allowed relative variation of the shooting ratio across horizons.
    pub shooting_variation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle_rel: 1e-6,
            pmp: 1e-6,
            envelope_spread: 2.0,
            shooting_variation: 0.25,
        }
    }
}

/// The configuration document as written.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub omega: Option<Vec<f64>>,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub generator: Option<Generator>,
    #[serde(default)]
    pub xbar_xi: Option<Fill>,
    #[serde(default)]
    pub xbar_eta: Option<Fill>,
    #[serde(default)]
    pub ubar: Option<f64>,
    #[serde(rename = "T", alias = "horizon", default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub x0_xi: Option<Fill>,
    #[serde(default)]
    pub x0_eta: Option<Fill>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub betas: Option<Vec<f64>>,
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    #[serde(default)]
    pub t_list: Option<Vec<f64>>,
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.generator.is_some() && (self.omega.is_some() || self.b.is_some()) {
            return Err(ConfigError::Invalid(
                "give either `generator` or `omega`/`b`, not both".into(),
            ));
        }
        if self.omega.is_some() != self.b.is_some() {
            return Err(ConfigError::Missing(if self.omega.is_some() { "b" } else { "omega" }));
        }
        if let Some(betas) = &self.betas {
            if let Some(b) = betas.iter().find(|b| !(**b > 0.0)) {
                return Err(ConfigError::Invalid(format!("beta = {b} must be positive")));
            }
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0) {
                return Err(ConfigError::Invalid(format!("T = {t} must be positive")));
            }
        }
        if let Some(ts) = &self.t_list {
            if let Some(t) = ts.iter().find(|t| !(**t > 0.0)) {
                return Err(ConfigError::Invalid(format!(
                    "horizon {t} in `t_list` must be positive"
                )));
            }
        }
        if let (Some(list), Some(avail)) = (&self.n_list, self.available_n()) {
            if let Some(m) = list.iter().find(|m| **m == 0 || **m > avail) {
                return Err(ConfigError::Invalid(format!("truncation {m} outside 1..={avail}")));
            }
        }
        if let Some((lo, hi)) = self.window {
            if !(lo < hi) {
                return Err(ConfigError::Invalid(format!("empty fit window {lo}:{hi}")));
            }
        }
        Ok(())
    }

    /// Number of modes the system source can provide (`None` for the beam,
    /// which has no upper limit).
    fn available_n(&self) -> Option<usize> {
        self.omega.as_ref().map(|o| o.len())
    }

    /// Truncation used by single-run commands: `N`, else the largest ladder
    /// entry, else all explicit modes, else the default.
    pub fn size(&self) -> usize {
        self.n
            .or_else(|| self.n_list.as_ref().and_then(|l| l.iter().max().copied()))
            .or_else(|| self.available_n())
            .unwrap_or(DEFAULT_N)
    }

    pub fn beam_params(&self) -> Result<BeamParams, ConfigError> {
        let p = match self.generator {
            Some(Generator::Beam { c, l, d }) => BeamParams::new(c, l, d),
            None => Ok(BeamParams::default()),
        };
        p.map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// The oscillator system with `n` modes.
    pub fn system_with(&self, n: usize) -> Result<OscillatorSystem, ConfigError> {
        if n == 0 {
            return Err(ConfigError::Invalid("N must be at least 1".into()));
        }
        match (&self.omega, &self.b) {
            (Some(om), Some(b)) => {
                if om.len() != b.len() {
                    return Err(ConfigError::Invalid(format!(
                        "`omega` has {} entries but `b` has {}",
                        om.len(),
                        b.len()
                    )));
                }
                if n > om.len() {
                    return Err(ConfigError::Invalid(format!(
                        "N = {n} exceeds the {} given modes",
                        om.len()
                    )));
                }
                OscillatorSystem::new(om[..n].to_vec(), b[..n].to_vec())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            _ => build_system(n, &self.beam_params()?).map_err(|e| ConfigError::Invalid(e.to_string())),
        }
    }

    pub fn system(&self) -> Result<OscillatorSystem, ConfigError> {
        self.system_with(self.size())
    }

    pub fn target_with(&self, n: usize) -> Result<TargetSpec, ConfigError> {
        let xi = self.xbar_xi.as_ref().ok_or(ConfigError::Missing("xbar_xi"))?;
        let eta = self.xbar_eta.as_ref().ok_or(ConfigError::Missing("xbar_eta"))?;
        let ubar = self.ubar.ok_or(ConfigError::Missing("ubar"))?;
        let xbar = StateVector::new(xi.expand(n, "xbar_xi")?, eta.expand(n, "xbar_eta")?)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        TargetSpec::new(xbar, ubar).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn target(&self) -> Result<TargetSpec, ConfigError> {
        self.target_with(self.size())
    }

    /// Explicit initial state, if the config gives one.
    pub fn initial_state(&self, n: usize) -> Result<Option<StateVector>, ConfigError> {
        match (&self.x0_xi, &self.x0_eta) {
            (None, None) => Ok(None),
            (xi, eta) => {
                let zero = Fill::Scalar(0.0);
                let x = StateVector::new(
                    xi.as_ref().unwrap_or(&zero).expand(n, "x0_xi")?,
                    eta.as_ref().unwrap_or(&zero).expand(n, "x0_eta")?,
                )
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Ok(Some(x))
            }
        }
    }

    pub fn horizon_spec(&self, x0: StateVector) -> Result<HorizonSpec, ConfigError> {
        let t = self.horizon.ok_or(ConfigError::Missing("T"))?;
        HorizonSpec::uniform(t, x0, self.samples()).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }

    /// Hex SHA-256 of the canonical JSON form, after any overrides.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// `# config_sha256=<hash>` line that heads every text output.
    pub fn header(&self) -> String {
        format!("# config_sha256={}\n", self.sha256())
    }
}
