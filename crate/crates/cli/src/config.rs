//! The simulation configuration file (TOML).

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use bdf_core::{InitialKind, NucleusState};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub alpha: f64,
    pub lambda_cutoff: f64,
    pub n_per_axis: usize,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub nuclei: Vec<NucleusConfig>,
    #[serde(default)]
    pub initial_state: InitialStateConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub constants: ConstantsConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusConfig {
    pub z: f64,
    pub m: f64,
    pub sigma: f64,
    pub x0: [f64; 3],
    #[serde(default)]
    pub v0: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    #[default]
    Vacuum,
    Charged,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    #[serde(default)]
    pub kind: StateKind,
    pub q: Option<usize>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub retraction: bool,
    pub retraction_period: usize,
    /// Abort once `‖Q‖_HS` exceeds this value.
    pub divergence_bound: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { retraction: false, retraction_period: 10, divergence_bound: 1e3 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Trajectory CSV, relative to the output directory.
    pub path: PathBuf,
    pub sample_every: usize,
    /// Optional binary checkpoint of the final `Q`, relative to the output directory.
    pub checkpoint: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { path: PathBuf::from("trajectory.csv"), sample_every: 10, checkpoint: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    pub c_e: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig { c_e: 2.0, samples: 8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Upper end of the coupling range with a global existence guarantee.
pub const ALPHA_LIMIT: f64 = 4.0 / PI;

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let de = toml::Deserializer::new(text);
    let cfg: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().trim().to_string();
        if path == "." {
            ConfigError(message)
        } else {
            ConfigError(format!("{path}: {message}"))
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn require(ok: bool, key: &str, what: &str, value: impl fmt::Display) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(format!("{key}: must be {what}, got {value}")))
    }
}

fn finite_positive(key: &str, v: f64) -> Result<(), ConfigError> {
    require(v.is_finite() && v > 0.0, key, "a finite positive number", v)
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        require(self.alpha.is_finite() && self.alpha >= 0.0, "alpha", "finite and ≥ 0", self.alpha)?;
        finite_positive("lambda_cutoff", self.lambda_cutoff)?;
        require(self.n_per_axis >= 2, "n_per_axis", "at least 2", self.n_per_axis)?;
        finite_positive("dt", self.dt)?;
        finite_positive("t_final", self.t_final)?;
        for (i, n) in self.nuclei.iter().enumerate() {
            finite_positive(&format!("nuclei[{i}].z"), n.z)?;
            finite_positive(&format!("nuclei[{i}].m"), n.m)?;
            finite_positive(&format!("nuclei[{i}].sigma"), n.sigma)?;
            for (key, v) in [("x0", n.x0), ("v0", n.v0)] {
                let ok = v.iter().all(|c| c.is_finite());
                require(ok, &format!("nuclei[{i}].{key}"), "finite", format!("{v:?}"))?;
            }
        }
        let init = &self.initial_state;
        match init.kind {
            StateKind::Vacuum => {}
            StateKind::Charged => {
                require(init.q.is_some(), "initial_state.q", "set for kind = \"charged\"", "nothing")?;
            }
            StateKind::Perturbed => {
                let eps = init
                    .epsilon
                    .ok_or_else(|| ConfigError("initial_state.epsilon: required for kind = \"perturbed\"".into()))?;
                require(eps.is_finite(), "initial_state.epsilon", "finite", eps)?;
            }
        }
        if init.q.is_some() && init.kind != StateKind::Charged {
            return Err(ConfigError("initial_state.q: only allowed for kind = \"charged\"".into()));
        }
        if init.epsilon.is_some() && init.kind != StateKind::Perturbed {
            return Err(ConfigError("initial_state.epsilon: only allowed for kind = \"perturbed\"".into()));
        }
        let integ = &self.integrator;
        require(integ.retraction_period >= 1, "integrator.retraction_period", "at least 1", integ.retraction_period)?;
        finite_positive("integrator.divergence_bound", integ.divergence_bound)?;
        require(self.output.sample_every >= 1, "output.sample_every", "at least 1", self.output.sample_every)?;
        let c = &self.constants;
        require(c.c_e.is_finite() && c.c_e > 1.0, "constants.c_e", "finite and > 1", c.c_e)?;
        require(c.samples >= 1, "constants.samples", "at least 1", c.samples)?;
        Ok(())
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.alpha >= ALPHA_LIMIT {
            out.push(format!(
                "alpha = {} is outside the proven global-existence regime (alpha < 4/pi ≈ {ALPHA_LIMIT:.4})",
                self.alpha
            ));
        }
        out
    }

    pub fn initial_kind(&self) -> InitialKind {
        let init = &self.initial_state;
        match init.kind {
            StateKind::Vacuum => InitialKind::Vacuum,
            StateKind::Charged => InitialKind::Charged { charge: init.q.unwrap_or(0) },
            StateKind::Perturbed => {
                InitialKind::Perturbed { epsilon: init.epsilon.unwrap_or(0.0), seed: init.seed.unwrap_or(0) }
            }
        }
    }

    pub fn nuclei(&self) -> Result<Vec<NucleusState>, ConfigError> {
        self.nuclei
            .iter()
            .enumerate()
            .map(|(i, n)| {
                NucleusState::new(n.z, n.m, n.sigma, n.x0, n.v0).map_err(|e| ConfigError(format!("nuclei[{i}]: {e}")))
            })
            .collect()
    }
}
