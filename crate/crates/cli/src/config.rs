//! Run configurations. Every command resolves its parameters from, in order
//! of precedence, command-line flags, a flat TOML key-value file, and the
//! defaults below. The resolved struct is what gets echoed in JSON output.

use std::path::Path;

use atom_laser::pr_region::GAMMA_MIN;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Overlays the non-null flag values onto the config file and deserializes
/// the result.
pub fn resolve<F: Serialize, C: DeserializeOwned>(
    flags: &F,
    file: Option<&Path>,
    seed: Option<u64>,
) -> Result<C, CliError> {
    let mut map = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let table: toml::Table = toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            match serde_json::to_value(table).expect("TOML values map to JSON") {
                Value::Object(m) => m,
                _ => Map::new(),
            }
        }
        None => Map::new(),
    };
    if let Value::Object(f) = serde_json::to_value(flags).expect("flags serialize") {
        for (k, v) in f {
            if !v.is_null() {
                map.insert(k, v);
            }
        }
    }
    if let Some(s) = seed {
        map.insert("seed".into(), s.into());
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub chi: f64,
    pub nu: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub n_gamma: usize,
    pub seed: u64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            chi: 0.0,
            nu: 0.0,
            gamma_min: GAMMA_MIN,
            gamma_max: 1.0,
            n_gamma: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Chi,
    Nu,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Parameter varied along the sweep.
    pub axis: SweepAxis,
    /// Value of the other parameter.
    pub fixed: f64,
    pub from: f64,
    pub to: f64,
    /// Number of log-spaced points.
    pub n: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Chi,
            fixed: 0.0,
            from: 1e-2,
            to: 1e4,
            n: 61,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum UnravelingChoice {
    /// `u = 0`, started on the QSD ensemble.
    Qsd,
    /// Least-norm `u` realizing `(beta, gamma)`, started there.
    Realize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub chi: f64,
    pub nu: f64,
    pub unraveling: UnravelingChoice,
    /// Target ensemble for `realize`.
    pub beta: f64,
    pub gamma: f64,
    /// Initial means.
    pub m10: f64,
    pub m01: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub save_every: usize,
    /// With more than one trajectory only final states are written.
    pub n_traj: usize,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            chi: 0.0,
            nu: 0.0,
            unraveling: UnravelingChoice::Qsd,
            beta: 0.0,
            gamma: 1.0,
            m10: 0.0,
            m01: 0.0,
            dt: 1e-3,
            n_steps: 10_000,
            save_every: 10,
            n_traj: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpsConfig {
    pub mu: f64,
    pub n0: u64,
    pub t_max: f64,
    pub burn_in: f64,
    pub seed: u64,
}

impl Default for JumpsConfig {
    fn default() -> Self {
        Self {
            mu: 20.0,
            n0: 20,
            t_max: 1e4,
            burn_in: 10.0,
            seed: 0,
        }
    }
}

/// One experiment column. Either `species` or both atomic constants must be
/// given; trap frequencies are in Hz.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentEntry {
    pub label: String,
    #[serde(default)]
    pub species: Option<String>,
    #[serde(default)]
    pub mass_kg: Option<f64>,
    #[serde(default)]
    pub scattering_length_m: Option<f64>,
    pub trap_hz: [f64; 3],
    pub kappa: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required ratio for `>>`.
    pub margin: f64,
    /// Relative band on the atomic constants for the `chi` sensitivity.
    pub sensitivity: f64,
    pub experiment: Vec<ExperimentEntry>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            margin: atom_laser::experiments::DEFAULT_MARGIN_FACTOR,
            sensitivity: 0.1,
            experiment: vec![ExperimentEntry {
                label: "Proposed".into(),
                species: Some("sodium".into()),
                mass_kg: None,
                scattering_length_m: None,
                trap_hz: [25.0; 3],
                kappa: 7.0,
                mu: 1e6,
            }],
            seed: 0,
        }
    }
}
