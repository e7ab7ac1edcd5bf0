//! JSON run configuration.
//!
//! Rates written in the config are in the config's `units`; all numeric
//! output follows `--units`, defaulting to the config's choice.

use crate::error::{CliError, CliResult};
use grandab_core::channel_info::{CAPACITY_MAX_ITER, CAPACITY_TOL};
use grandab_core::{Channel, Pmf, SolverConfig};
use serde::Deserialize;
use std::f64::consts::LN_2;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    /// Multiplier taking nats to these units.
    pub fn scale(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => 1.0 / LN_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: Vec<Vec<f64>>,
    #[serde(default)]
    pub input_dist: Option<Vec<f64>>,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub capacity: CapacitySection,
    #[serde(default)]
    pub exponents: Option<ExponentsSection>,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacitySection {
    pub tol: f64,
    pub max_iter: usize,
    /// Error level used to pick the dispersion for non-unique CAIDs.
    pub eps: f64,
    /// Additional capacity-achieving inputs supplied by the user.
    pub caids: Vec<Vec<f64>>,
}

impl Default for CapacitySection {
    fn default() -> Self {
        Self {
            tol: CAPACITY_TOL,
            max_iter: CAPACITY_MAX_ITER,
            eps: 0.1,
            caids: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSection {
    /// Code rates `R`.
    pub rates: Vec<f64>,
    /// Abandonment rates `r`; defaults to `H(P)` alone.
    #[serde(default)]
    pub abandon_rates: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimPoint {
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimRates {
    #[serde(rename = "R")]
    pub code: f64,
    #[serde(rename = "r")]
    pub abandon: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub n: Vec<u32>,
    #[serde(default)]
    pub points: Vec<SimPoint>,
    #[serde(default)]
    pub rates: Vec<SimRates>,
    pub trials: u64,
    #[serde(default = "default_sim_eps")]
    pub eps: f64,
}

fn default_sim_eps() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub max_n: u32,
    pub ternary_max_n: u32,
    pub ternary_samples: u64,
    /// Blocklength bound for the brute-force `Ψ` comparison.
    pub oracle_max_n: u32,
    /// Blocklength bound for the estimator-equivalence suite.
    pub estimator_max_n: u32,
    /// Drop the polynomial factor from the upper `Ψ` bound, to exercise the harness.
    pub fault: bool,
    /// Check `e^{nĤ} ≤ G` as stated rather than the finite-n lower bound.
    pub literal_rank_lower_bound: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            max_n: 6,
            ternary_max_n: 5,
            ternary_samples: 10_000,
            oracle_max_n: 8,
            estimator_max_n: 4,
            fault: false,
            literal_rank_lower_bound: false,
        }
    }
}

/// A parsed config with the raw bytes kept for hashing.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub raw: Vec<u8>,
}

impl LoadedConfig {
    pub fn from_bytes(raw: Vec<u8>) -> CliResult<Self> {
        let config: RunConfig = serde_json::from_slice(&raw).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self { config, raw })
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let raw = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_bytes(raw)
    }

    /// SHA-256 of the config file, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        Sha256::digest(&self.raw).iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl RunConfig {
    pub fn channel(&self) -> CliResult<Channel> {
        Channel::new(self.channel.clone()).map_err(|e| CliError::Validation(format!("field `channel`: {e}")))
    }

    /// The configured input distribution, if any.
    pub fn input(&self, w: &Channel) -> CliResult<Option<Pmf>> {
        let Some(p) = &self.input_dist else {
            return Ok(None);
        };
        if p.len() != w.inputs() {
            return Err(CliError::Validation(format!(
                "field `input_dist`: length {} but the channel has {} inputs",
                p.len(),
                w.inputs()
            )));
        }
        Pmf::new(p.clone())
            .map(Some)
            .map_err(|e| CliError::Validation(format!("field `input_dist`: {e}")))
    }

    /// Converts a rate given in the config's units to nats.
    pub fn to_nats(&self, v: f64) -> f64 {
        v / self.units.scale()
    }
}

pub fn strictly_increasing(field: &str, xs: &[f64]) -> CliResult<()> {
    if xs.is_empty() {
        return Err(CliError::Validation(format!("field `{field}` is empty")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Validation(format!("field `{field}` has a non-finite entry")));
    }
    if let Some(i) = xs.windows(2).position(|w| w[0] >= w[1]) {
        return Err(CliError::Validation(format!(
            "field `{field}` must be strictly increasing (entries {i} and {})",
            i + 1
        )));
    }
    Ok(())
}
