use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use stepgp::benchmark::{ExperimentConfig, Method, TestFunction};
use stepgp::Domain;

use crate::CliError;

pub const MAX_DIM: usize = 10;

/// Benchmark run description, read from TOML and overridable by flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Training-set size; defaults to `10·d` per function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_train: Option<usize>,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_design_iters")]
    pub design_iters: usize,
    /// Method labels; defaults to the eleven standard methods.
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    pub functions: Vec<FunctionConfig>,
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Not part of the config hash.
    #[serde(default = "default_out_dir", skip_serializing)]
    pub out_dir: PathBuf,
    /// Worker threads; 0 means all cores. Not part of the config hash.
    #[serde(default, skip_serializing)]
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum FunctionConfig {
    /// Step along the first axis; default domain `[-2, 2]^dim`, jump at 0.
    Step {
        dim: usize,
        #[serde(default)]
        jump: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<f64>,
    },
    Nonstat,
}

fn default_replicates() -> usize {
    20
}
fn default_n_test() -> usize {
    1000
}
fn default_restarts() -> usize {
    stepgp::hyperopt::DEFAULT_RESTARTS
}
fn default_design_iters() -> usize {
    stepgp::design::DEFAULT_OPTIMIZE_ITERS
}
fn default_methods() -> Vec<String> {
    Method::standard_set().iter().map(Method::label).collect()
}
fn default_true() -> bool {
    true
}
fn default_out_dir() -> PathBuf {
    PathBuf::from(".")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid run config: {e}")))
    }

    /// Canonical text of every field that affects results.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn to_experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut functions = Vec::new();
        for f in &self.functions {
            functions.push(match *f {
                FunctionConfig::Step { dim, jump, lower, upper } => {
                    if !(1..=MAX_DIM).contains(&dim) {
                        return Err(CliError::Usage(format!("dim must be in 1..={MAX_DIM}, got {dim}")));
                    }
                    let domain = Domain::cube(lower.unwrap_or(-2.0), upper.unwrap_or(2.0), dim).map_err(CliError::usage)?;
                    TestFunction::step_at(domain, jump).map_err(CliError::usage)?
                }
                FunctionConfig::Nonstat => TestFunction::nonstat(),
            });
        }
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::usage)?;
        let mut cfg = ExperimentConfig::new(functions, methods, self.replicates, self.seed);
        cfg.n_train = self.n_train;
        cfg.n_test = self.n_test;
        cfg.restarts = self.restarts;
        cfg.design_iters = self.design_iters;
        cfg.record_timing = self.timing;
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}
