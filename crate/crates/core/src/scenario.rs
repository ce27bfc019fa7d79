//! Scenario files driving the `opinion` command-line tool.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, PerturbSpec};
use crate::sim::{RampSpec, SimConfig};
use crate::state::{DeviationState, StateJson};

fn default_samples() -> usize {
    20
}
fn default_equivariance_tol() -> f64 {
    1e-10
}
fn default_true() -> bool {
    true
}
fn default_sweep_scale() -> f64 {
    0.05
}
fn default_n_random() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisRequest {
    /// Random states per generator in the equivariance check.
    #[serde(default = "default_samples")]
    pub equivariance_samples: usize,
    #[serde(default = "default_equivariance_tol")]
    pub equivariance_tol: f64,
    /// Also locate the critical value by bisection on the Jacobian.
    #[serde(default = "default_true")]
    pub bisect: bool,
}

impl Default for AnalysisRequest {
    fn default() -> Self {
        AnalysisRequest { equivariance_samples: default_samples(), equivariance_tol: default_equivariance_tol(), bisect: true }
    }
}

/// Uniform λ grid `lambda_min..=lambda_max` with `steps` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub steps: usize,
    /// Radius of the axial and random starting states.
    #[serde(default = "default_sweep_scale")]
    pub init_scale: f64,
    #[serde(default = "default_n_random")]
    pub n_random: usize,
}

impl SweepGrid {
    pub fn lambdas(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|i| self.lambda_min + (self.lambda_max - self.lambda_min) * i as f64 / self.steps as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    /// Free text; ignored by every command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub model: ModelSpec,
    #[serde(default)]
    pub analysis: AnalysisRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<RampSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
    /// Initial deviation; random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<StateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Scenario {
    /// Parse and validate. Every problem surfaces as `Error::Schema`.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let schema = |e: Error| Error::Schema(e.to_string());
        if let Some(v) = self.schema_version {
            if v != crate::presets::SCHEMA_VERSION {
                return Err(Error::Schema(format!("unsupported schema_version {v}")));
            }
        }
        self.model.build().map_err(schema)?;
        if let Some(c) = &self.sim {
            c.validate().map_err(schema)?;
        }
        if let Some(r) = &self.ramp {
            if r.delta.is_some() && self.model.gains().is_none() {
                return Err(Error::Schema("a delta schedule needs alpha, beta, gamma and delta".into()));
            }
        }
        if let Some(g) = &self.sweep {
            if g.steps == 0 || !(g.lambda_max > g.lambda_min) {
                return Err(Error::Schema("sweep needs steps >= 1 and lambda_max > lambda_min".into()));
            }
            if !(g.init_scale > 0.0) {
                return Err(Error::Schema("sweep init_scale must be positive".into()));
            }
        }
        if let Some(z) = &self.init {
            if (z.na, z.no) != (self.model.na, self.model.no) {
                return Err(Error::Schema(format!(
                    "init is {}x{} but the model is {}x{}",
                    z.na, z.no, self.model.na, self.model.no
                )));
            }
            DeviationState::try_from(z.clone()).map_err(schema)?;
        }
        if self.analysis.equivariance_samples == 0 {
            return Err(Error::Schema("equivariance_samples must be at least 1".into()));
        }
        Ok(())
    }

    /// Seed from the command line, else the scenario, else the sim config.
    pub fn seed(&self, cli: Option<u64>) -> u64 {
        cli.or(self.seed).or(self.sim.as_ref().map(|c| c.seed)).unwrap_or(0)
    }

    /// Model spec with a perturbation of size `epsilon` (seeded with `seed`)
    /// replacing any in the file.
    pub fn model_with_epsilon(&self, epsilon: Option<f64>, seed: u64) -> ModelSpec {
        let mut m = self.model.clone();
        if let Some(e) = epsilon {
            m.perturb = if e > 0.0 { Some(PerturbSpec { epsilon: e, seed }) } else { None };
        }
        m
    }
}
