//! Declarative model and suite configuration (TOML), validated before any
//! computation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::Asymptotics;
use crate::error::{Error, Result};
use crate::variance::{RegularVariation, SrdCorrelation, VarianceModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Fbm { hurst: f64 },
    /// Integrated stationary process with correlation exp(−t^a).
    Srd { a: f64 },
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exponents: Option<RegularVariation>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<VarianceModel> {
        match self {
            ModelSpec::Fbm { hurst } => VarianceModel::fbm(*hurst),
            ModelSpec::Srd { a } => VarianceModel::srd(SrdCorrelation::exp_power(*a)?),
            ModelSpec::Tabulated { times, values, exponents } => {
                let m = VarianceModel::tabulated(times, values)?;
                Ok(match exponents {
                    Some(e) => m.with_exponents(*e),
                    None => m,
                })
            }
        }
    }
}

/// A model, its drift and the derived asymptotics, built once.
#[derive(Debug, Clone)]
pub struct Setup {
    pub spec: ModelSpec,
    pub c: f64,
    pub pickands: Option<f64>,
    pub model: VarianceModel,
    pub asym: Asymptotics,
}

impl Setup {
    /// `pickands` overrides the built-in Pickands constant (needed for models
    /// whose constant is not known in closed form).
    pub fn new(spec: ModelSpec, c: f64, pickands: Option<f64>) -> Result<Self> {
        let model = spec.build()?;
        let asym = match pickands {
            Some(h) => Asymptotics::with_pickands(&model, c, h)?,
            None => Asymptotics::new(&model, c)?,
        };
        Ok(Setup { spec, c, pickands, model, asym })
    }

    /// The part of the setup that determines results.
    pub fn key(&self) -> SetupKey<'_> {
        SetupKey { model: &self.spec, c: self.c, pickands: self.pickands }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SetupKey<'a> {
    pub model: &'a ModelSpec,
    pub c: f64,
    pub pickands: Option<f64>,
}

fn default_workers() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}

/// One job of a suite. Every job has a unique `name` that fixes its output
/// file names and its random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JobSpec {
    Constants {
        name: String,
    },
    Psi {
        name: String,
        u: Vec<f64>,
        replicas: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        burn_in: Option<f64>,
        /// Repeat the estimate with half the step to expose discretization bias.
        #[serde(default = "default_true")]
        half_step_control: bool,
    },
    Strip {
        name: String,
        u: f64,
        #[serde(default = "default_one")]
        horizon: f64,
        thetas: Vec<f64>,
        replicas: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Pickands {
        name: String,
        windows: Vec<f64>,
        #[serde(default)]
        theta: f64,
        replicas: u64,
    },
    Criterion {
        name: String,
        p: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_max: Option<f64>,
    },
    Limsup {
        name: String,
        horizon: f64,
        replicas: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t0: Option<f64>,
    },
    ErdosRevesz {
        name: String,
        p: f64,
        horizon: f64,
        replicas: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t0: Option<f64>,
    },
}

impl JobSpec {
    pub fn name(&self) -> &str {
        match self {
            JobSpec::Constants { name }
            | JobSpec::Psi { name, .. }
            | JobSpec::Strip { name, .. }
            | JobSpec::Pickands { name, .. }
            | JobSpec::Criterion { name, .. }
            | JobSpec::Limsup { name, .. }
            | JobSpec::ErdosRevesz { name, .. } => name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            JobSpec::Constants { .. } => "constants",
            JobSpec::Psi { .. } => "psi",
            JobSpec::Strip { .. } => "strip",
            JobSpec::Pickands { .. } => "pickands",
            JobSpec::Criterion { .. } => "criterion",
            JobSpec::Limsup { .. } => "limsup",
            JobSpec::ErdosRevesz { .. } => "erdos-revesz",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub output_dir: PathBuf,
    pub model: ModelSpec,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickands: Option<f64>,
    /// Also write two-column plot files next to the tables.
    #[serde(default)]
    pub emit_plot_data: bool,
    #[serde(default)]
    pub jobs: Vec<JobSpec>,
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a suite file; a relative `output_dir` is taken relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_dir = dir.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for job in &self.jobs {
            let n = job.name();
            if n.is_empty() || !n.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_') {
                return Err(Error::Config(format!("job name {n:?} must be nonempty [A-Za-z0-9_-]")));
            }
            if !names.insert(n) {
                return Err(Error::Config(format!("duplicate job name {n:?}")));
            }
        }
        // building the model validates its parameters
        Setup::new(self.model.clone(), self.c, self.pickands)?;
        Ok(())
    }
}
