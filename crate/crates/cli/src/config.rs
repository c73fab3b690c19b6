//! The JSON run configuration shared by every subcommand.
//!
//! Unknown keys are rejected, every embedded spec is validated right after
//! parsing, and relative paths are taken relative to the config file.

use std::fs;
use std::path::{Path, PathBuf};

use risk_core::datagen::{gen_regression, DistSpec};
use risk_core::learners::{Averaging, BatchMode, Dataset, LossKind, StepSchedule, TrainConfig};
use risk_core::{ObjectiveSpec, RiskSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::io::read_dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root of all randomness. Required by `train`, `compare` and `demo`.
    pub seed: Option<u64>,
    /// Loss CSV for `eval`.
    pub losses: Option<PathBuf>,
    #[serde(default)]
    pub risks: Vec<RiskSpec>,
    pub data: Option<DataSource>,
    /// Held-out data. Defaults to a fresh draw for synthetic data and to the
    /// training file otherwise.
    pub test: Option<DataSource>,
    pub train: Option<TrainSection>,
    /// Objective for `train`.
    pub objective: Option<ObjectiveSpec>,
    /// Objectives for `compare`, one model each.
    #[serde(default)]
    pub objectives: Vec<ObjectiveSpec>,
    pub model_out: Option<PathBuf>,
    pub demo: Option<DemoSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    File {
        path: PathBuf,
    },
    /// Standard-normal features, labels `<w_star, x> + noise`.
    Synthetic {
        n: usize,
        w_star: Vec<f64>,
        noise: DistSpec,
    },
}

/// [`TrainConfig`] minus the objective and seed, which come from elsewhere in
/// the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub loss_kind: LossKind,
    pub steps: usize,
    pub step_size: StepSchedule,
    #[serde(default)]
    pub batch: BatchMode,
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default = "default_true")]
    pub fit_bias: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Stpetersburg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSection {
    pub preset: Preset,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    /// Seeds behind the replicate ranges.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

fn default_sizes() -> Vec<usize> {
    vec![100, 1_000, 10_000, 100_000]
}

fn default_replicates() -> usize {
    20
}

impl Default for DemoSection {
    fn default() -> Self {
        Self { preset: Preset::Stpetersburg, sizes: default_sizes(), replicates: default_replicates() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Train,
    Compare,
    Demo,
}

/// A parsed config together with its hash and base directory.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Hex SHA-256 of the config re-serialised as compact JSON.
    pub hash: String,
}

impl LoadedConfig {
    pub fn from_str(text: &str, base: &Path) -> Result<Self> {
        let mut config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        let canonical = serde_json::to_vec(&config).map_err(|e| CliError::config(e.to_string()))?;
        let hash = hex::encode(Sha256::digest(&canonical));
        config.resolve_paths(base);
        Ok(Self { config, hash })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_str(&text, base).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The built-in `demo` config used when no `--config` is given.
    pub fn builtin_demo() -> Self {
        Self::from_str(r#"{"seed": 20240601, "demo": {"preset": "stpetersburg"}}"#, Path::new("."))
            .expect("built-in demo config parses")
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

/// Independent seed for a named sub-task (splitmix64 finaliser).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const SALT_TRAIN_DATA: u64 = 1;
const SALT_TEST_DATA: u64 = 2;
const SALT_TRAINER: u64 = 3;
pub(crate) const SALT_DEMO: u64 = 4;

impl DataSource {
    fn validate(&self, field: &str) -> Result<()> {
        match self {
            Self::File { .. } => Ok(()),
            Self::Synthetic { n, w_star, noise } => {
                if *n == 0 {
                    return Err(CliError::config(format!("{field}.n must be >= 1")));
                }
                if w_star.is_empty() || w_star.iter().any(|w| !w.is_finite()) {
                    return Err(CliError::config(format!("{field}.w_star must be a non-empty list of finite numbers")));
                }
                noise.validate().map_err(|e| CliError::invalid(format!("{field}.noise"), e))
            }
        }
    }

    fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            Self::File { path } => read_dataset(path),
            Self::Synthetic { n, w_star, noise } => {
                gen_regression(w_star.len(), *n, w_star, noise, seed).map_err(|e| CliError::invalid("data", e))
            }
        }
    }
}

impl TrainSection {
    pub fn with(&self, objective: ObjectiveSpec, seed: u64) -> TrainConfig {
        TrainConfig {
            objective,
            loss_kind: self.loss_kind,
            steps: self.steps,
            step_size: self.step_size,
            seed,
            batch: self.batch,
            averaging: self.averaging,
            fit_bias: self.fit_bias,
        }
    }
}

impl RunConfig {
    fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &mut self.losses {
            resolve(base, p);
        }
        for src in [&mut self.data, &mut self.test].into_iter().flatten() {
            if let DataSource::File { path } = src {
                resolve(base, path);
            }
        }
        if let Some(p) = &mut self.model_out {
            resolve(base, p);
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| CliError::config("missing field `seed` (all randomness derives from it)"))
    }

    /// Command-specific presence checks plus validation of every embedded spec.
    pub fn validate(&self, cmd: Command) -> Result<()> {
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(CliError::config(msg)) };
        match cmd {
            Command::Eval => {
                need(self.losses.is_some(), "eval needs `losses`")?;
                need(!self.risks.is_empty(), "eval needs at least one entry in `risks`")?;
            }
            Command::Train => {
                self.seed()?;
                need(self.data.is_some(), "train needs `data`")?;
                need(self.train.is_some(), "train needs `train`")?;
                need(self.objective.is_some(), "train needs `objective`")?;
            }
            Command::Compare => {
                self.seed()?;
                need(self.data.is_some(), "compare needs `data`")?;
                need(self.train.is_some(), "compare needs `train`")?;
                need(self.objectives.len() >= 2, "compare needs at least two entries in `objectives`")?;
                need(!self.risks.is_empty(), "compare needs at least one entry in `risks`")?;
            }
            Command::Demo => {
                self.seed()?;
                let demo = self.demo.clone().unwrap_or_default();
                need(!demo.sizes.is_empty(), "demo.sizes must be non-empty")?;
                need(demo.sizes.iter().all(|&n| n >= 1), "demo.sizes entries must be >= 1")?;
                need(demo.replicates >= 2, "demo.replicates must be >= 2")?;
            }
        }
        for (i, r) in self.risks.iter().enumerate() {
            r.validate().map_err(|e| CliError::invalid(format!("risks[{i}]"), e))?;
        }
        if let Some(o) = &self.objective {
            o.validate().map_err(|e| CliError::invalid("objective", e))?;
        }
        for (i, o) in self.objectives.iter().enumerate() {
            o.validate().map_err(|e| CliError::invalid(format!("objectives[{i}]"), e))?;
        }
        if let Some(d) = &self.data {
            d.validate("data")?;
        }
        if let Some(d) = &self.test {
            d.validate("test")?;
        }
        if let (Some(DataSource::Synthetic { w_star, .. }), Some(DataSource::Synthetic { w_star: w2, .. })) =
            (&self.data, &self.test)
        {
            need(w_star.len() == w2.len(), "test.w_star must have the same length as data.w_star")?;
        }
        if let Some(t) = &self.train {
            let a = match t.step_size {
                StepSchedule::Constant { a } | StepSchedule::InvSqrt { a } => a,
            };
            need(t.steps >= 1, "train.steps must be >= 1")?;
            need(a.is_finite() && a > 0.0, "train.step_size.a must be > 0")?;
            need(!matches!(t.batch, BatchMode::Minibatch { m: 0 }), "train.batch.m must be >= 1")?;
        }
        Ok(())
    }

    /// Training and held-out data. Synthetic sources draw from derived seeds.
    pub fn datasets(&self) -> Result<(Dataset, Dataset)> {
        let seed = self.seed()?;
        let data = self.data.as_ref().ok_or_else(|| CliError::config("missing `data`"))?;
        let train = data.load(derive_seed(seed, SALT_TRAIN_DATA))?;
        let test = match (&self.test, data) {
            (Some(t), _) => t.load(derive_seed(seed, SALT_TEST_DATA))?,
            (None, DataSource::Synthetic { .. }) => data.load(derive_seed(seed, SALT_TEST_DATA))?,
            (None, DataSource::File { .. }) => train.clone(),
        };
        if test.dim() != train.dim() {
            return Err(CliError::config(format!(
                "test data has {} features but training data has {}",
                test.dim(),
                train.dim()
            )));
        }
        Ok((train, test))
    }

    pub fn trainer_seed(&self) -> Result<u64> {
        Ok(derive_seed(self.seed()?, SALT_TRAINER))
    }
}
