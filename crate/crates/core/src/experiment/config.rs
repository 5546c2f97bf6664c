use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::{FederationConfig, Method};
use crate::gcf::{check_even_layers, StructureConfig, TrainConfig};
use crate::gdve::GdveConfig;
use crate::optim::OptimizerKind;
use crate::partition::PartitionMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// Tab-separated `user item rating timestamp`.
    Movielens,
    /// Whitespace-separated `user item`, `#` comments.
    EdgeList,
    /// `user item item ...` per line.
    AdjacencyList,
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::Movielens => "movielens",
            DatasetFormat::EdgeList => "edge_list",
            DatasetFormat::AdjacencyList => "adjacency_list",
        })
    }
}

/// Every knob of one run. Read from a flat TOML file; unknown keys are errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub format: DatasetFormat,
    pub method: Method,
    pub clients: usize,
    /// Target share of edges whose users become global.
    pub global_frac: f64,
    pub partition: PartitionMode,
    /// Symmetric Dirichlet concentration over clients (dirichlet mode).
    pub concentration: f64,
    /// Reuse a partition manifest instead of drawing one.
    pub manifest: Option<PathBuf>,
    pub dim: usize,
    pub layers: usize,
    pub even_layers: Vec<usize>,
    pub tau: f64,
    pub structure_weight: f64,
    pub lambda: f64,
    pub optimizer: OptimizerKind,
    /// Optimizer of the probability estimator.
    pub policy_optimizer: OptimizerKind,
    /// Rate of every GCF model.
    pub lr: f64,
    /// Rate of the probability estimator.
    pub policy_lr: f64,
    /// Positive edges per training mini-batch.
    pub batch_size: usize,
    /// Global users per GDVE batch.
    pub gdve_batch_users: usize,
    pub pretrain_epochs: usize,
    pub gdve_max_batches: usize,
    /// Batches without baseline improvement that end GDVE training; 0 never stops early.
    pub plateau_window: usize,
    pub plateau_tol: f64,
    pub ema_decay: f64,
    pub shared_encoder: bool,
    pub epochs_per_round: usize,
    pub rounds: usize,
    pub eval_k: usize,
    pub split_train: f64,
    pub split_valid: f64,
    pub split_test: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Write wall-clock seconds to the metrics file (0 otherwise).
    pub record_timing: bool,
    /// Write the final model next to the metrics.
    pub save_checkpoint: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::from("data/ml-100k/u.data"),
            format: DatasetFormat::Movielens,
            method: Method::Fedgdve,
            clients: 10,
            global_frac: 0.5,
            partition: PartitionMode::Uniform,
            concentration: 0.5,
            manifest: None,
            dim: 64,
            layers: 3,
            even_layers: vec![2],
            tau: 0.1,
            structure_weight: 1.0,
            lambda: 1e-4,
            optimizer: OptimizerKind::Adam,
            policy_optimizer: OptimizerKind::Sgd,
            lr: 0.004,
            policy_lr: 0.1,
            batch_size: 1024,
            gdve_batch_users: 1024,
            pretrain_epochs: 20,
            gdve_max_batches: 500,
            plateau_window: 100,
            plateau_tol: 1e-4,
            ema_decay: 0.9,
            shared_encoder: false,
            epochs_per_round: 2,
            rounds: 30,
            eval_k: 100,
            split_train: 0.8,
            split_valid: 0.1,
            split_test: 0.1,
            seed: 0,
            output_dir: PathBuf::from("runs"),
            record_timing: true,
            save_checkpoint: true,
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // bare words such as `fedgdve` are strings; anything TOML can read is typed
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl ExperimentConfig {
    /// Parses TOML text, applies `key=value` overrides, validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::config(o.clone(), "override must look like key=value"))?;
            table.insert(k.trim().to_string(), parse_value(v.trim()));
        }
        let cfg: ExperimentConfig = table.clone().try_into().map_err(|e: toml::de::Error| {
            // every key has a default, so the first key that fails alone is the culprit
            let key = table
                .iter()
                .find(|(k, v)| {
                    let mut one = toml::Table::new();
                    one.insert((*k).clone(), (*v).clone());
                    ExperimentConfig::deserialize(one).is_err()
                })
                .map(|(k, _)| k.clone())
                .unwrap_or_else(|| "<file>".into());
            Error::config(key, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Checks every invariant; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let fracs = [
            ("split_train", self.split_train),
            ("split_valid", self.split_valid),
            ("split_test", self.split_test),
        ];
        for (k, v) in fracs {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(k, format!("{v} is not in (0, 1)")));
            }
        }
        let sum: f64 = fracs.iter().map(|(_, v)| v).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("split_test", format!("split fractions sum to {sum}, not 1")));
        }
        for (k, v) in [("lr", self.lr), ("policy_lr", self.policy_lr), ("tau", self.tau)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("{v} must be positive")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be non-negative"));
        }
        if !(self.structure_weight >= 0.0 && self.structure_weight.is_finite()) {
            return Err(Error::config("structure_weight", "must be non-negative"));
        }
        if self.eval_k == 0 {
            return Err(Error::config("eval_k", "must be at least 1"));
        }
        for (k, v) in [
            ("dim", self.dim),
            ("batch_size", self.batch_size),
            ("gdve_batch_users", self.gdve_batch_users),
            ("clients", self.clients),
        ] {
            if v == 0 {
                return Err(Error::config(k, "must be at least 1"));
            }
        }
        if !(0.0..1.0).contains(&self.global_frac) {
            return Err(Error::config("global_frac", format!("{} is not in [0, 1)", self.global_frac)));
        }
        if self.partition == PartitionMode::Dirichlet && !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(Error::config("concentration", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return Err(Error::config("ema_decay", "must lie in [0, 1)"));
        }
        if !(self.plateau_tol >= 0.0) {
            return Err(Error::config("plateau_tol", "must be non-negative"));
        }
        if self.method.uses_structure_loss() {
            check_even_layers(&self.even_layers, self.layers).map_err(|e| Error::config("even_layers", e.to_string()))?;
        }
        if self.method.uses_gdve() && self.global_frac == 0.0 {
            return Err(Error::config("global_frac", format!("{} needs global data", self.method)));
        }
        Ok(())
    }

    pub fn structure(&self) -> StructureConfig {
        StructureConfig {
            tau: self.tau,
            even_layers: self.even_layers.clone(),
            weight: self.structure_weight,
        }
    }

    pub fn gdve_config(&self) -> GdveConfig {
        GdveConfig {
            dim: self.dim,
            num_layers: self.layers,
            pretrain_epochs: self.pretrain_epochs,
            train: TrainConfig {
                batch_size: self.batch_size,
                lambda: self.lambda,
                structure: Some(self.structure()),
            },
            optimizer: self.optimizer,
            policy_optimizer: self.policy_optimizer,
            lr: self.lr,
            policy_lr: self.policy_lr,
            batch_users: self.gdve_batch_users,
            max_batches: self.gdve_max_batches,
            plateau_window: self.plateau_window,
            plateau_tol: self.plateau_tol,
            ema_decay: self.ema_decay,
            reward_k: self.eval_k,
        }
    }

    pub fn federation_config(&self) -> FederationConfig {
        FederationConfig {
            method: self.method,
            rounds: self.rounds,
            epochs_per_round: self.epochs_per_round,
            dim: self.dim,
            num_layers: self.layers,
            optimizer: self.optimizer,
            lr: self.lr,
            batch_size: self.batch_size,
            lambda: self.lambda,
            structure: self.structure(),
            eval_k: self.eval_k,
            seed: self.seed,
            gdve: self.gdve_config(),
            shared_encoder: self.shared_encoder,
        }
    }

    /// Stable identifier of the run within an output directory.
    pub fn run_id(&self) -> String {
        format!("{}-k{}-{}-s{}", self.method, self.clients, self.partition, self.seed)
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_toml_str(s, &[])
    }
}
