use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcf::GcfParams;
use crate::graph::InteractionGraph;
use crate::numerics::{Rng, RngState};
use crate::optim::Optimizer;

use super::{BatchLog, Encoder, GdveState, ProbEstimatorParams};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Every parameter block, optimizer moment, the reward baseline and the RNG
/// position of one client's estimator, as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdveCheckpoint {
    pub version: u32,
    pub encoder: GcfParams,
    pub valid: GcfParams,
    pub prob: ProbEstimatorParams,
    pub prob_opt: Optimizer,
    pub task: GcfParams,
    pub task_opt: Optimizer,
    pub baseline: f64,
    pub batches_run: usize,
    pub converged: bool,
    pub history: Vec<BatchLog>,
    pub rng: RngState,
}

impl GdveCheckpoint {
    pub fn from_state(state: &GdveState) -> Self {
        GdveCheckpoint {
            version: CHECKPOINT_VERSION,
            encoder: state.encoder.params().clone(),
            valid: state.valid.clone(),
            prob: state.prob.clone(),
            prob_opt: state.prob_opt.clone(),
            task: state.task.clone(),
            task_opt: state.task_opt.clone(),
            baseline: state.baseline,
            batches_run: state.batches_run,
            converged: state.converged,
            history: state.history.clone(),
            rng: state.rng.state(),
        }
    }

    /// Rebuilds the state; the encoder's cached representations are
    /// recomputed over `global`.
    pub fn into_state(self, global: &InteractionGraph) -> Result<GdveState> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "version {} is not supported (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        if self.encoder.num_users() != global.num_users() || self.encoder.num_items() != global.num_items() {
            return Err(Error::Checkpoint("encoder does not match the global graph".into()));
        }
        let encoder = Arc::new(Encoder::new(self.encoder, global)?);
        Ok(GdveState {
            encoder,
            valid: self.valid,
            prob: self.prob,
            prob_opt: self.prob_opt,
            task: self.task,
            task_opt: self.task_opt,
            baseline: self.baseline,
            batches_run: self.batches_run,
            converged: self.converged,
            history: self.history,
            rng: Rng::from_state(self.rng),
            cache: None,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let r = BufReader::new(File::open(path)?);
        serde_json::from_reader(r).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }
}
