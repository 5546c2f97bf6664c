//! Per-client graph data value estimation: a frozen encoder and valid
//! predictor, a probability estimator over global interactions trained by
//! REINFORCE, and a task predictor whose validation recall is the reward.

mod checkpoint;
mod estimator;

use std::sync::Arc;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::gcf::{
    bpr_loss, propagate, regularization, sample_negative, structure_loss, train, BprTriple, GcfParams, TrainConfig,
};
use crate::graph::{merge_padded, normalize, Edge, InteractionGraph};
use crate::numerics::{gemm, DenseMatrix, Rng};
use crate::optim::{Optimizer, OptimizerKind};

pub use checkpoint::{GdveCheckpoint, CHECKPOINT_VERSION};
pub use estimator::{
    estimator_forward, mask_log_likelihood, reinforce_gradient, sample_mask, selection_probabilities, EstimatorForward,
    EstimatorInputs, ProbEstimatorParams, PAIR_HIDDEN, PROB_EPS, SCORE_HIDDEN,
};

#[derive(Clone, Debug, PartialEq)]
pub struct GdveConfig {
    pub dim: usize,
    pub num_layers: usize,
    pub pretrain_epochs: usize,
    /// Mini-batching, regularisation and structure loss of every GCF model here.
    pub train: TrainConfig,
    pub optimizer: OptimizerKind,
    /// Optimizer of the probability estimator.
    pub policy_optimizer: OptimizerKind,
    /// Rate of the GCF models (pretraining and task predictor).
    pub lr: f64,
    /// Rate of the probability estimator.
    pub policy_lr: f64,
    /// Global users per selection batch.
    pub batch_users: usize,
    pub max_batches: usize,
    pub plateau_window: usize,
    pub plateau_tol: f64,
    pub ema_decay: f64,
    /// Cut-off of the recall reward.
    pub reward_k: usize,
}

impl GdveConfig {
    fn pretrain_cfg(&self) -> TrainConfig {
        TrainConfig {
            structure: None,
            ..self.train.clone()
        }
    }
}

/// The data a client's estimator sees: its own training edges and
/// validation edges (local user indices) and the shared global graph.
#[derive(Clone, Copy, Debug)]
pub struct ClientView<'a> {
    pub local_train: &'a InteractionGraph,
    pub local_valid: &'a [Edge],
    pub global: &'a InteractionGraph,
}

/// A frozen graph encoder and its cached concatenated representations.
#[derive(Clone, Debug)]
pub struct Encoder {
    params: GcfParams,
    user_repr: DenseMatrix,
    item_repr: DenseMatrix,
}

impl Encoder {
    pub fn new(params: GcfParams, graph: &InteractionGraph) -> Result<Self> {
        let fwd = propagate(&params, &normalize(graph))?;
        let (user_repr, item_repr) = fwd.embeddings.final_representation();
        Ok(Encoder {
            params,
            user_repr,
            item_repr,
        })
    }

    pub fn params(&self) -> &GcfParams {
        &self.params
    }

    pub fn user_repr(&self) -> &DenseMatrix {
        &self.user_repr
    }

    pub fn item_repr(&self) -> &DenseMatrix {
        &self.item_repr
    }
}

fn pretrain(graph: &InteractionGraph, cfg: &GdveConfig, rng: &mut Rng) -> Result<GcfParams> {
    if graph.is_empty() {
        return Err(Error::Empty("pretraining graph"));
    }
    let mut params = GcfParams::init(graph.num_users(), graph.num_items(), cfg.dim, cfg.num_layers, rng);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr);
    train(&mut params, &mut opt, graph, cfg.pretrain_epochs, &cfg.pretrain_cfg(), rng)?;
    Ok(params)
}

/// BPR-only pretraining on the global graph.
pub fn pretrain_encoder(global: &InteractionGraph, cfg: &GdveConfig, rng: &mut Rng) -> Result<GcfParams> {
    pretrain(global, cfg, rng)
}

/// BPR-only pretraining on a client's training graph.
pub fn pretrain_valid_predictor(local: &InteractionGraph, cfg: &GdveConfig, rng: &mut Rng) -> Result<GcfParams> {
    pretrain(local, cfg, rng)
}

/// Observed global edges of `batch_users`, in batch order.
pub fn candidate_edges(global: &InteractionGraph, batch_users: &[usize]) -> Vec<Edge> {
    batch_users
        .iter()
        .flat_map(|&u| global.user_edges(u).iter().copied())
        .collect()
}

/// Scores of the valid predictor for every (batch user, catalog item).
///
/// The batch users are appended to the client's training graph with their
/// global edges and a zero layer-0 row, and the valid predictor propagates
/// over that graph; row `b` of the result belongs to `batch_users[b]`.
pub fn validity_scores(
    valid: &GcfParams,
    local: &InteractionGraph,
    global: &InteractionGraph,
    batch_users: &[usize],
) -> Result<DenseMatrix> {
    if valid.num_users() != local.num_users() || valid.num_items() != local.num_items() {
        return Err(Error::shape("validity_scores", "valid predictor does not match the local graph"));
    }
    if global.num_items() != local.num_items() {
        return Err(Error::shape("validity_scores", "global and local catalogs differ"));
    }
    let offset = local.num_users();
    let mut edges = local.edges().to_vec();
    for (b, &u) in batch_users.iter().enumerate() {
        if u >= global.num_users() {
            return Err(Error::IndexOutOfRange {
                side: "user",
                index: u,
                size: global.num_users(),
            });
        }
        edges.extend(global.user_items(u).iter().map(|&i| Edge::new(offset + b, i as usize)));
    }
    let graph = InteractionGraph::new(offset + batch_users.len(), local.num_items(), edges)?;
    let users = valid
        .user_emb
        .vstack(&DenseMatrix::zeros(batch_users.len(), valid.dim()))?;
    let params = valid.with_user_table(users)?;
    let fwd = propagate(&params, &normalize(&graph))?;
    let (user_repr, item_repr) = fwd.embeddings.final_representation();
    let batch = user_repr.slice_rows(offset, batch_users.len());
    let mut scores = DenseMatrix::zeros(batch_users.len(), item_repr.rows());
    gemm(1.0, &batch, false, &item_repr, true, 0.0, &mut scores)?;
    Ok(scores)
}

/// `(raw − baseline, decay·baseline + (1 − decay)·raw)`.
pub fn reward(raw: f64, baseline: f64, decay: f64) -> (f64, f64) {
    (raw - baseline, decay * baseline + (1.0 - decay) * raw)
}

/// Recall@k of a model over `graph` (whose first users are the client's) on
/// the client's validation edges, excluding its training items.
pub fn validation_recall(
    params: &GcfParams,
    graph: &InteractionGraph,
    local_train: &InteractionGraph,
    local_valid: &[Edge],
    k: usize,
) -> Result<f64> {
    let fwd = propagate(params, &normalize(graph))?;
    let (users, items) = fwd.embeddings.final_representation();
    Ok(evaluate(&users, &items, local_train, local_valid, k)?.recall)
}

/// Task-predictor start: the valid predictor, with the encoder's layer-0
/// rows for the global users appended after the local ones.
pub fn init_task_params(valid: &GcfParams, encoder: &GcfParams) -> Result<GcfParams> {
    if valid.dim() != encoder.dim() {
        return Err(Error::shape("init_task_params", "encoder and valid predictor widths differ"));
    }
    valid.with_user_table(valid.user_emb.vstack(&encoder.user_emb)?)
}

/// One task-predictor update for a selection batch: the graph is the
/// client's training graph plus the `selected` global edges (global user `g`
/// at row `P_local + g`); the loss is BPR over the selected edges (one
/// uniform negative each) plus the structure loss over the batch users,
/// both divided by the batch size, plus regularisation. Returns the graph.
pub fn train_task_predictor(
    task: &mut GcfParams,
    opt: &mut Optimizer,
    view: &ClientView,
    batch_users: &[usize],
    selected: &[Edge],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<InteractionGraph> {
    if batch_users.is_empty() {
        return Err(Error::Empty("selection batch"));
    }
    let graph = merge_padded(view.local_train, selected, view.global.num_users())?;
    let offset = view.local_train.num_users();
    let triples: Vec<BprTriple> = selected
        .iter()
        .filter_map(|e| {
            let row = offset + e.user as usize;
            sample_negative(&graph, row, rng).map(|n| BprTriple::new(row, e.item as usize, n))
        })
        .collect();
    if triples.is_empty() && cfg.structure.is_none() {
        debug!("empty selection and no structure loss; task predictor unchanged");
        return Ok(graph);
    }
    let adj = normalize(&graph);
    let fwd = propagate(task, &adj)?;
    let mut up = fwd.zero_grads();
    let scale = 1.0 / batch_users.len() as f64;
    if !triples.is_empty() {
        bpr_loss(&fwd.embeddings, &triples, scale, &mut up)?;
    }
    if let Some(sc) = &cfg.structure {
        let rows: Vec<usize> = batch_users.iter().map(|&g| offset + g).collect();
        structure_loss(&fwd.embeddings, &rows, sc.tau, &sc.even_layers, sc.weight * scale, &mut up)?;
    }
    let mut grads = fwd.backward(task, &adj, up)?;
    regularization(task, &triples, cfg.lambda, scale, &mut grads);
    opt.step(task, &grads)?;
    Ok(graph)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchLog {
    pub batch: usize,
    pub raw_reward: f64,
    pub reward: f64,
    pub baseline: f64,
    pub selected_ratio: f64,
    pub mean_prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Selected global edges (global user indices).
    pub edges: Vec<Edge>,
    /// `|selected| / |global edges|`.
    pub ratio: f64,
    pub mean_prob: f64,
}

#[derive(Clone, Debug)]
struct ValidityCache {
    users: Vec<usize>,
    scores: DenseMatrix,
}

/// Everything one client's estimator owns.
#[derive(Clone, Debug)]
pub struct GdveState {
    pub encoder: Arc<Encoder>,
    pub valid: GcfParams,
    pub prob: ProbEstimatorParams,
    pub prob_opt: Optimizer,
    pub task: GcfParams,
    pub task_opt: Optimizer,
    pub baseline: f64,
    pub batches_run: usize,
    pub converged: bool,
    pub history: Vec<BatchLog>,
    pub rng: Rng,
    cache: Option<ValidityCache>,
}

impl GdveState {
    /// Pretrains the valid predictor and initialises the trainable parts.
    pub fn new(encoder: Arc<Encoder>, view: &ClientView, cfg: &GdveConfig, mut rng: Rng) -> Result<Self> {
        if view.local_valid.is_empty() {
            return Err(Error::Empty("client validation edges"));
        }
        if encoder.params().num_users() != view.global.num_users() {
            return Err(Error::shape("GdveState::new", "encoder was not trained on this global graph"));
        }
        let valid = pretrain_valid_predictor(view.local_train, cfg, &mut rng)?;
        let prob = ProbEstimatorParams::init(encoder.user_repr().cols(), &mut rng);
        let task = init_task_params(&valid, encoder.params())?;
        Ok(GdveState {
            encoder,
            valid,
            prob,
            prob_opt: Optimizer::new(cfg.policy_optimizer, cfg.policy_lr),
            task,
            task_opt: Optimizer::new(cfg.optimizer, cfg.lr),
            baseline: 0.0,
            batches_run: 0,
            converged: false,
            history: Vec::new(),
            rng,
            cache: None,
        })
    }

    /// Validity score of each candidate edge of `batch_users`.
    fn batch_validity(&mut self, view: &ClientView, batch_users: &[usize], edges: &[Edge]) -> Result<Vec<f64>> {
        let hit = self.cache.as_ref().is_some_and(|c| c.users == batch_users);
        if !hit {
            let scores = validity_scores(&self.valid, view.local_train, view.global, batch_users)?;
            self.cache = Some(ValidityCache {
                users: batch_users.to_vec(),
                scores,
            });
        }
        let cache = self.cache.as_ref().expect("filled above");
        let mut row_of = vec![usize::MAX; view.global.num_users()];
        for (b, &u) in batch_users.iter().enumerate() {
            row_of[u] = b;
        }
        Ok(edges
            .iter()
            .map(|e| cache.scores.get(row_of[e.user as usize], e.item as usize))
            .collect())
    }

    fn sample_batch_users(&mut self, global: &InteractionGraph, size: usize) -> Vec<usize> {
        let active: Vec<usize> = (0..global.num_users()).filter(|&u| global.user_degree(u) > 0).collect();
        let mut picked: Vec<usize> = self
            .rng
            .sample_indices(active.len(), size)
            .into_iter()
            .map(|k| active[k])
            .collect();
        picked.sort_unstable();
        picked
    }

    /// One iteration: sample users and a mask, train the task predictor on
    /// the selection, score it on validation, take a policy-gradient step.
    pub fn train_batch(&mut self, view: &ClientView, cfg: &GdveConfig) -> Result<BatchLog> {
        let batch_users = self.sample_batch_users(view.global, cfg.batch_users);
        if batch_users.is_empty() {
            return Err(Error::Empty("global users with interactions"));
        }
        let edges = candidate_edges(view.global, &batch_users);
        let validity = self.batch_validity(view, &batch_users, &edges)?;
        let encoder = Arc::clone(&self.encoder);
        let inputs = EstimatorInputs {
            user_repr: encoder.user_repr(),
            item_repr: encoder.item_repr(),
            edges: &edges,
            validity: &validity,
        };
        let probs = selection_probabilities(&self.prob, &inputs)?;
        let mask = sample_mask(&probs, &mut self.rng);
        let selected: Vec<Edge> = edges.iter().zip(&mask).filter(|(_, &s)| s).map(|(e, _)| *e).collect();

        let train_cfg = cfg.train.clone();
        let graph = train_task_predictor(
            &mut self.task,
            &mut self.task_opt,
            view,
            &batch_users,
            &selected,
            &train_cfg,
            &mut self.rng,
        )?;
        let raw = validation_recall(&self.task, &graph, view.local_train, view.local_valid, cfg.reward_k)?;
        let (r, baseline) = reward(raw, self.baseline, cfg.ema_decay);
        if r != 0.0 {
            let grads = reinforce_gradient(&self.prob, &inputs, &mask, batch_users.len(), r)?;
            self.prob_opt.step(&mut self.prob, &grads)?;
        }
        self.baseline = baseline;
        self.batches_run += 1;
        let log = BatchLog {
            batch: self.batches_run,
            raw_reward: raw,
            reward: r,
            baseline,
            selected_ratio: selected.len() as f64 / edges.len().max(1) as f64,
            mean_prob: probs.iter().sum::<f64>() / probs.len().max(1) as f64,
        };
        debug!("gdve batch {}: recall {raw:.4}, reward {r:+.4}, kept {:.3}", log.batch, log.selected_ratio);
        self.history.push(log.clone());
        Ok(log)
    }

    /// Trains until the reward baseline has not improved by `plateau_tol`
    /// for `plateau_window` batches, or `max_batches` batches have run.
    pub fn run_training(&mut self, view: &ClientView, cfg: &GdveConfig) -> Result<usize> {
        let mut best = f64::NEG_INFINITY;
        let mut stale = 0;
        let start = self.batches_run;
        while self.batches_run - start < cfg.max_batches {
            let log = self.train_batch(view, cfg)?;
            if log.baseline > best + cfg.plateau_tol {
                best = log.baseline;
                stale = 0;
            } else {
                stale += 1;
            }
            if cfg.plateau_window > 0 && stale >= cfg.plateau_window {
                self.converged = true;
                break;
            }
        }
        Ok(self.batches_run - start)
    }

    /// Walks all global users in batches and draws one mask per batch.
    pub fn select_augmentation(&mut self, view: &ClientView, cfg: &GdveConfig, rng: &mut Rng) -> Result<Selection> {
        let users: Vec<usize> = (0..view.global.num_users()).filter(|&u| view.global.user_degree(u) > 0).collect();
        let mut selected = Vec::new();
        let mut prob_sum = 0.0;
        let mut count = 0usize;
        let encoder = Arc::clone(&self.encoder);
        for batch in users.chunks(cfg.batch_users.max(1)) {
            let edges = candidate_edges(view.global, batch);
            let validity = self.batch_validity(view, batch, &edges)?;
            let probs = selection_probabilities(
                &self.prob,
                &EstimatorInputs {
                    user_repr: encoder.user_repr(),
                    item_repr: encoder.item_repr(),
                    edges: &edges,
                    validity: &validity,
                },
            )?;
            let mask = sample_mask(&probs, rng);
            prob_sum += probs.iter().sum::<f64>();
            count += probs.len();
            selected.extend(edges.iter().zip(&mask).filter(|(_, &s)| s).map(|(e, _)| *e));
        }
        selected.sort_unstable();
        let total = view.global.num_edges();
        Ok(Selection {
            ratio: if total == 0 { 0.0 } else { selected.len() as f64 / total as f64 },
            mean_prob: if count == 0 { 0.0 } else { prob_sum / count as f64 },
            edges: selected,
        })
    }

    /// Selection probability of each observed global edge, in edge order.
    pub fn edge_probabilities(&mut self, view: &ClientView, cfg: &GdveConfig) -> Result<Vec<(Edge, f64)>> {
        let users: Vec<usize> = (0..view.global.num_users()).filter(|&u| view.global.user_degree(u) > 0).collect();
        let encoder = Arc::clone(&self.encoder);
        let mut out = Vec::with_capacity(view.global.num_edges());
        for batch in users.chunks(cfg.batch_users.max(1)) {
            let edges = candidate_edges(view.global, batch);
            let validity = self.batch_validity(view, batch, &edges)?;
            let probs = selection_probabilities(
                &self.prob,
                &EstimatorInputs {
                    user_repr: encoder.user_repr(),
                    item_repr: encoder.item_repr(),
                    edges: &edges,
                    validity: &validity,
                },
            )?;
            out.extend(edges.into_iter().zip(probs));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests;
