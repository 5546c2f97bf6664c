use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{InteractionGraph, NormalizedAdjacency};
use crate::numerics::Rng;
use crate::optim::Optimizer;

use super::loss::{bpr_loss, check_even_layers, regularization, structure_loss, BprTriple};
use super::params::{GcfGrads, GcfParams};
use super::propagate::propagate;

#[derive(Clone, Debug, PartialEq)]
pub struct StructureConfig {
    pub tau: f64,
    pub even_layers: Vec<usize>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Positive edges per mini-batch.
    pub batch_size: usize,
    pub lambda: f64,
    /// `None` trains on BPR alone.
    pub structure: Option<StructureConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EpochStats {
    pub batches: usize,
    pub triples: usize,
    /// Positives dropped because their user has no unobserved item.
    pub skipped: usize,
    pub mean_bpr: f64,
    pub mean_structure: f64,
}

/// `params -= lr · grads`.
pub fn sgd_step(params: &mut GcfParams, grads: &GcfGrads, lr: f64) -> Result<()> {
    Optimizer::sgd(lr).step(params, grads)
}

/// Uniform draw from the items `user` has not interacted with.
pub fn sample_negative(graph: &InteractionGraph, user: usize, rng: &mut Rng) -> Option<usize> {
    let q = graph.num_items();
    let seen = graph.user_items(user);
    if seen.len() >= q {
        return None;
    }
    if seen.len() * 2 <= q {
        loop {
            let cand = rng.below(q);
            if seen.binary_search(&(cand as u32)).is_err() {
                return Some(cand);
            }
        }
    }
    // dense user: pick the k-th unobserved item directly
    let mut k = rng.below(q - seen.len());
    for &s in seen {
        if (s as usize) <= k {
            k += 1;
        } else {
            break;
        }
    }
    Some(k)
}

/// One pass over the observed edges in shuffled mini-batches with one fresh
/// uniform negative per positive; full propagation per batch.
pub fn train_epoch(
    params: &mut GcfParams,
    optimizer: &mut Optimizer,
    graph: &InteractionGraph,
    adj: &NormalizedAdjacency,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<EpochStats> {
    if graph.is_empty() {
        return Err(Error::Empty("training graph"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    if let Some(sc) = &cfg.structure {
        check_even_layers(&sc.even_layers, params.num_layers())?;
    }
    let mut order: Vec<u32> = (0..graph.num_edges() as u32).collect();
    rng.shuffle(&mut order);

    let mut stats = EpochStats::default();
    let mut bpr_sum = 0.0;
    let mut struc_sum = 0.0;
    let mut triples = Vec::with_capacity(cfg.batch_size);
    let mut users = Vec::new();
    for chunk in order.chunks(cfg.batch_size) {
        triples.clear();
        for &k in chunk {
            let e = graph.edges()[k as usize];
            match sample_negative(graph, e.user as usize, rng) {
                Some(n) => triples.push(BprTriple::new(e.user as usize, e.item as usize, n)),
                None => stats.skipped += 1,
            }
        }
        if triples.is_empty() {
            continue;
        }
        let fwd = propagate(params, adj)?;
        let mut up = fwd.zero_grads();
        let per_triple = 1.0 / triples.len() as f64;
        let bpr = bpr_loss(&fwd.embeddings, &triples, per_triple, &mut up)?;
        let mut struc = 0.0;
        if let Some(sc) = &cfg.structure {
            users.clear();
            users.extend(triples.iter().map(|t| t.user as usize));
            users.sort_unstable();
            users.dedup();
            struc = structure_loss(
                &fwd.embeddings,
                &users,
                sc.tau,
                &sc.even_layers,
                sc.weight / users.len() as f64,
                &mut up,
            )?;
        }
        let mut grads = fwd.backward(params, adj, up)?;
        regularization(params, &triples, cfg.lambda, per_triple, &mut grads);
        optimizer.step(params, &grads)?;

        stats.batches += 1;
        stats.triples += triples.len();
        bpr_sum += bpr * triples.len() as f64;
        struc_sum += struc;
    }
    if stats.triples > 0 {
        stats.mean_bpr = bpr_sum / stats.triples as f64;
    }
    if stats.batches > 0 {
        stats.mean_structure = struc_sum / stats.batches as f64;
    }
    Ok(stats)
}

/// Runs `epochs` epochs with a fresh optimizer; returns per-epoch stats.
pub fn train(
    params: &mut GcfParams,
    optimizer: &mut Optimizer,
    graph: &InteractionGraph,
    epochs: usize,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<Vec<EpochStats>> {
    let adj = crate::graph::normalize(graph);
    (0..epochs)
        .map(|_| train_epoch(params, optimizer, graph, &adj, cfg, rng))
        .collect()
}

