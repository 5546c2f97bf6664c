use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::numerics::{axpy, dot, gemm, log_sigmoid, sigmoid, DenseMatrix};

use super::params::{GcfGrads, GcfParams};
use super::propagate::{propagate, LayerEmbeddings, LayerGrads};

/// `(user, observed item, unobserved item)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BprTriple {
    pub user: u32,
    pub pos: u32,
    pub neg: u32,
}

impl BprTriple {
    pub fn new(user: usize, pos: usize, neg: usize) -> Self {
        BprTriple {
            user: user as u32,
            pos: pos as u32,
            neg: neg as u32,
        }
    }
}

/// `scale · Σ -ln σ(ŷ_um - ŷ_un)` over the triples, scores taken on the
/// concatenated representation. Accumulates into `upstream`.
pub fn bpr_loss(emb: &LayerEmbeddings, triples: &[BprTriple], scale: f64, upstream: &mut LayerGrads) -> Result<f64> {
    if triples.is_empty() {
        return Err(Error::Empty("BPR batch"));
    }
    let mut total = 0.0;
    let d = emb.dim();
    let mut diff = vec![0.0; d];
    for t in triples {
        let (u, m, n) = (t.user as usize, t.pos as usize, t.neg as usize);
        let x = emb.score(u, m) - emb.score(u, n);
        total -= log_sigmoid(x);
        // d(-ln σ(x))/dx = -σ(-x)
        let g = -sigmoid(-x) * scale;
        for l in 0..=emb.depth() {
            let eu = emb.user(l, u);
            let (em, en) = (emb.item(l, m), emb.item(l, n));
            for k in 0..d {
                diff[k] = em[k] - en[k];
            }
            axpy(g, &diff, upstream.user_mut(l, u));
            axpy(g, eu, upstream.item_mut(l, m));
            axpy(-g, eu, upstream.item_mut(l, n));
        }
    }
    Ok(total * scale)
}

/// `λ·[scale · Σ_triples (‖e⁰_u‖² + ‖e⁰_m‖² + ‖e⁰_n‖²) + Σ_ℓ (‖W1_ℓ‖² + ‖W2_ℓ‖²)]`.
/// Only embedding rows touched by the batch are penalised; biases are not.
pub fn regularization(params: &GcfParams, triples: &[BprTriple], lambda: f64, scale: f64, grads: &mut GcfGrads) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let scale = lambda * scale;
    let mut value = 0.0;
    for t in triples {
        let (u, m, n) = (t.user as usize, t.pos as usize, t.neg as usize);
        let eu = params.user_emb.row(u);
        value += scale * dot(eu, eu);
        axpy(2.0 * scale, eu, grads.user_emb.row_mut(u));
        for i in [m, n] {
            let ei = params.item_emb.row(i);
            value += scale * dot(ei, ei);
            axpy(2.0 * scale, ei, grads.item_emb.row_mut(i));
        }
    }
    for (lw, lg) in params.layers.iter().zip(&mut grads.layers) {
        value += lambda * (lw.w1.frobenius_sq() + lw.w2.frobenius_sq());
        lg.w1.add_scaled(&lw.w1, 2.0 * lambda).expect("same shape");
        lg.w2.add_scaled(&lw.w2, 2.0 * lambda).expect("same shape");
    }
    value
}

/// Validates a set of contrastive layers against the model depth.
pub fn check_even_layers(even_layers: &[usize], depth: usize) -> Result<()> {
    if even_layers.is_empty() {
        return Err(Error::invalid("structure loss needs at least one even layer"));
    }
    for &l in even_layers {
        if l == 0 || l > depth || l % 2 != 0 {
            return Err(Error::invalid(format!(
                "structure-loss layer {l} is not an even layer in 1..={depth}"
            )));
        }
    }
    Ok(())
}

/// InfoNCE alignment of each batch user's layer-0 embedding with its
/// even-layer embeddings, other batch users as negatives:
///
/// `-Σ_i log[ Σ_ℓ exp(⟨e⁰_i, eˡ_i⟩/τ) / Σ_ℓ Σ_j exp(⟨e⁰_i, eˡ_j⟩/τ) ]`
///
/// Returned and backpropagated multiplied by `scale`.
pub fn structure_loss(
    emb: &LayerEmbeddings,
    batch_users: &[usize],
    tau: f64,
    even_layers: &[usize],
    scale: f64,
    upstream: &mut LayerGrads,
) -> Result<f64> {
    if batch_users.is_empty() {
        return Err(Error::Empty("structure-loss batch"));
    }
    if !(tau > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    check_even_layers(even_layers, emb.depth())?;
    let b = batch_users.len();
    let d = emb.dim();
    let anchors = emb.layer(0).gather_rows(batch_users);
    let views: Vec<DenseMatrix> = even_layers
        .iter()
        .map(|&l| emb.layer(l).gather_rows(batch_users))
        .collect();
    // logits[ℓ][i][j] = ⟨e⁰_i, eˡ_j⟩ / τ
    let mut logits = Vec::with_capacity(views.len());
    for v in &views {
        let mut s = DenseMatrix::zeros(b, b);
        gemm(1.0 / tau, &anchors, false, v, true, 0.0, &mut s)?;
        logits.push(s);
    }
    let coef = scale;
    let mut total = 0.0;
    // dloss/dlogits
    let mut dlogits: Vec<DenseMatrix> = logits.iter().map(|s| DenseMatrix::zeros(s.rows(), s.cols())).collect();
    for i in 0..b {
        let max_all = logits
            .iter()
            .flat_map(|s| s.row(i).iter().copied())
            .fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = logits
            .iter()
            .flat_map(|s| s.row(i).iter())
            .map(|&x| (x - max_all).exp())
            .sum();
        let lse_all = max_all + denom.ln();
        let max_pos = logits.iter().map(|s| s.get(i, i)).fold(f64::NEG_INFINITY, f64::max);
        let num: f64 = logits.iter().map(|s| (s.get(i, i) - max_pos).exp()).sum();
        let lse_pos = max_pos + num.ln();
        total += lse_all - lse_pos;
        for (s, ds) in logits.iter().zip(dlogits.iter_mut()) {
            let row = ds.row_mut(i);
            for (j, g) in row.iter_mut().enumerate() {
                *g = coef * (s.get(i, j) - lse_all).exp();
            }
            row[i] -= coef * (s.get(i, i) - lse_pos).exp();
        }
    }
    let mut d_anchor = DenseMatrix::zeros(b, d);
    for ((v, ds), &l) in views.iter().zip(&dlogits).zip(even_layers) {
        gemm(1.0 / tau, ds, false, v, false, 1.0, &mut d_anchor)?;
        let mut d_view = DenseMatrix::zeros(b, d);
        gemm(1.0 / tau, ds, true, &anchors, false, 0.0, &mut d_view)?;
        for (k, &u) in batch_users.iter().enumerate() {
            axpy(1.0, d_view.row(k), upstream.user_mut(l, u));
        }
    }
    for (k, &u) in batch_users.iter().enumerate() {
        axpy(1.0, d_anchor.row(k), upstream.user_mut(0, u));
    }
    Ok(coef * total)
}

/// BPR objective summed over the triples, plus regularisation, and its gradient.
pub fn bpr_loss_and_grad(
    params: &GcfParams,
    adj: &NormalizedAdjacency,
    triples: &[BprTriple],
    lambda: f64,
) -> Result<(f64, GcfGrads)> {
    let fwd = propagate(params, adj)?;
    let mut up = fwd.zero_grads();
    let loss = bpr_loss(&fwd.embeddings, triples, 1.0, &mut up)?;
    let mut grads = fwd.backward(params, adj, up)?;
    let reg = regularization(params, triples, lambda, 1.0, &mut grads);
    Ok((loss + reg, grads))
}

/// Structure loss (summed over the batch) and its gradient with respect to all parameters.
pub fn structure_loss_and_grad(
    params: &GcfParams,
    adj: &NormalizedAdjacency,
    batch_users: &[usize],
    tau: f64,
    even_layers: &[usize],
) -> Result<(f64, GcfGrads)> {
    let fwd = propagate(params, adj)?;
    let mut up = fwd.zero_grads();
    let loss = structure_loss(&fwd.embeddings, batch_users, tau, even_layers, 1.0, &mut up)?;
    let grads = fwd.backward(params, adj, up)?;
    Ok((loss, grads))
}

/// Batch-averaged task-predictor objective:
/// `mean BPR + regularisation + structure_weight · mean structure loss`.
#[allow(clippy::too_many_arguments)]
pub fn composite_loss_and_grad(
    params: &GcfParams,
    adj: &NormalizedAdjacency,
    triples: &[BprTriple],
    batch_users: &[usize],
    lambda: f64,
    tau: f64,
    even_layers: &[usize],
    structure_weight: f64,
) -> Result<(f64, GcfGrads)> {
    let fwd = propagate(params, adj)?;
    let mut up = fwd.zero_grads();
    if batch_users.is_empty() {
        return Err(Error::Empty("structure-loss batch"));
    }
    let per_triple = 1.0 / triples.len().max(1) as f64;
    let bpr = bpr_loss(&fwd.embeddings, triples, per_triple, &mut up)?;
    let sl = structure_loss(
        &fwd.embeddings,
        batch_users,
        tau,
        even_layers,
        structure_weight / batch_users.len() as f64,
        &mut up,
    )?;
    let mut grads = fwd.backward(params, adj, up)?;
    let reg = regularization(params, triples, lambda, per_triple, &mut grads);
    Ok((bpr + sl + reg, grads))
}
