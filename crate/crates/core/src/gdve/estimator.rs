//! The selection-probability network and its log-likelihood gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::numerics::{gemm, sigmoid, DenseMatrix, Rng};
use crate::optim::ParamSet;

/// Width of the three pair-embedding layers.
pub const PAIR_HIDDEN: usize = 50;
/// Width of the hidden layer after the validity score is appended.
pub const SCORE_HIDDEN: usize = 30;
/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub const PROB_EPS: f64 = 1e-6;

/// Two-stage MLP: `(e_u ‖ e_i) → 50 → 50 → 50`, then `(· ‖ ỹ) → 30 → 1`,
/// rectifier activations and a logistic output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbEstimatorParams {
    /// `2r × 50`; rows `0..r` act on the user half, `r..2r` on the item half.
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
    pub w3: DenseMatrix,
    pub b3: Vec<f64>,
    /// `51 × 30`; the last row weights the validity score.
    pub w4: DenseMatrix,
    pub b4: Vec<f64>,
    pub w5: DenseMatrix,
    pub b5: Vec<f64>,
}

fn xavier(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| bound * (2.0 * rng.uniform() - 1.0))
}

impl ProbEstimatorParams {
    /// Xavier-uniform weights, zero biases, for representations of width `repr`.
    pub fn init(repr: usize, rng: &mut Rng) -> Self {
        ProbEstimatorParams {
            w1: xavier(2 * repr, PAIR_HIDDEN, rng),
            b1: vec![0.0; PAIR_HIDDEN],
            w2: xavier(PAIR_HIDDEN, PAIR_HIDDEN, rng),
            b2: vec![0.0; PAIR_HIDDEN],
            w3: xavier(PAIR_HIDDEN, PAIR_HIDDEN, rng),
            b3: vec![0.0; PAIR_HIDDEN],
            w4: xavier(PAIR_HIDDEN + 1, SCORE_HIDDEN, rng),
            b4: vec![0.0; SCORE_HIDDEN],
            w5: xavier(SCORE_HIDDEN, 1, rng),
            b5: vec![0.0],
        }
    }

    pub fn zeros(repr: usize) -> Self {
        ProbEstimatorParams {
            w1: DenseMatrix::zeros(2 * repr, PAIR_HIDDEN),
            b1: vec![0.0; PAIR_HIDDEN],
            w2: DenseMatrix::zeros(PAIR_HIDDEN, PAIR_HIDDEN),
            b2: vec![0.0; PAIR_HIDDEN],
            w3: DenseMatrix::zeros(PAIR_HIDDEN, PAIR_HIDDEN),
            b3: vec![0.0; PAIR_HIDDEN],
            w4: DenseMatrix::zeros(PAIR_HIDDEN + 1, SCORE_HIDDEN),
            b4: vec![0.0; SCORE_HIDDEN],
            w5: DenseMatrix::zeros(SCORE_HIDDEN, 1),
            b5: vec![0.0],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.repr_width())
    }

    pub fn repr_width(&self) -> usize {
        self.w1.rows() / 2
    }
}

impl ParamSet for ProbEstimatorParams {
    fn blocks(&self) -> Vec<&[f64]> {
        vec![
            self.w1.as_slice(),
            &self.b1,
            self.w2.as_slice(),
            &self.b2,
            self.w3.as_slice(),
            &self.b3,
            self.w4.as_slice(),
            &self.b4,
            self.w5.as_slice(),
            &self.b5,
        ]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
            self.w3.as_mut_slice(),
            &mut self.b3,
            self.w4.as_mut_slice(),
            &mut self.b4,
            self.w5.as_mut_slice(),
            &mut self.b5,
        ]
    }
}

/// What the estimator scores: candidate `edges` (user indices into
/// `user_repr`, item indices into `item_repr`) and one validity score each.
#[derive(Clone, Copy, Debug)]
pub struct EstimatorInputs<'a> {
    pub user_repr: &'a DenseMatrix,
    pub item_repr: &'a DenseMatrix,
    pub edges: &'a [Edge],
    pub validity: &'a [f64],
}

impl EstimatorInputs<'_> {
    fn check(&self, params: &ProbEstimatorParams) -> Result<()> {
        let r = params.repr_width();
        if self.user_repr.cols() != r || self.item_repr.cols() != r {
            return Err(Error::shape(
                "selection_probabilities",
                format!("estimator expects width {r}, got {} / {}", self.user_repr.cols(), self.item_repr.cols()),
            ));
        }
        if self.validity.len() != self.edges.len() {
            return Err(Error::shape("selection_probabilities", "one validity score per edge"));
        }
        for e in self.edges {
            if e.user as usize >= self.user_repr.rows() || e.item as usize >= self.item_repr.rows() {
                return Err(Error::IndexOutOfRange {
                    side: "edge",
                    index: e.user as usize,
                    size: self.user_repr.rows(),
                });
            }
        }
        Ok(())
    }
}

/// Activations kept for backpropagation.
#[derive(Clone, Debug)]
pub struct EstimatorForward {
    z1: DenseMatrix,
    h1: DenseMatrix,
    z2: DenseMatrix,
    h2: DenseMatrix,
    z3: DenseMatrix,
    /// `[relu(z3) | ỹ]`
    x4: DenseMatrix,
    z4: DenseMatrix,
    h4: DenseMatrix,
    pub logits: Vec<f64>,
    /// Clamped probabilities.
    pub probs: Vec<f64>,
}

fn add_bias(m: &mut DenseMatrix, b: &[f64]) {
    for r in 0..m.rows() {
        for (v, bb) in m.row_mut(r).iter_mut().zip(b) {
            *v += bb;
        }
    }
}

fn relu(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    out.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

fn relu_backward(grad: &mut DenseMatrix, pre: &DenseMatrix) {
    for (g, z) in grad.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if *z <= 0.0 {
            *g = 0.0;
        }
    }
}

fn column_sums(m: &DenseMatrix, out: &mut [f64]) {
    for r in 0..m.rows() {
        for (o, v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
}

/// `clamp(σ(logit))`, and whether the clamp was inactive.
fn squash(logit: f64) -> (f64, bool) {
    let p = sigmoid(logit);
    if p < PROB_EPS {
        (PROB_EPS, false)
    } else if p > 1.0 - PROB_EPS {
        (1.0 - PROB_EPS, false)
    } else {
        (p, true)
    }
}

/// Forward pass over all candidate edges.
pub fn estimator_forward(params: &ProbEstimatorParams, inputs: &EstimatorInputs) -> Result<EstimatorForward> {
    inputs.check(params)?;
    let r = params.repr_width();
    let n = inputs.edges.len();
    // first layer factorises over the two halves of the input
    let mut pu = DenseMatrix::zeros(inputs.user_repr.rows(), PAIR_HIDDEN);
    gemm(1.0, inputs.user_repr, false, &params.w1.slice_rows(0, r), false, 0.0, &mut pu)?;
    let mut pi = DenseMatrix::zeros(inputs.item_repr.rows(), PAIR_HIDDEN);
    gemm(1.0, inputs.item_repr, false, &params.w1.slice_rows(r, r), false, 0.0, &mut pi)?;
    let mut z1 = DenseMatrix::zeros(n, PAIR_HIDDEN);
    for (k, e) in inputs.edges.iter().enumerate() {
        let (a, b) = (pu.row(e.user as usize), pi.row(e.item as usize));
        for (j, v) in z1.row_mut(k).iter_mut().enumerate() {
            *v = a[j] + b[j] + params.b1[j];
        }
    }
    let h1 = relu(&z1);
    let mut z2 = DenseMatrix::zeros(n, PAIR_HIDDEN);
    gemm(1.0, &h1, false, &params.w2, false, 0.0, &mut z2)?;
    add_bias(&mut z2, &params.b2);
    let h2 = relu(&z2);
    let mut z3 = DenseMatrix::zeros(n, PAIR_HIDDEN);
    gemm(1.0, &h2, false, &params.w3, false, 0.0, &mut z3)?;
    add_bias(&mut z3, &params.b3);
    let mut x4 = DenseMatrix::zeros(n, PAIR_HIDDEN + 1);
    for k in 0..n {
        let row = x4.row_mut(k);
        for (o, z) in row[..PAIR_HIDDEN].iter_mut().zip(z3.row(k)) {
            *o = z.max(0.0);
        }
        row[PAIR_HIDDEN] = inputs.validity[k];
    }
    let mut z4 = DenseMatrix::zeros(n, SCORE_HIDDEN);
    gemm(1.0, &x4, false, &params.w4, false, 0.0, &mut z4)?;
    add_bias(&mut z4, &params.b4);
    let h4 = relu(&z4);
    let mut z5 = DenseMatrix::zeros(n, 1);
    gemm(1.0, &h4, false, &params.w5, false, 0.0, &mut z5)?;
    let logits: Vec<f64> = z5.as_slice().iter().map(|v| v + params.b5[0]).collect();
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "selection logits".into(),
        });
    }
    let probs = logits.iter().map(|&z| squash(z).0).collect();
    Ok(EstimatorForward {
        z1,
        h1,
        z2,
        h2,
        z3,
        x4,
        z4,
        h4,
        logits,
        probs,
    })
}

/// Clamped selection probability of every candidate edge.
pub fn selection_probabilities(params: &ProbEstimatorParams, inputs: &EstimatorInputs) -> Result<Vec<f64>> {
    Ok(estimator_forward(params, inputs)?.probs)
}

/// Independent Bernoulli draws.
pub fn sample_mask(probs: &[f64], rng: &mut Rng) -> Vec<bool> {
    probs.iter().map(|&p| rng.bernoulli(p)).collect()
}

impl EstimatorForward {
    /// Backpropagates `d_logits` (one entry per edge) to the parameters.
    pub fn backward(
        &self,
        params: &ProbEstimatorParams,
        inputs: &EstimatorInputs,
        d_logits: &[f64],
    ) -> Result<ProbEstimatorParams> {
        let n = inputs.edges.len();
        let r = params.repr_width();
        let mut g = params.zeros_like();
        g.b5[0] = d_logits.iter().sum();
        let dz5 = DenseMatrix::from_vec(n, 1, d_logits.to_vec())?;
        gemm(1.0, &self.h4, true, &dz5, false, 0.0, &mut g.w5)?;
        let mut dz4 = DenseMatrix::zeros(n, SCORE_HIDDEN);
        gemm(1.0, &dz5, false, &params.w5, true, 0.0, &mut dz4)?;
        relu_backward(&mut dz4, &self.z4);
        gemm(1.0, &self.x4, true, &dz4, false, 0.0, &mut g.w4)?;
        column_sums(&dz4, &mut g.b4);
        let mut dx4 = DenseMatrix::zeros(n, PAIR_HIDDEN + 1);
        gemm(1.0, &dz4, false, &params.w4, true, 0.0, &mut dx4)?;
        let mut dz3 = DenseMatrix::zeros(n, PAIR_HIDDEN);
        for k in 0..n {
            dz3.row_mut(k).copy_from_slice(&dx4.row(k)[..PAIR_HIDDEN]);
        }
        relu_backward(&mut dz3, &self.z3);
        gemm(1.0, &self.h2, true, &dz3, false, 0.0, &mut g.w3)?;
        column_sums(&dz3, &mut g.b3);
        let mut dz2 = DenseMatrix::zeros(n, PAIR_HIDDEN);
        gemm(1.0, &dz3, false, &params.w3, true, 0.0, &mut dz2)?;
        relu_backward(&mut dz2, &self.z2);
        gemm(1.0, &self.h1, true, &dz2, false, 0.0, &mut g.w2)?;
        column_sums(&dz2, &mut g.b2);
        let mut dz1 = DenseMatrix::zeros(n, PAIR_HIDDEN);
        gemm(1.0, &dz2, false, &params.w2, true, 0.0, &mut dz1)?;
        relu_backward(&mut dz1, &self.z1);
        column_sums(&dz1, &mut g.b1);
        // scatter to per-user / per-item rows, then one product per half
        let mut du = DenseMatrix::zeros(inputs.user_repr.rows(), PAIR_HIDDEN);
        let mut di = DenseMatrix::zeros(inputs.item_repr.rows(), PAIR_HIDDEN);
        for (k, e) in inputs.edges.iter().enumerate() {
            let row = dz1.row(k);
            for (o, v) in du.row_mut(e.user as usize).iter_mut().zip(row) {
                *o += v;
            }
            for (o, v) in di.row_mut(e.item as usize).iter_mut().zip(row) {
                *o += v;
            }
        }
        let mut gu = DenseMatrix::zeros(r, PAIR_HIDDEN);
        gemm(1.0, inputs.user_repr, true, &du, false, 0.0, &mut gu)?;
        let mut gi = DenseMatrix::zeros(r, PAIR_HIDDEN);
        gemm(1.0, inputs.item_repr, true, &di, false, 0.0, &mut gi)?;
        g.w1 = gu.vstack(&gi)?;
        Ok(g)
    }
}

/// `(1/batch_users) Σ_e [S_e ln p_e + (1 − S_e) ln(1 − p_e)]` and its gradient.
pub fn mask_log_likelihood(
    params: &ProbEstimatorParams,
    inputs: &EstimatorInputs,
    mask: &[bool],
    batch_users: usize,
) -> Result<(f64, ProbEstimatorParams)> {
    if mask.len() != inputs.edges.len() {
        return Err(Error::shape("mask_log_likelihood", "one mask bit per edge"));
    }
    if batch_users == 0 {
        return Err(Error::Empty("selection batch"));
    }
    let fwd = estimator_forward(params, inputs)?;
    let scale = 1.0 / batch_users as f64;
    let mut value = 0.0;
    let d_logits: Vec<f64> = fwd
        .logits
        .iter()
        .zip(mask)
        .map(|(&z, &s)| {
            let (p, live) = squash(z);
            value += if s { p.ln() } else { (1.0 - p).ln() };
            if !live {
                return 0.0;
            }
            // d/dz ln σ(z) = 1 − σ(z);  d/dz ln(1 − σ(z)) = −σ(z)
            scale * (if s { 1.0 - p } else { -p })
        })
        .collect();
    let grads = fwd.backward(params, inputs, &d_logits)?;
    Ok((scale * value, grads))
}

/// Descent direction for one REINFORCE step: the gradient of
/// `−reward · mask_log_likelihood`, so a positive reward makes the realised
/// mask more likely.
pub fn reinforce_gradient(
    params: &ProbEstimatorParams,
    inputs: &EstimatorInputs,
    mask: &[bool],
    batch_users: usize,
    reward: f64,
) -> Result<ProbEstimatorParams> {
    let (_, mut g) = mask_log_likelihood(params, inputs, mask, batch_users)?;
    for block in g.blocks_mut() {
        block.iter_mut().for_each(|v| *v *= -reward);
    }
    Ok(g)
}
