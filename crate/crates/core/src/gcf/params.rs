use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};
use crate::optim::ParamSet;

/// Propagation weights of one layer. Rows are embeddings, so a layer computes
/// `a · w1 + b · w2 + bias` for row vectors `a`, `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
    pub bias: Vec<f64>,
}

impl LayerWeights {
    fn zeros(dim: usize) -> Self {
        LayerWeights {
            w1: DenseMatrix::zeros(dim, dim),
            w2: DenseMatrix::zeros(dim, dim),
            bias: vec![0.0; dim],
        }
    }
}

/// Initial embedding tables plus per-layer propagation weights.
///
/// The same layout doubles as the gradient container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcfParams {
    pub user_emb: DenseMatrix,
    pub item_emb: DenseMatrix,
    pub layers: Vec<LayerWeights>,
}

/// Gradients share the parameter layout.
pub type GcfGrads = GcfParams;

/// Standard deviation of the initial embedding entries.
pub const EMBEDDING_INIT_STD: f64 = 0.1;

impl GcfParams {
    /// Embeddings ~ N(0, 0.1²); weights Xavier-uniform; biases zero.
    pub fn init(num_users: usize, num_items: usize, dim: usize, num_layers: usize, rng: &mut Rng) -> Self {
        let user_emb = DenseMatrix::from_fn(num_users, dim, |_, _| EMBEDDING_INIT_STD * rng.normal());
        let item_emb = DenseMatrix::from_fn(num_items, dim, |_, _| EMBEDDING_INIT_STD * rng.normal());
        let bound = (6.0 / (2 * dim) as f64).sqrt();
        let layers = (0..num_layers)
            .map(|_| LayerWeights {
                w1: DenseMatrix::from_fn(dim, dim, |_, _| bound * (2.0 * rng.uniform() - 1.0)),
                w2: DenseMatrix::from_fn(dim, dim, |_, _| bound * (2.0 * rng.uniform() - 1.0)),
                bias: vec![0.0; dim],
            })
            .collect();
        GcfParams {
            user_emb,
            item_emb,
            layers,
        }
    }

    pub fn zeros(num_users: usize, num_items: usize, dim: usize, num_layers: usize) -> Self {
        GcfParams {
            user_emb: DenseMatrix::zeros(num_users, dim),
            item_emb: DenseMatrix::zeros(num_items, dim),
            layers: (0..num_layers).map(|_| LayerWeights::zeros(dim)).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.num_users(), self.num_items(), self.dim(), self.num_layers())
    }

    pub fn num_users(&self) -> usize {
        self.user_emb.rows()
    }

    pub fn num_items(&self) -> usize {
        self.item_emb.rows()
    }

    pub fn dim(&self) -> usize {
        self.item_emb.cols()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Width of the concatenated per-layer representation, `(L + 1)·d`.
    pub fn repr_width(&self) -> usize {
        (self.num_layers() + 1) * self.dim()
    }

    pub fn check_shapes(&self) -> Result<()> {
        let d = self.dim();
        if self.user_emb.cols() != d {
            return Err(Error::shape("GcfParams", "user and item widths differ"));
        }
        for (l, lw) in self.layers.iter().enumerate() {
            if lw.w1.shape() != (d, d) || lw.w2.shape() != (d, d) || lw.bias.len() != d {
                return Err(Error::shape("GcfParams", format!("layer {} is not {d}x{d}", l + 1)));
            }
        }
        Ok(())
    }

    /// Copy with a different user table (e.g. client-private rows).
    pub fn with_user_table(&self, user_emb: DenseMatrix) -> Result<Self> {
        if user_emb.cols() != self.dim() {
            return Err(Error::shape("with_user_table", "embedding width differs"));
        }
        Ok(GcfParams {
            user_emb,
            item_emb: self.item_emb.clone(),
            layers: self.layers.clone(),
        })
    }
}

impl ParamSet for GcfParams {
    fn blocks(&self) -> Vec<&[f64]> {
        let mut out = vec![self.user_emb.as_slice(), self.item_emb.as_slice()];
        for l in &self.layers {
            out.push(l.w1.as_slice());
            out.push(l.w2.as_slice());
            out.push(&l.bias);
        }
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.user_emb.as_mut_slice(), self.item_emb.as_mut_slice()];
        for l in &mut self.layers {
            out.push(l.w1.as_mut_slice());
            out.push(l.w2.as_mut_slice());
            out.push(&mut l.bias);
        }
        out
    }
}
