use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::numerics::{gemm, leaky_relu, leaky_relu_grad, DenseMatrix};

use super::params::{GcfGrads, GcfParams};

/// Negative-side slope of the layer activation.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Per-layer embeddings `ℓ = 0..=L`, each stacked as users `0..P` then items.
#[derive(Clone, Debug)]
pub struct LayerEmbeddings {
    num_users: usize,
    num_items: usize,
    layers: Vec<DenseMatrix>,
}

impl LayerEmbeddings {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Number of propagation layers `L` (layer 0 excluded).
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn layer(&self, l: usize) -> &DenseMatrix {
        &self.layers[l]
    }

    #[inline]
    pub fn user(&self, l: usize, u: usize) -> &[f64] {
        self.layers[l].row(u)
    }

    #[inline]
    pub fn item(&self, l: usize, i: usize) -> &[f64] {
        self.layers[l].row(self.num_users + i)
    }

    /// Per-node concatenation of layers `0..=L`, layer-ascending.
    pub fn final_representation(&self) -> (DenseMatrix, DenseMatrix) {
        let d = self.dim();
        let width = self.layers.len() * d;
        let mut users = DenseMatrix::zeros(self.num_users, width);
        let mut items = DenseMatrix::zeros(self.num_items, width);
        for (l, layer) in self.layers.iter().enumerate() {
            for u in 0..self.num_users {
                users.row_mut(u)[l * d..(l + 1) * d].copy_from_slice(layer.row(u));
            }
            for i in 0..self.num_items {
                items.row_mut(i)[l * d..(l + 1) * d].copy_from_slice(layer.row(self.num_users + i));
            }
        }
        (users, items)
    }

    /// `⟨repr(u), repr(i)⟩` without materialising the representation.
    pub fn score(&self, u: usize, i: usize) -> f64 {
        self.layers
            .iter()
            .map(|layer| crate::numerics::dot(layer.row(u), layer.row(self.num_users + i)))
            .sum()
    }
}

/// Upstream gradient with respect to every layer's embeddings.
#[derive(Clone, Debug)]
pub struct LayerGrads {
    pub(crate) layers: Vec<DenseMatrix>,
    num_users: usize,
}

impl LayerGrads {
    pub fn layer_mut(&mut self, l: usize) -> &mut DenseMatrix {
        &mut self.layers[l]
    }

    #[inline]
    pub fn user_mut(&mut self, l: usize, u: usize) -> &mut [f64] {
        self.layers[l].row_mut(u)
    }

    #[inline]
    pub fn item_mut(&mut self, l: usize, i: usize) -> &mut [f64] {
        let n = self.num_users;
        self.layers[l].row_mut(n + i)
    }
}

/// A forward pass with everything backpropagation needs.
#[derive(Clone, Debug)]
pub struct Forward {
    pub embeddings: LayerEmbeddings,
    /// `S_ℓ = Â·E_{ℓ-1}` for `ℓ = 1..=L`.
    sides: Vec<DenseMatrix>,
    /// Pre-activations `Z_ℓ`.
    pre: Vec<DenseMatrix>,
    slope: f64,
}

/// NGCF propagation. For node `n` with neighbour aggregate `s = Σ w·e_m`:
/// `e' = leaky_relu((e + s)·W1 + (e ⊙ s)·W2 + b)`.
pub fn propagate(params: &GcfParams, adj: &NormalizedAdjacency) -> Result<Forward> {
    propagate_with_slope(params, adj, LEAKY_SLOPE)
}

pub fn propagate_with_slope(params: &GcfParams, adj: &NormalizedAdjacency, slope: f64) -> Result<Forward> {
    params.check_shapes()?;
    if params.num_users() != adj.num_users() || params.num_items() != adj.num_items() {
        return Err(Error::shape(
            "propagate",
            format!(
                "params {}x{} vs graph {}x{}",
                params.num_users(),
                params.num_items(),
                adj.num_users(),
                adj.num_items()
            ),
        ));
    }
    let d = params.dim();
    let e0 = params.user_emb.vstack(&params.item_emb)?;
    let n = e0.rows();
    let mut layers = vec![e0];
    let mut sides = Vec::with_capacity(params.num_layers());
    let mut pre = Vec::with_capacity(params.num_layers());
    for lw in &params.layers {
        let prev = layers.last().expect("layer 0 present");
        let mut side = DenseMatrix::zeros(n, d);
        adj.spmm(prev, &mut side)?;
        let mut a = prev.clone();
        let mut b = prev.clone();
        for ((av, bv), sv) in a
            .as_mut_slice()
            .iter_mut()
            .zip(b.as_mut_slice().iter_mut())
            .zip(side.as_slice())
        {
            *av += sv;
            *bv *= sv;
        }
        let mut z = DenseMatrix::zeros(n, d);
        for r in 0..n {
            z.row_mut(r).copy_from_slice(&lw.bias);
        }
        gemm(1.0, &a, false, &lw.w1, false, 1.0, &mut z)?;
        gemm(1.0, &b, false, &lw.w2, false, 1.0, &mut z)?;
        let mut out = z.clone();
        out.as_mut_slice().iter_mut().for_each(|v| *v = leaky_relu(*v, slope));
        if !out.is_finite() {
            return Err(Error::NonFinite {
                context: format!("layer {} embeddings", layers.len()),
            });
        }
        sides.push(side);
        pre.push(z);
        layers.push(out);
    }
    Ok(Forward {
        embeddings: LayerEmbeddings {
            num_users: params.num_users(),
            num_items: params.num_items(),
            layers,
        },
        sides,
        pre,
        slope,
    })
}

impl Forward {
    /// Zeroed upstream gradient matching this pass.
    pub fn zero_grads(&self) -> LayerGrads {
        LayerGrads {
            layers: self
                .embeddings
                .layers
                .iter()
                .map(|m| DenseMatrix::zeros(m.rows(), m.cols()))
                .collect(),
            num_users: self.embeddings.num_users,
        }
    }

    /// Backpropagates `upstream` to the parameters.
    pub fn backward(&self, params: &GcfParams, adj: &NormalizedAdjacency, upstream: LayerGrads) -> Result<GcfGrads> {
        let depth = self.embeddings.depth();
        if upstream.layers.len() != depth + 1 || params.num_layers() != depth {
            return Err(Error::shape("backward", "layer count differs from forward pass"));
        }
        let d = params.dim();
        let mut grads = params.zeros_like();
        let mut seeds = upstream.layers;
        // running gradient w.r.t. E_ℓ, starting at the top layer
        let mut g = seeds.pop().expect("non-empty");
        for l in (1..=depth).rev() {
            let lw = &params.layers[l - 1];
            let z = &self.pre[l - 1];
            let side = &self.sides[l - 1];
            let prev = &self.embeddings.layers[l - 1];
            let n = prev.rows();

            let mut dz = g;
            for (dv, zv) in dz.as_mut_slice().iter_mut().zip(z.as_slice()) {
                *dv *= leaky_relu_grad(*zv, self.slope);
            }
            let mut a = prev.clone();
            let mut b = prev.clone();
            for ((av, bv), sv) in a
                .as_mut_slice()
                .iter_mut()
                .zip(b.as_mut_slice().iter_mut())
                .zip(side.as_slice())
            {
                *av += sv;
                *bv *= sv;
            }
            let gl = &mut grads.layers[l - 1];
            gemm(1.0, &a, true, &dz, false, 0.0, &mut gl.w1)?;
            gemm(1.0, &b, true, &dz, false, 0.0, &mut gl.w2)?;
            for r in 0..n {
                for (bg, v) in gl.bias.iter_mut().zip(dz.row(r)) {
                    *bg += v;
                }
            }
            // dA = dZ·W1ᵀ, dB = dZ·W2ᵀ
            let mut da = DenseMatrix::zeros(n, d);
            gemm(1.0, &dz, false, &lw.w1, true, 0.0, &mut da)?;
            let mut db = DenseMatrix::zeros(n, d);
            gemm(1.0, &dz, false, &lw.w2, true, 0.0, &mut db)?;

            // dS = dA + dB ⊙ E ; dE (direct) = dA + dB ⊙ S
            let mut ds = da.clone();
            let mut de = seeds.pop().expect("one seed per layer");
            for k in 0..n * d {
                let dbk = db.as_slice()[k];
                ds.as_mut_slice()[k] += dbk * prev.as_slice()[k];
                de.as_mut_slice()[k] += da.as_slice()[k] + dbk * side.as_slice()[k];
            }
            let mut through = DenseMatrix::zeros(n, d);
            adj.spmm(&ds, &mut through)?;
            de.add_scaled(&through, 1.0)?;
            g = de;
        }
        let p = params.num_users();
        grads.user_emb = g.slice_rows(0, p);
        grads.item_emb = g.slice_rows(p, params.num_items());
        Ok(grads)
    }
}
