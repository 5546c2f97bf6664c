//! First-order optimizers over flat parameter blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parameter container viewed as an ordered list of flat blocks.
pub trait ParamSet {
    fn blocks(&self) -> Vec<&[f64]>;
    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(
                "assign_flat",
                format!("{} values for {} parameters", flat.len(), self.num_params()),
            ));
        }
        let mut at = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[at..at + block.len()]);
            at += block.len();
        }
        Ok(())
    }

    fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::invalid(format!("unknown optimizer {other:?}"))),
        }
    }
}

/// Plain SGD or Adam (bias-corrected, β1 = 0.9, β2 = 0.999, ε = 1e-8).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Optimizer {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn sgd(lr: f64) -> Self {
        Self::new(OptimizerKind::Sgd, lr)
    }

    pub fn adam(lr: f64) -> Self {
        Self::new(OptimizerKind::Adam, lr)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Descends along `grads`. Non-finite gradients abort without touching `params`.
    pub fn step<P: ParamSet + ?Sized>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let gblocks = grads.blocks();
        if gblocks.iter().any(|b| b.iter().any(|g| !g.is_finite())) {
            return Err(Error::NonFinite {
                context: "gradient (training diverged)".into(),
            });
        }
        let mut pblocks = params.blocks_mut();
        if pblocks.len() != gblocks.len()
            || pblocks.iter().zip(&gblocks).any(|(p, g)| p.len() != g.len())
        {
            return Err(Error::shape("optimizer step", "parameter/gradient layout differs"));
        }
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in pblocks.iter_mut().zip(&gblocks) {
                    for (x, d) in p.iter_mut().zip(g.iter()) {
                        *x -= self.lr * d;
                    }
                }
            }
            OptimizerKind::Adam => {
                if self.m.is_empty() {
                    self.m = gblocks.iter().map(|b| vec![0.0; b.len()]).collect();
                    self.v = self.m.clone();
                } else if self.m.len() != gblocks.len()
                    || self.m.iter().zip(&gblocks).any(|(m, g)| m.len() != g.len())
                {
                    return Err(Error::shape("adam step", "layout changed between steps"));
                }
                let (b1, b2) = (self.beta1, self.beta2);
                let c1 = 1.0 - b1.powi(self.t as i32);
                let c2 = 1.0 - b2.powi(self.t as i32);
                let step = self.lr * c2.sqrt() / c1;
                let eps = self.eps * c2.sqrt();
                for (k, (p, g)) in pblocks.iter_mut().zip(&gblocks).enumerate() {
                    let (m, v) = (&mut self.m[k], &mut self.v[k]);
                    for j in 0..p.len() {
                        let gj = g[j];
                        m[j] = b1 * m[j] + (1.0 - b1) * gj;
                        v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
                        p[j] -= step * m[j] / (v[j].sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
