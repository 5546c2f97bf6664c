//! NGCF-style graph collaborative filtering: propagation, losses, training.

mod loss;
mod params;
mod propagate;
mod train;

pub use loss::{
    bpr_loss, bpr_loss_and_grad, check_even_layers, composite_loss_and_grad, regularization, structure_loss,
    structure_loss_and_grad, BprTriple,
};
pub use params::{GcfGrads, GcfParams, LayerWeights, EMBEDDING_INIT_STD};
pub use propagate::{propagate, propagate_with_slope, Forward, LayerEmbeddings, LayerGrads, LEAKY_SLOPE};
pub use train::{sample_negative, sgd_step, train, train_epoch, EpochStats, StructureConfig, TrainConfig};

/// Inner product of two representation rows.
pub fn score(user_repr: &[f64], item_repr: &[f64]) -> f64 {
    crate::numerics::dot(user_repr, item_repr)
}
