pub mod error;
pub mod eval;
pub mod experiment;
pub mod federation;
pub mod gcf;
pub mod gdve;
pub mod graph;
pub mod numerics;
pub mod optim;
pub mod partition;

pub use error::{Error, Result};
