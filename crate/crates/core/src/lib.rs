pub mod adaboost;
pub mod baselines;
pub mod dataset;
pub mod encode;
mod error;
pub mod eval;
pub mod feature_rank;
pub mod kmeans;
pub mod naive_bayes;
pub mod pipeline;

pub use error::{Error, Result};
