//! Comparison learners. Plain naive Bayes lives in [`crate::naive_bayes`].

mod forest;
mod knn;

pub use forest::{
    default_m_try, rf_fit, rf_fit_with, rf_predict, DecisionTreeNode, ForestParams,
    RandomForestModel, SplitTest,
};
pub use knn::{knn_fit, knn_predict, KnnModel};
