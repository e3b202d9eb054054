//! Weighted hybrid naive Bayes: Gaussian likelihoods for numeric features,
//! add-one smoothed tables for categorical ones.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Instance, Target};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericParams {
    pub feature: String,
    /// Column index in the training schema.
    pub index: usize,
    /// Per class, in model class order.
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub variance_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalTable {
    pub feature: String,
    pub index: usize,
    pub categories: Vec<String>,
    /// `probabilities[class][category]`, each row summing to 1.
    pub probabilities: Vec<Vec<f64>>,
    /// Mass given to a category never seen in training, per class.
    pub unseen: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub target: Target,
    pub classes: Vec<String>,
    pub priors: Vec<f64>,
    pub numeric_params: Vec<NumericParams>,
    pub nominal_tables: Vec<NominalTable>,
}

/// Fits on `data` with one non-negative weight per instance.
///
/// Weights are rescaled to sum to the instance count before counting, so the
/// fit depends only on relative weights and add-one smoothing keeps the same
/// strength whether weights are unit counts or a distribution.
pub fn nb_fit(data: &Dataset, weights: &[f64], target: Target) -> Result<NbModel> {
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if weights.len() != n {
        return Err(Error::invalid(format!(
            "{} weights for {n} instances",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
        return Err(Error::invalid(format!("instance weight {w} is not a finite non-negative number")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("total instance weight is zero"));
    }
    // Equal weights map to exactly 1 so uniform fits match unit counts bit for bit.
    let weights: Vec<f64> = if weights.iter().all(|&w| w == weights[0]) {
        vec![1.0; n]
    } else {
        let scale = n as f64 / total;
        weights.iter().map(|w| w * scale).collect()
    };

    let all = target.classes(data.profile());
    let class_idx: Vec<usize> = data
        .instances()
        .iter()
        .map(|i| all.iter().position(|c| c == i.target(target)).unwrap())
        .collect();
    let mut present = vec![false; all.len()];
    let mut class_weight = vec![0.0; all.len()];
    for (&c, &w) in class_idx.iter().zip(&weights) {
        present[c] = true;
        class_weight[c] += w;
    }
    for (c, name) in all.iter().enumerate() {
        if present[c] && class_weight[c] <= 0.0 {
            return Err(Error::Class(name.clone(), "zero total weight".into()));
        }
    }
    // Compact to the classes that occur, keeping canonical order.
    let remap: Vec<Option<usize>> = {
        let mut next = 0;
        present
            .iter()
            .map(|&p| {
                p.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let classes: Vec<String> = all
        .iter()
        .zip(&present)
        .filter(|(_, &p)| p)
        .map(|(c, _)| c.clone())
        .collect();
    let class_weight: Vec<f64> = class_weight
        .iter()
        .zip(&present)
        .filter(|(_, &p)| p)
        .map(|(w, _)| *w)
        .collect();
    let class_of: Vec<usize> = class_idx.iter().map(|&c| remap[c].unwrap()).collect();
    let k = classes.len();
    let weight_sum: f64 = class_weight.iter().sum();
    let priors = class_weight.iter().map(|w| w / weight_sum).collect();

    let mut numeric_params = Vec::new();
    let mut nominal_tables = Vec::new();
    for (j, feature) in data.profile().features.iter().enumerate() {
        let column = data.instances().iter().map(|i| i.values[j]);
        if feature.kind.is_numeric() {
            let xs: Vec<f64> = column.map(|v| v.num().unwrap()).collect();
            let (lo, hi) = xs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            let variance_floor = (1e-6 * (hi - lo).powi(2)).max(1e-12);
            let mut sum = vec![0.0; k];
            for ((&x, &c), &w) in xs.iter().zip(&class_of).zip(&weights) {
                sum[c] += w * x;
            }
            let mean: Vec<f64> = sum.iter().zip(&class_weight).map(|(s, w)| s / w).collect();
            let mut sq = vec![0.0; k];
            for ((&x, &c), &w) in xs.iter().zip(&class_of).zip(&weights) {
                sq[c] += w * (x - mean[c]).powi(2);
            }
            let variance = sq
                .iter()
                .zip(&class_weight)
                .map(|(s, w)| (s / w).max(variance_floor))
                .collect();
            numeric_params.push(NumericParams {
                feature: feature.name.clone(),
                index: j,
                mean,
                variance,
                variance_floor,
            });
        } else {
            let m = feature.categories.len();
            let mut counts = vec![vec![0.0; m]; k];
            for ((v, &c), &w) in column.zip(&class_of).zip(&weights) {
                counts[c][v.cat().unwrap()] += w;
            }
            let probabilities = counts
                .iter()
                .zip(&class_weight)
                .map(|(row, w)| row.iter().map(|x| (x + 1.0) / (w + m as f64)).collect())
                .collect();
            let unseen = class_weight.iter().map(|w| 1.0 / (w + m as f64)).collect();
            nominal_tables.push(NominalTable {
                feature: feature.name.clone(),
                index: j,
                categories: feature.categories.clone(),
                probabilities,
                unseen,
            });
        }
    }
    Ok(NbModel {
        target,
        classes,
        priors,
        numeric_params,
        nominal_tables,
    })
}

/// Unnormalized log joint score per class.
pub fn nb_log_scores(model: &NbModel, instance: &Instance) -> Vec<f64> {
    let mut scores: Vec<f64> = model.priors.iter().map(|p| p.ln()).collect();
    for p in &model.numeric_params {
        let x = instance.values[p.index].num().expect("numeric cell");
        for (c, s) in scores.iter_mut().enumerate() {
            let var = p.variance[c];
            *s -= 0.5 * (LN_2PI + var.ln() + (x - p.mean[c]).powi(2) / var);
        }
    }
    for t in &model.nominal_tables {
        let v = instance.values[t.index].cat().expect("categorical cell");
        for (c, s) in scores.iter_mut().enumerate() {
            let p = t.probabilities[c].get(v).copied().unwrap_or(t.unseen[c]);
            *s += p.ln();
        }
    }
    scores
}

pub fn nb_posterior(model: &NbModel, instance: &Instance) -> Vec<f64> {
    softmax(&nb_log_scores(model, instance))
}

/// Highest-scoring class; ties go to the earlier class.
pub fn nb_predict<'m>(model: &'m NbModel, instance: &Instance) -> &'m str {
    &model.classes[argmax(&nb_log_scores(model, instance))]
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.iter().map(|e| e / total).collect()
}

/// First index of the maximum.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Convenience for unweighted fits.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0; n]
}
