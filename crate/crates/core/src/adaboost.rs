//! AdaBoost.M1 with reweighting over weighted naive Bayes stages.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Instance, Target};
use crate::error::{Error, Result};
use crate::naive_bayes::{argmax, nb_fit, nb_log_scores, NbModel};

/// Stage weight used when a stage classifies the training set perfectly.
pub const PERFECT_STAGE_ALPHA: f64 = 10.0;
/// Stage weight for a lone stage that is no better than chance.
pub const WEAK_STAGE_ALPHA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub rounds: usize,
    pub target: Target,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            rounds: 10,
            target: Target::AttackType,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub alpha: f64,
    pub nb_model: NbModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub classes: Vec<String>,
    pub stages: Vec<Stage>,
    pub config: BoostConfig,
    pub seed: u64,
}

/// What happened in one boosting round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundInfo {
    pub round: usize,
    pub error: f64,
    pub alpha: f64,
    pub kept: bool,
    /// Instance weights in effect for the next round.
    pub weights: Vec<f64>,
}

pub fn boost_fit(data: &Dataset, config: &BoostConfig, seed: u64) -> Result<BoostedModel> {
    boost_fit_traced(data, config, seed, |_| {})
}

/// Reweighting is deterministic, so `seed` is only recorded in the model.
pub fn boost_fit_traced(
    data: &Dataset,
    config: &BoostConfig,
    seed: u64,
    mut trace: impl FnMut(&RoundInfo),
) -> Result<BoostedModel> {
    if config.rounds == 0 {
        return Err(Error::invalid("boosting needs at least one round"));
    }
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let first = data.instances()[0].target(config.target);
    if data.instances().iter().all(|i| i.target(config.target) == first) {
        return Err(Error::Class(
            first.to_string(),
            "boosting needs at least two classes".into(),
        ));
    }

    let mut weights = vec![1.0 / n as f64; n];
    let mut stages: Vec<Stage> = Vec::new();
    for round in 0..config.rounds {
        let model = nb_fit(data, &weights, config.target)?;
        let wrong: Vec<bool> = data
            .instances()
            .iter()
            .map(|i| model.classes[argmax(&nb_log_scores(&model, i))] != i.target(config.target))
            .collect();
        let error: f64 = weights.iter().zip(&wrong).filter(|(_, &w)| w).map(|(x, _)| x).sum();

        let (alpha, kept, stop) = if error <= 0.0 {
            (PERFECT_STAGE_ALPHA, true, true)
        } else if error >= 0.5 {
            (WEAK_STAGE_ALPHA, stages.is_empty(), true)
        } else {
            let ratio = (1.0 - error) / error;
            for (w, &miss) in weights.iter_mut().zip(&wrong) {
                if miss {
                    *w *= ratio;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            (ratio.ln(), true, false)
        };
        trace(&RoundInfo {
            round,
            error,
            alpha,
            kept,
            weights: weights.clone(),
        });
        if kept {
            stages.push(Stage {
                alpha,
                nb_model: model,
            });
        }
        if stop {
            break;
        }
    }
    Ok(BoostedModel {
        classes: stages[0].nb_model.classes.clone(),
        stages,
        config: *config,
        seed,
    })
}

/// Weighted vote of the stages; ties go to the earlier class.
pub fn boost_predict<'m>(model: &'m BoostedModel, instance: &Instance) -> &'m str {
    let mut votes = vec![0.0; model.classes.len()];
    for stage in &model.stages {
        votes[argmax(&nb_log_scores(&stage.nb_model, instance))] += stage.alpha;
    }
    &model.classes[argmax(&votes)]
}
