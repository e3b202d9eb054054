//! End-to-end experiments: preprocessing, clustering, boosting, baselines,
//! evaluation and reporting.

mod report;
mod suite;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::adaboost::{boost_fit, boost_predict, BoostConfig, BoostedModel};
use crate::baselines::{knn_fit, knn_predict, rf_fit_with, rf_predict, ForestParams, KnnModel, RandomForestModel};
use crate::dataset::{
    load_csv, normalize_apply, normalize_fit, stratified_split, synthesize, ClassCounts, Dataset, Device,
    NormalizationParams, Scale, Target,
};
use crate::error::{Error, Result};
use crate::eval::{apr, confusion, timed, AprReport, ConfusionMatrix, TimingReport};
use crate::feature_rank::{rank_features, FeatureRanking};
use crate::kmeans::{self, augment, class_to_cluster, cluster_count, ClusterModel, KMeansParams};
use crate::naive_bayes::{nb_fit, nb_predict, uniform_weights, NbModel};

pub use report::{
    emit_report, read_report_csv, render_report, report_tables, significant, ReportColumn, ReportFormat, ReportTable,
    ROW_LABELS,
};
pub use suite::{load_suite, run_suite, write_suite, SuiteCell, SuiteConfig};

/// JSON Schema for a serialized [`ExperimentResult`] (or an array of them).
pub const RESULT_SCHEMA: &str = include_str!("../../schema/experiment_result.schema.json");

pub const DEFAULT_SPLIT: f64 = 0.7;
pub const DEFAULT_SEPARATION: f64 = 6.0;
pub const DEFAULT_KNN_K: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Kmanb,
    Nb,
    Knn,
    Rf,
}

impl Algorithm {
    /// Report column order.
    pub const COLUMNS: [Algorithm; 4] = [Algorithm::Rf, Algorithm::Nb, Algorithm::Knn, Algorithm::Kmanb];

    pub fn title(self) -> &'static str {
        match self {
            Algorithm::Kmanb => "KMANB",
            Algorithm::Nb => "Naive Bayes",
            Algorithm::Knn => "KNN",
            Algorithm::Rf => "Random Forest",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmanb" => Ok(Algorithm::Kmanb),
            "nb" => Ok(Algorithm::Nb),
            "knn" => Ok(Algorithm::Knn),
            "rf" => Ok(Algorithm::Rf),
            _ => Err(Error::invalid(format!("unknown algorithm `{s}`"))),
        }
    }
}

/// Where a split's rows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv(PathBuf),
    Synth {
        scale: Scale,
        #[serde(default = "default_separation")]
        separation: f64,
        /// Multiplies every class count (rounded, at least 2 per class so a split
        /// keeps every class on both sides).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fraction: Option<f64>,
    },
}

fn default_separation() -> f64 {
    DEFAULT_SEPARATION
}

fn default_rounds() -> usize {
    BoostConfig::default().rounds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub device: Device,
    pub train: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<DataSource>,
    /// Train fraction of a stratified split of `train`; used when `test` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<f64>,
    pub algorithm: Algorithm,
    /// In a suite, a missing seed is derived from the suite seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub drop_top_feature: bool,
    #[serde(default = "default_rounds")]
    pub boost_rounds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_override: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knn_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf_trees: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf_mtry: Option<usize>,
    #[serde(default)]
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<ReportFormat>,
}

impl ExperimentConfig {
    /// The device's synthetic train/test data with a 0.7 split.
    pub fn synthetic(device: Device, algorithm: Algorithm, seed: u64) -> Self {
        Self {
            device,
            train: DataSource::Synth {
                scale: Scale::TrainTest,
                separation: DEFAULT_SEPARATION,
                fraction: None,
            },
            test: None,
            split: Some(DEFAULT_SPLIT),
            algorithm,
            seed: Some(seed),
            drop_top_feature: false,
            boost_rounds: default_rounds(),
            k_override: None,
            knn_k: None,
            rf_trees: None,
            rf_mtry: None,
            target: Target::AttackType,
            out: None,
            format: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.test, self.split) {
            (Some(_), Some(_)) => return Err(Error::invalid("give either a test source or a split fraction, not both")),
            (None, None) => return Err(Error::invalid("give a test source or a split fraction")),
            (None, Some(f)) if !(f > 0.0 && f < 1.0) => {
                return Err(Error::invalid(format!("split fraction must lie in (0, 1), got {f}")))
            }
            _ => {}
        }
        if self.boost_rounds == 0 {
            return Err(Error::invalid("boost_rounds must be at least 1"));
        }
        for (name, v) in [
            ("k_override", self.k_override),
            ("knn_k", self.knn_k),
            ("rf_trees", self.rf_trees),
            ("rf_mtry", self.rf_mtry),
        ] {
            if v == Some(0) {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        for src in std::iter::once(&self.train).chain(&self.test) {
            if let DataSource::Synth { separation, fraction, .. } = src {
                if !(separation.is_finite() && *separation >= 0.0) {
                    return Err(Error::invalid(format!("separation must be finite and >= 0, got {separation}")));
                }
                if let Some(f) = fraction {
                    if !(f.is_finite() && *f > 0.0) {
                        return Err(Error::invalid(format!("fraction must be positive, got {f}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn seed_or_err(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::invalid("experiment has no seed"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDiagnostics {
    pub k: usize,
    pub sse: f64,
    pub iterations: usize,
    pub purity: f64,
    pub incorrectly_clustered: usize,
    /// Majority attack type of each training cluster.
    pub majority: Vec<Option<String>>,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub dropped: String,
    #[serde(flatten)]
    pub ranking: FeatureRanking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub artifact: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub train_instances: usize,
    pub test_instances: usize,
    pub classes: Vec<String>,
    pub apr: AprReport,
    pub confusion: ConfusionMatrix,
    pub timing: TimingReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<ClusterDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RankingReport>,
    /// Predicted class per test instance, in test order.
    #[serde(skip)]
    pub predictions: Vec<String>,
}

/// Everything learned from the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub normalization: NormalizationParams,
    pub ranking: Option<FeatureRanking>,
    pub model: FittedModel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Kmanb { clusters: ClusterModel, boosted: BoostedModel },
    Nb(NbModel),
    Knn(KnnModel),
    Rf(RandomForestModel),
}

/// SplitMix64 step; used to derive independent seeds from one seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn load_source(source: &DataSource, device: Device, seed: u64) -> Result<Dataset> {
    let profile = device.profile();
    match source {
        DataSource::Csv(path) => load_csv(path, &profile),
        DataSource::Synth {
            scale,
            separation,
            fraction,
        } => {
            let mut counts = ClassCounts::table(device, *scale);
            if let Some(f) = fraction {
                for (_, n) in &mut counts.0 {
                    if *n > 0 {
                        *n = ((*n as f64 * f).round() as i64).max(2);
                    }
                }
            }
            synthesize(&profile, &counts, seed, *separation)
        }
    }
}

/// Loads (or generates) both splits. Not part of any timed phase.
pub fn prepare(config: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    config.validate()?;
    let seed = config.seed_or_err()?;
    let data = load_source(&config.train, config.device, seed)?;
    match (&config.test, config.split) {
        (Some(test), _) => Ok((data, load_source(test, config.device, derive_seed(seed, 1))?)),
        (None, Some(f)) => stratified_split(&data, f, seed),
        (None, None) => unreachable!("validated"),
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let (train, test) = prepare(config)?;
    run_prepared(&train, &test, config)
}

/// Runs the configured algorithm on already loaded splits.
pub fn run_prepared(train: &Dataset, test: &Dataset, config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_detailed(train, test, config).map(|(r, _)| r)
}

pub fn run_kmanb(train: &Dataset, test: &Dataset, config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.algorithm != Algorithm::Kmanb {
        return Err(Error::invalid("run_kmanb needs algorithm = kmanb"));
    }
    run_prepared(train, test, config)
}

pub fn run_baseline(
    algorithm: Algorithm,
    train: &Dataset,
    test: &Dataset,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    if algorithm == Algorithm::Kmanb {
        return Err(Error::invalid("kmanb is not a baseline"));
    }
    let config = ExperimentConfig {
        algorithm,
        ..config.clone()
    };
    run_prepared(train, test, &config)
}

/// Like [`run_prepared`], also returning the fitted state.
pub fn run_detailed(
    train: &Dataset,
    test: &Dataset,
    config: &ExperimentConfig,
) -> Result<(ExperimentResult, Fitted)> {
    config.validate()?;
    let seed = config.seed_or_err()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // Step 1: categories and scaling come from the training split alone.
    let train = train.compact_categories();
    let test = test.align_to(train.profile())?;
    let normalization = normalize_fit(&train)?;
    let mut train = normalize_apply(&normalization, &train)?;
    let mut test = normalize_apply(&normalization, &test)?;

    let mut ranking = None;
    if config.drop_top_feature {
        let r = rank_features(&train)?;
        let top = r
            .top()
            .ok_or_else(|| Error::invalid("no feature left to drop"))?
            .feature
            .clone();
        train = train.drop_feature(&top)?;
        test = test.drop_feature(&top)?;
        ranking = Some(r);
    }

    let target = config.target;
    let truths: Vec<&str> = test.instances().iter().map(|i| i.target(target)).collect();
    let mut clusters_report = None;

    let (model, predictions, timing) = match config.algorithm {
        Algorithm::Kmanb => {
            // Step 2: clustering ignores type and label; the cluster joins the features.
            let k = config.k_override.unwrap_or_else(|| cluster_count(train.profile()));
            let boost = BoostConfig {
                rounds: config.boost_rounds,
                target,
            };
            let (fitted, train_seconds) = timed(|| -> Result<_> {
                let clusters = kmeans::fit_with(&train, &KMeansParams::new(k, seed), |_, _, _| {})?;
                let augmented = augment(&train, &clusters)?;
                let boosted = boost_fit(&augmented, &boost, seed)?;
                Ok((clusters, boosted))
            });
            let (clusters, boosted) = fitted?;
            let mapping = class_to_cluster(&clusters, &train);
            clusters_report = Some(ClusterDiagnostics {
                k,
                sse: clusters.final_sse,
                iterations: clusters.iterations_run,
                purity: mapping.purity,
                incorrectly_clustered: mapping.incorrectly_clustered,
                majority: mapping.majority,
                sizes: mapping.sizes,
            });
            // Step 3: classify the augmented test split.
            let (predictions, test_seconds) = timed(|| -> Result<Vec<String>> {
                let augmented = augment(&test, &clusters)?;
                Ok(augmented
                    .instances()
                    .iter()
                    .map(|i| boost_predict(&boosted, i).to_string())
                    .collect())
            });
            (
                FittedModel::Kmanb { clusters, boosted },
                predictions?,
                TimingReport {
                    train_seconds,
                    test_seconds,
                },
            )
        }
        Algorithm::Nb => {
            let (m, train_seconds) = timed(|| nb_fit(&train, &uniform_weights(train.len()), target));
            let m = m?;
            let (p, test_seconds) = timed(|| predict_all(&test, |i| nb_predict(&m, i)));
            (FittedModel::Nb(m), p, TimingReport { train_seconds, test_seconds })
        }
        Algorithm::Knn => {
            let k = config.knn_k.unwrap_or(DEFAULT_KNN_K);
            let (m, train_seconds) = timed(|| knn_fit(&train, k, target));
            let m = m?;
            let (p, test_seconds) = timed(|| predict_all(&test, |i| knn_predict(&m, i)));
            (FittedModel::Knn(m), p, TimingReport { train_seconds, test_seconds })
        }
        Algorithm::Rf => {
            let mut params = ForestParams::new(seed);
            params.n_trees = config.rf_trees.unwrap_or(params.n_trees);
            params.m_try = config.rf_mtry;
            let (m, train_seconds) = timed(|| rf_fit_with(&train, &params, target));
            let m = m?;
            let (p, test_seconds) = timed(|| predict_all(&test, |i| rf_predict(&m, i)));
            (FittedModel::Rf(m), p, TimingReport { train_seconds, test_seconds })
        }
    };

    let classes = target.classes(test.profile());
    let matrix = confusion(&truths, &predictions, &classes)?;
    let result = ExperimentResult {
        artifact: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: ExperimentConfig {
            seed: Some(seed),
            ..config.clone()
        },
        seed,
        train_instances: train.len(),
        test_instances: test.len(),
        classes,
        apr: apr(&matrix)?,
        confusion: matrix,
        timing,
        clusters: clusters_report,
        ranking: ranking.clone().map(|r| RankingReport {
            dropped: r.scores[0].feature.clone(),
            ranking: r,
        }),
        predictions,
    };
    let fitted = Fitted {
        normalization,
        ranking,
        model,
    };
    Ok((result, fitted))
}

fn predict_all<'m>(test: &Dataset, predict: impl Fn(&crate::dataset::Instance) -> &'m str) -> Vec<String> {
    test.instances().iter().map(|i| predict(i).to_string()).collect()
}
