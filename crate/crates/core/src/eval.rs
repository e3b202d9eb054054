//! Confusion matrices, accuracy/precision/recall, and phase timing.

use std::sync::Mutex;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    /// `counts[truth][predicted]`.
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// One-vs-rest counts for class `c`.
    pub fn one_vs_rest(&self, c: usize) -> OneVsRest {
        let tp = self.counts[c][c];
        let predicted: u64 = self.counts.iter().map(|row| row[c]).sum();
        let actual: u64 = self.counts[c].iter().sum();
        let fp = predicted - tp;
        let fn_ = actual - tp;
        OneVsRest {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fp - fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneVsRest {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

pub fn confusion<T: AsRef<str>, P: AsRef<str>>(
    truths: &[T],
    predictions: &[P],
    classes: &[String],
) -> Result<ConfusionMatrix> {
    if truths.len() != predictions.len() {
        return Err(Error::invalid(format!(
            "{} truths for {} predictions",
            truths.len(),
            predictions.len()
        )));
    }
    let index = |s: &str| {
        classes
            .iter()
            .position(|c| c == s)
            .ok_or_else(|| Error::invalid(format!("class `{s}` is not in the class list")))
    };
    let mut counts = vec![vec![0u64; classes.len()]; classes.len()];
    for (t, p) in truths.iter().zip(predictions) {
        counts[index(t.as_ref())?][index(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    #[serde(flatten)]
    pub counts: OneVsRest,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub averaging: String,
    pub per_class: Vec<ClassMetrics>,
    /// Zero-denominator precision or recall that was reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// The three headline ratios as exact fractions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactApr {
    pub accuracy: BigRational,
    pub precision: BigRational,
    pub recall: BigRational,
}

fn ratio(num: u64, den: u64) -> BigRational {
    if den == 0 {
        BigRational::zero()
    } else {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// Support-weighted precision and recall and plain accuracy, exactly.
pub fn apr_exact(matrix: &ConfusionMatrix) -> Result<ExactApr> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::invalid("confusion matrix is empty"));
    }
    let mut precision = BigRational::zero();
    let mut recall = BigRational::zero();
    for c in 0..matrix.classes.len() {
        let o = matrix.one_vs_rest(c);
        let support = o.tp + o.fn_;
        let weight = ratio(support, total);
        precision += &weight * ratio(o.tp, o.tp + o.fp);
        recall += &weight * ratio(o.tp, support);
    }
    Ok(ExactApr {
        accuracy: ratio(matrix.trace(), total),
        precision,
        recall,
    })
}

pub fn apr(matrix: &ConfusionMatrix) -> Result<AprReport> {
    let exact = apr_exact(matrix)?;
    let mut warnings = Vec::new();
    let per_class = matrix
        .classes
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let o = matrix.one_vs_rest(c);
            let support = o.tp + o.fn_;
            if o.tp + o.fp == 0 {
                warnings.push(format!("precision undefined for `{name}` (never predicted); reported as 0"));
            }
            if support == 0 {
                warnings.push(format!("recall undefined for `{name}` (no instances); reported as 0"));
            }
            ClassMetrics {
                class: name.clone(),
                counts: o,
                support,
                precision: to_f64(&ratio(o.tp, o.tp + o.fp)),
                recall: to_f64(&ratio(o.tp, support)),
            }
        })
        .collect();
    Ok(AprReport {
        accuracy: to_f64(&exact.accuracy),
        precision: to_f64(&exact.precision),
        recall: to_f64(&exact.recall),
        averaging: "support-weighted".into(),
        per_class,
        warnings,
    })
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("ratio of bounded counts is finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingReport {
    pub train_seconds: f64,
    pub test_seconds: f64,
}

static MEASUREMENT_GATE: Mutex<()> = Mutex::new(());

/// Runs `f` alone (timed phases are serialized process-wide) and returns its
/// result with the elapsed wall-clock seconds. Must not be nested.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let _gate = MEASUREMENT_GATE.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
