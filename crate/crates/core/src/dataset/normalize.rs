use serde::{Deserialize, Serialize};

use super::{Dataset, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericRange {
    pub feature: String,
    pub min: f64,
    pub max: f64,
}

/// Observed min/max of every numeric (and timestamp) feature, in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub ranges: Vec<NumericRange>,
}

impl NormalizationParams {
    pub fn range(&self, feature: &str) -> Option<&NumericRange> {
        self.ranges.iter().find(|r| r.feature == feature)
    }
}

pub fn normalize_fit(data: &Dataset) -> Result<NormalizationParams> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ranges = data
        .profile()
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| f.kind.is_numeric())
        .map(|(j, f)| {
            let (min, max) = data
                .instances()
                .iter()
                .filter_map(|inst| inst.values[j].num())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            NumericRange {
                feature: f.name.clone(),
                min,
                max,
            }
        })
        .collect();
    Ok(NormalizationParams { ranges })
}

/// Min-max scales numeric cells into `[0, 1]`, clamping values outside the
/// fitted range. Constant features map to 0.
pub fn normalize_apply(params: &NormalizationParams, data: &Dataset) -> Result<Dataset> {
    let numeric: Vec<usize> = data
        .profile()
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| f.kind.is_numeric())
        .map(|(j, _)| j)
        .collect();
    let matches = numeric.len() == params.ranges.len()
        && numeric
            .iter()
            .zip(&params.ranges)
            .all(|(&j, r)| data.profile().features[j].name == r.feature);
    if !matches {
        return Err(Error::schema(
            "normalization parameters were fitted on a different schema",
        ));
    }
    let instances = data
        .instances()
        .iter()
        .map(|inst| {
            let mut inst = inst.clone();
            for (&j, r) in numeric.iter().zip(&params.ranges) {
                if let Value::Num(x) = inst.values[j] {
                    inst.values[j] = Value::Num(scale(x, r.min, r.max));
                }
            }
            inst
        })
        .collect();
    Ok(Dataset::new_unchecked(data.profile().clone(), instances))
}

fn scale(x: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((x - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}
