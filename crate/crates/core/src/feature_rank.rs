//! Per-feature symmetric uncertainty against the attack type, used to find
//! and drop the single most class-correlated feature.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Value};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    /// Descending by score; ties keep schema order.
    pub scores: Vec<FeatureScore>,
    pub bins: usize,
}

impl FeatureRanking {
    pub fn top(&self) -> Option<&FeatureScore> {
        self.scores.first()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["feature", "score"])?;
        for s in &self.scores {
            w.write_record([s.feature.as_str(), &s.score.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// SU between one feature column and a label column. Numeric cells are cut
/// into `bins` equal-frequency bins first.
pub fn symmetric_uncertainty<L: AsRef<str>>(values: &[Value], labels: &[L], bins: usize) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature values for {} labels",
            values.len(),
            labels.len()
        )));
    }
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if bins == 0 {
        return Err(Error::invalid("at least one bin is required"));
    }
    let x: Vec<usize> = if values.iter().all(|v| v.num().is_some()) {
        let xs: Vec<f64> = values.iter().map(|v| v.num().unwrap()).collect();
        equal_frequency_bins(&xs, bins)
    } else if values.iter().all(|v| v.cat().is_some()) {
        values.iter().map(|v| v.cat().unwrap()).collect()
    } else {
        return Err(Error::invalid("feature column mixes numeric and categorical cells"));
    };
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let y: Vec<usize> = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l.as_ref()).or_insert(next)
        })
        .collect();
    Ok(symmetric_uncertainty_discrete(&x, &y))
}

/// SU of two discrete columns of equal length.
pub fn symmetric_uncertainty_discrete(x: &[usize], y: &[usize]) -> f64 {
    assert_eq!(x.len(), y.len(), "columns differ in length");
    let n = x.len();
    let mut margin_x: HashMap<usize, usize> = HashMap::new();
    let mut margin_y: HashMap<usize, usize> = HashMap::new();
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *margin_x.entry(a).or_default() += 1;
        *margin_y.entry(b).or_default() += 1;
        *joint.entry((a, b)).or_default() += 1;
    }
    let hx = entropy(margin_x.values(), n);
    let hy = entropy(margin_y.values(), n);
    let hxy = entropy(joint.values(), n);
    let denom = hx + hy;
    if denom <= 0.0 {
        return 0.0;
    }
    (2.0 * (hx + hy - hxy) / denom).clamp(0.0, 1.0)
}

fn entropy<'a>(counts: impl Iterator<Item = &'a usize>, n: usize) -> f64 {
    // Sorted so the sum does not depend on hash iteration order.
    let mut counts: Vec<usize> = counts.copied().collect();
    counts.sort_unstable();
    let n = n as f64;
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Bin index of each value; cut points at the sample quantiles, with equal
/// cut points merged.
fn equal_frequency_bins(xs: &[f64], bins: usize) -> Vec<usize> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts: Vec<f64> = (1..bins).map(|b| sorted[b * n / bins]).collect();
    cuts.dedup();
    // A cut at the minimum would only open an empty first bin.
    cuts.retain(|&c| c > sorted[0]);
    xs.iter().map(|&x| cuts.partition_point(|&c| c <= x)).collect()
}

pub fn rank_features(data: &Dataset) -> Result<FeatureRanking> {
    rank_features_with(data, DEFAULT_BINS)
}

pub fn rank_features_with(data: &Dataset, bins: usize) -> Result<FeatureRanking> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels: Vec<&str> = data.instances().iter().map(|i| i.attack_type.as_str()).collect();
    let mut scores = data
        .profile()
        .features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let column: Vec<Value> = data.instances().iter().map(|i| i.values[j]).collect();
            Ok(FeatureScore {
                feature: f.name.clone(),
                score: symmetric_uncertainty(&column, &labels, bins)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(FeatureRanking { scores, bins })
}

/// Removes one feature column; see [`Dataset::drop_feature`].
pub fn drop_feature(data: &Dataset, name: &str) -> Result<Dataset> {
    data.drop_feature(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        synthesize, ClassCounts, Device, DeviceProfile, FeatureKind, FeatureSchema, Instance, Scale,
    };
    use proptest::prelude::*;

    fn cats(xs: &[usize]) -> Vec<Value> {
        xs.iter().map(|&c| Value::Cat(c)).collect()
    }

    #[test]
    fn identical_and_constant() {
        let labels = ["normal", "ddos", "xss", "ddos"];
        assert!((symmetric_uncertainty(&cats(&[0, 1, 2, 1]), &labels, 10).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(symmetric_uncertainty(&cats(&[0, 0, 0, 0]), &labels, 10).unwrap(), 0.0);
        let nums: Vec<Value> = [3.0; 4].iter().map(|&x| Value::Num(x)).collect();
        assert_eq!(symmetric_uncertainty(&nums, &labels, 10).unwrap(), 0.0);
    }

    #[test]
    fn contingency_tables() {
        let mut x = vec![0; 50];
        x.extend(vec![1; 50]);
        let mut y = vec!["normal"; 50];
        y.extend(vec!["ddos"; 50]);
        assert!((symmetric_uncertainty(&cats(&x), &y, 10).unwrap() - 1.0).abs() < 1e-12);

        let x: Vec<usize> = (0..100).map(|i| i / 50).collect();
        let y: Vec<&str> = (0..100).map(|i| if (i / 25) % 2 == 0 { "normal" } else { "ddos" }).collect();
        assert!(symmetric_uncertainty(&cats(&x), &y, 10).unwrap().abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_and_mixed_cells() {
        assert!(symmetric_uncertainty(&cats(&[0, 1]), &["a"], 10).is_err());
        assert!(symmetric_uncertainty(&[Value::Cat(0), Value::Num(1.0)], &["a", "b"], 10).is_err());
    }

    #[test]
    fn equal_frequency_binning() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b = equal_frequency_bins(&xs, 10);
        for k in 0..10 {
            assert_eq!(b.iter().filter(|&&v| v == k).count(), 10);
        }
        // Heavy duplicates collapse cut points, and equal values share a bin.
        let xs = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        let b = equal_frequency_bins(&xs, 10);
        assert_eq!(b, [0, 0, 0, 0, 0, 0, 0, 0, 1, 2]);
    }

    fn profile() -> DeviceProfile {
        DeviceProfile::new(
            "toy",
            vec![
                FeatureSchema::nominal("noise", &["a", "b"]),
                FeatureSchema::nominal("signal", &["a", "b"]),
                FeatureSchema::new("flat", FeatureKind::Numeric),
            ],
            &["ddos"],
        )
        .unwrap()
    }

    #[test]
    fn ranks_determining_feature_first() {
        let rows = (0..40)
            .map(|i| {
                let class = if i % 2 == 0 { "normal" } else { "ddos" };
                Instance::new(vec![Value::Cat((i / 2) % 2), Value::Cat(i % 2), Value::Num(1.0)], class)
            })
            .collect();
        let d = Dataset::new(profile(), rows).unwrap();
        let r = rank_features(&d).unwrap();
        assert_eq!(r.top().unwrap().feature, "signal");
        assert!((r.top().unwrap().score - 1.0).abs() < 1e-12);
        assert_eq!(r.scores[1].feature, "noise");
        assert_eq!(r.scores[2].feature, "flat");

        let dropped = drop_feature(&d, "signal").unwrap();
        assert!(rank_features(&dropped).unwrap().scores.iter().all(|s| s.feature != "signal"));
        assert!(drop_feature(&dropped, "signal").is_err());
        assert!(drop_feature(&d, "type").is_err());
        assert_eq!(dropped.len(), d.len());
    }

    #[test]
    fn constant_features_keep_schema_order() {
        let rows = (0..6)
            .map(|i| Instance::new(vec![Value::Cat(0), Value::Cat(1), Value::Num(2.0)], if i < 3 { "normal" } else { "ddos" }))
            .collect();
        let d = Dataset::new(profile(), rows).unwrap();
        let r = rank_features(&d).unwrap();
        let names: Vec<&str> = r.scores.iter().map(|s| s.feature.as_str()).collect();
        assert_eq!(names, ["noise", "signal", "flat"]);
        assert!(r.scores.iter().all(|s| s.score == 0.0));
    }

    #[test]
    fn synthetic_fridge_ranks_date_first() {
        let d = synthesize(
            &Device::Fridge.profile(),
            &ClassCounts::table(Device::Fridge, Scale::TrainTest),
            3,
            6.0,
        )
        .unwrap();
        let r = rank_features(&d).unwrap();
        assert_eq!(r.top().unwrap().feature, "date");
        let dropped = drop_feature(&d, "date").unwrap();
        let names: Vec<&str> = dropped.profile().features.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["time", "fridge_temperature", "temp_condition"]);
    }

    #[test]
    fn csv_and_json_output() {
        let r = FeatureRanking {
            scores: vec![
                FeatureScore { feature: "date".into(), score: 0.75 },
                FeatureScore { feature: "time".into(), score: 0.125 },
            ],
            bins: 10,
        };
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "feature,score\ndate,0.75\ntime,0.125\n");
        let back: FeatureRanking = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn su_symmetric_and_bounded(pairs in prop::collection::vec((0usize..5, 0usize..4), 1..200)) {
            let (x, y): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let a = symmetric_uncertainty_discrete(&x, &y);
            let b = symmetric_uncertainty_discrete(&y, &x);
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn su_bounded_on_numeric(xs in prop::collection::vec(-100.0f64..100.0, 1..200), bins in 1usize..20) {
            let labels: Vec<String> = xs.iter().map(|x| format!("{}", (x.abs() as i64) % 3)).collect();
            let v: Vec<Value> = xs.iter().map(|&x| Value::Num(x)).collect();
            let s = symmetric_uncertainty(&v, &labels, bins).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
