//! Numeric embedding shared by k-means and KNN.

use serde::{Deserialize, Serialize};

use crate::dataset::{DeviceProfile, Instance, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFeature {
    pub name: String,
    /// Training-time categories; `None` for numeric features.
    pub categories: Option<Vec<String>>,
}

/// Numeric cells pass through; categorical cells become one-hot blocks over
/// the categories known when the encoder was built. Category indices past
/// the block (values first seen at test time) encode to all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub features: Vec<EncodedFeature>,
}

impl Encoder {
    pub fn new(profile: &DeviceProfile) -> Self {
        let features = profile
            .features
            .iter()
            .map(|f| EncodedFeature {
                name: f.name.clone(),
                categories: f.kind.is_categorical().then(|| f.categories.clone()),
            })
            .collect();
        Encoder { features }
    }

    pub fn dim(&self) -> usize {
        self.features
            .iter()
            .map(|f| f.categories.as_ref().map_or(1, Vec::len))
            .sum()
    }

    pub fn columns(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    /// Checks that `profile` has the same columns and extends every
    /// training category list.
    pub fn check(&self, profile: &DeviceProfile) -> Result<()> {
        let ok = self.features.len() == profile.features.len()
            && self.features.iter().zip(&profile.features).all(|(e, f)| {
                e.name == f.name
                    && match &e.categories {
                        None => f.kind.is_numeric(),
                        Some(cats) => {
                            f.kind.is_categorical() && f.categories.starts_with(cats)
                        }
                    }
            });
        if ok {
            Ok(())
        } else {
            Err(Error::schema(format!(
                "data schema does not match the fitted feature columns ({})",
                self.columns().join(", ")
            )))
        }
    }

    pub fn encode(&self, instance: &Instance) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.encode_into(instance, &mut out);
        out
    }

    /// Writes the encoding into `out`, which must be `dim()` long.
    pub fn encode_into(&self, instance: &Instance, out: &mut [f64]) {
        out.fill(0.0);
        let mut at = 0;
        for (f, v) in self.features.iter().zip(&instance.values) {
            match (&f.categories, *v) {
                (None, Value::Num(x)) => {
                    out[at] = x;
                    at += 1;
                }
                (Some(cats), Value::Cat(c)) => {
                    if c < cats.len() {
                        out[at + c] = 1.0;
                    }
                    at += cats.len();
                }
                _ => panic!("instance does not match encoder schema at `{}`", f.name),
            }
        }
    }

    /// Row-major matrix of every instance's encoding.
    pub fn encode_all(&self, instances: &[Instance]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; instances.len() * d];
        if d > 0 {
            for (inst, row) in instances.iter().zip(out.chunks_exact_mut(d)) {
                self.encode_into(inst, row);
            }
        }
        out
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureKind, FeatureSchema};

    fn profile() -> DeviceProfile {
        DeviceProfile::new(
            "toy",
            vec![
                FeatureSchema::new("x", FeatureKind::Numeric),
                FeatureSchema::nominal("c", &["high", "low"]),
            ],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn one_hot_and_passthrough() {
        let e = Encoder::new(&profile());
        assert_eq!(e.dim(), 3);
        let inst = Instance::new(vec![Value::Num(0.5), Value::Cat(0)], "normal");
        assert_eq!(e.encode(&inst), [0.5, 1.0, 0.0]);
    }

    #[test]
    fn unseen_category_is_all_zero() {
        let e = Encoder::new(&profile());
        let inst = Instance::new(vec![Value::Num(0.5), Value::Cat(2)], "normal");
        let v = e.encode(&inst);
        assert_eq!(v, [0.5, 0.0, 0.0]);
        assert!(squared_distance(&v, &[0.0, 1.0, 0.0]).is_finite());
    }

    #[test]
    fn check_accepts_extended_categories_only() {
        let e = Encoder::new(&profile());
        let mut p = profile();
        p.features[1].intern("medium");
        assert!(e.check(&p).is_ok());
        p.features[1].categories.swap(0, 1);
        assert!(e.check(&p).is_err());
        p.features.pop();
        assert!(e.check(&p).is_err());
    }
}
