//! Seeded generator for ToN_IoT-shaped telemetry.
//!
//! Every class gets its own signature: numeric features are Gaussian with
//! unit standard deviation around a class mean placed on an integer lattice
//! scaled by `separation`, so any two class means are at least `separation`
//! standard deviations apart. Each nominal feature has a dominant category per
//! class, and each class logs on its own campaign date.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, Device, DeviceProfile, FeatureKind, Instance, Scale, Value};
use crate::error::{Error, Result};

/// Share of a class's nominal values that stray from its dominant category.
const NOMINAL_NOISE: f64 = 0.01;

/// Requested row count per class. Signed so that invalid requests coming from
/// configuration files can be reported rather than wrapped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassCounts(pub Vec<(String, i64)>);

impl ClassCounts {
    /// The per-class table for a device at the given scale.
    pub fn table(device: Device, scale: Scale) -> Self {
        ClassCounts(
            device
                .class_counts(scale)
                .into_iter()
                .map(|(c, n)| (c.to_string(), n as i64))
                .collect(),
        )
    }

    pub fn total(&self) -> i64 {
        self.0.iter().map(|(_, n)| n).sum()
    }
}

impl<S: Into<String>> FromIterator<(S, i64)> for ClassCounts {
    fn from_iter<I: IntoIterator<Item = (S, i64)>>(iter: I) -> Self {
        ClassCounts(iter.into_iter().map(|(c, n)| (c.into(), n)).collect())
    }
}

pub fn synthesize(
    profile: &DeviceProfile,
    counts: &ClassCounts,
    seed: u64,
    separation: f64,
) -> Result<Dataset> {
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::invalid(format!(
            "separation must be a finite number >= 0, got {separation}"
        )));
    }
    let classes = profile.classes();
    let mut per_class = vec![0usize; classes.len()];
    for (i, (class, n)) in counts.0.iter().enumerate() {
        let c = classes.iter().position(|k| k == class).ok_or_else(|| {
            Error::invalid(format!(
                "class `{class}` is not part of the {} profile ({})",
                profile.device,
                classes.join(", ")
            ))
        })?;
        if counts.0[..i].iter().any(|(k, _)| k == class) {
            return Err(Error::invalid(format!("class `{class}` listed twice")));
        }
        if *n < 0 {
            return Err(Error::invalid(format!("negative count {n} for class `{class}`")));
        }
        per_class[c] = *n as usize;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profile = profile.clone();
    let numeric: Vec<usize> = profile
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| f.kind.is_numeric())
        .map(|(j, _)| j)
        .collect();
    let lattice = lattice_points(numeric.len(), classes.len());

    let mut signatures: Vec<Vec<Signature>> = Vec::with_capacity(profile.features.len());
    for (j, feature) in profile.features.iter_mut().enumerate() {
        let sig = match feature.kind {
            FeatureKind::Numeric | FeatureKind::Timestamp => {
                let axis = numeric.iter().position(|&k| k == j).unwrap();
                let extent = lattice.iter().map(|p| p[axis].abs()).max().unwrap_or(0) as f64;
                let (center, unit) = natural_units(&feature.name, feature.kind, extent * separation);
                lattice
                    .iter()
                    .map(|p| Signature::Gaussian {
                        mean: center + unit * separation * p[axis] as f64,
                        sd: unit,
                        time: feature.kind == FeatureKind::Timestamp,
                    })
                    .collect()
            }
            FeatureKind::Datestamp => {
                let given = feature.categories.clone();
                (0..classes.len())
                    .map(|c| {
                        let date = if given.is_empty() {
                            campaign_date(c)
                        } else {
                            given[c % given.len()].clone()
                        };
                        Signature::Constant(feature.intern(&date))
                    })
                    .collect()
            }
            FeatureKind::Nominal => {
                if feature.categories.is_empty() {
                    for c in default_vocabulary(&feature.name) {
                        feature.intern(c);
                    }
                }
                let m = feature.categories.len();
                (0..classes.len())
                    .map(|_| {
                        let dominant = rng.random_range(0..m);
                        let rest = if m > 1 { NOMINAL_NOISE / (m - 1) as f64 } else { 0.0 };
                        let mut acc = 0.0;
                        let cdf = (0..m)
                            .map(|c| {
                                acc += if c == dominant { 1.0 - NOMINAL_NOISE } else { rest };
                                acc
                            })
                            .collect();
                        Signature::Table(cdf)
                    })
                    .collect()
            }
        };
        signatures.push(sig);
    }

    let mut instances = Vec::with_capacity(per_class.iter().sum());
    for (c, &n) in per_class.iter().enumerate() {
        for _ in 0..n {
            let values = signatures
                .iter()
                .map(|sig| sig[c].draw(&mut rng))
                .collect();
            instances.push(Instance::new(values, &classes[c]));
        }
    }
    instances.shuffle(&mut rng);
    Dataset::new(profile, instances)
}

enum Signature {
    Gaussian { mean: f64, sd: f64, time: bool },
    Table(Vec<f64>),
    Constant(usize),
}

impl Signature {
    fn draw(&self, rng: &mut impl Rng) -> Value {
        match self {
            Signature::Gaussian { mean, sd, time } => {
                let z: f64 = StandardNormal.sample(rng);
                let x = mean + sd * z;
                if *time {
                    Value::Num(x.round().clamp(0.0, 86_399.0))
                } else {
                    Value::Num((x * 1e4).round() / 1e4)
                }
            }
            Signature::Table(cdf) => {
                let u: f64 = rng.random();
                Value::Cat(cdf.iter().position(|&p| u < p).unwrap_or(cdf.len() - 1))
            }
            Signature::Constant(c) => Value::Cat(*c),
        }
    }
}

/// `count` distinct points of Z^dim, nearest the origin first.
fn lattice_points(dim: usize, count: usize) -> Vec<Vec<i64>> {
    if dim == 0 {
        return vec![Vec::new(); count];
    }
    let mut radius = 0i64;
    while ((2 * radius + 1) as usize).pow(dim as u32) < count {
        radius += 1;
    }
    radius += 1;
    let side = 2 * radius + 1;
    let total = (side as usize).pow(dim as u32);
    let mut points: Vec<Vec<i64>> = (0..total)
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let v = (k % side as usize) as i64 - radius;
                    k /= side as usize;
                    v
                })
                .collect()
        })
        .collect();
    points.sort_by_key(|p| (p.iter().map(|v| v * v).sum::<i64>(), p.clone()));
    points.truncate(count);
    points
}

/// Center and one-standard-deviation unit for a feature, in the units its
/// CSV column uses. Times are scaled so every class fits inside one day.
fn natural_units(name: &str, kind: FeatureKind, spread: f64) -> (f64, f64) {
    if kind == FeatureKind::Timestamp {
        return (43_200.0, 43_200.0 / (spread + 4.0));
    }
    match name {
        "fridge_temperature" => (7.0, 0.5),
        "latitude" => (35.0, 0.5),
        "longitude" => (140.0, 0.5),
        "motion_status" => (0.5, 0.1),
        "current_temp" => (25.0, 0.5),
        "temperature" => (30.0, 0.5),
        "pressure" => (1000.0, 1.0),
        "humidity" => (50.0, 1.0),
        n if n.starts_with("FC") => (32_768.0, 1000.0),
        _ => (0.0, 1.0),
    }
}

fn default_vocabulary(name: &str) -> &'static [&'static str] {
    match name {
        "temp_condition" => &["high", "low"],
        "door_state" => &["closed", "open"],
        "light_status" | "thermostat_status" => &["off", "on"],
        _ => &["false", "true"],
    }
}

fn campaign_date(class: usize) -> String {
    format!("{:02}-Apr-19", 1 + 3 * class)
}
