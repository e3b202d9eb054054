//! Lloyd's k-means over the encoded feature space, plus the diagnostics and
//! cluster-feature augmentation used by the hybrid pipeline.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DeviceProfile, FeatureSchema, Instance};
use crate::encode::{squared_distance, Encoder};
use crate::error::{Error, Result};

pub const CLUSTER_FEATURE: &str = "cluster";
pub const DEFAULT_MAX_ITERATIONS: usize = 500;

/// One cluster per attack type plus one for normal traffic.
pub fn cluster_count(profile: &DeviceProfile) -> usize {
    profile.attack_types.len() + 1
}

pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// k distinct training points drawn uniformly.
    Random,
    /// k distinct training points drawn with probability proportional to
    /// squared distance from the points already chosen.
    #[default]
    PlusPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub init: Init,
    /// Independent seeded runs; the one with the lowest SSE is kept.
    pub restarts: usize,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            init: Init::default(),
            restarts: DEFAULT_RESTARTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub feature_columns: Vec<String>,
    pub encoder: Encoder,
    pub centroids: Vec<Vec<f64>>,
    pub seed: u64,
    pub iterations_run: usize,
    pub final_sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterClassMapping {
    /// Majority attack type per cluster; `None` for clusters nobody joined.
    pub majority: Vec<Option<String>>,
    pub sizes: Vec<usize>,
    pub incorrectly_clustered: usize,
    pub purity: f64,
}

pub fn fit(data: &Dataset, k: usize, seed: u64, max_iterations: usize) -> Result<ClusterModel> {
    let params = KMeansParams {
        max_iterations,
        ..KMeansParams::new(k, seed)
    };
    fit_with(data, &params, |_, _, _| {})
}

/// Fits with explicit parameters. `trace` receives `(restart, iteration, sse)`
/// for each run's starting centroids (iteration 0) and after every Lloyd update.
pub fn fit_with(
    data: &Dataset,
    params: &KMeansParams,
    mut trace: impl FnMut(usize, usize, f64),
) -> Result<ClusterModel> {
    let n = data.len();
    let k = params.k;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "k must lie in 1..={n} for {n} instances, got {k}"
        )));
    }
    if params.restarts == 0 {
        return Err(Error::invalid("k-means needs at least one restart"));
    }
    let encoder = Encoder::new(data.profile());
    let d = encoder.dim();
    let points = encoder.encode_all(data.instances());

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Vec<Vec<f64>>, usize, f64)> = None;
    for restart in 0..params.restarts {
        let seeds = match params.init {
            Init::Random => random_init(n, k, &points, &mut rng),
            Init::PlusPlus => plus_plus_init(n, k, &points, &mut rng),
        };
        let run = lloyd(&points, n, d, seeds, params.max_iterations, |it, sse| {
            trace(restart, it, sse)
        });
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (centroids, iterations, _) = best.unwrap();

    let mut model = ClusterModel {
        k,
        feature_columns: encoder.columns(),
        encoder,
        centroids,
        seed: params.seed,
        iterations_run: iterations,
        final_sse: 0.0,
    };
    model.final_sse = sse(&model, data);
    Ok(model)
}

/// One Lloyd run from the given seed points. Returns the centroids, the
/// number of updates and the SSE of the final assignment.
fn lloyd(
    points: &[f64],
    n: usize,
    d: usize,
    seeds: Vec<usize>,
    max_iterations: usize,
    mut trace: impl FnMut(usize, f64),
) -> (Vec<Vec<f64>>, usize, f64) {
    let point = |i: usize| &points[i * d..(i + 1) * d];
    let k = seeds.len();
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&i| point(i).to_vec()).collect();

    let mut assignment = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut iterations = 0;
    loop {
        let mut changed = false;
        let mut sse = 0.0;
        for i in 0..n {
            let (j, dj) = nearest(&centroids, point(i));
            if assignment[i] != j {
                assignment[i] = j;
                changed = true;
            }
            dist[i] = dj;
            sse += dj;
        }
        trace(iterations, sse);
        if !changed || iterations >= max_iterations {
            return (centroids, iterations, sse);
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; d]; k];
        let mut sizes = vec![0usize; k];
        for (i, &j) in assignment.iter().enumerate() {
            sizes[j] += 1;
            for (s, x) in sums[j].iter_mut().zip(point(i)) {
                *s += x;
            }
        }
        for j in 0..k {
            if sizes[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / sizes[j] as f64).collect();
            }
        }
        // Re-seed empty clusters on the points worst served by their new centroid.
        let empty: Vec<usize> = (0..k).filter(|&j| sizes[j] == 0).collect();
        if !empty.is_empty() {
            for i in 0..n {
                dist[i] = squared_distance(point(i), &centroids[assignment[i]]);
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
            for (j, &i) in empty.iter().zip(&order) {
                centroids[*j] = point(i).to_vec();
            }
        }
    }
}

fn random_init(
    n: usize,
    k: usize,
    points: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let d = points.len() / n;
    let point = |i: usize| &points[i * d..(i + 1) * d];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    // Prefer points with distinct coordinates so no two centroids start equal.
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut duplicates = Vec::new();
    for &i in &order {
        if chosen.len() == k {
            break;
        }
        if chosen.iter().any(|&c| point(c) == point(i)) {
            duplicates.push(i);
        } else {
            chosen.push(i);
        }
    }
    let missing = k - chosen.len();
    chosen.extend_from_slice(&duplicates[..missing]);
    chosen
}

fn plus_plus_init(
    n: usize,
    k: usize,
    points: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let d = points.len() / n;
    let point = |i: usize| &points[i * d..(i + 1) * d];
    let mut chosen = vec![rng.random_range(0..n)];
    let mut best: Vec<f64> = (0..n)
        .map(|i| squared_distance(point(i), point(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &b) in best.iter().enumerate() {
                if u < b {
                    pick = i;
                    break;
                }
                u -= b;
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(squared_distance(point(i), point(next)));
        }
    }
    chosen
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let dj = squared_distance(p, c);
        if dj < best.1 {
            best = (j, dj);
        }
    }
    best
}

/// Nearest centroid; ties go to the lowest index.
pub fn assign(model: &ClusterModel, instance: &Instance) -> usize {
    nearest(&model.centroids, &model.encoder.encode(instance)).0
}

pub fn sse(model: &ClusterModel, data: &Dataset) -> f64 {
    let mut buf = vec![0.0; model.encoder.dim()];
    data.instances()
        .iter()
        .map(|inst| {
            model.encoder.encode_into(inst, &mut buf);
            nearest(&model.centroids, &buf).1
        })
        .sum()
}

/// Diagnostic mapping of clusters to attack types. Labels play no part in
/// fitting; they are only read here.
pub fn class_to_cluster(model: &ClusterModel, data: &Dataset) -> ClusterClassMapping {
    let classes = data.profile().classes();
    let class_of = |inst: &Instance| classes.iter().position(|c| *c == inst.attack_type).unwrap();
    let mut table = vec![vec![0usize; classes.len()]; model.k];
    let mut global = vec![0usize; classes.len()];
    for inst in data.instances() {
        let c = class_of(inst);
        table[assign(model, inst)][c] += 1;
        global[c] += 1;
    }
    let mut incorrect = 0;
    let mut majority = Vec::with_capacity(model.k);
    let mut sizes = Vec::with_capacity(model.k);
    for row in &table {
        let size: usize = row.iter().sum();
        sizes.push(size);
        if size == 0 {
            majority.push(None);
            continue;
        }
        let best = (0..classes.len())
            .max_by(|&a, &b| {
                row[a]
                    .cmp(&row[b])
                    .then(global[a].cmp(&global[b]))
                    .then(classes[b].cmp(&classes[a]))
            })
            .unwrap();
        incorrect += size - row[best];
        majority.push(Some(classes[best].clone()));
    }
    let n = data.len();
    ClusterClassMapping {
        majority,
        sizes,
        incorrectly_clustered: incorrect,
        purity: if n == 0 { 1.0 } else { 1.0 - incorrect as f64 / n as f64 },
    }
}

/// Appends the nominal `cluster` feature holding each instance's assignment.
pub fn augment(data: &Dataset, model: &ClusterModel) -> Result<Dataset> {
    model.encoder.check(data.profile())?;
    let names: Vec<String> = (0..model.k).map(|j| format!("c{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut buf = vec![0.0; model.encoder.dim()];
    let values = data
        .instances()
        .iter()
        .map(|inst| {
            model.encoder.encode_into(inst, &mut buf);
            nearest(&model.centroids, &buf).0
        })
        .collect();
    data.with_feature(FeatureSchema::nominal(CLUSTER_FEATURE, &refs), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        synthesize, ClassCounts, Device, FeatureKind, Scale, Value,
    };
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Dataset {
        let profile = DeviceProfile::new(
            "toy",
            vec![FeatureSchema::new("x", FeatureKind::Numeric)],
            &["ddos"],
        )
        .unwrap();
        let rows = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| Instance::new(vec![Value::Num(x)], if i % 2 == 0 { "normal" } else { "ddos" }))
            .collect();
        Dataset::new(profile, rows).unwrap()
    }

    fn model_with(centroids: Vec<Vec<f64>>) -> ClusterModel {
        let d = line(&[0.0]);
        ClusterModel {
            k: centroids.len(),
            feature_columns: vec!["x".into()],
            encoder: Encoder::new(d.profile()),
            centroids,
            seed: 0,
            iterations_run: 0,
            final_sse: 0.0,
        }
    }

    fn num(x: f64) -> Instance {
        Instance::new(vec![Value::Num(x)], "normal")
    }

    #[test]
    fn cluster_count_rule() {
        assert_eq!(cluster_count(&Device::Fridge.profile()), 7);
        assert_eq!(cluster_count(&Device::GarageDoor.profile()), 8);
        let normal_only = DeviceProfile::new("toy", vec![], &[]).unwrap();
        assert_eq!(cluster_count(&normal_only), 1);
    }

    #[test]
    fn k_equal_n_is_zero_sse() {
        let d = line(&[3.0, -1.0, 7.5, 2.0]);
        let m = fit(&d, 4, 5, 100).unwrap();
        assert_eq!(m.final_sse, 0.0);
    }

    #[test]
    fn invalid_k() {
        let d = line(&[1.0, 2.0]);
        assert!(fit(&d, 0, 0, 10).is_err());
        assert!(fit(&d, 3, 0, 10).is_err());
    }

    #[test]
    fn assign_ties_and_exact_hits() {
        let m = model_with(vec![vec![0.5], vec![10.5]]);
        assert_eq!(assign(&m, &num(2.0)), 0);
        assert_eq!(assign(&m, &num(10.5)), 1);
        let m = model_with(vec![vec![9.0], vec![0.0], vec![5.0], vec![3.0], vec![1.0], vec![4.0]]);
        assert_eq!(assign(&m, &num(3.0)), 3);
        assert_eq!(assign(&m, &num(2.0)), 3);
        let m = model_with(vec![vec![9.0], vec![-1.0], vec![5.0], vec![3.0], vec![1.0]]);
        assert_eq!(assign(&m, &num(0.0)), 1);
    }

    #[test]
    fn sse_examples() {
        let m = model_with(vec![vec![0.5], vec![10.5]]);
        assert_eq!(sse(&m, &line(&[0.0, 1.0, 10.0, 11.0])), 1.0);
        assert_eq!(sse(&m, &line(&[0.5, 10.5])), 0.0);
        let m = model_with(vec![vec![0.0]]);
        assert_eq!(sse(&m, &line(&[2.0])), 4.0);
    }

    #[test]
    fn mapping_majority_and_ties() {
        let m = model_with(vec![vec![0.0], vec![100.0]]);
        // Cluster 0: three ddos and one normal; cluster 1: one of each.
        let profile = line(&[]).profile().clone();
        let rows = vec![
            Instance::new(vec![Value::Num(0.0)], "ddos"),
            Instance::new(vec![Value::Num(0.1)], "ddos"),
            Instance::new(vec![Value::Num(0.2)], "ddos"),
            Instance::new(vec![Value::Num(0.3)], "normal"),
            Instance::new(vec![Value::Num(100.0)], "normal"),
            Instance::new(vec![Value::Num(100.0)], "ddos"),
        ];
        let d = Dataset::new(profile, rows).unwrap();
        let map = class_to_cluster(&m, &d);
        assert_eq!(map.majority[0].as_deref(), Some("ddos"));
        // Tie broken by global frequency: ddos (4) beats normal (2).
        assert_eq!(map.majority[1].as_deref(), Some("ddos"));
        assert_eq!(map.incorrectly_clustered, 2);
        assert!((map.purity - (1.0 - 2.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn mapping_lexicographic_tie() {
        let m = model_with(vec![vec![0.0]]);
        let d = line(&[0.0, 0.0]);
        let map = class_to_cluster(&m, &d);
        assert_eq!(map.majority[0].as_deref(), Some("ddos"));
    }

    #[test]
    fn separated_two_class_purity() {
        let d = line(&[0.0, 100.0, 0.1, 100.1, 0.2, 100.2]);
        let m = fit(&d, 2, 1, 100).unwrap();
        let map = class_to_cluster(&m, &d);
        assert_eq!(map.purity, 1.0);
        assert_eq!(map.incorrectly_clustered, 0);
    }

    #[test]
    fn fridge_synthetic_purity_and_augment() {
        let data = synthesize(
            &Device::Fridge.profile(),
            &ClassCounts::table(Device::Fridge, Scale::TrainTest),
            11,
            6.0,
        )
        .unwrap();
        let data = crate::dataset::normalize_apply(
            &crate::dataset::normalize_fit(&data).unwrap(),
            &data,
        )
        .unwrap();
        let k = cluster_count(data.profile());
        let m = fit(&data, k, 42, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!(class_to_cluster(&m, &data).purity >= 0.95);

        let aug = augment(&data, &m).unwrap();
        assert_eq!(aug.profile().features.len(), 5);
        let cluster = aug.profile().features.last().unwrap();
        assert_eq!(cluster.name, "cluster");
        assert_eq!(cluster.categories.len(), 7);
        assert!(aug.instances().iter().all(|i| i.values[4].cat().unwrap() < 7));
        assert_eq!(aug.len(), data.len());
        assert!(augment(&aug, &m).is_err());
    }

    #[test]
    fn augment_keeps_labels() {
        let d = line(&[0.0, 1.0, 10.0, 11.0]);
        let m = fit(&d, 2, 0, 100).unwrap();
        let aug = augment(&d, &m).unwrap();
        for (a, b) in aug.instances().iter().zip(d.instances()) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.attack_type, b.attack_type);
            assert_eq!(a.values[..1], b.values[..]);
        }
    }

    #[test]
    fn serializes_to_json() {
        let d = line(&[0.0, 1.0, 10.0, 11.0]);
        let m = fit(&d, 2, 3, 100).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: ClusterModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        for key in ["k", "feature_columns", "encoder", "centroids", "seed", "iterations_run", "final_sse"] {
            assert!(json.contains(&format!("\"{key}\"")), "{key}");
        }
    }

    #[test]
    fn plus_plus_init_also_converges() {
        let d = line(&[0.0, 1.0, 10.0, 11.0]);
        let params = KMeansParams {
            init: Init::PlusPlus,
            ..KMeansParams::new(2, 9)
        };
        let m = fit_with(&d, &params, |_, _, _| {}).unwrap();
        assert_eq!(m.final_sse, 1.0);
    }

    fn cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, u64)> {
        (1usize..5, 2usize..60).prop_flat_map(|(d, n)| {
            (
                prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n),
                1usize..=n.min(6),
                any::<u64>(),
            )
        })
    }

    fn dataset(rows: &[Vec<f64>]) -> Dataset {
        let d = rows[0].len();
        let features = (0..d)
            .map(|j| FeatureSchema::new(&format!("x{j}"), FeatureKind::Numeric))
            .collect();
        let profile = DeviceProfile::new("toy", features, &[]).unwrap();
        let rows = rows
            .iter()
            .map(|r| Instance::new(r.iter().map(|&x| Value::Num(x)).collect(), "normal"))
            .collect();
        Dataset::new(profile, rows).unwrap()
    }

    proptest! {
        #[test]
        fn fit_properties((rows, k, seed) in cloud()) {
            let data = dataset(&rows);
            let mut trace = Vec::new();
            for init in [Init::Random, Init::PlusPlus] {
                let params = KMeansParams { init, ..KMeansParams::new(k, seed) };
                fit_with(&data, &params, |r, _, s| trace.push((r, s))).unwrap();
            }
            for w in trace.windows(2) {
                prop_assert!(w[0].0 != w[1].0 || w[1].1 <= w[0].1, "SSE rose: {:?}", trace);
            }
            let m = fit_with(&data, &KMeansParams::new(k, seed), |_, _, _| {}).unwrap();
            prop_assert_eq!(&m, &fit_with(&data, &KMeansParams::new(k, seed), |_, _, _| {}).unwrap());
            prop_assert_eq!(m.centroids.len(), k);

            // Converged centroids are the means of their members.
            if m.iterations_run < DEFAULT_MAX_ITERATIONS {
                let assigned: Vec<usize> = data.instances().iter().map(|i| assign(&m, i)).collect();
                for (j, c) in m.centroids.iter().enumerate() {
                    let members: Vec<&Vec<f64>> = rows.iter().zip(&assigned).filter(|(_, &a)| a == j).map(|(r, _)| r).collect();
                    if members.is_empty() { continue; }
                    for (axis, &cx) in c.iter().enumerate() {
                        let mean = members.iter().map(|r| r[axis]).sum::<f64>() / members.len() as f64;
                        prop_assert!((cx - mean).abs() <= 1e-9);
                    }
                }
            }

            for (inst, r) in data.instances().iter().zip(&rows) {
                let a = assign(&m, inst);
                let da = squared_distance(r, &m.centroids[a]);
                for c in &m.centroids {
                    prop_assert!(da <= squared_distance(r, c));
                }
            }
        }
    }
}
