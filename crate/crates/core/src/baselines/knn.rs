use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Instance, Target};
use crate::encode::{squared_distance, Encoder};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub target: Target,
    pub classes: Vec<String>,
    pub encoder: Encoder,
    /// Row-major encoded training instances.
    pub stored: Vec<f64>,
    /// Class index of each stored instance.
    pub labels: Vec<usize>,
}

impl KnnModel {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn knn_fit(data: &Dataset, k: usize, target: Target) -> Result<KnnModel> {
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "k must lie in 1..={n} for {n} instances, got {k}"
        )));
    }
    let classes = target.classes(data.profile());
    let encoder = Encoder::new(data.profile());
    let labels = data
        .instances()
        .iter()
        .map(|i| classes.iter().position(|c| c == i.target(target)).unwrap())
        .collect();
    Ok(KnnModel {
        k,
        target,
        classes,
        stored: encoder.encode_all(data.instances()),
        encoder,
        labels,
    })
}

/// Modal class of the k nearest stored instances. Distance ties at the
/// boundary keep the lower stored index; mode ties go to the earlier class.
pub fn knn_predict<'m>(model: &'m KnnModel, instance: &Instance) -> &'m str {
    let q = model.encoder.encode(instance);
    let d = model.encoder.dim();
    let dist = |i: usize| {
        if d == 0 {
            0.0
        } else {
            squared_distance(&q, &model.stored[i * d..(i + 1) * d])
        }
    };
    // Sorted ascending by (distance, index); at most k entries.
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(model.k + 1);
    for i in 0..model.len() {
        let di = dist(i);
        if best.len() == model.k && di >= best[model.k - 1].0 {
            continue;
        }
        let at = best.partition_point(|&(b, _)| b <= di);
        best.insert(at, (di, i));
        best.truncate(model.k);
    }
    let mut votes = vec![0usize; model.classes.len()];
    for &(_, i) in &best {
        votes[model.labels[i]] += 1;
    }
    let mut winner = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[winner] {
            winner = c;
        }
    }
    &model.classes[winner]
}
