use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Seeded per-class split. Each class contributes `round(fraction * n_c)`
/// instances to train, clamped so both sides keep at least one. Instance
/// order within each side follows the input order.
pub fn stratified_split(
    data: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let classes = data.profile().classes();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, inst) in data.instances().iter().enumerate() {
        let c = classes
            .iter()
            .position(|c| *c == inst.attack_type)
            .expect("dataset invariant: attack type is a profile class");
        groups[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(data.len());
    let mut test = Vec::with_capacity(data.len());
    for (class, mut idx) in classes.iter().zip(groups) {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::Class(
                class.clone(),
                format!("{} instance(s), need at least 2 to split", idx.len()),
            ));
        }
        idx.shuffle(&mut rng);
        let n = idx.len();
        let k = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.subset(&train), data.subset(&test)))
}
