use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Instance, Target, Value};
use crate::error::{Error, Result};

/// Gains at or below this are treated as zero.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTest {
    /// Left when the numeric value is `<=` the threshold.
    Threshold(f64),
    /// Left when the category index equals this one.
    Category(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionTreeNode {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        test: SplitTest,
        left: Box<DecisionTreeNode>,
        right: Box<DecisionTreeNode>,
    },
}

impl DecisionTreeNode {
    pub fn predict(&self, instance: &Instance) -> usize {
        let mut node = self;
        loop {
            match node {
                DecisionTreeNode::Leaf { class } => return *class,
                DecisionTreeNode::Split {
                    feature,
                    test,
                    left,
                    right,
                } => {
                    let go_left = match (test, instance.values[*feature]) {
                        (SplitTest::Threshold(t), Value::Num(x)) => x <= *t,
                        (SplitTest::Category(c), Value::Cat(v)) => v == *c,
                        _ => panic!("instance does not match the forest schema"),
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTreeNode::Leaf { .. } => 0,
            DecisionTreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per node; `None` means `floor(log2 D) + 1`.
    pub m_try: Option<usize>,
    pub seed: u64,
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn new(seed: u64) -> Self {
        Self {
            n_trees: 100,
            m_try: None,
            seed,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTreeNode>,
    pub n_trees: usize,
    pub m_try: usize,
    pub seed: u64,
    pub bootstrap: bool,
    pub target: Target,
    pub classes: Vec<String>,
}

pub fn default_m_try(features: usize) -> usize {
    features.max(1).ilog2() as usize + 1
}

pub fn rf_fit(data: &Dataset, n_trees: usize, m_try: usize, seed: u64, target: Target) -> Result<RandomForestModel> {
    let params = ForestParams {
        n_trees,
        m_try: Some(m_try),
        ..ForestParams::new(seed)
    };
    rf_fit_with(data, &params, target)
}

pub fn rf_fit_with(data: &Dataset, params: &ForestParams, target: Target) -> Result<RandomForestModel> {
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = data.profile().features.len();
    let m_try = params.m_try.unwrap_or_else(|| default_m_try(d).min(d));
    if m_try == 0 || m_try > d {
        return Err(Error::invalid(format!(
            "m_try must lie in 1..={d} for {d} features, got {m_try}"
        )));
    }
    if params.n_trees == 0 {
        return Err(Error::invalid("a forest needs at least one tree"));
    }
    let classes = target.classes(data.profile());
    let labels: Vec<usize> = data
        .instances()
        .iter()
        .map(|i| classes.iter().position(|c| c == i.target(target)).unwrap())
        .collect();
    let columns: Vec<Column> = (0..d)
        .map(|j| {
            let cells = data.instances().iter().map(|i| i.values[j]);
            if data.profile().features[j].kind.is_numeric() {
                Column::Numeric(cells.map(|v| v.num().unwrap()).collect())
            } else {
                Column::Nominal(cells.map(|v| v.cat().unwrap()).collect())
            }
        })
        .collect();
    let builder = Builder {
        columns: &columns,
        labels: &labels,
        n_classes: classes.len(),
        m_try,
    };

    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let tree_seeds: Vec<u64> = (0..params.n_trees).map(|_| master.random()).collect();
    let trees = tree_seeds
        .iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            builder.grow(rows, 0, &mut rng)
        })
        .collect();
    Ok(RandomForestModel {
        trees,
        n_trees: params.n_trees,
        m_try,
        seed: params.seed,
        bootstrap: params.bootstrap,
        target,
        classes,
    })
}

/// Plurality vote; ties go to the earlier class.
pub fn rf_predict<'m>(model: &'m RandomForestModel, instance: &Instance) -> &'m str {
    let mut votes = vec![0usize; model.classes.len()];
    for tree in &model.trees {
        votes[tree.predict(instance)] += 1;
    }
    &model.classes[first_max(&votes)]
}

fn first_max(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

enum Column {
    Numeric(Vec<f64>),
    Nominal(Vec<usize>),
}

struct Builder<'a> {
    columns: &'a [Column],
    labels: &'a [usize],
    n_classes: usize,
    m_try: usize,
}

struct Candidate {
    gain: f64,
    feature: usize,
    test: SplitTest,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &r in rows {
            c[self.labels[r]] += 1;
        }
        c
    }

    fn grow(&self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> DecisionTreeNode {
        debug_assert!(depth <= self.labels.len());
        let counts = self.counts(&rows);
        let leaf = DecisionTreeNode::Leaf {
            class: first_max(&counts),
        };
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 {
            return leaf;
        }
        let parent = entropy(&counts, rows.len());
        let mut best: Option<Candidate> = None;
        for feature in sample(rng, self.columns.len(), self.m_try).into_iter() {
            let found = match &self.columns[feature] {
                Column::Numeric(xs) => self.best_threshold(xs, &rows, &counts, parent),
                Column::Nominal(vs) => self.best_category(vs, &rows, &counts, parent),
            };
            if let Some((gain, test)) = found {
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate { gain, feature, test });
                }
            }
        }
        let Some(split) = best.filter(|b| b.gain > MIN_GAIN) else {
            return leaf;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| match (&self.columns[split.feature], split.test) {
                (Column::Numeric(xs), SplitTest::Threshold(t)) => xs[r] <= t,
                (Column::Nominal(vs), SplitTest::Category(c)) => vs[r] == c,
                _ => unreachable!(),
            });
        DecisionTreeNode::Split {
            feature: split.feature,
            test: split.test,
            left: Box::new(self.grow(left, depth + 1, rng)),
            right: Box::new(self.grow(right, depth + 1, rng)),
        }
    }

    fn best_threshold(&self, xs: &[f64], rows: &[usize], total: &[usize], parent: f64) -> Option<(f64, SplitTest)> {
        let mut sorted = rows.to_vec();
        sorted.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let n = rows.len();
        let mut left = vec![0usize; self.n_classes];
        let mut best: Option<(f64, SplitTest)> = None;
        for i in 0..n - 1 {
            left[self.labels[sorted[i]]] += 1;
            let (a, b) = (xs[sorted[i]], xs[sorted[i + 1]]);
            if a == b {
                continue;
            }
            let gain = split_gain(parent, &left, total, i + 1, n);
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, SplitTest::Threshold(a + (b - a) / 2.0)));
            }
        }
        best
    }

    fn best_category(&self, vs: &[usize], rows: &[usize], total: &[usize], parent: f64) -> Option<(f64, SplitTest)> {
        let (mut by_cat, n) = (std::collections::BTreeMap::<usize, Vec<usize>>::new(), rows.len());
        for &r in rows {
            by_cat.entry(vs[r]).or_insert_with(|| vec![0; self.n_classes])[self.labels[r]] += 1;
        }
        if by_cat.len() < 2 {
            return None;
        }
        let mut best: Option<(f64, SplitTest)> = None;
        for (&cat, inside) in &by_cat {
            let size = inside.iter().sum();
            let gain = split_gain(parent, inside, total, size, n);
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, SplitTest::Category(cat)));
            }
        }
        best
    }
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn split_gain(parent: f64, left: &[usize], total: &[usize], n_left: usize, n: usize) -> f64 {
    let right: Vec<usize> = total.iter().zip(left).map(|(t, l)| t - l).collect();
    let n_right = n - n_left;
    parent
        - (n_left as f64 / n as f64) * entropy(left, n_left)
        - (n_right as f64 / n as f64) * entropy(&right, n_right)
}
