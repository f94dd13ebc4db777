//! Bagging over seeded row resamples and gradient boosting over residuals.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::learners::tree::{fit_tree, TreeModel, TreeParams, TreeTargets};
use crate::learners::{DesignMatrix, FittedLearner, LearnerSpec, Predictions, Task};

/// Fits `n_estimators` copies of `base`, each on a seeded row sample.
pub fn fit_bagging(
    base: &LearnerSpec,
    data: &DesignMatrix,
    n_estimators: usize,
    sample_fraction: f64,
    with_replacement: bool,
    seed: u64,
) -> Result<Vec<FittedLearner>> {
    let n = data.n_rows();
    let sample_size = ((sample_fraction * n as f64 + 0.5).floor() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = Vec::with_capacity(n_estimators);
    for _ in 0..n_estimators {
        let mut indices: Vec<usize> = if with_replacement {
            (0..sample_size).map(|_| rng.random_range(0..n)).collect()
        } else {
            let mut all: Vec<usize> = (0..n).collect();
            // Partial Fisher-Yates: the first `sample_size` entries form the sample.
            for i in 0..sample_size {
                let j = rng.random_range(i..n);
                all.swap(i, j);
            }
            all.truncate(sample_size);
            all
        };
        indices.sort_unstable();
        members.push(base.fit(&data.take_rows(&indices))?);
    }
    Ok(members)
}

/// Averages (regression) or majority-votes (classification) the members.
pub fn predict_bagging(
    members: &[FittedLearner],
    rows: &[Vec<f64>],
    task: Task,
) -> Result<Predictions> {
    match task {
        Task::Regression => {
            let mut sums = vec![0.0; rows.len()];
            for member in members {
                let prediction = member.predict_rows(rows)?;
                let values = prediction
                    .as_numeric()
                    .ok_or_else(|| Error::Predict("bagging member returned class labels".into()))?;
                for (sum, value) in sums.iter_mut().zip(values) {
                    *sum += value;
                }
            }
            let scale = members.len() as f64;
            Ok(Predictions::Numeric(
                sums.into_iter().map(|s| s / scale).collect(),
            ))
        }
        Task::Classification => {
            let mut votes: Vec<Vec<usize>> = vec![Vec::new(); rows.len()];
            for member in members {
                let prediction = member.predict_rows(rows)?;
                let classes = prediction
                    .as_classes()
                    .ok_or_else(|| Error::Predict("bagging member returned numbers".into()))?;
                for (ballot, &class) in votes.iter_mut().zip(classes) {
                    if ballot.len() <= class {
                        ballot.resize(class + 1, 0);
                    }
                    ballot[class] += 1;
                }
            }
            Ok(Predictions::Classes(
                votes
                    .into_iter()
                    .map(|ballot| {
                        let mut best = 0;
                        for (code, &count) in ballot.iter().enumerate() {
                            if count > ballot[best] {
                                best = code;
                            }
                        }
                        best
                    })
                    .collect(),
            ))
        }
    }
}

/// Additive ensemble of depth-limited regression trees fit to residuals.
#[derive(Clone, Debug)]
pub struct GbtModel {
    base: f64,
    learning_rate: f64,
    trees: Vec<TreeModel>,
}

impl GbtModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.base
            + self.learning_rate
                * self
                    .trees
                    .iter()
                    .map(|t| t.predict_number(row))
                    .sum::<f64>()
    }
}

pub fn fit_gbt(
    features: &[Vec<f64>],
    targets: &[f64],
    n_trees: usize,
    learning_rate: f64,
    params: &TreeParams,
) -> GbtModel {
    let n = targets.len();
    let base = targets.iter().sum::<f64>() / n as f64;
    let mut current: Vec<f64> = vec![base; n];
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let residuals: Vec<f64> = targets
            .iter()
            .zip(&current)
            .map(|(y, f)| y - f)
            .collect();
        let tree = fit_tree(features, &TreeTargets::Numeric(&residuals), params);
        for (value, row) in current.iter_mut().zip(features) {
            *value += learning_rate * tree.predict_number(row);
        }
        trees.push(tree);
    }
    GbtModel {
        base,
        learning_rate,
        trees,
    }
}
