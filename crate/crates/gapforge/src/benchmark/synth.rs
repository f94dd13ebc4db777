//! Seeded synthetic datasets: a regression family with latent-factor
//! feature structure and a classification family of Gaussian clusters.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchmark::derived_seed;
use crate::error::{Error, Result};
use crate::tabular::{Column, Table};

/// How strongly the regression features load on the two shared latent
/// factors. Each feature stays standard normal marginally; the shared part
/// is what makes missing features recoverable from observed ones.
const LATENT_LOADING: f64 = 0.9;

/// Task of a synthetic dataset.
pub use crate::learners::Task;

fn default_nonlinearity() -> f64 {
    0.1
}
fn default_class_count() -> usize {
    2
}
fn default_separation() -> f64 {
    3.0
}

/// Parameters of a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub task: Task,
    pub n_rows: usize,
    pub n_numeric_features: usize,
    /// One vocabulary size per categorical feature.
    #[serde(default)]
    pub categorical_vocab_sizes: Vec<usize>,
    pub seed: u64,
    #[serde(default)]
    pub noise_stddev: f64,
    /// Added to every numeric feature, moving them away from zero.
    #[serde(default)]
    pub feature_offset: f64,
    /// Strength of the pairwise interaction term in the regression target;
    /// zero gives a purely linear target.
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: f64,
    #[serde(default = "default_class_count")]
    pub class_count: usize,
    /// Distance between adjacent class means, in cluster standard deviations.
    #[serde(default = "default_separation")]
    pub separation: f64,
}

impl SyntheticSpec {
    pub fn regression(n_rows: usize, n_numeric_features: usize, seed: u64) -> Self {
        SyntheticSpec {
            task: Task::Regression,
            n_rows,
            n_numeric_features,
            categorical_vocab_sizes: Vec::new(),
            seed,
            noise_stddev: 0.5,
            feature_offset: 0.0,
            nonlinearity: default_nonlinearity(),
            class_count: default_class_count(),
            separation: default_separation(),
        }
    }

    pub fn classification(
        n_rows: usize,
        n_numeric_features: usize,
        class_count: usize,
        separation: f64,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            task: Task::Classification,
            n_rows,
            n_numeric_features,
            categorical_vocab_sizes: Vec::new(),
            seed,
            noise_stddev: 0.0,
            feature_offset: 0.0,
            nonlinearity: 0.0,
            class_count,
            separation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows < 10 {
            return Err(Error::Domain(format!(
                "n_rows must be >= 10, got {}",
                self.n_rows
            )));
        }
        if self.n_numeric_features == 0 {
            return Err(Error::Domain("n_numeric_features must be >= 1".into()));
        }
        if self.noise_stddev < 0.0 {
            return Err(Error::Domain("noise_stddev must be >= 0".into()));
        }
        if self.categorical_vocab_sizes.iter().any(|&v| v < 2) {
            return Err(Error::Domain(
                "categorical vocabulary sizes must be >= 2".into(),
            ));
        }
        if self.task == Task::Classification {
            if self.class_count < 2 {
                return Err(Error::Domain("class_count must be >= 2".into()));
            }
            if self.separation < 0.0 {
                return Err(Error::Domain("separation must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// The regression target's name.
    pub fn regression_target() -> &'static str {
        "target"
    }

    /// The classification target's name.
    pub fn classification_target() -> &'static str {
        "label"
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// The seeded linear coefficients of the regression target, one per
/// numeric feature. Exposed so generated data can be checked against its
/// own generator.
pub fn generating_coefficients(spec: &SyntheticSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(spec.seed, &[1]));
    (0..spec.n_numeric_features)
        .map(|_| rng.random_range(0.5..2.0))
        .collect()
}

/// Per-feature loadings on the two latent factors.
fn factor_loadings(spec: &SyntheticSpec) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(spec.seed, &[2]));
    let shared = LATENT_LOADING;
    let idiosyncratic = (1.0 - shared * shared).sqrt();
    (0..spec.n_numeric_features)
        .map(|_| {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            (shared * angle.cos(), shared * angle.sin(), idiosyncratic)
        })
        .collect()
}

/// Additive per-level effects of the categorical features.
fn category_effects(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(spec.seed, &[3]));
    spec.categorical_vocab_sizes
        .iter()
        .map(|&v| (0..v).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect()
}

/// Generates a fully observed regression table.
///
/// Features are standard normal marginally (shifted by `feature_offset`)
/// but share two seeded latent factors. The target is a seeded linear
/// combination of the numeric features plus a mild pairwise interaction,
/// category effects, and Gaussian noise.
pub fn synth_regression(spec: &SyntheticSpec) -> Result<Table> {
    spec.validate()?;
    if spec.task != Task::Regression {
        return Err(Error::Domain(
            "synth_regression requires task = regression".into(),
        ));
    }
    let coefficients = generating_coefficients(spec);
    let loadings = factor_loadings(spec);
    let effects = category_effects(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(spec.seed, &[4]));

    let p = spec.n_numeric_features;
    let mut numeric: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(spec.n_rows); p];
    let mut categorical: Vec<Vec<Option<String>>> =
        vec![Vec::with_capacity(spec.n_rows); spec.categorical_vocab_sizes.len()];
    let mut target = Vec::with_capacity(spec.n_rows);

    for _ in 0..spec.n_rows {
        let factor_one = standard_normal(&mut rng);
        let factor_two = standard_normal(&mut rng);
        let mut xs = Vec::with_capacity(p);
        for (j, &(a, b, s)) in loadings.iter().enumerate() {
            let x = a * factor_one + b * factor_two + s * standard_normal(&mut rng)
                + spec.feature_offset;
            numeric[j].push(Some(x));
            xs.push(x);
        }
        let mut y: f64 = coefficients.iter().zip(&xs).map(|(c, x)| c * x).sum();
        // Mild interaction over adjacent feature pairs, on centered values.
        for pair in 0..p / 2 {
            let u = xs[2 * pair] - spec.feature_offset;
            let v = xs[2 * pair + 1] - spec.feature_offset;
            y += spec.nonlinearity * u * v;
        }
        for (j, &v) in spec.categorical_vocab_sizes.iter().enumerate() {
            let code = rng.random_range(0..v);
            y += effects[j][code];
            categorical[j].push(Some(format!("l{code}")));
        }
        y += spec.noise_stddev * standard_normal(&mut rng);
        target.push(Some(y));
    }

    let mut columns = Vec::new();
    for (j, cells) in numeric.into_iter().enumerate() {
        columns.push(Column::numeric(format!("x{j}"), cells)?);
    }
    for (j, cells) in categorical.into_iter().enumerate() {
        columns.push(Column::categorical(format!("c{j}"), cells));
    }
    columns.push(Column::numeric(SyntheticSpec::regression_target(), target)?);
    Table::new(columns)
}

/// Direction of the class-mean offsets: weight 2 on the first numeric
/// feature, 1 elsewhere, normalized. The first feature is therefore the
/// most informative one.
fn class_direction(p: usize) -> Vec<f64> {
    let mut w: Vec<f64> = std::iter::once(2.0).chain(std::iter::repeat(1.0)).take(p).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut w {
        *v /= norm;
    }
    w
}

/// Generates a fully observed classification table: class-conditional unit
/// Gaussian clusters whose adjacent means sit `separation` apart.
pub fn synth_classification(spec: &SyntheticSpec) -> Result<Table> {
    spec.validate()?;
    if spec.task != Task::Classification {
        return Err(Error::Domain(
            "synth_classification requires task = classification".into(),
        ));
    }
    let direction = class_direction(spec.n_numeric_features);
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(spec.seed, &[4]));

    let p = spec.n_numeric_features;
    let mut numeric: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(spec.n_rows); p];
    let mut categorical: Vec<Vec<Option<String>>> =
        vec![Vec::with_capacity(spec.n_rows); spec.categorical_vocab_sizes.len()];
    let mut labels = Vec::with_capacity(spec.n_rows);

    for _ in 0..spec.n_rows {
        let class = rng.random_range(0..spec.class_count);
        for (j, w) in direction.iter().enumerate() {
            let mean = class as f64 * spec.separation * w;
            numeric[j].push(Some(
                mean + standard_normal(&mut rng) + spec.feature_offset,
            ));
        }
        for (j, &v) in spec.categorical_vocab_sizes.iter().enumerate() {
            let code = rng.random_range(0..v);
            categorical[j].push(Some(format!("l{code}")));
        }
        labels.push(Some(class.to_string()));
    }

    let mut columns = Vec::new();
    for (j, cells) in numeric.into_iter().enumerate() {
        columns.push(Column::numeric(format!("x{j}"), cells)?);
    }
    for (j, cells) in categorical.into_iter().enumerate() {
        columns.push(Column::categorical(format!("c{j}"), cells));
    }
    // Vocabulary in class order regardless of first occurrence.
    let vocabulary: Vec<String> = (0..spec.class_count).map(|c| c.to_string()).collect();
    let codes: Vec<Option<u32>> = labels
        .iter()
        .map(|l| l.as_ref().map(|s| s.parse::<u32>().expect("class label")))
        .collect();
    columns.push(Column::categorical_with_vocabulary(
        SyntheticSpec::classification_target(),
        vocabulary,
        codes,
    )?);
    Table::new(columns)
}
