//! From-scratch downstream learners: ordinary least squares with a ridge
//! stabilizer, CART decision trees, KNN, bagging, and gradient-boosted
//! trees. They serve both as benchmark models and as the engines behind the
//! predictive imputers.

mod ensemble;
mod knn;
mod linear;
mod tree;

pub(crate) use tree::{fit_tree, TreeParams, TreeTargets};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{ColumnKind, Table};

/// Prediction task of a learner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

fn default_ridge() -> f64 {
    0.0
}
fn default_max_depth() -> usize {
    6
}
fn default_min_leaf() -> usize {
    2
}
fn default_k() -> usize {
    5
}
fn default_n_estimators() -> usize {
    25
}
fn default_sample_fraction() -> f64 {
    1.0
}
fn default_with_replacement() -> bool {
    true
}
fn default_seed() -> u64 {
    0
}
fn default_n_trees() -> usize {
    100
}
fn default_learning_rate() -> f64 {
    0.1
}

/// Configuration of one learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearnerSpec {
    Linear {
        #[serde(default = "default_ridge")]
        ridge: f64,
    },
    Tree {
        #[serde(default = "default_max_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
        task: Task,
    },
    Knn {
        #[serde(default = "default_k")]
        k: usize,
        task: Task,
    },
    Bagging {
        base: Box<LearnerSpec>,
        #[serde(default = "default_n_estimators")]
        n_estimators: usize,
        #[serde(default = "default_sample_fraction")]
        sample_fraction: f64,
        #[serde(default = "default_with_replacement")]
        with_replacement: bool,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Gbt {
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
        #[serde(default = "default_max_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
    },
}

impl LearnerSpec {
    pub fn linear(ridge: f64) -> Self {
        LearnerSpec::Linear { ridge }
    }

    pub fn tree(task: Task) -> Self {
        LearnerSpec::Tree {
            max_depth: default_max_depth(),
            min_leaf: default_min_leaf(),
            task,
        }
    }

    pub fn tree_with(task: Task, max_depth: usize, min_leaf: usize) -> Self {
        LearnerSpec::Tree {
            max_depth,
            min_leaf,
            task,
        }
    }

    pub fn knn(task: Task, k: usize) -> Self {
        LearnerSpec::Knn { k, task }
    }

    pub fn bagging(base: LearnerSpec, n_estimators: usize, seed: u64) -> Self {
        LearnerSpec::Bagging {
            base: Box::new(base),
            n_estimators,
            sample_fraction: default_sample_fraction(),
            with_replacement: default_with_replacement(),
            seed,
        }
    }

    pub fn gbt(n_trees: usize, learning_rate: f64, max_depth: usize) -> Self {
        LearnerSpec::Gbt {
            n_trees,
            learning_rate,
            max_depth,
            min_leaf: default_min_leaf(),
        }
    }

    /// The task the learner solves; linear and boosted regressors are
    /// regression-only.
    pub fn task(&self) -> Task {
        match self {
            LearnerSpec::Linear { .. } | LearnerSpec::Gbt { .. } => Task::Regression,
            LearnerSpec::Tree { task, .. } | LearnerSpec::Knn { task, .. } => *task,
            LearnerSpec::Bagging { base, .. } => base.task(),
        }
    }

    /// Compact human-readable tag used in report headers.
    pub fn label(&self) -> String {
        match self {
            LearnerSpec::Linear { ridge } => {
                if *ridge == 0.0 {
                    "linear".to_string()
                } else {
                    format!("linear(ridge={ridge})")
                }
            }
            LearnerSpec::Tree {
                max_depth,
                min_leaf,
                task,
            } => format!(
                "tree({},depth={max_depth},leaf={min_leaf})",
                task_tag(*task)
            ),
            LearnerSpec::Knn { k, task } => format!("knn({},k={k})", task_tag(*task)),
            LearnerSpec::Bagging {
                base, n_estimators, ..
            } => format!("bagging({},n={n_estimators})", base.label()),
            LearnerSpec::Gbt {
                n_trees,
                learning_rate,
                max_depth,
                ..
            } => format!("gbt(trees={n_trees},lr={learning_rate},depth={max_depth})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::Linear { ridge } => {
                if !(*ridge >= 0.0) {
                    return Err(Error::Domain(format!("ridge must be >= 0, got {ridge}")));
                }
            }
            LearnerSpec::Tree {
                max_depth,
                min_leaf,
                ..
            } => {
                if *max_depth < 1 || *min_leaf < 1 {
                    return Err(Error::Domain(
                        "tree max_depth and min_leaf must be >= 1".into(),
                    ));
                }
            }
            LearnerSpec::Knn { k, .. } => {
                if *k < 1 {
                    return Err(Error::Domain("knn k must be >= 1".into()));
                }
            }
            LearnerSpec::Bagging {
                base,
                n_estimators,
                sample_fraction,
                ..
            } => {
                if *n_estimators < 1 {
                    return Err(Error::Domain("bagging n_estimators must be >= 1".into()));
                }
                if !(*sample_fraction > 0.0 && *sample_fraction <= 1.0) {
                    return Err(Error::Domain(format!(
                        "bagging sample_fraction must be in (0, 1], got {sample_fraction}"
                    )));
                }
                base.validate()?;
            }
            LearnerSpec::Gbt {
                n_trees,
                learning_rate,
                max_depth,
                min_leaf,
            } => {
                if *n_trees < 1 || *max_depth < 1 || *min_leaf < 1 {
                    return Err(Error::Domain(
                        "gbt n_trees, max_depth, and min_leaf must be >= 1".into(),
                    ));
                }
                if !(*learning_rate > 0.0 && *learning_rate <= 1.0) {
                    return Err(Error::Domain(format!(
                        "gbt learning_rate must be in (0, 1], got {learning_rate}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Trains the learner on an encoded design matrix.
    pub fn fit(&self, data: &DesignMatrix) -> Result<FittedLearner> {
        self.validate()?;
        if data.n_rows() == 0 {
            return Err(Error::Fit("cannot fit on zero training rows".into()));
        }
        let model = match self {
            LearnerSpec::Linear { ridge } => {
                let targets = expect_numeric(data, "linear regression")?;
                Model::Linear(linear::fit_linear(data.features(), targets, *ridge)?)
            }
            LearnerSpec::Tree {
                max_depth,
                min_leaf,
                task,
            } => {
                let params = TreeParams {
                    max_depth: *max_depth,
                    min_leaf: *min_leaf,
                };
                let targets = tree_targets(data, *task)?;
                Model::Tree(fit_tree(data.features(), &targets, &params))
            }
            LearnerSpec::Knn { k, task } => {
                Model::Knn(knn::fit_knn(data, *task, *k)?)
            }
            LearnerSpec::Bagging {
                base,
                n_estimators,
                sample_fraction,
                with_replacement,
                seed,
            } => Model::Bagging(ensemble::fit_bagging(
                base,
                data,
                *n_estimators,
                *sample_fraction,
                *with_replacement,
                *seed,
            )?),
            LearnerSpec::Gbt {
                n_trees,
                learning_rate,
                max_depth,
                min_leaf,
            } => {
                let targets = expect_numeric(data, "gradient boosting")?;
                Model::Gbt(ensemble::fit_gbt(
                    data.features(),
                    targets,
                    *n_trees,
                    *learning_rate,
                    &TreeParams {
                        max_depth: *max_depth,
                        min_leaf: *min_leaf,
                    },
                ))
            }
        };
        Ok(FittedLearner {
            spec: self.clone(),
            n_features: data.n_features(),
            model,
        })
    }
}

fn task_tag(task: Task) -> &'static str {
    match task {
        Task::Regression => "reg",
        Task::Classification => "cls",
    }
}

fn expect_numeric<'a>(data: &'a DesignMatrix, what: &str) -> Result<&'a [f64]> {
    match data.targets() {
        Targets::Numeric(values) => Ok(values),
        Targets::Classes { .. } => Err(Error::Fit(format!(
            "{what} requires a numeric target, got class labels"
        ))),
    }
}

fn tree_targets(data: &DesignMatrix, task: Task) -> Result<TreeTargets<'_>> {
    match (task, data.targets()) {
        (Task::Regression, Targets::Numeric(values)) => Ok(TreeTargets::Numeric(values)),
        (Task::Classification, Targets::Classes { codes, n_classes }) => {
            Ok(TreeTargets::Classes {
                codes,
                n_classes: *n_classes,
            })
        }
        (Task::Regression, Targets::Classes { .. }) => Err(Error::Fit(
            "regression task on class-labelled targets".into(),
        )),
        (Task::Classification, Targets::Numeric(_)) => Err(Error::Fit(
            "classification task on numeric targets".into(),
        )),
    }
}

/// Target vector of a design matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Numeric(Vec<f64>),
    Classes { codes: Vec<usize>, n_classes: usize },
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Numeric(v) => v.len(),
            Targets::Classes { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A complete, fully numeric feature matrix plus its target vector.
///
/// Numeric table columns pass through; categorical columns expand to one
/// indicator feature per vocabulary entry.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    features: Vec<Vec<f64>>,
    feature_names: Vec<String>,
    targets: Targets,
}

impl DesignMatrix {
    pub fn from_parts(
        features: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        targets: Targets,
    ) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::Encode(format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        for row in &features {
            if row.len() != feature_names.len() {
                return Err(Error::Encode(format!(
                    "feature row width {} does not match {} feature names",
                    row.len(),
                    feature_names.len()
                )));
            }
        }
        if let Targets::Classes { codes, n_classes } = &targets {
            if codes.iter().any(|&c| c >= *n_classes) {
                return Err(Error::Encode("class code out of range".into()));
            }
        }
        Ok(DesignMatrix {
            features,
            feature_names,
            targets,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    /// The subset of rows at `indices`, in that order.
    pub fn take_rows(&self, indices: &[usize]) -> DesignMatrix {
        let features = indices.iter().map(|&i| self.features[i].clone()).collect();
        let targets = match &self.targets {
            Targets::Numeric(v) => Targets::Numeric(indices.iter().map(|&i| v[i]).collect()),
            Targets::Classes { codes, n_classes } => Targets::Classes {
                codes: indices.iter().map(|&i| codes[i]).collect(),
                n_classes: *n_classes,
            },
        };
        DesignMatrix {
            features,
            feature_names: self.feature_names.clone(),
            targets,
        }
    }
}

/// Encodes a complete table into a design matrix for `target_column`.
pub fn encode(table: &Table, target_column: &str) -> Result<DesignMatrix> {
    let target = table.require_column(target_column)?;
    for column in table.columns() {
        if let Some(row) = (0..table.n_rows()).find(|&r| !column.is_observed(r)) {
            return Err(Error::Encode(format!(
                "missing cell in column '{}' at row {row}; encode requires a complete table",
                column.name()
            )));
        }
    }

    let mut feature_names = Vec::new();
    for column in table.columns() {
        if column.name() == target_column {
            continue;
        }
        match column.kind() {
            ColumnKind::Numeric => feature_names.push(column.name().to_string()),
            ColumnKind::Categorical => {
                for label in column.vocabulary().expect("categorical column") {
                    feature_names.push(format!("{}={label}", column.name()));
                }
            }
        }
    }

    let mut features = Vec::with_capacity(table.n_rows());
    for row in 0..table.n_rows() {
        let mut encoded = Vec::with_capacity(feature_names.len());
        for column in table.columns() {
            if column.name() == target_column {
                continue;
            }
            match column.kind() {
                ColumnKind::Numeric => encoded.push(column.number(row).expect("complete")),
                ColumnKind::Categorical => {
                    let vocabulary_len = column.vocabulary().expect("categorical").len();
                    let code = column.code(row).expect("complete") as usize;
                    for i in 0..vocabulary_len {
                        encoded.push(if i == code { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        features.push(encoded);
    }

    let targets = match target.kind() {
        ColumnKind::Numeric => Targets::Numeric(
            (0..table.n_rows())
                .map(|r| target.number(r).expect("complete"))
                .collect(),
        ),
        ColumnKind::Categorical => Targets::Classes {
            codes: (0..table.n_rows())
                .map(|r| target.code(r).expect("complete") as usize)
                .collect(),
            n_classes: target.vocabulary().expect("categorical").len(),
        },
    };

    DesignMatrix::from_parts(features, feature_names, targets)
}

/// Predictions of a fitted learner.
#[derive(Clone, Debug, PartialEq)]
pub enum Predictions {
    Numeric(Vec<f64>),
    Classes(Vec<usize>),
}

impl Predictions {
    pub fn as_numeric(&self) -> Option<&[f64]> {
        match self {
            Predictions::Numeric(v) => Some(v),
            Predictions::Classes(_) => None,
        }
    }

    pub fn as_classes(&self) -> Option<&[usize]> {
        match self {
            Predictions::Classes(v) => Some(v),
            Predictions::Numeric(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
enum Model {
    Linear(linear::LinearModel),
    Tree(tree::TreeModel),
    Knn(knn::KnnModel),
    Bagging(Vec<FittedLearner>),
    Gbt(ensemble::GbtModel),
}

/// A trained learner; prediction is deterministic and parameters derive
/// solely from the training design matrix.
#[derive(Clone, Debug)]
pub struct FittedLearner {
    spec: LearnerSpec,
    n_features: usize,
    model: Model,
}

impl FittedLearner {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Whether a singular normal system forced the automatic ridge
    /// escalation during fitting (anywhere in the ensemble).
    pub fn ridge_escalated(&self) -> bool {
        match &self.model {
            Model::Linear(m) => m.ridge_escalated,
            Model::Bagging(members) => members.iter().any(FittedLearner::ridge_escalated),
            _ => false,
        }
    }

    pub fn predict(&self, data: &DesignMatrix) -> Result<Predictions> {
        self.predict_rows(data.features())
    }

    /// Predicts raw feature rows (used by the predictive imputers).
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Predictions> {
        for row in rows {
            if row.len() != self.n_features {
                return Err(Error::Predict(format!(
                    "feature count mismatch: trained on {}, got {}",
                    self.n_features,
                    row.len()
                )));
            }
        }
        Ok(match &self.model {
            Model::Linear(m) => {
                Predictions::Numeric(rows.iter().map(|r| m.predict(r)).collect())
            }
            Model::Tree(m) => m.predict_many(rows),
            Model::Knn(m) => m.predict(rows),
            Model::Bagging(members) => ensemble::predict_bagging(members, rows, self.spec.task())?,
            Model::Gbt(m) => Predictions::Numeric(rows.iter().map(|r| m.predict(r)).collect()),
        })
    }
}
