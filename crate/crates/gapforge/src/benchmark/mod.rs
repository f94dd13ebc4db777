//! The experimental protocol: train-fraction sweeps with repeated seeded
//! trials over an imputer x learner grid, scored by a single metric.
//!
//! Within a trial every imputer and learner sees the same split and the
//! same injected gaps, so cell differences are attributable to the
//! strategies themselves. The target column is never injected and never
//! fed to an imputer.

mod report;
mod synth;

pub use synth::{
    generating_coefficients, synth_classification, synth_regression, SyntheticSpec,
};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imputers::{self, ImputerSpec};
use crate::learners::{encode, LearnerSpec, Predictions, Targets};
use crate::metrics;
use crate::missingness::{inject, Mechanism, MissingnessSpec};
use crate::tabular::{Column, ColumnKind, Table};

/// splitmix64, the fixed mixing function behind all derived seeds.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `salts` into `base` through splitmix64.
pub(crate) fn derived_seed(base: u64, salts: &[u64]) -> u64 {
    salts
        .iter()
        .fold(splitmix64(base), |acc, &s| splitmix64(acc ^ s))
}

/// The metric a plan scores cells with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Mse,
    Rmse,
    Rmsle,
    Accuracy,
    F1Macro,
}

impl MetricKind {
    fn is_regression(self) -> bool {
        matches!(self, MetricKind::Mse | MetricKind::Rmse | MetricKind::Rmsle)
    }
}

pub fn default_train_fractions() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn default_trials() -> usize {
    5
}

/// The grid protocol: fractions x trials x imputers x learners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    #[serde(default = "default_train_fractions")]
    pub train_fractions: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub imputers: Vec<ImputerSpec>,
    pub learners: Vec<LearnerSpec>,
    /// Applied per trial to the train and test feature columns, with seeds
    /// derived from `(base_seed, trial)`; the spec's own seed is unused here.
    pub missingness: MissingnessSpec,
    pub metric: MetricKind,
    pub target_column: String,
}

impl BenchmarkPlan {
    /// The default "ML Method" imputer of imputer-comparison runs:
    /// iterative imputation driven by a small boosted-tree regressor.
    pub fn default_ml_imputer() -> ImputerSpec {
        ImputerSpec::iterative(LearnerSpec::gbt(30, 0.1, 3), 3)
    }

    pub fn validate(&self, table: &Table) -> Result<()> {
        if self.train_fractions.is_empty() {
            return Err(Error::Plan("train_fractions must be nonempty".into()));
        }
        for &f in &self.train_fractions {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Plan(format!(
                    "train fractions must lie in (0, 1), got {f}"
                )));
            }
        }
        if self.trials == 0 {
            return Err(Error::Plan("trials must be >= 1".into()));
        }
        if self.imputers.is_empty() || self.learners.is_empty() {
            return Err(Error::Plan("imputers and learners must be nonempty".into()));
        }
        for imputer in &self.imputers {
            imputer.validate()?;
        }
        for learner in &self.learners {
            learner.validate()?;
        }
        let target = table.require_column(&self.target_column)?;
        let regression_target = target.kind() == ColumnKind::Numeric;
        if self.metric.is_regression() != regression_target {
            return Err(Error::Plan(format!(
                "metric {:?} does not fit a {} target",
                self.metric,
                target.kind()
            )));
        }
        self.effective_missingness(0)?;
        Ok(())
    }

    /// The plan's mechanism with the target column stripped and the trial
    /// seed substituted.
    fn effective_missingness(&self, seed: u64) -> Result<MissingnessSpec> {
        let mechanism = match &self.missingness.mechanism {
            Mechanism::Mcar {
                target_columns,
                rate,
            } => {
                let kept: Vec<String> = target_columns
                    .iter()
                    .filter(|n| **n != self.target_column)
                    .cloned()
                    .collect();
                if kept.is_empty() {
                    return Err(Error::Plan(
                        "missingness targets only the plan's target column".into(),
                    ));
                }
                Mechanism::Mcar {
                    target_columns: kept,
                    rate: *rate,
                }
            }
            Mechanism::Mar {
                target_column,
                driver_column,
                ..
            } => {
                if *target_column == self.target_column {
                    return Err(Error::Plan(
                        "mar.target_column may not be the plan's target column".into(),
                    ));
                }
                if *driver_column == self.target_column {
                    return Err(Error::Plan(
                        "mar.driver_column must be a feature column".into(),
                    ));
                }
                self.missingness.mechanism.clone()
            }
            Mechanism::Mnar { target_column, .. } => {
                if *target_column == self.target_column {
                    return Err(Error::Plan(
                        "mnar.target_column may not be the plan's target column".into(),
                    ));
                }
                self.missingness.mechanism.clone()
            }
        };
        Ok(MissingnessSpec { mechanism, seed })
    }
}

/// One grid cell: a (fraction, imputer, learner) combination aggregated
/// over trials. Wall-clock seconds are kept in memory but never serialized,
/// so reports from identical seeds stay byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub train_fraction: f64,
    pub imputer: String,
    pub learner: String,
    pub trial_values: Vec<f64>,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub seconds: f64,
}

impl BenchmarkCell {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// The aggregated grid results plus an echo of the plan that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub plan: BenchmarkPlan,
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkReport {
    /// The cell for a (fraction, imputer label, learner label) key.
    pub fn cell(&self, fraction: f64, imputer: &str, learner: &str) -> Option<&BenchmarkCell> {
        self.cells.iter().find(|c| {
            c.train_fraction == fraction && c.imputer == imputer && c.learner == learner
        })
    }

    pub fn all_failed(&self) -> bool {
        self.cells.iter().all(BenchmarkCell::failed)
    }
}

struct CellAccumulator {
    values: Vec<f64>,
    error: Option<String>,
    seconds: f64,
}

/// Shared per-(fraction, trial) preparation: split, target separation, and
/// feature-side injection.
struct TrialData {
    train_features: Table,
    test_features: Table,
    train_target: Column,
    test_target: Column,
    target_index: usize,
}

fn prepare_trial(
    table: &Table,
    plan: &BenchmarkPlan,
    fraction: f64,
    trial: usize,
) -> Result<TrialData> {
    let split_seed = plan.base_seed ^ (trial as u64);
    let (train, test) = table.train_test_split(fraction, split_seed)?;
    let target_index = table
        .column_index(&plan.target_column)
        .ok_or_else(|| Error::UnknownColumn(plan.target_column.clone()))?;
    let train_target = train.require_column(&plan.target_column)?.clone();
    let test_target = test.require_column(&plan.target_column)?.clone();
    let train_features = train.without_column(&plan.target_column)?;
    let test_features = test.without_column(&plan.target_column)?;

    let train_spec =
        plan.effective_missingness(derived_seed(plan.base_seed, &[trial as u64, 1]))?;
    let test_spec =
        plan.effective_missingness(derived_seed(plan.base_seed, &[trial as u64, 2]))?;
    let train_features = inject(&train_features, &train_spec)?.into_table();
    let test_features = inject(&test_features, &test_spec)?.into_table();

    Ok(TrialData {
        train_features,
        test_features,
        train_target,
        test_target,
        target_index,
    })
}

fn score_cell(
    learner: &LearnerSpec,
    metric: MetricKind,
    train: &Table,
    test: &Table,
    target_column: &str,
) -> Result<f64> {
    let train_matrix = encode(train, target_column)?;
    let test_matrix = encode(test, target_column)?;
    let model = learner.fit(&train_matrix)?;
    let predictions = model.predict(&test_matrix)?;
    match (predictions, test_matrix.targets()) {
        (Predictions::Numeric(predicted), Targets::Numeric(actual)) => match metric {
            MetricKind::Mse => metrics::mse(&predicted, actual),
            MetricKind::Rmse => metrics::rmse(&predicted, actual),
            MetricKind::Rmsle => Ok(metrics::rmsle(&predicted, actual)?.value),
            _ => Err(Error::Plan("classification metric on numeric target".into())),
        },
        (Predictions::Classes(predicted), Targets::Classes { codes, .. }) => {
            let report =
                metrics::classification_report(&metrics::confusion_matrix(codes, &predicted)?)?;
            match metric {
                MetricKind::Accuracy => Ok(report.accuracy),
                MetricKind::F1Macro => Ok(report.macro_avg.f1),
                _ => Err(Error::Plan("regression metric on class target".into())),
            }
        }
        _ => Err(Error::Fit(
            "learner prediction kind does not match the target".into(),
        )),
    }
}

/// Runs the full grid. Cell-level failures are recorded in the report and
/// never abort the run.
pub fn run(plan: &BenchmarkPlan, table: &Table) -> Result<BenchmarkReport> {
    plan.validate(table)?;
    let n_imputers = plan.imputers.len();
    let n_learners = plan.learners.len();
    let mut accumulators: Vec<CellAccumulator> = (0..plan.train_fractions.len()
        * n_imputers
        * n_learners)
        .map(|_| CellAccumulator {
            values: Vec::with_capacity(plan.trials),
            error: None,
            seconds: 0.0,
        })
        .collect();
    let cell_index =
        |fi: usize, ii: usize, li: usize| (fi * n_imputers + ii) * n_learners + li;

    for (fi, &fraction) in plan.train_fractions.iter().enumerate() {
        for trial in 0..plan.trials {
            let prepared = match prepare_trial(table, plan, fraction, trial) {
                Ok(p) => p,
                Err(e) => {
                    for ii in 0..n_imputers {
                        for li in 0..n_learners {
                            let acc = &mut accumulators[cell_index(fi, ii, li)];
                            acc.error.get_or_insert_with(|| e.to_string());
                        }
                    }
                    continue;
                }
            };
            for (ii, imputer) in plan.imputers.iter().enumerate() {
                let started = Instant::now();
                let imputed = imputers::fit(imputer, &prepared.train_features)
                    .and_then(|model| {
                        let train = imputers::transform(&model, &prepared.train_features)?;
                        let test = imputers::transform(&model, &prepared.test_features)?;
                        Ok((train, test))
                    })
                    .and_then(|(train, test)| {
                        let train = train
                            .insert_column(prepared.target_index, prepared.train_target.clone())?;
                        let test = test
                            .insert_column(prepared.target_index, prepared.test_target.clone())?;
                        Ok((train, test))
                    });
                let imputer_seconds = started.elapsed().as_secs_f64();
                match &imputed {
                    Ok((train, test)) => {
                        for (li, learner) in plan.learners.iter().enumerate() {
                            let started = Instant::now();
                            let outcome =
                                score_cell(learner, plan.metric, train, test, &plan.target_column);
                            let acc = &mut accumulators[cell_index(fi, ii, li)];
                            acc.seconds += imputer_seconds + started.elapsed().as_secs_f64();
                            match outcome {
                                Ok(value) => acc.values.push(value),
                                Err(e) => {
                                    acc.error.get_or_insert_with(|| e.to_string());
                                }
                            }
                        }
                    }
                    Err(e) => {
                        for li in 0..n_learners {
                            let acc = &mut accumulators[cell_index(fi, ii, li)];
                            acc.seconds += imputer_seconds;
                            acc.error.get_or_insert_with(|| e.to_string());
                        }
                    }
                }
            }
        }
    }

    let mut cells = Vec::with_capacity(accumulators.len());
    for (fi, &fraction) in plan.train_fractions.iter().enumerate() {
        for (ii, imputer) in plan.imputers.iter().enumerate() {
            for (li, learner) in plan.learners.iter().enumerate() {
                let acc = &accumulators[cell_index(fi, ii, li)];
                let (mean, stddev) = if acc.error.is_none() {
                    let n = acc.values.len() as f64;
                    let mean = acc.values.iter().sum::<f64>() / n;
                    let variance =
                        acc.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    (Some(mean), Some(variance.sqrt()))
                } else {
                    (None, None)
                };
                cells.push(BenchmarkCell {
                    train_fraction: fraction,
                    imputer: imputer.label(),
                    learner: learner.label(),
                    trial_values: acc.values.clone(),
                    mean,
                    stddev,
                    error: acc.error.clone(),
                    seconds: acc.seconds,
                });
            }
        }
    }
    Ok(BenchmarkReport {
        plan: plan.clone(),
        cells,
    })
}

/// Imputer-comparison convenience: requires exactly one learner so the
/// report pivots to fractions x imputers.
pub fn compare_imputers(plan: &BenchmarkPlan, table: &Table) -> Result<BenchmarkReport> {
    if plan.learners.len() != 1 {
        return Err(Error::Plan(format!(
            "compare_imputers expects exactly one learner, got {}",
            plan.learners.len()
        )));
    }
    run(plan, table)
}

/// Learner-comparison convenience: requires exactly one imputer so the
/// report pivots to fractions x learners.
pub fn compare_learners(plan: &BenchmarkPlan, table: &Table) -> Result<BenchmarkReport> {
    if plan.imputers.len() != 1 {
        return Err(Error::Plan(format!(
            "compare_learners expects exactly one imputer, got {}",
            plan.imputers.len()
        )));
    }
    run(plan, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::Task;

    fn small_regression_table() -> Table {
        synth_regression(&SyntheticSpec::regression(80, 3, 7)).unwrap()
    }

    fn base_plan() -> BenchmarkPlan {
        BenchmarkPlan {
            train_fractions: vec![0.5],
            trials: 1,
            base_seed: 3,
            imputers: vec![ImputerSpec::mean()],
            learners: vec![LearnerSpec::linear(0.0)],
            missingness: MissingnessSpec::mcar(["x0"], 0.2, 0),
            metric: MetricKind::Mse,
            target_column: "target".into(),
        }
    }

    #[test]
    fn single_cell_plan_has_one_cell_with_zero_stddev() {
        let report = run(&base_plan(), &small_regression_table()).unwrap();
        assert_eq!(report.cells.len(), 1);
        let cell = &report.cells[0];
        assert!(cell.error.is_none());
        assert_eq!(cell.trial_values.len(), 1);
        assert_eq!(cell.stddev, Some(0.0));
    }

    #[test]
    fn default_fractions_give_nine_rows() {
        let mut plan = base_plan();
        plan.train_fractions = default_train_fractions();
        plan.imputers = vec![
            ImputerSpec::zero(),
            ImputerSpec::mean(),
            ImputerSpec::median(),
            BenchmarkPlan::default_ml_imputer(),
        ];
        plan.trials = 2;
        let report = run(&plan, &small_regression_table()).unwrap();
        // Table-2 dimensions: 9 fractions x 4 imputers x 1 learner.
        assert_eq!(report.cells.len(), 36);
        let markdown = report.to_markdown();
        assert_eq!(markdown.lines().count(), 2 + 9);
        assert!(markdown.contains("| 10% |"));
        assert!(markdown.contains("| 90% |"));
        assert!(markdown.contains("zero"));
        assert!(markdown.contains("iterative"));
    }

    #[test]
    fn identical_runs_serialize_byte_identically() {
        let table = small_regression_table();
        let mut plan = base_plan();
        plan.trials = 3;
        plan.train_fractions = vec![0.3, 0.6];
        let a = run(&plan, &table).unwrap().to_json().unwrap();
        let b = run(&plan, &table).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cell_failures_are_isolated() {
        let mut plan = base_plan();
        // A classification learner cannot fit the numeric target; the
        // linear cells must be untouched by its failure.
        plan.learners = vec![LearnerSpec::linear(0.0), LearnerSpec::tree(Task::Classification)];
        let report = run(&plan, &small_regression_table()).unwrap();
        assert_eq!(report.cells.len(), 2);
        assert!(!report.cells[0].failed());
        assert!(report.cells[1].failed());
        assert!(report.cells[0].mean.is_some());
        assert!(!report.all_failed());
    }

    #[test]
    fn metric_task_mismatch_is_plan_error() {
        let mut plan = base_plan();
        plan.metric = MetricKind::Accuracy;
        assert!(matches!(
            run(&plan, &small_regression_table()),
            Err(Error::Plan(_))
        ));
    }

    #[test]
    fn missingness_may_not_target_the_plan_target() {
        let mut plan = base_plan();
        plan.missingness = MissingnessSpec::mcar(["target"], 0.2, 0);
        assert!(matches!(
            run(&plan, &small_regression_table()),
            Err(Error::Plan(_))
        ));
        // A mixed set is fine: the target is stripped, the rest is used.
        plan.missingness = MissingnessSpec::mcar(["target", "x0"], 0.2, 0);
        let report = run(&plan, &small_regression_table()).unwrap();
        assert!(!report.cells[0].failed());
    }

    #[test]
    fn compare_wrappers_enforce_shape() {
        let table = small_regression_table();
        let mut plan = base_plan();
        plan.imputers = vec![ImputerSpec::zero(), ImputerSpec::mean()];
        assert!(compare_imputers(&plan, &table).is_ok());
        assert!(compare_learners(&plan, &table).is_err());
        plan.imputers = vec![ImputerSpec::mean()];
        plan.learners = vec![LearnerSpec::linear(0.0), LearnerSpec::gbt(5, 0.5, 2)];
        assert!(compare_learners(&plan, &table).is_ok());
        assert!(compare_imputers(&plan, &table).is_err());
    }

    #[test]
    fn plan_json_round_trip() {
        let plan = base_plan();
        let json = serde_json::to_string(&plan).unwrap();
        let back: BenchmarkPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, plan);
        // Defaults kick in for omitted fields.
        let minimal: BenchmarkPlan = serde_json::from_str(
            r#"{
                "imputers": [{"strategy": "mean"}],
                "learners": [{"kind": "linear"}],
                "missingness": {"mechanism": "mcar", "target_columns": ["x0"], "rate": 0.1, "seed": 0},
                "metric": "mse",
                "target_column": "target"
            }"#,
        )
        .unwrap();
        assert_eq!(minimal.train_fractions, default_train_fractions());
        assert_eq!(minimal.trials, 5);
    }

    #[test]
    fn csv_and_plot_outputs_have_cell_rows() {
        let mut plan = base_plan();
        plan.train_fractions = vec![0.4, 0.6];
        let report = run(&plan, &small_regression_table()).unwrap();
        let csv = report.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 1 + 2);
        assert!(csv.starts_with("train_fraction,imputer,learner"));
        let plot = report.to_plot_csv().unwrap();
        assert_eq!(plot.lines().count(), 1 + 2);
        assert!(plot.starts_with("fraction,series,value"));
    }
}
