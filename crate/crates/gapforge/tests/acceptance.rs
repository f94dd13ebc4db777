//! Acceptance suite: one test per criterion. Each test prints a
//! `[PASS] criterion N` line with the measured quantities (visible with
//! `cargo test --test acceptance -- --nocapture`).

mod common;

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gapforge::benchmark::{
    compare_imputers, compare_learners, default_train_fractions, run, synth_classification,
    synth_regression, BenchmarkPlan, MetricKind, SyntheticSpec,
};
use gapforge::imputers::{self, ImputerSpec};
use gapforge::learners::{LearnerSpec, Task};
use gapforge::metrics::{
    classification_report, confusion_matrix, macro_average, round_half_up, weighted_average,
    ClassificationReport,
};
use gapforge::missingness::{inject, mask_value_dependence, MissingnessSpec};
use gapforge::tabular::{load_csv, write_csv, Column, CsvOptions, Table};

/// The regression family of criteria 1 and 2: 1,000 rows, 8 numeric
/// features shifted to 10, MCAR 20% on four of them.
fn offset_regression_spec(seed: u64) -> SyntheticSpec {
    let mut spec = SyntheticSpec::regression(1000, 8, seed);
    spec.feature_offset = 10.0;
    spec.noise_stddev = 0.5;
    spec
}

fn mcar_four_features(seed: u64) -> MissingnessSpec {
    MissingnessSpec::mcar(["x0", "x1", "x2", "x3"], 0.2, seed)
}

fn gbt_learner() -> LearnerSpec {
    LearnerSpec::gbt(50, 0.1, 3)
}

fn regression_plan(imputers: Vec<ImputerSpec>, base_seed: u64) -> BenchmarkPlan {
    BenchmarkPlan {
        train_fractions: default_train_fractions(),
        trials: 5,
        base_seed,
        imputers,
        learners: vec![gbt_learner()],
        missingness: mcar_four_features(0),
        metric: MetricKind::Mse,
        target_column: "target".into(),
    }
}

fn cell_mean(report: &gapforge::benchmark::BenchmarkReport, fraction: f64, imputer: &str) -> f64 {
    report
        .cell(fraction, imputer, &gbt_learner().label())
        .unwrap_or_else(|| panic!("cell ({fraction}, {imputer}) missing"))
        .mean
        .unwrap_or_else(|| panic!("cell ({fraction}, {imputer}) failed"))
}

#[test]
fn c1_zero_impute_worst_at_every_fraction() {
    let started = Instant::now();
    let table = synth_regression(&offset_regression_spec(41)).unwrap();
    let plan = regression_plan(vec![ImputerSpec::zero(), ImputerSpec::mean()], 17);
    let report = compare_imputers(&plan, &table).unwrap();

    let mut worst_ratio = f64::INFINITY;
    for &fraction in &plan.train_fractions {
        let zero = cell_mean(&report, fraction, "zero");
        let mean = cell_mean(&report, fraction, "mean");
        let ratio = zero / mean;
        worst_ratio = worst_ratio.min(ratio);
        assert!(
            zero >= 5.0 * mean,
            "fraction {fraction}: zero-impute MSE {zero} < 5x mean-impute MSE {mean}"
        );
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "criterion 1 took {elapsed:?}, budget 60 s"
    );
    println!(
        "[PASS] criterion 1: zero-impute worst at all 9 fractions \
         (min zero/mean ratio {worst_ratio:.1}, {elapsed:.1?})"
    );
}

#[test]
fn c2_ml_imputation_beats_mean_and_median() {
    let started = Instant::now();
    let table = synth_regression(&offset_regression_spec(42)).unwrap();
    let ml = ImputerSpec::iterative(LearnerSpec::gbt(30, 0.1, 3), 3)
        .on_columns(["x0", "x1", "x2", "x3"]);
    let ml_label = ml.label();

    let base_seeds = [101_u64, 202, 303, 404, 505];
    let mut winning_seeds = 0;
    let mut fraction_wins = Vec::new();
    for &base_seed in &base_seeds {
        let plan = regression_plan(
            vec![ImputerSpec::mean(), ImputerSpec::median(), ml.clone()],
            base_seed,
        );
        let report = compare_imputers(&plan, &table).unwrap();
        let mut won = 0;
        for &fraction in &plan.train_fractions {
            let ml_mse = cell_mean(&report, fraction, &ml_label);
            let mean_mse = cell_mean(&report, fraction, "mean");
            let median_mse = cell_mean(&report, fraction, "median");
            if ml_mse < mean_mse && ml_mse < median_mse {
                won += 1;
            }
        }
        fraction_wins.push(won);
        if won >= 8 {
            winning_seeds += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(
        winning_seeds >= 4,
        "ML imputation won >= 8/9 fractions in only {winning_seeds}/5 seeds (wins: {fraction_wins:?})"
    );
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "criterion 2 took {elapsed:?}, budget 5 min"
    );
    println!(
        "[PASS] criterion 2: ML imputation best in {winning_seeds}/5 seeds \
         (fraction wins {fraction_wins:?}, {elapsed:.1?})"
    );
}

#[test]
fn c3_classification_degradation_direction() {
    let ml = ImputerSpec::iterative(LearnerSpec::gbt(20, 0.1, 3), 2).on_columns(["x0"]);
    let ml_label = ml.label();
    let tree = LearnerSpec::tree(Task::Classification);
    let tree_label = tree.label();

    let mut differences = Vec::new();
    for seed in [1_u64, 2, 3, 4, 5] {
        let spec = SyntheticSpec::classification(2000, 4, 2, 4.0, seed);
        let table = synth_classification(&spec).unwrap();
        let plan = BenchmarkPlan {
            train_fractions: vec![0.7],
            trials: 1,
            base_seed: seed.wrapping_mul(911),
            imputers: vec![ImputerSpec::zero(), ml.clone()],
            learners: vec![tree.clone()],
            // The top tail of the most informative feature goes missing.
            missingness: MissingnessSpec::mnar("x0", 0.7, 0.9, 0),
            metric: MetricKind::Accuracy,
            target_column: "label".into(),
        };
        let report = run(&plan, &table).unwrap();
        let zero_accuracy = report
            .cell(0.7, "zero", &tree_label)
            .unwrap()
            .mean
            .expect("zero cell");
        let ml_accuracy = report
            .cell(0.7, &ml_label, &tree_label)
            .unwrap()
            .mean
            .expect("ml cell");
        differences.push(ml_accuracy - zero_accuracy);
    }
    let average = differences.iter().sum::<f64>() / differences.len() as f64;
    assert!(
        average >= 0.02,
        "accuracy(iterative) - accuracy(zero) averaged {average:.4} < 0.02 ({differences:?})"
    );
    println!(
        "[PASS] criterion 3: iterative impute beats zero impute by {average:.3} \
         accuracy on MNAR-masked classification ({differences:?})"
    );
}

#[test]
fn c4_train_size_trend_for_gbt_and_bagging() {
    let table = synth_regression(&SyntheticSpec::regression(1000, 8, 77)).unwrap();
    let bagging = LearnerSpec::Bagging {
        base: Box::new(LearnerSpec::tree(Task::Regression)),
        n_estimators: 15,
        sample_fraction: 0.8,
        with_replacement: true,
        seed: 5,
    };
    let plan = BenchmarkPlan {
        train_fractions: vec![0.1, 0.9],
        trials: 5,
        base_seed: 23,
        imputers: vec![ImputerSpec::mean()],
        learners: vec![gbt_learner(), bagging.clone()],
        missingness: MissingnessSpec::mcar(["x0"], 0.0, 0),
        metric: MetricKind::Mse,
        target_column: "target".into(),
    };
    let report = compare_learners(&plan, &table).unwrap();
    for learner in [&gbt_learner(), &bagging] {
        let label = learner.label();
        let small = report.cell(0.1, "mean", &label).unwrap().mean.unwrap();
        let large = report.cell(0.9, "mean", &label).unwrap().mean.unwrap();
        assert!(
            large < small,
            "{label}: MSE at 90% train ({large}) not below MSE at 10% ({small})"
        );
        println!(
            "[PASS] criterion 4: {label} improves with train size \
             (MSE {small:.3} at 10% -> {large:.3} at 90%)"
        );
    }
}

/// Brute-force per-class TP/FP/FN oracle for the classification report.
fn oracle_report(truth: &[usize], predicted: &[usize]) -> ClassificationReport {
    let mut labels: Vec<usize> = truth.iter().chain(predicted).copied().collect();
    labels.sort_unstable();
    labels.dedup();
    let n = truth.len();

    let mut per_class = Vec::new();
    let mut zero_denominator_classes = Vec::new();
    for &label in &labels {
        let tp = truth
            .iter()
            .zip(predicted)
            .filter(|(t, p)| **t == label && **p == label)
            .count();
        let fp = truth
            .iter()
            .zip(predicted)
            .filter(|(t, p)| **t != label && **p == label)
            .count();
        let fn_ = truth
            .iter()
            .zip(predicted)
            .filter(|(t, p)| **t == label && **p != label)
            .count();
        let support = tp + fn_;
        let mut flagged = false;
        let precision = if tp + fp == 0 {
            flagged = true;
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if support == 0 {
            flagged = true;
            0.0
        } else {
            tp as f64 / support as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        if flagged {
            zero_denominator_classes.push(label);
        }
        per_class.push(gapforge::metrics::ClassMetrics {
            label,
            precision,
            recall,
            f1,
            support,
        });
    }
    let correct = truth
        .iter()
        .zip(predicted)
        .filter(|(t, p)| t == p)
        .count();
    let precisions: Vec<f64> = per_class.iter().map(|c| c.precision).collect();
    let recalls: Vec<f64> = per_class.iter().map(|c| c.recall).collect();
    let f1s: Vec<f64> = per_class.iter().map(|c| c.f1).collect();
    let supports: Vec<usize> = per_class.iter().map(|c| c.support).collect();
    ClassificationReport {
        accuracy: correct as f64 / n as f64,
        macro_avg: gapforge::metrics::Averages {
            precision: macro_average(&precisions),
            recall: macro_average(&recalls),
            f1: macro_average(&f1s),
        },
        weighted_avg: gapforge::metrics::Averages {
            precision: weighted_average(&precisions, &supports),
            recall: weighted_average(&recalls, &supports),
            f1: weighted_average(&f1s, &supports),
        },
        total_support: n,
        per_class,
        zero_denominator_classes,
    }
}

#[test]
fn c5_metric_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..200 {
        let n = rng.random_range(1..=30);
        let n_classes = rng.random_range(1..=4);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_classes)).collect();
        let predicted: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_classes)).collect();
        let report =
            classification_report(&confusion_matrix(&truth, &predicted).unwrap()).unwrap();
        let expected = oracle_report(&truth, &predicted);
        assert_eq!(report, expected, "case {case} diverged from the oracle");
    }

    // The two-class panel aggregation: precisions 0.94/0.89 with supports
    // 1,001,172/76,999 give weighted 0.94 and macro 0.92 at 2 decimals.
    let weighted = weighted_average(&[0.94, 0.89], &[1_001_172, 76_999]);
    let unweighted = macro_average(&[0.94, 0.89]);
    assert_eq!(round_half_up(weighted, 2), 0.94);
    assert_eq!(round_half_up(unweighted, 2), 0.92);
    println!(
        "[PASS] criterion 5: report matches the counting oracle on 200 cases; \
         weighted {weighted:.4} -> 0.94, macro {unweighted:.4} -> 0.92"
    );
}

#[test]
fn c6_injection_statistics() {
    // MCAR: empirical rate within 3-sigma binomial bounds on 500 cells.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cells: Vec<Option<f64>> = (0..500)
        .map(|_| Some(rng.sample::<f64, _>(rand_distr::StandardNormal)))
        .collect();
    let table = Table::new(vec![Column::numeric("a", cells).unwrap()]).unwrap();
    for (rate, seed) in [(0.1, 11_u64), (0.2, 12), (0.5, 13)] {
        let injected = inject(&table, &MissingnessSpec::mcar(["a"], rate, seed)).unwrap();
        let fraction = injected.newly_missing_count() as f64 / 500.0;
        let sigma = (rate * (1.0 - rate) / 500.0_f64).sqrt();
        assert!(
            (fraction - rate).abs() <= 3.0 * sigma,
            "MCAR rate {rate}: empirical {fraction} outside +/- {:.4}",
            3.0 * sigma
        );
    }

    // MNAR: the newly-missing indicator correlates with the hidden values.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cells: Vec<Option<f64>> = (0..1000)
        .map(|_| Some(rng.sample::<f64, _>(rand_distr::StandardNormal)))
        .collect();
    let table = Table::new(vec![Column::numeric("a", cells).unwrap()]).unwrap();
    let injected = inject(&table, &MissingnessSpec::mnar("a", 0.8, 0.9, 21)).unwrap();
    let dependence = mask_value_dependence(&table, injected.table(), "a").unwrap();
    assert!(
        dependence > 0.3,
        "MNAR mask/value dependence {dependence} not above 0.3"
    );
    println!(
        "[PASS] criterion 6: MCAR rates within 3-sigma at p in {{0.1, 0.2, 0.5}}; \
         MNAR dependence {dependence:.3} > 0.3"
    );
}

#[test]
fn c7_exact_recovery() {
    // Regression imputation restores an exactly affine column.
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let n = 80;
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let truth: Vec<f64> = a.iter().zip(&c).map(|(a, c)| 2.0 * a - 0.5 * c + 3.0).collect();
    let masked_rows: Vec<usize> = (0..n).filter(|r| r % 5 == 0).collect();
    let b_cells: Vec<Option<f64>> = truth
        .iter()
        .enumerate()
        .map(|(r, &v)| if r % 5 == 0 { None } else { Some(v) })
        .collect();
    let table = Table::new(vec![
        Column::numeric("a", a.into_iter().map(Some).collect()).unwrap(),
        Column::numeric("b", b_cells).unwrap(),
        Column::numeric("c", c.into_iter().map(Some).collect()).unwrap(),
    ])
    .unwrap();
    let spec = ImputerSpec::regression(LearnerSpec::linear(0.0)).on_columns(["b"]);
    let completed = imputers::fit_transform(&spec, &table).unwrap();
    let mut worst = 0.0_f64;
    for &row in &masked_rows {
        let fill = completed.column("b").unwrap().number(row).unwrap();
        let expected = truth[row];
        let relative = (fill - expected).abs() / expected.abs().max(1.0);
        worst = worst.max(relative);
        assert!(
            relative <= 1e-6,
            "row {row}: fill {fill} vs {expected} (relative {relative:e})"
        );
    }

    // OLS recovers y = 2x + 1 within 1e-9, probed through predictions.
    let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 2.0]).collect();
    let ys: Vec<f64> = xs.iter().map(|r| 2.0 * r[0] + 1.0).collect();
    let matrix = gapforge::learners::DesignMatrix::from_parts(
        xs,
        vec!["x".into()],
        gapforge::learners::Targets::Numeric(ys),
    )
    .unwrap();
    let model = LearnerSpec::linear(0.0).fit(&matrix).unwrap();
    let at = |x: f64| {
        model.predict_rows(&[vec![x]]).unwrap().as_numeric().unwrap()[0]
    };
    let intercept = at(0.0);
    let slope = at(1.0) - intercept;
    assert!((slope - 2.0).abs() < 1e-9, "slope {slope}");
    assert!((intercept - 1.0).abs() < 1e-9, "intercept {intercept}");
    println!(
        "[PASS] criterion 7: affine recovery worst relative error {worst:.2e}; \
         OLS slope {slope:.12}, intercept {intercept:.12}"
    );
}

#[test]
fn c8_determinism() {
    // Identical plans serialize byte-identically.
    let table = synth_regression(&offset_regression_spec(43)).unwrap();
    let plan = BenchmarkPlan {
        train_fractions: vec![0.3, 0.7],
        trials: 3,
        base_seed: 99,
        imputers: vec![ImputerSpec::mean(), ImputerSpec::knn(5)],
        learners: vec![LearnerSpec::linear(0.0)],
        missingness: mcar_four_features(0),
        metric: MetricKind::Mse,
        target_column: "target".into(),
    };
    let first = run(&plan, &table).unwrap().to_json().unwrap();
    let second = run(&plan, &table).unwrap().to_json().unwrap();
    assert_eq!(first, second, "repeated runs diverged");

    // CSV round-trip identity on 100 random tables.
    for seed in 0..100 {
        let table = common::random_table(seed, 1, 1);
        let mut buffer = Vec::new();
        write_csv(&table, &mut buffer, "NaN").unwrap();
        let reloaded = load_csv(buffer.as_slice(), &CsvOptions::default()).unwrap();
        assert_eq!(reloaded, table, "round-trip diverged for seed {seed}");
    }
    println!("[PASS] criterion 8: byte-identical reports; 100/100 CSV round-trips exact");
}
