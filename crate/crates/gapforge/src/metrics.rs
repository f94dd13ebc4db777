//! Regression and classification metrics, including the per-class /
//! macro / weighted classification-report layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean squared error.
pub fn mse(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    check_lengths(predictions, actuals)?;
    let sum: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Root mean squared error.
pub fn rmse(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    Ok(mse(predictions, actuals)?.sqrt())
}

/// Outcome of an RMSLE evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rmsle {
    pub value: f64,
    /// Negative predictions clipped to zero before the log.
    pub clipped_predictions: usize,
}

/// Root mean squared logarithmic error:
/// `sqrt(mean((ln(1+p) - ln(1+a))^2))`.
///
/// Negative predictions are clipped to zero (counted in the result);
/// negative actuals are a domain error.
pub fn rmsle(predictions: &[f64], actuals: &[f64]) -> Result<Rmsle> {
    check_lengths(predictions, actuals)?;
    if let Some(bad) = actuals.iter().find(|a| **a < 0.0) {
        return Err(Error::Domain(format!(
            "rmsle requires nonnegative actuals, got {bad}"
        )));
    }
    let mut clipped = 0;
    let mut sum = 0.0;
    for (&p, &a) in predictions.iter().zip(actuals) {
        let p = if p < 0.0 {
            clipped += 1;
            0.0
        } else {
            p
        };
        let d = p.ln_1p() - a.ln_1p();
        sum += d * d;
    }
    Ok(Rmsle {
        value: (sum / predictions.len() as f64).sqrt(),
        clipped_predictions: clipped,
    })
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Domain("empty vectors".into()));
    }
    Ok(())
}

/// Counts of true label x predicted label pairs. The label set is the
/// sorted union of both vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<usize>,
    /// `counts[i][j]`: samples with true label `labels[i]` predicted as `labels[j]`.
    counts: Vec<Vec<usize>>,
}

pub fn confusion_matrix(true_labels: &[usize], predicted_labels: &[usize]) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted_labels.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} vs {}",
            true_labels.len(),
            predicted_labels.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::Domain("empty label vectors".into()));
    }
    let labels: Vec<usize> = {
        let mut set: Vec<usize> = true_labels
            .iter()
            .chain(predicted_labels)
            .copied()
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    };
    let index = |label: usize| labels.binary_search(&label).expect("label in union");
    let mut counts = vec![vec![0_usize; labels.len()]; labels.len()];
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        counts[index(t)][index(p)] += 1;
    }
    Ok(ConfusionMatrix { labels, counts })
}

impl ConfusionMatrix {
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    /// Count of samples with true label `t` predicted as `p`.
    pub fn count(&self, t: usize, p: usize) -> usize {
        match (
            self.labels.binary_search(&t),
            self.labels.binary_search(&p),
        ) {
            (Ok(i), Ok(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    /// Row sum: number of samples whose true label is `labels[i]`.
    pub fn support(&self, i: usize) -> usize {
        self.counts[i].iter().sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

/// One row of the classification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Unweighted or support-weighted metric averages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class precision/recall/F1/support with accuracy, macro, and
/// support-weighted averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total_support: usize,
    /// Classes whose precision or recall had a zero denominator and were
    /// reported as 0.
    pub zero_denominator_classes: Vec<usize>,
}

/// Unweighted mean over classes.
pub fn macro_average(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Support-weighted mean over classes.
pub fn weighted_average(values: &[f64], supports: &[usize]) -> f64 {
    let total: usize = supports.iter().sum();
    values
        .iter()
        .zip(supports)
        .map(|(v, &s)| v * s as f64)
        .sum::<f64>()
        / total as f64
}

/// Rounds a nonnegative value half-up at `decimals` places, the display
/// rule of the report renderer.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10_f64.powi(decimals as i32);
    (value * scale + 0.5).floor() / scale
}

pub fn classification_report(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Domain("classification report needs samples".into()));
    }
    let n = cm.labels().len();
    let mut per_class = Vec::with_capacity(n);
    let mut zero_denominator_classes = Vec::new();
    let mut trace = 0_usize;
    for i in 0..n {
        let tp = cm.counts[i][i];
        trace += tp;
        let support = cm.support(i);
        let column_sum: usize = (0..n).map(|r| cm.counts[r][i]).sum();
        let mut flagged = false;
        let precision = if column_sum == 0 {
            flagged = true;
            0.0
        } else {
            tp as f64 / column_sum as f64
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
            zero_denominator_classes.push(cm.labels[i]);
        }
        per_class.push(ClassMetrics {
            label: cm.labels[i],
            precision,
            recall,
            f1,
            support,
        });
    }

    let precisions: Vec<f64> = per_class.iter().map(|c| c.precision).collect();
    let recalls: Vec<f64> = per_class.iter().map(|c| c.recall).collect();
    let f1s: Vec<f64> = per_class.iter().map(|c| c.f1).collect();
    let supports: Vec<usize> = per_class.iter().map(|c| c.support).collect();

    Ok(ClassificationReport {
        accuracy: trace as f64 / total as f64,
        macro_avg: Averages {
            precision: macro_average(&precisions),
            recall: macro_average(&recalls),
            f1: macro_average(&f1s),
        },
        weighted_avg: Averages {
            precision: weighted_average(&precisions, &supports),
            recall: weighted_average(&recalls, &supports),
            f1: weighted_average(&f1s, &supports),
        },
        total_support: total,
        per_class,
        zero_denominator_classes,
    })
}

impl ClassificationReport {
    /// Fixed-width text block: one row per class, then accuracy (printed in
    /// the f1 column), macro avg, and weighted avg.
    pub fn render_text(&self) -> String {
        let label_width = self
            .per_class
            .iter()
            .map(|c| c.label.to_string().len())
            .chain(std::iter::once("weighted avg".len()))
            .max()
            .unwrap_or(12);
        let fmt = |v: f64| format!("{:.2}", round_half_up(v, 2));

        let mut out = String::new();
        out.push_str(&format!(
            "{:>label_width$}  {:>9} {:>9} {:>9} {:>9}\n\n",
            "", "precision", "recall", "f1-score", "support"
        ));
        for class in &self.per_class {
            out.push_str(&format!(
                "{:>label_width$}  {:>9} {:>9} {:>9} {:>9}\n",
                class.label,
                fmt(class.precision),
                fmt(class.recall),
                fmt(class.f1),
                class.support
            ));
        }
        out.push('\n');
        out.push_str(&format!(
            "{:>label_width$}  {:>9} {:>9} {:>9} {:>9}\n",
            "accuracy",
            "",
            "",
            fmt(self.accuracy),
            self.total_support
        ));
        out.push_str(&format!(
            "{:>label_width$}  {:>9} {:>9} {:>9} {:>9}\n",
            "macro avg",
            fmt(self.macro_avg.precision),
            fmt(self.macro_avg.recall),
            fmt(self.macro_avg.f1),
            self.total_support
        ));
        out.push_str(&format!(
            "{:>label_width$}  {:>9} {:>9} {:>9} {:>9}\n",
            "weighted avg",
            fmt(self.weighted_avg.precision),
            fmt(self.weighted_avg.recall),
            fmt(self.weighted_avg.f1),
            self.total_support
        ));
        out
    }
}

impl std::fmt::Display for ClassificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render_text())
    }
}
