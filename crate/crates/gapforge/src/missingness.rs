//! Seeded injection of MCAR, MAR, and MNAR missingness, plus a dependence
//! diagnostic that distinguishes the mechanisms statistically.
//!
//! Injection composes with existing gaps by OR: it never unmasks a cell and
//! never changes an observed value. The values hidden by an injection are
//! kept in a sealed companion (`Injection`) for test oracles only; they are
//! not reachable through the table itself.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{Column, ColumnKind, Table};

/// The three generative mechanisms.
///
/// * MCAR masks each observed target cell independently with probability
///   `rate`.
/// * MAR masks a target cell in row `i` with probability
///   `sigmoid(logit(base_rate) + slope * z_i)` where `z_i` is the driver
///   value standardized by the driver's own mean and standard deviation.
/// * MNAR masks observed target cells lying strictly above the column's
///   `quantile`-quantile, each with probability `rate`; cells at or below
///   the quantile are untouched.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "lowercase")]
pub enum Mechanism {
    Mcar {
        target_columns: Vec<String>,
        rate: f64,
    },
    Mar {
        target_column: String,
        driver_column: String,
        base_rate: f64,
        slope: f64,
    },
    Mnar {
        target_column: String,
        quantile: f64,
        rate: f64,
    },
}

/// A missingness mechanism plus the seed that makes it reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingnessSpec {
    #[serde(flatten)]
    pub mechanism: Mechanism,
    pub seed: u64,
}

impl MissingnessSpec {
    pub fn mcar<S: Into<String>>(
        targets: impl IntoIterator<Item = S>,
        rate: f64,
        seed: u64,
    ) -> Self {
        MissingnessSpec {
            mechanism: Mechanism::Mcar {
                target_columns: targets.into_iter().map(Into::into).collect(),
                rate,
            },
            seed,
        }
    }

    pub fn mar(
        target: impl Into<String>,
        driver: impl Into<String>,
        base_rate: f64,
        slope: f64,
        seed: u64,
    ) -> Self {
        MissingnessSpec {
            mechanism: Mechanism::Mar {
                target_column: target.into(),
                driver_column: driver.into(),
                base_rate,
                slope,
            },
            seed,
        }
    }

    pub fn mnar(target: impl Into<String>, quantile: f64, rate: f64, seed: u64) -> Self {
        MissingnessSpec {
            mechanism: Mechanism::Mnar {
                target_column: target.into(),
                quantile,
                rate,
            },
            seed,
        }
    }

    /// A copy with the seed replaced.
    pub fn with_seed(&self, seed: u64) -> Self {
        MissingnessSpec {
            mechanism: self.mechanism.clone(),
            seed,
        }
    }

    /// The columns the mechanism masks.
    pub fn target_columns(&self) -> Vec<&str> {
        match &self.mechanism {
            Mechanism::Mcar { target_columns, .. } => {
                target_columns.iter().map(String::as_str).collect()
            }
            Mechanism::Mar { target_column, .. } | Mechanism::Mnar { target_column, .. } => {
                vec![target_column.as_str()]
            }
        }
    }

    /// Validates field ranges and column references against a table.
    pub fn validate(&self, table: &Table) -> Result<()> {
        match &self.mechanism {
            Mechanism::Mcar {
                target_columns,
                rate,
            } => {
                if !(0.0..=1.0).contains(rate) {
                    return Err(Error::Domain(format!(
                        "mcar.rate must be within [0, 1], got {rate}"
                    )));
                }
                if target_columns.is_empty() {
                    return Err(Error::Domain("mcar.target_columns must be nonempty".into()));
                }
                for name in target_columns {
                    table.require_column(name)?;
                }
            }
            Mechanism::Mar {
                target_column,
                driver_column,
                base_rate,
                ..
            } => {
                if !(*base_rate > 0.0 && *base_rate < 1.0) {
                    return Err(Error::Domain(format!(
                        "mar.base_rate must be within (0, 1), got {base_rate}"
                    )));
                }
                if target_column == driver_column {
                    return Err(Error::Domain(
                        "mar.driver_column must differ from mar.target_column".into(),
                    ));
                }
                table.require_column(target_column)?;
                let driver = table.require_column(driver_column)?;
                if driver.kind() != ColumnKind::Numeric {
                    return Err(Error::Precondition(format!(
                        "mar.driver_column '{driver_column}' must be numeric"
                    )));
                }
                if !driver.fully_observed() {
                    return Err(Error::Precondition(format!(
                        "mar.driver_column '{driver_column}' must be fully observed"
                    )));
                }
            }
            Mechanism::Mnar {
                target_column,
                quantile,
                rate,
            } => {
                if !(*quantile > 0.0 && *quantile < 1.0) {
                    return Err(Error::Domain(format!(
                        "mnar.quantile must be within (0, 1), got {quantile}"
                    )));
                }
                if !(0.0..=1.0).contains(rate) {
                    return Err(Error::Domain(format!(
                        "mnar.rate must be within [0, 1], got {rate}"
                    )));
                }
                let target = table.require_column(target_column)?;
                if target.kind() != ColumnKind::Numeric {
                    return Err(Error::Precondition(format!(
                        "mnar.target_column '{target_column}' must be numeric"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A value hidden by injection, held for oracles only.
#[derive(Clone, Debug, PartialEq)]
enum HeldValue {
    Number(f64),
    Code(u32),
}

/// The injected table together with the sealed held-out originals.
#[derive(Clone, Debug)]
pub struct Injection {
    table: Table,
    held_out: Vec<(String, usize, HeldValue)>,
}

impl Injection {
    /// The public view: mask extended, observed values untouched.
    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn into_table(self) -> Table {
        self.table
    }

    /// Number of cells newly masked by the injection.
    pub fn newly_missing_count(&self) -> usize {
        self.held_out.len()
    }

    /// Held-out numeric originals for one column as `(row, value)` pairs.
    ///
    /// This is the oracle-side companion; imputers only ever see the table.
    pub fn held_out_numeric(&self, column: &str) -> Vec<(usize, f64)> {
        self.held_out
            .iter()
            .filter_map(|(name, row, value)| match value {
                HeldValue::Number(v) if name == column => Some((*row, *v)),
                _ => None,
            })
            .collect()
    }
}

/// Linear-interpolation sample quantile of `sorted` (ascending, nonempty).
fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let position = q * (n - 1) as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    let weight = position - lower as f64;
    sorted[lower] + (sorted[upper] - sorted[lower]) * weight
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Applies a missingness mechanism to a table.
///
/// Identical `(table, spec)` pairs produce identical masks.
pub fn inject(table: &Table, spec: &MissingnessSpec) -> Result<Injection> {
    spec.validate(table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut held_out: Vec<(String, usize, HeldValue)> = Vec::new();
    let mut out = table.clone();

    match &spec.mechanism {
        Mechanism::Mcar {
            target_columns,
            rate,
        } => {
            // Iterate in table order so the draw stream does not depend on
            // the order the caller listed the targets in.
            for column in table.columns() {
                if !target_columns.iter().any(|n| n == column.name()) {
                    continue;
                }
                let mut mask_rows = Vec::new();
                for row in 0..table.n_rows() {
                    if column.is_observed(row) && rng.random::<f64>() < *rate {
                        mask_rows.push(row);
                    }
                }
                out = out.replace_column(masked_copy(column, &mask_rows, &mut held_out))?;
            }
        }
        Mechanism::Mar {
            target_column,
            driver_column,
            base_rate,
            slope,
        } => {
            let driver = table.require_column(driver_column)?;
            let driver_values: Vec<f64> = (0..table.n_rows())
                .map(|row| {
                    driver.number(row).ok_or_else(|| {
                        Error::Precondition(format!(
                            "driver column '{driver_column}' is missing at row {row}"
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            let n = driver_values.len() as f64;
            let (mean, std) = if driver_values.is_empty() {
                (0.0, 0.0)
            } else {
                let mean = driver_values.iter().sum::<f64>() / n;
                let var = driver_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            };
            let intercept = logit(*base_rate);
            let column = table.require_column(target_column)?;
            let mut mask_rows = Vec::new();
            for row in 0..table.n_rows() {
                let z = if std > 0.0 {
                    (driver_values[row] - mean) / std
                } else {
                    0.0
                };
                let probability = sigmoid(intercept + slope * z);
                if column.is_observed(row) && rng.random::<f64>() < probability {
                    mask_rows.push(row);
                }
            }
            out = out.replace_column(masked_copy(column, &mask_rows, &mut held_out))?;
        }
        Mechanism::Mnar {
            target_column,
            quantile,
            rate,
        } => {
            let column = table.require_column(target_column)?;
            let mut observed = column.observed_numeric();
            let mut mask_rows = Vec::new();
            if !observed.is_empty() {
                observed.sort_by(f64::total_cmp);
                let threshold = interpolated_quantile(&observed, *quantile);
                for row in 0..table.n_rows() {
                    if let Some(value) = column.number(row) {
                        if value > threshold && rng.random::<f64>() < *rate {
                            mask_rows.push(row);
                        }
                    }
                }
            }
            out = out.replace_column(masked_copy(column, &mask_rows, &mut held_out))?;
        }
    }

    Ok(Injection {
        table: out,
        held_out,
    })
}

/// Rebuilds `column` with the cells at `mask_rows` turned missing, recording
/// the hidden originals.
fn masked_copy(
    column: &Column,
    mask_rows: &[usize],
    held_out: &mut Vec<(String, usize, HeldValue)>,
) -> Column {
    match column.kind() {
        ColumnKind::Numeric => {
            let mut cells = column.numeric_cells().expect("numeric column");
            for &row in mask_rows {
                if let Some(value) = cells[row].take() {
                    held_out.push((column.name().to_string(), row, HeldValue::Number(value)));
                }
            }
            Column::numeric(column.name(), cells).expect("observed values already validated")
        }
        ColumnKind::Categorical => {
            let vocabulary = column.vocabulary().expect("categorical column").to_vec();
            let mut cells = column.categorical_cells().expect("categorical column");
            for &row in mask_rows {
                if let Some(code) = cells[row].take() {
                    held_out.push((column.name().to_string(), row, HeldValue::Code(code)));
                }
            }
            Column::categorical_with_vocabulary(column.name(), vocabulary, cells)
                .expect("codes already validated")
        }
    }
}

/// Point-biserial correlation between the newly-missing indicator of
/// `column` and the column's original values.
///
/// Rows that were already missing before injection are excluded. Expected
/// near 0 under MCAR and positive under the top-quantile MNAR mechanism.
pub fn mask_value_dependence(original: &Table, injected: &Table, column: &str) -> Result<f64> {
    let before = original.require_column(column)?;
    let after = injected.require_column(column)?;
    if before.kind() != ColumnKind::Numeric || after.kind() != ColumnKind::Numeric {
        return Err(Error::Precondition(format!(
            "column '{column}' must be numeric in both tables"
        )));
    }
    if before.len() != after.len() {
        return Err(Error::Schema(format!(
            "row count mismatch for column '{column}': {} vs {}",
            before.len(),
            after.len()
        )));
    }

    let mut indicator = Vec::new();
    let mut values = Vec::new();
    for row in 0..before.len() {
        if let Some(value) = before.number(row) {
            indicator.push(if after.is_observed(row) { 0.0 } else { 1.0 });
            values.push(value);
        }
    }
    pearson(&indicator, &values)
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Domain(
            "correlation needs two equal-length nonempty series".into(),
        ));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a).powi(2);
        var_b += (y - mean_b).powi(2);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::UndefinedStatistic(
            "zero variance in one of the correlated series".into(),
        ));
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}
