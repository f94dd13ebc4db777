//! Ordinary least squares via the normal equations, with an optional ridge
//! penalty on the non-intercept coefficients.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Set when a singular system at ridge 0 was re-solved with ridge 1e-8.
    pub ridge_escalated: bool,
}

impl LinearModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }
}

pub fn fit_linear(features: &[Vec<f64>], targets: &[f64], ridge: f64) -> Result<LinearModel> {
    match solve_normal_equations(features, targets, ridge) {
        Some((intercept, weights)) => Ok(LinearModel {
            weights,
            intercept,
            ridge_escalated: false,
        }),
        None if ridge == 0.0 => {
            let (intercept, weights) = solve_normal_equations(features, targets, 1e-8)
                .ok_or_else(|| Error::Fit("normal system singular even after ridge escalation".into()))?;
            Ok(LinearModel {
                weights,
                intercept,
                ridge_escalated: true,
            })
        }
        None => Err(Error::Fit("ridge-regularized normal system is singular".into())),
    }
}

/// Builds and solves `(X'X + ridge*J) b = X'y` with an intercept column;
/// the intercept is not penalized. Returns `None` on a singular system.
fn solve_normal_equations(
    features: &[Vec<f64>],
    targets: &[f64],
    ridge: f64,
) -> Option<(f64, Vec<f64>)> {
    let p = features.first().map_or(0, |r| r.len());
    let dim = p + 1;
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for (row, &y) in features.iter().zip(targets) {
        // Augmented row: [1, x_0, .., x_{p-1}].
        for i in 0..dim {
            let xi = if i == 0 { 1.0 } else { row[i - 1] };
            b[i] += xi * y;
            for j in i..dim {
                let xj = if j == 0 { 1.0 } else { row[j - 1] };
                a[i][j] += xi * xj;
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }
    // The intercept (index 0) is not penalized.
    for (i, row) in a.iter_mut().enumerate().skip(1) {
        row[i] += ridge;
    }

    let solution = gaussian_elimination(a, b)?;
    let intercept = solution[0];
    Some((intercept, solution[1..].to_vec()))
}

/// Gaussian elimination with partial pivoting. Returns `None` when a pivot
/// degenerates (singular system).
fn gaussian_elimination(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let tolerance = scale * 1e-12;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() <= tolerance {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for col in (row + 1)..n {
            sum -= a[row][col] * x[col];
        }
        x[row] = sum / a[row][row];
    }
    Some(x)
}
