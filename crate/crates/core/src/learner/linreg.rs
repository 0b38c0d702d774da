//! Ordinary least squares on the three features, solved through the normal
//! equations with an optional ridge fallback for near-singular designs.

use super::LearnerError;
use crate::learner::mlp::INPUT_DIM;

/// Default ridge strength used when the plain normal equations are singular.
pub const RIDGE_FALLBACK_LAMBDA: f64 = 1e-8;

const DIM: usize = INPUT_DIM + 1; // three features plus intercept

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub weights: [f64; INPUT_DIM],
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64; INPUT_DIM]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Fit by ordinary least squares, falling back to ridge regression with
/// [`RIDGE_FALLBACK_LAMBDA`] when the design is singular.
pub fn linreg_fit(
    features: &[[f64; INPUT_DIM]],
    targets: &[f64],
) -> Result<LinearModel, LearnerError> {
    match linreg_fit_with(features, targets, None) {
        Err(LearnerError::SingularDesign) => {
            linreg_fit_with(features, targets, Some(RIDGE_FALLBACK_LAMBDA))
        }
        other => other,
    }
}

/// Fit with an explicit ridge policy: `None` solves plain OLS and reports
/// `SingularDesign` on rank deficiency; `Some(lambda)` adds `lambda` to the
/// feature diagonal of the normal equations (the intercept is not penalized).
pub fn linreg_fit_with(
    features: &[[f64; INPUT_DIM]],
    targets: &[f64],
    ridge: Option<f64>,
) -> Result<LinearModel, LearnerError> {
    if features.is_empty() || features.len() != targets.len() {
        return Err(LearnerError::EmptyDataset);
    }

    // accumulate XᵀX and Xᵀy with the intercept as a trailing all-ones column
    let mut xtx = [[0.0f64; DIM]; DIM];
    let mut xty = [0.0f64; DIM];
    for (x, &y) in features.iter().zip(targets) {
        let row = [x[0], x[1], x[2], 1.0];
        for i in 0..DIM {
            xty[i] += row[i] * y;
            for j in 0..DIM {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    if let Some(lambda) = ridge {
        for (i, r) in xtx.iter_mut().enumerate().take(INPUT_DIM) {
            r[i] += lambda;
        }
    }

    let solution = solve_4x4(xtx, xty)?;
    Ok(LinearModel {
        weights: [solution[0], solution[1], solution[2]],
        intercept: solution[3],
    })
}

/// Gaussian elimination with partial pivoting.
fn solve_4x4(mut a: [[f64; DIM]; DIM], mut b: [f64; DIM]) -> Result<[f64; DIM], LearnerError> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..DIM {
        let pivot_row = (col..DIM)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot_row][col].abs() < 1e-12 * scale {
            return Err(LearnerError::SingularDesign);
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..DIM {
            let factor = a[row][col] / a[col][col];
            for k in col..DIM {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; DIM];
    for row in (0..DIM).rev() {
        let mut sum = b[row];
        for k in row + 1..DIM {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    Ok(x)
}

// ── tests ───────────────────────────────────────────────────────────────────
