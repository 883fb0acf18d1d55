//! Dense least squares via Householder QR.
//!
//! The normal equations are never formed: the (optionally ridge-augmented)
//! matrix is reduced to upper-triangular form by Householder reflections
//! applied to both the matrix and the right-hand side, followed by back
//! substitution. Ridge is handled by appending one `sqrt(ridge)` row per
//! feature column; the intercept column, when present, is left unpenalized.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("rank-deficient system: dependent column(s) {columns:?}")]
    RankDeficient { columns: Vec<usize> },
}

/// Solution of one least-squares problem.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Ratio of the largest to smallest magnitude on the R diagonal; a
    /// diagnostic, not a rigorous condition number.
    pub condition_estimate: f64,
}

/// Minimize `sum((X w + b - y)^2) + ridge * ||w||^2` over `w` (and `b` when
/// `with_intercept` is set; otherwise `b` is fixed at zero).
///
/// `values` is row-major with `rows * cols` entries. With `ridge == 0` a
/// rank-deficient system is an error naming the dependent columns so the
/// caller can retry with a small ridge.
pub fn lstsq(
    rows: usize,
    cols: usize,
    values: &[f64],
    y: &[f64],
    ridge: f64,
    with_intercept: bool,
) -> Result<LstsqSolution, SolverError> {
    if rows == 0 {
        return Err(SolverError::InvalidArgument(
            "at least one row is required".to_string(),
        ));
    }
    if values.len() != rows * cols {
        return Err(SolverError::InvalidArgument(format!(
            "expected {} values for a {rows}x{cols} matrix, got {}",
            rows * cols,
            values.len()
        )));
    }
    if y.len() != rows {
        return Err(SolverError::InvalidArgument(format!(
            "expected {rows} targets, got {}",
            y.len()
        )));
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(SolverError::InvalidArgument(format!(
            "ridge must be finite and nonnegative, got {ridge}"
        )));
    }

    let n = cols + usize::from(with_intercept);
    if n == 0 {
        return Err(SolverError::InvalidArgument(
            "no columns to fit".to_string(),
        ));
    }
    let ridge_rows = if ridge > 0.0 { cols } else { 0 };
    let m = rows + ridge_rows;

    // Assemble [X 1; sqrt(ridge) I 0] and [y; 0].
    let mut a = vec![0.0f64; m * n];
    let mut b = vec![0.0f64; m];
    for r in 0..rows {
        a[r * n..r * n + cols].copy_from_slice(&values[r * cols..(r + 1) * cols]);
        if with_intercept {
            a[r * n + cols] = 1.0;
        }
        b[r] = y[r];
    }

    // Scale each column to unit norm before factorizing. This is exact
    // algebra, not a change of objective: the ridge row for column j carries
    // sqrt(ridge) / d_j in the scaled basis, and the solution is unscaled at
    // the end. Product-feature columns can differ in norm by 14 orders of
    // magnitude, which would otherwise dominate the backward error.
    let mut scale = vec![1.0f64; n];
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = (0..rows)
            .map(|r| a[r * n + j] * a[r * n + j])
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 && norm.is_finite() {
            *s = norm;
            for r in 0..rows {
                a[r * n + j] /= norm;
            }
        }
    }
    let sqrt_ridge = ridge.sqrt();
    for j in 0..ridge_rows {
        a[(rows + j) * n + j] = sqrt_ridge / scale[j];
    }

    let mut solution = householder_solve(m, n, &mut a, &mut b, cols, ridge > 0.0)?;
    for (w, s) in solution.weights.iter_mut().zip(&scale) {
        *w /= s;
    }
    if with_intercept {
        solution.intercept /= scale[cols];
    }
    Ok(solution)
}

fn householder_solve(
    m: usize,
    n: usize,
    a: &mut [f64],
    b: &mut [f64],
    feature_cols: usize,
    ridged: bool,
) -> Result<LstsqSolution, SolverError> {
    let steps = m.min(n);
    let mut dots = vec![0.0f64; n];
    for k in 0..steps {
        // Householder vector for column k below the diagonal.
        let mut norm_sq = 0.0;
        for i in k..m {
            let v = a[i * n + k];
            norm_sq += v * v;
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue; // column already zero; shows up as R[k][k] == 0
        }
        let akk = a[k * n + k];
        let alpha = if akk >= 0.0 { -norm } else { norm };
        let v0 = akk - alpha;
        let vtv = norm_sq - akk * akk + v0 * v0;
        if vtv == 0.0 {
            continue;
        }
        a[k * n + k] = v0;

        // Apply I - 2 v v^T / v^T v to the trailing columns and to b, with
        // two row-major sweeps: gather v^T * [A b], then update. Rows whose
        // v entry is zero (the untouched ridge block) contribute nothing.
        dots[k + 1..n].fill(0.0);
        let mut b_dot = 0.0;
        for i in k..m {
            let vi = a[i * n + k];
            if vi == 0.0 {
                continue;
            }
            let row = &a[i * n + k + 1..i * n + n];
            for (d, &x) in dots[k + 1..n].iter_mut().zip(row) {
                *d += vi * x;
            }
            b_dot += vi * b[i];
        }
        for i in k..m {
            let vi = a[i * n + k];
            if vi == 0.0 {
                continue;
            }
            let factor = 2.0 * vi / vtv;
            let row = &mut a[i * n + k + 1..i * n + n];
            for (x, &d) in row.iter_mut().zip(&dots[k + 1..n]) {
                *x -= factor * d;
            }
            b[i] -= factor * b_dot;
        }

        a[k * n + k] = alpha;
        for i in (k + 1)..m {
            a[i * n + k] = 0.0;
        }
    }

    // Rank check on the R diagonal. Ridge augmentation makes the system
    // full rank by construction, so tiny pivots are only an error when the
    // plain matrix is being factorized.
    let mut max_diag = 0.0f64;
    for k in 0..steps {
        max_diag = max_diag.max(a[k * n + k].abs());
    }
    if !ridged {
        let tol = f64::EPSILON * (m.max(n) as f64) * max_diag;
        let mut deficient: Vec<usize> = (0..steps)
            .filter(|&k| a[k * n + k].abs() <= tol)
            .collect();
        deficient.extend(steps..n); // columns past the row count have no pivot
        if !deficient.is_empty() {
            return Err(SolverError::RankDeficient { columns: deficient });
        }
    } else if steps < n || (0..steps).any(|k| a[k * n + k] == 0.0) {
        return Err(SolverError::InvalidArgument(
            "ridge-augmented system is still singular".to_string(),
        ));
    }

    let mut min_diag = f64::INFINITY;
    for k in 0..n {
        min_diag = min_diag.min(a[k * n + k].abs());
    }
    let condition_estimate = if min_diag > 0.0 {
        max_diag / min_diag
    } else {
        f64::INFINITY
    };

    // Back substitution on R z = Q^T b.
    let mut z = vec![0.0f64; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in (k + 1)..n {
            s -= a[k * n + j] * z[j];
        }
        z[k] = s / a[k * n + k];
    }

    let intercept = if n > feature_cols { z[feature_cols] } else { 0.0 };
    z.truncate(feature_cols);
    if !z.iter().all(|w| w.is_finite()) || !intercept.is_finite() {
        return Err(SolverError::RankDeficient {
            columns: (0..feature_cols).collect(),
        });
    }
    Ok(LstsqSolution {
        weights: z,
        intercept,
        condition_estimate,
    })
}
