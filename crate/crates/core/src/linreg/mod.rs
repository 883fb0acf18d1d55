//! Least-squares fitting over design matrices and the fit-and-compare
//! experiment driver.

mod solver;

pub use solver::{lstsq, LstsqSolution, SolverError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprError, Expression, DEFAULT_GUARD};
use crate::featurize::{
    build_design_matrix, poly_spec, Dataset, DesignMatrix, FeatureSpec, FeaturizeError,
};
use crate::rng::{DrawSource, SeedDraws};

#[derive(Debug, Error)]
pub enum LinregError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("rank-deficient design for spec `{spec}`: dependent column(s) {columns:?}; retry with ridge > 0")]
    RankDeficient { spec: String, columns: Vec<String> },
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Fitted weights plus everything needed to apply them to new inputs.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub spec: FeatureSpec,
    pub ridge: f64,
    pub guard: f64,
    pub condition_estimate: f64,
}

/// One row of the experiment's error table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub spec_name: String,
    pub train_abs_error: f64,
    pub test_abs_error: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub dropped_rows: usize,
    pub condition_estimate: f64,
    pub seed: u64,
    pub ridge: f64,
    pub test_fraction: f64,
    pub include_bias: bool,
    /// True when the ridge==0 fit was rank deficient and the fallback ridge
    /// produced this report.
    pub ridge_fallback_used: bool,
}

/// Fit `spec`'s columns (already evaluated into `x`) against `y`.
///
/// `y` must hold one target per kept design row. The solve goes through
/// Householder QR; the bias column, when the spec includes one, becomes the
/// intercept and is never ridge-penalized.
pub fn fit_least_squares(
    spec: &FeatureSpec,
    x: &DesignMatrix,
    y: &[f64],
    ridge: f64,
    guard: f64,
) -> Result<LinearModel, LinregError> {
    if y.len() != x.rows() {
        return Err(LinregError::InvalidArgument(format!(
            "design has {} rows but {} targets were supplied",
            x.rows(),
            y.len()
        )));
    }
    let solution = lstsq(
        x.rows(),
        x.cols(),
        x.values(),
        y,
        ridge,
        spec.include_bias(),
    )
    .map_err(|e| match e {
        SolverError::RankDeficient { columns } => {
            let names = spec.column_names();
            LinregError::RankDeficient {
                spec: spec.name().to_string(),
                columns: columns
                    .iter()
                    .map(|&c| names.get(c).cloned().unwrap_or_else(|| format!("#{c}")))
                    .collect(),
            }
        }
        other => LinregError::Solver(other),
    })?;
    Ok(LinearModel {
        weights: solution.weights,
        intercept: solution.intercept,
        spec: spec.clone(),
        ridge,
        guard,
        condition_estimate: solution.condition_estimate,
    })
}

/// Predictions over `xs` along with the indices of the rows that survived
/// the model's guard policy.
pub fn predict(model: &LinearModel, xs: &[f64]) -> Result<(Vec<f64>, Vec<usize>), LinregError> {
    let design = build_design_matrix(&model.spec, xs, model.guard)?;
    let preds = (0..design.rows())
        .map(|r| {
            design
                .row(r)
                .iter()
                .zip(&model.weights)
                .map(|(v, w)| v * w)
                .sum::<f64>()
                + model.intercept
        })
        .collect();
    Ok((preds, design.kept_row_indices().to_vec()))
}

/// Sum of absolute deviations between predictions and targets.
pub fn absolute_error(pred: &[f64], y: &[f64]) -> Result<f64, LinregError> {
    if pred.len() != y.len() {
        return Err(LinregError::InvalidArgument(format!(
            "prediction and target lengths differ: {} vs {}",
            pred.len(),
            y.len()
        )));
    }
    if pred.is_empty() {
        return Err(LinregError::InvalidArgument(
            "absolute error needs at least one sample".to_string(),
        ));
    }
    Ok(pred.iter().zip(y).map(|(p, t)| (p - t).abs()).sum())
}

/// Seeded shuffle-then-partition split. The test set gets
/// `round(n * test_fraction)` samples; both halves come back in original
/// sample order and their union is exactly the input.
pub fn train_test_split(
    data: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), LinregError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(LinregError::InvalidArgument(format!(
            "test_fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    if data.len() < 2 {
        return Err(LinregError::InvalidArgument(
            "need at least 2 samples to split".to_string(),
        ));
    }
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    SeedDraws::new(seed).shuffle(&mut order);
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut in_test = vec![false; n];
    for &i in order.iter().take(n_test) {
        in_test[i] = true;
    }
    let mut train = (Vec::new(), Vec::new());
    let mut test = (Vec::new(), Vec::new());
    for ((&x, &y), &is_test) in data.xs.iter().zip(&data.ys).zip(&in_test) {
        let side = if is_test { &mut test } else { &mut train };
        side.0.push(x);
        side.1.push(y);
    }
    Ok((
        Dataset {
            xs: train.0,
            ys: train.1,
        },
        Dataset {
            xs: test.0,
            ys: test.1,
        },
    ))
}

/// Fit the monomial basis of the given degree to the whole dataset.
pub fn fit_polynomial(data: &Dataset, degree: u32) -> Result<LinearModel, LinregError> {
    let spec = poly_spec(degree)?;
    let design = build_design_matrix(&spec, &data.xs, DEFAULT_GUARD)?;
    let y = design.select(&data.ys);
    fit_least_squares(&spec, &design, &y, 0.0, DEFAULT_GUARD)
}

/// Options for [`run_comparison`].
#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    pub test_fraction: f64,
    pub seed: u64,
    pub ridge: f64,
    /// Ridge to retry with when the plain fit is rank deficient; `None`
    /// propagates the rank-deficiency error instead.
    pub ridge_fallback: Option<f64>,
    pub guard: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
            ridge: 0.0,
            ridge_fallback: Some(1e-10),
            guard: DEFAULT_GUARD,
        }
    }
}

/// A fitted spec plus its error report.
#[derive(Debug, Clone)]
pub struct ComparisonResult {
    pub report: FitReport,
    pub model: LinearModel,
}

/// Evaluate `expr` over its guarded grid within `[lower, upper]`.
pub fn dataset_from_expression(
    expr: &Expression,
    lower: f64,
    upper: f64,
    step: f64,
    guard: f64,
) -> Result<Dataset, LinregError> {
    let domain = expr.domain(lower, upper, guard)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for x in domain.grid(step) {
        match expr.eval_with_guard(x, guard) {
            Ok(y) if y.is_finite() => {
                xs.push(x);
                ys.push(y);
            }
            // Overflowing grid points (e.g. exp on a wide range) are
            // dropped, mirroring the design-matrix policy.
            Ok(_) | Err(ExprError::Overflow { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if xs.is_empty() {
        return Err(LinregError::InvalidArgument(
            "no evaluable grid points in the requested range".to_string(),
        ));
    }
    Dataset::new(xs, ys).map_err(Into::into)
}

/// Generate a dataset from `expr`, split once, fit every spec on the same
/// train set, and report train/test absolute errors per spec.
pub fn run_comparison(
    expr: &Expression,
    lower: f64,
    upper: f64,
    step: f64,
    specs: &[FeatureSpec],
    config: &ComparisonConfig,
) -> Result<Vec<ComparisonResult>, LinregError> {
    let data = dataset_from_expression(expr, lower, upper, step, config.guard)?;
    let (train, test) = train_test_split(&data, config.test_fraction, config.seed)?;
    specs
        .iter()
        .map(|spec| fit_and_score(spec, &train, &test, config))
        .collect()
}

fn fit_and_score(
    spec: &FeatureSpec,
    train: &Dataset,
    test: &Dataset,
    config: &ComparisonConfig,
) -> Result<ComparisonResult, LinregError> {
    let design = build_design_matrix(spec, &train.xs, config.guard)?;
    let y = design.select(&train.ys);
    let mut ridge = config.ridge;
    let mut fallback_used = false;
    let model = match fit_least_squares(spec, &design, &y, ridge, config.guard) {
        Ok(m) => m,
        Err(LinregError::RankDeficient { .. }) if config.ridge_fallback.is_some() => {
            ridge = config.ridge_fallback.unwrap();
            fallback_used = true;
            fit_least_squares(spec, &design, &y, ridge, config.guard)?
        }
        Err(e) => return Err(e),
    };

    let (train_pred, train_kept) = predict(&model, &train.xs)?;
    let train_y: Vec<f64> = train_kept.iter().map(|&i| train.ys[i]).collect();
    let train_abs_error = absolute_error(&train_pred, &train_y)?;

    let (test_pred, test_kept) = predict(&model, &test.xs)?;
    let test_y: Vec<f64> = test_kept.iter().map(|&i| test.ys[i]).collect();
    let test_abs_error = absolute_error(&test_pred, &test_y)?;

    let dropped_rows =
        (train.len() - train_kept.len()) + (test.len() - test_kept.len());
    let report = FitReport {
        spec_name: spec.name().to_string(),
        train_abs_error,
        test_abs_error,
        n_train: train_kept.len(),
        n_test: test_kept.len(),
        dropped_rows,
        condition_estimate: model.condition_estimate,
        seed: config.seed,
        ridge,
        test_fraction: config.test_fraction,
        include_bias: spec.include_bias(),
        ridge_fallback_used: fallback_used,
    };
    Ok(ComparisonResult { report, model })
}

/// Two-column CSV shaped like a published error table: one row per spec.
pub fn error_table_csv(reports: &[FitReport]) -> String {
    let mut out = String::from("spec,absolute_error\n");
    for r in reports {
        out.push_str(&format!("{},{}\n", r.spec_name, r.test_abs_error));
    }
    out
}
