//! Feature specifications and design-matrix construction.
//!
//! A [`FeatureSpec`] names one column per product of base features; the three
//! constructors cover the trigonometric basis (`sin`, `cos`, `sin*cos`), the
//! monomial basis (`x..x^degree`), and the full product basis of every
//! multiset of pool factors up to a maximum order. [`build_design_matrix`]
//! evaluates a spec over sample inputs, dropping any row whose value would be
//! non-finite or whose input violates a factor's guarded domain, and records
//! which original rows survived.

use std::collections::HashSet;

use thiserror::Error;

use crate::expr::{BaseFeature, Expression, Term};

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty design: all {attempted} rows were dropped by domain or finiteness checks")]
    EmptyDesign { attempted: usize },
}

/// An ordered list of feature columns, each a canonical factor multiset.
///
/// Canonical form merges powers of `x` (`x * x^2` becomes `x^3`) and lists
/// the power first, then the transcendental factors sorted by name. Entries
/// are unique and their order is a pure function of the constructor
/// arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    name: String,
    columns: Vec<Vec<BaseFeature>>,
    include_bias: bool,
}

impl FeatureSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[Vec<BaseFeature>] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn include_bias(&self) -> bool {
        self.include_bias
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| column_name(c)).collect()
    }

    /// Relabel the spec (reports carry the label, not the column list).
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Drop the implicit intercept column.
    pub fn without_bias(mut self) -> Self {
        self.include_bias = false;
        self
    }

    /// The expression this spec spans when each column gets weight
    /// `weights[j]` plus an intercept; handy for reporting fitted models.
    pub fn to_expression(&self, weights: &[f64]) -> Expression {
        let terms = self
            .columns
            .iter()
            .zip(weights)
            .map(|(col, &w)| Term {
                coefficient: w,
                factors: col.clone(),
            })
            .collect();
        Expression::new(terms)
    }
}

/// Join a canonical factor list into its column name, e.g. `x^2*sin(x)`.
pub fn column_name(column: &[BaseFeature]) -> String {
    column
        .iter()
        .map(|f| f.name())
        .collect::<Vec<_>>()
        .join("*")
}

/// Merge x-powers and order factors canonically: the merged power first,
/// then transcendentals sorted by name.
pub fn canonicalize(factors: &[BaseFeature]) -> Vec<BaseFeature> {
    let mut power: u32 = 0;
    let mut rest: Vec<BaseFeature> = Vec::new();
    for f in factors {
        match f {
            BaseFeature::XPow(k) => power += k,
            other => rest.push(*other),
        }
    }
    rest.sort_by_key(|f| f.name());
    let mut out = Vec::with_capacity(rest.len() + 1);
    if power > 0 {
        out.push(BaseFeature::XPow(power));
    }
    out.extend(rest);
    out
}

/// The trigonometric basis: `sin x`, `cos x`, `sin x * cos x`, plus bias.
pub fn trig_spec() -> FeatureSpec {
    FeatureSpec {
        name: "trig".to_string(),
        columns: vec![
            vec![BaseFeature::Sin],
            vec![BaseFeature::Cos],
            canonicalize(&[BaseFeature::Sin, BaseFeature::Cos]),
        ],
        include_bias: true,
    }
}

/// The monomial basis `x, x^2, ..., x^degree`, plus bias.
pub fn poly_spec(degree: u32) -> Result<FeatureSpec, FeaturizeError> {
    if degree == 0 {
        return Err(FeaturizeError::InvalidArgument(
            "degree must be at least 1".to_string(),
        ));
    }
    Ok(FeatureSpec {
        name: format!("poly:{degree}"),
        columns: (1..=degree).map(|k| vec![BaseFeature::XPow(k)]).collect(),
        include_bias: true,
    })
}

/// Every product of 1..=`max_order` pool factors, where the pool is
/// `x..x^degree` plus `sin`, `cos`, `tan`, `log`, `exp`. Products that
/// canonicalize to the same column are emitted once; columns are ordered by
/// canonical factor count, then lexicographically by factor names.
pub fn product_spec(degree: u32, max_order: u32) -> Result<FeatureSpec, FeaturizeError> {
    if degree == 0 || max_order == 0 {
        return Err(FeaturizeError::InvalidArgument(
            "degree and max_order must be at least 1".to_string(),
        ));
    }
    let mut pool: Vec<BaseFeature> = (1..=degree).map(BaseFeature::XPow).collect();
    pool.extend([
        BaseFeature::Sin,
        BaseFeature::Cos,
        BaseFeature::Tan,
        BaseFeature::Log,
        BaseFeature::Exp,
    ]);

    let mut seen: HashSet<Vec<BaseFeature>> = HashSet::new();
    let mut columns: Vec<Vec<BaseFeature>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    enumerate_multisets(&pool, max_order as usize, 0, &mut stack, &mut |multiset| {
        let canonical = canonicalize(multiset);
        if seen.insert(canonical.clone()) {
            columns.push(canonical);
        }
    });
    columns.sort_by(|a, b| {
        let ka = (a.len(), a.iter().map(|f| f.name()).collect::<Vec<_>>());
        let kb = (b.len(), b.iter().map(|f| f.name()).collect::<Vec<_>>());
        ka.cmp(&kb)
    });
    Ok(FeatureSpec {
        name: format!("product:{degree}:{max_order}"),
        columns,
        include_bias: true,
    })
}

/// Visit every multiset of pool elements of size 1..=`remaining + stack`,
/// represented as non-decreasing index sequences.
fn enumerate_multisets(
    pool: &[BaseFeature],
    max_size: usize,
    min_index: usize,
    stack: &mut Vec<usize>,
    visit: &mut impl FnMut(&[BaseFeature]),
) {
    if !stack.is_empty() {
        let multiset: Vec<BaseFeature> = stack.iter().map(|&i| pool[i]).collect();
        visit(&multiset);
    }
    if stack.len() == max_size {
        return;
    }
    for i in min_index..pool.len() {
        stack.push(i);
        enumerate_multisets(pool, max_size, i, stack, visit);
        stack.pop();
    }
}

/// Paired sample inputs and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Dataset {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, FeaturizeError> {
        if xs.len() != ys.len() {
            return Err(FeaturizeError::InvalidArgument(format!(
                "xs has {} samples but ys has {}",
                xs.len(),
                ys.len()
            )));
        }
        if let Some(v) = xs.iter().chain(ys.iter()).find(|v| !v.is_finite()) {
            return Err(FeaturizeError::InvalidArgument(format!(
                "dataset contains a non-finite value: {v}"
            )));
        }
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Row-major evaluated feature matrix over the rows that survived domain
/// and finiteness filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    kept_row_indices: Vec<usize>,
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn kept_row_indices(&self) -> &[usize] {
        &self.kept_row_indices
    }

    /// How many input rows were dropped while building this matrix.
    pub fn dropped_rows(&self, input_len: usize) -> usize {
        input_len - self.rows
    }

    /// Targets for the kept rows, selected out of the full target list.
    pub fn select<T: Copy>(&self, full: &[T]) -> Vec<T> {
        self.kept_row_indices.iter().map(|&i| full[i]).collect()
    }

    /// CSV with canonical column names as the header and the original input
    /// as the first column; one line per kept row.
    pub fn to_csv(&self, spec: &FeatureSpec, xs: &[f64]) -> String {
        let mut out = String::from("x");
        for name in spec.column_names() {
            out.push(',');
            out.push_str(&name);
        }
        out.push('\n');
        for (r, &idx) in self.kept_row_indices.iter().enumerate() {
            out.push_str(&format!("{}", xs[idx]));
            for v in self.row(r) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluate `spec` over `xs`. A row is dropped iff some factor's guarded
/// domain rejects that `x` or some column value comes out non-finite; an
/// error is returned only when nothing survives.
pub fn build_design_matrix(
    spec: &FeatureSpec,
    xs: &[f64],
    guard: f64,
) -> Result<DesignMatrix, FeaturizeError> {
    if xs.is_empty() {
        return Err(FeaturizeError::InvalidArgument(
            "xs must be non-empty".to_string(),
        ));
    }
    let cols = spec.n_columns();
    let mut values = Vec::new();
    let mut kept = Vec::new();
    let mut row_buf = Vec::with_capacity(cols);
    'rows: for (i, &x) in xs.iter().enumerate() {
        if !x.is_finite() {
            continue;
        }
        row_buf.clear();
        for col in spec.columns() {
            if !col.iter().all(|f| f.in_guarded_domain(x, guard)) {
                continue 'rows;
            }
            let v: f64 = col.iter().map(|f| f.eval(x)).product();
            if !v.is_finite() {
                continue 'rows;
            }
            row_buf.push(v);
        }
        values.extend_from_slice(&row_buf);
        kept.push(i);
    }
    if kept.is_empty() {
        return Err(FeaturizeError::EmptyDesign {
            attempted: xs.len(),
        });
    }
    Ok(DesignMatrix {
        rows: kept.len(),
        cols,
        values,
        kept_row_indices: kept,
    })
}
