//! Random expression generators.
//!
//! Two grammars are supported. The trigonometric grammar draws each term as
//! an integer coefficient in `0..=99` times one of `sin(x)`, `cos(x)`, or
//! `sin(x)*cos(x)`. The mixed grammar draws a random number of terms, each a
//! coefficient-free product of factors chosen with replacement from
//! `{x, ..., x^degree, cos, sin, tan, log, exp}`.
//!
//! Both are deterministic functions of their seed (see [`crate::rng`]); the
//! `*_with` variants accept any [`DrawSource`] so tests can script the draws.

use super::{BaseFeature, ExprError, Expression, Term};
use crate::rng::{DrawSource, SeedDraws};

/// Factor choices for the trigonometric grammar, in draw order.
const TRIG_OPTIONS: [&[BaseFeature]; 3] = [
    &[BaseFeature::Sin],
    &[BaseFeature::Cos],
    &[BaseFeature::Sin, BaseFeature::Cos],
];

/// Generate a pure-trigonometric expression with exactly `n_terms` terms.
pub fn gen_trig_function(seed: u64, n_terms: usize) -> Result<Expression, ExprError> {
    gen_trig_with(&mut SeedDraws::new(seed), n_terms)
}

/// [`gen_trig_function`] over an arbitrary draw source. Per term: first the
/// coefficient (uniform in `0..=99`), then the factor choice (uniform over
/// the three options).
pub fn gen_trig_with(
    draws: &mut impl DrawSource,
    n_terms: usize,
) -> Result<Expression, ExprError> {
    if n_terms == 0 {
        return Err(ExprError::InvalidArgument(
            "n_terms must be at least 1".to_string(),
        ));
    }
    let terms = (0..n_terms)
        .map(|_| {
            let coefficient = f64::from(draws.uniform_below(100));
            let factors = TRIG_OPTIONS[draws.uniform_below(3) as usize].to_vec();
            Term {
                coefficient,
                factors,
            }
        })
        .collect();
    Ok(Expression::new(terms))
}

/// Factor pool for the mixed grammar: `x^1..x^degree` then the five
/// transcendentals, in that order.
pub fn mixed_pool(degree: u32) -> Vec<BaseFeature> {
    let mut pool: Vec<BaseFeature> = (1..=degree).map(BaseFeature::XPow).collect();
    pool.extend([
        BaseFeature::Cos,
        BaseFeature::Sin,
        BaseFeature::Tan,
        BaseFeature::Log,
        BaseFeature::Exp,
    ]);
    pool
}

/// Generate a mixed polynomial-transcendental expression. All coefficients
/// are 1; the term count is uniform in `1..=max_terms`, each term's factor
/// count uniform in `1..=pool size`, and every factor a uniform draw from the
/// pool with replacement.
pub fn gen_mixed_function(
    seed: u64,
    max_terms: usize,
    degree: u32,
) -> Result<Expression, ExprError> {
    gen_mixed_with(&mut SeedDraws::new(seed), max_terms, degree)
}

/// [`gen_mixed_function`] over an arbitrary draw source. Draw order: term
/// count, then per term its factor count followed by each factor index.
pub fn gen_mixed_with(
    draws: &mut impl DrawSource,
    max_terms: usize,
    degree: u32,
) -> Result<Expression, ExprError> {
    if max_terms == 0 {
        return Err(ExprError::InvalidArgument(
            "max_terms must be at least 1".to_string(),
        ));
    }
    if degree == 0 {
        return Err(ExprError::InvalidArgument(
            "degree must be at least 1".to_string(),
        ));
    }
    let pool = mixed_pool(degree);
    let pool_len = pool.len() as u32;
    let n_terms = draws.uniform_below(max_terms as u32) + 1;
    let terms = (0..n_terms)
        .map(|_| {
            let n_factors = draws.uniform_below(pool_len) + 1;
            let factors = (0..n_factors)
                .map(|_| pool[draws.uniform_below(pool_len) as usize])
                .collect();
            Term {
                coefficient: 1.0,
                factors,
            }
        })
        .collect();
    Ok(Expression::new(terms))
}
