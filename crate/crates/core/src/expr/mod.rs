//! Sum-of-products expressions over a single real variable.
//!
//! An [`Expression`] is a list of terms; each term is a real coefficient
//! times an ordered product of [`BaseFeature`] factors (`x^k`, `sin(x)`,
//! `cos(x)`, `tan(x)`, `log(x)`, `exp(x)`). Repetition is allowed, so
//! `tan(x)*tan(x)` is a single term whose factor list holds `Tan` twice.
//!
//! Expressions carry a canonical text form (see [`parse`]) and know their own
//! guarded domain: `log(x)` is undefined for non-positive inputs and `tan(x)`
//! blows up near odd multiples of pi/2, so evaluation refuses those points
//! instead of returning non-finite values.

mod generate;
mod parse;

pub use generate::{gen_mixed_function, gen_mixed_with, gen_trig_function, gen_trig_with};

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use thiserror::Error;

/// Default half-width of the refusal zone around tan poles, and the floor
/// applied to the domain of log factors. One grid step of the reference
/// sampling scheme.
pub const DEFAULT_GUARD: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain violation at x = {x}: {factor} {reason}")]
    Domain {
        factor: String,
        x: f64,
        reason: String,
    },
    #[error("non-finite value from {what} at x = {x}")]
    Overflow { what: String, x: f64 },
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("empty domain: {0}")]
    EmptyDomain(String),
}

/// One real-valued function of the scalar input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseFeature {
    /// `x` raised to a positive integer power (`XPow(1)` is plain `x`).
    XPow(u32),
    Sin,
    Cos,
    Tan,
    Log,
    Exp,
}

impl BaseFeature {
    /// Canonical token, as used in the text grammar and CSV headers.
    pub fn name(&self) -> String {
        match self {
            BaseFeature::XPow(1) => "x".to_string(),
            BaseFeature::XPow(k) => format!("x^{k}"),
            BaseFeature::Sin => "sin(x)".to_string(),
            BaseFeature::Cos => "cos(x)".to_string(),
            BaseFeature::Tan => "tan(x)".to_string(),
            BaseFeature::Log => "log(x)".to_string(),
            BaseFeature::Exp => "exp(x)".to_string(),
        }
    }

    /// The factor value at `x`. Callers are responsible for domain checks;
    /// out-of-domain inputs produce NaN or infinities as the underlying
    /// functions do.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BaseFeature::XPow(k) => x.powi(*k as i32),
            BaseFeature::Sin => x.sin(),
            BaseFeature::Cos => x.cos(),
            BaseFeature::Tan => x.tan(),
            BaseFeature::Log => x.ln(),
            BaseFeature::Exp => x.exp(),
        }
    }

    /// Whether `x` lies in this factor's guarded domain: log needs
    /// `x >= guard`, tan needs `x` at least `guard` away from every pole.
    pub fn in_guarded_domain(&self, x: f64, guard: f64) -> bool {
        match self {
            BaseFeature::Log => x >= guard,
            BaseFeature::Tan => tan_pole_distance(x) >= guard,
            _ => true,
        }
    }
}

impl fmt::Display for BaseFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Distance from `x` to the nearest pole of tan (odd multiples of pi/2).
pub fn tan_pole_distance(x: f64) -> f64 {
    let r = (x - FRAC_PI_2).rem_euclid(PI);
    r.min(PI - r)
}

/// A coefficient times a non-empty product of factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub factors: Vec<BaseFeature>,
}

impl Term {
    pub fn new(coefficient: f64, factors: Vec<BaseFeature>) -> Result<Self, ExprError> {
        if factors.is_empty() {
            return Err(ExprError::InvalidArgument(
                "a term needs at least one factor".to_string(),
            ));
        }
        Ok(Self {
            coefficient,
            factors,
        })
    }
}

/// Sum of terms; the empty sum evaluates to zero and prints as `0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expression {
    pub terms: Vec<Term>,
}

impl Expression {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    /// Parse the canonical text form. Inverse of `Display`.
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        parse::parse_expression(text)
    }

    pub fn has_log(&self) -> bool {
        self.iter_factors().any(|f| matches!(f, BaseFeature::Log))
    }

    pub fn has_tan(&self) -> bool {
        self.iter_factors().any(|f| matches!(f, BaseFeature::Tan))
    }

    fn iter_factors(&self) -> impl Iterator<Item = &BaseFeature> {
        self.terms.iter().flat_map(|t| t.factors.iter())
    }

    /// Evaluate at `x` with the default tan-pole guard.
    pub fn eval(&self, x: f64) -> Result<f64, ExprError> {
        self.eval_with_guard(x, DEFAULT_GUARD)
    }

    /// Evaluate at `x`, refusing log factors at `x <= 0` and tan factors
    /// within `guard` of a pole. Any non-finite intermediate is an overflow
    /// error rather than a NaN in the result.
    pub fn eval_with_guard(&self, x: f64, guard: f64) -> Result<f64, ExprError> {
        let mut sum = 0.0;
        for (i, term) in self.terms.iter().enumerate() {
            let mut product = term.coefficient;
            for factor in &term.factors {
                match factor {
                    BaseFeature::Log if x <= 0.0 => {
                        return Err(ExprError::Domain {
                            factor: factor.name(),
                            x,
                            reason: "requires x > 0".to_string(),
                        });
                    }
                    BaseFeature::Tan if tan_pole_distance(x) < guard => {
                        return Err(ExprError::Domain {
                            factor: factor.name(),
                            x,
                            reason: format!("lies within {guard} of a tan pole"),
                        });
                    }
                    _ => {}
                }
                let v = factor.eval(x);
                if !v.is_finite() {
                    return Err(ExprError::Overflow {
                        what: factor.name(),
                        x,
                    });
                }
                product *= v;
            }
            if !product.is_finite() {
                return Err(ExprError::Overflow {
                    what: format!("term {i}"),
                    x,
                });
            }
            sum += product;
        }
        if !sum.is_finite() {
            return Err(ExprError::Overflow {
                what: "sum of terms".to_string(),
                x,
            });
        }
        Ok(sum)
    }

    /// The guarded domain of this expression within `[lower, upper]`: the
    /// lower bound is raised to `guard` when a log factor is present, and an
    /// exclusion of radius `guard` is carved around every tan pole when a tan
    /// factor is present.
    pub fn domain(&self, lower: f64, upper: f64, guard: f64) -> Result<DomainSpec, ExprError> {
        use std::cmp::Ordering;
        // partial_cmp so NaN bounds fail validation instead of slipping by
        if lower.partial_cmp(&upper) != Some(Ordering::Less) {
            return Err(ExprError::InvalidArgument(format!(
                "domain bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        if guard.partial_cmp(&0.0) != Some(Ordering::Greater) {
            return Err(ExprError::InvalidArgument(format!(
                "guard must be positive, got {guard}"
            )));
        }
        let lo = if self.has_log() { lower.max(guard) } else { lower };
        if lo.partial_cmp(&upper) != Some(Ordering::Less) {
            return Err(ExprError::EmptyDomain(format!(
                "log factors raise the lower bound to {lo}, above the upper bound {upper}"
            )));
        }
        let mut exclusions = Vec::new();
        if self.has_tan() {
            // Odd multiples of pi/2 whose guard window overlaps [lo, upper].
            let k_min = ((lo - guard) / FRAC_PI_2).floor() as i64;
            let k_max = ((upper + guard) / FRAC_PI_2).ceil() as i64;
            for k in k_min..=k_max {
                if k.rem_euclid(2) == 0 {
                    continue;
                }
                let pole = k as f64 * FRAC_PI_2;
                if pole + guard >= lo && pole - guard <= upper {
                    exclusions.push(Exclusion {
                        center: pole,
                        radius: guard,
                    });
                }
            }
        }
        let spec = DomainSpec {
            lower: lo,
            upper,
            exclusions,
        };
        if spec.is_fully_excluded() {
            return Err(ExprError::EmptyDomain(
                "tan-pole exclusions cover the entire interval".to_string(),
            ));
        }
        Ok(spec)
    }
}

/// An interval with open exclusion windows cut out of it.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub lower: f64,
    pub upper: f64,
    pub exclusions: Vec<Exclusion>,
}

/// Open interval `(center - radius, center + radius)` removed from a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exclusion {
    pub center: f64,
    pub radius: f64,
}

impl DomainSpec {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x
            && x <= self.upper
            && self
                .exclusions
                .iter()
                .all(|e| (x - e.center).abs() >= e.radius)
    }

    /// Grid points `lower, lower + step, ...` up to `upper`, with excluded
    /// points dropped. A small relative slack keeps the endpoint when float
    /// accumulation lands it just past `upper`.
    pub fn grid(&self, step: f64) -> Vec<f64> {
        assert!(step > 0.0, "grid step must be positive");
        let slack = step * 1e-9;
        let mut points = Vec::new();
        let mut k = 0u64;
        loop {
            let x = self.lower + k as f64 * step;
            if x > self.upper + slack {
                break;
            }
            if self.contains(x) {
                points.push(x);
            }
            k += 1;
        }
        points
    }

    fn is_fully_excluded(&self) -> bool {
        // Walk merged exclusion coverage from the lower end.
        let mut sorted = self.exclusions.clone();
        sorted.sort_by(|a, b| a.center.total_cmp(&b.center));
        let mut covered_to = self.lower;
        for e in &sorted {
            if e.center - e.radius > covered_to {
                return false;
            }
            covered_to = covered_to.max(e.center + e.radius);
        }
        covered_to >= self.upper
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            let mut wrote_factor = false;
            if term.coefficient != 1.0 {
                write!(f, "{}", term.coefficient)?;
                wrote_factor = true;
            }
            for factor in &term.factors {
                if wrote_factor {
                    f.write_str("*")?;
                }
                write!(f, "{factor}")?;
                wrote_factor = true;
            }
        }
        Ok(())
    }
}
