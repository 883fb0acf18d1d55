//! Cross-cutting invariants checked against independent oracles: expression
//! evaluation versus a direct term-by-term transcription, the QR solver
//! versus brute-force normal equations, round trips, and determinism.

use std::f64::consts::PI;

use proptest::prelude::*;

use trigfit_core::audio::{self, AudioSignal};
use trigfit_core::expr::{gen_mixed_function, gen_trig_function, BaseFeature, Expression, Term};
use trigfit_core::featurize::{build_design_matrix, product_spec, trig_spec, Dataset};
use trigfit_core::linreg::{absolute_error, lstsq, train_test_split};
use trigfit_core::rng::{DrawSource, SeedDraws};
use trigfit_core::sinefit::{fit_frame, superpose, FitConfig};
use trigfit_core::DEFAULT_GUARD;

fn uniform_unit(draws: &mut SeedDraws) -> f64 {
    draws.uniform_below(1 << 24) as f64 / (1u32 << 24) as f64
}

/// Direct transcription of the factor functions, kept separate from the
/// production evaluation path: powers by repeated multiplication, tan as
/// sin/cos.
fn eval_oracle(expr: &Expression, x: f64) -> f64 {
    let mut total = 0.0;
    for term in &expr.terms {
        let mut value = term.coefficient;
        for factor in &term.factors {
            let fv = match factor {
                BaseFeature::XPow(k) => {
                    let mut p = 1.0;
                    for _ in 0..*k {
                        p *= x;
                    }
                    p
                }
                BaseFeature::Sin => x.sin(),
                BaseFeature::Cos => x.cos(),
                BaseFeature::Tan => x.sin() / x.cos(),
                BaseFeature::Log => x.ln(),
                BaseFeature::Exp => x.exp(),
            };
            value *= fv;
        }
        total += value;
    }
    total
}

#[test]
fn evaluation_matches_the_oracle_on_random_in_domain_points() {
    let mut draws = SeedDraws::new(2024);
    let mut expressions = Vec::new();
    for seed in 0..10u64 {
        expressions.push(gen_trig_function(seed, 1 + seed as usize % 6).unwrap());
        expressions.push(gen_mixed_function(seed, 10, 2).unwrap());
    }
    for expr in &expressions {
        let domain = match expr.domain(-PI, PI, DEFAULT_GUARD) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let mut checked = 0;
        while checked < 1000 {
            let x = domain.lower + uniform_unit(&mut draws) * (domain.upper - domain.lower);
            if !domain.contains(x) {
                continue;
            }
            checked += 1;
            let got = match expr.eval(x) {
                Ok(v) => v,
                Err(_) => continue, // overflow near a guard boundary
            };
            let want = eval_oracle(expr, x);
            let scale = want.abs().max(1.0);
            assert!(
                (got - want).abs() <= 1e-12 * scale,
                "{expr} at x = {x}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn thousand_generated_expressions_round_trip_through_text() {
    for seed in 0..500u64 {
        let e = gen_trig_function(seed, 1 + (seed % 7) as usize).unwrap();
        assert_eq!(Expression::parse(&e.to_string()).unwrap(), e);
        let m = gen_mixed_function(seed, 10, 2).unwrap();
        assert_eq!(Expression::parse(&m.to_string()).unwrap(), m);
    }
}

#[test]
fn generated_factors_stay_inside_their_pools() {
    let trig_pool = [BaseFeature::Sin, BaseFeature::Cos];
    for seed in 0..200u64 {
        let e = gen_trig_function(seed, 5).unwrap();
        for t in &e.terms {
            assert!(t.factors.iter().all(|f| trig_pool.contains(f)));
        }
        let mixed = gen_mixed_function(seed, 10, 3).unwrap();
        for t in &mixed.terms {
            for f in &t.factors {
                if let BaseFeature::XPow(k) = f {
                    assert!((1..=3).contains(k));
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn arbitrary_expressions_round_trip(terms in prop::collection::vec(
        (
            prop_oneof![
                any::<f64>().prop_filter("finite", |c| c.is_finite()),
                Just(1.0),
                Just(0.0),
            ],
            prop::collection::vec(
                prop_oneof![
                    (1u32..9).prop_map(BaseFeature::XPow),
                    Just(BaseFeature::Sin),
                    Just(BaseFeature::Cos),
                    Just(BaseFeature::Tan),
                    Just(BaseFeature::Log),
                    Just(BaseFeature::Exp),
                ],
                1..5,
            ),
        ),
        0..8,
    )) {
        let expr = Expression::new(
            terms
                .into_iter()
                .map(|(c, fs)| Term::new(c, fs).unwrap())
                .collect(),
        );
        let text = expr.to_string();
        let parsed = Expression::parse(&text).unwrap();
        prop_assert_eq!(parsed, expr, "through `{}`", text);
    }

    #[test]
    fn design_matrices_never_hold_non_finite_values(
        xs in prop::collection::vec(-50.0f64..50.0, 1..60),
        degree in 1u32..3,
        max_order in 1u32..4,
    ) {
        let spec = product_spec(degree, max_order).unwrap();
        // An error (every row dropped) is a legal outcome here.
        if let Ok(m) = build_design_matrix(&spec, &xs, DEFAULT_GUARD) {
            prop_assert!(m.values().iter().all(|v| v.is_finite()));
            prop_assert!(m.kept_row_indices().windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(m.kept_row_indices().len(), m.rows());
        }
    }

    #[test]
    fn absolute_error_is_a_premetric(
        a in prop::collection::vec(-100.0f64..100.0, 1..20),
        deltas in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..20),
    ) {
        let n = a.len().min(deltas.len());
        let a = &a[..n];
        let b: Vec<f64> = (0..n).map(|i| a[i] + deltas[i].0).collect();
        let c: Vec<f64> = (0..n).map(|i| a[i] + deltas[i].1).collect();
        let ab = absolute_error(a, &b).unwrap();
        let ac = absolute_error(a, &c).unwrap();
        let bc = absolute_error(&b, &c).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ac - bc).abs() <= ab + 1e-9);
        prop_assert_eq!(absolute_error(a, a).unwrap(), 0.0);
    }

    #[test]
    fn wav_round_trip_stays_within_one_quantization_step(
        samples in prop::collection::vec(-1.0f64..=1.0, 1..400),
        rate in 1u32..96000,
    ) {
        let signal = AudioSignal::new(rate.max(1), samples.clone()).unwrap();
        let dir = std::env::temp_dir().join("trigfit-core-prop-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("prop_roundtrip.wav");
        let clamped = audio::write_wav(&signal, &path).unwrap();
        prop_assert_eq!(clamped, 0);
        let back = audio::load_wav_left(&path).unwrap();
        prop_assert_eq!(back.samples.len(), samples.len());
        for (a, b) in samples.iter().zip(&back.samples) {
            prop_assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn split_shuffles_deterministically_and_preserves_content(
        n in 2usize..200,
        fraction in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let data = Dataset::new(
            (0..n).map(|i| i as f64).collect(),
            (0..n).map(|i| (i as f64).cos()).collect(),
        )
        .unwrap();
        let (train_a, test_a) = train_test_split(&data, fraction, seed).unwrap();
        let (train_b, test_b) = train_test_split(&data, fraction, seed).unwrap();
        prop_assert_eq!(&train_a, &train_b);
        prop_assert_eq!(&test_a, &test_b);
        prop_assert_eq!(test_a.len(), (n as f64 * fraction).round() as usize);
        let mut xs: Vec<f64> = train_a.xs.iter().chain(&test_a.xs).copied().collect();
        xs.sort_by(f64::total_cmp);
        prop_assert_eq!(xs, data.xs);
    }
}

/// Brute-force normal equations: form `A^T A w = A^T y` explicitly and solve
/// it by Gaussian elimination with partial pivoting.
fn normal_equations(
    rows: usize,
    cols: usize,
    values: &[f64],
    y: &[f64],
    with_intercept: bool,
) -> Vec<f64> {
    let n = cols + usize::from(with_intercept);
    let at = |r: usize, c: usize| -> f64 {
        if c < cols {
            values[r * cols + c]
        } else {
            1.0
        }
    };
    let mut g = vec![0.0f64; n * n];
    let mut rhs = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = (0..rows).map(|r| at(r, i) * at(r, j)).sum();
        }
        rhs[i] = (0..rows).map(|r| at(r, i) * y[r]).sum();
    }
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&a, &b| g[a * n + k].abs().total_cmp(&g[b * n + k].abs()))
            .unwrap();
        if pivot != k {
            for j in 0..n {
                g.swap(k * n + j, pivot * n + j);
            }
            rhs.swap(k, pivot);
        }
        for i in (k + 1)..n {
            let factor = g[i * n + k] / g[k * n + k];
            for j in k..n {
                g[i * n + j] -= factor * g[k * n + j];
            }
            rhs[i] -= factor * rhs[k];
        }
    }
    let mut w = vec![0.0f64; n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in (k + 1)..n {
            s -= g[k * n + j] * w[j];
        }
        w[k] = s / g[k * n + k];
    }
    w
}

#[test]
fn qr_agrees_with_normal_equations_on_random_systems() {
    let mut draws = SeedDraws::new(77);
    for case in 0..60 {
        let rows = 10 + draws.uniform_below(91) as usize;
        let cols = 1 + draws.uniform_below(8) as usize;
        let with_intercept = case % 2 == 0;
        let values: Vec<f64> = (0..rows * cols)
            .map(|_| uniform_unit(&mut draws) * 2.0 - 1.0)
            .collect();
        let y: Vec<f64> = (0..rows)
            .map(|_| uniform_unit(&mut draws) * 4.0 - 2.0)
            .collect();
        let sol = lstsq(rows, cols, &values, &y, 0.0, with_intercept).unwrap();
        let oracle = normal_equations(rows, cols, &values, &y, with_intercept);
        for (j, &w) in sol.weights.iter().enumerate() {
            assert!(
                (w - oracle[j]).abs() <= 1e-8,
                "case {case} weight {j}: {w} vs {}",
                oracle[j]
            );
        }
        if with_intercept {
            assert!((sol.intercept - oracle[cols]).abs() <= 1e-8);
        }
    }
}

#[test]
fn least_squares_loss_beats_random_perturbations() {
    let mut draws = SeedDraws::new(31);
    let rows = 40;
    let cols = 4;
    let values: Vec<f64> = (0..rows * cols)
        .map(|_| uniform_unit(&mut draws) * 2.0 - 1.0)
        .collect();
    let y: Vec<f64> = (0..rows)
        .map(|_| uniform_unit(&mut draws) * 2.0 - 1.0)
        .collect();
    let sol = lstsq(rows, cols, &values, &y, 0.0, true).unwrap();
    let loss = |w: &[f64], b: f64| -> f64 {
        (0..rows)
            .map(|r| {
                let pred: f64 = (0..cols).map(|c| values[r * cols + c] * w[c]).sum::<f64>() + b;
                (pred - y[r]).powi(2)
            })
            .sum()
    };
    let base = loss(&sol.weights, sol.intercept);
    for _ in 0..100 {
        let scale = 10f64.powf(uniform_unit(&mut draws) * 4.0 - 3.0);
        let perturbed: Vec<f64> = sol
            .weights
            .iter()
            .map(|w| w + (uniform_unit(&mut draws) * 2.0 - 1.0) * scale)
            .collect();
        let b = sol.intercept + (uniform_unit(&mut draws) * 2.0 - 1.0) * scale;
        assert!(loss(&perturbed, b) >= base - 1e-12);
    }
}

#[test]
fn trig_spec_column_values_match_expression_eval_everywhere() {
    let spec = trig_spec();
    let xs: Vec<f64> = (0..200).map(|i| -PI + i as f64 * 0.03).collect();
    let m = build_design_matrix(&spec, &xs, DEFAULT_GUARD).unwrap();
    for (r, &idx) in m.kept_row_indices().iter().enumerate() {
        for (c, col) in spec.columns().iter().enumerate() {
            let single = Expression::new(vec![Term::new(1.0, col.clone()).unwrap()]);
            let want = single.eval(xs[idx]).unwrap();
            assert!((m.row(r)[c] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }
}

#[test]
fn fitted_frames_stay_consistent_with_their_parameters() {
    let mut draws = SeedDraws::new(5150);
    for _ in 0..10 {
        let n = 50 + draws.uniform_below(150) as usize;
        let norm = audio::compute_time_normalization(n, 44100.0).unwrap();
        let times: Vec<f64> = (0..n).map(|i| norm.normalized_time(i)).collect();
        let targets: Vec<f64> = (0..n)
            .map(|_| uniform_unit(&mut draws) * 1.6 - 0.8)
            .collect();
        let frame = audio::Frame::new(0, times.clone(), targets).unwrap();
        let cfg = FitConfig {
            n_waves: 1 + draws.uniform_below(4) as usize,
            passes: 1 + draws.uniform_below(3) as usize,
            ..FitConfig::default()
        };
        let fit = match fit_frame(&frame, &cfg) {
            Ok(f) => f,
            Err(_) => continue,
        };
        assert_eq!(fit.params.len(), cfg.n_waves);
        let rebuilt = superpose(&fit.params, &times, true, false);
        for (a, b) in rebuilt.iter().zip(&fit.final_h) {
            assert!((a - b).abs() <= 1e-9);
        }
        let again = fit_frame(&frame, &cfg).unwrap();
        assert_eq!(again, fit);
    }
}
