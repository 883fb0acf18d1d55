use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use trigfit_core::expr::{Expression, DEFAULT_GUARD};
use trigfit_core::featurize::FeatureSpec;
use trigfit_core::linreg::{
    dataset_from_expression, error_table_csv, predict, run_comparison, ComparisonConfig,
    FitReport,
};

use crate::config::{ensure_dir, write_text, ConfigFile};
use crate::error::{io_error, CliError};
use crate::manifest::RunManifest;
use crate::{parse_spec_token, FitArgs};

pub fn run(args: FitArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_ref())?;
    let expr_path: PathBuf = cfg.require(args.expr, "expr")?;
    let lo = cfg.resolve(args.lo, "lo", -PI)?;
    let hi = cfg.resolve(args.hi, "hi", PI)?;
    let step = cfg.resolve(args.step, "step", 0.01)?;
    let seed = cfg.resolve(args.seed, "seed", 0)?;
    let test_fraction = cfg.resolve(args.test_fraction, "test-fraction", 0.2)?;
    let ridge = cfg.resolve(args.ridge, "ridge", 0.0)?;
    let ridge_fallback = cfg.resolve(args.ridge_fallback, "ridge-fallback", 1e-10)?;
    let no_ridge_fallback = args.no_ridge_fallback
        || cfg.get::<bool>("no-ridge-fallback")?.unwrap_or(false);
    let guard = cfg.resolve(args.guard, "guard", DEFAULT_GUARD)?;
    let out_dir = cfg.resolve(args.out_dir, "out-dir", PathBuf::from("trigfit-fit"))?;

    let mut specs = args.specs;
    if specs.is_empty() {
        if let Some(tokens) = cfg.get::<Vec<String>>("spec")? {
            specs = tokens
                .iter()
                .map(|t| parse_spec_token(t).map_err(CliError::argument))
                .collect::<Result<Vec<FeatureSpec>, _>>()?;
        }
    }
    if specs.is_empty() {
        return Err(CliError::argument(
            "at least one --spec is required (linear | poly:D | trig | product:D:M)",
        ));
    }

    let text = fs::read_to_string(&expr_path).map_err(|e| io_error(&expr_path, e))?;
    let expr = Expression::parse(&text)?;

    let comparison = ComparisonConfig {
        test_fraction,
        seed,
        ridge,
        ridge_fallback: if no_ridge_fallback {
            None
        } else {
            Some(ridge_fallback)
        },
        guard,
    };
    let results = run_comparison(&expr, lo, hi, step, &specs, &comparison)?;
    let data = dataset_from_expression(&expr, lo, hi, step, guard)?;

    ensure_dir(&out_dir)?;
    let mut manifest = RunManifest::new("fit");
    manifest
        .arg("expr", expr_path.display().to_string())
        .arg("lo", lo)
        .arg("hi", hi)
        .arg("step", step)
        .arg("spec", specs.iter().map(|s| s.name()).collect::<Vec<_>>())
        .arg("seed", seed)
        .arg("test-fraction", test_fraction)
        .arg("ridge", ridge)
        .arg("ridge-fallback", ridge_fallback)
        .arg("no-ridge-fallback", no_ridge_fallback)
        .arg("guard", guard)
        .arg("out-dir", out_dir.display().to_string())
        .seed("split", seed)
        .input(&expr_path)?;

    let reports: Vec<&FitReport> = results.iter().map(|r| &r.report).collect();
    let table = error_table_csv(&results.iter().map(|r| r.report.clone()).collect::<Vec<_>>());
    let table_path = out_dir.join("error_table.csv");
    write_text(&table_path, &table)?;
    manifest.output(&table_path);

    let reports_path = out_dir.join("reports.json");
    write_text(
        &reports_path,
        &serde_json::to_string_pretty(&reports).expect("reports serialize"),
    )?;
    manifest.output(&reports_path);

    // Per-spec prediction traces over the full kept dataset, ready to plot.
    for result in &results {
        let (pred, kept) = predict(&result.model, &data.xs)?;
        let mut csv = String::from("x,y_true,y_pred\n");
        for (row, &idx) in kept.iter().enumerate() {
            csv.push_str(&format!("{},{},{}\n", data.xs[idx], data.ys[idx], pred[row]));
        }
        let name = result.report.spec_name.replace(':', "_");
        let path = out_dir.join(format!("predictions_{name}.csv"));
        write_text(&path, &csv)?;
        manifest.output(&path);
    }

    manifest.write_in_dir(&out_dir)?;
    print!("{table}");
    Ok(())
}
