use std::path::{Path, PathBuf};

use trigfit_core::expr::{gen_mixed_function, gen_trig_function};

use crate::config::{write_text, ConfigFile};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::GenerateKind;

pub fn run(kind: GenerateKind) -> Result<(), CliError> {
    match kind {
        GenerateKind::Trig(args) => {
            let cfg = ConfigFile::load(args.config.as_ref())?;
            let seed = cfg.resolve(args.seed, "seed", 0)?;
            let terms = cfg.resolve(args.terms, "terms", 4)?;
            let out = cfg.resolve(args.out, "out", PathBuf::from("expression.txt"))?;
            let expr = gen_trig_function(seed, terms)?;
            write_expression(&expr.to_string(), &out, seed, &[("kind", "trig")], &[
                ("seed", seed.into()),
                ("terms", (terms as u64).into()),
            ])
        }
        GenerateKind::Mixed(args) => {
            let cfg = ConfigFile::load(args.config.as_ref())?;
            let seed = cfg.resolve(args.seed, "seed", 0)?;
            let max_terms = cfg.resolve(args.max_terms, "max-terms", 10)?;
            let degree = cfg.resolve(args.degree, "degree", 2)?;
            let out = cfg.resolve(args.out, "out", PathBuf::from("expression.txt"))?;
            let expr = gen_mixed_function(seed, max_terms, degree)?;
            write_expression(&expr.to_string(), &out, seed, &[("kind", "mixed")], &[
                ("seed", seed.into()),
                ("max-terms", (max_terms as u64).into()),
                ("degree", u64::from(degree).into()),
            ])
        }
    }
}

fn write_expression(
    text: &str,
    out: &Path,
    seed: u64,
    tags: &[(&str, &str)],
    args: &[(&str, serde_json::Value)],
) -> Result<(), CliError> {
    write_text(out, &format!("{text}\n"))?;
    let mut manifest = RunManifest::new("generate");
    for (k, v) in tags {
        manifest.arg(k, v);
    }
    for (k, v) in args {
        manifest.arg(k, v);
    }
    manifest.arg("out", out.display().to_string());
    manifest.seed("seed", seed);
    manifest.output(out);
    manifest.write_beside(out)?;
    println!("{text}");
    Ok(())
}
