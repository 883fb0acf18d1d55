use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ConfigFile;
use crate::error::{io_error, CliError};
use crate::EvalArgs;

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_ref())?;
    let pred_path: PathBuf = cfg.require(args.pred, "pred")?;
    let truth_path: PathBuf = cfg.require(args.truth, "truth")?;
    let pred_col = match args.pred_col {
        Some(c) => Some(c),
        None => cfg.get("pred-col")?,
    };
    let true_col = match args.true_col {
        Some(c) => Some(c),
        None => cfg.get("true-col")?,
    };
    let pred = read_column(&pred_path, pred_col.as_deref())?;
    let truth = read_column(&truth_path, true_col.as_deref())?;
    if pred.len() != truth.len() {
        return Err(CliError::argument(format!(
            "misaligned inputs: {} has {} values, {} has {}",
            pred_path.display(),
            pred.len(),
            truth_path.display(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(CliError::argument("no data rows to compare"));
    }
    let sum: f64 = pred
        .iter()
        .zip(&truth)
        .map(|(p, t)| (p - t).abs())
        .sum();
    println!("{sum}");
    Ok(())
}

/// Read one column of a CSV file. The column is addressed by zero-based
/// index or by header name; without a selector the last field of each row is
/// used. A first line that does not parse in the selected column is treated
/// as a header.
fn read_column(path: &Path, selector: Option<&str>) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();

    let index: Option<usize> = match selector {
        None => None,
        Some(s) => match s.parse::<usize>() {
            Ok(i) => Some(i),
            Err(_) => {
                // Header-name selection: the first line must carry the name.
                let header = lines.peek().ok_or_else(|| {
                    CliError::argument(format!("{}: empty file", path.display()))
                })?;
                let pos = header.split(',').position(|f| f.trim() == s);
                match pos {
                    Some(i) => Some(i),
                    None => {
                        return Err(CliError::argument(format!(
                            "{}: no column named `{s}` in header `{header}`",
                            path.display()
                        )))
                    }
                }
            }
        },
    };

    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let field = match index {
            Some(i) => fields.get(i).copied().ok_or_else(|| {
                CliError::io_format(format!(
                    "{}:{}: row has only {} fields, wanted column {i}",
                    path.display(),
                    lineno + 1,
                    fields.len()
                ))
            })?,
            None => *fields.last().expect("split yields at least one field"),
        };
        match field.trim().parse::<f64>() {
            Ok(v) => values.push(v),
            Err(e) => {
                if lineno == 0 {
                    continue; // header row
                }
                return Err(CliError::io_format(format!(
                    "{}:{}: bad number `{field}`: {e}",
                    path.display(),
                    lineno + 1
                )));
            }
        }
    }
    Ok(values)
}
