use std::path::{Path, PathBuf};

use clap::Args;
use dicke_vrs::sweep_fit::power_law_fit;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map};

use crate::error::{CliError, CliResult};
use crate::output::{emit_report, OutputArgs, RunManifest};

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,

    /// Column holding the system size.
    #[arg(long, default_value = "N")]
    pub x_column: String,

    #[arg(long, default_value = "value")]
    pub y_column: String,

    /// Reference `alpha,beta,gamma` to report deviations from.
    #[arg(long, value_delimiter = ',')]
    pub compare: Option<Vec<f64>>,

    #[command(flatten)]
    pub out: OutputArgs,
}

struct Data {
    points: Vec<(f64, f64)>,
    /// Rows with an empty value cell, e.g. failed sweep points.
    skipped: usize,
}

fn read_points(path: &Path, x_col: &str, y_col: &str) -> CliResult<Data> {
    let bad = |message: String| CliError::Input { path: path.to_path_buf(), message };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("no column `{name}` (have {})", headers.iter().collect::<Vec<_>>().join(", "))))
    };
    let (ix, iy) = (find(x_col)?, find(y_col)?);
    let mut data = Data { points: Vec::new(), skipped: 0 };
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| record.get(i).unwrap_or("").trim();
        if cell(iy).is_empty() {
            data.skipped += 1;
            continue;
        }
        let parse = |i: usize, name: &str| {
            cell(i).parse::<f64>().map_err(|_| bad(format!("line {line}: `{}` in column `{name}` is not a number", cell(i))))
        };
        data.points.push((parse(ix, x_col)?, parse(iy, y_col)?));
    }
    Ok(data)
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let data = read_points(&args.input, &args.x_column, &args.y_column)?;
    let mut sizes: Vec<f64> = data.points.iter().map(|p| p.0).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 4 {
        return Err(CliError::Usage(format!(
            "fit needs at least 4 rows with distinct {}, got {}",
            args.x_column,
            sizes.len()
        )));
    }
    let fit = power_law_fit(&data.points)?;

    let mut body = Map::new();
    body.insert("fit".into(), serde_json::to_value(&fit).expect("fit serializes"));
    if let Some(reference) = &args.compare {
        let [a, b, g] = reference[..] else {
            return Err(CliError::Usage("--compare takes alpha,beta,gamma".into()));
        };
        body.insert(
            "compare".into(),
            json!({
                "alpha": a, "beta": b, "gamma": g,
                "delta_alpha": fit.alpha - a,
                "delta_beta": fit.beta - b,
                "delta_gamma": fit.gamma - g,
                "beta_sigmas": (fit.beta - b) / fit.beta_err,
            }),
        );
    }
    let resolved = json!({ "rows_used": data.points.len(), "rows_skipped": data.skipped });
    let manifest = RunManifest::new("fit", args, resolved);
    emit_report(&args.out, &manifest, body)?;
    if fit.converged {
        Ok(())
    } else {
        Err(CliError::FitNotConverged(fit.iterations))
    }
}
