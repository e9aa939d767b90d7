use std::path::{Path, PathBuf};

use clap::Args;
use dicke_vrs::sweep_fit::{run_sweep, SweepSpec};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{emit_table, Cell, OutputArgs, RunManifest, Table};

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SweepArgs {
    /// JSON document with `model`, `axes`, `fixed`, `observables` and `solve`.
    pub config: PathBuf,

    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn load_spec(path: &Path) -> CliResult<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config_err = |message: String| CliError::Config { path: path.to_path_buf(), message };
    let spec: SweepSpec = serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?;
    spec.columns().map_err(|e| config_err(format!("observables: {e}")))?;
    spec.solve.validate().map_err(|e| config_err(format!("solve: {e}")))?;
    spec.validate().map_err(|e| config_err(format!("axes: {e}")))?;
    Ok(spec)
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    let spec = load_spec(&args.config)?;
    run_spec(&spec, &args.out, &args.config)
}

/// Runs a spec and records it, defaults filled in, as the manifest parameters.
pub fn run_spec(spec: &SweepSpec, out: &OutputArgs, source: &Path) -> CliResult<()> {
    let table = run_sweep(spec)?;
    let mut columns = table.axes.clone();
    columns.extend(table.columns.iter().cloned());
    columns.push("error".into());
    let mut out_table = Table::new(columns);
    for row in &table.rows {
        let mut cells: Vec<Cell> = row.coordinates.iter().map(|&c| c.into()).collect();
        cells.extend(row.values.iter().map(|&v| Cell::Num(v)));
        cells.push(Cell::Text(row.error.clone()));
        out_table.rows.push(cells);
    }
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    let resolved = json!({ "points": table.rows.len(), "failed_points": failed, "config_file": source });
    let parameters = json!({ "spec": spec, "out": out });
    let manifest = RunManifest::new("sweep", &parameters, resolved);
    emit_table(out, &manifest, &out_table)
}
