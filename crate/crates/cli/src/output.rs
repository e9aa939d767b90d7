//! Manifests and CSV/JSON emission.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file; stdout when omitted.
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,

    /// Where the manifest of a CSV run goes. Defaults to `<output>.manifest.json`,
    /// or stderr when writing to stdout.
    #[arg(long)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

impl Default for OutputArgs {
    fn default() -> Self {
        Self { format: Format::Csv, output: None, manifest: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments as given, defaults filled in.
    pub parameters: Value,
    /// Values chosen during the run, such as adaptive cutoffs.
    #[serde(default)]
    pub resolved: Value,
    pub version: String,
    pub convention: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: &impl Serialize, resolved: Value) -> Self {
        Self {
            command: command.to_string(),
            parameters: serde_json::to_value(parameters).expect("arguments serialize"),
            resolved,
            version: env!("CARGO_PKG_VERSION").to_string(),
            convention: dicke_vrs::QUADRATURE_CONVENTION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(Option<f64>),
    Text(Option<String>),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(Some(v)) => format_float(*v),
            Cell::Num(None) | Cell::Text(None) => String::new(),
            Cell::Text(Some(s)) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(Some(v)) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Num(None) | Cell::Text(None) => Value::Null,
            Cell::Text(Some(s)) => Value::String(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(Some(v))
    }
}

/// Shortest decimal that parses back to the same double.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    fn json_rows(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| (c.clone(), v.json())).collect();
                Value::Object(obj)
            })
            .collect()
    }
}

fn open(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(out: &OutputArgs) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::io(out.output.clone().unwrap_or_else(|| "<stdout>".into()), e)
}

fn write_json(out: &OutputArgs, doc: &Value) -> CliResult<()> {
    let mut w = open(out.output.as_deref())?;
    serde_json::to_writer_pretty(&mut w, doc).map_err(|e| io_err(out)(e.into()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(out))
}

fn write_manifest(out: &OutputArgs, manifest: &RunManifest) -> CliResult<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes") + "\n";
    let sidecar = out.manifest.clone().or_else(|| {
        out.output.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match sidecar {
        Some(path) => std::fs::write(&path, text).map_err(|e| CliError::io(path, e)),
        None => io::stderr().write_all(text.as_bytes()).map_err(|e| CliError::io("<stderr>", e)),
    }
}

/// Writes a table as CSV (manifest alongside) or as `{manifest, rows}` JSON.
pub fn emit_table(out: &OutputArgs, manifest: &RunManifest, table: &Table) -> CliResult<()> {
    match out.format {
        Format::Json => {
            let doc = serde_json::json!({ "manifest": manifest, "rows": table.json_rows() });
            write_json(out, &doc)
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(open(out.output.as_deref())?);
            let csv_err = |e: csv::Error| io_err(out)(e.into());
            w.write_record(&table.columns).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
            }
            w.flush().map_err(io_err(out))?;
            write_manifest(out, manifest)
        }
    }
}

/// Writes a JSON report: the manifest plus the given top-level fields.
pub fn emit_report(out: &OutputArgs, manifest: &RunManifest, body: Map<String, Value>) -> CliResult<()> {
    let mut doc = Map::new();
    doc.insert("manifest".into(), serde_json::to_value(manifest).expect("manifest serializes"));
    doc.extend(body);
    write_json(out, &Value::Object(doc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5e-7, f64::MIN_POSITIVE] {
            assert_eq!(format_float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn missing_values_are_empty_or_null() {
        assert_eq!(Cell::Num(None).csv(), "");
        assert_eq!(Cell::Num(Some(f64::NAN)).json(), Value::Null);
        assert_eq!(Cell::Text(Some("x".into())).json(), Value::String("x".into()));
    }
}
