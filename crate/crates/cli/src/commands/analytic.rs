use clap::{Args, ValueEnum};
use dicke_vrs::analytic::{critical_coupling, vrs_linear, SqueezingReport};
use dicke_vrs::sweep_fit::{Axis, Spacing};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::output::{emit_table, Cell, OutputArgs, RunManifest, Table};

/// How the bare coupling is quoted alongside the splitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `g_c = √(ωΩ)`, splitting `ω ± g/2`.
    Intensive,
    /// `g_c = √(ωΩ/N)` per emitter, splitting `ω ± g√N/2`.
    Tavis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioSpacing {
    Linear,
    /// Uniform in `1/(1 − ratio)`.
    Inverse,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct AnalyticArgs {
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,

    #[arg(long, default_value_t = 0.0)]
    pub ratio_start: f64,

    #[arg(long, default_value_t = 0.99)]
    pub ratio_stop: f64,

    #[arg(long, default_value_t = 100)]
    pub steps: usize,

    #[arg(long, value_enum, default_value_t = RatioSpacing::Linear)]
    pub spacing: RatioSpacing,

    /// Adds the bare coupling and the linearized splitting in this convention.
    #[arg(long, value_enum)]
    pub convention: Option<Convention>,

    /// Emitter count for `--convention tavis`.
    #[arg(long, default_value_t = 1)]
    pub n_spins: usize,

    #[command(flatten)]
    pub out: OutputArgs,
}

pub const COLUMNS: [&str; 6] = ["ratio", "xi_minus", "xi_plus", "omega_tilde", "Omega_tilde", "n_virtual"];

pub fn run(args: &AnalyticArgs) -> CliResult<()> {
    if !(args.ratio_stop < 1.0) {
        return Err(CliError::Usage(format!("--ratio-stop must be below 1, got {}", args.ratio_stop)));
    }
    if !(args.ratio_start >= 0.0 && args.ratio_start <= args.ratio_stop) {
        return Err(CliError::Usage("need 0 <= --ratio-start <= --ratio-stop".into()));
    }
    if args.steps < 2 {
        return Err(CliError::Usage("--steps must be at least 2".into()));
    }
    if args.n_spins == 0 {
        return Err(CliError::Usage("--n-spins must be at least 1".into()));
    }
    let spacing = match args.spacing {
        RatioSpacing::Linear => Spacing::Linear,
        RatioSpacing::Inverse => Spacing::Inverse,
    };
    let ratios = Axis::range("ratio", args.ratio_start, args.ratio_stop, args.steps, spacing).points()?;

    let mut columns: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
    let coupling = match args.convention {
        None => None,
        Some(Convention::Intensive) => Some((critical_coupling(args.omega, args.omega, None)?, None)),
        Some(Convention::Tavis) => {
            Some((critical_coupling(args.omega, args.omega, Some(args.n_spins))?, Some(args.n_spins)))
        }
    };
    if let Some((_, n)) = coupling {
        columns.push(if n.is_some() { "g_per_spin" } else { "g" }.into());
        columns.extend(["vrs_lower".into(), "vrs_upper".into()]);
    }

    let mut table = Table::new(columns);
    for ratio in ratios {
        let r = SqueezingReport::resonant(args.omega, ratio)?;
        let mut row: Vec<Cell> =
            vec![ratio.into(), r.xi_minus.into(), r.xi_plus.into(), r.omega_tilde.into(), r.omega_tilde_upper.into(), r.n_virtual.into()];
        if let Some((gc, n)) = coupling {
            let g = ratio * gc;
            let (lo, hi) = vrs_linear(args.omega, g, n);
            row.extend([g.into(), lo.into(), hi.into()]);
        }
        table.rows.push(row);
    }
    let manifest = RunManifest::new("analytic", args, Value::Null);
    emit_table(&args.out, &manifest, &table)
}
