use std::str::FromStr;

use clap::Args;
use dicke_vrs::models::{Cutoff, ModelKind, ModelParams};
use dicke_vrs::observables::{covariance_matrix, mode_covariance};
use dicke_vrs::solver::SolveConfig;
use dicke_vrs::sweep_fit::{closed_form_value, solve_model, GroundProbe, Observable};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{emit_table, Cell, OutputArgs, RunManifest, Table};

const QUADRATURES: [&str; 4] = ["xa", "pa", "xb", "pb"];

/// Solver knobs shared by the diagonalizing commands.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SolverArgs {
    /// Relative residual tolerance of each eigenpair.
    #[arg(long, default_value_t = SolveConfig::default().eig_tol)]
    pub eig_tol: f64,

    /// Matrix-vector product budget per eigenpair.
    #[arg(long, default_value_t = SolveConfig::default().max_lanczos_iters)]
    pub max_lanczos_iters: usize,

    #[arg(long, default_value_t = SolveConfig::default().seed)]
    pub seed: u64,
}

impl SolverArgs {
    pub fn config(&self) -> CliResult<SolveConfig> {
        let cfg = SolveConfig {
            eig_tol: self.eig_tol,
            max_lanczos_iters: self.max_lanczos_iters,
            seed: self.seed,
            ..SolveConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct EdArgs {
    /// dicke, hp, rabi or effective.
    #[arg(long)]
    pub model: ModelKind,

    /// Field frequency.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,

    /// Matter frequency.
    #[arg(long = "Omega", default_value_t = 1.0)]
    pub omega_atom: f64,

    /// Coupling as a fraction of the critical coupling.
    #[arg(long)]
    pub ratio: f64,

    #[arg(long, default_value_t = 1)]
    pub n_spins: usize,

    /// `auto` or a Fock level.
    #[arg(long, default_value = "auto")]
    pub cutoff: Cutoff,

    /// Comma-separated: energy, n_a, n_b, parity, gap, gap_lower, gap_upper,
    /// xi_a, xi_c, xi_d, covariance, or any closed-form column.
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,

    #[command(flatten)]
    pub solver: SolverArgs,

    #[command(flatten)]
    pub out: OutputArgs,
}

fn default_observables(kind: ModelKind) -> Vec<String> {
    let names: &[&str] = if kind.has_matter_mode() { &["n_a", "n_b", "gap", "parity"] } else { &["n_a", "gap", "parity"] };
    names.iter().map(|s| s.to_string()).collect()
}

pub fn run(args: &EdArgs) -> CliResult<()> {
    let kind = args.model;
    let requested = args.observables.clone().unwrap_or_else(|| default_observables(kind));
    let mut wanted: Vec<Option<Observable>> = Vec::new();
    for name in &requested {
        let entry = match name.trim() {
            "covariance" => None,
            other => Some(Observable::from_str(other).map_err(|e| CliError::Usage(format!("--observables: {e}")))?),
        };
        if matches!(entry, Some(Observable::Energy | Observable::CutoffUsed)) || wanted.contains(&entry) {
            continue;
        }
        wanted.push(entry);
    }
    for obs in wanted.iter().flatten() {
        if !obs.supports(kind.into()) {
            return Err(CliError::Usage(format!("--observables: `{obs}` is not defined for the {kind} model")));
        }
    }

    let cfg = args.solver.config()?;
    let params = ModelParams::from_ratio(args.omega, args.omega_atom, args.ratio)?
        .with_spins(args.n_spins)
        .with_cutoff(args.cutoff);
    let (h, res) = solve_model(kind, &params, &cfg)?;
    let probe = GroundProbe::new(kind, &params, &h, &res, &cfg);

    let mut columns = vec!["energy".to_string(), "cutoff".to_string()];
    let mut row: Vec<Cell> = vec![res.ground_energy().into(), Cell::Num(res.cutoff_used.map(|k| k as f64))];
    for entry in &wanted {
        match entry {
            Some(obs) if obs.closed_form() => {
                columns.push(obs.name().into());
                row.push(closed_form_value(*obs, args.omega, args.ratio)?.into());
            }
            Some(obs) => {
                columns.push(obs.name().into());
                row.push(probe.value(*obs)?.into());
            }
            None => {
                let state = res.ground();
                let matrix = if kind == ModelKind::Hp {
                    covariance_matrix(state)?.0.as_slice().to_vec()
                } else {
                    mode_covariance(state, 0)?.as_slice().to_vec()
                };
                let n = if kind == ModelKind::Hp { 4 } else { 2 };
                for i in 0..n {
                    for j in i..n {
                        columns.push(format!("cov_{}_{}", QUADRATURES[i], QUADRATURES[j]));
                        // column-major storage; symmetric anyway
                        row.push(matrix[j * n + i].into());
                    }
                }
            }
        }
    }

    let resolved = json!({
        "cutoff_used": res.cutoff_used,
        "method": format!("{:?}", res.method),
        "residual": res.residual_norms.first(),
        "g": params.g,
    });
    let manifest = RunManifest::new("ed", args, resolved);
    let mut table = Table::new(columns);
    table.rows.push(row);
    emit_table(&args.out, &manifest, &table)
}
