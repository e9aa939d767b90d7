use clap::{Args, ValueEnum};
use dicke_vrs::models::{Cutoff, ModelKind, ModelParams};
use dicke_vrs::observables::{
    covariance_matrix, gaussian_husimi, husimi_q, hybrid_covariance, partial_trace, GridSpec, HusimiGrid,
};
use dicke_vrs::sweep_fit::solve_model;
use dicke_vrs::Error as CoreError;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ed::SolverArgs;
use crate::error::CliResult;
use crate::output::{emit_table, OutputArgs, RunManifest, Table};

/// Largest Fock level tried when the window needs a deeper truncation.
const MAX_CUTOFF: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Field.
    A,
    /// Matter.
    B,
    /// `(b − a)/√2`.
    C,
    /// `(a + b)/√2`.
    D,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct HusimiArgs {
    #[arg(long)]
    pub ratio: f64,

    #[arg(long, value_enum, default_value_t = Mode::A)]
    pub mode: Mode,

    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,

    #[arg(long = "Omega", default_value_t = 1.0)]
    pub omega_atom: f64,

    /// Grid spans [-w, w] in x and p; sized from the mode covariance when omitted.
    #[arg(long)]
    pub half_width: Option<f64>,

    #[arg(long, default_value_t = GridSpec::DEFAULT_POINTS)]
    pub points: usize,

    /// `auto` also deepens the truncation until the window is resolved.
    #[arg(long, default_value = "auto")]
    pub cutoff: Cutoff,

    #[command(flatten)]
    pub solver: SolverArgs,

    #[command(flatten)]
    pub out: OutputArgs,
}

struct Computed {
    grid: HusimiGrid,
    cutoff: usize,
    method: &'static str,
}

fn compute(args: &HusimiArgs) -> CliResult<Computed> {
    let cfg = args.solver.config()?;
    let params = ModelParams::from_ratio(args.omega, args.omega_atom, args.ratio)?;
    let mut cutoff = args.cutoff;
    loop {
        let (_, res) = solve_model(ModelKind::Hp, &params.with_cutoff(cutoff), &cfg)?;
        let used = res.cutoff_used.expect("two-mode model has a Fock cutoff");
        let state = res.ground();
        let cov = covariance_matrix(state)?;
        let (block, slot) = match args.mode {
            Mode::A => (cov.mode_block(0), Some(0)),
            Mode::B => (cov.mode_block(1), Some(1)),
            Mode::C => (hybrid_covariance(&cov)?.mode_block(0), None),
            Mode::D => (hybrid_covariance(&cov)?.mode_block(1), None),
        };
        let spec = match args.half_width {
            Some(w) => GridSpec::new(w, args.points)?,
            None => GridSpec::for_block(&block, args.points)?,
        };
        let Some(slot) = slot else {
            // hybrid modes are not tensor factors; the ground state is Gaussian,
            // so their reduced state is fixed by the measured block
            return Ok(Computed { grid: gaussian_husimi(&block, spec)?, cutoff: used, method: "gaussian" });
        };
        match husimi_q(&partial_trace(state, slot)?, spec) {
            Ok(grid) => return Ok(Computed { grid, cutoff: used, method: "reduced_density_matrix" }),
            Err(CoreError::CutoffTooSmall { .. }) if args.cutoff == Cutoff::Auto && used < MAX_CUTOFF => {
                // small steps: the solver budget, not the window, tends to bind first
                cutoff = Cutoff::Fixed((used + (used / 4).max(16)).min(MAX_CUTOFF));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

pub fn run(args: &HusimiArgs) -> CliResult<()> {
    let Computed { grid, cutoff, method } = compute(args)?;
    let mut table = Table::new(vec!["x".into(), "p".into(), "Q".into()]);
    table.rows = grid.points().map(|(x, p, q)| vec![x.into(), p.into(), q.into()]).collect();
    let resolved = json!({
        "cutoff_used": cutoff,
        "half_width": grid.half_width,
        "points_per_axis": grid.points_per_axis,
        "method": method,
        "integral": grid.integral(),
        "contour_axis_ratio": grid.contour_axis_ratio(),
    });
    let manifest = RunManifest::new("husimi", args, resolved);
    emit_table(&args.out, &manifest, &table)
}
