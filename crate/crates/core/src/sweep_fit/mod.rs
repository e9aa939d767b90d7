//! Parameter sweeps and the finite-size power-law fit.

mod fit;
mod sweep;

pub use fit::{power_law_fit, FitResult, FitWindow};
pub use sweep::{
    closed_form_value, matter_excitations, run_sweep, solve_model, Axis, FixedParams, GroundProbe,
    Observable, Spacing, SweepModel, SweepRow, SweepSpec, SweepTable,
};
