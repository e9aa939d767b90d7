//! Parameter-grid sweeps.

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{rabi_squeezing, CovarianceMatrix, SqueezingReport};
use crate::error::{Error, Result};
use crate::hilbert::{number_op, parity_op, spin_ops, SparseOperator};
use crate::models::{Cutoff, ModelKind, ModelParams};
use crate::observables::{
    covariance_matrix, expectation, hybrid_covariance, mode_covariance, squeezing_from_covariance,
};
use crate::solver::{
    auto_cutoff, ground_state, low_spectrum, polariton_gaps, PolaritonGaps, SolveConfig,
    SpectrumResult,
};

/// Model evaluated at each grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepModel {
    Dicke,
    Hp,
    Rabi,
    Effective,
    /// Resonant closed forms only, no diagonalization.
    Analytic,
}

impl SweepModel {
    pub fn kind(self) -> Option<ModelKind> {
        match self {
            SweepModel::Dicke => Some(ModelKind::Dicke),
            SweepModel::Hp => Some(ModelKind::Hp),
            SweepModel::Rabi => Some(ModelKind::Rabi),
            SweepModel::Effective => Some(ModelKind::Effective),
            SweepModel::Analytic => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
    /// Uniform in `(1 − ratio)⁻¹`, crowding points toward the critical point.
    Inverse,
}

/// One sweep axis: explicit `values`, or `count` points from `start` to
/// `stop` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn values(name: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values: Some(values),
            start: None,
            stop: None,
            count: None,
            spacing: Spacing::Linear,
        }
    }

    pub fn range(name: &str, start: f64, stop: f64, count: usize, spacing: Spacing) -> Self {
        Self {
            name: name.into(),
            values: None,
            start: Some(start),
            stop: Some(stop),
            count: Some(count),
            spacing,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        Parameter::from_str(&self.name)?;
        if let Some(values) = &self.values {
            if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "axis `{}` needs finite values",
                    self.name
                )));
            }
            return Ok(values.clone());
        }
        let (Some(start), Some(stop), Some(count)) = (self.start, self.stop, self.count) else {
            return Err(Error::InvalidParameter(format!(
                "axis `{}` needs values or start/stop/count",
                self.name
            )));
        };
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "axis `{}` needs count >= 2",
                self.name
            )));
        }
        let t = |i: usize| i as f64 / (count - 1) as f64;
        let mut points: Vec<f64> = match self.spacing {
            Spacing::Linear => (0..count).map(|i| start + (stop - start) * t(i)).collect(),
            Spacing::Log => {
                if !(start > 0.0 && stop > 0.0) {
                    return Err(Error::InvalidParameter(
                        "log spacing needs positive bounds".into(),
                    ));
                }
                let (a, b) = (start.ln(), stop.ln());
                (0..count).map(|i| (a + (b - a) * t(i)).exp()).collect()
            }
            Spacing::Inverse => {
                if !(start < 1.0 && stop < 1.0) {
                    return Err(Error::InvalidParameter(
                        "inverse spacing needs bounds below 1".into(),
                    ));
                }
                let (a, b) = (1.0 / (1.0 - start), 1.0 / (1.0 - stop));
                (0..count)
                    .map(|i| 1.0 - 1.0 / (a + (b - a) * t(i)))
                    .collect()
            }
        };
        // endpoints exactly as given, whatever rounding the map introduced
        points[0] = start;
        points[count - 1] = stop;
        Ok(points)
    }
}

/// Grid-point parameters; axes override these.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedParams {
    pub omega: f64,
    pub omega_atom: f64,
    pub ratio: f64,
    pub n_spins: usize,
    pub cutoff: Cutoff,
    /// When set, `omega = frequency_ratio · omega_atom`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_ratio: Option<f64>,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            omega_atom: 1.0,
            ratio: 0.5,
            n_spins: 1,
            cutoff: Cutoff::Auto,
            frequency_ratio: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Parameter {
    Omega,
    OmegaAtom,
    Ratio,
    NSpins,
    Cutoff,
    FrequencyRatio,
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "omega" => Parameter::Omega,
            "omega_atom" => Parameter::OmegaAtom,
            "ratio" => Parameter::Ratio,
            "n_spins" => Parameter::NSpins,
            "cutoff" => Parameter::Cutoff,
            "frequency_ratio" => Parameter::FrequencyRatio,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown sweep axis `{other}`"
                )))
            }
        })
    }
}

fn as_count(name: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be a non-negative integer, got {v}"
        )))
    }
}

impl FixedParams {
    fn set(&mut self, name: &str, v: f64) -> Result<()> {
        match Parameter::from_str(name)? {
            Parameter::Omega => self.omega = v,
            Parameter::OmegaAtom => self.omega_atom = v,
            Parameter::Ratio => self.ratio = v,
            Parameter::NSpins => self.n_spins = as_count(name, v)?,
            Parameter::Cutoff => self.cutoff = Cutoff::Fixed(as_count(name, v)?),
            Parameter::FrequencyRatio => self.frequency_ratio = Some(v),
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        self.frequency_ratio
            .map_or(self.omega, |f| f * self.omega_atom)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        Ok(
            ModelParams::from_ratio(self.omega(), self.omega_atom, self.ratio)?
                .with_spins(self.n_spins)
                .with_cutoff(self.cutoff),
        )
    }
}

/// Sweep columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    Energy,
    NA,
    NB,
    Parity,
    Gap,
    GapLower,
    GapUpper,
    XiA,
    XiC,
    XiD,
    CutoffUsed,
    XiMinus,
    XiPlus,
    OmegaTilde,
    OmegaTildeUpper,
    NVirtual,
    RabiXi,
    RabiN,
    RabiFrequencyFactor,
}

impl Observable {
    pub const ALL: [Observable; 19] = [
        Observable::Energy,
        Observable::NA,
        Observable::NB,
        Observable::Parity,
        Observable::Gap,
        Observable::GapLower,
        Observable::GapUpper,
        Observable::XiA,
        Observable::XiC,
        Observable::XiD,
        Observable::CutoffUsed,
        Observable::XiMinus,
        Observable::XiPlus,
        Observable::OmegaTilde,
        Observable::OmegaTildeUpper,
        Observable::NVirtual,
        Observable::RabiXi,
        Observable::RabiN,
        Observable::RabiFrequencyFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Energy => "energy",
            Observable::NA => "n_a",
            Observable::NB => "n_b",
            Observable::Parity => "parity",
            Observable::Gap => "gap",
            Observable::GapLower => "gap_lower",
            Observable::GapUpper => "gap_upper",
            Observable::XiA => "xi_a",
            Observable::XiC => "xi_c",
            Observable::XiD => "xi_d",
            Observable::CutoffUsed => "cutoff",
            Observable::XiMinus => "xi_minus",
            Observable::XiPlus => "xi_plus",
            Observable::OmegaTilde => "omega_tilde",
            Observable::OmegaTildeUpper => "Omega_tilde",
            Observable::NVirtual => "n_virtual",
            Observable::RabiXi => "rabi_xi",
            Observable::RabiN => "rabi_n",
            Observable::RabiFrequencyFactor => "rabi_frequency_factor",
        }
    }

    /// Closed-form columns need no diagonalization.
    pub fn closed_form(self) -> bool {
        matches!(
            self,
            Observable::XiMinus
                | Observable::XiPlus
                | Observable::OmegaTilde
                | Observable::OmegaTildeUpper
                | Observable::NVirtual
                | Observable::RabiXi
                | Observable::RabiN
                | Observable::RabiFrequencyFactor
        )
    }

    /// Whether the column is defined for `model`.
    pub fn supports(self, model: SweepModel) -> bool {
        if self.closed_form() {
            return true;
        }
        let Some(kind) = model.kind() else {
            return false;
        };
        match self {
            Observable::NB => kind.has_matter_mode(),
            Observable::GapLower | Observable::GapUpper => kind.has_matter_mode(),
            Observable::XiC | Observable::XiD => kind == ModelKind::Hp,
            _ => true,
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::UnknownObservable(s.to_string()))
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub model: SweepModel,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub fixed: FixedParams,
    pub observables: Vec<String>,
    #[serde(default)]
    pub solve: SolveConfig,
}

impl SweepSpec {
    /// Parsed observable columns, each checked against the model.
    pub fn columns(&self) -> Result<Vec<Observable>> {
        if self.observables.is_empty() {
            return Err(Error::InvalidParameter("no observables requested".into()));
        }
        self.observables
            .iter()
            .map(|name| {
                let obs = Observable::from_str(name)?;
                if obs.supports(self.model) {
                    Ok(obs)
                } else {
                    Err(Error::UnknownObservable(format!(
                        "{name} (not defined for this model)"
                    )))
                }
            })
            .collect()
    }

    /// Grid points in lexicographic axis order, first axis slowest.
    pub fn grid(&self) -> Result<Vec<Vec<f64>>> {
        let axes: Vec<Vec<f64>> = self.axes.iter().map(Axis::points).collect::<Result<_>>()?;
        let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
        for values in &axes {
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        self.columns()?;
        self.solve.validate()?;
        if self.axes.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs at least one axis".into(),
            ));
        }
        let mut names: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "axis names must be distinct".into(),
            ));
        }
        for axis in &self.axes {
            let points = axis.points()?;
            let closed_form_only = self.model == SweepModel::Analytic;
            if axis.name == "ratio"
                && closed_form_only
                && points.iter().any(|&r| !(0.0..1.0).contains(&r))
            {
                return Err(Error::InvalidParameter(
                    "analytic sweeps need 0 <= ratio < 1".into(),
                ));
            }
        }
        Ok(())
    }

    fn point_params(&self, coords: &[f64]) -> Result<FixedParams> {
        let mut p = self.fixed;
        for (axis, &v) in self.axes.iter().zip(coords) {
            p.set(&axis.name, v)?;
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub coordinates: Vec<f64>,
    /// `None` for every column of a failed point.
    pub values: Vec<Option<f64>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub model: SweepModel,
    pub axes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Values of one column across rows, `None` where the point failed.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }
}

/// Ground state with the Fock cutoff resolved, together with the
/// Hamiltonian it was found for.
pub fn solve_model(
    kind: ModelKind,
    params: &ModelParams,
    cfg: &SolveConfig,
) -> Result<(SparseOperator, SpectrumResult)> {
    match params.fock_cutoff {
        Cutoff::Fixed(k) => {
            let h = kind.hamiltonian(params, k)?;
            let mut res = ground_state(&h, cfg)?;
            res.cutoff_used = Some(k);
            Ok((h, res))
        }
        Cutoff::Auto => {
            let (k, res) = auto_cutoff(|k| kind.hamiltonian(params, k), cfg)?;
            Ok((kind.hamiltonian(params, k)?, res))
        }
    }
}

/// `⟨b†b⟩`, or `⟨S_z⟩ + N/2` when the matter factor is a collective spin.
pub fn matter_excitations(
    kind: ModelKind,
    params: &ModelParams,
    res: &SpectrumResult,
) -> Result<f64> {
    let state = res.ground();
    match kind {
        ModelKind::Hp => expectation(&number_op(state.space(), 1)?, state),
        ModelKind::Dicke | ModelKind::Rabi => {
            let spins = if kind == ModelKind::Dicke {
                params.n_spins
            } else {
                1
            };
            Ok(expectation(&spin_ops(state.space(), 1)?.z, state)? + spins as f64 / 2.0)
        }
        ModelKind::Effective => Err(Error::InvalidParameter(
            "the effective model has no matter mode".into(),
        )),
    }
}

/// Ground-state observables of one solved model. Gaps and the hybrid-mode
/// covariance are computed on first use and shared between columns.
pub struct GroundProbe<'a> {
    kind: ModelKind,
    params: &'a ModelParams,
    h: &'a SparseOperator,
    res: &'a SpectrumResult,
    cfg: &'a SolveConfig,
    gaps: OnceCell<PolaritonGaps>,
    hybrid: OnceCell<CovarianceMatrix>,
}

impl<'a> GroundProbe<'a> {
    pub fn new(
        kind: ModelKind,
        params: &'a ModelParams,
        h: &'a SparseOperator,
        res: &'a SpectrumResult,
        cfg: &'a SolveConfig,
    ) -> Self {
        Self {
            kind,
            params,
            h,
            res,
            cfg,
            gaps: OnceCell::new(),
            hybrid: OnceCell::new(),
        }
    }

    fn gaps(&self) -> Result<PolaritonGaps> {
        if let Some(g) = self.gaps.get() {
            return Ok(*g);
        }
        let g = polariton_gaps(self.h, self.cfg)?;
        Ok(*self.gaps.get_or_init(|| g))
    }

    fn hybrid(&self) -> Result<&CovarianceMatrix> {
        if self.hybrid.get().is_none() {
            let c = hybrid_covariance(&covariance_matrix(self.res.ground())?)?;
            let _ = self.hybrid.set(c);
        }
        Ok(self.hybrid.get().expect("just set"))
    }

    /// Value of a diagonalization column; closed-form columns are rejected.
    pub fn value(&self, obs: Observable) -> Result<f64> {
        if !obs.supports(SweepModel::from(self.kind)) || obs.closed_form() {
            return Err(Error::UnknownObservable(format!(
                "{obs} (not a ground-state column for this model)"
            )));
        }
        let state = self.res.ground();
        match obs {
            Observable::Energy => Ok(self.res.ground_energy()),
            Observable::NA => expectation(&number_op(state.space(), 0)?, state),
            Observable::NB => matter_excitations(self.kind, self.params, self.res),
            Observable::Parity => expectation(&parity_op(state.space()), state),
            Observable::Gap => {
                let two = low_spectrum(self.h, 2, self.cfg)?;
                Ok(two.energies[1] - two.energies[0])
            }
            Observable::GapLower => Ok(self.gaps()?.lower),
            Observable::GapUpper => Ok(self.gaps()?.upper),
            Observable::XiA => Ok(squeezing_from_covariance(&mode_covariance(state, 0)?)?.xi),
            Observable::XiC => Ok(squeezing_from_covariance(&self.hybrid()?.mode_block(0))?.xi),
            Observable::XiD => Ok(squeezing_from_covariance(&self.hybrid()?.mode_block(1))?.xi),
            Observable::CutoffUsed => Ok(self.res.cutoff_used.map_or(f64::NAN, |k| k as f64)),
            _ => unreachable!("closed-form columns rejected above"),
        }
    }
}

impl From<ModelKind> for SweepModel {
    fn from(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Dicke => SweepModel::Dicke,
            ModelKind::Hp => SweepModel::Hp,
            ModelKind::Rabi => SweepModel::Rabi,
            ModelKind::Effective => SweepModel::Effective,
        }
    }
}

/// Closed-form column at resonance with frequency `omega` and ratio `ratio`.
pub fn closed_form_value(obs: Observable, omega: f64, ratio: f64) -> Result<f64> {
    let report = || SqueezingReport::resonant(omega, ratio);
    Ok(match obs {
        Observable::XiMinus => report()?.xi_minus,
        Observable::XiPlus => report()?.xi_plus,
        Observable::OmegaTilde => report()?.omega_tilde,
        Observable::OmegaTildeUpper => report()?.omega_tilde_upper,
        Observable::NVirtual => report()?.n_virtual,
        Observable::RabiXi => rabi_squeezing(ratio)?.xi,
        Observable::RabiN => rabi_squeezing(ratio)?.n_photons,
        Observable::RabiFrequencyFactor => rabi_squeezing(ratio)?.omega_tilde_factor,
        other => {
            return Err(Error::UnknownObservable(format!(
                "{other} (needs a diagonalization)"
            )))
        }
    })
}

fn evaluate_point(spec: &SweepSpec, columns: &[Observable], coords: &[f64]) -> Result<Vec<f64>> {
    let fixed = spec.point_params(coords)?;
    let closed = |obs: Observable| closed_form_value(obs, fixed.omega(), fixed.ratio);
    let Some(kind) = spec.model.kind() else {
        return columns.iter().map(|&o| closed(o)).collect();
    };
    let params = fixed.model_params()?;
    let (h, res) = solve_model(kind, &params, &spec.solve)?;
    let probe = GroundProbe::new(kind, &params, &h, &res, &spec.solve);
    columns
        .iter()
        .map(|&obs| {
            if obs.closed_form() {
                closed(obs)
            } else {
                probe.value(obs)
            }
        })
        .collect()
}

/// Evaluates every grid point, in parallel, and assembles rows in grid
/// order. A failing point becomes a row with an error marker; only a sweep
/// in which every point fails is an error.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let columns = spec.columns()?;
    let grid = spec.grid()?;
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|coords| match evaluate_point(spec, &columns, coords) {
            Ok(values) => SweepRow {
                coordinates: coords.clone(),
                values: values.into_iter().map(Some).collect(),
                error: None,
            },
            Err(e) => SweepRow {
                coordinates: coords.clone(),
                values: vec![None; columns.len()],
                error: Some(e.to_string()),
            },
        })
        .collect();
    if rows.iter().all(|r| r.error.is_some()) {
        let first = rows
            .first()
            .and_then(|r| r.error.clone())
            .unwrap_or_default();
        return Err(Error::AllPointsFailed(first));
    }
    Ok(SweepTable {
        model: spec.model,
        axes: spec.axes.iter().map(|a| a.name.clone()).collect(),
        columns: columns.iter().map(|c| c.name().to_string()).collect(),
        rows,
    })
}
