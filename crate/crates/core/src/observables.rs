//! Expectation values, reduced states, quadrature covariances and Husimi
//! grids.
//!
//! Quadratures follow `x = (a + a†)/√2`, `p = i(a† − a)/√2`, so the vacuum has
//! variance ½ in each.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{Factor, QuantumState, SpaceSpec, SparseOperator, C64};

const IMAG_TOL: f64 = 1e-10;
const MIN_GRID_POINTS: usize = 16;
const COHERENT_TAIL_TOL: f64 = 1e-6;

/// `⟨ψ|O|ψ⟩` for a hermitian `O`.
pub fn expectation(op: &SparseOperator, state: &QuantumState) -> Result<f64> {
    if op.space() != state.space() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: state.space().dim(),
        });
    }
    if !op.is_hermitian() {
        return Err(Error::NonHermitian);
    }
    let amps = state.amplitudes();
    let value: C64 = op
        .entries()
        .iter()
        .map(|&(r, c, v)| amps[r].conj() * v * amps[c])
        .sum();
    if value.im.abs() > IMAG_TOL * value.re.abs().max(1.0) {
        return Err(Error::ImaginaryResidue(value.im));
    }
    Ok(value.re)
}

/// Dense density matrix, validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: SpaceSpec,
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Checks unit trace (1e-10), hermiticity (1e-12) and positivity (−1e-10).
    pub fn new(space: SpaceSpec, entries: DMatrix<C64>) -> Result<Self> {
        let dim = space.dim();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.nrows(),
            });
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {trace} is not 1"
            )));
        }
        if (&entries - entries.adjoint())
            .iter()
            .any(|d| d.norm() > 1e-12)
        {
            return Err(Error::NonHermitian);
        }
        let lowest = SymmetricEigen::new(entries.clone()).eigenvalues.min();
        if lowest < -1e-10 {
            return Err(Error::InvalidParameter(format!(
                "density matrix eigenvalue {lowest} is negative"
            )));
        }
        Ok(Self { space, entries })
    }

    pub fn from_pure(state: &QuantumState) -> Self {
        let v = DVector::from_column_slice(state.amplitudes());
        Self {
            space: state.space().clone(),
            entries: &v * v.adjoint(),
        }
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Reduced state of one factor of a two-factor density matrix.
    pub fn partial_trace(&self, keep: usize) -> Result<DensityMatrix> {
        let (da, db) = two_factor_dims(&self.space, keep)?;
        let kept = if keep == 0 { da } else { db };
        let mut out = DMatrix::<C64>::zeros(kept, kept);
        for r in 0..kept {
            for c in 0..kept {
                out[(r, c)] = if keep == 0 {
                    (0..db)
                        .map(|j| self.entries[(r * db + j, c * db + j)])
                        .sum()
                } else {
                    (0..da)
                        .map(|i| self.entries[(i * db + r, i * db + c)])
                        .sum()
                };
            }
        }
        finish_reduced(&self.space, keep, out)
    }
}

fn two_factor_dims(space: &SpaceSpec, keep: usize) -> Result<(usize, usize)> {
    let factors = space.factors();
    if factors.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "partial trace needs a two-factor space, found {} factors",
            factors.len()
        )));
    }
    if keep > 1 {
        return Err(Error::SlotOutOfRange {
            slot: keep,
            n_factors: 2,
        });
    }
    Ok((factors[0].dim(), factors[1].dim()))
}

fn finish_reduced(space: &SpaceSpec, keep: usize, m: DMatrix<C64>) -> Result<DensityMatrix> {
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(SpaceSpec::new(vec![space.factors()[keep]])?, m)
}

/// Reduced density matrix of factor `keep` of a two-factor pure state.
pub fn partial_trace(state: &QuantumState, keep: usize) -> Result<DensityMatrix> {
    let (da, db) = two_factor_dims(state.space(), keep)?;
    // row-major amplitudes read as a column-major db × da matrix are ψᵀ
    let psi_t = DMatrix::from_column_slice(db, da, state.amplitudes());
    let reduced = if keep == 0 {
        let psi = psi_t.transpose();
        &psi * psi.adjoint()
    } else {
        &psi_t * psi_t.adjoint()
    };
    finish_reduced(state.space(), keep, reduced)
}

/// `L ψ` for the truncated lowering operator of the Fock factor at `slot`.
fn lowered(space: &SpaceSpec, slot: usize, amps: &[C64]) -> Vec<C64> {
    let (outer, d, inner) = space.strides(slot);
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    for o in 0..outer {
        for n in 1..d {
            let s = (n as f64).sqrt();
            let src = (o * d + n) * inner;
            let dst = (o * d + n - 1) * inner;
            for i in 0..inner {
                out[dst + i] = amps[src + i] * s;
            }
        }
    }
    out
}

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Quadrature covariance over `(x_a, p_a, x_b, p_b)` of a two-mode state.
///
/// Built from the moments `⟨L_i⟩`, `⟨L_i†L_j⟩`, `⟨L_iL_j⟩` of the lowering
/// operators, which truncation leaves exact, with `[L_i, L_j†] = δ_ij`
/// supplied analytically rather than from the truncated commutator.
pub fn covariance_matrix(state: &QuantumState) -> Result<CovarianceMatrix> {
    let space = state.space();
    let factors = space.factors();
    if factors.len() != 2 || !factors.iter().all(Factor::is_fock) {
        return Err(Error::InvalidParameter(
            "covariance needs two Fock factors".into(),
        ));
    }
    let psi = state.amplitudes();
    let low: [Vec<C64>; 2] = [lowered(space, 0, psi), lowered(space, 1, psi)];
    let mu = [dot(psi, &low[0]), dot(psi, &low[1])];
    let mut n = [[C64::new(0.0, 0.0); 2]; 2];
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            n[i][j] = dot(&low[i], &low[j]);
            m[i][j] = dot(psi, &lowered(space, i, &low[j]));
        }
    }

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u = [C64::new(h, 0.0), C64::new(0.0, -h)];
    let coeff = |k: usize| (k / 2, u[k % 2]);
    let mean = |k: usize| {
        let (i, uk) = coeff(k);
        2.0 * (uk * mu[i]).re
    };
    let mut sigma = Matrix4::zeros();
    for k in 0..4 {
        for l in 0..4 {
            let (i, uk) = coeff(k);
            let (j, ul) = coeff(l);
            let delta = if i == j { 1.0 } else { 0.0 };
            let second = uk * ul * m[i][j]
                + uk * ul.conj() * (n[j][i] + delta)
                + uk.conj() * ul * n[i][j]
                + uk.conj() * ul.conj() * m[i][j].conj();
            sigma[(k, l)] = second.re - mean(k) * mean(l);
        }
    }
    let sigma = (sigma + sigma.transpose()) * 0.5;
    Ok(CovarianceMatrix(sigma))
}

/// `(x, p)` covariance block of the Fock factor at `slot`, any other factors
/// traced out.
pub fn mode_covariance(state: &QuantumState, slot: usize) -> Result<Matrix2<f64>> {
    let space = state.space();
    if !space.factor(slot)?.is_fock() {
        return Err(Error::WrongFactor {
            slot,
            expected: "Fock",
        });
    }
    let psi = state.amplitudes();
    let low = lowered(space, slot, psi);
    let mu = dot(psi, &low);
    let n = dot(&low, &low).re;
    let m = dot(psi, &lowered(space, slot, &low));
    // ⟨x²⟩ = (2n + 1 + 2 Re m)/2, ⟨p²⟩ = (2n + 1 − 2 Re m)/2, sym⟨xp⟩ = Im m
    let (mx, mp) = (
        std::f64::consts::SQRT_2 * mu.re,
        std::f64::consts::SQRT_2 * mu.im,
    );
    let vx = n + 0.5 + m.re - mx * mx;
    let vp = n + 0.5 - m.re - mp * mp;
    let cxp = m.im - mx * mp;
    Ok(Matrix2::new(vx, cxp, cxp, vp))
}

/// `(a, b)` covariance re-expressed in hybrid `(c, d)` quadratures.
pub fn hybrid_covariance(cov: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    cov.validate(1e-10)?;
    Ok(cov.hybrid())
}

/// Squeezing read off a single-mode covariance block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SqueezingEstimate {
    /// `¼ ln(λ_min/λ_max)` for momentum-squeezed blocks, its negative when
    /// the squeezed axis lies closer to `x`.
    pub xi: f64,
    /// `true` when the minor principal axis is closer to `p` than to `x`.
    pub momentum_squeezed: bool,
    /// Angle of the minor principal axis from the `x` axis, in `(−π/2, π/2]`.
    pub minor_axis_angle: f64,
}

impl SqueezingEstimate {
    pub fn magnitude(&self) -> f64 {
        self.xi.abs()
    }
}

fn validate_block(block: &Matrix2<f64>) -> Result<()> {
    if !block.iter().all(|v| v.is_finite())
        || (block[(0, 1)] - block[(1, 0)]).abs() > 1e-12 * block.amax().max(1.0)
    {
        return Err(Error::InvalidParameter(
            "covariance block must be finite and symmetric".into(),
        ));
    }
    let det = block.determinant();
    if det < 0.25 - 1e-12 || block[(0, 0)] <= 0.0 {
        return Err(Error::UncertaintyViolation { det });
    }
    Ok(())
}

pub fn squeezing_from_covariance(block: &Matrix2<f64>) -> Result<SqueezingEstimate> {
    validate_block(block)?;
    let eig = SymmetricEigen::new(*block);
    let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let (lmin, lmax) = (eig.eigenvalues[lo], eig.eigenvalues[hi]);
    let magnitude = -0.25 * (lmin / lmax).ln();
    if magnitude <= 1e-15 {
        return Ok(SqueezingEstimate {
            xi: 0.0,
            momentum_squeezed: false,
            minor_axis_angle: 0.0,
        });
    }
    let axis = eig.eigenvectors.column(lo);
    let mut angle = axis[1].atan2(axis[0]);
    if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    } else if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    }
    let momentum_squeezed = axis[1].abs() > axis[0].abs();
    let xi = if momentum_squeezed {
        -magnitude
    } else {
        magnitude
    };
    Ok(SqueezingEstimate {
        xi,
        momentum_squeezed,
        minor_axis_angle: angle,
    })
}

/// Square phase-space window `[−half_width, half_width]²` sampled on
/// `points_per_axis` points per axis, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 101;

    pub fn new(half_width: f64, points_per_axis: usize) -> Result<Self> {
        let spec = Self {
            half_width,
            points_per_axis,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `4·max √(2·Var)` over the block's two quadratures.
    pub fn for_block(block: &Matrix2<f64>, points_per_axis: usize) -> Result<Self> {
        let var = block[(0, 0)].max(block[(1, 1)]);
        Self::new(4.0 * (2.0 * var).sqrt(), points_per_axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::Domain {
                what: "grid half width",
                value: self.half_width,
            });
        }
        if self.points_per_axis < MIN_GRID_POINTS {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {MIN_GRID_POINTS} points per axis, got {}",
                self.points_per_axis
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis - 1) as f64
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        -self.half_width + index as f64 * self.spacing()
    }
}

/// Husimi `Q(x, p)` sampled on a [`GridSpec`]; `values` is row-major with
/// rows indexed by `p` and columns by `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HusimiGrid {
    pub half_width: f64,
    pub points_per_axis: usize,
    pub values: Vec<f64>,
}

impl HusimiGrid {
    fn evaluate(grid: GridSpec, q: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n = grid.points_per_axis;
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|ip| {
                let p = grid.coordinate(ip);
                (0..n).map(move |ix| (ix, p))
            })
            .map(|(ix, p)| q(grid.coordinate(ix), p))
            .collect();
        Self {
            half_width: grid.half_width,
            points_per_axis: n,
            values,
        }
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            half_width: self.half_width,
            points_per_axis: self.points_per_axis,
        }
    }

    pub fn get(&self, ix: usize, ip: usize) -> f64 {
        self.values[ip * self.points_per_axis + ix]
    }

    /// Iterates `(x, p, Q)` in row order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let spec = self.spec();
        self.values.iter().enumerate().map(move |(k, &q)| {
            let (ip, ix) = (k / spec.points_per_axis, k % spec.points_per_axis);
            (spec.coordinate(ix), spec.coordinate(ip), q)
        })
    }

    /// Riemann sum of `Q d²α` with `d²α = dx dp / 2`.
    pub fn integral(&self) -> f64 {
        let h = self.spec().spacing();
        self.values.iter().sum::<f64>() * h * h / 2.0
    }

    /// Second central moments of `Q` over `(x, p)`.
    pub fn moment_covariance(&self) -> Matrix2<f64> {
        let total: f64 = self.values.iter().sum();
        let (mut mx, mut mp) = (0.0, 0.0);
        for (x, p, q) in self.points() {
            mx += x * q;
            mp += p * q;
        }
        mx /= total;
        mp /= total;
        let mut s = Matrix2::zeros();
        for (x, p, q) in self.points() {
            let (dx, dp) = (x - mx, p - mp);
            s[(0, 0)] += dx * dx * q;
            s[(0, 1)] += dx * dp * q;
            s[(1, 1)] += dp * dp * q;
        }
        s[(1, 0)] = s[(0, 1)];
        s / total
    }

    /// Ratio of principal axes of the iso-contours, `√(λ_max/λ_min)` of the
    /// moment covariance.
    pub fn contour_axis_ratio(&self) -> f64 {
        let ev = SymmetricEigen::new(self.moment_covariance()).eigenvalues;
        (ev.max() / ev.min()).sqrt()
    }

    pub fn max_abs_diff(&self, other: &HusimiGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Poisson weight of a coherent state `|α|² = lambda` above level `cutoff`.
fn coherent_tail(lambda: f64, cutoff: usize) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let mut log_term = -lambda;
    let mut head = log_term.exp();
    for n in 1..=cutoff {
        log_term += lambda.ln() - (n as f64).ln();
        head += log_term.exp();
    }
    (1.0 - head).max(0.0)
}

/// `Q(x, p) = ⟨α|ρ|α⟩/π` with `α = (x + ip)/√2` for a single Fock factor.
pub fn husimi_q(rho: &DensityMatrix, grid: GridSpec) -> Result<HusimiGrid> {
    grid.validate()?;
    let cutoff = match rho.space().factors() {
        [Factor::Fock { cutoff }] => *cutoff,
        _ => {
            return Err(Error::InvalidParameter(
                "Husimi grid needs a single Fock factor".into(),
            ))
        }
    };
    // farthest grid point is the corner, |α|² = half_width²
    let tail = coherent_tail(grid.half_width * grid.half_width, cutoff);
    if tail > COHERENT_TAIL_TOL {
        return Err(Error::CutoffTooSmall {
            cutoff,
            half_width: grid.half_width,
            tail,
        });
    }
    let rho = rho.entries();
    let d = cutoff + 1;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(HusimiGrid::evaluate(grid, |x, p| {
        let alpha = C64::new(x * h, p * h);
        let mut coh = Vec::with_capacity(d);
        let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        coh.push(c);
        for n in 1..d {
            c = c * alpha / (n as f64).sqrt();
            coh.push(c);
        }
        let mut q = C64::new(0.0, 0.0);
        for m in 0..d {
            let row: C64 = (0..d).map(|n| rho[(m, n)] * coh[n]).sum();
            q += coh[m].conj() * row;
        }
        (q.re / std::f64::consts::PI).max(0.0)
    }))
}

/// Closed-form Husimi function of a zero-mean Gaussian state with
/// single-mode covariance `block`: a normalized Gaussian with covariance
/// `block + ½·I` in `(x, p)`.
pub fn gaussian_husimi(block: &Matrix2<f64>, grid: GridSpec) -> Result<HusimiGrid> {
    validate_block(block)?;
    grid.validate()?;
    let s = block + Matrix2::identity() * 0.5;
    let inv = s.try_inverse().ok_or(Error::UncertaintyViolation {
        det: block.determinant(),
    })?;
    let norm = 1.0 / (std::f64::consts::PI * s.determinant().sqrt());
    Ok(HusimiGrid::evaluate(grid, |x, p| {
        let quad = inv[(0, 0)] * x * x + 2.0 * inv[(0, 1)] * x * p + inv[(1, 1)] * p * p;
        norm * (-0.5 * quad).exp()
    }))
}
