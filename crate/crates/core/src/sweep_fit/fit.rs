//! Levenberg–Marquardt fit of `y = α·N^β + γ`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;
const STEP_TOL: f64 = 1e-10;
const INITIAL_DAMPING: f64 = 1e-3;
const RANK_TOL: f64 = 1e-10;

/// Range of sizes the fit was performed on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitWindow {
    pub n_min: f64,
    pub n_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha_err: f64,
    pub beta_err: f64,
    pub gamma_err: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective `½Σr²` after the initial guess and after every accepted step.
    pub objective_trace: Vec<f64>,
    pub window: FitWindow,
}

impl FitResult {
    pub fn params(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    pub fn objective_non_increasing(&self) -> bool {
        self.objective_trace.windows(2).all(|w| w[1] <= w[0])
    }
}

struct Problem<'a> {
    n: &'a [f64],
    y: &'a [f64],
}

impl Problem<'_> {
    fn residuals(&self, p: &Vector3<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n.len(),
            self.n
                .iter()
                .zip(self.y)
                .map(|(&n, &y)| p[0] * n.powf(p[1]) + p[2] - y),
        )
    }

    fn jacobian(&self, p: &Vector3<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n.len(), 3, |i, j| {
            let n = self.n[i];
            match j {
                0 => n.powf(p[1]),
                1 => p[0] * n.powf(p[1]) * n.ln(),
                _ => 1.0,
            }
        })
    }
}

fn objective(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

fn rank_deficient(j: &DMatrix<f64>) -> bool {
    let mut scaled = j.clone();
    for mut col in scaled.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            return true;
        }
        col /= norm;
    }
    let sv = scaled.singular_values();
    sv.min() <= RANK_TOL * sv.max()
}

fn initial_guess(n: &[f64], y: &[f64]) -> Result<Vector3<f64>> {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi - lo <= 1e-14 * hi.abs().max(lo.abs()) {
        return Err(Error::Unidentifiable);
    }
    // ½·min(y) leaves y − γ₀ positive only when min(y) > 0
    let gamma0 = if lo > 0.0 {
        0.5 * lo
    } else {
        lo - 0.5 * (hi - lo)
    };
    let lx: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| (v - gamma0).ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let beta0 = sxy / sxx;
    let alpha0 = (my - beta0 * mx).exp();
    Ok(Vector3::new(alpha0, beta0, gamma0))
}

/// Fits `y = α·N^β + γ` by damped Gauss–Newton.
///
/// Needs at least four distinct positive `N`. Standard errors come from
/// `s²(JᵀJ)⁻¹` at the solution with `s² = Σr²/(m − 3)`.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    if points
        .iter()
        .any(|(n, y)| !(n.is_finite() && *n > 0.0 && y.is_finite()))
    {
        return Err(Error::InsufficientPoints(
            "sizes must be positive and values finite".into(),
        ));
    }
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::InsufficientPoints(format!(
            "need 4 distinct sizes, got {}",
            distinct.len()
        )));
    }
    let n: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let problem = Problem { n: &n, y: &y };

    let mut p = initial_guess(&n, &y)?;
    if !p.iter().all(|v| v.is_finite()) || rank_deficient(&problem.jacobian(&p)) {
        return Err(Error::Unidentifiable);
    }
    let mut r = problem.residuals(&p);
    let mut f = objective(&r);
    let mut trace = vec![f];
    let mut lambda = INITIAL_DAMPING;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if f == 0.0 {
            converged = true;
            break;
        }
        let j = problem.jacobian(&p);
        let jtj: Matrix3<f64> = (j.transpose() * &j).fixed_view::<3, 3>(0, 0).into_owned();
        let grad: Vector3<f64> = (j.transpose() * &r).fixed_rows::<3>(0).into_owned();
        let damped = jtj + Matrix3::from_diagonal(&jtj.diagonal()) * lambda;
        let Some(step) = damped.cholesky().map(|c| c.solve(&(-grad))) else {
            lambda *= 10.0;
            continue;
        };
        let relative = step.norm() / (p.norm() + STEP_TOL);
        let trial = p + step;
        let r_trial = problem.residuals(&trial);
        let f_trial = objective(&r_trial);
        if f_trial.is_finite() && f_trial <= f {
            p = trial;
            r = r_trial;
            f = f_trial;
            trace.push(f);
            lambda /= 10.0;
            if relative < STEP_TOL {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            // a rejected step this small means no descent is left to find
            if relative < STEP_TOL {
                converged = true;
                break;
            }
        }
    }

    let j = problem.jacobian(&p);
    if rank_deficient(&j) {
        return Err(Error::Unidentifiable);
    }
    let m = n.len();
    let s2 = 2.0 * f / (m as f64 - 3.0);
    let cov = (j.transpose() * &j).try_inverse().map(|inv| inv * s2);
    let err = |k: usize| cov.as_ref().map_or(f64::NAN, |c| c[(k, k)].max(0.0).sqrt());
    Ok(FitResult {
        alpha: p[0],
        beta: p[1],
        gamma: p[2],
        alpha_err: err(0),
        beta_err: err(1),
        gamma_err: err(2),
        residual_rms: (2.0 * f / m as f64).sqrt(),
        iterations,
        converged,
        objective_trace: trace,
        window: FitWindow {
            n_min: distinct[0],
            n_max: distinct[distinct.len() - 1],
            points: m,
        },
    })
}
