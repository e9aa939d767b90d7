//! Closed forms in the thermodynamic (two-oscillator) limit and for the
//! single-mode reduction of the quantum Rabi model.
//!
//! All resonant formulas take the dimensionless ratio `r = g/g_c`. The hybrid
//! modes are `c ∝ a − b` (lower polariton, squeezed by `ξ₋ = ¼ ln(1 − r)`) and
//! `d = (a + b)/√2` (upper polariton, `ξ₊ = ¼ ln(1 + r)`), and the physical
//! frequencies satisfy `ω̃ = ω e^{2ξ₋}`, `Ω̃ = ω e^{2ξ₊}`.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_ratio_open(ratio: f64) -> Result<()> {
    if ratio.is_nan() || ratio < 0.0 {
        return Err(Error::Domain {
            what: "coupling ratio",
            value: ratio,
        });
    }
    if ratio >= 1.0 {
        return Err(Error::Singular { ratio });
    }
    Ok(())
}

fn check_positive(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

/// `√(ωΩ)`, or the size-dependent `√(ωΩ/N)` when `n_spins` is given.
pub fn critical_coupling(omega: f64, omega_atom: f64, n_spins: Option<usize>) -> Result<f64> {
    check_positive("omega", omega)?;
    check_positive("Omega", omega_atom)?;
    match n_spins {
        None => Ok((omega * omega_atom).sqrt()),
        Some(0) => Err(Error::InvalidParameter("n_spins must be >= 1".into())),
        Some(n) => Ok((omega * omega_atom / n as f64).sqrt()),
    }
}

/// `(ξ₋, ξ₊) = (¼ ln(1 − r), ¼ ln(1 + r))`.
pub fn squeezing_parameters(ratio: f64) -> Result<(f64, f64)> {
    check_ratio_open(ratio)?;
    // + 0.0 turns the −0 at ratio 0 into 0
    Ok((0.25 * (-ratio).ln_1p() + 0.0, 0.25 * ratio.ln_1p()))
}

/// Resonant polariton frequencies `(ω√(1 − r), ω√(1 + r))`; the lower one
/// closes at `r = 1`.
pub fn physical_frequencies(omega: f64, ratio: f64) -> Result<(f64, f64)> {
    check_positive("omega", omega)?;
    if ratio.is_nan() || ratio < 0.0 {
        return Err(Error::Domain {
            what: "coupling ratio",
            value: ratio,
        });
    }
    if ratio > 1.0 {
        return Err(Error::Singular { ratio });
    }
    Ok((omega * (1.0 - ratio).sqrt(), omega * (1.0 + ratio).sqrt()))
}

/// Normal-mode frequencies of the two-oscillator model for arbitrary `ω`, `Ω`
/// (coupling `(g/2)(a + a†)(b + b†)`):
/// `ε∓² = ½(ω² + Ω² ∓ √((Ω² − ω²)² + 4g²ωΩ))`.
pub fn bogoliubov_frequencies(omega: f64, omega_atom: f64, g: f64) -> Result<(f64, f64)> {
    check_positive("omega", omega)?;
    check_positive("Omega", omega_atom)?;
    if g.is_nan() || g < 0.0 {
        return Err(Error::Domain {
            what: "coupling g",
            value: g,
        });
    }
    let gc2 = omega * omega_atom;
    if g * g > gc2 {
        return Err(Error::Singular {
            ratio: g / gc2.sqrt(),
        });
    }
    let (w2, ww2) = (omega * omega, omega_atom * omega_atom);
    let disc = ((ww2 - w2).powi(2) + 4.0 * g * g * gc2).sqrt();
    let upper2 = 0.5 * (w2 + ww2 + disc);
    // product of the squared roots is ω²Ω² − g²ωΩ; avoids cancellation
    let lower2 = (gc2 * gc2 - g * g * gc2).max(0.0) / upper2;
    Ok((lower2.sqrt(), upper2.sqrt()))
}

/// `⟨a†a⟩ + ⟨b†b⟩ = sinh²ξ₊ + sinh²ξ₋`.
pub fn virtual_excitations(ratio: f64) -> Result<f64> {
    let (xm, xp) = squeezing_parameters(ratio)?;
    Ok(xm.sinh().powi(2) + xp.sinh().powi(2))
}

/// Linearized vacuum Rabi splitting `ω ∓ g/2`, or `ω ∓ g√N/2` for `N` emitters
/// with the size-dependent coupling convention.
pub fn vrs_linear(omega: f64, g: f64, n_spins: Option<usize>) -> (f64, f64) {
    let half = 0.5 * g * n_spins.map_or(1.0, |n| (n as f64).sqrt());
    (omega - half, omega + half)
}

/// Squeezing parameters tied to the resonant polariton frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingReport {
    pub ratio: f64,
    pub xi_minus: f64,
    pub xi_plus: f64,
    pub omega_tilde: f64,
    #[serde(rename = "Omega_tilde")]
    pub omega_tilde_upper: f64,
    pub n_virtual: f64,
}

impl SqueezingReport {
    pub fn resonant(omega: f64, ratio: f64) -> Result<Self> {
        let (xi_minus, xi_plus) = squeezing_parameters(ratio)?;
        let (omega_tilde, omega_tilde_upper) = physical_frequencies(omega, ratio)?;
        Ok(Self {
            ratio,
            xi_minus,
            xi_plus,
            omega_tilde,
            omega_tilde_upper,
            n_virtual: virtual_excitations(ratio)?,
        })
    }
}

/// Single-mode reduction of the Rabi model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiSqueezing {
    /// `ξ = ¼ ln(1 − r²)`.
    pub xi: f64,
    /// `⟨a†a⟩ = sinh²ξ`.
    pub n_photons: f64,
    /// `ω̃/ω = √(1 − r²) = e^{2ξ}`.
    pub omega_tilde_factor: f64,
}

pub fn rabi_squeezing(ratio: f64) -> Result<RabiSqueezing> {
    check_ratio_open(ratio)?;
    let one_minus = 1.0 - ratio * ratio;
    let xi = 0.25 * one_minus.ln();
    Ok(RabiSqueezing {
        xi,
        n_photons: xi.sinh().powi(2),
        omega_tilde_factor: one_minus.sqrt(),
    })
}

/// Quadrature covariance over `(x₁, p₁, x₂, p₂)`, vacuum = ½·Identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceMatrix(pub Matrix4<f64>);

impl CovarianceMatrix {
    pub fn vacuum() -> Self {
        Self(Matrix4::identity() * 0.5)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// 2×2 block of mode 0 or 1.
    pub fn mode_block(&self, mode: usize) -> Matrix2<f64> {
        assert!(mode < 2, "two-mode covariance has modes 0 and 1");
        self.0.fixed_view::<2, 2>(2 * mode, 2 * mode).into_owned()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0 - self.0.transpose()).amax() <= tol
    }

    /// Symmetry plus the single-mode uncertainty bound `det ≥ ¼ − tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if !self.is_symmetric(1e-12 * self.0.amax().max(1.0)) {
            return Err(Error::InvalidParameter(
                "covariance matrix is not symmetric".into(),
            ));
        }
        for mode in 0..2 {
            let det = self.mode_block(mode).determinant();
            if det < 0.25 - tol {
                return Err(Error::UncertaintyViolation { det });
            }
        }
        Ok(())
    }

    /// Maps `(a, b)` quadratures to hybrid `(c, d)` quadratures, or back.
    ///
    /// `x_d = (x_a + x_b)/√2` and `x_c = (x_b − x_a)/√2` (same for `p`). The
    /// overall sign on `c` is a phase that leaves its covariance block
    /// unchanged and makes the map symmetric, hence its own inverse.
    pub fn hybrid(&self) -> Self {
        let o = hybrid_map();
        Self(o * self.0 * o.transpose())
    }

    /// Symplectic eigenvalues `ν₁ ≤ ν₂` (both ½ for a pure Gaussian state).
    pub fn symplectic_eigenvalues(&self) -> [f64; 2] {
        let eig = SymmetricEigen::new(self.0);
        let sqrt = eig.eigenvectors
            * Matrix4::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()))
            * eig.eigenvectors.transpose();
        let a = sqrt * symplectic_form() * sqrt;
        let sym = -(a * a);
        let sym = (sym + sym.transpose()) * 0.5;
        let mut nu: Vec<f64> = SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect();
        nu.sort_by(f64::total_cmp);
        [0.5 * (nu[0] + nu[1]), 0.5 * (nu[2] + nu[3])]
    }
}

pub(crate) fn hybrid_map() -> Matrix4<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Matrix4::new(
        -h, 0.0, h, 0.0, //
        0.0, -h, 0.0, h, //
        h, 0.0, h, 0.0, //
        0.0, h, 0.0, h,
    )
}

fn symplectic_form() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

/// Ground-state covariance of the resonant two-oscillator model in `(a, b)`
/// quadratures.
///
/// In hybrid coordinates the state is a product of two squeezed vacua:
/// `Var(x_c) = e^{−2ξ₋}/2`, `Var(p_c) = e^{2ξ₋}/2`, and likewise for `d` with
/// `ξ₊`. The lower polariton is squeezed in momentum because its frequency is
/// reduced.
pub fn hp_ground_covariance(ratio: f64) -> Result<CovarianceMatrix> {
    let (xm, xp) = squeezing_parameters(ratio)?;
    let hybrid = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        0.5 * (-2.0 * xm).exp(),
        0.5 * (2.0 * xm).exp(),
        0.5 * (-2.0 * xp).exp(),
        0.5 * (2.0 * xp).exp(),
    ));
    Ok(CovarianceMatrix(hybrid).hybrid())
}
