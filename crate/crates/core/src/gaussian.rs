//! Gaussian states of one bosonic mode in the linearized quadrature picture.
//!
//! The laser field is written as `a = sqrt(mu) + (x + i y) / 2`, so `x` is the
//! amplitude quadrature and `y` the phase quadrature. A Gaussian Wigner
//! function is fully described by two means and three central second moments.
//! A coherent state has unit variance in both quadratures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Purity tolerance for triples built from closed-form expressions.
pub const PURITY_TOL_ANALYTIC: f64 = 1e-9;
/// Purity tolerance for states produced by numerical integration.
pub const PURITY_TOL_NUMERIC: f64 = 1e-6;

/// Dimensionless model parameters.
///
/// `mu` is the mean boson number, `chi = 4 mu C` the self-energy
/// (Kerr-type) parameter and `nu = 4 N mu` the excess phase diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserParams {
    pub mu: f64,
    pub chi: f64,
    pub nu: f64,
}

impl LaserParams {
    pub fn new(mu: f64, chi: f64, nu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be positive, got {mu}")));
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!("nu must be non-negative, got {nu}")));
        }
        if !chi.is_finite() {
            return Err(Error::Domain(format!("chi must be finite, got {chi}")));
        }
        Ok(Self { mu, chi, nu })
    }

    /// Parameters for studies where the mean boson number does not enter
    /// (everything in the linearized moment equations except the phase
    /// variance conversion). `mu` is set to one.
    pub fn linearized(chi: f64, nu: f64) -> Result<Self> {
        Self::new(1.0, chi, nu)
    }

    /// Raw phase-diffusion rate `N = nu / (4 mu)` in units of the decay rate.
    pub fn phase_diffusion_rate(&self) -> f64 {
        self.nu / (4.0 * self.mu)
    }

    /// Raw self-energy `C = chi / (4 mu)` in units of the decay rate.
    pub fn self_energy(&self) -> f64 {
        self.chi / (4.0 * self.mu)
    }
}

/// The five Wigner moments of a Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    /// Mean of the amplitude quadrature.
    pub m10: f64,
    /// Mean of the phase quadrature.
    pub m01: f64,
    /// Variance of `x`.
    pub m20: f64,
    /// Covariance of `x` and `y`.
    pub m11: f64,
    /// Variance of `y`.
    pub m02: f64,
}

impl MomentState {
    pub const fn new(m10: f64, m01: f64, m20: f64, m11: f64, m02: f64) -> Self {
        Self {
            m10,
            m01,
            m20,
            m11,
            m02,
        }
    }

    /// Coherent state with the given means.
    pub const fn coherent(m10: f64, m01: f64) -> Self {
        Self::new(m10, m01, 1.0, 0.0, 1.0)
    }

    /// State with the given means and the second moments of `t`.
    pub fn from_triple(m10: f64, m01: f64, t: &CovarianceTriple) -> Self {
        Self::new(m10, m01, t.gamma, t.beta, t.alpha)
    }

    /// `m20 m02 - m11^2`; equals one for pure states.
    pub fn purity_product(&self) -> f64 {
        self.m20 * self.m02 - self.m11 * self.m11
    }

    /// Positive variances and the Heisenberg bound `det >= 1 - tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.m20 > 0.0 && self.m02 > 0.0 && self.purity_product() >= 1.0 - tol
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.m10, self.m01, self.m20, self.m11, self.m02]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Second moments `(alpha, beta, gamma) = (m02, m11, m20)` of a pure Gaussian
/// state. All three are stored; the constructor enforces
/// `alpha gamma - beta^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CovarianceTriple {
    pub const COHERENT: Self = Self {
        alpha: 1.0,
        beta: 0.0,
        gamma: 1.0,
    };

    /// Checked constructor; `tol` bounds `|alpha gamma - beta^2 - 1|`.
    pub fn new(alpha: f64, beta: f64, gamma: f64, tol: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
        }
        let defect = alpha * gamma - beta * beta - 1.0;
        if !(defect.abs() <= tol) {
            return Err(Error::Domain(format!(
                "triple ({alpha}, {beta}, {gamma}) is not pure: alpha*gamma - beta^2 - 1 = {defect:e}"
            )));
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// Pure triple from `(beta, gamma)`, with `alpha = (1 + beta^2) / gamma`.
    pub fn from_beta_gamma(beta: f64, gamma: f64) -> Result<Self> {
        let alpha = alpha_from(beta, gamma)?;
        Ok(Self { alpha, beta, gamma })
    }

    pub fn purity_defect(&self) -> f64 {
        self.alpha * self.gamma - self.beta * self.beta - 1.0
    }
}

/// Phase-quadrature variance of the pure state with covariance `beta` and
/// amplitude variance `gamma`.
pub fn alpha_from(beta: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    Ok((1.0 + beta * beta) / gamma)
}

/// Overlap of a pure Gaussian state with a coherent state of the same mean.
pub fn overlap_with_coherent(t: &CovarianceTriple) -> f64 {
    2.0 / (2.0 + t.alpha + t.gamma).sqrt()
}

/// Overlap of two Gaussian states with equal means.
pub fn overlap(a: &CovarianceTriple, b: &CovarianceTriple) -> f64 {
    let s = a.beta + b.beta;
    2.0 / ((a.alpha + b.alpha) * (a.gamma + b.gamma) - s * s).sqrt()
}
