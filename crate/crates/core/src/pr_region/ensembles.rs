//! Distinguished stationary ensembles: closest-to-coherent and quantum state
//! diffusion.

use serde::Serialize;

use super::closed_form::{feasible_beta_interval, GAMMA_MIN};
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceTriple, LaserParams};
use crate::optimize::golden_section;
use crate::unraveling::{second_moment_drift, UnravelingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnsembleKind {
    #[serde(rename = "CC")]
    ClosestToCoherent,
    #[serde(rename = "QSD")]
    Qsd,
    #[serde(rename = "output-only")]
    OutputOnly,
}

/// Flat record for export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleRecord {
    pub chi: f64,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kind: EnsembleKind,
}

impl EnsembleRecord {
    pub fn new(p: &LaserParams, t: &CovarianceTriple, kind: EnsembleKind) -> Self {
        Self {
            chi: p.chi,
            nu: p.nu,
            alpha: t.alpha,
            beta: t.beta,
            gamma: t.gamma,
            kind,
        }
    }
}

/// `alpha + gamma` on the best `beta` of the realizable slice at `gamma`.
fn cc_objective(gamma: f64, p: &LaserParams) -> (f64, f64) {
    match feasible_beta_interval(gamma, p) {
        Some((lo, hi)) => {
            let beta = 0.0f64.clamp(lo, hi);
            (gamma + (1.0 + beta * beta) / gamma, beta)
        }
        None => (f64::INFINITY, f64::NAN),
    }
}

const CC_GRID: usize = 400;

/// The realizable ensemble of maximal overlap with a coherent state, i.e.
/// minimal `alpha + gamma`.
///
/// For fixed `gamma` the best `beta` is the realizable one closest to zero.
/// The outer search over `gamma` in `[GAMMA_MIN, 1]` scans a log grid, then
/// refines the best bracket by golden section.
pub fn cc_ensemble(p: &LaserParams) -> CovarianceTriple {
    if p.chi == 0.0 {
        return CovarianceTriple::COHERENT;
    }
    let (lmin, lmax) = (GAMMA_MIN.ln(), 0.0f64);
    let grid: Vec<f64> = (0..=CC_GRID)
        .map(|k| (lmin + (lmax - lmin) * k as f64 / CC_GRID as f64).exp())
        .collect();
    let k = (0..grid.len())
        .min_by(|&i, &j| cc_objective(grid[i], p).0.total_cmp(&cc_objective(grid[j], p).0))
        .expect("grid is nonempty");
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(CC_GRID)];
    let (g, f) = golden_section(|g| cc_objective(g, p).0, lo, hi, 1e-14);
    let g = if f <= cc_objective(grid[k], p).0 { g } else { grid[k] };
    let beta = cc_objective(g, p).1;
    CovarianceTriple {
        alpha: (1.0 + beta * beta) / g,
        beta,
        gamma: g,
    }
}

/// Large-`chi` asymptotes `(alpha, beta, gamma)` of [`cc_ensemble`].
pub fn cc_asymptotic(chi: f64) -> (f64, f64, f64) {
    let s = chi.abs().sqrt();
    (
        2.0 / 3f64.powf(0.75) * s,
        -chi.signum() / 3f64.sqrt(),
        2.0 / 3f64.powf(0.25) / s,
    )
}

/// The stationary ensemble of quantum state diffusion (`u = 0`), in closed
/// form.
///
/// With `M = 1 + nu/2`, `F = 4 sqrt((M + 1/4)^2 + chi^2)`,
/// `G = 2 (4M^2 + chi^2) F` and `E = (24M - 2) chi^2 + 32M^3 + 8M^2`:
///
/// `beta = [(4M - 1 - F) chi + sqrt(G - E)] / (4 (chi^2 + M))`,
/// `alpha = [1 + sqrt(1 - 8 chi beta + 4M(1 - beta^2))] / 2`,
/// `gamma = [-1 + sqrt(1 + 4M(1 - beta^2))] / (2M)`.
///
/// `F` and `G - E` are evaluated through `s = sqrt(1 + x) - 1` with
/// `x = chi^2 / (M + 1/4)^2`, which makes `G - E` vanish exactly at
/// `chi = 0` instead of up to rounding. The formulas hold for `chi >= 0`;
/// negative `chi` follows from the mirror symmetry `(chi, beta) -> (-chi, -beta)`.
pub fn qsd_ensemble(p: &LaserParams) -> Result<CovarianceTriple> {
    let (chi, nu) = (p.chi.abs(), p.nu);
    let m = 1.0 + nu / 2.0;
    let q = m + 0.25;
    let x = (chi / q).powi(2);
    let s = x / ((1.0 + x).sqrt() + 1.0);
    let four_m1 = 4.0 * m + 1.0;
    let g_minus_e = chi * chi * (4.0 - 16.0 * m) + 2.0 * (4.0 * m * m + chi * chi) * four_m1 * s;
    let lead = -2.0 - four_m1 * s; // -1 + 4M - F
    let root = |v: f64, what: &str| -> Result<f64> {
        if v < 0.0 {
            if v > -1e-12 * (1.0 + chi * chi + m * m) {
                return Ok(0.0);
            }
            return Err(Error::Internal(format!("negative radicand {v:e} in {what}")));
        }
        Ok(v.sqrt())
    };
    let beta = (lead * chi + root(g_minus_e, "G - E")?) / (4.0 * (chi * chi + m));
    let one_m_b2 = 1.0 - beta * beta;
    let alpha = (1.0 + root(1.0 - 8.0 * chi * beta + 4.0 * m * one_m_b2, "alpha")?) / 2.0;
    // (-1 + sqrt(1 + y)) / (2M) rewritten as 2 (1 - beta^2) / (1 + sqrt(1 + y))
    let gamma = 2.0 * one_m_b2 / (1.0 + root(1.0 + 4.0 * m * one_m_b2, "gamma")?);
    Ok(CovarianceTriple {
        alpha,
        beta: if p.chi < 0.0 { -beta } else { beta },
        gamma,
    })
}

/// Large-`chi` asymptotes `(alpha, beta, gamma)` of [`qsd_ensemble`].
pub fn qsd_asymptotic_chi(chi: f64) -> (f64, f64, f64) {
    let s = chi.abs().sqrt();
    (2f64.sqrt() * s, -chi.signum(), 2f64.sqrt() / s)
}

/// Large-`nu` asymptotes at `chi = 0`.
pub fn qsd_asymptotic_nu(nu: f64) -> (f64, f64, f64) {
    let s = nu.sqrt();
    (s / 2f64.sqrt(), 0.0, 2f64.sqrt() / s)
}

/// Largest absolute drift of the second moments at `t` under `u = 0`.
pub fn qsd_drift_residual(t: &CovarianceTriple, p: &LaserParams) -> f64 {
    second_moment_drift(&[t.gamma, t.beta, t.alpha], &UnravelingMatrix::ZERO, p)
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// [`qsd_drift_residual`] at [`qsd_ensemble`]: checks the closed form against
/// the conditioned moment equations.
pub fn qsd_fixed_point_check(p: &LaserParams) -> Result<f64> {
    Ok(qsd_drift_residual(&qsd_ensemble(p)?, p))
}
