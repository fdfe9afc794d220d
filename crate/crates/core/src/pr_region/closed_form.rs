use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::LaserParams;

/// Smallest `gamma` ever evaluated; the infinitely squeezed limit itself is
/// excluded.
pub const GAMMA_MIN: f64 = 1e-4;

/// A candidate stationary ensemble `(beta, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PRQuery {
    pub beta: f64,
    pub gamma: f64,
    pub params: LaserParams,
}

impl PRQuery {
    /// `gamma` must lie in `(0, 1]`: the stationary mixture over mean
    /// amplitudes has variance `1 - gamma`, which cannot be negative.
    pub fn new(beta: f64, gamma: f64, params: LaserParams) -> Result<Self> {
        if !beta.is_finite() || !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Domain(format!(
                "need finite beta and gamma in (0, 1], got beta = {beta}, gamma = {gamma}"
            )));
        }
        Ok(Self {
            beta,
            gamma,
            params,
        })
    }

    /// `alpha = (1 + beta^2) / gamma`, the purity-completed phase variance.
    pub fn alpha(&self) -> f64 {
        (1.0 + self.beta * self.beta) / self.gamma
    }
}

/// Left side of the realizability inequality
/// `(2 + nu - 2 chi beta)(2 - 2 gamma) - (beta + chi gamma)^2 >= 0`.
pub fn pr_boundary_expr(beta: f64, gamma: f64, p: &LaserParams) -> f64 {
    let (chi, nu) = (p.chi, p.nu);
    (2.0 + nu - 2.0 * chi * beta) * (2.0 - 2.0 * gamma) - (beta + chi * gamma).powi(2)
}

/// Whether `(beta, gamma)` is a physically realizable stationary ensemble.
pub fn pr_closed_form(q: &PRQuery) -> bool {
    q.gamma > 0.0 && pr_boundary_expr(q.beta, q.gamma, &q.params) >= 0.0
}

/// The realizable `beta` interval at fixed `gamma`, or `None` when the slice
/// is empty (only for `gamma` outside `(0, 1]`).
///
/// As a quadratic in `beta` the inequality reads
/// `-beta^2 - chi (4 - 2 gamma) beta + [(2 + nu)(2 - 2 gamma) - chi^2 gamma^2] >= 0`,
/// with roots `-chi (2 - gamma) +/- sqrt(2 (1 - gamma)(2 + nu + 2 chi^2))`.
pub fn feasible_beta_interval(gamma: f64, p: &LaserParams) -> Option<(f64, f64)> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return None;
    }
    let (chi, nu) = (p.chi, p.nu);
    let center = if chi == 0.0 { 0.0 } else { -chi * (2.0 - gamma) };
    // quarter discriminant, already simplified so that it is exactly zero at
    // gamma = 1
    let disc = 2.0 * (1.0 - gamma) * (2.0 + nu + 2.0 * chi * chi);
    let half = disc.sqrt();
    Some((center - half, center + half))
}
