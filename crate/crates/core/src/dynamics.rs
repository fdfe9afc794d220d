//! Unconditioned moment evolution of the linearized laser master equation.
//!
//! The Gaussian moments obey the linear system
//!
//! ```text
//! m10' = -m10
//! m01' = -chi m10
//! m20' = -2 m20 + 2
//! m11' = -m11 - chi m20
//! m02' = -2 chi m11 + 2 + nu
//! ```
//!
//! with time in units of the inverse decay rate. Phases are measured in the
//! frame co-rotating with the mean-field frequency shift; that shift is not
//! modelled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{LaserParams, MomentState};

/// Default fixed step for [`evolve_ode`].
pub const DEFAULT_STEP: f64 = 1e-3;

/// Default ratio below which an asymptotic `<<` condition counts as met.
pub const DEFAULT_COHERENCE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MomentState>,
}

impl MomentTrajectory {
    pub fn last(&self) -> &MomentState {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Checks that a grid starts at zero and is strictly increasing.
pub fn validate_grid(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::InvalidGrid("empty time grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidGrid(format!("grid must start at 0, got {t0}")))
        }
        _ => {}
    }
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "times must be strictly increasing: {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Uniform grid `0, dt, 2dt, ..., n dt`.
pub fn uniform_grid(dt: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * dt).collect()
}

/// Right-hand side of the unconditioned moment equations.
pub fn moment_rhs(s: &MomentState, p: &LaserParams) -> MomentState {
    MomentState {
        m10: -s.m10,
        m01: -p.chi * s.m10,
        m20: -2.0 * s.m20 + 2.0,
        m11: -s.m11 - p.chi * s.m20,
        m02: -2.0 * p.chi * s.m11 + 2.0 + p.nu,
    }
}

/// Closed-form solution of the moment equations at time `t`.
pub fn evolve_analytic(init: &MomentState, p: &LaserParams, t: f64) -> MomentState {
    assert!(t >= 0.0, "evolve_analytic needs t >= 0, got {t}");
    let chi = p.chi;
    let w = (-t).exp();
    let w2 = w * w;
    // 1 - w and 1 - w^2 lose precision for small t
    let one_m_w = -(-t).exp_m1();
    let one_m_w2 = -(-2.0 * t).exp_m1();
    let m20_0 = init.m20;

    MomentState {
        m10: init.m10 * w,
        m01: init.m01 - chi * init.m10 * one_m_w,
        m20: m20_0 * w2 + one_m_w2,
        m11: init.m11 * w - chi * one_m_w * (one_m_w + m20_0 * w),
        m02: init.m02 + (2.0 + p.nu) * t - 2.0 * chi * init.m11 * one_m_w
            + 2.0 * chi * chi * (t + (m20_0 - 2.0) * one_m_w + (1.0 - m20_0) * one_m_w2 / 2.0),
    }
}

fn axpy(a: f64, x: &MomentState, y: &MomentState) -> MomentState {
    MomentState::from_array(std::array::from_fn(|i| {
        y.as_array()[i] + a * x.as_array()[i]
    }))
}

fn rk4_step(s: &MomentState, p: &LaserParams, h: f64) -> MomentState {
    let k1 = moment_rhs(s, p);
    let k2 = moment_rhs(&axpy(h / 2.0, &k1, s), p);
    let k3 = moment_rhs(&axpy(h / 2.0, &k2, s), p);
    let k4 = moment_rhs(&axpy(h, &k3, s), p);
    let (a1, a2, a3, a4) = (k1.as_array(), k2.as_array(), k3.as_array(), k4.as_array());
    let s0 = s.as_array();
    MomentState::from_array(std::array::from_fn(|i| {
        s0[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])
    }))
}

/// Classical fourth-order Runge-Kutta with fixed step at most `h`. Each grid
/// interval is split into the smallest number of equal sub-steps not longer
/// than `h`, so output lands exactly on the grid.
pub fn evolve_ode(
    init: &MomentState,
    p: &LaserParams,
    times: &[f64],
    h: f64,
) -> Result<MomentTrajectory> {
    validate_grid(times)?;
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let mut states = Vec::with_capacity(times.len());
    states.push(*init);
    let mut s = *init;
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let n = (span / h).ceil().max(1.0) as usize;
        let sub = span / n as f64;
        for k in 0..n {
            s = rk4_step(&s, p, sub);
            if !s.is_finite() {
                return Err(Error::Integration {
                    t: w[0] + (k + 1) as f64 * sub,
                    reason: "non-finite moment".into(),
                });
            }
        }
        states.push(s);
    }
    Ok(MomentTrajectory {
        times: times.to_vec(),
        states,
    })
}

/// Phase variance `<phi^2> = m02 / (4 mu)` after one inter-boson time
/// `t = 1/mu`, starting from a coherent state, to leading order in `1/mu`.
/// Meaningful for `mu >= 1`.
pub fn phase_variance_at_interatomic_time(p: &LaserParams) -> f64 {
    let inv = 1.0 / p.mu;
    (1.0 + (2.0 + p.nu) * inv + p.chi * p.chi * inv * inv) / (4.0 * p.mu)
}

/// Ratios behind the three laser-coherence conditions `mu >> 1`,
/// `chi << mu^(3/2)` and `nu << mu^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    /// `1 / mu <= threshold`.
    pub number_defined: bool,
    /// `|chi| / mu^(3/2)`.
    pub chi_margin: f64,
    /// `nu / mu^2`.
    pub nu_margin: f64,
    pub threshold: f64,
    /// All three ratios are at or below the threshold.
    pub coherent: bool,
}

pub fn coherence_report(p: &LaserParams, threshold: f64) -> CoherenceReport {
    let number_defined = 1.0 / p.mu <= threshold;
    let chi_margin = p.chi.abs() / p.mu.powf(1.5);
    let nu_margin = p.nu / (p.mu * p.mu);
    CoherenceReport {
        number_defined,
        chi_margin,
        nu_margin,
        threshold,
        coherent: number_defined && chi_margin <= threshold && nu_margin <= threshold,
    }
}

/// Phase-quadrature spread after free shearing `y(t) = y(0) - chi t x(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrowth {
    /// Conditional variance `1/V + (chi t)^2 V` of one ensemble member.
    pub intrinsic: f64,
    /// Variance over the whole ensemble, `1/V + (chi t)^2`.
    pub total_unconditional: f64,
    /// `4 mu`: variance at which the phase is lost.
    pub loss_threshold: f64,
}

/// `v` is the amplitude variance of the initial minimum-uncertainty state;
/// the ensemble spreads the means with variance `1 - v`.
pub fn conditional_phase_growth(v: f64, chi: f64, t: f64, mu: f64) -> Result<PhaseGrowth> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain(format!("V must lie in (0, 1], got {v}")));
    }
    let ct2 = (chi * t).powi(2);
    Ok(PhaseGrowth {
        intrinsic: 1.0 / v + ct2 * v,
        total_unconditional: 1.0 / v + ct2,
        loss_threshold: 4.0 * mu,
    })
}

/// Largest `chi` for which members of an ensemble with amplitude variance
/// `v` keep their phase over `t = 1/mu`, from `4 mu = 1/V + chi^2 V / mu^2`.
/// `None` when `1/V >= 4 mu`.
pub fn conditional_chi_limit(mu: f64, v: f64) -> Option<f64> {
    let inv = 1.0 / v;
    let rest = 4.0 * mu - inv;
    (rest > 0.0).then(|| mu * (inv * rest).sqrt())
}
