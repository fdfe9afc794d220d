//! Conditioned steady state when only the output field is monitored, by
//! homodyne detection of its phase quadrature (`dW dW = -dt`).

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::LaserParams;

const MAX_ITER: usize = 200;
const DAMPING: f64 = 0.5;
const CONTINUATION_START: f64 = 100.0;

/// Right-hand sides `(dm20/dt, dm11/dt, dm02/dt)` under output-only
/// monitoring.
pub fn output_only_rhs(s: &[f64; 3], p: &LaserParams) -> [f64; 3] {
    let [a, b, c] = *s;
    [
        2.0 - 2.0 * a - b * b,
        -b - p.chi * a - (c - 1.0) * b,
        -2.0 * p.chi * b + 2.0 + p.nu - (c - 1.0).powi(2),
    ]
}

pub fn output_only_jacobian(s: &[f64; 3], p: &LaserParams) -> Matrix3<f64> {
    let [_, b, c] = *s;
    Matrix3::new(
        -2.0, -2.0 * b, 0.0,
        -p.chi, -c, -b,
        0.0, -2.0 * p.chi, -2.0 * (c - 1.0),
    )
}

/// The `chi = 0` steady state `(1, 0, 1 + sqrt(2 + nu))`.
pub fn output_only_no_self_energy(nu: f64) -> [f64; 3] {
    [1.0, 0.0, 1.0 + (2.0 + nu).sqrt()]
}

/// Large-`chi` asymptotes `(m20, m11, m02)`.
pub fn output_only_asymptotic(chi: f64) -> [f64; 3] {
    let s = chi.abs().sqrt();
    [2f64.powf(1.25) / s, -chi.signum() * 2f64.sqrt(), 2f64.powf(0.75) * s]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputOnlyState {
    pub m20: f64,
    pub m11: f64,
    pub m02: f64,
    /// Largest real part among the Jacobian eigenvalues.
    pub max_growth_rate: f64,
}

impl OutputOnlyState {
    pub fn as_array(&self) -> [f64; 3] {
        [self.m20, self.m11, self.m02]
    }

    pub fn purity_product(&self) -> f64 {
        self.m20 * self.m02 - self.m11 * self.m11
    }

    pub fn is_stable(&self) -> bool {
        self.max_growth_rate < 0.0
    }
}

fn sup(v: &[f64; 3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn residual_scale(s: &[f64; 3], p: &LaserParams) -> f64 {
    let [a, b, c] = *s;
    1.0 + p.nu + (p.chi * a).abs() + (p.chi * b).abs() + (c - 1.0).powi(2) + b * b
}

/// Damped Newton: full steps, halved until the residual decreases.
fn newton(mut x: [f64; 3], p: &LaserParams) -> Result<[f64; 3]> {
    let mut f = output_only_rhs(&x, p);
    for _ in 0..MAX_ITER {
        if sup(&f) <= 1e-14 * residual_scale(&x, p) {
            return Ok(x);
        }
        let j = output_only_jacobian(&x, p);
        let step = j
            .lu()
            .solve(&-Vector3::from(f))
            .ok_or_else(|| Error::NoConvergence {
                iterations: MAX_ITER,
                residual: sup(&f),
            })?;
        let mut lambda = 1.0;
        loop {
            let trial = [
                x[0] + lambda * step[0],
                x[1] + lambda * step[1],
                x[2] + lambda * step[2],
            ];
            let ft = output_only_rhs(&trial, p);
            if sup(&ft) < sup(&f) || lambda < 1e-12 {
                let done = sup(&ft) >= sup(&f);
                x = trial;
                f = ft;
                if done {
                    // no descent left: accept if already at rounding level
                    if sup(&f) <= 1e-10 * residual_scale(&x, p) {
                        return Ok(x);
                    }
                    return Err(Error::NoConvergence {
                        iterations: MAX_ITER,
                        residual: sup(&f),
                    });
                }
                break;
            }
            lambda *= DAMPING;
        }
    }
    if sup(&f) <= 1e-10 * residual_scale(&x, p) {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            iterations: MAX_ITER,
            residual: sup(&f),
        })
    }
}

/// Steady second moments under output-only monitoring.
///
/// Newton is seeded from the `chi = 0` solution. Above `|chi| = 100` the
/// solve is continued from `chi / 2^k <= 100` in doublings.
pub fn output_only_steady_state(p: &LaserParams) -> Result<OutputOnlyState> {
    let chi = p.chi;
    let mut x = output_only_no_self_energy(p.nu);
    if chi != 0.0 {
        let mut stages = vec![chi];
        while stages.last().unwrap().abs() > CONTINUATION_START {
            let next = stages.last().unwrap() / 2.0;
            stages.push(next);
        }
        for c in stages.into_iter().rev() {
            let q = LaserParams { chi: c, ..*p };
            x = newton(x, &q)?;
        }
    }
    let j = output_only_jacobian(&x, p);
    let max_growth_rate = j
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(OutputOnlyState {
        m20: x[0],
        m11: x[1],
        m02: x[2],
        max_growth_rate,
    })
}
