//! Numerical realizability test: the smallest spectral norm over all
//! unravelings that hold a given ensemble stationary.

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::closed_form::PRQuery;
use super::linear::{row_scales, scaled_residual, steady_state_system};
use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::unraveling::{spectral_norm, UnravelingMatrix};

/// Slack on `min_norm <= 1` when declaring a point feasible.
pub const EPS_FEAS: f64 = 1e-3;
/// Bound on the scaled residual of the stationarity equations.
pub const EPS_LIN: f64 = 1e-8;

const RESTARTS: usize = 8;
const RANK_TOL: f64 = 1e-7;
const RESTART_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityResult {
    pub feasible: bool,
    pub min_norm: f64,
    pub u_star: UnravelingMatrix,
    /// Largest scaled violation of the three stationarity equations.
    pub residual: f64,
}

/// Particular solution of least Euclidean norm and an orthonormal basis of
/// the null space.
///
/// Purity is conserved by every unraveling, so for pure ensembles the three
/// conditions are linearly dependent and the rank is normally two, giving a
/// ten-dimensional null space. The row space comes from the eigenvectors of
/// the 3 x 3 Gram matrix of the row-normalized system (nalgebra's SVD of the
/// wide matrix is not reliable at exact rank deficiency); the null basis
/// completes it by Gram-Schmidt against the coordinate axes.
fn affine_solution_set(q: &PRQuery) -> Result<(SVector<f64, 12>, Vec<SVector<f64, 12>>)> {
    let (a, b) = steady_state_system(q.beta, q.gamma, &q.params);
    let s = row_scales(&a, &b);
    let an = SMatrix::<f64, 3, 12>::from_fn(|i, j| a[(i, j)] / s[i]);
    let rn = SVector::<f64, 3>::from_fn(|i, _| b[i] / s[i]);
    let eig = (an * an.transpose()).symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let mut live: Vec<usize> = (0..3)
        .filter(|&k| eig.eigenvalues[k] > RANK_TOL * RANK_TOL * lmax)
        .collect();
    live.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    if live.is_empty() {
        return Err(Error::Internal(format!(
            "stationarity system vanishes at beta = {}, gamma = {}",
            q.beta, q.gamma
        )));
    }
    let project_out = |mut w: SVector<f64, 12>, basis: &[SVector<f64, 12>]| {
        for _ in 0..2 {
            for e in basis {
                w -= e * e.dot(&w);
            }
        }
        w
    };
    let mut xp = SVector::<f64, 12>::zeros();
    let mut basis: Vec<SVector<f64, 12>> = Vec::with_capacity(12);
    for &k in &live {
        let uk = eig.eigenvectors.column(k);
        let sigma = eig.eigenvalues[k].sqrt();
        let v = an.transpose() * uk / sigma;
        xp += v * (uk.dot(&rn) / sigma);
        let w = project_out(v, &basis);
        basis.push(w.normalize());
    }
    let row_rank = basis.len();
    while basis.len() < 12 {
        // the axis with the largest component outside the current span
        let (w, len) = (0..12)
            .map(|i| {
                let w = project_out(SVector::<f64, 12>::ith(i, 1.0), &basis);
                let n = w.norm();
                (w, n)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("twelve axes");
        basis.push(w / len);
    }
    Ok((xp, basis.split_off(row_rank)))
}

fn to_matrix(x: &SVector<f64, 12>) -> UnravelingMatrix {
    UnravelingMatrix::from_params(&std::array::from_fn(|k| x[k]))
}

/// Minimizes the spectral norm over the (generically ten-dimensional)
/// family of unravelings that keep `(beta, gamma)` stationary.
///
/// Nelder-Mead from the least-squares solution and seven seeded random
/// starts, then repeated restarts from the incumbent until it stops
/// improving. The norm is convex in the parameters, so local minima are
/// global; the restarts guard against the simplex stalling on a kink.
pub fn solve_min_norm(q: &PRQuery) -> Result<FeasibilityResult> {
    let (xp, null) = affine_solution_set(q)?;
    let dim = null.len();
    let point = |z: &[f64]| -> SVector<f64, 12> {
        null.iter().zip(z).fold(xp, |acc, (e, c)| acc + e * *c)
    };
    let objective = |z: &[f64]| spectral_norm(&to_matrix(&point(z)));

    let opts = NelderMeadOptions {
        initial_step: 0.5,
        max_evals: 6000,
        f_tol: 1e-10,
        x_tol: 1e-8,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let mut best = nelder_mead(objective, &vec![0.0; dim], &opts);
    for _ in 1..RESTARTS {
        let z0: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = nelder_mead(objective, &z0, &opts);
        if m.f < best.f {
            best = m;
        }
    }
    let mut step = 0.1;
    for _ in 0..20 {
        let m = nelder_mead(
            objective,
            &best.x,
            &NelderMeadOptions {
                initial_step: step,
                ..opts
            },
        );
        let gain = best.f - m.f;
        if m.f < best.f {
            best = m;
        }
        if gain <= 1e-9 {
            if step < 1e-3 {
                break;
            }
            step *= 0.1;
        }
    }

    let x = point(&best.x);
    let (a, b) = steady_state_system(q.beta, q.gamma, &q.params);
    let residual = scaled_residual(&a, &b, &x);
    if !(residual <= EPS_LIN) {
        return Err(Error::Internal(format!(
            "stationarity residual {residual:e} exceeds {EPS_LIN:e}"
        )));
    }
    let u_star = to_matrix(&x);
    let min_norm = spectral_norm(&u_star);
    Ok(FeasibilityResult {
        feasible: min_norm <= 1.0 + EPS_FEAS,
        min_norm,
        u_star,
        residual,
    })
}
