//! Which stationary Gaussian ensembles `(beta, gamma)` some continuous
//! monitoring scheme can realize, and the distinguished ensembles inside
//! that region.

pub mod closed_form;
pub mod ensembles;
pub mod linear;
pub mod min_norm;
pub mod output_only;

pub use closed_form::{
    feasible_beta_interval, pr_boundary_expr, pr_closed_form, PRQuery, GAMMA_MIN,
};
pub use ensembles::{
    cc_asymptotic, cc_ensemble, qsd_asymptotic_chi, qsd_asymptotic_nu, qsd_drift_residual,
    qsd_ensemble, qsd_fixed_point_check, EnsembleKind, EnsembleRecord,
};
pub use linear::steady_state_system;
pub use min_norm::{solve_min_norm, FeasibilityResult, EPS_FEAS, EPS_LIN};
pub use output_only::{
    output_only_asymptotic, output_only_no_self_energy, output_only_steady_state, OutputOnlyState,
};

use crate::gaussian::LaserParams;

/// One row of the region export.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RegionSlice {
    pub gamma: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
}

/// Realizable `beta` intervals at `n` evenly spaced `gamma` in
/// `[GAMMA_MIN, 1]`.
pub fn region_slices(p: &LaserParams, n: usize) -> Vec<RegionSlice> {
    let n = n.max(2);
    (0..n)
        .filter_map(|k| {
            let gamma = GAMMA_MIN + (1.0 - GAMMA_MIN) * k as f64 / (n - 1) as f64;
            feasible_beta_interval(gamma, p).map(|(beta_lo, beta_hi)| RegionSlice {
                gamma,
                beta_lo,
                beta_hi,
            })
        })
        .collect()
}

/// CSV with header `gamma,beta_lo,beta_hi`.
pub fn region_csv(slices: &[RegionSlice]) -> String {
    let mut out = String::from("gamma,beta_lo,beta_hi\n");
    for s in slices {
        out.push_str(&format!("{},{},{}\n", s.gamma, s.beta_lo, s.beta_hi));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_export() {
        let p = LaserParams::linearized(4.0, 0.0).unwrap();
        let slices = region_slices(&p, 11);
        assert_eq!(slices.len(), 11);
        assert_eq!(slices[0].gamma, GAMMA_MIN);
        assert_eq!(slices[10].gamma, 1.0);
        assert_eq!((slices[10].beta_lo, slices[10].beta_hi), (-4.0, -4.0));
        let csv = region_csv(&slices);
        assert!(csv.starts_with("gamma,beta_lo,beta_hi\n0.0001,"));
        assert_eq!(csv.lines().count(), 12);
    }
}
