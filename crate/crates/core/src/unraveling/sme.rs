//! Conditioned moment dynamics of the linearized stochastic master equation.
//!
//! Under a continuous Markovian unraveling with correlation matrix `u`, a
//! Gaussian state stays Gaussian. Its means follow It\u{f4} SDEs driven by the
//! three complex noises; its second moments follow deterministic Riccati-type
//! equations that depend on `u` but not on the noise realization.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::matrix::UnravelingMatrix;
use super::noise::{trajectory_rng, NoiseSource};
use crate::dynamics::evolve_analytic;
use crate::error::{Error, Result};
use crate::gaussian::{LaserParams, MomentState, PURITY_TOL_NUMERIC};

/// Second moments `(m20, m11, m02)`.
pub type SecondMoments = [f64; 3];

/// Trajectory count below which [`ensemble_average_check`] flags its
/// statistics as insufficient.
pub const MIN_ENSEMBLE: usize = 30;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Noise coefficients `a_k` such that `dm10 = -m10 dt + Re sum_k dW_k^* a_k`,
/// and `b_k` for `m01` likewise.
pub fn noise_coefficients(
    m20: f64,
    m11: f64,
    m02: f64,
    nu: f64,
) -> ([Complex64; 3], [Complex64; 3]) {
    let s = (1.0 + nu).sqrt();
    let a = [c(m20 - 1.0) + I * m11, c(s * m20), c(m11) + I];
    let b = [I * m02 - I + m11, (c(m11) - I) * s, c(m02)];
    (a, b)
}

/// Deterministic right-hand sides `(dm20/dt, dm11/dt, dm02/dt)`.
pub fn second_moment_drift(
    s: &SecondMoments,
    u: &UnravelingMatrix,
    p: &LaserParams,
) -> SecondMoments {
    let [m20, m11, m02] = *s;
    let (chi, nu) = (p.chi, p.nu);
    let sq = (1.0 + nu).sqrt();
    let uc = |i: usize, j: usize| u.entry(i, j).conj();

    let a0 = c(m20 - 1.0) + I * m11;
    let a2 = c(m11) + I;
    let b0 = I * m02 - I + m11;
    let b1 = c(m11) - I;

    let d20 = {
        let bracket = c((m20 - 1.0).powi(2) + m11 * m11 + (1.0 + nu) * m20 * m20 + m11 * m11 + 1.0)
            + uc(0, 0) * a0 * a0
            + uc(1, 1) * (1.0 + nu) * m20 * m20
            + uc(2, 2) * a2 * a2
            + uc(0, 1) * 2.0 * sq * a0 * m20
            + uc(0, 2) * 2.0 * a0 * a2
            + uc(1, 2) * 2.0 * sq * a2 * m20;
        2.0 - 2.0 * m20 - bracket.re / 2.0
    };

    let d02 = {
        let bracket = c((m02 - 1.0).powi(2) + m11 * m11 + (1.0 + nu) * (m11 * m11 + 1.0) + m02 * m02)
            + uc(0, 0) * b0 * b0
            + uc(1, 1) * (1.0 + nu) * b1 * b1
            + uc(2, 2) * m02 * m02
            + uc(0, 1) * 2.0 * sq * b0 * b1
            + uc(0, 2) * 2.0 * b0 * m02
            + uc(1, 2) * 2.0 * sq * b1 * m02;
        -2.0 * chi * m11 + 2.0 + nu - bracket.re / 2.0
    };

    let d11 = {
        let bracket = a0 * (-I * m02 + I + m11)
            + (1.0 + nu) * b1 * m20
            + m02 * b1
            + uc(0, 0) * a0 * b0
            + uc(1, 1) * (1.0 + nu) * m20 * b1
            + uc(2, 2) * m02 * a2
            + uc(0, 1) * sq * (a0 * b1 + m20 * b0)
            + uc(1, 2) * sq * (m20 * m02 + a2 * b1)
            + uc(0, 2) * (b0 * a2 + a0 * m02);
        -m11 - chi * m20 - bracket.re / 2.0
    };

    [d20, d11, d02]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedTrajectory {
    pub times: Vec<f64>,
    /// `(m10, m01)` at each saved time.
    pub first_moments: Vec<[f64; 2]>,
    /// `(m20, m11, m02)` at each saved time.
    pub second_moments: Vec<SecondMoments>,
    pub u: UnravelingMatrix,
    pub params: LaserParams,
    pub seed: u64,
}

impl ConditionedTrajectory {
    pub fn state(&self, k: usize) -> MomentState {
        let [m10, m01] = self.first_moments[k];
        let [m20, m11, m02] = self.second_moments[k];
        MomentState::new(m10, m01, m20, m11, m02)
    }

    pub fn final_state(&self) -> MomentState {
        self.state(self.times.len() - 1)
    }

    /// CSV with header `t,m10,m01,m20,m11,m02`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,m10,m01,m20,m11,m02\n");
        for (k, t) in self.times.iter().enumerate() {
            let [m10, m01] = self.first_moments[k];
            let [m20, m11, m02] = self.second_moments[k];
            out.push_str(&format!("{t},{m10},{m01},{m20},{m11},{m02}\n"));
        }
        out
    }
}

/// Run parameters of [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationSpec {
    pub dt: f64,
    pub n_steps: usize,
    /// Keep every `save_every`-th step (the initial and final states are
    /// always kept).
    pub save_every: usize,
}

impl SimulationSpec {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            save_every: 1,
        }
    }

    pub fn saving_every(mut self, k: usize) -> Self {
        self.save_every = k.max(1);
        self
    }
}

fn check_inputs(init: &MomentState, spec: &SimulationSpec) -> Result<()> {
    if !(spec.dt > 0.0) || !spec.dt.is_finite() {
        return Err(Error::Domain(format!("dt must be positive, got {}", spec.dt)));
    }
    if !init.is_physical(PURITY_TOL_NUMERIC) {
        return Err(Error::Domain(format!(
            "initial state is not physical: m20 m02 - m11^2 = {}",
            init.purity_product()
        )));
    }
    Ok(())
}

/// Euler-Maruyama integration of one conditioned trajectory. Trajectory
/// `index` of a batch seeded by `seed` draws from its own RNG stream.
pub fn simulate_indexed(
    u: &UnravelingMatrix,
    p: &LaserParams,
    init: &MomentState,
    spec: &SimulationSpec,
    seed: u64,
    index: u64,
) -> Result<ConditionedTrajectory> {
    check_inputs(init, spec)?;
    let noise = NoiseSource::new(u, spec.dt)?;
    let mut rng = trajectory_rng(seed, index);
    let dt = spec.dt;

    let cap = spec.n_steps / spec.save_every + 2;
    let mut times = Vec::with_capacity(cap);
    let mut first = Vec::with_capacity(cap);
    let mut second = Vec::with_capacity(cap);

    let mut mean = [init.m10, init.m01];
    let mut var: SecondMoments = [init.m20, init.m11, init.m02];
    times.push(0.0);
    first.push(mean);
    second.push(var);

    for step in 1..=spec.n_steps {
        let dw = noise.sample(&mut rng);
        let (a, b) = noise_coefficients(var[0], var[1], var[2], p.nu);
        let mut kick = [0.0; 2];
        for k in 0..3 {
            let w = dw[k].conj();
            kick[0] += (w * a[k]).re;
            kick[1] += (w * b[k]).re;
        }
        let drift = second_moment_drift(&var, u, p);
        let next_mean = [
            mean[0] - mean[0] * dt + kick[0],
            mean[1] - p.chi * mean[0] * dt + kick[1],
        ];
        for (v, d) in var.iter_mut().zip(drift) {
            *v += d * dt;
        }
        mean = next_mean;

        let t = step as f64 * dt;
        if !(mean.iter().chain(var.iter()).all(|v| v.is_finite())) {
            return Err(Error::Unstable { step, t, dt });
        }
        if step % spec.save_every == 0 || step == spec.n_steps {
            times.push(t);
            first.push(mean);
            second.push(var);
        }
    }

    Ok(ConditionedTrajectory {
        times,
        first_moments: first,
        second_moments: second,
        u: *u,
        params: *p,
        seed,
    })
}

pub fn simulate(
    u: &UnravelingMatrix,
    p: &LaserParams,
    init: &MomentState,
    spec: &SimulationSpec,
    seed: u64,
) -> Result<ConditionedTrajectory> {
    simulate_indexed(u, p, init, spec, seed, 0)
}

/// Final states of `n_traj` independent trajectories, in index order. Runs in
/// parallel; the result does not depend on scheduling.
pub fn simulate_batch(
    u: &UnravelingMatrix,
    p: &LaserParams,
    init: &MomentState,
    spec: &SimulationSpec,
    n_traj: usize,
    seed: u64,
) -> Result<Vec<MomentState>> {
    let final_only = SimulationSpec {
        save_every: spec.n_steps.max(1),
        ..*spec
    };
    (0..n_traj as u64)
        .into_par_iter()
        .map(|i| simulate_indexed(u, p, init, &final_only, seed, i).map(|t| t.final_state()))
        .collect()
}

/// One comparison of a Monte-Carlo estimate with its analytic value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentComparison {
    pub estimate: f64,
    pub standard_error: f64,
    pub analytic: f64,
}

impl MomentComparison {
    /// `|estimate - analytic|` in standard errors; zero-error estimates are
    /// judged against `1e-9` relative slack.
    pub fn z_score(&self) -> f64 {
        let diff = (self.estimate - self.analytic).abs();
        if self.standard_error > 0.0 {
            diff / self.standard_error
        } else if diff <= 1e-9 * (1.0 + self.analytic.abs()) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub n_traj: usize,
    pub t_end: f64,
    pub sufficient_statistics: bool,
    /// Ensemble means of `m10`, `m01`.
    pub m10: MomentComparison,
    pub m01: MomentComparison,
    /// Total second moments: conditioned variance plus variance of the
    /// conditioned means.
    pub m20: MomentComparison,
    pub m11: MomentComparison,
    pub m02: MomentComparison,
}

impl EnsembleReport {
    pub fn comparisons(&self) -> [(&'static str, MomentComparison); 5] {
        [
            ("m10", self.m10),
            ("m01", self.m01),
            ("m20", self.m20),
            ("m11", self.m11),
            ("m02", self.m02),
        ]
    }

    pub fn max_z(&self) -> f64 {
        self.comparisons()
            .iter()
            .map(|(_, c)| c.z_score())
            .fold(0.0, f64::max)
    }

    /// Sufficient statistics and every moment within `z` standard errors.
    pub fn consistent_within(&self, z: f64) -> bool {
        self.sufficient_statistics && self.max_z() <= z
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Averages `n_traj` conditioned trajectories and compares the result with
/// the unconditioned analytic moments at the final time.
pub fn ensemble_average_check(
    u: &UnravelingMatrix,
    p: &LaserParams,
    init: &MomentState,
    spec: &SimulationSpec,
    n_traj: usize,
    seed: u64,
) -> Result<EnsembleReport> {
    if n_traj == 0 {
        return Err(Error::Domain("need at least one trajectory".into()));
    }
    let finals = simulate_batch(u, p, init, spec, n_traj, seed)?;
    let t_end = spec.n_steps as f64 * spec.dt;
    let exact = evolve_analytic(init, p, t_end);

    let xs: Vec<f64> = finals.iter().map(|s| s.m10).collect();
    let ys: Vec<f64> = finals.iter().map(|s| s.m01).collect();
    let (mx, sx) = mean_and_se(&xs);
    let (my, sy) = mean_and_se(&ys);

    // The second moments are identical across trajectories; the spread of the
    // means adds to them. Products about the sample mean give the spread.
    let cond = finals[0];
    let spread = |f: &dyn Fn(&MomentState) -> f64| mean_and_se(&finals.iter().map(f).collect::<Vec<_>>());
    let (vxx, sxx) = spread(&|s| (s.m10 - mx).powi(2));
    let (vxy, sxy) = spread(&|s| (s.m10 - mx) * (s.m01 - my));
    let (vyy, syy) = spread(&|s| (s.m01 - my).powi(2));

    let cmp = |estimate, standard_error, analytic| MomentComparison {
        estimate,
        standard_error,
        analytic,
    };
    Ok(EnsembleReport {
        n_traj,
        t_end,
        sufficient_statistics: n_traj >= MIN_ENSEMBLE,
        m10: cmp(mx, sx, exact.m10),
        m01: cmp(my, sy, exact.m01),
        m20: cmp(cond.m20 + vxx, sxx, exact.m20),
        m11: cmp(cond.m11 + vxy, sxy, exact.m11),
        m02: cmp(cond.m02 + vyy, syy, exact.m02),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(chi: f64, nu: f64) -> LaserParams {
        LaserParams::linearized(chi, nu).unwrap()
    }

    /// Drift rebuilt from the noise coefficients: the conditioned variance
    /// loses exactly the variance of the innovation of the means,
    /// `E[Re X Re Y] = (Re sum u*_jk a_j b_k + Re sum a_k conj(b_k)) / 2`.
    #[allow(clippy::needless_range_loop)]
    fn drift_from_coefficients(s: &SecondMoments, u: &UnravelingMatrix, p: &LaserParams) -> SecondMoments {
        let (a, b) = noise_coefficients(s[0], s[1], s[2], p.nu);
        let cov = |x: &[Complex64; 3], y: &[Complex64; 3]| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                acc += x[j] * y[j].conj();
                for k in 0..3 {
                    acc += u.entry(j, k).conj() * x[j] * y[k];
                }
            }
            acc.re / 2.0
        };
        [
            2.0 - 2.0 * s[0] - cov(&a, &a),
            -s[1] - p.chi * s[0] - cov(&a, &b),
            -2.0 * p.chi * s[1] + 2.0 + p.nu - cov(&b, &b),
        ]
    }

    #[test]
    fn qsd_fixed_point_has_zero_drift() {
        let s5 = 5f64.sqrt();
        let s = [(s5 - 1.0) / 2.0, 0.0, (s5 + 1.0) / 2.0];
        let d = second_moment_drift(&s, &UnravelingMatrix::ZERO, &lp(0.0, 0.0));
        assert!(d.iter().all(|v| v.abs() <= 1e-10), "{d:?}");
    }

    #[test]
    fn coherent_state_is_not_qsd_fixed_point() {
        let d = second_moment_drift(&[1.0, 0.0, 1.0], &UnravelingMatrix::ZERO, &lp(0.0, 0.0));
        // the innovation variance is 2 in both quadratures
        assert_eq!(d, [-1.0, 0.0, 1.0]);
    }

    #[test]
    fn coherent_state_held_by_y_homodyne_unraveling() {
        // at chi = 0 the coherent state is a fixed point of this unraveling
        let u = UnravelingMatrix::real_diagonal([0.0, -1.0, 1.0]);
        let d = second_moment_drift(&[1.0, 0.0, 1.0], &u, &lp(0.0, 0.0));
        assert!(d.iter().all(|v| v.abs() < 1e-12), "{d:?}");
    }

    proptest! {
        #[test]
        fn drift_matches_innovation_variance(
            m20 in 0.05f64..3.0, m11 in -3.0f64..3.0, m02 in 0.05f64..10.0,
            chi in -20.0f64..20.0, nu in 0.0f64..20.0,
            x in proptest::array::uniform12(-1.0f64..1.0),
        ) {
            let u = UnravelingMatrix::from_params(&x);
            let p = lp(chi, nu);
            let s = [m20, m11, m02];
            let a = second_moment_drift(&s, &u, &p);
            let b = drift_from_coefficients(&s, &u, &p);
            for k in 0..3 {
                prop_assert!((a[k] - b[k]).abs() <= 1e-9 * (1.0 + b[k].abs()), "{:?} vs {:?}", a, b);
            }
        }
    }

    #[test]
    fn second_moments_do_not_depend_on_seed() {
        let u = UnravelingMatrix::real_diagonal([0.3, -0.2, 0.1]);
        let p = lp(2.0, 1.0);
        let init = MomentState::coherent(0.5, 0.0);
        let spec = SimulationSpec::new(1e-3, 2000);
        let a = simulate(&u, &p, &init, &spec, 1).unwrap();
        let b = simulate(&u, &p, &init, &spec, 2).unwrap();
        assert_eq!(a.second_moments, b.second_moments);
        assert_ne!(a.first_moments, b.first_moments);
    }

    #[test]
    fn deterministic_given_seed() {
        let u = UnravelingMatrix::ZERO;
        let p = lp(3.0, 5.0);
        let init = MomentState::coherent(1.0, 0.0);
        let spec = SimulationSpec::new(1e-3, 500).saving_every(7);
        let a = simulate(&u, &p, &init, &spec, 9).unwrap();
        let b = simulate(&u, &p, &init, &spec, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        // 0, 7, ..., 497, 500
        assert_eq!(a.times.len(), 500 / 7 + 2);
        assert_eq!(*a.times.last().unwrap(), 0.5);
    }

    #[test]
    fn csv_layout() {
        let spec = SimulationSpec::new(0.01, 3);
        let tr = simulate(
            &UnravelingMatrix::ZERO,
            &lp(0.0, 0.0),
            &MomentState::coherent(0.0, 0.0),
            &spec,
            0,
        )
        .unwrap();
        let csv = tr.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,m10,m01,m20,m11,m02");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,0,0,1,0,1"));
    }

    #[test]
    fn qsd_fixed_point_stays_put() {
        let s5 = 5f64.sqrt();
        let init = MomentState::new(0.0, 0.0, (s5 - 1.0) / 2.0, 0.0, (s5 + 1.0) / 2.0);
        let tr = simulate(
            &UnravelingMatrix::ZERO,
            &lp(0.0, 0.0),
            &init,
            &SimulationSpec::new(1e-3, 5000),
            4,
        )
        .unwrap();
        for s in &tr.second_moments {
            assert!((s[0] - init.m20).abs() <= 1e-8);
            assert!(s[1].abs() <= 1e-8);
            assert!((s[2] - init.m02).abs() <= 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = lp(0.0, 0.0);
        let spec = SimulationSpec::new(1e-3, 10);
        let mixedish = MomentState::new(0.0, 0.0, 0.5, 0.0, 0.5);
        assert!(matches!(
            simulate(&UnravelingMatrix::ZERO, &p, &mixedish, &spec, 0),
            Err(Error::Domain(_))
        ));
        let bad_u = UnravelingMatrix::real_diagonal([2.0, 0.0, 0.0]);
        assert!(matches!(
            simulate(&bad_u, &p, &MomentState::coherent(0.0, 0.0), &spec, 0),
            Err(Error::ConstraintViolation { .. })
        ));
        assert!(simulate(
            &UnravelingMatrix::ZERO,
            &p,
            &MomentState::coherent(0.0, 0.0),
            &SimulationSpec::new(0.0, 10),
            0
        )
        .is_err());
    }

    #[test]
    fn blowup_reported_as_unstable() {
        let p = lp(0.0, 0.0);
        let init = MomentState::new(0.0, 0.0, 1.0, 0.0, 1.0);
        let err = simulate(&UnravelingMatrix::ZERO, &p, &init, &SimulationSpec::new(50.0, 400), 0)
            .unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }), "{err:?}");
    }

    #[test]
    fn single_trajectory_flags_insufficient_statistics() {
        let rep = ensemble_average_check(
            &UnravelingMatrix::ZERO,
            &lp(0.0, 0.0),
            &MomentState::coherent(1.0, 0.0),
            &SimulationSpec::new(1e-2, 10),
            1,
            3,
        )
        .unwrap();
        assert!(!rep.sufficient_statistics);
        assert!(!rep.consistent_within(3.0));
    }

    #[test]
    fn batch_matches_individual_runs() {
        let u = UnravelingMatrix::real_diagonal([0.2, 0.0, -0.4]);
        let p = lp(1.0, 0.5);
        let init = MomentState::coherent(0.2, 0.1);
        let spec = SimulationSpec::new(1e-2, 50);
        let batch = simulate_batch(&u, &p, &init, &spec, 5, 77).unwrap();
        for (i, s) in batch.iter().enumerate() {
            let single = simulate_indexed(&u, &p, &init, &spec, 77, i as u64).unwrap();
            assert_eq!(single.final_state(), *s);
        }
    }
}
