//! Quantum-jump unraveling on the number-state manifold.
//!
//! Restricted to number-diagonal states, the gain process always adds one
//! boson (total rate `mu`, independent of `n`) and output coupling removes
//! one (rate `n`). Phase diffusion leaves number states unchanged and so
//! produces no events here. The result is a birth-death chain whose
//! stationary law is Poisson(`mu`).

use rand_distr::{Distribution, Exp};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::unraveling::trajectory_rng;

/// Largest tolerated probability that left the truncated space.
pub const MAX_LEAK: f64 = 1e-8;

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    Ok(())
}

/// `(birth, death)` rates out of `|n><n|`.
pub fn rates(n: u64, mu: f64) -> (f64, f64) {
    (mu, n as f64)
}

/// Default truncation `ceil(mu + 12 sqrt(mu))`.
pub fn default_n_max(mu: f64) -> usize {
    (mu + 12.0 * mu.sqrt()).ceil() as usize
}

/// Poisson(`mu`) probabilities for `n = 0..=n_max`, by log-space recursion.
pub fn poisson_pmf(mu: f64, n_max: usize) -> Vec<f64> {
    let lmu = mu.ln();
    let mut lp = -mu;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(lp.exp());
    for n in 1..=n_max {
        lp += lmu - (n as f64).ln();
        out.push(lp.exp());
    }
    out
}

/// `1/2 sum |p - q|`, padding the shorter vector with zeros.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Total variation to Poisson(`mu`), including the Poisson mass beyond the
/// support of `p`.
pub fn total_variation_to_poisson(p: &[f64], mu: f64) -> f64 {
    let q = poisson_pmf(mu, p.len().saturating_sub(1));
    let tail = (1.0 - q.iter().sum::<f64>()).max(0.0);
    total_variation(p, &q) + 0.5 * tail
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpTrajectory {
    pub n0: u64,
    pub t_max: f64,
    pub mu: f64,
    pub seed: u64,
    pub event_times: Vec<f64>,
    /// Occupation just after each event.
    pub occupations: Vec<u64>,
}

impl JumpTrajectory {
    /// Occupation at time `t` (right-continuous).
    pub fn occupation_at(&self, t: f64) -> u64 {
        let k = self.event_times.partition_point(|&s| s <= t);
        if k == 0 {
            self.n0
        } else {
            self.occupations[k - 1]
        }
    }

    /// Piecewise-constant segments `(start, end, n)` clipped to `[t0, t1]`.
    fn segments(&self, t0: f64, t1: f64) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        let starts = std::iter::once(0.0).chain(self.event_times.iter().copied());
        let ends = self
            .event_times
            .iter()
            .copied()
            .chain(std::iter::once(self.t_max));
        let ns = std::iter::once(self.n0).chain(self.occupations.iter().copied());
        starts
            .zip(ends)
            .zip(ns)
            .map(move |((s, e), n)| (s.max(t0), e.min(t1), n))
            .filter(|(s, e, _)| e > s)
    }

    /// Fraction of `[t0, t1]` spent at each occupation.
    pub fn occupation_histogram(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut hist: Vec<f64> = Vec::new();
        let mut total = 0.0;
        for (s, e, n) in self.segments(t0, t1) {
            let n = n as usize;
            if hist.len() <= n {
                hist.resize(n + 1, 0.0);
            }
            hist[n] += e - s;
            total += e - s;
        }
        if total > 0.0 {
            hist.iter_mut().for_each(|h| *h /= total);
        }
        hist
    }

    /// Time-weighted statistics of the occupation over `[t0, t1]`.
    pub fn occupation_stats(&self, t0: f64, t1: f64) -> OccupationStats {
        OccupationStats::from_distribution(&self.occupation_histogram(t0, t1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationStats {
    pub mean: f64,
    pub variance: f64,
    pub fano: f64,
}

impl OccupationStats {
    pub fn from_distribution(p: &[f64]) -> Self {
        let mean: f64 = p.iter().enumerate().map(|(n, q)| n as f64 * q).sum();
        let variance: f64 = p
            .iter()
            .enumerate()
            .map(|(n, q)| (n as f64 - mean).powi(2) * q)
            .sum();
        Self {
            mean,
            variance,
            fano: variance / mean,
        }
    }
}

/// Exact simulation of the birth-death chain on `[0, t_max]`.
pub fn gillespie(n0: u64, mu: f64, t_max: f64, seed: u64) -> Result<JumpTrajectory> {
    check_mu(mu)?;
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
    }
    let mut rng = trajectory_rng(seed, 0);
    let unit = Exp::new(1.0).expect("unit rate is valid");
    let mut t = 0.0;
    let mut n = n0;
    let mut event_times = Vec::new();
    let mut occupations = Vec::new();
    loop {
        let (birth, death) = rates(n, mu);
        let total = birth + death;
        t += unit.sample(&mut rng) / total;
        if t >= t_max {
            break;
        }
        if rng.random::<f64>() * total < birth {
            n += 1;
        } else {
            n -= 1;
        }
        event_times.push(t);
        occupations.push(n);
    }
    Ok(JumpTrajectory {
        n0,
        t_max,
        mu,
        seed,
        event_times,
        occupations,
    })
}

/// CSV `n,prob_empirical,prob_poisson`.
pub fn histogram_csv(empirical: &[f64], mu: f64) -> String {
    let q = poisson_pmf(mu, empirical.len().saturating_sub(1));
    let mut out = String::from("n,prob_empirical,prob_poisson\n");
    for (n, (p, q)) in empirical.iter().zip(&q).enumerate() {
        out.push_str(&format!("{n},{p},{q}\n"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalTrajectory {
    pub times: Vec<f64>,
    pub probs: Vec<Vec<f64>>,
    /// Probability that would have left through `n_max` by the final time.
    pub leak: f64,
}

fn master_rhs(p: &[f64], mu: f64, out: &mut [f64]) {
    let n_max = p.len() - 1;
    for n in 0..=n_max {
        let mut d = -(n as f64) * p[n];
        if n < n_max {
            d -= mu * p[n];
            d += (n + 1) as f64 * p[n + 1];
        }
        if n > 0 {
            d += mu * p[n - 1];
        }
        out[n] = d;
    }
}

/// Integrates the diagonal master equation
/// `dp(n)/dt = mu p(n-1) - mu p(n) + (n+1) p(n+1) - n p(n)` on
/// `n = 0..=n_max`, where `n_max = p0.len() - 1`, by RK4.
///
/// Births out of `n_max` are suppressed, which conserves probability; the
/// suppressed flux `mu p(n_max)` is accumulated as the leak and must stay
/// below [`MAX_LEAK`].
pub fn diagonal_master_evolve(p0: &[f64], mu: f64, times: &[f64]) -> Result<DiagonalTrajectory> {
    check_mu(mu)?;
    if p0.len() < 2 {
        return Err(Error::Domain("need at least two levels".into()));
    }
    if p0.iter().any(|v| !(*v >= 0.0)) || (p0.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("p0 must be a normalized probability vector".into()));
    }
    crate::dynamics::validate_grid(times)?;
    let n_max = p0.len() - 1;
    let h_max = 0.5 / (mu + n_max as f64);

    let mut p = p0.to_vec();
    let mut leak = 0.0;
    let len = p.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
    );
    let mut probs = vec![p.clone()];
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / h_max).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            let top0 = p[n_max];
            master_rhs(&p, mu, &mut k1);
            for i in 0..len {
                tmp[i] = p[i] + 0.5 * h * k1[i];
            }
            let top1 = tmp[n_max];
            master_rhs(&tmp, mu, &mut k2);
            for i in 0..len {
                tmp[i] = p[i] + 0.5 * h * k2[i];
            }
            let top2 = tmp[n_max];
            master_rhs(&tmp, mu, &mut k3);
            for i in 0..len {
                tmp[i] = p[i] + h * k3[i];
            }
            let top3 = tmp[n_max];
            master_rhs(&tmp, mu, &mut k4);
            for i in 0..len {
                p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            leak += mu * h / 6.0 * (top0 + 2.0 * top1 + 2.0 * top2 + top3);
        }
        if leak > MAX_LEAK {
            return Err(Error::Truncation { leak, n_max });
        }
        probs.push(p.clone());
    }
    Ok(DiagonalTrajectory {
        times: times.to_vec(),
        probs,
        leak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rate_examples() {
        assert_eq!(rates(0, 3.0), (3.0, 0.0));
        assert_eq!(rates(5, 20.0), (20.0, 5.0));
    }

    #[test]
    fn poisson_satisfies_detailed_balance() {
        let mu = 20.0;
        let p = poisson_pmf(mu, 80);
        for n in 0..80 {
            let (birth, _) = rates(n as u64, mu);
            let (_, death) = rates(n as u64 + 1, mu);
            assert!((birth * p[n] - death * p[n + 1]).abs() <= 1e-15);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - (-20f64).exp()).abs() < 1e-20);
    }

    #[test]
    fn poisson_large_mu_does_not_underflow_at_mode() {
        let p = poisson_pmf(1e4, 10_500);
        let mode = 1e4 as usize;
        // Stirling: 1 / sqrt(2 pi mu)
        assert!((p[mode] * (2.0 * std::f64::consts::PI * 1e4).sqrt() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn total_variation_basics() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(total_variation(&[1.0], &[0.0, 1.0]), 1.0);
        let p = poisson_pmf(4.0, 60);
        assert!(total_variation_to_poisson(&p, 4.0) < 1e-15);
    }

    #[test]
    fn chain_moves_by_one_and_stays_nonnegative() {
        let tr = gillespie(0, 3.0, 500.0, 1).unwrap();
        let mut prev = tr.n0;
        for (k, &n) in tr.occupations.iter().enumerate() {
            assert_eq!((n as i64 - prev as i64).abs(), 1, "event {k}");
            prev = n;
        }
        assert!(tr.event_times.windows(2).all(|w| w[0] < w[1]));
        assert!(*tr.event_times.last().unwrap() < tr.t_max);
    }

    #[test]
    fn stationary_histogram_is_poisson() {
        let mu = 20.0;
        let tr = gillespie(0, mu, 1e4, 7).unwrap();
        let hist = tr.occupation_histogram(10.0, tr.t_max);
        assert!((hist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(total_variation_to_poisson(&hist, mu) < 0.02);
        let s = tr.occupation_stats(10.0, tr.t_max);
        assert!((s.mean / mu - 1.0).abs() < 0.01, "{s:?}");
        assert!((s.fano - 1.0).abs() < 0.05, "{s:?}");
    }

    #[test]
    fn occupation_lookup() {
        let tr = JumpTrajectory {
            n0: 2,
            t_max: 3.0,
            mu: 1.0,
            seed: 0,
            event_times: vec![1.0, 2.0],
            occupations: vec![3, 2],
        };
        assert_eq!(tr.occupation_at(0.5), 2);
        assert_eq!(tr.occupation_at(1.0), 3);
        assert_eq!(tr.occupation_at(2.5), 2);
        assert_eq!(tr.occupation_histogram(0.0, 3.0), vec![0.0, 0.0, 2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(tr.occupation_histogram(0.5, 1.5), vec![0.0, 0.0, 0.5, 0.5]);
    }

    #[test]
    fn seeds_reproduce() {
        assert_eq!(gillespie(3, 5.0, 50.0, 9).unwrap(), gillespie(3, 5.0, 50.0, 9).unwrap());
        assert_ne!(gillespie(3, 5.0, 50.0, 9).unwrap(), gillespie(3, 5.0, 50.0, 10).unwrap());
    }

    #[test]
    fn csv_header() {
        let csv = histogram_csv(&[0.5, 0.5], 1.0);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,prob_empirical,prob_poisson"));
        assert!(lines.next().unwrap().starts_with("0,0.5,0.36787944"));
    }

    fn delta0(n_max: usize) -> Vec<f64> {
        let mut p = vec![0.0; n_max + 1];
        p[0] = 1.0;
        p
    }

    #[test]
    fn master_equation_relaxes_to_poisson() {
        let tr = diagonal_master_evolve(&delta0(100), 20.0, &[0.0, 50.0]).unwrap();
        let p = tr.probs.last().unwrap();
        assert!(total_variation_to_poisson(p, 20.0) < 1e-6);
        assert!(tr.leak < MAX_LEAK);
    }

    #[test]
    fn poisson_is_stationary() {
        let mu = 20.0;
        let n_max = default_n_max(mu);
        let mut p0 = poisson_pmf(mu, n_max);
        let s: f64 = p0.iter().sum();
        p0.iter_mut().for_each(|v| *v /= s);
        let tr = diagonal_master_evolve(&p0, mu, &[0.0, 1.0]).unwrap();
        let drift = p0
            .iter()
            .zip(&tr.probs[1])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(drift <= 1e-10, "{drift}");
    }

    #[test]
    fn probability_conserved_and_mean_relaxes_exponentially() {
        let mu = 20.0;
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let tr = diagonal_master_evolve(&delta0(default_n_max(mu)), mu, &times).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.probs) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let mean = OccupationStats::from_distribution(p).mean;
            // <n>(t) - mu = -mu e^{-t}
            assert!((mean - mu * (1.0 - (-t).exp())).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn small_truncation_reports_leak() {
        let err = diagonal_master_evolve(&delta0(20), 20.0, &[0.0, 10.0]).unwrap_err();
        assert!(matches!(err, Error::Truncation { n_max: 20, .. }), "{err:?}");
    }

    #[test]
    fn ergodic_time_average_matches_master_equation() {
        let mu = 20.0;
        // about 1e5 events at total rate ~ 2 mu
        let tr = gillespie(0, mu, 2500.0, 21).unwrap();
        assert!(tr.event_times.len() > 90_000);
        let hist = tr.occupation_histogram(10.0, tr.t_max);
        let stat = diagonal_master_evolve(&delta0(default_n_max(mu)), mu, &[0.0, 60.0]).unwrap();
        assert!(total_variation(&hist, stat.probs.last().unwrap()) < 0.02);
    }

    proptest! {
        #[test]
        fn pmf_normalized(mu in 0.1f64..200.0) {
            let p = poisson_pmf(mu, default_n_max(mu) + 20);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
