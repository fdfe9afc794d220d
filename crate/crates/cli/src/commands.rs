use std::f64::consts::PI;

use atom_laser::experiments::{
    chi_sensitivity, mean_trap_frequency, species, table_csv, table_text, ExperimentReport,
    TrapExperiment,
};
use atom_laser::gaussian::{CovarianceTriple, LaserParams, MomentState};
use atom_laser::jumps::{default_n_max, gillespie, histogram_csv, poisson_pmf, total_variation_to_poisson};
use atom_laser::pr_region::{cc_ensemble, feasible_beta_interval, qsd_ensemble, solve_min_norm, PRQuery};
use atom_laser::unraveling::{simulate, simulate_batch, SimulationSpec, UnravelingMatrix};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{
    ExperimentConfig, JumpsConfig, RegionConfig, SimulateConfig, SweepAxis, SweepConfig,
    UnravelingChoice,
};
use crate::{CliError, Format};

fn envelope<C: Serialize, D: Serialize>(command: &str, config: &C, data: D) -> String {
    let v = json!({ "command": command, "config": config, "data": data });
    let mut s = serde_json::to_string_pretty(&v).expect("output serializes");
    s.push('\n');
    s
}

fn no_text(format: Format, command: &str) -> Result<(), CliError> {
    if format == Format::Text {
        return Err(CliError::Usage(format!("--format text is only supported by experiment, not {command}")));
    }
    Ok(())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Serialize)]
struct RegionRow {
    gamma: f64,
    beta_lo: Option<f64>,
    beta_hi: Option<f64>,
}

pub fn region(c: &RegionConfig, format: Format) -> Result<String, CliError> {
    no_text(format, "region")?;
    let p = LaserParams::linearized(c.chi, c.nu)?;
    if !(c.gamma_min > 0.0 && c.gamma_min <= c.gamma_max && c.gamma_max <= 1.0) {
        return Err(usage(format!(
            "gamma grid must satisfy 0 < gamma_min <= gamma_max <= 1, got [{}, {}]",
            c.gamma_min, c.gamma_max
        )));
    }
    if c.n_gamma < 1 || (c.n_gamma == 1 && c.gamma_min != c.gamma_max) {
        return Err(usage("n_gamma must be at least 2 for a nondegenerate range"));
    }
    let rows: Vec<RegionRow> = (0..c.n_gamma)
        .map(|k| {
            let gamma = if c.n_gamma == 1 {
                c.gamma_min
            } else {
                c.gamma_min + (c.gamma_max - c.gamma_min) * k as f64 / (c.n_gamma - 1) as f64
            };
            let iv = feasible_beta_interval(gamma, &p);
            RegionRow {
                gamma,
                beta_lo: iv.map(|i| i.0),
                beta_hi: iv.map(|i| i.1),
            }
        })
        .collect();
    Ok(match format {
        Format::Json => envelope("region", c, &rows),
        _ => {
            let mut out = String::from("gamma,beta_lo,beta_hi\n");
            for r in &rows {
                match (r.beta_lo, r.beta_hi) {
                    (Some(lo), Some(hi)) => out.push_str(&format!("{},{lo},{hi}\n", r.gamma)),
                    _ => out.push_str(&format!("{},,\n", r.gamma)),
                }
            }
            out
        }
    })
}

#[derive(Debug, Clone, Copy)]
pub enum SweepKind {
    Cc,
    Qsd,
}

#[derive(Serialize)]
struct SweepRow {
    x: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
}

fn log_grid(from: f64, to: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(from > 0.0 && to >= from && to.is_finite()) || n == 0 || (n == 1 && from != to) {
        return Err(usage(format!("log grid needs 0 < from <= to and n >= 2, got [{from}, {to}] n = {n}")));
    }
    if n == 1 {
        return Ok(vec![from]);
    }
    let (a, b) = (from.ln(), to.ln());
    Ok((0..n)
        .map(|k| match k {
            0 => from,
            k if k == n - 1 => to,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

pub fn sweep(c: &SweepConfig, kind: SweepKind, format: Format) -> Result<String, CliError> {
    let name = match kind {
        SweepKind::Cc => "cc-sweep",
        SweepKind::Qsd => "qsd-sweep",
    };
    no_text(format, name)?;
    let xs = log_grid(c.from, c.to, c.n)?;
    let rows: Vec<SweepRow> = xs
        .par_iter()
        .map(|&x| {
            let p = match c.axis {
                SweepAxis::Chi => LaserParams::linearized(x, c.fixed)?,
                SweepAxis::Nu => LaserParams::linearized(c.fixed, x)?,
            };
            let t: CovarianceTriple = match kind {
                SweepKind::Cc => cc_ensemble(&p),
                SweepKind::Qsd => qsd_ensemble(&p)?,
            };
            Ok(SweepRow {
                x,
                alpha: t.alpha,
                beta: t.beta,
                gamma: t.gamma,
            })
        })
        .collect::<Result<_, atom_laser::Error>>()?;
    Ok(match format {
        Format::Json => envelope(name, c, &rows),
        _ => {
            let mut out = String::from("x,alpha,beta,gamma\n");
            for r in &rows {
                out.push_str(&format!("{},{},{},{}\n", r.x, r.alpha, r.beta, r.gamma));
            }
            out
        }
    })
}

pub fn simulate_cmd(c: &SimulateConfig, format: Format) -> Result<String, CliError> {
    no_text(format, "simulate")?;
    let p = LaserParams::linearized(c.chi, c.nu)?;
    let (u, triple, min_norm) = match c.unraveling {
        UnravelingChoice::Qsd => (UnravelingMatrix::ZERO, qsd_ensemble(&p)?, 0.0),
        UnravelingChoice::Realize => {
            let q = PRQuery::new(c.beta, c.gamma, p)?;
            let r = solve_min_norm(&q)?;
            if !r.feasible {
                return Err(usage(format!(
                    "(beta, gamma) = ({}, {}) is not realizable: least norm {}",
                    c.beta, c.gamma, r.min_norm
                )));
            }
            let t = CovarianceTriple {
                alpha: q.alpha(),
                beta: c.beta,
                gamma: c.gamma,
            };
            (r.u_star, t, r.min_norm)
        }
    };
    if c.n_traj == 0 {
        return Err(usage("n_traj must be at least 1"));
    }
    let init = MomentState::from_triple(c.m10, c.m01, &triple);
    let spec = SimulationSpec::new(c.dt, c.n_steps).saving_every(c.save_every);
    if c.n_traj == 1 {
        let traj = simulate(&u, &p, &init, &spec, c.seed)?;
        return Ok(match format {
            Format::Json => envelope(
                "simulate",
                c,
                json!({
                    "u": u,
                    "u_norm": min_norm,
                    "times": traj.times,
                    "first_moments": traj.first_moments,
                    "second_moments": traj.second_moments,
                }),
            ),
            _ => traj.to_csv(),
        });
    }
    let finals = simulate_batch(&u, &p, &init, &spec, c.n_traj, c.seed)?;
    Ok(match format {
        Format::Json => envelope("simulate", c, json!({ "u": u, "u_norm": min_norm, "final_states": finals })),
        _ => {
            let mut out = String::from("traj,m10,m01,m20,m11,m02\n");
            for (k, s) in finals.iter().enumerate() {
                out.push_str(&format!("{k},{},{},{},{},{}\n", s.m10, s.m01, s.m20, s.m11, s.m02));
            }
            out
        }
    })
}

pub fn jumps(c: &JumpsConfig, format: Format) -> Result<String, CliError> {
    no_text(format, "jumps")?;
    if !(c.burn_in >= 0.0 && c.burn_in < c.t_max) {
        return Err(usage(format!("burn_in must lie in [0, t_max), got {}", c.burn_in)));
    }
    let traj = gillespie(c.n0, c.mu, c.t_max, c.seed)?;
    let mut hist = traj.occupation_histogram(c.burn_in, c.t_max);
    let support = hist.len().max(default_n_max(c.mu) + 1);
    hist.resize(support, 0.0);
    Ok(match format {
        Format::Json => {
            let stats = traj.occupation_stats(c.burn_in, c.t_max);
            envelope(
                "jumps",
                c,
                json!({
                    "n_events": traj.event_times.len(),
                    "stats": stats,
                    "tv_to_poisson": total_variation_to_poisson(&hist, c.mu),
                    "prob_empirical": hist,
                    "prob_poisson": poisson_pmf(c.mu, support - 1),
                }),
            )
        }
        _ => histogram_csv(&hist, c.mu),
    })
}

fn build_experiment(e: &crate::config::ExperimentEntry) -> Result<TrapExperiment, CliError> {
    let (mass, a_s) = match (&e.species, e.mass_kg, e.scattering_length_m) {
        (Some(name), None, None) => {
            let s = species(name)?;
            (s.mass_kg, s.scattering_length_m)
        }
        (None, Some(m), Some(a)) => (m, a),
        _ => {
            return Err(usage(format!(
                "experiment {:?}: give either species or both mass_kg and scattering_length_m",
                e.label
            )))
        }
    };
    let w = e.trap_hz.map(|f| 2.0 * PI * f);
    let omega_min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TrapExperiment::new(
        e.label.clone(),
        mass,
        mean_trap_frequency(w),
        omega_min,
        a_s,
        e.kappa,
        e.mu,
    )?)
}

pub fn experiment(c: &ExperimentConfig, format: Format) -> Result<String, CliError> {
    if c.experiment.is_empty() {
        return Err(usage("no experiments given"));
    }
    if !(c.margin > 0.0) || !(c.sensitivity >= 0.0 && c.sensitivity < 1.0) {
        return Err(usage("margin must be positive and sensitivity in [0, 1)"));
    }
    let exps = c.experiment.iter().map(build_experiment).collect::<Result<Vec<_>, _>>()?;
    let reports = exps
        .iter()
        .map(|e| ExperimentReport::compute(e, c.margin))
        .collect::<Result<Vec<_>, _>>()?;
    let bands: Vec<(f64, f64)> = exps.iter().map(|e| chi_sensitivity(e, c.sensitivity)).collect();
    Ok(match format {
        Format::Json => {
            let data: Vec<_> = exps
                .iter()
                .zip(&reports)
                .zip(&bands)
                .map(|((e, r), b)| json!({ "inputs": e, "report": r, "chi_band": [b.0, b.1] }))
                .collect();
            envelope("experiment", c, data)
        }
        Format::Csv => table_csv(&reports),
        Format::Text => {
            let mut out = table_text(&reports);
            out.push('\n');
            for ((e, r), b) in exps.iter().zip(&reports).zip(&bands) {
                out.push_str(&format!(
                    "{}: m = {:e} kg, a_s = {:e} m, chi in [{:.1}, {:.1}] for +-{}% constants{}\n",
                    e.label,
                    e.mass,
                    e.a_s,
                    b.0,
                    b.1,
                    100.0 * c.sensitivity,
                    if r.tf_warning { "; Thomas-Fermi ratio above 0.3" } else { "" }
                ));
            }
            out
        }
    })
}
