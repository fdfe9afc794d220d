//! From trap and condensate data to the dimensionless laser parameters, and
//! the coherence and single-mode criteria built on them.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in J s.
pub const HBAR: f64 = 1.054571817e-34;

/// A quantity `>>` another is taken to mean at least this factor larger.
pub const DEFAULT_MARGIN_FACTOR: f64 = 10.0;

/// Above this kinetic-to-interaction ratio the Thomas-Fermi value of `chi`
/// is flagged.
pub const TF_WARN_RATIO: f64 = 0.3;

const SPECIES_TOML: &str = include_str!("../data/species.toml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub mass_kg: f64,
    pub scattering_length_m: f64,
}

/// Parses a species table: one TOML table per species with `mass_kg` and
/// `scattering_length_m`.
pub fn parse_species(text: &str) -> Result<BTreeMap<String, Species>> {
    let table: BTreeMap<String, Species> =
        toml::from_str(text).map_err(|e| Error::Config(format!("species table: {e}")))?;
    for (name, s) in &table {
        if !(s.mass_kg > 0.0 && s.scattering_length_m > 0.0) {
            return Err(Error::Config(format!("species {name}: constants must be positive")));
        }
    }
    Ok(table)
}

/// The bundled species table.
pub fn builtin_species() -> BTreeMap<String, Species> {
    parse_species(SPECIES_TOML).expect("bundled species table is valid")
}

pub fn species(name: &str) -> Result<Species> {
    builtin_species()
        .remove(name)
        .ok_or_else(|| Error::Config(format!("unknown species {name:?}")))
}

/// Geometric mean of the three trap frequencies.
pub fn mean_trap_frequency(omegas: [f64; 3]) -> f64 {
    (omegas[0] * omegas[1] * omegas[2]).cbrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapExperiment {
    pub label: String,
    /// Atomic mass, kg.
    pub mass: f64,
    /// Mean trap frequency, rad/s.
    pub omega_mean: f64,
    /// Lowest trap frequency, rad/s.
    pub omega_min: f64,
    /// s-wave scattering length, m.
    pub a_s: f64,
    /// Condensate decay rate, 1/s.
    pub kappa: f64,
    /// Mean atom number.
    pub mu: f64,
}

impl TrapExperiment {
    pub fn new(
        label: impl Into<String>,
        mass: f64,
        omega_mean: f64,
        omega_min: f64,
        a_s: f64,
        kappa: f64,
        mu: f64,
    ) -> Result<Self> {
        let e = Self {
            label: label.into(),
            mass,
            omega_mean,
            omega_min,
            a_s,
            kappa,
            mu,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("omega_mean", self.omega_mean),
            ("omega_min", self.omega_min),
            ("a_s", self.a_s),
            ("kappa", self.kappa),
            ("mu", self.mu),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Sodium in a symmetric 25 Hz trap, `kappa = 7 /s`, `mu = 1e6`.
    pub fn sodium_proposed() -> Self {
        let na = species("sodium").expect("sodium is bundled");
        let w = 2.0 * PI * 25.0;
        Self::new("Proposed", na.mass_kg, w, w, na.scattering_length_m, 7.0, 1e6)
            .expect("constants are positive")
    }

    /// Output flux `I = kappa mu`, atoms per second.
    pub fn flux(&self) -> f64 {
        self.kappa * self.mu
    }

    /// Trap period `T = 2 pi / omega`.
    pub fn trap_period(&self) -> f64 {
        2.0 * PI / self.omega_mean
    }
}

/// Ratio of kinetic to interaction energy,
/// `(hbar / (64 pi^2 m omega mu^2 a_s^2))^(2/5)`.
pub fn tf_ratio(e: &TrapExperiment) -> f64 {
    (HBAR / (64.0 * PI * PI * e.mass * e.omega_mean * e.mu * e.mu * e.a_s * e.a_s)).powf(0.4)
}

/// Thomas-Fermi self-energy parameter
/// `chi = (4 / 7 kappa) (225 mu^2 m omega^6 a_s^2 / hbar)^(1/5)`.
pub fn chi_thomas_fermi(e: &TrapExperiment) -> f64 {
    let inner = 225.0 * e.mu * e.mu * e.mass * e.omega_mean.powi(6) * e.a_s * e.a_s / HBAR;
    4.0 / (7.0 * e.kappa) * inner.powf(0.2)
}

/// `chi` at the corners of a relative band on the atomic constants, which
/// enter as `(m a_s^2)^(1/5)`.
pub fn chi_sensitivity(e: &TrapExperiment, rel: f64) -> (f64, f64) {
    let mut vals = Vec::with_capacity(4);
    for sm in [1.0 - rel, 1.0 + rel] {
        for sa in [1.0 - rel, 1.0 + rel] {
            let mut f = e.clone();
            f.mass *= sm;
            f.a_s *= sa;
            vals.push(chi_thomas_fermi(&f));
        }
    }
    (
        vals.iter().cloned().fold(f64::INFINITY, f64::min),
        vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// `chi` at which the two linewidth branches switch, `sqrt(8 mu / pi)`.
pub fn linewidth_crossover(mu: f64) -> f64 {
    (8.0 * mu / PI).sqrt()
}

/// Ratio of the low-`chi` branch to the high-`chi` branch at the crossover,
/// `1 + pi / (8 mu)`. The piecewise formula jumps by this factor.
pub fn linewidth_seam_ratio(mu: f64) -> f64 {
    1.0 + PI / (8.0 * mu)
}

/// Output linewidth: `kappa (1 + chi^2) / 2 mu` below the crossover and
/// `2 kappa chi / sqrt(2 pi mu)` above it.
pub fn linewidth(e: &TrapExperiment, chi: f64) -> f64 {
    let (k, mu) = (e.kappa, e.mu);
    if chi < linewidth_crossover(mu) {
        k * (1.0 + chi * chi) / (2.0 * mu)
    } else {
        2.0 * k * chi / (2.0 * PI * mu).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxCondition {
    /// `1.61 omega (a_s^4 omega m^2 kappa / hbar^2)^(1/11)`.
    pub threshold: f64,
    /// The eleventh-root factor alone.
    pub root_factor: f64,
    /// Flux times trap period.
    pub it: f64,
    /// `I >= factor * threshold`.
    pub satisfied: bool,
}

/// Coherence of the output recast as a flux condition `I >> threshold`.
pub fn coherence_flux_condition(e: &TrapExperiment, factor: f64) -> FluxCondition {
    let root_factor =
        (e.a_s.powi(4) * e.omega_mean * e.mass * e.mass * e.kappa / (HBAR * HBAR)).powf(1.0 / 11.0);
    let threshold = 1.61 * e.omega_mean * root_factor;
    let flux = e.flux();
    FluxCondition {
        threshold,
        root_factor,
        it: flux * e.trap_period(),
        satisfied: flux > 0.0 && flux >= factor * threshold,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleModeCheck {
    /// `omega_min / kappa`.
    pub r1: f64,
    /// `omega_min / ell`.
    pub r2: f64,
    pub ok: bool,
}

pub fn single_mode_check(e: &TrapExperiment, ell: f64, factor: f64) -> SingleModeCheck {
    let r1 = e.omega_min / e.kappa;
    let r2 = e.omega_min / ell;
    SingleModeCheck {
        r1,
        r2,
        ok: r1 >= factor && r2 >= factor,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub label: String,
    pub chi: f64,
    pub tf_ratio: f64,
    pub tf_warning: bool,
    pub flux: f64,
    pub ell: f64,
    /// Degeneracy `I / ell`.
    pub degeneracy: f64,
    pub it: f64,
    pub kappa_over_ell: f64,
    pub omega_min_over_kappa: f64,
    pub omega_min_over_ell: f64,
    pub flux_threshold: f64,
    pub root_factor: f64,
    pub coherent: bool,
    pub single_mode: bool,
}

impl ExperimentReport {
    pub fn compute(e: &TrapExperiment, factor: f64) -> Result<Self> {
        e.validate()?;
        let chi = chi_thomas_fermi(e);
        let tf = tf_ratio(e);
        let ell = linewidth(e, chi);
        let flux = coherence_flux_condition(e, factor);
        let sm = single_mode_check(e, ell, factor);
        let degeneracy = e.flux() / ell;
        Ok(Self {
            label: e.label.clone(),
            chi,
            tf_ratio: tf,
            tf_warning: tf > TF_WARN_RATIO,
            flux: e.flux(),
            ell,
            degeneracy,
            it: flux.it,
            kappa_over_ell: e.kappa / ell,
            omega_min_over_kappa: sm.r1,
            omega_min_over_ell: sm.r2,
            flux_threshold: flux.threshold,
            root_factor: flux.root_factor,
            coherent: flux.satisfied,
            single_mode: sm.ok,
        })
    }

    fn rows(&self) -> [(&'static str, f64); 6] {
        [
            ("chi", self.chi),
            ("IT", self.it),
            ("I/ell", self.degeneracy),
            ("kappa/ell", self.kappa_over_ell),
            ("omega_min/kappa", self.omega_min_over_kappa),
            ("omega_min/ell", self.omega_min_over_ell),
        ]
    }
}

fn fmt_value(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Aligned text table, one column per report, rows as in the comparison
/// table (chi, IT, I/ell, kappa/ell, omega_min/kappa, omega_min/ell).
pub fn table_text(reports: &[ExperimentReport]) -> String {
    let mut cells: Vec<Vec<String>> = vec![std::iter::once(String::new())
        .chain(reports.iter().map(|r| r.label.clone()))
        .collect()];
    for k in 0..6 {
        let name = reports
            .first()
            .map(|r| r.rows()[k].0)
            .unwrap_or_default()
            .to_string();
        cells.push(
            std::iter::once(name)
                .chain(reports.iter().map(|r| fmt_value(r.rows()[k].1)))
                .collect(),
        );
    }
    let ncol = reports.len() + 1;
    let widths: Vec<usize> = (0..ncol)
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// CSV with header `quantity,<label>...` and the same rows as
/// [`table_text`], at full precision.
pub fn table_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from("quantity");
    for r in reports {
        out.push(',');
        out.push_str(&r.label);
    }
    out.push('\n');
    for k in 0..6 {
        let name = reports.first().map(|r| r.rows()[k].0).unwrap_or_default();
        out.push_str(name);
        for r in reports {
            out.push_str(&format!(",{}", r.rows()[k].1));
        }
        out.push('\n');
    }
    out
}
