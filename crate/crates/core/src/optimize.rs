//! Derivative-free minimizers: Nelder-Mead on R^n and golden-section search on
//! an interval.

/// Tuning for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
    pub max_evals: usize,
    /// Stop when the spread of function values across the simplex falls
    /// below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter (max-norm) falls below this.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            max_evals: 20_000,
            f_tol: 1e-12,
            x_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

/// Nelder-Mead with the adaptive coefficients of Gao and Han, which behave
/// better than the textbook ones above a handful of dimensions.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n >= 1, "nelder_mead needs at least one dimension");
    let nf = n as f64;
    let (refl, expand) = (1.0, 1.0 + 2.0 / nf);
    let contract = 0.75 - 1.0 / (2.0 * nf);
    let shrink = 1.0 - 1.0 / nf;

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p, &mut evals)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    loop {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = vals[worst] - vals[best];
        let diam = pts
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if evals >= opts.max_evals || (spread <= opts.f_tol && diam <= opts.x_tol) || diam == 0.0
        {
            return Minimum {
                x: pts[best].clone(),
                f: vals[best],
                evals,
            };
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                *c += v / nf;
            }
        }
        let along = |coef: f64, out: &mut Vec<f64>, worst_pt: &[f64]| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(worst_pt) {
                *o = c + coef * (c - w);
            }
        };

        along(refl, &mut trial, &pts[worst]);
        let fr = eval(&trial, &mut evals);
        if fr < vals[best] {
            along(refl * expand, &mut trial2, &pts[worst]);
            let fe = eval(&trial2, &mut evals);
            if fe < fr {
                pts[worst].copy_from_slice(&trial2);
                vals[worst] = fe;
            } else {
                pts[worst].copy_from_slice(&trial);
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second_worst] {
            pts[worst].copy_from_slice(&trial);
            vals[worst] = fr;
            continue;
        }
        // contraction, outside if the reflection improved on the worst point
        let (coef, fref) = if fr < vals[worst] {
            (refl * contract, fr)
        } else {
            (-contract, vals[worst])
        };
        along(coef, &mut trial2, &pts[worst]);
        let fc = eval(&trial2, &mut evals);
        if fc <= fref {
            pts[worst].copy_from_slice(&trial2);
            vals[worst] = fc;
            continue;
        }
        let anchor = pts[best].clone();
        for &i in &order[1..] {
            for (p, a) in pts[i].iter_mut().zip(&anchor) {
                *p = a + shrink * (*p - a);
            }
            vals[i] = eval(&pts[i], &mut evals);
        }
    }
}

/// Golden-section search for a minimum of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol * (1.0 + c.abs() + d.abs()) {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
