use nalgebra::{Matrix3, Matrix6};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Admissibility slack on the spectral norm.
pub const NORM_TOL: f64 = 1e-10;

/// Diagonal jitter added before factoring the noise covariance, so that
/// boundary unravelings (norm exactly one) still factor.
pub const COVARIANCE_JITTER: f64 = 1e-12;

/// Order of the 12 real parameters of an unraveling, used by the steady-state
/// linear system and the min-norm search.
pub const PARAM_ORDER: [(char, usize, usize); 12] = [
    ('r', 0, 0),
    ('r', 1, 1),
    ('r', 2, 2),
    ('r', 0, 1),
    ('r', 0, 2),
    ('r', 1, 2),
    ('h', 0, 0),
    ('h', 1, 1),
    ('h', 2, 2),
    ('h', 0, 1),
    ('h', 0, 2),
    ('h', 1, 2),
];

/// Complex symmetric correlation matrix `u = r + i h` of three white-noise
/// sources, `E[dW_i dW_j] = u_ij dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnravelingMatrix {
    pub r: [[f64; 3]; 3],
    pub h: [[f64; 3]; 3],
}

impl UnravelingMatrix {
    /// Quantum state diffusion.
    pub const ZERO: Self = Self {
        r: [[0.0; 3]; 3],
        h: [[0.0; 3]; 3],
    };

    pub fn new(r: [[f64; 3]; 3], h: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..i {
                if r[i][j] != r[j][i] || h[i][j] != h[j][i] {
                    return Err(Error::Domain(format!(
                        "unraveling matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { r, h })
    }

    pub fn real_diagonal(d: [f64; 3]) -> Self {
        let mut r = [[0.0; 3]; 3];
        for (i, v) in d.into_iter().enumerate() {
            r[i][i] = v;
        }
        Self { r, h: [[0.0; 3]; 3] }
    }

    /// Builds `u` from the 12 parameters in [`PARAM_ORDER`].
    pub fn from_params(x: &[f64; 12]) -> Self {
        let mut r = [[0.0; 3]; 3];
        let mut h = [[0.0; 3]; 3];
        for (v, &(part, i, j)) in x.iter().zip(PARAM_ORDER.iter()) {
            let m = if part == 'r' { &mut r } else { &mut h };
            m[i][j] = *v;
            m[j][i] = *v;
        }
        Self { r, h }
    }

    pub fn params(&self) -> [f64; 12] {
        std::array::from_fn(|k| {
            let (part, i, j) = PARAM_ORDER[k];
            if part == 'r' {
                self.r[i][j]
            } else {
                self.h[i][j]
            }
        })
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.r[i][j], self.h[i][j])
    }

    pub fn to_complex(&self) -> Matrix3<Complex64> {
        Matrix3::from_fn(|i, j| self.entry(i, j))
    }

    pub fn is_admissible(&self) -> bool {
        spectral_norm(self) <= 1.0 + NORM_TOL
    }

    /// Covariance of `(Re dW_0, Re dW_1, Re dW_2, Im dW_0, Im dW_1, Im dW_2)`
    /// per unit time: `1/2 [[I + r, h], [h, I - r]]`.
    pub fn noise_covariance(&self) -> Matrix6<f64> {
        Matrix6::from_fn(|a, b| {
            let (i, j) = (a % 3, b % 3);
            let delta = if i == j { 1.0 } else { 0.0 };
            let v = match (a < 3, b < 3) {
                (true, true) => delta + self.r[i][j],
                (false, false) => delta - self.r[i][j],
                _ => self.h[i][j],
            };
            0.5 * v
        })
    }

    /// Lower Cholesky factor of [`Self::noise_covariance`] (plus jitter).
    /// Fails exactly when the covariance is indefinite, which is when the
    /// spectral norm exceeds one.
    pub fn noise_factor(&self) -> Result<Matrix6<f64>> {
        let cov = self.noise_covariance() + Matrix6::identity() * COVARIANCE_JITTER;
        cov.cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::ConstraintViolation {
                norm: spectral_norm(self),
            })
    }
}

/// Largest singular value of `u`.
///
/// Computed as the square root of the top eigenvalue of the Hermitian matrix
/// `u^H u`, via the trigonometric solution of its characteristic cubic. This
/// is called in the inner loop of the min-norm search.
pub fn spectral_norm(u: &UnravelingMatrix) -> f64 {
    let m = u.to_complex();
    let g = m.adjoint() * m;
    hermitian3_max_eigenvalue(&g).max(0.0).sqrt()
}

fn hermitian3_max_eigenvalue(g: &Matrix3<Complex64>) -> f64 {
    let d = [g[(0, 0)].re, g[(1, 1)].re, g[(2, 2)].re];
    let off = [g[(0, 1)], g[(0, 2)], g[(1, 2)]];
    let off_sq: f64 = off.iter().map(|z| z.norm_sqr()).sum();
    let mean = (d[0] + d[1] + d[2]) / 3.0;
    let dev = [d[0] - mean, d[1] - mean, d[2] - mean];
    let p2 = dev.iter().map(|v| v * v).sum::<f64>() + 2.0 * off_sq;
    if p2 <= f64::MIN_POSITIVE {
        return mean;
    }
    let p = (p2 / 6.0).sqrt();
    // det of B = (G - mean I) / p, which is real for Hermitian G
    let (a, b, c) = (dev[0] / p, dev[1] / p, dev[2] / p);
    let (x, y, z) = (off[0] / p, off[1] / p, off[2] / p);
    let det = a * b * c + 2.0 * (x * z * y.conj()).re
        - a * z.norm_sqr()
        - b * y.norm_sqr()
        - c * x.norm_sqr();
    let half = (det / 2.0).clamp(-1.0, 1.0);
    let phi = half.acos() / 3.0;
    mean + 2.0 * p * phi.cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn svd_norm(u: &UnravelingMatrix) -> f64 {
        u.to_complex()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    fn sym(v: [f64; 6]) -> [[f64; 3]; 3] {
        [[v[0], v[3], v[4]], [v[3], v[1], v[5]], [v[4], v[5], v[2]]]
    }

    #[test]
    fn norm_examples() {
        assert_eq!(spectral_norm(&UnravelingMatrix::ZERO), 0.0);
        let number_state = UnravelingMatrix::real_diagonal([1.0, 1.0, -1.0]);
        assert!((spectral_norm(&number_state) - 1.0).abs() < 1e-15);
        let half_ones = UnravelingMatrix::new([[0.5; 3]; 3], [[0.0; 3]; 3]).unwrap();
        assert!((spectral_norm(&half_ones) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_rejected() {
        let mut r = [[0.0; 3]; 3];
        r[0][1] = 0.2;
        assert!(UnravelingMatrix::new(r, [[0.0; 3]; 3]).is_err());
    }

    #[test]
    fn params_round_trip() {
        let x: [f64; 12] = std::array::from_fn(|k| k as f64 * 0.1 - 0.4);
        let u = UnravelingMatrix::from_params(&x);
        assert_eq!(u.params(), x);
        assert_eq!(u.r[1][2], u.r[2][1]);
        assert_eq!(u.h[0][2], x[10]);
    }

    #[test]
    fn boundary_unraveling_factors() {
        let u = UnravelingMatrix::real_diagonal([1.0, 1.0, -1.0]);
        assert!(u.noise_factor().is_ok());
        let u = UnravelingMatrix::real_diagonal([1.0 + 1e-6, 0.0, 0.0]);
        assert!(matches!(
            u.noise_factor(),
            Err(Error::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn factorization_iff_admissible() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut seen = (0, 0);
        for _ in 0..1000 {
            let scale = rng.random_range(0.1..0.9);
            let r = sym(std::array::from_fn(|_| rng.random_range(-1.0..1.0) * scale));
            let h = sym(std::array::from_fn(|_| rng.random_range(-1.0..1.0) * scale));
            let u = UnravelingMatrix::new(r, h).unwrap();
            let admissible = spectral_norm(&u) <= 1.0 + NORM_TOL;
            assert_eq!(u.noise_factor().is_ok(), admissible, "{u:?}");
            if admissible {
                seen.0 += 1
            } else {
                seen.1 += 1
            }
        }
        // the sample must exercise both branches
        assert!(seen.0 > 100 && seen.1 > 100, "{seen:?}");
    }

    proptest! {
        #[test]
        fn closed_form_norm_matches_svd(
            rv in proptest::array::uniform6(-2.0f64..2.0),
            hv in proptest::array::uniform6(-2.0f64..2.0),
        ) {
            let u = UnravelingMatrix::new(sym(rv), sym(hv)).unwrap();
            let a = spectral_norm(&u);
            let b = svd_norm(&u);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b), "{} vs {}", a, b);
        }

        #[test]
        fn covariance_eigenvalues_are_half_one_plus_minus_singular_values(
            rv in proptest::array::uniform6(-1.0f64..1.0),
            hv in proptest::array::uniform6(-1.0f64..1.0),
        ) {
            let u = UnravelingMatrix::new(sym(rv), sym(hv)).unwrap();
            let ev = u.noise_covariance().symmetric_eigenvalues();
            let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!((min - 0.5 * (1.0 - spectral_norm(&u))).abs() < 1e-9);
        }
    }
}
