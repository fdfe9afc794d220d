use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::UnravelingMatrix;
use crate::error::Result;

/// RNG for trajectory `index` of a batch with root seed `seed`.
///
/// Every trajectory uses the ChaCha stream numbered `index` under the key
/// derived from `seed`, so it is reproducible on its own, independent of how
/// many trajectories run or in what order.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws complex increments `dW_0, dW_1, dW_2` with
/// `E[dW_i dW_j^*] = delta_ij dt` and `E[dW_i dW_j] = u_ij dt`.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    factor: Matrix6<f64>,
    sqrt_dt: f64,
}

impl NoiseSource {
    pub fn new(u: &UnravelingMatrix, dt: f64) -> Result<Self> {
        Ok(Self {
            factor: u.noise_factor()?,
            sqrt_dt: dt.sqrt(),
        })
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> [Complex64; 3] {
        let z = Vector6::from_fn(|_, _| StandardNormal.sample(rng));
        let v = self.factor * z * self.sqrt_dt;
        [
            Complex64::new(v[0], v[3]),
            Complex64::new(v[1], v[4]),
            Complex64::new(v[2], v[5]),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct NoisePath {
    pub dt: f64,
    pub increments: Vec<[Complex64; 3]>,
    pub seed: u64,
}

impl NoisePath {
    /// Sample estimates of `E[dW_i dW_j^*] / dt` and `E[dW_i dW_j] / dt`.
    pub fn sample_correlations(&self) -> ([[Complex64; 3]; 3], [[Complex64; 3]; 3]) {
        let n = self.increments.len() as f64 * self.dt;
        let mut herm = [[Complex64::new(0.0, 0.0); 3]; 3];
        let mut sym = herm;
        for dw in &self.increments {
            for i in 0..3 {
                for j in 0..3 {
                    herm[i][j] += dw[i] * dw[j].conj();
                    sym[i][j] += dw[i] * dw[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                herm[i][j] /= n;
                sym[i][j] /= n;
            }
        }
        (herm, sym)
    }
}

/// Fails with a constraint violation when `u` is not admissible.
pub fn synthesize_noise(
    u: &UnravelingMatrix,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<NoisePath> {
    let src = NoiseSource::new(u, dt)?;
    let mut rng = trajectory_rng(seed, 0);
    let increments = (0..n_steps).map(|_| src.sample(&mut rng)).collect();
    Ok(NoisePath {
        dt,
        increments,
        seed,
    })
}
