//! Continuous Markovian unravelings of the linearized laser master equation.

pub mod matrix;
pub mod noise;
pub mod sme;

pub use matrix::{spectral_norm, UnravelingMatrix, NORM_TOL, PARAM_ORDER};
pub use noise::{synthesize_noise, trajectory_rng, NoisePath, NoiseSource};
pub use sme::{
    ensemble_average_check, noise_coefficients, second_moment_drift, simulate, simulate_batch,
    simulate_indexed, ConditionedTrajectory, EnsembleReport, MomentComparison, SecondMoments,
    SimulationSpec,
};
