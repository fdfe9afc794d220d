//! Stationarity of the conditioned second moments as a linear system in the
//! twelve unraveling parameters.

use nalgebra::{SMatrix, SVector};

use crate::gaussian::LaserParams;

pub type SystemMatrix = SMatrix<f64, 3, 12>;
pub type SystemRhs = SVector<f64, 3>;

/// `A x = b` with `x` in [`crate::unraveling::PARAM_ORDER`]. Rows are the
/// stationarity conditions for `m20`, `m02` and `m11`, in that order, with
/// `alpha = (1 + beta^2) / gamma`.
pub fn steady_state_system(beta: f64, gamma: f64, p: &LaserParams) -> (SystemMatrix, SystemRhs) {
    let (chi, nu) = (p.chi, p.nu);
    let (b, g) = (beta, gamma);
    let a = (1.0 + b * b) / g;
    let s = (1.0 + nu).sqrt();
    let m = 1.0 + nu / 2.0;

    #[rustfmt::skip]
    let rows = [
        [
            ((g - 1.0).powi(2) - b * b) / 2.0, (1.0 + nu) * g * g / 2.0, (b * b - 1.0) / 2.0,
            s * g * (g - 1.0), (g - 2.0) * b, s * g * b,
            b * (g - 1.0), 0.0, b,
            s * g * b, b * b + g - 1.0, s * g,
        ],
        [
            (b * b - (a - 1.0).powi(2)) / 2.0, (1.0 + nu) * (b * b - 1.0) / 2.0, a * a / 2.0,
            s * (b * b + a - 1.0), b * a, s * b * a,
            b * (a - 1.0), -(1.0 + nu) * b, 0.0,
            s * (a - 2.0) * b, (a - 1.0) * a, -s * a,
        ],
        [
            b * (g - a) / 2.0, (1.0 + nu) * g * b / 2.0, b * a / 2.0,
            s * g * b, (b * b + 1.0 + (g - 2.0) * a) / 2.0, s * (a * g + b * b + 1.0) / 2.0,
            (b * b + (a - 1.0) * (g - 1.0)) / 2.0, -(1.0 + nu) * g / 2.0, a / 2.0,
            s * (b * b + 1.0 + (a - 2.0) * g) / 2.0, b * a, 0.0,
        ],
    ];
    let mat = SystemMatrix::from_fn(|i, j| rows[i][j]);
    let rhs = SystemRhs::new(
        1.0 - g - m * g * g - b * b,
        -2.0 * chi * b + m * (1.0 - b * b) - a * a + a,
        -chi * g - a * b - m * g * b,
    );
    (mat, rhs)
}

/// Per-row scale `max(1, |b_k|, max_j |A_kj|)`, used to report residuals on
/// a size-independent footing.
pub fn row_scales(a: &SystemMatrix, b: &SystemRhs) -> [f64; 3] {
    std::array::from_fn(|k| {
        a.row(k)
            .iter()
            .fold(1.0f64.max(b[k].abs()), |m, v| m.max(v.abs()))
    })
}

/// `max_k |(A x - b)_k| / scale_k`.
pub fn scaled_residual(a: &SystemMatrix, b: &SystemRhs, x: &SVector<f64, 12>) -> f64 {
    let r = a * x - b;
    let s = row_scales(a, b);
    (0..3).map(|k| r[k].abs() / s[k]).fold(0.0, f64::max)
}
