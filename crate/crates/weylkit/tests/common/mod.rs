#![allow(dead_code)]

//! Shared fixtures for the integration suites.

use nalgebra::Complex;
use rand::Rng;
use weylkit::linalg::opnorm;
use weylkit::potential::PotentialModel;
use weylkit::CMatrix;

pub type C64 = Complex<f64>;

pub fn random_complex<R: Rng>(m: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(m, m, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Random Hermitian matrix rescaled to the requested operator norm.
pub fn random_hermitian<R: Rng>(m: usize, target_norm: f64, rng: &mut R) -> CMatrix {
    let g = random_complex(m, rng);
    let h = (&g + g.adjoint()).scale(0.5);
    let n = opnorm(&h);
    if n == 0.0 {
        return h;
    }
    h.scale(target_norm / n)
}

/// `d^k/dx^k exp(-((x-center)/width)^2)` through the Hermite recurrence.
pub fn gaussian_derivative(x: f64, center: f64, width: f64, k: usize) -> f64 {
    let u = (x - center) / width;
    let mut h_prev = 0.0f64;
    let mut h = 1.0f64;
    for n in 0..k {
        let h_next = 2.0 * u * h - 2.0 * (n as f64) * h_prev;
        h_prev = h;
        h = h_next;
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * h * (-u * u).exp() / width.powi(k as i32)
}

/// Noncommuting 2×2 family: two Gaussian bumps against non-commuting
/// Hermitian directions, truncated to `[0, 2]` (tails < 1e-12 at the
/// cuts, so the truncation is numerically invisible to the expansion).
pub fn two_gaussian_2x2() -> PotentialModel {
    let a = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    let b = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.9, 0.0),
            C64::new(0.0, 0.3),
            C64::new(0.0, -0.3),
            C64::new(-0.6, 0.0),
        ],
    );
    let base = PotentialModel::smooth(2, 8, move |x, k| {
        &a * C64::new(gaussian_derivative(x, 0.8, 0.15, k), 0.0)
            + &b * C64::new(gaussian_derivative(x, 0.9, 0.17, k), 0.0)
    })
    .expect("analytic derivatives are consistent");
    PotentialModel::truncated(&base, 0.0, 2.0).expect("valid interval")
}

/// Scalar bump `1.3 exp(-((x-0.8)/0.18)^2)` truncated to `[0, 2]`.
pub fn scalar_bump() -> PotentialModel {
    let base = PotentialModel::scalar(8, |x, k| 1.3 * gaussian_derivative(x, 0.8, 0.18, k))
        .expect("analytic derivatives are consistent");
    PotentialModel::truncated(&base, 0.0, 2.0).expect("valid interval")
}
