//! High-energy asymptotics: the coefficient recursion, series evaluation
//! and order verification, the sandwich factorization for comparison
//! flows, the exponential-locality experiment, and the diagonal Green's
//! matrix expansion.

pub mod symbols;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE};
use crate::ode::{integrate, StepControl};
use crate::potential::PotentialModel;
use crate::volterra::solve_volterra;
use crate::weyl::{limit_m, LimitOptions};

use symbols::{green_coeff_polys, m_coeff_polys, NcPoly};

/// Coefficients `m_1(x) … m_N(x)` of the expansion
/// `M_+(z, x) = i z^{1/2} I + Σ_k m_k(x) z^{-k/2} + o(|z|^{-N/2})`.
#[derive(Debug, Clone)]
pub struct AsymptoticSeries {
    pub x: f64,
    pub coeffs: Vec<CMatrix>,
    dim: usize,
}

impl AsymptoticSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Partial sum `i z^{1/2} I + Σ_k m_k z^{-k/2}` on the `Im z^{1/2} > 0`
    /// branch.
    pub fn eval(&self, z: Complex64) -> Result<CMatrix> {
        let zh = z.sqrt();
        if !(zh.im > 0.0) {
            return Err(Error::SpectralDomain {
                z,
                reason: "series evaluation needs Im z^{1/2} > 0",
            });
        }
        let mut out = linalg::identity(self.dim) * (Complex64::new(0.0, 1.0) * zh);
        let mut power = ONE;
        for c in &self.coeffs {
            power /= zh;
            linalg::maxpy(power, c, &mut out);
        }
        Ok(out)
    }
}

/// Expansion coefficients via the exact recursion, evaluated at `x` from
/// the potential's analytic derivatives. Needs `Q^{(N-1)}`.
pub fn m_coeffs(pot: &PotentialModel, x: f64, n: usize) -> Result<AsymptoticSeries> {
    let polys = m_coeff_polys(n);
    let coeffs = eval_polys(&polys, pot, x)?;
    Ok(AsymptoticSeries {
        x,
        coeffs,
        dim: pot.dim(),
    })
}

/// Free-function form of [`AsymptoticSeries::eval`].
pub fn eval_series(series: &AsymptoticSeries, z: Complex64) -> Result<CMatrix> {
    series.eval(z)
}

fn eval_polys(polys: &[NcPoly], pot: &PotentialModel, x: f64) -> Result<Vec<CMatrix>> {
    let required = polys
        .iter()
        .map(|p| p.max_derivative_order())
        .max()
        .unwrap_or(0);
    if required > pot.smoothness_order() {
        return Err(Error::InsufficientSmoothness {
            required,
            available: pot.smoothness_order(),
        });
    }
    let derivs: Vec<CMatrix> = (0..=required)
        .map(|k| pot.derivative(x, k))
        .collect::<Result<_>>()?;
    polys.iter().map(|p| p.eval(&derivs, pot.dim())).collect()
}

/// Coefficients `G_0(x) … G_N(x)` of the diagonal Green's matrix
/// expansion `G(z, x, x) = (i/2) Σ_k G_k(x) z^{-k-1/2} + o(|z|^{-N-1/2})`.
#[derive(Debug, Clone)]
pub struct GreenSeries {
    pub x: f64,
    pub coeffs: Vec<CMatrix>,
    dim: usize,
}

impl GreenSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Partial sum `(i/2) Σ_k G_k z^{-k-1/2}`.
    pub fn eval(&self, z: Complex64) -> Result<CMatrix> {
        let zh = z.sqrt();
        if !(zh.im > 0.0) {
            return Err(Error::SpectralDomain {
                z,
                reason: "series evaluation needs Im z^{1/2} > 0",
            });
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        let half_i = Complex64::new(0.0, 0.5);
        let mut power = ONE / zh;
        for c in &self.coeffs {
            linalg::maxpy(half_i * power, c, &mut out);
            power /= z;
        }
        Ok(out)
    }
}

/// Green's-expansion coefficients by formal inversion of the difference
/// series `M_- - M_+`, the minus series obtained by reflection. `G_N`
/// consumes `Q^{(2N-2)}`.
pub fn green_coeffs(pot: &PotentialModel, x: f64, n: usize) -> Result<GreenSeries> {
    let polys = green_coeff_polys(n);
    debug_assert!(polys.integer_power_residues.iter().all(NcPoly::is_zero));
    let coeffs = eval_polys(&polys.coeffs, pot, x)?;
    Ok(GreenSeries {
        x,
        coeffs,
        dim: pot.dim(),
    })
}

/// The diagonal Green's matrix `G(z, x, x) = (M_- - M_+)^{-1}`.
pub fn green_diag(m_minus: &CMatrix, m_plus: &CMatrix) -> Result<CMatrix> {
    let diff = m_minus - m_plus;
    linalg::inverse(&diff, "M_- - M_+ (singular difference flags an upstream bug)")
}

/// Method knobs shared by the verification experiments.
#[derive(Debug, Clone)]
pub struct MethodOptions {
    pub volterra_tol: f64,
    pub limit: LimitOptions,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions {
            volterra_tol: 1e-12,
            limit: LimitOptions::default(),
        }
    }
}

/// Numerical `M_+(z, x)` by the route suited to the potential: the
/// Volterra solver for compactly supported `Q`, the horizon-doubling
/// limit otherwise.
pub fn m_plus_numeric(
    z: Complex64,
    x: f64,
    pot: &PotentialModel,
    opts: &MethodOptions,
) -> Result<CMatrix> {
    match pot.support_hint() {
        Some((_, hi)) if x <= hi => {
            let sol = solve_volterra(z, pot, x, opts.volterra_tol)?;
            sol.m_at(x)
        }
        _ => Ok(limit_m(z, x, pot, &opts.limit)?.m),
    }
}

/// Moduli schedule along a grid of sector angles.
#[derive(Debug, Clone)]
pub struct ZSchedule {
    /// Increasing moduli `|z_j|`.
    pub moduli: Vec<f64>,
    /// Angles `arg z ∈ (0, π)`.
    pub angles: Vec<f64>,
}

impl ZSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.moduli.len() < 3 {
            return Err(Error::InvalidArgument(
                "order verification needs at least three moduli".into(),
            ));
        }
        if !self.moduli.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "moduli must be strictly increasing".into(),
            ));
        }
        for &a in &self.angles {
            if !(a > 0.0 && a < std::f64::consts::PI) {
                return Err(Error::OutsideSector {
                    angle: a,
                    lo: 0.0,
                    hi: std::f64::consts::PI,
                });
            }
        }
        Ok(())
    }
}

/// Scaled remainders along one angle.
#[derive(Debug, Clone)]
pub struct OrderRow {
    pub angle: f64,
    /// `R_j = ‖M_+(z_j) - partial sum‖ · |z_j|^{N/2}` per modulus.
    pub scaled_remainders: Vec<f64>,
    /// Strict decrease over the last three moduli.
    pub pass: bool,
}

/// Report of one order-verification run.
#[derive(Debug, Clone)]
pub struct OrderReport {
    pub n: usize,
    pub x0: f64,
    pub rows: Vec<OrderRow>,
    pub pass: bool,
}

/// Measure the remainder decay of the order-`N` partial sum against the
/// numerical M over the given schedule. Passes when the scaled remainder
/// strictly decreases over the last three moduli for every angle.
pub fn verify_order(
    pot: &PotentialModel,
    x0: f64,
    n: usize,
    schedule: &ZSchedule,
    opts: &MethodOptions,
) -> Result<OrderReport> {
    schedule.validate()?;
    let series = m_coeffs(pot, x0, n)?;
    let mut rows = Vec::new();
    for &angle in &schedule.angles {
        let mut remainders = Vec::new();
        for &modulus in &schedule.moduli {
            let z = Complex64::from_polar(modulus, angle);
            let m_num = m_plus_numeric(z, x0, pot, opts)?;
            let m_ser = series.eval(z)?;
            let r = linalg::opnorm(&(&m_num - &m_ser)) * modulus.powf(n as f64 / 2.0);
            remainders.push(r);
        }
        let tail = &remainders[remainders.len() - 3..];
        let pass = tail[0] > tail[1] && tail[1] > tail[2];
        rows.push(OrderRow {
            angle,
            scaled_remainders: remainders,
            pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(OrderReport { n, x0, rows, pass })
}

/// Solve `X' = A(x) X + X A(x)` with data `X(x1) = X_end`, evaluated at
/// `x0`, through the factorization `X(x) = Y(x) X_end Z(x)` where
/// `Y' = AY`, `Z' = ZA`, `Y(x1) = Z(x1) = I`.
pub fn sandwich_solve(
    a: impl Fn(f64) -> CMatrix,
    x_end: &CMatrix,
    x1: f64,
    x0: f64,
    ctrl: &StepControl,
) -> Result<CMatrix> {
    linalg::ensure_finite(x_end)?;
    let m = x_end.nrows();
    let eye = linalg::identity(m);
    let y = integrate(
        |x, v, out| out.gemm(ONE, &a(x), v, Complex64::new(0.0, 0.0)),
        x1,
        x0,
        &eye,
        ctrl,
    )?;
    let z = integrate(
        |x, v, out| out.gemm(ONE, v, &a(x), Complex64::new(0.0, 0.0)),
        x1,
        x0,
        &eye,
        ctrl,
    )?;
    Ok(y * x_end * z)
}

/// Decay record of an exponential-locality run.
#[derive(Debug, Clone)]
pub struct LocalityReport {
    /// Window `[x0, x1]` on which the potentials agree.
    pub window: (f64, f64),
    pub im_sqrt: Vec<f64>,
    /// `D_j = ‖M_{1,+}(z_j, x0) - M_{2,+}(z_j, x0)‖`.
    pub differences: Vec<f64>,
    /// Least-squares slope of `log D_j` against `Im z_j^{1/2}`.
    pub slope: f64,
    /// `D_j e^{2 (x1-x0) Im z_j^{1/2}}`, the refined normalization.
    pub normalized: Vec<f64>,
    pub pass_slope: bool,
    pub pass_bounded: bool,
}

/// Compare the M-matrices of two potentials agreeing on `[x0, x1]` along
/// a schedule of spectral points and fit the exponential decay of their
/// difference. Passes when the fitted slope is at most
/// `-2 (x1 - x0) · 0.9` and the normalized sequence stays bounded.
pub fn locality_experiment(
    pot1: &PotentialModel,
    pot2: &PotentialModel,
    x0: f64,
    x1: f64,
    zs: &[Complex64],
    opts: &MethodOptions,
) -> Result<LocalityReport> {
    if !(x0 < x1) {
        return Err(Error::InvalidInterval { from: x0, to: x1 });
    }
    if zs.len() < 2 {
        return Err(Error::InvalidArgument(
            "locality experiment needs at least two spectral points".into(),
        ));
    }
    // sampled agreement check at interior points of the window (the
    // agreement hypothesis is almost-everywhere; cut conventions may
    // differ exactly at the endpoints)
    let samples = 33;
    for i in 0..samples {
        let x = x0 + (x1 - x0) * (i as f64 + 0.5) / samples as f64;
        let d = linalg::opnorm(&(pot1.q(x) - pot2.q(x)));
        let scale = 1.0 + linalg::opnorm(&pot1.q(x));
        if d > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "potentials disagree on the window at x = {x} (difference {d:.3e})"
            )));
        }
    }

    let mut im_sqrt = Vec::with_capacity(zs.len());
    let mut differences = Vec::with_capacity(zs.len());
    for &z in zs {
        if !(z.im > 0.0) {
            return Err(Error::SpectralDomain {
                z,
                reason: "locality schedule needs Im z > 0",
            });
        }
        let m1 = m_plus_numeric(z, x0, pot1, opts)?;
        let m2 = m_plus_numeric(z, x0, pot2, opts)?;
        im_sqrt.push(z.sqrt().im);
        differences.push(linalg::opnorm(&(m1 - m2)));
    }

    let logs: Vec<f64> = differences.iter().map(|d| d.max(1e-300).ln()).collect();
    let slope = least_squares_slope(&im_sqrt, &logs);
    let width = x1 - x0;
    let normalized: Vec<f64> = differences
        .iter()
        .zip(&im_sqrt)
        .map(|(d, k)| d * (2.0 * width * k).exp())
        .collect();
    let pass_slope = slope <= -2.0 * width * 0.9;
    let floor = 1e-13 * (1.0 + normalized[0]);
    let pass_bounded = normalized
        .iter()
        .all(|&v| v <= 10.0 * normalized[0].max(floor));
    Ok(LocalityReport {
        window: (x0, x1),
        im_sqrt,
        differences,
        slope,
        normalized,
        pass_slope,
        pass_bounded,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        var += (x - mx) * (x - mx);
    }
    cov / var
}
