//! Cayley-type transform between M-matrices and disk coordinates, the
//! quadratic contraction flow, its rescaled and limiting variants, and
//! the explicit free solution with its stationary point.
//!
//! The transform `ϑ = (isI - M)(isI + M)^{-1}`, `s = |z|^{1/2}`, maps the
//! matrix Herglotz half-space `Im M > 0` into the unit ball
//! `ϑ*ϑ < I`. Along solutions of the Riccati equation `ϑ` obeys the flow
//!
//! `ϑ' = (i/2) [ s (I - ϑ)² - s^{-1} (I + ϑ)(zI - Q(x))(I + ϑ) ]`,
//!
//! which stays inside the closed ball for disk members — the numerically
//! safe chart when the fundamental system would grow exponentially.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE};
use crate::ode::{integrate_observed, Step, StepControl};
use crate::potential::PotentialModel;

/// A spectral parameter in the open upper half-plane with its polar data
/// and the square root on the `Im > 0` branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorPoint {
    pub z: Complex64,
    pub modulus: f64,
    /// `arg z ∈ (0, π)`.
    pub delta: f64,
    /// Principal root; `Im sqrt_z > 0`.
    pub sqrt_z: Complex64,
}

impl SectorPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::SpectralDomain {
                z,
                reason: "Im z > 0 required",
            });
        }
        Ok(SectorPoint {
            z,
            modulus: z.norm(),
            delta: z.arg(),
            sqrt_z: z.sqrt(),
        })
    }

    /// Construct from polar data `z = modulus · e^{i delta}`.
    pub fn from_polar(modulus: f64, delta: f64) -> Result<Self> {
        SectorPoint::new(Complex64::from_polar(modulus, delta))
    }

    /// The Cayley scale `s = |z|^{1/2}`.
    pub fn scale(&self) -> f64 {
        self.modulus.sqrt()
    }

    /// Whether `delta` lies in the closed sector `[eps, π - eps]`.
    pub fn in_sector(&self, eps: f64) -> bool {
        self.delta >= eps && self.delta <= std::f64::consts::PI - eps
    }
}

/// Cayley image `ϑ = (isI - M)(isI + M)^{-1}`.
pub fn to_disk(m: &CMatrix, s: f64) -> Result<CMatrix> {
    linalg::ensure_finite(m)?;
    let dim = m.nrows();
    let is = Complex64::new(0.0, s);
    let num = linalg::identity(dim) * is - m;
    let den = linalg::identity(dim) * is + m;
    linalg::right_divide(&num, &den, "isI + M in the Cayley transform")
}

/// Inverse transform `M = is (I - ϑ)(I + ϑ)^{-1}`.
pub fn from_disk(theta: &CMatrix, s: f64) -> Result<CMatrix> {
    linalg::ensure_finite(theta)?;
    let dim = theta.nrows();
    let num = linalg::identity(dim) - theta;
    let den = linalg::identity(dim) + theta;
    let ratio = linalg::right_divide(&num, &den, "I + theta in the inverse Cayley transform")?;
    Ok(ratio * Complex64::new(0.0, s))
}

/// The limiting contraction constant `C(δ) = (1 - e^{iδ/2})/(1 + e^{iδ/2})`.
///
/// Equals `-i tan(δ/4)`; strictly inside the unit disk for `δ ∈ (0, π)`
/// and `-i` on the closed edge `δ = π`.
pub fn limit_constant(delta: f64) -> Result<Complex64> {
    if !(delta > 0.0 && delta <= std::f64::consts::PI) {
        return Err(Error::OutsideSector {
            angle: delta,
            lo: 0.0,
            hi: std::f64::consts::PI,
        });
    }
    let e = Complex64::new(0.0, delta / 2.0).exp();
    Ok((ONE - e) / (ONE + e))
}

pub(crate) struct ThetaRhs<'a> {
    z: Complex64,
    s: f64,
    pot: &'a PotentialModel,
    plus: CMatrix,
    minus: CMatrix,
    tmp: CMatrix,
}

impl<'a> ThetaRhs<'a> {
    pub(crate) fn new(z: Complex64, pot: &'a PotentialModel) -> Self {
        let m = pot.dim();
        ThetaRhs {
            z,
            s: z.norm().sqrt(),
            pot,
            plus: CMatrix::zeros(m, m),
            minus: CMatrix::zeros(m, m),
            tmp: CMatrix::zeros(m, m),
        }
    }

    pub(crate) fn eval(&mut self, x: f64, y: &CMatrix, out: &mut CMatrix) {
        let m = y.nrows();
        let half_i = Complex64::new(0.0, 0.5);
        self.plus.copy_from(y);
        self.minus.copy_from(y);
        self.minus.neg_mut();
        for i in 0..m {
            self.plus[(i, i)] += ONE;
            self.minus[(i, i)] += ONE;
        }
        // shifted = zI - Q(x), reusing `out` as scratch
        let q = self.pot.q(x);
        out.copy_from(&q);
        out.neg_mut();
        for i in 0..m {
            out[(i, i)] += self.z;
        }
        // tmp = (zI - Q)(I + ϑ)
        self.tmp.gemm(ONE, out, &self.plus, Complex64::new(0.0, 0.0));
        // out = -(i/2) s^{-1} (I + ϑ) tmp
        out.gemm(
            -half_i / self.s,
            &self.plus,
            &self.tmp,
            Complex64::new(0.0, 0.0),
        );
        // tmp = (I - ϑ)², out += (i/2) s tmp
        self.tmp
            .gemm(ONE, &self.minus, &self.minus, Complex64::new(0.0, 0.0));
        crate::linalg::maxpy(half_i * self.s, &self.tmp, out);
    }
}

/// A dense contraction-flow trajectory on the accepted-step grid.
#[derive(Debug, Clone)]
pub struct ThetaTrajectory {
    pub xs: Vec<f64>,
    pub thetas: Vec<CMatrix>,
    pub max_contraction_defect: f64,
}

impl ThetaTrajectory {
    pub fn last(&self) -> &CMatrix {
        self.thetas.last().expect("trajectory is non-empty")
    }
}

/// Integrate the contraction flow from `(x0, theta0)` to `c`, recording
/// the trajectory and the largest contraction defect seen on the grid.
pub fn theta_flow(
    z: &SectorPoint,
    theta0: &CMatrix,
    pot: &PotentialModel,
    x0: f64,
    c: f64,
    ctrl: &StepControl,
) -> Result<ThetaTrajectory> {
    linalg::ensure_finite(theta0)?;
    let mut traj = ThetaTrajectory {
        xs: vec![x0],
        thetas: vec![theta0.clone()],
        max_contraction_defect: linalg::contraction_defect(theta0)?,
    };
    let mut rhs = ThetaRhs::new(z.z, pot);
    let ctrl = ctrl.with_max_norm(1e6);
    let final_theta = integrate_observed(
        |x, y, out| rhs.eval(x, y, out),
        x0,
        c,
        theta0,
        &ctrl,
        |s: &Step| {
            let defect = linalg::contraction_defect(s.y1).unwrap_or(f64::INFINITY);
            traj.max_contraction_defect = traj.max_contraction_defect.max(defect);
            traj.xs.push(s.x1);
            traj.thetas.push(s.y1.clone());
        },
    )?;
    debug_assert!((traj.last() - &final_theta).norm() < 1e-12);
    Ok(traj)
}

/// Flow endpoint only (either direction), with the largest contraction
/// defect observed along the way. Used for the stable extraction chart
/// and for membership checks on long intervals.
pub(crate) fn theta_flow_final(
    z: Complex64,
    theta0: &CMatrix,
    pot: &PotentialModel,
    x_from: f64,
    x_to: f64,
    ctrl: &StepControl,
) -> Result<(CMatrix, f64)> {
    let mut rhs = ThetaRhs::new(z, pot);
    let mut max_defect = linalg::contraction_defect(theta0)?;
    let ctrl = ctrl.with_max_norm(1e6);
    let final_theta = integrate_observed(
        |x, y, out| rhs.eval(x, y, out),
        x_from,
        x_to,
        theta0,
        &ctrl,
        |s: &Step| {
            let defect = linalg::contraction_defect(s.y1).unwrap_or(f64::INFINITY);
            if defect > max_defect {
                max_defect = defect;
            }
        },
    )?;
    Ok((final_theta, max_defect))
}

/// The explicit solution of the rescaled flow for `Q = 0`, evaluated at
/// time `t` for initial data `φ(0) = (isI - M0)(isI + M0)^{-1}`.
///
/// The exponential factor is arranged on the decaying side for `t ≥ 0`,
/// so the evaluation stays finite for arbitrarily large `t`.
pub fn explicit_phi(z: &SectorPoint, t: f64, m0: &CMatrix) -> Result<CMatrix> {
    linalg::ensure_finite(m0)?;
    let dim = m0.nrows();
    let s = z.scale();
    let zh = z.sqrt_z;
    let a = Complex64::new(0.0, s);
    let b = Complex64::new(0.0, 1.0) * zh;
    let p = m0 + linalg::identity(dim) * b; // M0 + i z^{1/2} I
    let q = m0 - linalg::identity(dim) * b; // M0 - i z^{1/2} I

    // exp(-2 i t e^{iδ/2}) with e^{iδ/2} = sqrt(z)/s
    let arg = Complex64::new(0.0, -2.0 * t) * (zh / s);
    // Whichever side carries the exponential is kept on the decaying
    // branch. Once that factor underflows the value has reached its
    // t → ∞ limit: the stationary constant for Weyl initial data, the
    // exit point (a+b)/(a-b) otherwise.
    let (num, den) = if arg.re <= 0.0 {
        let e = arg.exp();
        (&p * -(a - b) + &q * ((a + b) * e), &p * -(a + b) + &q * ((a - b) * e))
    } else {
        let e = (-arg).exp();
        if e.norm() < 1e-150 {
            if linalg::opnorm(&q) < 1e-12 * (1.0 + linalg::opnorm(m0)) {
                let c = limit_constant(z.delta)?;
                return Ok(linalg::identity(dim) * c);
            }
            (&q * (a + b), &q * (a - b))
        } else {
            (&p * (-(a - b) * e) + &q * (a + b), &p * (-(a + b) * e) + &q * (a - b))
        }
    };
    linalg::right_divide(&num, &den, "explicit solution denominator")
}

/// Debug integrator for the rescaled flow
/// `φ'(t) = (i/2)[(I - φ)² - |z|^{-1}(I + φ)(zI - Q̂(t))(I + φ)]`,
/// `Q̂(t) = Q(x0 + t |z|^{-1/2})`.
pub fn rescaled_flow(
    z: &SectorPoint,
    phi0: &CMatrix,
    pot: &PotentialModel,
    x0: f64,
    t_end: f64,
    ctrl: &StepControl,
) -> Result<CMatrix> {
    linalg::ensure_finite(phi0)?;
    let m = phi0.nrows();
    let zz = z.z;
    let mod_inv = 1.0 / z.modulus;
    let s_inv = 1.0 / z.scale();
    let ctrl = ctrl.with_max_norm(1e6);
    crate::ode::integrate(
        |t, y, out| {
            let half_i = Complex64::new(0.0, 0.5);
            let mut plus = y.clone();
            let mut minus = -y.clone();
            for i in 0..m {
                plus[(i, i)] += ONE;
                minus[(i, i)] += ONE;
            }
            let mut shifted = -pot.q(x0 + t * s_inv);
            for i in 0..m {
                shifted[(i, i)] += zz;
            }
            let inner = &plus * shifted * &plus;
            out.copy_from(&(&minus * &minus));
            *out *= half_i;
            crate::linalg::maxpy(-half_i * mod_inv, &inner, out);
        },
        0.0,
        t_end,
        phi0,
        &ctrl,
    )
}

/// Debug integrator for the constant-coefficient limiting flow
/// `η' = (i/2)[(I - η)² - e^{iδ}(I + η)²]`.
pub fn limiting_flow(delta: f64, eta0: &CMatrix, t_end: f64, ctrl: &StepControl) -> Result<CMatrix> {
    linalg::ensure_finite(eta0)?;
    let m = eta0.nrows();
    let phase = Complex64::new(0.0, delta).exp();
    let ctrl = ctrl.with_max_norm(1e6);
    crate::ode::integrate(
        |_t, y, out| {
            let half_i = Complex64::new(0.0, 0.5);
            let mut plus = y.clone();
            let mut minus = -y.clone();
            for i in 0..m {
                plus[(i, i)] += ONE;
                minus[(i, i)] += ONE;
            }
            out.copy_from(&(&minus * &minus));
            *out *= half_i;
            crate::linalg::maxpy(-half_i * phase, &(&plus * &plus), out);
        },
        0.0,
        t_end,
        eta0,
        &ctrl,
    )
}
