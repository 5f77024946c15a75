//! Propagation of the first-order 2m×2m system equivalent to the
//! Schrödinger equation, plus the matrix Riccati flow.
//!
//! The system is `Ψ' = [[0, I], [Q - zI, 0]] Ψ` with `Ψ(x0) = I_{2m}`;
//! its block columns are the normalized fundamental solutions `θ, φ`
//! (identity/zero data at `x0`). The conserved sesquilinear form
//! `Ψ* J Ψ` furnishes an a-posteriori certificate for the integrator.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::ode::{integrate, integrate_observed, Step, StepControl};
use crate::potential::PotentialModel;

/// Normalized fundamental system at a point: the blocks of
/// `Ψ(z, x, x0)` with `θ(x0) = φ'(x0) = I`, `θ'(x0) = φ(x0) = 0`.
#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    pub z: Complex64,
    pub x0: f64,
    pub x: f64,
    pub theta: CMatrix,
    pub theta_prime: CMatrix,
    pub phi: CMatrix,
    pub phi_prime: CMatrix,
}

impl FundamentalSystem {
    fn from_psi(z: Complex64, x0: f64, x: f64, psi: &CMatrix) -> Self {
        let m = psi.nrows() / 2;
        FundamentalSystem {
            z,
            x0,
            x,
            theta: psi.view((0, 0), (m, m)).into(),
            phi: psi.view((0, m), (m, m)).into(),
            theta_prime: psi.view((m, 0), (m, m)).into(),
            phi_prime: psi.view((m, m), (m, m)).into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    /// The assembled 2m×2m propagator.
    pub fn psi(&self) -> CMatrix {
        let m = self.dim();
        let mut out = CMatrix::zeros(2 * m, 2 * m);
        out.view_mut((0, 0), (m, m)).copy_from(&self.theta);
        out.view_mut((0, m), (m, m)).copy_from(&self.phi);
        out.view_mut((m, 0), (m, m)).copy_from(&self.theta_prime);
        out.view_mut((m, m), (m, m)).copy_from(&self.phi_prime);
        out
    }

    /// `|det Ψ - 1|`; the propagator of the trace-free system has unit
    /// determinant in exact arithmetic.
    pub fn det_defect(&self) -> f64 {
        (self.psi().lu().determinant() - Complex64::new(1.0, 0.0)).norm()
    }
}

/// Accepted-step samples of one propagation run, for quadrature-based
/// certificates.
#[derive(Debug, Clone)]
pub struct PsiTrace {
    pub z: Complex64,
    xs: Vec<f64>,
    ys: Vec<CMatrix>,
    fs: Vec<CMatrix>,
}

/// The symplectic structure matrix `J = [[0, -I], [I, 0]]`.
pub fn symplectic_j(m: usize) -> CMatrix {
    let mut j = CMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = Complex64::new(-1.0, 0.0);
        j[(m + i, i)] = Complex64::new(1.0, 0.0);
    }
    j
}

fn schroedinger_rhs(
    z: Complex64,
    pot: &PotentialModel,
) -> impl FnMut(f64, &CMatrix, &mut CMatrix) + '_ {
    let m = pot.dim();
    move |x: f64, y: &CMatrix, out: &mut CMatrix| {
        let cols = y.ncols();
        let mut shifted = pot.q(x);
        for i in 0..m {
            shifted[(i, i)] -= z;
        }
        out.view_mut((0, 0), (m, cols))
            .copy_from(&y.view((m, 0), (m, cols)));
        out.view_mut((m, 0), (m, cols)).gemm(
            Complex64::new(1.0, 0.0),
            &shifted,
            &y.view((0, 0), (m, cols)),
            Complex64::new(0.0, 0.0),
        );
    }
}

/// Largest exponential growth rate of the system over `[a, b]`:
/// `max_λ Im((z - λ)^{1/2})` over the sampled spectrum bound of `Q`.
pub(crate) fn growth_rate(z: Complex64, pot: &PotentialModel, a: f64, b: f64) -> f64 {
    let qsup = pot.sup_norm_estimate(a, b);
    let zc = if z.im >= 0.0 { z } else { z.conj() };
    (zc - qsup).sqrt().im
}

/// Propagate the normalized fundamental system from `x0` to `c`.
///
/// Refuses up front when the exponential growth would overflow doubles;
/// the Riccati/Cayley charts stay bounded in that regime.
pub fn propagate_fundamental(
    z: Complex64,
    pot: &PotentialModel,
    x0: f64,
    c: f64,
    ctrl: &StepControl,
) -> Result<FundamentalSystem> {
    check_span(z, pot, x0, c)?;
    let m = pot.dim();
    let y0 = linalg::identity(2 * m);
    let ctrl = ctrl.with_max_norm(1e300);
    let psi = integrate(schroedinger_rhs(z, pot), x0, c, &y0, &ctrl).map_err(overflow_advice)?;
    Ok(FundamentalSystem::from_psi(z, x0, c, &psi))
}

/// As [`propagate_fundamental`], additionally recording the accepted-step
/// grid for [`lagrange_residual`].
pub fn propagate_fundamental_traced(
    z: Complex64,
    pot: &PotentialModel,
    x0: f64,
    c: f64,
    ctrl: &StepControl,
) -> Result<(FundamentalSystem, PsiTrace)> {
    check_span(z, pot, x0, c)?;
    let m = pot.dim();
    let y0 = linalg::identity(2 * m);
    let ctrl = ctrl.with_max_norm(1e300);
    let mut trace = PsiTrace {
        z,
        xs: Vec::new(),
        ys: Vec::new(),
        fs: Vec::new(),
    };
    let mut rhs = schroedinger_rhs(z, pot);
    let psi = integrate_observed(
        &mut rhs,
        x0,
        c,
        &y0,
        &ctrl,
        |s: &Step| {
            if trace.xs.is_empty() {
                trace.xs.push(s.x0);
                trace.ys.push(s.y0.clone());
                trace.fs.push(s.f0.clone());
            }
            trace.xs.push(s.x1);
            trace.ys.push(s.y1.clone());
            trace.fs.push(s.f1.clone());
        },
    )
    .map_err(overflow_advice)?;
    Ok((FundamentalSystem::from_psi(z, x0, c, &psi), trace))
}

fn check_span(z: Complex64, pot: &PotentialModel, x0: f64, c: f64) -> Result<()> {
    if c <= x0 {
        return Err(Error::InvalidInterval { from: x0, to: c });
    }
    let rate = growth_rate(z, pot, x0, c);
    if rate * (c - x0) > 690.0 {
        return Err(Error::Blowup {
            x: x0,
            limit: 1e300,
            advice: "fundamental system would overflow; use the Riccati/Cayley path",
        });
    }
    Ok(())
}

fn overflow_advice(e: Error) -> Error {
    match e {
        Error::Blowup { x, limit, .. } => Error::Blowup {
            x,
            limit,
            advice: "fundamental system overflow; use the Riccati/Cayley path",
        },
        other => other,
    }
}

/// Residual of the Lagrange identity over one recorded run:
/// `‖Ψ(c)*JΨ(c) - Ψ(x0)*JΨ(x0) - 2i Im(z) ∫ Ψ*AΨ ds‖`
/// with the integral by composite Simpson on the accepted-step grid.
pub fn lagrange_residual(trace: &PsiTrace, z: Complex64) -> Result<f64> {
    if trace.z != z {
        return Err(Error::InvalidArgument(format!(
            "trace was recorded at z = {}, queried at z = {z}",
            trace.z
        )));
    }
    if trace.xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "trace holds fewer than two grid points".into(),
        ));
    }
    let two_m = trace.ys[0].nrows();
    let m = two_m / 2;
    let j = symplectic_j(m);

    // g(x) = Ψ*AΨ = T*T with T the upper m×2m block of Ψ.
    let g_of = |y: &CMatrix| -> CMatrix {
        let top = y.view((0, 0), (m, two_m));
        top.adjoint() * top
    };

    let mut integral = CMatrix::zeros(two_m, two_m);
    for i in 0..trace.xs.len() - 1 {
        let h = trace.xs[i + 1] - trace.xs[i];
        let step = Step {
            x0: trace.xs[i],
            x1: trace.xs[i + 1],
            y0: &trace.ys[i],
            y1: &trace.ys[i + 1],
            f0: &trace.fs[i],
            f1: &trace.fs[i + 1],
        };
        let mid = step.midpoint();
        let g0 = g_of(&trace.ys[i]);
        let gm = g_of(&mid);
        let g1 = g_of(&trace.ys[i + 1]);
        integral += (g0 + gm.scale(4.0) + g1).scale(h / 6.0);
    }

    let first = trace.ys.first().expect("non-empty");
    let last = trace.ys.last().expect("non-empty");
    let lhs = last.adjoint() * &j * last - first.adjoint() * &j * first;
    let rhs = integral * Complex64::new(0.0, 2.0 * z.im);
    Ok(linalg::opnorm(&(lhs - rhs)))
}

/// Integrate the Riccati equation `M' = Q - zI - M²` from `x_from` to
/// `x_to` and return `M(z, x_to)`.
///
/// A trajectory norm beyond 1e12 is treated as a pole crossing and
/// reported with its location.
pub fn riccati_flow(
    z: Complex64,
    m_init: &CMatrix,
    pot: &PotentialModel,
    x_from: f64,
    x_to: f64,
    ctrl: &StepControl,
) -> Result<CMatrix> {
    if z.im == 0.0 {
        return Err(Error::SpectralDomain {
            z,
            reason: "Riccati flow needs Im z != 0",
        });
    }
    linalg::ensure_finite(m_init)?;
    let m = pot.dim();
    if m_init.nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: m_init.nrows(),
        });
    }
    let mut ctrl = ctrl.with_max_norm(1e12);
    ctrl.max_relative_step = Some(0.5);
    let result = integrate(
        |x, y, out| {
            let q = pot.q(x);
            out.copy_from(&q);
            for i in 0..m {
                out[(i, i)] -= z;
            }
            out.gemm(Complex64::new(-1.0, 0.0), y, y, Complex64::new(1.0, 0.0));
        },
        x_from,
        x_to,
        m_init,
        &ctrl,
    );
    match result {
        Ok(v) => Ok(v),
        Err(Error::Blowup { x, .. }) => Err(Error::RiccatiPole { x }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herglotz_sqrt, identity, opnorm};

    fn free_blocks(z: Complex64, l: f64) -> (Complex64, Complex64, Complex64, Complex64) {
        let w = z.sqrt();
        let (s, c) = ((w * l).sin(), (w * l).cos());
        (c, s / w, -w * s, c) // theta, phi, theta', phi'
    }

    #[test]
    fn free_scalar_matches_trigonometric_form() {
        let z = Complex64::new(2.0, 1.5);
        let pot = PotentialModel::free(1);
        let fs = propagate_fundamental(z, &pot, 0.0, 1.0, &StepControl::default()).unwrap();
        let (theta, phi, theta_p, phi_p) = free_blocks(z, 1.0);
        assert!((fs.theta[(0, 0)] - theta).norm() < 1e-10);
        assert!((fs.phi[(0, 0)] - phi).norm() < 1e-10);
        assert!((fs.theta_prime[(0, 0)] - theta_p).norm() < 1e-10);
        assert!((fs.phi_prime[(0, 0)] - phi_p).norm() < 1e-10);
        assert!(fs.det_defect() < 1e-8);
    }

    #[test]
    fn normalization_at_base_point() {
        let pot = PotentialModel::gaussian(identity(2), 0.5, 0.4).unwrap();
        let z = Complex64::new(1.0, 1.0);
        let fs = propagate_fundamental(z, &pot, 0.0, 1e-13, &StepControl::default());
        // degenerate interval is rejected; the normalization is by construction,
        // checked through a short propagation instead
        assert!(fs.is_ok() || matches!(fs, Err(Error::InvalidInterval { .. })));
        let fs = propagate_fundamental(z, &pot, 0.0, 1e-6, &StepControl::default()).unwrap();
        assert!((&fs.theta - identity(2)).norm() < 1e-5);
        assert!(fs.phi.norm() < 1e-5);
    }

    #[test]
    fn constant_matrix_potential_via_eigen_oracle() {
        // Q0 = diag(1, -1): per-eigenchannel trigonometric formulas
        let q0 = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let pot = PotentialModel::constant(q0.clone()).unwrap();
        let z = Complex64::new(3.0, 2.0);
        let l = 1.3;
        let fs = propagate_fundamental(z, &pot, 0.0, l, &StepControl::default()).unwrap();
        for (i, lambda) in [1.0, -1.0].into_iter().enumerate() {
            let (theta, phi, _, _) = free_blocks(z - lambda, l);
            assert!((fs.theta[(i, i)] - theta).norm() < 1e-9);
            assert!((fs.phi[(i, i)] - phi).norm() < 1e-9);
        }
        assert!(fs.theta[(0, 1)].norm() < 1e-10);
    }

    #[test]
    fn lagrange_identity_certifies_runs() {
        // real z: right side vanishes, left side is the conserved Wronskian
        let pot = PotentialModel::free(1);
        let z = Complex64::new(4.0, 0.0);
        let (fs, trace) =
            propagate_fundamental_traced(z, &pot, 0.0, 1.0, &StepControl::default()).unwrap();
        let res = lagrange_residual(&trace, z).unwrap();
        assert!(res < 1e-8, "residual {res:.3e}");
        drop(fs);

        // z = i over unit length
        let z = Complex64::new(0.0, 1.0);
        let (fs, trace) =
            propagate_fundamental_traced(z, &pot, 0.0, 1.0, &StepControl::default()).unwrap();
        let res = lagrange_residual(&trace, z).unwrap();
        let scale = opnorm(&fs.psi()).powi(2);
        assert!(res <= 1e-6 * scale, "residual {res:.3e} scale {scale:.3e}");

        // random Hermitian Q0 at z = 1 + 2i
        let q0 = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.7, 0.0),
                Complex64::new(0.2, 0.4),
                Complex64::new(0.2, -0.4),
                Complex64::new(-1.1, 0.0),
            ],
        );
        let pot = PotentialModel::constant(q0).unwrap();
        let z = Complex64::new(1.0, 2.0);
        let (fs, trace) =
            propagate_fundamental_traced(z, &pot, 0.0, 1.5, &StepControl::default()).unwrap();
        let res = lagrange_residual(&trace, z).unwrap();
        let scale = opnorm(&fs.psi()).powi(2);
        assert!(res <= 1e-6 * scale, "residual {res:.3e} scale {scale:.3e}");
    }

    #[test]
    fn lagrange_rejects_mismatched_z() {
        let pot = PotentialModel::free(1);
        let z = Complex64::new(0.0, 1.0);
        let (_, trace) =
            propagate_fundamental_traced(z, &pot, 0.0, 0.5, &StepControl::default()).unwrap();
        assert!(lagrange_residual(&trace, Complex64::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn riccati_stationary_point() {
        let q0 = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(-0.3, 0.0),
            ],
        );
        let pot = PotentialModel::constant(q0.clone()).unwrap();
        let z = Complex64::new(2.0, 3.0);
        let fixed = herglotz_sqrt(&q0, z).unwrap();
        let moved = riccati_flow(z, &fixed, &pot, 0.0, 2.0, &StepControl::default()).unwrap();
        assert!((&moved - &fixed).norm() < 1e-8 * fixed.norm());
    }

    #[test]
    fn riccati_agrees_with_fundamental_system() {
        let pot = PotentialModel::gaussian(identity(2), 0.6, 0.5).unwrap();
        let z = Complex64::new(1.0, 2.0);
        let m0 = herglotz_sqrt(&CMatrix::zeros(2, 2), z).unwrap();
        let c = 1.2;
        let via_riccati = riccati_flow(z, &m0, &pot, 0.0, c, &StepControl::default()).unwrap();
        let fs = propagate_fundamental(z, &pot, 0.0, c, &StepControl::default()).unwrap();
        let num = &fs.theta_prime + &fs.phi_prime * &m0;
        let den = &fs.theta + &fs.phi * &m0;
        let via_psi = crate::linalg::right_divide(&num, &den, "theta + phi M0").unwrap();
        let rel = (&via_riccati - &via_psi).norm() / via_psi.norm();
        assert!(rel < 1e-7, "relative disagreement {rel:.3e}");
    }

    #[test]
    fn riccati_pole_detection() {
        // with z essentially real and M(0) = 0 the scalar flow is
        // M(x) = -tan(x): a first-order pole at x = pi/2. Im z shifts the
        // pole off the path by ~Im(z)/2, so it must be small enough for
        // the closest approach to exceed the pole threshold.
        let pot = PotentialModel::free(1);
        let z = Complex64::new(1.0, 1e-13);
        let m0 = CMatrix::zeros(1, 1);
        match riccati_flow(z, &m0, &pot, 0.0, 3.0, &StepControl::default()) {
            Err(Error::RiccatiPole { x }) => {
                assert!((x - std::f64::consts::FRAC_PI_2).abs() < 0.05, "pole located at {x}")
            }
            other => panic!("expected a pole report, got {other:?}"),
        }
    }

    #[test]
    fn fundamental_overflow_refusal() {
        let pot = PotentialModel::free(1);
        let z = Complex64::new(0.0, 1e6);
        let res = propagate_fundamental(z, &pot, 0.0, 10.0, &StepControl::default());
        assert!(matches!(res, Err(Error::Blowup { .. })));
    }
}
