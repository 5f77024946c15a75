//! Adaptive Runge-Kutta propagation for complex matrix-valued states.
//!
//! An embedded Dormand-Prince 5(4) pair with FSAL, a PI-free elementary
//! step controller, and an observer hook on accepted steps. The state is a
//! dense complex matrix of any shape; the right-hand side writes its value
//! into a caller-provided buffer so the stepping loop performs no
//! allocation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Integrator tolerances and budgets, exposed on the CLI as
/// `--rtol`, `--atol`, `--max-steps`.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Accepted solutions with norm beyond this bound abort the run.
    pub max_norm: f64,
    /// Initial step size; estimated from the data when `None`.
    pub initial_step: Option<f64>,
    /// Cap `h · ‖f‖ ≤ cap · (1 + ‖y‖)` so fast norm growth is resolved
    /// step by step instead of being hopped over (pole honesty for the
    /// Riccati flow).
    pub max_relative_step: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 50_000_000,
            max_norm: 1e300,
            initial_step: None,
            max_relative_step: None,
        }
    }
}

impl StepControl {
    pub fn with_max_norm(mut self, max_norm: f64) -> Self {
        self.max_norm = max_norm;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }
}

/// One accepted step, handed to observers. Derivative values at both ends
/// allow cubic Hermite reconstruction inside the step.
pub struct Step<'a> {
    pub x0: f64,
    pub x1: f64,
    pub y0: &'a CMatrix,
    pub y1: &'a CMatrix,
    pub f0: &'a CMatrix,
    pub f1: &'a CMatrix,
}

impl Step<'_> {
    /// Cubic Hermite value at the midpoint of the step.
    pub fn midpoint(&self) -> CMatrix {
        let h = Complex64::new(self.x1 - self.x0, 0.0);
        // y(1/2) = (y0 + y1)/2 + h (f0 - f1)/8
        (self.y0 + self.y1).scale(0.5) + (self.f0 - self.f1) * (h * 0.125)
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b5 - b4, including the FSAL stage.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrate `y' = f(x, y)` from `x0` to `x1` (either direction) and
/// return `y(x1)`.
pub fn integrate<F>(mut rhs: F, x0: f64, x1: f64, y0: &CMatrix, ctrl: &StepControl) -> Result<CMatrix>
where
    F: FnMut(f64, &CMatrix, &mut CMatrix),
{
    integrate_observed(&mut rhs, x0, x1, y0, ctrl, |_: &Step| {})
}

/// As [`integrate`], invoking `observer` after every accepted step.
pub fn integrate_observed<F, O>(
    mut rhs: F,
    x0: f64,
    x1: f64,
    y0: &CMatrix,
    ctrl: &StepControl,
    mut observer: O,
) -> Result<CMatrix>
where
    F: FnMut(f64, &CMatrix, &mut CMatrix),
    O: FnMut(&Step),
{
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0.clone());
    }
    let dir = span.signum();
    let (rows, cols) = y0.shape();

    let mut y = y0.clone();
    let mut y_next = CMatrix::zeros(rows, cols);
    let mut stage = CMatrix::zeros(rows, cols);
    let mut err = CMatrix::zeros(rows, cols);
    let mut k: Vec<CMatrix> = (0..7).map(|_| CMatrix::zeros(rows, cols)).collect();

    let mut x = x0;
    rhs(x, &y, &mut k[0]);

    let mut h = match ctrl.initial_step {
        Some(h0) => h0.abs() * dir,
        None => initial_step_guess(&y, &k[0], span, ctrl) * dir,
    };

    let mut steps = 0usize;
    loop {
        if (x - x1) * dir >= 0.0 {
            return Ok(y);
        }
        if steps >= ctrl.max_steps {
            return Err(Error::MaxStepsExceeded {
                x,
                max_steps: ctrl.max_steps,
            });
        }
        steps += 1;

        // Clamp onto the endpoint.
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        if let Some(cap) = ctrl.max_relative_step {
            let f_norm = k[0].norm();
            if f_norm > 0.0 {
                let bound = cap * (1.0 + y.norm()) / f_norm;
                if h.abs() > bound {
                    h = bound * dir;
                }
            }
        }
        if h.abs() < 8.0 * f64::EPSILON * (1.0 + x.abs()) {
            return Err(Error::StepUnderflow { x });
        }

        // Stages 2..6.
        let hc = Complex64::new(h, 0.0);
        stage_combine(&mut stage, &y, &k, &A2, hc);
        rhs(x + C[1] * h, &stage, &mut k[1]);
        stage_combine(&mut stage, &y, &k, &A3, hc);
        rhs(x + C[2] * h, &stage, &mut k[2]);
        stage_combine(&mut stage, &y, &k, &A4, hc);
        rhs(x + C[3] * h, &stage, &mut k[3]);
        stage_combine(&mut stage, &y, &k, &A5, hc);
        rhs(x + C[4] * h, &stage, &mut k[4]);
        stage_combine(&mut stage, &y, &k, &A6, hc);
        rhs(x + C[5] * h, &stage, &mut k[5]);

        // 5th-order solution, then the FSAL stage at (x + h, y_next).
        stage_combine(&mut y_next, &y, &k, &B5, hc);
        rhs(x + h, &y_next, &mut k[6]);

        // Embedded error estimate.
        err.fill(Complex64::new(0.0, 0.0));
        for (ki, &ei) in k.iter().zip(E.iter()) {
            if ei != 0.0 {
                crate::linalg::maxpy(hc * ei, ki, &mut err);
            }
        }
        let scale_err = weighted_error(&err, &y, &y_next, ctrl);

        if scale_err <= 1.0 {
            // Accept.
            let x_new = x + h;
            {
                let step = Step {
                    x0: x,
                    x1: x_new,
                    y0: &y,
                    y1: &y_next,
                    f0: &k[0],
                    f1: &k[6],
                };
                observer(&step);
            }
            std::mem::swap(&mut y, &mut y_next);
            k.swap(0, 6); // FSAL
            x = x_new;

            let norm = y.norm();
            if !norm.is_finite() || norm > ctrl.max_norm {
                return Err(Error::Blowup {
                    x,
                    limit: ctrl.max_norm,
                    advice: "reduce the interval or switch charts",
                });
            }
        }

        // Step-size update, accepted or not.
        let factor = if scale_err == 0.0 {
            5.0
        } else {
            (0.9 * scale_err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
}

fn stage_combine(out: &mut CMatrix, y: &CMatrix, k: &[CMatrix], coeffs: &[f64], h: Complex64) {
    out.copy_from(y);
    for (ki, &aij) in k.iter().zip(coeffs.iter()) {
        if aij != 0.0 {
            crate::linalg::maxpy(h * aij, ki, out);
        }
    }
}

fn weighted_error(err: &CMatrix, y0: &CMatrix, y1: &CMatrix, ctrl: &StepControl) -> f64 {
    let n = err.len() as f64;
    let mut acc = 0.0;
    for i in 0..err.len() {
        let sc = ctrl.atol + ctrl.rtol * y0[i].norm().max(y1[i].norm());
        let r = err[i].norm() / sc;
        acc += r * r;
    }
    (acc / n).sqrt()
}

fn initial_step_guess(y0: &CMatrix, f0: &CMatrix, span: f64, _ctrl: &StepControl) -> f64 {
    let d0 = y0.norm();
    let d1 = f0.norm();
    let h = if d0 > 1e-8 && d1 > 1e-8 {
        0.01 * d0 / d1
    } else {
        span.abs() / 100.0
    };
    h.max(1e-12 * span.abs()).min(span.abs())
}
