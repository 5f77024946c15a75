//! Potential models `Q(x)`: Hermitian matrix coefficients with derivative
//! access up to a declared order, optional compact support, and the
//! reflection used to build left half-line mirrors.
//!
//! Derivatives are supplied analytically by the constructors and
//! spot-checked against central finite differences; they are never
//! produced by numerical differentiation at use sites, because the
//! coefficient recursion consumes exact derivatives.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, opnorm, CMatrix};

/// Sentinel for "derivatives of every order available".
pub const SMOOTH: usize = usize::MAX;

trait Kernel: Send + Sync {
    fn dim(&self) -> usize;
    fn smoothness_order(&self) -> usize;
    fn support_hint(&self) -> Option<(f64, f64)>;
    /// `k`-th derivative at `x`; only called with `k <= smoothness_order`.
    fn eval(&self, x: f64, k: usize) -> CMatrix;
}

/// A potential `Q(x)` satisfying the basic half-line hypothesis
/// (Hermitian, locally integrable), immutable and cheap to clone.
#[derive(Clone)]
pub struct PotentialModel {
    inner: Arc<dyn Kernel>,
}

impl std::fmt::Debug for PotentialModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialModel")
            .field("dim", &self.dim())
            .field("smoothness_order", &self.smoothness_order())
            .field("support_hint", &self.support_hint())
            .finish()
    }
}

impl PotentialModel {
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Highest derivative order the model can evaluate.
    pub fn smoothness_order(&self) -> usize {
        self.inner.smoothness_order()
    }

    /// Interval outside which the potential vanishes identically, if known.
    pub fn support_hint(&self) -> Option<(f64, f64)> {
        self.inner.support_hint()
    }

    /// The potential value `Q(x)`.
    pub fn q(&self, x: f64) -> CMatrix {
        self.inner.eval(x, 0)
    }

    /// The `k`-th derivative `Q^{(k)}(x)`.
    pub fn derivative(&self, x: f64, k: usize) -> Result<CMatrix> {
        if k > self.smoothness_order() {
            return Err(Error::InsufficientSmoothness {
                required: k,
                available: self.smoothness_order(),
            });
        }
        Ok(self.inner.eval(x, k))
    }

    /// Constant potential `Q(x) = Q0` with derivatives of every order.
    pub fn constant(q0: CMatrix) -> Result<Self> {
        ensure_hermitian_value(&q0)?;
        Ok(PotentialModel {
            inner: Arc::new(Constant { q0 }),
        })
    }

    /// The free potential `Q = 0` of dimension `m`.
    pub fn free(m: usize) -> Self {
        PotentialModel::constant(CMatrix::zeros(m, m)).expect("zero matrix is Hermitian")
    }

    /// Truncation of `base` to the closed interval `[from, to]`; zero
    /// outside. Values at the cut points are the interior values, matching
    /// the right-Lebesgue-point convention at the left cut. Derivative
    /// queries inside the closed support return the interior derivatives.
    pub fn truncated(base: &PotentialModel, from: f64, to: f64) -> Result<Self> {
        if !(from < to) {
            return Err(Error::InvalidInterval { from, to });
        }
        Ok(PotentialModel {
            inner: Arc::new(Truncated {
                base: base.clone(),
                from,
                to,
            }),
        })
    }

    /// Potential from closures supplying all derivatives analytically.
    ///
    /// The first two derivative closures (when declared) are spot-checked
    /// against central finite differences of the value at a handful of
    /// points; a mismatch beyond 1e-6 relative rejects the model.
    pub fn smooth<F>(dim: usize, smoothness_order: usize, eval: F) -> Result<Self>
    where
        F: Fn(f64, usize) -> CMatrix + Send + Sync + 'static,
    {
        let model = PotentialModel {
            inner: Arc::new(Smooth {
                dim,
                smoothness_order,
                eval: Box::new(eval),
            }),
        };
        model.check_consistency()?;
        Ok(model)
    }

    /// Scalar (m = 1) potential from complex-valued closures.
    pub fn scalar<F>(smoothness_order: usize, eval: F) -> Result<Self>
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        PotentialModel::smooth(1, smoothness_order, move |x, k| {
            CMatrix::from_element(1, 1, Complex64::new(eval(x, k), 0.0))
        })
    }

    /// Gaussian bump `Q(x) = A exp(-((x-center)/width)^2)` with exact
    /// derivatives through the Hermite recurrence.
    pub fn gaussian(amplitude: CMatrix, center: f64, width: f64) -> Result<Self> {
        ensure_hermitian_value(&amplitude)?;
        if !(width > 0.0) || !width.is_finite() || !center.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gaussian potential needs finite center and width > 0 (got center {center}, width {width})"
            )));
        }
        Ok(PotentialModel {
            inner: Arc::new(Gaussian {
                amplitude,
                center,
                width,
            }),
        })
    }

    /// Piecewise-constant potential; value on each closed piece `[from, to]`
    /// is the given matrix, zero outside all pieces. Earlier pieces win at
    /// shared endpoints.
    pub fn piecewise_constant(pieces: Vec<(f64, f64, CMatrix)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument(
                "piecewise potential needs at least one piece".into(),
            ));
        }
        let dim = pieces[0].2.nrows();
        for (from, to, q) in &pieces {
            if !(from < to) {
                return Err(Error::InvalidInterval { from: *from, to: *to });
            }
            if q.nrows() != dim || q.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: q.nrows(),
                });
            }
            ensure_hermitian_value(q)?;
        }
        let lo = pieces.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = pieces.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        Ok(PotentialModel {
            inner: Arc::new(Piecewise {
                dim,
                pieces,
                support: (lo, hi),
            }),
        })
    }

    /// Reflection about `x0`: `Q~(y) = Q(2 x0 - y)`, so
    /// `Q~^{(k)}(y) = (-1)^k Q^{(k)}(2 x0 - y)`.
    pub fn reflected(&self, x0: f64) -> Self {
        PotentialModel {
            inner: Arc::new(Reflected {
                base: self.clone(),
                x0,
            }),
        }
    }

    /// Sampled estimate of `sup ||Q||` on `[a, b]`, used to pick the
    /// propagation chart.
    pub fn sup_norm_estimate(&self, a: f64, b: f64) -> f64 {
        let n = 33;
        let mut sup: f64 = 0.0;
        for i in 0..n {
            let x = a + (b - a) * (i as f64) / ((n - 1) as f64);
            sup = sup.max(opnorm(&self.q(x)));
        }
        sup
    }

    fn check_consistency(&self) -> Result<()> {
        let sample = [0.0, 0.37, -0.61, 1.25, -1.83];
        for &x in &sample {
            let q = self.q(x);
            ensure_hermitian_value(&q)?;
        }
        let h = 1e-4;
        for k in 1..=self.smoothness_order().min(2) {
            for &x in &sample {
                let analytic = self.inner.eval(x, k);
                let plus = self.inner.eval(x + h, k - 1);
                let minus = self.inner.eval(x - h, k - 1);
                let fd = (plus - minus).scale(0.5 / h);
                let scale = 1.0 + opnorm(&analytic);
                let rel = opnorm(&(&fd - &analytic)) / scale;
                if rel > 1e-6 {
                    return Err(Error::DerivativeMismatch { x, rel });
                }
            }
        }
        Ok(())
    }
}

fn ensure_hermitian_value(q: &CMatrix) -> Result<()> {
    crate::linalg::ensure_finite(q)?;
    let defect = hermiticity_defect(q);
    let tol = 1e-12 * (1.0 + opnorm(q));
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    Ok(())
}

struct Constant {
    q0: CMatrix,
}

impl Kernel for Constant {
    fn dim(&self) -> usize {
        self.q0.nrows()
    }
    fn smoothness_order(&self) -> usize {
        SMOOTH
    }
    fn support_hint(&self) -> Option<(f64, f64)> {
        None
    }
    fn eval(&self, _x: f64, k: usize) -> CMatrix {
        if k == 0 {
            self.q0.clone()
        } else {
            CMatrix::zeros(self.dim(), self.dim())
        }
    }
}

struct Truncated {
    base: PotentialModel,
    from: f64,
    to: f64,
}

impl Kernel for Truncated {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn smoothness_order(&self) -> usize {
        self.base.smoothness_order()
    }
    fn support_hint(&self) -> Option<(f64, f64)> {
        Some((self.from, self.to))
    }
    fn eval(&self, x: f64, k: usize) -> CMatrix {
        if x >= self.from && x <= self.to {
            self.base.inner.eval(x, k)
        } else {
            CMatrix::zeros(self.dim(), self.dim())
        }
    }
}

struct Smooth {
    dim: usize,
    smoothness_order: usize,
    #[allow(clippy::type_complexity)]
    eval: Box<dyn Fn(f64, usize) -> CMatrix + Send + Sync>,
}

impl Kernel for Smooth {
    fn dim(&self) -> usize {
        self.dim
    }
    fn smoothness_order(&self) -> usize {
        self.smoothness_order
    }
    fn support_hint(&self) -> Option<(f64, f64)> {
        None
    }
    fn eval(&self, x: f64, k: usize) -> CMatrix {
        (self.eval)(x, k)
    }
}

struct Gaussian {
    amplitude: CMatrix,
    center: f64,
    width: f64,
}

impl Kernel for Gaussian {
    fn dim(&self) -> usize {
        self.amplitude.nrows()
    }
    fn smoothness_order(&self) -> usize {
        SMOOTH
    }
    fn support_hint(&self) -> Option<(f64, f64)> {
        None
    }
    fn eval(&self, x: f64, k: usize) -> CMatrix {
        let u = (x - self.center) / self.width;
        // d^k/dx^k e^{-u^2} = (-1)^k H_k(u) e^{-u^2} / width^k,
        // H_k the physicists' Hermite polynomials.
        let mut h_prev = 0.0f64;
        let mut h = 1.0f64;
        for n in 0..k {
            let h_next = 2.0 * u * h - 2.0 * (n as f64) * h_prev;
            h_prev = h;
            h = h_next;
        }
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let factor = sign * h * (-u * u).exp() / self.width.powi(k as i32);
        self.amplitude.scale(factor)
    }
}

struct Piecewise {
    dim: usize,
    pieces: Vec<(f64, f64, CMatrix)>,
    support: (f64, f64),
}

impl Kernel for Piecewise {
    fn dim(&self) -> usize {
        self.dim
    }
    fn smoothness_order(&self) -> usize {
        0
    }
    fn support_hint(&self) -> Option<(f64, f64)> {
        Some(self.support)
    }
    fn eval(&self, x: f64, _k: usize) -> CMatrix {
        for (from, to, q) in &self.pieces {
            if x >= *from && x <= *to {
                return q.clone();
            }
        }
        CMatrix::zeros(self.dim, self.dim)
    }
}

struct Reflected {
    base: PotentialModel,
    x0: f64,
}

impl Kernel for Reflected {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn smoothness_order(&self) -> usize {
        self.base.smoothness_order()
    }
    fn support_hint(&self) -> Option<(f64, f64)> {
        self.base
            .support_hint()
            .map(|(a, b)| (2.0 * self.x0 - b, 2.0 * self.x0 - a))
    }
    fn eval(&self, x: f64, k: usize) -> CMatrix {
        let v = self.base.inner.eval(2.0 * self.x0 - x, k);
        if k.is_multiple_of(2) {
            v
        } else {
            -v
        }
    }
}
