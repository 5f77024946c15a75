//! Complex dense-matrix core.
//!
//! Everything downstream works with small (m ≤ 8 in practice) complex
//! matrices. This module supplies the Hermitian machinery the rest of the
//! crate leans on: branch-controlled matrix square roots, positivity and
//! contraction certificates, and functional calculus for Hermitian
//! arguments via unitary diagonalization.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Default relative tolerance for Hermiticity / positivity certificates.
///
/// Sits comfortably below double precision headroom but above the error
/// expected from the adaptive integrators (~1e-8).
pub const DEFAULT_HERM_TOL: f64 = 1e-10;

pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Identity matrix of dimension `m`.
pub fn identity(m: usize) -> CMatrix {
    CMatrix::identity(m, m)
}

/// In-place `out += alpha · x` without allocating.
#[inline]
pub fn maxpy(alpha: Complex64, x: &CMatrix, out: &mut CMatrix) {
    debug_assert_eq!(x.shape(), out.shape());
    for (o, v) in out.iter_mut().zip(x.iter()) {
        *o += alpha * v;
    }
}

/// True if every entry is finite.
pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|e| e.re.is_finite() && e.im.is_finite())
}

pub(crate) fn ensure_finite(m: &CMatrix) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Hermitian part `(M + M*)/2`.
pub fn herm_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Imaginary part in the matrix sense, `Im M = (M - M*)/(2i)`.
pub fn im_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * Complex64::new(0.0, -0.5)
}

/// Real part in the matrix sense, `Re M = (M + M*)/2`.
pub fn re_part(m: &CMatrix) -> CMatrix {
    herm_part(m)
}

/// Operator norm (largest singular value).
pub fn opnorm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Operator-norm distance of `M` from its Hermitian part.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    opnorm(&(m - m.adjoint()))
}

/// Eigenvalue range and Hermiticity defect of a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianCertificate {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub hermiticity_defect: f64,
}

/// Certify a matrix: eigenvalue range of its Hermitian part plus the
/// Hermiticity defect.
pub fn certify_hermitian(m: &CMatrix) -> Result<HermitianCertificate> {
    ensure_finite(m)?;
    let eig = herm_part(m).symmetric_eigen();
    Ok(HermitianCertificate {
        min_eigenvalue: eig.eigenvalues.min(),
        max_eigenvalue: eig.eigenvalues.max(),
        hermiticity_defect: hermiticity_defect(m),
    })
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = herm_part(m).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Apply a scalar function to a Hermitian matrix through its
/// eigendecomposition: `f(Q) = U diag(f(λ_j)) U*`.
pub fn hermitian_fn(q: &CMatrix, tol: f64, f: impl Fn(f64) -> Complex64) -> Result<CMatrix> {
    ensure_finite(q)?;
    let defect = hermiticity_defect(q);
    let scale = 1.0 + opnorm(q);
    if defect > tol * scale {
        return Err(Error::NotHermitian {
            defect,
            tol: tol * scale,
        });
    }
    let eig = herm_part(q).symmetric_eigen();
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(f));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// The square root of the shifted potential on the Herglotz branch:
/// `i (zI - Q0)^{1/2}` with `Im((z - λ)^{1/2}) > 0` in every eigenchannel.
///
/// `zI - Q0` is a shifted Hermitian matrix, so the same unitary
/// diagonalizes it; the scalar roots are taken on the principal branch,
/// which for `Im z > 0` has positive imaginary part. The result `W`
/// satisfies `W² = -(zI - Q0)` and `Im W > 0`.
pub fn herglotz_sqrt(q0: &CMatrix, z: Complex64) -> Result<CMatrix> {
    if z.im <= 0.0 {
        return Err(Error::SpectralDomain {
            z,
            reason: "Im z > 0 required",
        });
    }
    hermitian_fn(q0, DEFAULT_HERM_TOL, |lambda| I * (z - lambda).sqrt())
}

/// Positive-semidefiniteness defect `max(0, -λ_min((H + H*)/2))`.
///
/// Rejects inputs whose Hermiticity defect exceeds `tol` (relative to
/// `1 + ‖H‖`); a return value of zero certifies `H ⪰ 0` within tolerance.
pub fn psd_defect(h: &CMatrix, tol: f64) -> Result<f64> {
    ensure_finite(h)?;
    let defect = hermiticity_defect(h);
    let scale = 1.0 + opnorm(h);
    if defect > tol * scale {
        return Err(Error::NotHermitian {
            defect,
            tol: tol * scale,
        });
    }
    let eig = herm_part(h).symmetric_eigen();
    Ok((-eig.eigenvalues.min()).max(0.0))
}

/// Contraction defect `max(0, λ_max(V*V - I))`; zero certifies `V*V ≤ I`.
pub fn contraction_defect(v: &CMatrix) -> Result<f64> {
    ensure_finite(v)?;
    let m = v.nrows();
    let gram = v.adjoint() * v - identity(m);
    let eig = gram.symmetric_eigen();
    Ok(eig.eigenvalues.max().max(0.0))
}

/// `A B^{-1}` by LU solve, refusing near-singular `B`.
pub fn right_divide(a: &CMatrix, b: &CMatrix, context: &'static str) -> Result<CMatrix> {
    ensure_well_conditioned(b, context)?;
    let lu = b.transpose().lu();
    let x = lu
        .solve(&a.transpose())
        .ok_or(Error::Singular { context })?;
    Ok(x.transpose())
}

/// `A^{-1} B` by LU solve, refusing near-singular `A`.
pub fn left_divide(a: &CMatrix, b: &CMatrix, context: &'static str) -> Result<CMatrix> {
    ensure_well_conditioned(a, context)?;
    let lu = a.clone().lu();
    lu.solve(b).ok_or(Error::Singular { context })
}

/// Matrix inverse with a condition guard.
pub fn inverse(a: &CMatrix, context: &'static str) -> Result<CMatrix> {
    left_divide(a, &identity(a.nrows()), context)
}

/// Condition-number bound used by the singularity guards (spectral norm).
pub const MAX_CONDITION: f64 = 1e14;

fn ensure_well_conditioned(a: &CMatrix, context: &'static str) -> Result<()> {
    ensure_finite(a)?;
    let sv = a.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 0.0 || smax / smin > MAX_CONDITION {
        return Err(Error::Singular { context });
    }
    Ok(())
}

/// Hermitian matrix cosine via the eigendecomposition.
pub fn hermitian_cos(a: &CMatrix) -> Result<CMatrix> {
    hermitian_fn(a, DEFAULT_HERM_TOL, |x| Complex64::new(x.cos(), 0.0))
}

/// Hermitian matrix sine via the eigendecomposition.
pub fn hermitian_sin(a: &CMatrix) -> Result<CMatrix> {
    hermitian_fn(a, DEFAULT_HERM_TOL, |x| Complex64::new(x.sin(), 0.0))
}
