//! Boundary data, the regular Weyl-Titchmarsh M-function, Riccati-disk
//! membership, and the limit-point extraction of `M_+(z, x0)`.
//!
//! The regular M-function at horizon `c` is
//! `M(z, c, x0, β) = -(βΦ)^{-1}(βΘ)` for admissible boundary data
//! `β = [β1 β2]`. As `c` grows the values sweep nested matrix disks whose
//! intersection is the half-line M-matrix (one point in the limit-point
//! case). Two charts compute the same object: the fundamental system
//! directly, and — once exponential growth would swamp it — the bounded
//! Cayley contraction flow integrated backward from the horizon.

use num_complex::Complex64;
use rand::Rng;

use crate::cayley::{self, SectorPoint};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::ode::StepControl;
use crate::potential::PotentialModel;
use crate::propagate::{growth_rate, propagate_fundamental};

/// Sign classification of `Im(β2 β1*)` for boundary data `β = [β1 β2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    Positive,
    Negative,
    SelfAdjoint,
}

/// Admissible boundary data: `rank [β1 β2] = m` and `Im(β2 β1*)` of
/// definite sign or zero.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    beta1: CMatrix,
    beta2: CMatrix,
    sign_class: SignClass,
}

impl BoundaryData {
    pub fn new(beta1: CMatrix, beta2: CMatrix) -> Result<Self> {
        let m = beta1.nrows();
        if beta1.ncols() != m || beta2.nrows() != m || beta2.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: beta2.nrows(),
            });
        }
        linalg::ensure_finite(&beta1)?;
        linalg::ensure_finite(&beta2)?;

        // rank [β1 β2] = m: smallest singular value of the m×2m block
        let mut block = CMatrix::zeros(m, 2 * m);
        block.view_mut((0, 0), (m, m)).copy_from(&beta1);
        block.view_mut((0, m), (m, m)).copy_from(&beta2);
        let sv = block.singular_values();
        if sv.max() <= 0.0 || sv.min() < 1e-10 * sv.max() {
            return Err(Error::InvalidBoundaryData(
                "rank [beta1 beta2] < m within tolerance",
            ));
        }

        let w = linalg::im_part(&(&beta2 * beta1.adjoint()));
        let scale = 1.0 + linalg::opnorm(&beta1) * linalg::opnorm(&beta2);
        let sign_class = if linalg::opnorm(&w) <= 1e-12 * scale {
            SignClass::SelfAdjoint
        } else {
            let eig = linalg::hermitian_eigenvalues(&w);
            let (lo, hi) = (eig[0], eig[eig.len() - 1]);
            if lo > 0.0 {
                SignClass::Positive
            } else if hi < 0.0 {
                SignClass::Negative
            } else {
                return Err(Error::InvalidBoundaryData(
                    "Im(beta2 beta1*) is indefinite",
                ));
            }
        };
        Ok(BoundaryData {
            beta1,
            beta2,
            sign_class,
        })
    }

    /// Dirichlet data `β = [I 0]` (self-adjoint class).
    pub fn dirichlet(m: usize) -> Self {
        BoundaryData {
            beta1: linalg::identity(m),
            beta2: CMatrix::zeros(m, m),
            sign_class: SignClass::SelfAdjoint,
        }
    }

    /// Neumann data `β = [0 I]` (self-adjoint class).
    pub fn neumann(m: usize) -> Self {
        BoundaryData {
            beta1: CMatrix::zeros(m, m),
            beta2: linalg::identity(m),
            sign_class: SignClass::SelfAdjoint,
        }
    }

    /// Self-adjoint family `β = [cos A, sin A]` for Hermitian `A`.
    pub fn selfadjoint_family(a: &CMatrix) -> Result<Self> {
        BoundaryData::new(linalg::hermitian_cos(a)?, linalg::hermitian_sin(a)?)
    }

    /// Random data in the positive class: `β1 = I`, `β2 = S + iP` with `S`
    /// Hermitian and `P` positive definite.
    pub fn sample_positive<R: Rng>(m: usize, rng: &mut R) -> Self {
        let s = random_hermitian(m, rng);
        let g = random_complex(m, rng);
        let p = &g * g.adjoint() + linalg::identity(m).scale(0.25);
        let beta2 = s + p * Complex64::new(0.0, 1.0);
        BoundaryData::new(linalg::identity(m), beta2).expect("constructed data is admissible")
    }

    /// Random data in the self-adjoint class via `[cos A, sin A]`.
    pub fn sample_selfadjoint<R: Rng>(m: usize, rng: &mut R) -> Self {
        let a = random_hermitian(m, rng);
        BoundaryData::selfadjoint_family(&a).expect("Hermitian angle is admissible")
    }

    pub fn sign_class(&self) -> SignClass {
        self.sign_class
    }

    pub fn beta1(&self) -> &CMatrix {
        &self.beta1
    }

    pub fn beta2(&self) -> &CMatrix {
        &self.beta2
    }

    pub fn dim(&self) -> usize {
        self.beta1.nrows()
    }

    /// `β1 T + β2 B` for stacked blocks `[T; B]`.
    fn apply(&self, top: &CMatrix, bottom: &CMatrix) -> CMatrix {
        &self.beta1 * top + &self.beta2 * bottom
    }

    /// Orthonormal basis `[N1; N2]` of `ker β ⊂ C^{2m}`.
    fn kernel_basis(&self) -> (CMatrix, CMatrix) {
        let m = self.dim();
        let mut block = CMatrix::zeros(m, 2 * m);
        block.view_mut((0, 0), (m, m)).copy_from(&self.beta1);
        block.view_mut((0, m), (m, m)).copy_from(&self.beta2);
        let gram = block.adjoint() * &block;
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..2 * m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut basis = CMatrix::zeros(2 * m, m);
        for (col, &idx) in order.iter().take(m).enumerate() {
            basis.column_mut(col).copy_from(&eig.eigenvectors.column(idx));
        }
        (
            basis.view((0, 0), (m, m)).into(),
            basis.view((m, 0), (m, m)).into(),
        )
    }
}

fn random_hermitian<R: Rng>(m: usize, rng: &mut R) -> CMatrix {
    let g = random_complex(m, rng);
    (&g + g.adjoint()).scale(0.5)
}

fn random_complex<R: Rng>(m: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(m, m, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// One sampled point of a Weyl disk with its Cayley image and the largest
/// contraction defect seen along the flow to the horizon.
#[derive(Debug, Clone)]
pub struct DiskSample {
    pub z: Complex64,
    pub c: f64,
    pub x0: f64,
    pub m: CMatrix,
    pub theta_cayley: CMatrix,
    pub max_contraction_defect: f64,
}

fn check_domain(z: Complex64, class: SignClass) -> Result<()> {
    let ok = match class {
        SignClass::Positive => z.im >= 0.0,
        SignClass::Negative => z.im <= 0.0,
        SignClass::SelfAdjoint => z.im != 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::SpectralDomain {
            z,
            reason: "z outside the well-definedness half-plane for this boundary class",
        })
    }
}

/// Beyond this accumulated growth exponent the fundamental-system chart
/// is abandoned for the bounded contraction flow.
const CHART_SWITCH_EXPONENT: f64 = 12.0;

/// The regular M-function `M(z, c, x0, β) = -(βΦ)^{-1}(βΘ)`.
///
/// Dispatches between the fundamental-system chart and the backward
/// contraction flow according to the expected exponential growth. For
/// `Im z > 0` and a boundary class with `Im(β2β1*) ⪰ 0` the Herglotz
/// property `Im M > 0` is certified on the result.
pub fn regular_m(
    z: Complex64,
    c: f64,
    x0: f64,
    pot: &PotentialModel,
    beta: &BoundaryData,
    ctrl: &StepControl,
) -> Result<CMatrix> {
    check_domain(z, beta.sign_class())?;
    if c <= x0 {
        return Err(Error::InvalidInterval { from: x0, to: c });
    }
    if beta.dim() != pot.dim() {
        return Err(Error::DimensionMismatch {
            expected: pot.dim(),
            found: beta.dim(),
        });
    }

    let growth = growth_rate(z, pot, x0, c) * (c - x0);
    let m_mat = if z.im > 0.0 && growth > CHART_SWITCH_EXPONENT {
        regular_m_via_contraction(z, c, x0, pot, beta, ctrl)?
    } else {
        let fs = propagate_fundamental(z, pot, x0, c, ctrl)?;
        let b_phi = beta.apply(&fs.phi, &fs.phi_prime);
        let b_theta = beta.apply(&fs.theta, &fs.theta_prime);
        -linalg::left_divide(&b_phi, &b_theta, "beta Phi (eigenvalue of the regular problem?)")?
    };

    if z.im > 0.0 && beta.sign_class() != SignClass::Negative {
        let defect = linalg::psd_defect(&linalg::im_part(&m_mat), 1e-6)?;
        let tol = 1e-8 * (1.0 + linalg::opnorm(&m_mat));
        if defect > tol {
            return Err(Error::HerglotzViolation { defect, tol });
        }
    }
    Ok(m_mat)
}

/// Stable chart: seed the contraction variable at the horizon from the
/// boundary condition (`ϑ(c) = (N1 + i s^{-1} N2)(N1 - i s^{-1} N2)^{-1}`
/// for a kernel basis `[N1; N2]` of `β`) and flow backward to `x0`.
fn regular_m_via_contraction(
    z: Complex64,
    c: f64,
    x0: f64,
    pot: &PotentialModel,
    beta: &BoundaryData,
    ctrl: &StepControl,
) -> Result<CMatrix> {
    let s = z.norm().sqrt();
    let (n1, n2) = beta.kernel_basis();
    let is_inv = Complex64::new(0.0, 1.0 / s);
    let num = &n1 + &n2 * is_inv;
    let den = &n1 - &n2 * is_inv;
    let theta_c = linalg::right_divide(&num, &den, "horizon boundary value of the contraction chart")?;
    let (theta_x0, _) = cayley::theta_flow_final(z, &theta_c, pot, c, x0, ctrl)?;
    cayley::from_disk(&theta_x0, s)
}

/// Riccati-disk membership: flows the Cayley image of `m_cand` from `x0`
/// to `c` and returns the largest contraction defect over the accepted
/// grid. A defect within tolerance certifies membership at horizon `c`;
/// a diverging flow is reported as `+∞`.
pub fn disk_membership(
    m_cand: &CMatrix,
    z: Complex64,
    c: f64,
    x0: f64,
    pot: &PotentialModel,
    ctrl: &StepControl,
) -> Result<f64> {
    let sector = SectorPoint::new(z)?;
    let im_defect = linalg::psd_defect(&linalg::im_part(m_cand), 1e-6)?;
    let tol = 1e-8 * (1.0 + linalg::opnorm(m_cand));
    if im_defect > tol {
        return Err(Error::HerglotzViolation {
            defect: im_defect,
            tol,
        });
    }
    let theta0 = cayley::to_disk(m_cand, sector.scale())?;
    match cayley::theta_flow_final(z, &theta0, pot, x0, c, ctrl) {
        Ok((_, max_defect)) => Ok(max_defect),
        Err(Error::Blowup { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// As [`disk_membership`], returning the full sample record.
pub fn disk_sample(
    m_cand: &CMatrix,
    z: Complex64,
    c: f64,
    x0: f64,
    pot: &PotentialModel,
    ctrl: &StepControl,
) -> Result<DiskSample> {
    let sector = SectorPoint::new(z)?;
    let theta0 = cayley::to_disk(m_cand, sector.scale())?;
    let defect = disk_membership(m_cand, z, c, x0, pot, ctrl)?;
    Ok(DiskSample {
        z,
        c,
        x0,
        m: m_cand.clone(),
        theta_cayley: theta0,
        max_contraction_defect: defect,
    })
}

/// Options for the horizon-doubling limit extraction.
#[derive(Debug, Clone, Copy)]
pub struct LimitOptions {
    /// Relative Cauchy threshold on successive horizon values.
    pub rtol: f64,
    /// First horizon length `L0`; horizons are `x0 + L0 · 2^k`.
    pub initial_length: f64,
    /// Largest allowed horizon length.
    pub max_length: f64,
    /// Probe a second boundary condition at the final horizon and flag
    /// limit-circle behaviour when the two limits disagree.
    pub detect_limit_circle: bool,
    pub step: StepControl,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            rtol: 1e-8,
            initial_length: 1.0,
            max_length: 64.0,
            detect_limit_circle: true,
            step: StepControl::default(),
        }
    }
}

impl LimitOptions {
    pub fn with_max_length(mut self, max_length: f64) -> Self {
        self.max_length = max_length;
        self
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn without_limit_circle_probe(mut self) -> Self {
        self.detect_limit_circle = false;
        self
    }
}

/// Result of the limit extraction with its convergence diagnostics.
#[derive(Debug, Clone)]
pub struct LimitM {
    /// The extracted `M_+(z, x0)` (Dirichlet route).
    pub m: CMatrix,
    /// Norm of the last horizon-to-horizon increment.
    pub error_estimate: f64,
    /// `(horizon, increment)` pairs in the order visited.
    pub history: Vec<(f64, f64)>,
    /// Set when a second boundary condition converged to a different
    /// point: the operator looks limit-circle and both disk points are
    /// reported.
    pub second_point: Option<CMatrix>,
}

impl LimitM {
    pub fn limit_circle_suspected(&self) -> bool {
        self.second_point.is_some()
    }
}

/// Extract `M_+(z, x0)` as the limit of regular M-functions over doubling
/// horizons with Dirichlet data.
pub fn limit_m(
    z: Complex64,
    x0: f64,
    pot: &PotentialModel,
    opts: &LimitOptions,
) -> Result<LimitM> {
    if !(z.im > 0.0) {
        return Err(Error::SpectralDomain {
            z,
            reason: "limit extraction needs Im z > 0",
        });
    }
    let dirichlet = BoundaryData::dirichlet(pot.dim());
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut length = opts.initial_length;
    let mut prev: Option<CMatrix> = None;

    while length <= opts.max_length {
        let c = x0 + length;
        // Integration noise accumulates with the horizon (local errors
        // decay only at the slow spectral rate along the flow), so the
        // per-horizon tolerance tightens as the ladder extends; otherwise
        // the Cauchy increments floor above the stopping threshold.
        let step = {
            let shrink = (opts.initial_length / length).sqrt().min(1.0);
            let mut s = opts.step;
            s.rtol *= shrink;
            s.atol *= shrink;
            s
        };
        let current = regular_m(z, c, x0, pot, &dirichlet, &step)?;
        if let Some(p) = prev {
            let increment = linalg::opnorm(&(&current - &p));
            history.push((c, increment));
            if increment <= opts.rtol * (1.0 + linalg::opnorm(&current)) {
                let second_point = if opts.detect_limit_circle {
                    probe_limit_circle(z, c, x0, pot, &current, opts)?
                } else {
                    None
                };
                return Ok(LimitM {
                    m: current,
                    error_estimate: increment,
                    history,
                    second_point,
                });
            }
        }
        prev = Some(current);
        length *= 2.0;
    }
    Err(Error::NoConvergence {
        context: "horizon-doubling limit extraction hit the horizon cap",
        history,
    })
}

fn probe_limit_circle(
    z: Complex64,
    c: f64,
    x0: f64,
    pot: &PotentialModel,
    dirichlet_limit: &CMatrix,
    opts: &LimitOptions,
) -> Result<Option<CMatrix>> {
    let neumann = BoundaryData::neumann(pot.dim());
    let other = regular_m(z, c, x0, pot, &neumann, &opts.step)?;
    let gap = linalg::opnorm(&(&other - dirichlet_limit));
    if gap > 10.0 * opts.rtol * (1.0 + linalg::opnorm(dirichlet_limit)) {
        Ok(Some(other))
    } else {
        Ok(None)
    }
}

/// The left half-line M-matrix `M_-(z, x0) = -M~_+(z, x0)` computed from
/// the reflected potential `Q~(y) = Q(2 x0 - y)`.
pub fn mirror_m_minus(
    z: Complex64,
    x0: f64,
    pot: &PotentialModel,
    opts: &LimitOptions,
) -> Result<LimitM> {
    let reflected = pot.reflected(x0);
    let mut res = limit_m(z, x0, &reflected, opts)?;
    res.m = -res.m;
    res.second_point = res.second_point.map(|p| -p);
    Ok(res)
}
