//! Formal noncommutative polynomials in the symbols `Q, Q', Q'', …`.
//!
//! The expansion coefficients are polynomials in the potential and its
//! derivatives with dyadic complex coefficients; representing them
//! symbolically makes differentiation exact, keeps the factor order of
//! the noncommutative products, and lets identities be checked at the
//! symbol level rather than numerically.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{identity, CMatrix};

/// A word in the alphabet of derivative orders: `[0, 2]` is `Q Q''`.
pub type Word = Vec<u8>;

/// Polynomial with complex coefficients over noncommuting words.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NcPoly {
    terms: BTreeMap<Word, Complex64>,
}

impl NcPoly {
    pub fn zero() -> Self {
        NcPoly::default()
    }

    /// Constant multiple of the empty word (the identity matrix).
    pub fn constant(c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(Vec::new(), c);
        }
        NcPoly { terms }
    }

    /// The single symbol `Q^{(order)}`.
    pub fn symbol(order: u8) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![order], Complex64::new(1.0, 0.0));
        NcPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &NcPoly) -> NcPoly {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            insert_term(&mut out.terms, w.clone(), *c);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> NcPoly {
        if c == Complex64::new(0.0, 0.0) {
            return NcPoly::zero();
        }
        NcPoly {
            terms: self.terms.iter().map(|(w, v)| (w.clone(), v * c)).collect(),
        }
    }

    /// Noncommutative product: words concatenate in order.
    pub fn mul(&self, other: &NcPoly) -> NcPoly {
        let mut terms = BTreeMap::new();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                insert_term(&mut terms, w, ca * cb);
            }
        }
        NcPoly { terms }
    }

    /// Exact derivative via the product rule: each letter is bumped once.
    pub fn derivative(&self) -> NcPoly {
        let mut terms = BTreeMap::new();
        for (w, c) in &self.terms {
            for pos in 0..w.len() {
                let mut bumped = w.clone();
                bumped[pos] += 1;
                insert_term(&mut terms, bumped, *c);
            }
        }
        NcPoly { terms }
    }

    /// Substitute `Q^{(j)} -> (-1)^j Q^{(j)}`, the effect of reflecting
    /// the potential about the evaluation point.
    pub fn parity_flip(&self) -> NcPoly {
        NcPoly {
            terms: self
                .terms
                .iter()
                .map(|(w, c)| {
                    let total: u32 = w.iter().map(|&l| l as u32).sum();
                    let sign = if total.is_multiple_of(2) { 1.0 } else { -1.0 };
                    (w.clone(), c * sign)
                })
                .collect(),
        }
    }

    /// Highest derivative order appearing in any word.
    pub fn max_derivative_order(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|w| w.iter())
            .map(|&l| l as usize)
            .max()
            .unwrap_or(0)
    }

    /// Evaluate at matrices `derivs[j] = Q^{(j)}(x)`.
    pub fn eval(&self, derivs: &[CMatrix], dim: usize) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(dim, dim);
        for (w, c) in &self.terms {
            let mut prod = identity(dim) * *c;
            for &letter in w {
                let d = derivs.get(letter as usize).ok_or(Error::InsufficientSmoothness {
                    required: letter as usize,
                    available: derivs.len().saturating_sub(1),
                })?;
                prod *= d;
            }
            out += prod;
        }
        Ok(out)
    }
}

fn insert_term(terms: &mut BTreeMap<Word, Complex64>, w: Word, c: Complex64) {
    use std::collections::btree_map::Entry;
    match terms.entry(w) {
        Entry::Vacant(e) => {
            if c != Complex64::new(0.0, 0.0) {
                e.insert(c);
            }
        }
        Entry::Occupied(mut e) => {
            let v = *e.get() + c;
            if v == Complex64::new(0.0, 0.0) {
                e.remove();
            } else {
                *e.get_mut() = v;
            }
        }
    }
}

/// The coefficient polynomials `m_1 … m_n` of the high-energy expansion,
/// from the exact recursion
/// `m_1 = Q/(2i)`, `m_{k+1} = (i/2)(m_k' + Σ_{ℓ=1}^{k-1} m_ℓ m_{k-ℓ})`.
pub fn m_coeff_polys(n: usize) -> Vec<NcPoly> {
    let mut polys: Vec<NcPoly> = Vec::with_capacity(n);
    if n == 0 {
        return polys;
    }
    let half_i = Complex64::new(0.0, 0.5);
    polys.push(NcPoly::symbol(0).scale(-half_i)); // Q/(2i) = -(i/2) Q
    for k in 1..n {
        let mut acc = polys[k - 1].derivative();
        for l in 1..k {
            acc = acc.add(&polys[l - 1].mul(&polys[k - 1 - l]));
        }
        polys.push(acc.scale(half_i));
    }
    polys
}

/// Coefficients of `M' + M² - Q + zI` for the partial sum of order `n`,
/// per power `z^{-j/2}`, `j = 0 … n-1`. Every entry must be the zero
/// polynomial: the recursion is exactly the cancellation condition.
pub fn riccati_residual_polys(n: usize) -> Vec<(usize, NcPoly)> {
    let m = m_coeff_polys(n);
    let two_i = Complex64::new(0.0, 2.0);
    let mut out = Vec::new();
    for j in 0..n {
        // m_j' + 2i m_{j+1} + Σ_{ℓ=1}^{j-1} m_ℓ m_{j-ℓ}  (m_0' term absent, j=0 row is 2i m_1 - Q)
        let mut acc = if j == 0 {
            NcPoly::symbol(0).scale(Complex64::new(-1.0, 0.0))
        } else {
            m[j - 1].derivative()
        };
        acc = acc.add(&m[j].scale(two_i));
        for l in 1..j {
            acc = acc.add(&m[l - 1].mul(&m[j - 1 - l]));
        }
        out.push((j, acc));
    }
    out
}

/// Symbolic series data for the diagonal Green's matrix expansion.
pub struct GreenPolys {
    /// `G_0 … G_n` in the normalization `G(z) = (i/2) Σ G_k z^{-k-1/2}`.
    pub coeffs: Vec<NcPoly>,
    /// Coefficients of the integer powers `z^{-1}, z^{-2}, …` of
    /// `(M_- - M_+)^{-1}`; all must vanish identically.
    pub integer_power_residues: Vec<NcPoly>,
}

/// Formal inverse of the difference series `M_- - M_+`, where the minus
/// series comes from the plus series by reflection
/// (`m_{-,k} = -(parity flip of m_{+,k})`).
pub fn green_coeff_polys(n: usize) -> GreenPolys {
    // d = M_- - M_+ = -2i z^{1/2} - Σ_k (m~_k + m_k) z^{-k/2}
    let order = if n == 0 { 0 } else { 2 * n };
    let m = m_coeff_polys(order);
    let mut d: Vec<NcPoly> = Vec::with_capacity(order + 1); // d[j] ~ z^{-j/2}, j >= 1
    for k in 1..=order {
        d.push(m[k - 1].parity_flip().add(&m[k - 1]).scale(Complex64::new(-1.0, 0.0)));
    }
    let d_lead = Complex64::new(0.0, -2.0); // coefficient of z^{1/2}

    // g = d^{-1} = Σ_{t>=1} g_t z^{-t/2}: convolution against d gives
    // g_1 = 1/d_lead, g_{t+1} = -(1/d_lead) Σ_{j=1}^{t-1} d_j g_{t-j}.
    let t_max = 2 * n + 1;
    let mut g: Vec<NcPoly> = vec![NcPoly::zero(); t_max + 1]; // index by t
    if t_max >= 1 {
        g[1] = NcPoly::constant(Complex64::new(1.0, 0.0) / d_lead);
    }
    for t in 1..t_max {
        let mut acc = NcPoly::zero();
        for j in 1..t {
            if j <= d.len() && !d[j - 1].is_zero() {
                acc = acc.add(&d[j - 1].mul(&g[t - j]));
            }
        }
        g[t + 1] = acc.scale(Complex64::new(-1.0, 0.0) / d_lead);
    }

    let half_i_inv = Complex64::new(0.0, -2.0); // 1 / (i/2)
    let coeffs = (0..=n).map(|k| g[2 * k + 1].scale(half_i_inv)).collect();
    let integer_power_residues = (1..=n).map(|k| g[2 * k].clone()).collect();
    GreenPolys {
        coeffs,
        integer_power_residues,
    }
}
