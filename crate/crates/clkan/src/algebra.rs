//! Clifford algebras Cl(p,q,r): signatures, Cayley tables and exact
//! multivector arithmetic.
//!
//! Blades are indexed by bitmask: blade `k` is the ordered product of the
//! generators whose bits are set in `k`, so index 0 is the scalar blade and
//! index `2^n - 1` the pseudoscalar. The geometric product of blades `a` and
//! `b` always lands on blade `a ^ b` with a sign in {-1, 0, +1} that the
//! Cayley table precomputes.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Largest supported n = p+q+r (D = 2^8 = 256 coefficients).
pub const MAX_GENERATORS: u32 = 8;

/// Counts of basis vectors squaring to +1, -1 and 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub p: u32,
    pub q: u32,
    pub r: u32,
}

impl Signature {
    pub fn new(p: u32, q: u32, r: u32) -> Self {
        Self { p, q, r }
    }

    /// Number of generators n = p + q + r.
    pub fn generators(&self) -> u32 {
        self.p + self.q + self.r
    }

    /// Algebra dimension D = 2^n.
    pub fn dim(&self) -> usize {
        1usize << self.generators()
    }

    /// Square of generator `i`: +1 for i < p, -1 for p <= i < p+q, 0 otherwise.
    pub fn generator_square(&self, i: u32) -> i8 {
        if i < self.p {
            1
        } else if i < self.p + self.q {
            -1
        } else {
            0
        }
    }
}

impl core::fmt::Display for Signature {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Cl({},{},{})", self.p, self.q, self.r)
    }
}

/// A general element of a Clifford algebra: one real coefficient per blade,
/// in bit-index blade order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multivector {
    pub coeffs: Vec<f64>,
}

impl Multivector {
    pub fn zero(dim: usize) -> Self {
        Self {
            coeffs: vec![0.0; dim],
        }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Unit scalar blade.
    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut coeffs = vec![0.0; dim];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// Basis blade `e_I` where `I` is the bit set of `blade`.
    pub fn basis(dim: usize, blade: usize) -> Self {
        assert!(blade < dim, "blade index out of range");
        let mut coeffs = vec![0.0; dim];
        coeffs[blade] = 1.0;
        Self { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Euclidean norm of the coefficient vector; coincides with the complex
    /// modulus in Cl(0,1).
    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

/// Euclidean norm of a raw coefficient slice.
#[inline]
pub fn norm(coeffs: &[f64]) -> f64 {
    coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Squared Euclidean distance between two coefficient slices.
#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Cl(p,q,r) with its precomputed Cayley table. Immutable after construction
/// and safe to share across threads; all operations are pure.
#[derive(Debug, Clone)]
pub struct Algebra {
    sig: Signature,
    dim: usize,
    /// sign[a * dim + b] is the sign of e_a * e_b; the product blade is a ^ b.
    sign: Vec<f64>,
    /// 1.0 for blades with a nonzero square under the quadratic form, 0.0 for
    /// null blades (those containing a degenerate generator).
    rbf_mask: Vec<f64>,
}

/// Sign from reordering the concatenated generator list of blades `a`, `b`
/// into canonical order: parity of the number of transpositions.
fn reorder_sign(a: usize, b: usize) -> i8 {
    let mut a = a >> 1;
    let mut swaps = 0u32;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Full blade-product sign: reordering parity times the squares of repeated
/// generators (which may be 0 for degenerate generators).
pub fn blade_sign(sig: &Signature, a: usize, b: usize) -> i8 {
    let mut s = reorder_sign(a, b);
    let mut common = a & b;
    while common != 0 {
        let i = common.trailing_zeros();
        s *= sig.generator_square(i);
        common &= common - 1;
    }
    s
}

impl Algebra {
    /// Builds Cl(p,q,r) with a complete Cayley table. Deterministic for a
    /// given signature.
    pub fn new(sig: Signature) -> Result<Self, Error> {
        let n = sig.generators();
        if n == 0 || n > MAX_GENERATORS {
            return Err(Error::InvalidSignature {
                p: sig.p,
                q: sig.q,
                r: sig.r,
                max: MAX_GENERATORS,
            });
        }
        let dim = sig.dim();
        let mut sign = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                sign[a * dim + b] = blade_sign(&sig, a, b) as f64;
            }
        }
        let rbf_mask = (0..dim)
            .map(|b| if sign[b * dim + b] == 0.0 { 0.0 } else { 1.0 })
            .collect();
        Ok(Self {
            sig,
            dim,
            sign,
            rbf_mask,
        })
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> u32 {
        self.sig.generators()
    }

    /// Sign of the blade product e_a * e_b (the result blade is always a ^ b).
    #[inline]
    pub fn sign(&self, a: usize, b: usize) -> f64 {
        self.sign[a * self.dim + b]
    }

    /// Per-component RBF distance mask: 1.0 for non-null blades, 0.0 for null
    /// ones. Identically all-ones whenever r = 0.
    #[inline]
    pub fn rbf_mask(&self) -> &[f64] {
        &self.rbf_mask
    }

    /// Squared RBF distance: the Euclidean distance restricted to non-null
    /// blade coefficients. For non-degenerate signatures this is the plain
    /// Euclidean coefficient distance. In degenerate algebras the excluded
    /// null components would otherwise inflate every kernel argument, leaving
    /// a width-1 Gaussian near zero across the whole grid and the RBF path
    /// untrainable; restricting to the blades the quadratic form can see
    /// keeps the kernel responsive while staying positive semi-definite.
    #[inline]
    pub fn rbf_dist_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.dim);
        debug_assert_eq!(b.len(), self.dim);
        let mut acc = 0.0;
        for c in 0..self.dim {
            let d = a[c] - b[c];
            acc += self.rbf_mask[c] * d * d;
        }
        acc
    }

    /// Geometric product of two multivectors.
    pub fn gp(&self, a: &Multivector, b: &Multivector) -> Multivector {
        assert_eq!(a.dim(), self.dim, "algebra mismatch");
        assert_eq!(b.dim(), self.dim, "algebra mismatch");
        let mut out = Multivector::zero(self.dim);
        self.gp_acc(&a.coeffs, &b.coeffs, &mut out.coeffs);
        out
    }

    /// out[i ^ j] += sign(i, j) * a[i] * b[j], accumulating into `out`.
    ///
    /// Dispatched to a monomorphized kernel for the common low dimensions so
    /// the blade loops unroll (these run once per edge and sample during
    /// training); the accumulation order is the same on every path.
    #[inline]
    pub fn gp_acc(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        debug_assert!(a.len() == self.dim && b.len() == self.dim && out.len() == self.dim);
        match self.dim {
            1 => self.gp_acc_n::<1>(a, b, out),
            2 => self.gp_acc_n::<2>(a, b, out),
            4 => self.gp_acc_n::<4>(a, b, out),
            8 => self.gp_acc_n::<8>(a, b, out),
            16 => self.gp_acc_n::<16>(a, b, out),
            _ => self.gp_acc_dyn(a, b, out),
        }
    }

    #[inline(always)]
    fn gp_acc_n<const D: usize>(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let sign = &self.sign[..D * D];
        for i in 0..D {
            let ai = a[i];
            let row = &sign[i * D..(i + 1) * D];
            for j in 0..D {
                out[i ^ j] += row[j] * ai * b[j];
            }
        }
    }

    fn gp_acc_dyn(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let ai = a[i];
            if ai == 0.0 {
                continue;
            }
            let row = &self.sign[i * d..(i + 1) * d];
            for j in 0..d {
                out[i ^ j] += row[j] * ai * b[j];
            }
        }
    }

    /// Adjoint of the geometric product in its first argument:
    /// out[i] += sum_j sign(i, j) * b[j] * ybar[i ^ j].
    ///
    /// If c = a * b then this accumulates dL/da given dL/dc = ybar.
    #[inline]
    pub fn gp_adj_a(&self, b: &[f64], ybar: &[f64], out: &mut [f64]) {
        match self.dim {
            1 => self.gp_adj_a_n::<1>(b, ybar, out),
            2 => self.gp_adj_a_n::<2>(b, ybar, out),
            4 => self.gp_adj_a_n::<4>(b, ybar, out),
            8 => self.gp_adj_a_n::<8>(b, ybar, out),
            16 => self.gp_adj_a_n::<16>(b, ybar, out),
            _ => self.gp_adj_a_dyn(b, ybar, out),
        }
    }

    #[inline(always)]
    fn gp_adj_a_n<const D: usize>(&self, b: &[f64], ybar: &[f64], out: &mut [f64]) {
        let sign = &self.sign[..D * D];
        for i in 0..D {
            let row = &sign[i * D..(i + 1) * D];
            let mut acc = 0.0;
            for j in 0..D {
                acc += row[j] * b[j] * ybar[i ^ j];
            }
            out[i] += acc;
        }
    }

    fn gp_adj_a_dyn(&self, b: &[f64], ybar: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.sign[i * d..(i + 1) * d];
            let mut acc = 0.0;
            for j in 0..d {
                acc += row[j] * b[j] * ybar[i ^ j];
            }
            out[i] += acc;
        }
    }

    /// Adjoint of the geometric product in its second argument:
    /// out[j] += sum_i sign(i, j) * a[i] * ybar[i ^ j].
    #[inline]
    pub fn gp_adj_b(&self, a: &[f64], ybar: &[f64], out: &mut [f64]) {
        match self.dim {
            1 => self.gp_adj_b_n::<1>(a, ybar, out),
            2 => self.gp_adj_b_n::<2>(a, ybar, out),
            4 => self.gp_adj_b_n::<4>(a, ybar, out),
            8 => self.gp_adj_b_n::<8>(a, ybar, out),
            16 => self.gp_adj_b_n::<16>(a, ybar, out),
            _ => self.gp_adj_b_dyn(a, ybar, out),
        }
    }

    #[inline(always)]
    fn gp_adj_b_n<const D: usize>(&self, a: &[f64], ybar: &[f64], out: &mut [f64]) {
        let sign = &self.sign[..D * D];
        for i in 0..D {
            let ai = a[i];
            let row = &sign[i * D..(i + 1) * D];
            for j in 0..D {
                out[j] += row[j] * ai * ybar[i ^ j];
            }
        }
    }

    fn gp_adj_b_dyn(&self, a: &[f64], ybar: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let ai = a[i];
            if ai == 0.0 {
                continue;
            }
            let row = &self.sign[i * d..(i + 1) * d];
            for j in 0..d {
                out[j] += row[j] * ai * ybar[i ^ j];
            }
        }
    }

    /// Exact coefficient-wise weighted sum; the empty list is the zero
    /// multivector.
    pub fn linear_combine(&self, terms: &[(f64, &Multivector)]) -> Multivector {
        let mut out = Multivector::zero(self.dim);
        for (w, mv) in terms {
            assert_eq!(mv.dim(), self.dim, "algebra mismatch");
            for (o, c) in out.coeffs.iter_mut().zip(&mv.coeffs) {
                *o += w * c;
            }
        }
        out
    }

    /// Keeps the coefficients whose blade has popcount `grade`, zeroes the
    /// rest.
    pub fn grade_project(&self, a: &Multivector, grade: usize) -> Result<Multivector, Error> {
        assert_eq!(a.dim(), self.dim, "algebra mismatch");
        let n = self.generators() as usize;
        if grade > n {
            return Err(Error::GradeOutOfRange { grade, n });
        }
        let mut out = Multivector::zero(self.dim);
        for (k, &c) in a.coeffs.iter().enumerate() {
            if k.count_ones() as usize == grade {
                out.coeffs[k] = c;
            }
        }
        Ok(out)
    }
}
