//! Hermitian matrices and the trace scalar product.
//!
//! `HermMat` is the universal numeric value of this crate: masses of matrix
//! measures, moment values, polynomial coefficients. The scalar product is
//! `⟨X,Y⟩ = tr(XY*)`, under which the matrices `H_jk` built from the matrix
//! units form an orthonormal basis of the real Hilbert space of Hermitian
//! matrices.

use crate::cmat::CMat;
use crate::eig;
use crate::scalar::{creal, czero, real, C, Real};
use crate::LinAlgError;

/// Absolute tolerance for hermiticity validation.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// A q×q complex Hermitian matrix.
#[derive(Clone, PartialEq)]
pub struct HermMat<T: Real> {
    mat: CMat<T>,
}

impl<T: Real> HermMat<T> {
    /// Validates hermiticity (absolute tolerance `1e-12`) and finiteness,
    /// then symmetrizes exactly so that the invariant holds bit-for-bit.
    pub fn new(mat: CMat<T>) -> Result<Self, LinAlgError> {
        if !mat.is_square() {
            return Err(LinAlgError::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        if !mat.all_finite() {
            return Err(LinAlgError::NonFinite);
        }
        let tol = real::<T>(HERMITICITY_TOL);
        let mut worst = T::zero();
        for i in 0..mat.rows() {
            for j in i..mat.cols() {
                let dev = (mat[(i, j)] - mat[(j, i)].conj()).norm();
                if dev > worst {
                    worst = dev;
                }
            }
        }
        if worst > tol {
            return Err(LinAlgError::NotHermitian {
                deviation: worst.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self::symmetrize(mat))
    }

    /// `(A + A*)/2` without a hermiticity check. Internal constructor for
    /// results that are Hermitian in exact arithmetic.
    pub fn symmetrize(mat: CMat<T>) -> Self {
        let n = mat.rows();
        let half = real::<T>(0.5);
        let mut out = CMat::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = creal(mat[(i, i)].re);
            for j in (i + 1)..n {
                let v = (mat[(i, j)] + mat[(j, i)].conj()).scale(half);
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        Self { mat: out }
    }

    pub fn zero(q: usize) -> Self {
        Self {
            mat: CMat::zeros(q, q),
        }
    }

    pub fn identity(q: usize) -> Self {
        Self {
            mat: CMat::identity(q),
        }
    }

    /// Real diagonal matrix.
    pub fn diag(entries: &[T]) -> Self {
        let mut m = CMat::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = creal(x);
        }
        Self { mat: m }
    }

    /// Rank-one matrix `vv*`.
    pub fn rank_one(v: &[C<T>]) -> Self {
        let q = v.len();
        Self {
            mat: CMat::from_fn(q, q, |i, j| v[i] * v[j].conj()),
        }
    }

    /// `U diag(d) U*` for a unitary `U` given by columns.
    pub fn from_spectrum(u: &CMat<T>, d: &[T]) -> Self {
        let q = u.rows();
        assert_eq!(d.len(), q);
        let mut m = CMat::zeros(q, q);
        for (r, &lambda) in d.iter().enumerate() {
            for i in 0..q {
                for j in 0..q {
                    m[(i, j)] += u[(i, r)] * u[(j, r)].conj() * creal(lambda);
                }
            }
        }
        Self::symmetrize(m)
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn as_cmat(&self) -> &CMat<T> {
        &self.mat
    }

    pub fn into_cmat(self) -> CMat<T> {
        self.mat
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.mat[(i, j)]
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: self.mat.add(&other.mat),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: self.mat.sub(&other.mat),
        }
    }

    /// Scaling by a real number keeps hermiticity.
    pub fn scale(&self, s: T) -> Self {
        Self {
            mat: self.mat.scale_re(s),
        }
    }

    pub fn trace(&self) -> T {
        self.mat.trace().re
    }

    pub fn norm_fro(&self) -> T {
        self.mat.norm_fro()
    }

    /// Conjugation `U* A U`.
    pub fn conjugate_by(&self, u: &CMat<T>) -> Self {
        Self::symmetrize(u.adjoint().mul(&self.mat).mul(u))
    }

    /// `AB − BA` as a general complex matrix (anti-Hermitian for Hermitian inputs).
    pub fn commutator(&self, other: &Self) -> CMat<T> {
        let ab = self.mat.mul(&other.mat);
        let ba = other.mat.mul(&self.mat);
        ab.sub(&ba)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        eig::eigh(self).expect("Jacobi eigensolver converges at desk scale").eigenvalues
    }
}

impl<T: Real> std::fmt::Debug for HermMat<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HermMat{:?}", self.mat)
    }
}

/// Trace scalar product `⟨X,Y⟩ = tr(XY*)`, real for Hermitian arguments.
pub fn trace_inner<T: Real>(x: &HermMat<T>, y: &HermMat<T>) -> T {
    assert_eq!(x.dim(), y.dim(), "trace_inner dimension mismatch");
    let mut s = T::zero();
    for i in 0..x.dim() {
        for j in 0..x.dim() {
            // tr(XY*) = Σ_{ij} X_ij conj(Y_ij)
            let a = x.get(i, j);
            let b = y.get(i, j);
            s = s + a.re * b.re + a.im * b.im;
        }
    }
    s
}

/// The orthonormal basis `{H_jk}` of the real Hilbert space of Hermitian
/// q×q matrices:
///
/// ```text
/// H_jk = (e_jk + e_kj)/√2       for j < k,
/// H_jj = e_jj,
/// H_jk = i(e_jk − e_kj)/√2      for j > k.
/// ```
#[derive(Clone, Debug)]
pub struct HjkBasis<T: Real> {
    q: usize,
    elements: Vec<HermMat<T>>,
}

impl<T: Real> HjkBasis<T> {
    pub fn new(q: usize) -> Self {
        let inv_sqrt2 = T::one() / real::<T>(2.0).sqrt();
        let mut elements = Vec::with_capacity(q * q);
        for j in 0..q {
            for k in 0..q {
                let mut m = CMat::zeros(q, q);
                match j.cmp(&k) {
                    std::cmp::Ordering::Less => {
                        m[(j, k)] = creal(inv_sqrt2);
                        m[(k, j)] = creal(inv_sqrt2);
                    }
                    std::cmp::Ordering::Equal => {
                        m[(j, j)] = creal(T::one());
                    }
                    std::cmp::Ordering::Greater => {
                        m[(j, k)] = C::new(T::zero(), inv_sqrt2);
                        m[(k, j)] = C::new(T::zero(), -inv_sqrt2);
                    }
                }
                elements.push(HermMat { mat: m });
            }
        }
        Self { q, elements }
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Basis element `H_jk`, row-major index `j*q + k`.
    pub fn element(&self, j: usize, k: usize) -> &HermMat<T> {
        &self.elements[j * self.q + k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &HermMat<T>> {
        self.elements.iter()
    }

    /// Real coordinates of `a` in this basis.
    pub fn coordinates(&self, a: &HermMat<T>) -> Vec<T> {
        self.elements.iter().map(|h| trace_inner(a, h)).collect()
    }

    /// Matrix with the given coordinates, `Σ c_h H_h`.
    pub fn from_coordinates(&self, coords: &[T]) -> HermMat<T> {
        assert_eq!(coords.len(), self.elements.len());
        let mut m = CMat::zeros(self.q, self.q);
        for (c, h) in coords.iter().zip(&self.elements) {
            m = m.add(&h.mat.scale_re(*c));
        }
        HermMat { mat: m }
    }
}

/// Hermitian part of the Kronecker product of two Hermitian matrices.
pub fn kron_herm<T: Real>(a: &HermMat<T>, b: &HermMat<T>) -> HermMat<T> {
    HermMat::symmetrize(a.as_cmat().kron(b.as_cmat()))
}

/// A complex vector with entries sampled from the given closure, as used by
/// the random rank-one constructions throughout the crate.
pub fn cvec_from_fn<T: Real>(q: usize, mut f: impl FnMut() -> T) -> Vec<C<T>> {
    (0..q).map(|_| C::new(f(), f())).collect()
}

/// Zero complex vector helper used by tests.
pub fn czero_vec<T: Real>(q: usize) -> Vec<C<T>> {
    vec![czero(); q]
}
