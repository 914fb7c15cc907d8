//! Positive maps in Kraus form and the transport of functionals and
//! measures under them.
//!
//! A map `φ(A) = Σ_j V_j* A V_j` (optionally pre-composed with the matrix
//! transpose) sends PSD matrices to PSD matrices. Its adjoint with respect
//! to the trace scalar product is `φ†(B) = Σ_j V_j B V_j*`. Transport acts
//! entrywise on measures (`(φ∘μ)({x}) = φ(μ({x}))`) and valuewise on
//! matrix moment functionals (`(φ∘L)(g) = φ(L(g))`), and the associated
//! functionals satisfy `Λ_{φ∘L} = Λ_L ∘ φ†`.
//!
//! Only Kraus-form (completely positive) maps plus the transpose flag are
//! supported; general positive maps without such a form are out of scope.

use crate::cmat::CMat;
use crate::eig;
use crate::functional::{Atom, AtomicMeasure, MatrixMomentFunctional};
use crate::herm::{kron_herm, trace_inner, HermMat, HjkBasis};
use crate::scalar::{real, Real};
use crate::TransportError;

/// `A ↦ Σ_j V_j* A V_j`, with `V_j : q×p`; `transpose_first` pre-composes
/// with the matrix transpose (reaching the standard non-CP positive
/// examples such as `A ↦ Aᵀ`).
#[derive(Clone, Debug)]
pub struct PositiveMap<T: Real> {
    source: usize,
    target: usize,
    kraus: Vec<CMat<T>>,
    transpose_first: bool,
}

impl<T: Real> PositiveMap<T> {
    pub fn new(
        source: usize,
        target: usize,
        kraus: Vec<CMat<T>>,
        transpose_first: bool,
    ) -> Result<Self, TransportError> {
        for v in &kraus {
            if v.rows() != source || v.cols() != target {
                return Err(TransportError::DimMismatch(format!(
                    "Kraus factor is {}x{}, expected {}x{}",
                    v.rows(),
                    v.cols(),
                    source,
                    target
                )));
            }
        }
        let map = Self {
            source,
            target,
            kraus,
            transpose_first,
        };
        // sanity: PSD test matrices stay PSD
        let mut rng = crate::testutil::rng(0x706f73);
        for _ in 0..10 {
            let a = crate::testutil::random_psd::<T>(source, &mut rng);
            if !eig::psd_check(&map.apply(&a), real(1e-9)) {
                return Err(TransportError::NotPositive);
            }
        }
        Ok(map)
    }

    /// The trace map `A ↦ tr A` (target dimension 1).
    pub fn trace_map(q: usize) -> Self {
        let kraus = (0..q)
            .map(|j| CMat::from_fn(q, 1, |i, _| {
                if i == j {
                    crate::scalar::cone()
                } else {
                    crate::scalar::czero()
                }
            }))
            .collect();
        Self {
            source: q,
            target: 1,
            kraus,
            transpose_first: false,
        }
    }

    /// Compression `A ↦ P_U A P_U` onto the span of the given orthonormal
    /// columns, expressed on the full space.
    pub fn compression(basis_cols: &CMat<T>) -> Self {
        let q = basis_cols.rows();
        // P = Σ u u*; single Kraus factor V = P (Hermitian projection)
        let mut p = CMat::zeros(q, q);
        for c in 0..basis_cols.cols() {
            let u = basis_cols.column(c);
            for i in 0..q {
                for j in 0..q {
                    p[(i, j)] += u[i] * u[j].conj();
                }
            }
        }
        Self {
            source: q,
            target: q,
            kraus: vec![p],
            transpose_first: false,
        }
    }

    pub fn identity(q: usize) -> Self {
        Self {
            source: q,
            target: q,
            kraus: vec![CMat::identity(q)],
            transpose_first: false,
        }
    }

    pub fn source_dim(&self) -> usize {
        self.source
    }

    pub fn target_dim(&self) -> usize {
        self.target
    }

    pub fn kraus(&self) -> &[CMat<T>] {
        &self.kraus
    }

    pub fn transpose_first(&self) -> bool {
        self.transpose_first
    }

    /// Apply to a general complex matrix.
    pub fn apply_cmat(&self, a: &CMat<T>) -> CMat<T> {
        let a = if self.transpose_first {
            a.transpose()
        } else {
            a.clone()
        };
        let mut out = CMat::zeros(self.target, self.target);
        for v in &self.kraus {
            out = out.add(&v.adjoint().mul(&a).mul(v));
        }
        out
    }

    /// Apply to a Hermitian matrix; the result is Hermitian, and PSD
    /// inputs give PSD outputs.
    pub fn apply(&self, a: &HermMat<T>) -> HermMat<T> {
        assert_eq!(a.dim(), self.source, "positive map dimension mismatch");
        HermMat::symmetrize(self.apply_cmat(a.as_cmat()))
    }

    /// The adjoint map: `⟨φ(A),B⟩ = ⟨A,φ†(B)⟩`. For the trace map this is
    /// `b ↦ b·I_q`.
    pub fn adjoint(&self) -> Self {
        let kraus = self
            .kraus
            .iter()
            .map(|v| {
                if self.transpose_first {
                    v.transpose()
                } else {
                    v.adjoint()
                }
            })
            .collect();
        Self {
            source: self.target,
            target: self.source,
            kraus,
            transpose_first: self.transpose_first,
        }
    }
}

/// `φ∘μ`: same atoms, masses `φ(M_j)`.
pub fn pushforward_measure<T: Real>(
    map: &PositiveMap<T>,
    mu: &AtomicMeasure<T>,
) -> AtomicMeasure<T> {
    AtomicMeasure {
        atoms: mu
            .atoms
            .iter()
            .map(|a| Atom {
                point: a.point.clone(),
                mass: eig::psd_project(&map.apply(&a.mass)),
            })
            .collect(),
    }
}

/// `φ∘L`: valuewise transport of a matrix moment functional.
pub fn transport_functional<T: Real>(
    map: &PositiveMap<T>,
    l: &MatrixMomentFunctional<T>,
) -> Result<MatrixMomentFunctional<T>, TransportError> {
    if l.q != map.source {
        return Err(TransportError::DimMismatch(format!(
            "functional dimension {} vs map source {}",
            l.q, map.source
        )));
    }
    MatrixMomentFunctional::new(
        map.target,
        l.values.iter().map(|m| map.apply(m)).collect(),
    )
    .map_err(|_| TransportError::DimMismatch("transported values".into()))
}

/// The tensor extension `L_⊗(F) = Σ_{jk} H_jk ⊗ L(⟨F,H_jk⟩)`, for `F` in
/// the lift of the scalar space given by its coefficient vector
/// (scalar-major, `H_jk` row-major, as produced by `lift_scalar_space`).
pub fn l_otimes<T: Real>(
    l: &MatrixMomentFunctional<T>,
    lift_coeffs: &[T],
) -> Result<HermMat<T>, TransportError> {
    let q = l.q;
    let n = l.values.len();
    if lift_coeffs.len() != n * q * q {
        return Err(TransportError::DimMismatch(format!(
            "coefficient length {} vs {}",
            lift_coeffs.len(),
            n * q * q
        )));
    }
    let hjk = HjkBasis::<T>::new(q);
    let mut out = HermMat::zero(q * q);
    for (h, hmat) in hjk.iter().enumerate() {
        // ⟨F, H_jk⟩ ∈ E has coefficients (γ_{i,h})_i
        let mut lval = HermMat::zero(q);
        for i in 0..n {
            lval = lval.add(&l.values[i].scale(lift_coeffs[i * q * q + h]));
        }
        out = out.add(&kron_herm(hmat, &lval));
    }
    Ok(out)
}

/// `(id ⊗ φ)` on a `q²×q²` matrix seen as a q×q grid of q×q blocks.
pub fn id_otimes<T: Real>(map: &PositiveMap<T>, a: &HermMat<T>) -> Result<HermMat<T>, TransportError> {
    let q = map.source;
    let p = map.target;
    if a.dim() != q * q {
        return Err(TransportError::DimMismatch(format!(
            "tensor operand dimension {} vs q² = {}",
            a.dim(),
            q * q
        )));
    }
    let mut out = CMat::zeros(q * p, q * p);
    for r in 0..q {
        for s in 0..q {
            let block = CMat::from_fn(q, q, |i, j| a.get(r * q + i, s * q + j));
            let tb = map.apply_cmat(&block);
            for i in 0..p {
                for j in 0..p {
                    out[(r * p + i, s * p + j)] = tb[(i, j)];
                }
            }
        }
    }
    Ok(HermMat::symmetrize(out))
}

/// `Λ_L(fA) = tr(A L(f))`-style pairing check helper: the lifted
/// functional value of `φ∘L` equals that of `L` after `φ†` is applied to
/// the argument's matrix part. Used by tests and the acceptance suite.
pub fn lifted_value<T: Real>(l: &MatrixMomentFunctional<T>, coeffs_scalar: &[T], h: &HermMat<T>) -> T {
    // Λ_L(g·H) = ⟨H, L(g)⟩ extended linearly
    let mut acc = T::zero();
    for (i, &c) in coeffs_scalar.iter().enumerate() {
        acc = acc + c * trace_inner(h, &l.values[i]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cone, creal, czero};
    use crate::testutil;

    fn random_map(q: usize, p: usize, k: usize, rng: &mut impl rand::Rng) -> PositiveMap<f64> {
        let kraus = (0..k)
            .map(|_| {
                CMat::from_fn(q, p, |_, _| {
                    crate::scalar::C::new(
                        testutil::uniform(rng, -1.0, 1.0),
                        testutil::uniform(rng, -1.0, 1.0),
                    )
                })
            })
            .collect();
        PositiveMap::new(q, p, kraus, false).unwrap()
    }

    #[test]
    fn trace_map_values() {
        let tm = PositiveMap::<f64>::trace_map(2);
        let a = HermMat::diag(&[1.0, 2.0]);
        let out = tm.apply(&a);
        assert_eq!(out.dim(), 1);
        assert!((out.get(0, 0).re - 3.0).abs() < 1e-14);
        // adjoint of the trace map: b ↦ b·I_q
        let adj = tm.adjoint();
        let b = HermMat::diag(&[2.5]);
        let back = adj.apply(&b);
        assert!(back.sub(&HermMat::identity(2).scale(2.5)).norm_fro() < 1e-14);
    }

    #[test]
    fn compression_example() {
        // π onto span(e1) applied to [[1,2],[2,5]] gives [[1,0],[0,0]]
        let e1 = CMat::from_fn(2, 1, |i, _| if i == 0 { cone() } else { czero() });
        let pi = PositiveMap::<f64>::compression(&e1);
        let mut a = CMat::<f64>::zeros(2, 2);
        a[(0, 0)] = creal(1.0);
        a[(0, 1)] = creal(2.0);
        a[(1, 0)] = creal(2.0);
        a[(1, 1)] = creal(5.0);
        let out = pi.apply(&HermMat::new(a).unwrap());
        assert!((out.get(0, 0).re - 1.0).abs() < 1e-14);
        assert!(out.get(0, 1).norm() < 1e-14);
        assert!(out.get(1, 1).norm() < 1e-14);
        // trace of the compression vanishes iff the subspace is in the kernel
        let killed = HermMat::diag(&[0.0, 3.0]);
        assert!(pi.apply(&killed).trace().abs() < 1e-14);
    }

    #[test]
    fn identity_map_is_identity() {
        let mut rng = testutil::rng(179);
        let id = PositiveMap::<f64>::identity(3);
        let a = testutil::random_herm::<f64>(3, &mut rng);
        assert!(id.apply(&a).sub(&a).norm_fro() < 1e-14);
    }

    #[test]
    fn adjoint_identity_random_pairs() {
        let mut rng = testutil::rng(181);
        for _ in 0..100 {
            let map = random_map(2, 3, 2, &mut rng);
            let adj = map.adjoint();
            let a = testutil::random_herm::<f64>(2, &mut rng);
            let b = testutil::random_herm::<f64>(3, &mut rng);
            let lhs = trace_inner(&map.apply(&a), &b);
            let rhs = trace_inner(&a, &adj.apply(&b));
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn adjoint_identity_with_transpose() {
        let mut rng = testutil::rng(191);
        let kraus = vec![CMat::from_fn(2, 2, |_, _| {
            crate::scalar::C::new(
                testutil::uniform(&mut rng, -1.0, 1.0),
                testutil::uniform(&mut rng, -1.0, 1.0),
            )
        })];
        let map = PositiveMap::<f64>::new(2, 2, kraus, true).unwrap();
        let adj = map.adjoint();
        for _ in 0..50 {
            let a = testutil::random_herm::<f64>(2, &mut rng);
            let b = testutil::random_herm::<f64>(2, &mut rng);
            let lhs = trace_inner(&map.apply(&a), &b);
            let rhs = trace_inner(&a, &adj.apply(&b));
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
        // involution
        let again = adj.adjoint();
        let a = testutil::random_herm::<f64>(2, &mut rng);
        assert!(again.apply(&a).sub(&map.apply(&a)).norm_fro() < 1e-12);
    }

    #[test]
    fn positivity_preservation_bulk() {
        let mut rng = testutil::rng(193);
        let map = random_map(3, 2, 3, &mut rng);
        for _ in 0..1000 {
            let a = testutil::random_psd::<f64>(3, &mut rng);
            let out = map.apply(&a);
            let d = eig::eigh(&out).unwrap();
            assert!(d.min_eigenvalue() >= -1e-10);
        }
    }

    #[test]
    fn pushforward_is_additive_and_homogeneous() {
        let mut rng = testutil::rng(197);
        let map = random_map(2, 2, 2, &mut rng);
        let m1 = testutil::random_psd::<f64>(2, &mut rng);
        let m2 = testutil::random_psd::<f64>(2, &mut rng);
        let sum = map.apply(&m1.add(&m2));
        let parts = map.apply(&m1).add(&map.apply(&m2));
        assert!(sum.sub(&parts).norm_fro() < 1e-13);
        let scaled = map.apply(&m1.scale(3.0));
        assert!(scaled.sub(&map.apply(&m1).scale(3.0)).norm_fro() < 1e-13);
    }

    #[test]
    fn tensor_extension_q1_is_plain_value() {
        // q = 1: L_⊗ reduces to L itself
        let l = MatrixMomentFunctional::new(1, vec![HermMat::<f64>::diag(&[2.0])]).unwrap();
        let out = l_otimes(&l, &[3.0]).unwrap();
        assert_eq!(out.dim(), 1);
        assert!((out.get(0, 0).re - 6.0).abs() < 1e-14);
    }

    #[test]
    fn tensor_transport_identity() {
        // (φ∘L)_⊗ = (id⊗φ)∘L_⊗ for p = q
        let mut rng = testutil::rng(199);
        for _ in 0..30 {
            let q = 2;
            let map = random_map(q, q, 2, &mut rng);
            let l = MatrixMomentFunctional::new(
                q,
                (0..3).map(|_| testutil::random_herm(q, &mut rng)).collect(),
            )
            .unwrap();
            let coeffs: Vec<f64> = (0..3 * q * q)
                .map(|_| testutil::uniform(&mut rng, -1.0, 1.0))
                .collect();
            let lhs = l_otimes(&transport_functional(&map, &l).unwrap(), &coeffs).unwrap();
            let rhs = id_otimes(&map, &l_otimes(&l, &coeffs).unwrap()).unwrap();
            assert!(
                lhs.sub(&rhs).norm_fro() <= 1e-10 * (1.0 + lhs.norm_fro()),
                "tensor identity deviates by {}",
                lhs.sub(&rhs).norm_fro()
            );
        }
    }

    #[test]
    fn zero_functional_zero_tensor() {
        let l = MatrixMomentFunctional::new(2, vec![HermMat::<f64>::zero(2)]).unwrap();
        let out = l_otimes(&l, &[1.0, 0.5, -0.5, 2.0]).unwrap();
        assert_eq!(out.norm_fro(), 0.0);
    }
}
