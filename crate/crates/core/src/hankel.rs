//! Block Hankel matrices of truncated Hermitian-matrix moment sequences.
//!
//! A moment sequence assigns a Hermitian matrix `S_α` to every multi-index
//! `α` with `|α| ≤ N`. The level-`n` Hankel matrix has block `(𝔨,𝔩)` equal
//! to `S_{𝔨+𝔩}`, flattened to an ordinary Hermitian matrix of side
//! `q·binom(d+n,n)`.
//!
//! The index ordering is degree-graded lexicographic throughout and is
//! recorded explicitly in the JSON files, so they stay portable.

use std::collections::BTreeMap;

use crate::cmat::CMat;
use crate::eig;
use crate::herm::HermMat;
use crate::scalar::{czero, C, Real};
use crate::HankelError;

/// `binom(a+b, b)` in exact integer arithmetic.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// All multi-indices `α ∈ N₀^d` with `|α| ≤ n`, degree-graded lexicographic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexSet {
    d: usize,
    n: usize,
    indices: Vec<Vec<usize>>,
    positions: BTreeMap<Vec<usize>, usize>,
}

impl MultiIndexSet {
    pub fn new(d: usize, n: usize) -> Self {
        let mut indices = Vec::new();
        for deg in 0..=n {
            let mut level = Vec::new();
            gen_exact(d, deg, &mut vec![0; d], 0, deg, &mut level);
            level.sort();
            indices.extend(level);
        }
        debug_assert_eq!(indices.len(), binomial(d + n, n));
        let positions = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Self {
            d,
            n,
            indices,
            positions,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.positions.get(alpha).copied()
    }
}

/// Multi-indices with `|α| = deg` exactly.
fn gen_exact(
    d: usize,
    deg: usize,
    cur: &mut Vec<usize>,
    pos: usize,
    left: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if pos == d {
        if left == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if pos == d - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for v in 0..=left {
        cur[pos] = v;
        gen_exact(d, deg, cur, pos + 1, left - v, out);
    }
    cur[pos] = 0;
}

/// A truncated moment sequence: `S_α ∈ 𝓗_q` for every `|α| ≤ N`.
#[derive(Clone, Debug)]
pub struct MomentSequence<T: Real> {
    d: usize,
    q: usize,
    degree: usize,
    index_set: MultiIndexSet,
    moments: Vec<HermMat<T>>,
}

impl<T: Real> MomentSequence<T> {
    /// Builds from a complete list `(α, S_α)`; every `|α| ≤ N` must occur.
    pub fn new(
        d: usize,
        q: usize,
        degree: usize,
        entries: Vec<(Vec<usize>, HermMat<T>)>,
    ) -> Result<Self, HankelError> {
        let index_set = MultiIndexSet::new(d, degree);
        let mut slots: Vec<Option<HermMat<T>>> = vec![None; index_set.len()];
        for (alpha, s) in entries {
            if s.dim() != q {
                return Err(HankelError::ShapeMismatch);
            }
            match index_set.position(&alpha) {
                Some(p) => slots[p] = Some(s),
                None => return Err(HankelError::MissingMoment(alpha)),
            }
        }
        let mut moments = Vec::with_capacity(slots.len());
        for (slot, alpha) in slots.into_iter().zip(index_set.indices()) {
            moments.push(slot.ok_or_else(|| HankelError::MissingMoment(alpha.clone()))?);
        }
        Ok(Self {
            d,
            q,
            degree,
            index_set,
            moments,
        })
    }

    /// Scalar (q = 1) sequence in one or more variables from plain numbers.
    pub fn scalar(d: usize, degree: usize, values: &[T]) -> Result<Self, HankelError> {
        let idx = MultiIndexSet::new(d, degree);
        if values.len() != idx.len() {
            return Err(HankelError::ShapeMismatch);
        }
        let entries = idx
            .indices()
            .iter()
            .zip(values)
            .map(|(a, &v)| (a.clone(), HermMat::diag(&[v])))
            .collect();
        Self::new(d, 1, degree, entries)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn moment(&self, alpha: &[usize]) -> Option<&HermMat<T>> {
        self.index_set.position(alpha).map(|p| &self.moments[p])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &HermMat<T>)> {
        self.index_set.indices().iter().zip(self.moments.iter())
    }
}

/// The flattened block Hankel matrix `H_n(Λ)`.
#[derive(Clone, Debug)]
pub struct BlockHankel<T: Real> {
    n: usize,
    q: usize,
    index_set: MultiIndexSet,
    flat: HermMat<T>,
}

impl<T: Real> BlockHankel<T> {
    pub fn level(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Index set `I(d,n)` of the block rows/columns.
    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn matrix(&self) -> &HermMat<T> {
        &self.flat
    }

    pub fn block_count(&self) -> usize {
        self.index_set.len()
    }

    /// Side length of the flattened matrix, `q · binom(d+n,n)`.
    pub fn size(&self) -> usize {
        self.q * self.index_set.len()
    }
}

/// Builds `H_n` from a sequence of degree ≥ 2n: block `(𝔨,𝔩) = S_{𝔨+𝔩}`.
pub fn build_hankel<T: Real>(
    seq: &MomentSequence<T>,
    n: usize,
) -> Result<BlockHankel<T>, HankelError> {
    if 2 * n > seq.degree() {
        return Err(HankelError::InsufficientDegree {
            have: seq.degree(),
            need: 2 * n,
        });
    }
    let index_set = MultiIndexSet::new(seq.d(), n);
    let b = index_set.len();
    let q = seq.q();
    let mut flat = CMat::zeros(b * q, b * q);
    for (ki, kalpha) in index_set.indices().iter().enumerate() {
        for (li, lalpha) in index_set.indices().iter().enumerate() {
            let sum: Vec<usize> = kalpha.iter().zip(lalpha).map(|(a, b)| a + b).collect();
            let s = seq
                .moment(&sum)
                .ok_or_else(|| HankelError::MissingMoment(sum.clone()))?;
            for i in 0..q {
                for j in 0..q {
                    flat[(ki * q + i, li * q + j)] = s.get(i, j);
                }
            }
        }
    }
    Ok(BlockHankel {
        n,
        q,
        index_set,
        flat: HermMat::symmetrize(flat),
    })
}

/// A block coefficient vector: one `q×q` complex coefficient per index of
/// `I(d,n)`, representing `A = Σ f^𝔨 A_𝔨 ∈ M_q(E_n)`.
pub type BlockCoeffs<T> = Vec<CMat<T>>;

/// `tr(B⃗* H A⃗)`, which equals `Λ(AB*)`.
pub fn quad_form<T: Real>(
    h: &BlockHankel<T>,
    a: &BlockCoeffs<T>,
    b: &BlockCoeffs<T>,
) -> Result<C<T>, HankelError> {
    let bc = h.block_count();
    let q = h.q();
    if a.len() != bc || b.len() != bc {
        return Err(HankelError::ShapeMismatch);
    }
    for m in a.iter().chain(b.iter()) {
        if m.rows() != q || m.cols() != q {
            return Err(HankelError::ShapeMismatch);
        }
    }
    // tr(B⃗*HA⃗) = Σ_{𝔨𝔩} tr(B_𝔨* h_{𝔨𝔩} A_𝔩)
    let mut acc = czero::<T>();
    for ki in 0..bc {
        for li in 0..bc {
            for i in 0..q {
                for j in 0..q {
                    for r in 0..q {
                        // (B_𝔨*)_{ij} h_{jr} (A_𝔩)_{ri} summed over trace index i
                        acc += b[ki][(j, i)].conj()
                            * h.flat.get(ki * q + j, li * q + r)
                            * a[li][(r, i)];
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// PSD test of the flattened Hankel matrix.
pub fn hankel_psd<T: Real>(h: &BlockHankel<T>, tol: T) -> bool {
    eig::psd_check(&h.flat, tol)
}

/// Eigenvalue-thresholded rank of the flattened matrix.
pub fn hankel_rank<T: Real>(h: &BlockHankel<T>, tol: T) -> usize {
    eig::numeric_rank(&h.flat, tol)
}

/// Positivity and flatness certification at level `m`:
/// flat iff `rank H_{m+1} = rank H_m`, meaningful only when `H_{m+1} ⪰ O`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlatCheck {
    pub psd_ok: bool,
    pub rank_lo: usize,
    pub rank_hi: usize,
}

impl FlatCheck {
    pub fn is_flat(&self) -> bool {
        self.psd_ok && self.rank_lo == self.rank_hi
    }
}

pub fn flat_check<T: Real>(
    seq: &MomentSequence<T>,
    m: usize,
    tol: T,
) -> Result<FlatCheck, HankelError> {
    if 2 * m + 2 > seq.degree() {
        return Err(HankelError::InsufficientDegree {
            have: seq.degree(),
            need: 2 * m + 2,
        });
    }
    let h_lo = build_hankel(seq, m)?;
    let h_hi = build_hankel(seq, m + 1)?;
    Ok(FlatCheck {
        psd_ok: hankel_psd(&h_hi, tol),
        rank_lo: hankel_rank(&h_lo, tol),
        rank_hi: hankel_rank(&h_hi, tol),
    })
}

pub fn is_flat<T: Real>(seq: &MomentSequence<T>, m: usize, tol: T) -> Result<bool, HankelError> {
    Ok(flat_check(seq, m, tol)?.is_flat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::creal;
    use crate::testutil;

    #[test]
    fn index_set_counts_and_order() {
        let idx = MultiIndexSet::new(2, 2);
        assert_eq!(idx.len(), binomial(4, 2));
        assert_eq!(
            idx.indices(),
            &[
                vec![0, 0],
                vec![0, 1],
                vec![1, 0],
                vec![0, 2],
                vec![1, 1],
                vec![2, 0]
            ]
        );
        for w in idx.indices().windows(2) {
            let da: usize = w[0].iter().sum();
            let db: usize = w[1].iter().sum();
            assert!(da < db || (da == db && w[0] < w[1]));
        }
    }

    #[test]
    fn delta_one_hankel() {
        // q=1, d=1, s_k = 1 for all k (moments of δ_1): H_1 = [[1,1],[1,1]]
        let seq = MomentSequence::scalar(1, 2, &[1.0, 1.0, 1.0]).unwrap();
        let h = build_hankel(&seq, 1).unwrap();
        assert_eq!(h.size(), 2);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(h.matrix().get(i, j), creal(1.0));
            }
        }
        assert_eq!(hankel_rank(&h, 1e-8), 1);
        assert!(hankel_psd(&h, 1e-9));
    }

    #[test]
    fn central_atom_hankel() {
        // moments of I_q δ_0: S_0 = I, everything else O
        let q = 2;
        let idx = MultiIndexSet::new(1, 2);
        let entries = idx
            .indices()
            .iter()
            .map(|a| {
                let s = if a.iter().sum::<usize>() == 0 {
                    HermMat::<f64>::identity(q)
                } else {
                    HermMat::zero(q)
                };
                (a.clone(), s)
            })
            .collect();
        let seq = MomentSequence::new(1, q, 2, entries).unwrap();
        let h = build_hankel(&seq, 1).unwrap();
        for i in 0..h.size() {
            for j in 0..h.size() {
                let want = if i == j && i < q { 1.0 } else { 0.0 };
                assert_eq!(h.matrix().get(i, j), creal(want));
            }
        }
    }

    #[test]
    fn zero_sequence_zero_hankel() {
        let seq = MomentSequence::scalar(1, 2, &[0.0, 0.0, 0.0]).unwrap();
        let h = build_hankel(&seq, 1).unwrap();
        assert_eq!(h.matrix().norm_fro(), 0.0);
        assert!(hankel_psd(&h, 1e-9));
        assert_eq!(hankel_rank(&h, 1e-8), 0);
    }

    #[test]
    fn negative_second_moment_not_psd() {
        let seq = MomentSequence::scalar(1, 2, &[1.0, 0.0, -1.0]).unwrap();
        let h = build_hankel(&seq, 1).unwrap();
        assert!(!hankel_psd(&h, 1e-9));
    }

    #[test]
    fn quad_form_unit_coefficient_gives_trace() {
        let mut rng = testutil::rng(41);
        let q = 2;
        let idx = MultiIndexSet::new(2, 2);
        let entries = idx
            .indices()
            .iter()
            .map(|a| (a.clone(), testutil::random_herm::<f64>(q, &mut rng)))
            .collect();
        let seq = MomentSequence::new(2, q, 2, entries).unwrap();
        let h = build_hankel(&seq, 1).unwrap();
        let mut a: BlockCoeffs<f64> = vec![CMat::zeros(q, q); h.block_count()];
        a[0] = CMat::identity(q);
        let v = quad_form(&h, &a, &a).unwrap();
        let s0 = seq.moment(&[0, 0]).unwrap();
        assert!((v.re - s0.trace()).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn insufficient_degree_rejected() {
        let seq = MomentSequence::scalar(1, 2, &[1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            build_hankel(&seq, 2),
            Err(HankelError::InsufficientDegree { .. })
        ));
        assert!(matches!(
            flat_check(&seq, 1, 1e-8),
            Err(HankelError::InsufficientDegree { .. })
        ));
    }

    #[test]
    fn hilbert_like_sequence_not_flat() {
        // Lebesgue moments on [0,1]: s_k = 1/(k+1); every Hankel level has
        // full rank, so no level is flat.
        let vals: Vec<f64> = (0..5).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let seq = MomentSequence::scalar(1, 4, &vals).unwrap();
        let check = flat_check(&seq, 1, 1e-8).unwrap();
        assert!(check.psd_ok);
        assert_eq!(check.rank_lo, 2);
        assert_eq!(check.rank_hi, 3);
        assert!(!check.is_flat());
    }
}
