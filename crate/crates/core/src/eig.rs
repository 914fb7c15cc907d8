//! Hermitian eigendecomposition by cyclic Jacobi rotations, and everything
//! built directly on it: PSD tests and projection, Löwner comparison,
//! numeric rank, simultaneous diagonalization of commuting families, and
//! least-squares solves via eigen-thresholded pseudo-inverses.
//!
//! Jacobi is unconditionally robust at the dimensions this crate cares
//! about (q ≤ ~32), which is the whole reason it was chosen.

use crate::cmat::CMat;
use crate::herm::HermMat;
use crate::scalar::{creal, real, Real};
use crate::LinAlgError;

/// Maximum number of cyclic sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `A = U diag(λ) U*` of a Hermitian matrix, eigenvalues
/// ascending, eigenvectors the columns of a unitary `U`.
#[derive(Clone, Debug)]
pub struct EigenDecomp<T: Real> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: CMat<T>,
}

impl<T: Real> EigenDecomp<T> {
    /// `U diag(λ) U*`.
    pub fn reconstruct(&self) -> HermMat<T> {
        HermMat::from_spectrum(&self.eigenvectors, &self.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues.last().copied().unwrap_or_else(T::zero)
    }

    /// Largest |λ|.
    pub fn spectral_radius(&self) -> T {
        self.eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(T::zero(), T::max)
    }
}

/// Cyclic Jacobi for Hermitian matrices. Each rotation combines a phase
/// (making the pivot real) with a real Jacobi rotation, so the 2×2 pivot
/// block is annihilated exactly.
pub fn eigh<T: Real>(a: &HermMat<T>) -> Result<EigenDecomp<T>, LinAlgError> {
    let n = a.dim();
    if n == 0 {
        return Ok(EigenDecomp {
            eigenvalues: vec![],
            eigenvectors: CMat::zeros(0, 0),
        });
    }
    let mut m = a.as_cmat().clone();
    let mut v = CMat::<T>::identity(n);
    let scale = m.norm_fro().max(T::one());
    let target = scale * T::epsilon() * real::<T>(n as f64);

    for _sweep in 0..MAX_SWEEPS {
        let off = m.offdiag_norm();
        if off <= target {
            return Ok(sorted_decomp(&m, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = m[(p, q)];
                let r = g.norm();
                if r <= scale * T::epsilon() {
                    continue;
                }
                // phase u makes the pivot real; then a real Jacobi rotation
                let u = g.scale(T::one() / r);
                let alpha = m[(p, p)].re;
                let beta = m[(q, q)].re;
                let tau = (beta - alpha) / (real::<T>(2.0) * r);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    T::one() / (tau - (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                // A <- J* A J with J = I except J_pp=c, J_pq=s·u, J_qp=−s·ū, J_qq=c
                let su = u.scale(s);
                let sub = u.conj().scale(s);
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp.scale(c) - akq * sub;
                    m[(k, q)] = akp * su + akq.scale(c);
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk.scale(c) - su * aqk;
                    m[(q, k)] = sub * apk + aqk.scale(c);
                }
                m[(p, q)] = creal(T::zero());
                m[(q, p)] = creal(T::zero());
                m[(p, p)] = creal(m[(p, p)].re);
                m[(q, q)] = creal(m[(q, q)].re);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp.scale(c) - vkq * sub;
                    v[(k, q)] = vkp * su + vkq.scale(c);
                }
            }
        }
    }
    let off = m.offdiag_norm();
    if off <= target * real::<T>(100.0) {
        // close enough for downstream tolerances; accept
        return Ok(sorted_decomp(&m, v));
    }
    Err(LinAlgError::EigNonConvergence {
        sweeps: MAX_SWEEPS,
        offdiag: off.to_f64().unwrap_or(f64::NAN),
    })
}

fn sorted_decomp<T: Real>(m: &CMat<T>, v: CMat<T>) -> EigenDecomp<T> {
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap());
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = v.select_columns(&order);
    EigenDecomp {
        eigenvalues,
        eigenvectors,
    }
}

/// `true` iff the smallest eigenvalue is `≥ −tol·max(1, spectral radius)`.
pub fn psd_check<T: Real>(a: &HermMat<T>, tol: T) -> bool {
    if a.dim() == 0 {
        return true;
    }
    let d = eigh(a).expect("eigh convergence");
    let scale = T::one().max(d.spectral_radius());
    d.min_eigenvalue() >= -tol * scale
}

/// Nearest PSD matrix in Frobenius norm (eigenvalue clipping).
pub fn psd_project<T: Real>(a: &HermMat<T>) -> HermMat<T> {
    let d = eigh(a).expect("eigh convergence");
    if d.min_eigenvalue() >= T::zero() {
        return a.clone();
    }
    let clipped: Vec<T> = d.eigenvalues.iter().map(|&l| l.max(T::zero())).collect();
    HermMat::from_spectrum(&d.eigenvectors, &clipped)
}

/// Löwner comparison `A ⪰ B`, i.e. `A − B` PSD at tolerance `tol`.
pub fn loewner_geq<T: Real>(a: &HermMat<T>, b: &HermMat<T>, tol: T) -> bool {
    psd_check(&a.sub(b), tol)
}

/// Count of eigenvalues above `tol · max|λ| · dim` in absolute value.
pub fn numeric_rank<T: Real>(a: &HermMat<T>, tol: T) -> usize {
    let d = eigh(a).expect("eigh convergence");
    let radius = d.spectral_radius();
    if radius == T::zero() {
        return 0;
    }
    let threshold = tol * radius * real::<T>(a.dim() as f64);
    d.eigenvalues.iter().filter(|l| l.abs() > threshold).count()
}

/// One unitary diagonalizing every member of a commuting Hermitian family.
///
/// Returns the unitary and the (real) diagonal of `U*A_iU` per member.
/// The construction recurses through joint eigenspaces, so clustered
/// eigenvalues of one member are resolved by the others.
pub fn simultaneous_diagonalize<T: Real>(
    family: &[HermMat<T>],
    tol: T,
) -> Result<(CMat<T>, Vec<Vec<T>>), LinAlgError> {
    if family.is_empty() {
        return Ok((CMat::zeros(0, 0), vec![]));
    }
    let q = family[0].dim();
    for m in family {
        if m.dim() != q {
            return Err(LinAlgError::NotSquare {
                rows: m.dim(),
                cols: q,
            });
        }
    }
    let scale = family
        .iter()
        .map(|m| m.norm_fro())
        .fold(T::zero(), T::max)
        .max(T::one());
    let comm_scale = scale * scale;
    let mut worst = (T::zero(), 0usize, 0usize);
    for i in 0..family.len() {
        for j in (i + 1)..family.len() {
            let n = family[i].commutator(&family[j]).norm_fro();
            if n > worst.0 {
                worst = (n, i, j);
            }
        }
    }
    if worst.0 > tol * comm_scale {
        return Err(LinAlgError::CommutatorTooLarge {
            i: worst.1,
            j: worst.2,
            norm: worst.0.to_f64().unwrap_or(f64::NAN),
        });
    }

    let u = joint_basis(family, tol * scale)?;
    let mut diags = Vec::with_capacity(family.len());
    for m in family {
        let d = m.conjugate_by(&u);
        if d.as_cmat().offdiag_norm() > tol.max(real(1e-9)) * scale * real::<T>(100.0) {
            return Err(LinAlgError::JointDiagonalizationResidual {
                offdiag: d.as_cmat().offdiag_norm().to_f64().unwrap_or(f64::NAN),
            });
        }
        diags.push((0..q).map(|i| d.get(i, i).re).collect());
    }
    Ok((u, diags))
}

/// Recursive joint-eigenspace construction. `atol` is an absolute scale for
/// "negligible" off-diagonal mass and eigenvalue clustering.
fn joint_basis<T: Real>(family: &[HermMat<T>], atol: T) -> Result<CMat<T>, LinAlgError> {
    let q = family[0].dim();
    if q <= 1 {
        return Ok(CMat::identity(q));
    }
    let spread_tol = atol.max(T::epsilon().sqrt());
    // pick the member that separates the space the most
    let mut pick = None;
    let mut best = T::zero();
    for (i, m) in family.iter().enumerate() {
        let mean = m.trace() / real::<T>(q as f64);
        let dev = m.sub(&HermMat::diag(&vec![mean; q])).norm_fro();
        if dev > best {
            best = dev;
            pick = Some(i);
        }
    }
    let Some(pick) = pick else {
        // every member is (numerically) scalar
        return Ok(CMat::identity(q));
    };
    if best <= spread_tol {
        return Ok(CMat::identity(q));
    }

    let lead = &family[pick];
    // already diagonal: cluster directly, keeping the identity alignment
    let (vals, vecs) = if lead.as_cmat().offdiag_norm() <= spread_tol * real::<T>(1e-3) {
        ((0..q).map(|i| lead.get(i, i).re).collect::<Vec<_>>(), CMat::identity(q))
    } else {
        let d = eigh(lead)?;
        (d.eigenvalues, d.eigenvectors)
    };

    // group indices whose eigenvalues coincide within the cluster tolerance
    let spread = vals
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let ctol = (spread.1 - spread.0).max(T::one()) * T::epsilon().sqrt() + atol;
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..q {
        match clusters
            .iter_mut()
            .find(|c| (vals[c[0]] - vals[i]).abs() <= ctol)
        {
            Some(c) => c.push(i),
            None => clusters.push(vec![i]),
        }
    }

    let mut u = CMat::zeros(q, q);
    let mut col = 0;
    for cluster in clusters {
        let vc = vecs.select_columns(&cluster);
        if cluster.len() == 1 {
            u.set_column(col, &vc.column(0));
            col += 1;
            continue;
        }
        // restrict the whole family to the cluster subspace and recurse
        let sub: Vec<HermMat<T>> = family
            .iter()
            .map(|m| HermMat::symmetrize(vc.adjoint().mul(m.as_cmat()).mul(&vc)))
            .collect();
        let w = joint_basis(&sub, atol)?;
        let refined = vc.mul(&w);
        for j in 0..cluster.len() {
            u.set_column(col, &refined.column(j));
            col += 1;
        }
    }
    Ok(u)
}

/// Least squares `argmin ‖Ax − b‖` for complex `A` (columns independent or
/// not), via the eigen-thresholded pseudo-inverse of the Gram matrix.
pub fn lstsq<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    let gram = HermMat::symmetrize(a.adjoint().mul(a));
    let rhs = a.adjoint().mul(b);
    let d = eigh(&gram).expect("eigh convergence");
    let radius = d.spectral_radius();
    let cutoff = radius * T::epsilon() * real::<T>((a.cols().max(1)) as f64) * real::<T>(100.0);
    // x = Σ_r λ_r⁻¹ u_r (u_r* rhs)
    let mut x = CMat::zeros(a.cols(), b.cols());
    for (r, &lambda) in d.eigenvalues.iter().enumerate() {
        if lambda <= cutoff {
            continue;
        }
        let ur = d.eigenvectors.column(r);
        for j in 0..b.cols() {
            let mut coef = crate::scalar::czero::<T>();
            for i in 0..a.cols() {
                coef += ur[i].conj() * rhs[(i, j)];
            }
            coef = coef.scale(T::one() / lambda);
            for i in 0..a.cols() {
                x[(i, j)] += ur[i] * coef;
            }
        }
    }
    x
}

/// Real symmetric pseudo-inverse applied to a vector: `G⁺ y` with `G` given
/// by its eigendecomposition. Eigenvalues below `cutoff` are dropped.
pub struct SymPinv<T: Real> {
    decomp: EigenDecomp<T>,
    cutoff: T,
}

impl<T: Real> SymPinv<T> {
    pub fn new(g: &HermMat<T>) -> Result<Self, LinAlgError> {
        let decomp = eigh(g)?;
        let radius = decomp.spectral_radius();
        let cutoff = radius * T::epsilon() * real::<T>(g.dim().max(1) as f64) * real::<T>(100.0);
        Ok(Self { decomp, cutoff })
    }

    pub fn apply(&self, y: &[T]) -> Vec<T> {
        let n = y.len();
        let mut out = vec![T::zero(); n];
        for (r, &lambda) in self.decomp.eigenvalues.iter().enumerate() {
            if lambda.abs() <= self.cutoff {
                continue;
            }
            let ur = self.decomp.eigenvectors.column(r);
            let mut coef = T::zero();
            for i in 0..n {
                coef = coef + ur[i].re * y[i];
            }
            coef = coef / lambda;
            for i in 0..n {
                out[i] = out[i] + ur[i].re * coef;
            }
        }
        out
    }
}

/// Gram-matrix rank of a family of Hermitian matrices viewed as vectors
/// ("numerically nonsingular at rank tolerance" checks).
pub fn gram_rank_full<T: Real>(tables: &[Vec<T>]) -> bool {
    let n = tables.len();
    if n == 0 {
        return true;
    }
    let mut g = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let dot = tables[i]
                .iter()
                .zip(&tables[j])
                .map(|(&a, &b)| a * b)
                .fold(T::zero(), |x, y| x + y);
            g[(i, j)] = creal(dot);
        }
    }
    let gh = HermMat::symmetrize(g);
    let d = eigh(&gh).expect("eigh convergence");
    let sig_max = d.max_eigenvalue().max(T::zero()).sqrt();
    if sig_max == T::zero() {
        return false;
    }
    let sig_min = d.min_eigenvalue().max(T::zero()).sqrt();
    // rank tolerance: σ_max · dim · 1e-12 (f64); scaled by machine epsilon
    let rel = real::<T>(n as f64) * T::epsilon() * real::<T>(4503.6);
    sig_min > sig_max * rel
}
