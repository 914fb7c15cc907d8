//! Atom and mass extraction from a positive, flat truncated matrix moment
//! sequence.
//!
//! Pipeline: certify positivity and flatness, pick `r = rank H_m`
//! independent block-columns of `H_{m+1}` among the degree-≤m columns,
//! solve for the per-variable shift matrices in that column basis, verify
//! they commute, joint-diagonalize a random real combination, read the
//! points off as per-variable eigenvalues, and recover the masses by least
//! squares followed by a PSD projection. The Gram matrix of the selected
//! columns turns the shift matrices into Hermitian ones
//! (`M_t = G^{-1/2} K_t G^{-1/2}`), so the Hermitian Jacobi machinery
//! applies throughout.

use rand::Rng;

use crate::cmat::CMat;
use crate::eig;
use crate::hankel::{build_hankel, flat_check, BlockHankel, MomentSequence, MultiIndexSet};
use crate::herm::HermMat;
use crate::scalar::{creal, real, Real};
use crate::space::monomial_value;
use crate::ExtractError;

/// An atom with explicit coordinates in `R^d`.
#[derive(Clone, Debug)]
pub struct CoordAtom<T: Real> {
    pub coords: Vec<T>,
    pub mass: HermMat<T>,
}

/// Extraction output: points, PSD masses, the final moment-reproduction
/// residual, and diagnostics of the inner certification steps.
#[derive(Clone, Debug)]
pub struct ExtractionResult<T: Real> {
    pub atoms: Vec<CoordAtom<T>>,
    pub residual: T,
    pub diagnostics: Diagnostics<T>,
}

#[derive(Clone, Debug)]
pub struct Diagnostics<T: Real> {
    pub rank_lo: usize,
    pub rank_hi: usize,
    pub max_commutator: T,
    pub combination_retries: usize,
    /// Masses recomputed through the rank-one regrouping of the flat
    /// extension construction; an independent cross-check of the
    /// least-squares mass recovery.
    pub rank_one_masses: Vec<HermMat<T>>,
}

#[derive(Clone, Copy, Debug)]
pub struct ExtractOptions<T: Real> {
    /// Rank / commutator tolerance.
    pub tol: T,
    /// Maximum acceptable relative moment mismatch.
    pub residual_tol: T,
    /// Random-combination retries before the clustering fallback is final.
    pub retries: usize,
}

impl<T: Real> Default for ExtractOptions<T> {
    fn default() -> Self {
        Self {
            tol: real(1e-8),
            residual_tol: real(1e-6),
            retries: 5,
        }
    }
}

/// Forward map: `S_α = Σ_j x_j^α M_j` for all `|α| ≤ n`.
pub fn moments_from_measure<T: Real>(
    atoms: &[CoordAtom<T>],
    d: usize,
    q: usize,
    n: usize,
) -> Result<MomentSequence<T>, ExtractError> {
    for a in atoms {
        if a.coords.len() != d {
            return Err(ExtractError::MissingCoordinates(format!("{:?}", a.coords)));
        }
        if a.mass.dim() != q {
            return Err(ExtractError::LinAlg(crate::LinAlgError::DimMismatch(
                "mass dimension".into(),
            )));
        }
    }
    let idx = MultiIndexSet::new(d, n);
    let entries = idx
        .indices()
        .iter()
        .map(|alpha| {
            let mut s = HermMat::zero(q);
            for a in atoms {
                s = s.add(&a.mass.scale(monomial_value(&a.coords, alpha)));
            }
            (alpha.clone(), s)
        })
        .collect();
    Ok(MomentSequence::new(d, q, n, entries)?)
}

/// Extracts an atomic representing measure from a flat positive sequence.
pub fn extract<T: Real>(
    seq: &MomentSequence<T>,
    m: usize,
    opts: &ExtractOptions<T>,
    rng: &mut impl Rng,
) -> Result<ExtractionResult<T>, ExtractError> {
    let check = flat_check(seq, m, opts.tol)?;
    if !check.psd_ok {
        return Err(ExtractError::NotPositive(m + 1));
    }
    if check.rank_lo != check.rank_hi {
        return Err(ExtractError::NotFlat {
            m,
            rank_lo: check.rank_lo,
            rank_hi: check.rank_hi,
        });
    }
    let r = check.rank_lo;
    let d = seq.d();
    let q = seq.q();
    let h = build_hankel(seq, m + 1)?;
    let n_lo = MultiIndexSet::new(d, m).len();

    if r == 0 {
        // zero functional: empty measure
        let residual = reproduction_residual(seq, &[]);
        return Ok(ExtractionResult {
            atoms: vec![],
            residual,
            diagnostics: Diagnostics {
                rank_lo: 0,
                rank_hi: 0,
                max_commutator: T::zero(),
                combination_retries: 0,
                rank_one_masses: vec![],
            },
        });
    }

    // 1. column basis among degree-≤m columns (the leading n_lo·q columns)
    let sel = select_columns(&h, n_lo * q, r);
    if sel.len() != r {
        return Err(ExtractError::NotFlat {
            m,
            rank_lo: r,
            rank_hi: sel.len(),
        });
    }

    // 2. Gram of the selected columns and the per-variable shift data
    let gram = submatrix(h.matrix(), &sel, &sel);
    let gsqrt = sqrt_and_isqrt(&gram)?;
    let idx_hi = h.index_set().clone();
    let mut shifted_grams = Vec::with_capacity(d);
    for t in 0..d {
        let shifted: Vec<usize> = sel
            .iter()
            .map(|&c| {
                let (block, col) = (c / q, c % q);
                let mut alpha = idx_hi.indices()[block].clone();
                alpha[t] += 1;
                let pos = idx_hi
                    .position(&alpha)
                    .expect("shift stays within degree m+1");
                pos * q + col
            })
            .collect();
        shifted_grams.push(submatrix(h.matrix(), &sel, &shifted));
    }

    // raw shift matrices X_t = G⁻¹K_t, for the commutator certificate
    let ginv = gsqrt.isqrt.mul(&gsqrt.isqrt);
    let xs: Vec<CMat<T>> = shifted_grams.iter().map(|k| ginv.mul(k.as_cmat())).collect();
    let xnorm = xs.iter().map(|x| x.norm_fro()).fold(T::zero(), T::max);
    let comm_scale = T::one().max(xnorm * xnorm);
    let mut max_comm = T::zero();
    for i in 0..d {
        for j in (i + 1)..d {
            let c = xs[i].mul(&xs[j]).sub(&xs[j].mul(&xs[i])).norm_fro();
            max_comm = max_comm.max(c);
        }
    }
    let comm_tol = opts.tol * comm_scale * real::<T>(100.0);
    if max_comm > comm_tol {
        return Err(ExtractError::NonCommutingShifts {
            norm: max_comm.to_f64().unwrap_or(f64::NAN),
            tol: comm_tol.to_f64().unwrap_or(f64::NAN),
        });
    }

    // 3. Hermitian versions M_t = G^{-1/2} K_t G^{-1/2}
    let ms: Vec<HermMat<T>> = shifted_grams
        .iter()
        .map(|k| HermMat::symmetrize(gsqrt.isqrt.mul(k.as_cmat()).mul(&gsqrt.isqrt)))
        .collect();

    // 4. joint diagonalization by random real combination with retry
    let (w, clusters, retries) = joint_points(&ms, opts, rng)?;

    // per-cluster coordinates = averaged per-variable Rayleigh quotients
    let mut points: Vec<Vec<T>> = Vec::with_capacity(clusters.len());
    for cluster in &clusters {
        let p = w.select_columns(cluster);
        let mut y = Vec::with_capacity(d);
        for mt in &ms {
            let b = p.adjoint().mul(mt.as_cmat()).mul(&p);
            y.push(b.trace().re / real::<T>(cluster.len() as f64));
        }
        points.push(y);
    }

    // merge clusters that landed on coincident points
    let merged = merge_points(points, clusters, opts.tol);
    let (points, clusters): (Vec<_>, Vec<_>) = merged.into_iter().unzip();

    // 5. masses by least squares over all moments, then PSD projection
    let idx_all = seq.index_set();
    let n_atoms = points.len();
    let vander = CMat::from_fn(idx_all.len(), n_atoms, |i, j| {
        creal(monomial_value(&points[j], &idx_all.indices()[i]))
    });
    let rhs = CMat::from_fn(idx_all.len(), q * q, |i, j| {
        let s = seq.moment(&idx_all.indices()[i]).unwrap();
        s.get(j / q, j % q)
    });
    let sol = eig::lstsq(&vander, &rhs);
    let mut atoms = Vec::with_capacity(n_atoms);
    for (j, y) in points.iter().enumerate() {
        let mass = CMat::from_fn(q, q, |a, b| sol[(j, a * q + b)]);
        atoms.push(CoordAtom {
            coords: y.clone(),
            mass: eig::psd_project(&HermMat::symmetrize(mass)),
        });
    }

    // rank-one regrouping path: z_s = block-0 rows of H·ψ_s
    let rank_one_masses = rank_one_mass_path(&h, &sel, &gsqrt.isqrt, &w, &clusters, q);

    let residual = reproduction_residual(seq, &atoms);
    if residual > opts.residual_tol {
        return Err(ExtractError::ResidualTooLarge {
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }

    Ok(ExtractionResult {
        atoms,
        residual,
        diagnostics: Diagnostics {
            rank_lo: check.rank_lo,
            rank_hi: check.rank_hi,
            max_commutator: max_comm,
            combination_retries: retries,
            rank_one_masses,
        },
    })
}

/// Max relative moment mismatch of the reconstructed measure.
pub fn reproduction_residual<T: Real>(seq: &MomentSequence<T>, atoms: &[CoordAtom<T>]) -> T {
    let scale = seq
        .entries()
        .map(|(_, s)| s.norm_fro())
        .fold(T::zero(), T::max)
        .max(T::one());
    let mut worst = T::zero();
    for (alpha, s) in seq.entries() {
        let mut got = HermMat::zero(seq.q());
        for a in atoms {
            got = got.add(&a.mass.scale(monomial_value(&a.coords, alpha)));
        }
        worst = worst.max(got.sub(s).norm_fro() / scale);
    }
    worst
}

/// Greedy Gram–Schmidt in the H-metric over the first `limit` columns,
/// scanning in degree-graded order so low degrees are preferred.
fn select_columns<T: Real>(h: &BlockHankel<T>, limit: usize, r: usize) -> Vec<usize> {
    let g = h.matrix();
    let diag_scale = (0..limit)
        .map(|c| g.get(c, c).re)
        .fold(T::zero(), T::max)
        .max(T::epsilon());
    let cut = diag_scale * real::<T>(1e-10);
    let mut sel: Vec<usize> = Vec::new();
    // b-vectors: H-orthonormal combinations of selected unit columns
    let mut bs: Vec<Vec<(usize, crate::scalar::C<T>)>> = Vec::new();
    let h_dot = |sparse: &[(usize, crate::scalar::C<T>)], c: usize| {
        // (Σ a_k e_k)* H e_c
        let mut acc = crate::scalar::czero::<T>();
        for &(k, a) in sparse {
            acc += a.conj() * g.get(k, c);
        }
        acc
    };
    for c in 0..limit {
        if sel.len() == r {
            break;
        }
        let mut resid = g.get(c, c).re;
        let mut projs = Vec::with_capacity(bs.len());
        for b in &bs {
            let p = h_dot(b, c);
            resid = resid - p.norm_sqr();
            projs.push(p);
        }
        if resid <= cut {
            continue;
        }
        // new b = (e_c − Σ p_i b_i)/√resid
        let mut newb: std::collections::BTreeMap<usize, crate::scalar::C<T>> =
            std::collections::BTreeMap::new();
        newb.insert(c, crate::scalar::cone::<T>());
        for (b, p) in bs.iter().zip(&projs) {
            for &(k, a) in b {
                *newb.entry(k).or_insert_with(crate::scalar::czero) -= *p * a;
            }
        }
        let inv = T::one() / resid.sqrt();
        let newb: Vec<_> = newb
            .into_iter()
            .map(|(k, a)| (k, a.scale(inv)))
            .collect();
        bs.push(newb);
        sel.push(c);
    }
    sel
}

fn submatrix<T: Real>(m: &HermMat<T>, rows: &[usize], cols: &[usize]) -> HermMat<T> {
    HermMat::symmetrize(CMat::from_fn(rows.len(), cols.len(), |i, j| {
        m.as_cmat()[(rows[i], cols[j])]
    }))
}

struct SqrtPair<T: Real> {
    isqrt: CMat<T>,
}

/// `G^{-1/2}` of a PSD matrix through its eigendecomposition; eigenvalues
/// below the relative cutoff are treated as exact zeros.
fn sqrt_and_isqrt<T: Real>(g: &HermMat<T>) -> Result<SqrtPair<T>, ExtractError> {
    let d = eig::eigh(g)?;
    let radius = d.spectral_radius().max(T::epsilon());
    let cutoff = radius * real::<T>(1e-12);
    let n = g.dim();
    let mut isqrt = CMat::zeros(n, n);
    for (r, &lam) in d.eigenvalues.iter().enumerate() {
        if lam <= cutoff {
            continue;
        }
        let u = d.eigenvectors.column(r);
        let w = T::one() / lam.sqrt();
        for i in 0..n {
            for j in 0..n {
                isqrt[(i, j)] += u[i] * u[j].conj() * creal(w);
            }
        }
    }
    Ok(SqrtPair { isqrt })
}

/// Random-combination joint diagonalization with retries, then the
/// clustering fallback. Returns the unitary, the eigenvector clusters
/// (each one atom) and the retry count.
fn joint_points<T: Real>(
    ms: &[HermMat<T>],
    opts: &ExtractOptions<T>,
    rng: &mut impl Rng,
) -> Result<(CMat<T>, Vec<Vec<usize>>, usize), ExtractError> {
    let r = ms[0].dim();
    let scale = ms
        .iter()
        .map(|m| m.norm_fro())
        .fold(T::zero(), T::max)
        .max(T::one());
    let consistency_tol = scale * real::<T>(1e-5);

    let mut best: Option<(CMat<T>, Vec<Vec<usize>>, T)> = None;
    for attempt in 0..opts.retries {
        let coeffs: Vec<T> = (0..ms.len())
            .map(|_| crate::testutil::uniform(rng, -1.0, 1.0))
            .collect();
        let mut combo = HermMat::zero(r);
        for (c, m) in coeffs.iter().zip(ms) {
            combo = combo.add(&m.scale(*c));
        }
        let d = eig::eigh(&combo)?;
        let spread = d.max_eigenvalue() - d.min_eigenvalue();
        let ctol = (spread.max(T::one())) * real::<T>(1e-7);
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for i in 0..r {
            match clusters.last_mut() {
                Some(c) if (d.eigenvalues[i] - d.eigenvalues[c[0]]).abs() <= ctol => c.push(i),
                _ => clusters.push(vec![i]),
            }
        }
        // consistency: every member must act as a scalar on every cluster
        let mut worst = T::zero();
        for cluster in &clusters {
            let p = d.eigenvectors.select_columns(cluster);
            for m in ms {
                let b = p.adjoint().mul(m.as_cmat()).mul(&p);
                let mean = b.trace().re / real::<T>(cluster.len() as f64);
                let dev = b
                    .sub(&CMat::identity(cluster.len()).scale_re(mean))
                    .norm_fro();
                worst = worst.max(dev);
            }
        }
        if worst <= consistency_tol {
            return Ok((d.eigenvectors, clusters, attempt));
        }
        if best.as_ref().map_or(true, |(_, _, w)| worst < *w) {
            best = Some((d.eigenvectors, clusters, worst));
        }
    }
    // clustering fallback: accept the best attempt if it is borderline,
    // otherwise report genuine degeneracy
    let (vecs, clusters, worst) = best.expect("at least one attempt");
    if worst <= scale * real::<T>(1e-3) {
        return Ok((vecs, clusters, opts.retries));
    }
    Err(ExtractError::DegenerateEigenvalues {
        retries: opts.retries,
    })
}

fn merge_points<T: Real>(
    points: Vec<Vec<T>>,
    clusters: Vec<Vec<usize>>,
    tol: T,
) -> Vec<(Vec<T>, Vec<usize>)> {
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .map(|v| v.abs())
        .fold(T::one(), T::max);
    let merge_tol = scale * tol.sqrt().max(real(1e-6));
    let mut out: Vec<(Vec<T>, Vec<usize>)> = Vec::new();
    for (p, c) in points.into_iter().zip(clusters) {
        match out.iter_mut().find(|(p0, _)| {
            p0.iter()
                .zip(&p)
                .map(|(a, b)| (*a - *b).abs())
                .fold(T::zero(), T::max)
                <= merge_tol
        }) {
            Some((p0, c0)) => {
                // weighted average of coordinates, union of eigenvectors
                let w0 = real::<T>(c0.len() as f64);
                let w1 = real::<T>(c.len() as f64);
                for (a, b) in p0.iter_mut().zip(&p) {
                    *a = (*a * w0 + *b * w1) / (w0 + w1);
                }
                c0.extend(c);
            }
            None => out.push((p, c)),
        }
    }
    out
}

/// Masses reassembled from rank-one contributions: for every point-adapted
/// GNS basis vector `ψ_s`, `z_s` is the degree-0 block of `H·ψ_s` and the
/// cluster mass is `Σ z_s z_s*`.
fn rank_one_mass_path<T: Real>(
    h: &BlockHankel<T>,
    sel: &[usize],
    isqrt: &CMat<T>,
    w: &CMat<T>,
    clusters: &[Vec<usize>],
    q: usize,
) -> Vec<HermMat<T>> {
    let psi_all = isqrt.mul(w); // columns: coordinates w.r.t. selected unit vectors
    clusters
        .iter()
        .map(|cluster| {
            let mut mass = HermMat::zero(q);
            for &s in cluster {
                let mut z = vec![crate::scalar::czero::<T>(); q];
                for (i, &c) in sel.iter().enumerate() {
                    let a = psi_all[(i, s)];
                    for (row, zr) in z.iter_mut().enumerate() {
                        *zr += h.matrix().as_cmat()[(row, c)] * a;
                    }
                }
                mass = mass.add(&HermMat::rank_one(&z));
            }
            mass
        })
        .collect()
}
