//! Moment functionals, matrix moment functionals, atomic measures, and the
//! support-size reduction of representing measures.
//!
//! A `MomentFunctional` is a real linear functional on a matrix function
//! space, stored as its values on the basis. A `MatrixMomentFunctional` is
//! a linear map `L: E → 𝓗_q` on a scalar space; the two determine each
//! other on the lifted space `𝓗_q(E)` through `Λ_L(fA) = tr(A L(f))`.

use crate::eig;
use crate::herm::{trace_inner, HermMat, HjkBasis};
use crate::scalar::{creal, real, Real};
use crate::space::{lift_scalar_space, MatrixFunctionSpace, ScalarSpace};
use crate::SpaceError;

/// A linear functional on a `MatrixFunctionSpace`, as values on the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentFunctional<T: Real> {
    pub values: Vec<T>,
}

impl<T: Real> MomentFunctional<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            values: vec![T::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `Σ c_i Λ(F_i)`.
    pub fn eval(&self, coeffs: &[T]) -> Result<T, SpaceError> {
        if coeffs.len() != self.values.len() {
            return Err(SpaceError::LengthMismatch {
                got: coeffs.len(),
                want: self.values.len(),
            });
        }
        Ok(coeffs
            .iter()
            .zip(&self.values)
            .map(|(&c, &v)| c * v)
            .fold(T::zero(), |a, b| a + b))
    }

    /// Euclidean norm of the value vector.
    pub fn norm(&self) -> T {
        self.values
            .iter()
            .map(|&v| v * v)
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

/// A linear map `L: E → 𝓗_q`, as Hermitian values on the scalar basis.
#[derive(Clone, Debug)]
pub struct MatrixMomentFunctional<T: Real> {
    pub q: usize,
    pub values: Vec<HermMat<T>>,
}

impl<T: Real> MatrixMomentFunctional<T> {
    pub fn new(q: usize, values: Vec<HermMat<T>>) -> Result<Self, SpaceError> {
        for v in &values {
            if v.dim() != q {
                return Err(SpaceError::BasisShapeMismatch);
            }
        }
        Ok(Self { q, values })
    }

    /// `L` of a scalar-space element given by coefficients.
    pub fn apply(&self, coeffs: &[T]) -> Result<HermMat<T>, SpaceError> {
        if coeffs.len() != self.values.len() {
            return Err(SpaceError::LengthMismatch {
                got: coeffs.len(),
                want: self.values.len(),
            });
        }
        let mut out = HermMat::zero(self.q);
        for (&c, v) in coeffs.iter().zip(&self.values) {
            out = out.add(&v.scale(c));
        }
        Ok(out)
    }

    /// `L^ν(g_i) = Σ_j g_i(x_j) M_j` for an atomic measure on the domain.
    pub fn from_measure(
        e: &ScalarSpace<T>,
        q: usize,
        nu: &AtomicMeasure<T>,
    ) -> Result<Self, SpaceError> {
        let mut values = Vec::with_capacity(e.dim());
        for table in e.tables() {
            let mut v = HermMat::zero(q);
            for atom in &nu.atoms {
                let k = e.space.index_of(&atom.point)?;
                v = v.add(&atom.mass.scale(table[k]));
            }
            values.push(v);
        }
        Self::new(q, values)
    }
}

/// A finitely atomic positive matrix measure `Σ M_j δ_{x_j}`.
#[derive(Clone, Debug)]
pub struct AtomicMeasure<T: Real> {
    pub atoms: Vec<Atom<T>>,
}

#[derive(Clone, Debug)]
pub struct Atom<T: Real> {
    pub point: String,
    pub mass: HermMat<T>,
}

impl<T: Real> AtomicMeasure<T> {
    /// Validates distinct points and PSD masses.
    pub fn new(atoms: Vec<Atom<T>>) -> Result<Self, SpaceError> {
        let mut seen = std::collections::BTreeSet::new();
        for a in &atoms {
            if !seen.insert(a.point.clone()) {
                return Err(SpaceError::DuplicateLabel(a.point.clone()));
            }
            if !eig::psd_check(&a.mass, real(1e-9)) {
                return Err(SpaceError::NotRepresenting(f64::NAN));
            }
        }
        Ok(Self { atoms })
    }

    pub fn empty() -> Self {
        Self { atoms: vec![] }
    }

    pub fn total_mass(&self) -> Option<HermMat<T>> {
        let q = self.atoms.first()?.mass.dim();
        let mut m = HermMat::zero(q);
        for a in &self.atoms {
            m = m.add(&a.mass);
        }
        Some(m)
    }

    /// Atoms with (numerically) zero mass dropped. The trace-density
    /// convention `Φ(x_j) = M_j / tr M_j` is undefined at such atoms, so
    /// they are treated as absent.
    pub fn without_null_atoms(&self, tol: T) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .filter(|a| a.mass.norm_fro() > tol)
                .cloned()
                .collect(),
        }
    }

    /// Trace-normalized densities `(x_j, M_j / tr M_j)` at non-null atoms.
    pub fn densities(&self, tol: T) -> Vec<(String, HermMat<T>)> {
        self.atoms
            .iter()
            .filter(|a| a.mass.trace() > tol)
            .map(|a| (a.point.clone(), a.mass.scale(T::one() / a.mass.trace())))
            .collect()
    }
}

/// `Λ_L` on the lifted space: `Λ(g_i H_jk) = ⟨H_jk, L(g_i)⟩`.
pub fn functional_from_l<T: Real>(
    lift: &MatrixFunctionSpace<T>,
    l: &MatrixMomentFunctional<T>,
) -> Result<MomentFunctional<T>, SpaceError> {
    let info = lift.lift_info().ok_or(SpaceError::NotALift)?;
    if info.q != l.q || info.scalar_dim != l.values.len() {
        return Err(SpaceError::LengthMismatch {
            got: l.values.len(),
            want: info.scalar_dim,
        });
    }
    let hjk = HjkBasis::<T>::new(l.q);
    let mut values = Vec::with_capacity(lift.dim());
    for lv in &l.values {
        for h in hjk.iter() {
            values.push(trace_inner(h, lv));
        }
    }
    Ok(MomentFunctional::new(values))
}

/// Recovers `L` from a functional on a lifted space: `L(g_i) = Σ Λ(g_i H_jk) H_jk`.
pub fn recover_l<T: Real>(
    lift: &MatrixFunctionSpace<T>,
    lambda: &MomentFunctional<T>,
) -> Result<MatrixMomentFunctional<T>, SpaceError> {
    let info = lift.lift_info().ok_or(SpaceError::NotALift)?;
    if lambda.dim() != lift.dim() {
        return Err(SpaceError::LengthMismatch {
            got: lambda.dim(),
            want: lift.dim(),
        });
    }
    let q = info.q;
    let hjk = HjkBasis::<T>::new(q);
    let mut values = Vec::with_capacity(info.scalar_dim);
    for i in 0..info.scalar_dim {
        let coords = &lambda.values[i * q * q..(i + 1) * q * q];
        values.push(hjk.from_coordinates(coords));
    }
    MatrixMomentFunctional::new(q, values)
}

/// `Λ^ν(F_i) = Σ_j tr(F_i(x_j) M_j)`.
pub fn functional_from_measure<T: Real>(
    space: &MatrixFunctionSpace<T>,
    nu: &AtomicMeasure<T>,
) -> Result<MomentFunctional<T>, SpaceError> {
    let mut values = vec![T::zero(); space.dim()];
    for atom in &nu.atoms {
        let k = space.space.index_of(&atom.point)?;
        for (i, v) in values.iter_mut().enumerate() {
            *v = *v + trace_inner(space.basis_at(i, k), &atom.mass);
        }
    }
    Ok(MomentFunctional::new(values))
}

/// Relative representation error of `ν` against `Λ` on the basis.
pub fn representation_error<T: Real>(
    space: &MatrixFunctionSpace<T>,
    lambda: &MomentFunctional<T>,
    nu: &AtomicMeasure<T>,
) -> Result<T, SpaceError> {
    let got = functional_from_measure(space, nu)?;
    let scale = lambda.norm().max(T::one());
    Ok(got.sub(lambda).norm() / scale)
}

/// Carathéodory-style support reduction: returns a measure with at most
/// `dim 𝓔` atoms representing the same functional.
///
/// Masses are split into rank-one pieces `c·uu*`; a null vector of the
/// moment-vector matrix drives one scalar weight to zero at a time; the
/// surviving pieces are regrouped by point.
pub fn richter_reduce<T: Real>(
    space: &MatrixFunctionSpace<T>,
    lambda: &MomentFunctional<T>,
    nu: &AtomicMeasure<T>,
) -> Result<AtomicMeasure<T>, SpaceError> {
    let err = representation_error(space, lambda, nu)?;
    if err > real(1e-8) {
        return Err(SpaceError::NotRepresenting(err.to_f64().unwrap_or(f64::NAN)));
    }
    let n = space.dim();

    // split into rank-one pieces
    struct Piece<T: Real> {
        point_idx: usize,
        weight: T,
        moments: Vec<T>,
        dyad: HermMat<T>,
    }
    let mut pieces: Vec<Piece<T>> = Vec::new();
    for atom in &nu.atoms {
        let k = space.space.index_of(&atom.point)?;
        let d = eig::eigh(&atom.mass)?;
        let radius = d.spectral_radius();
        for (r, &lam) in d.eigenvalues.iter().enumerate() {
            if lam <= radius * real(1e-13) || lam <= T::zero() {
                continue;
            }
            let u = d.eigenvectors.column(r);
            let dyad = HermMat::rank_one(&u);
            let moments = (0..n)
                .map(|i| trace_inner(space.basis_at(i, k), &dyad))
                .collect();
            pieces.push(Piece {
                point_idx: k,
                weight: lam,
                moments,
                dyad,
            });
        }
    }

    // Carathéodory elimination while more pieces than dim 𝓔
    while pieces.len() > n {
        let t = pieces.len();
        let a = crate::cmat::CMat::from_fn(n, t, |i, j| creal(pieces[j].moments[i]));
        let gram = HermMat::symmetrize(a.adjoint().mul(&a));
        let d = eig::eigh(&gram)?;
        let z: Vec<T> = d.eigenvectors.column(0).iter().map(|c| c.re).collect();
        // pick orientation with a positive entry, then the limiting ratio
        let has_pos = z.iter().any(|&v| v > T::zero());
        let z: Vec<T> = if has_pos { z } else { z.iter().map(|&v| -v).collect() };
        let mut theta = T::infinity();
        let mut drop_idx = None;
        for (j, piece) in pieces.iter().enumerate() {
            if z[j] > real(1e-14) {
                let ratio = piece.weight / z[j];
                if ratio < theta {
                    theta = ratio;
                    drop_idx = Some(j);
                }
            }
        }
        let Some(drop_idx) = drop_idx else {
            // null vector has no usable sign pattern; numerical dead end
            break;
        };
        for (j, piece) in pieces.iter_mut().enumerate() {
            piece.weight = piece.weight - theta * z[j];
        }
        pieces.remove(drop_idx);
        pieces.retain(|p| p.weight > real(1e-13));
    }

    // regroup by point
    let mut grouped: std::collections::BTreeMap<usize, HermMat<T>> = std::collections::BTreeMap::new();
    let q = space.q();
    for p in &pieces {
        let entry = grouped
            .entry(p.point_idx)
            .or_insert_with(|| HermMat::zero(q));
        *entry = entry.add(&p.dyad.scale(p.weight));
    }
    let atoms = grouped
        .into_iter()
        .map(|(k, mass)| Atom {
            point: space.space.label(k).to_string(),
            mass: eig::psd_project(&mass),
        })
        .collect();
    let reduced = AtomicMeasure::new(atoms)?;

    let err = representation_error(space, lambda, &reduced)?;
    if err > real(1e-8) {
        return Err(SpaceError::NotRepresenting(err.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(reduced)
}

/// Convenience: the lift of a scalar space together with `Λ_L` of a
/// measure-built `L`.
pub fn lifted_functional_of_measure<T: Real>(
    e: &ScalarSpace<T>,
    q: usize,
    nu: &AtomicMeasure<T>,
) -> Result<(MatrixFunctionSpace<T>, MomentFunctional<T>), SpaceError> {
    let lift = lift_scalar_space(e, q)?;
    let lambda = functional_from_measure(&lift, nu)?;
    Ok((lift, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::FiniteSpace;
    use crate::testutil;

    fn scalar_line() -> ScalarSpace<f64> {
        let space = FiniteSpace::from_coords(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        ScalarSpace::polynomials(space, 1, 1).unwrap()
    }

    #[test]
    fn l_lambda_round_trip() {
        let mut rng = testutil::rng(51);
        let e = scalar_line();
        let q = 2;
        let lift = lift_scalar_space(&e, q).unwrap();
        for _ in 0..20 {
            let l = MatrixMomentFunctional::new(
                q,
                (0..e.dim()).map(|_| testutil::random_herm(q, &mut rng)).collect(),
            )
            .unwrap();
            let lambda = functional_from_l(&lift, &l).unwrap();
            let back = recover_l(&lift, &lambda).unwrap();
            for (a, b) in l.values.iter().zip(&back.values) {
                assert!(a.sub(b).norm_fro() <= 1e-14);
            }
            let again = functional_from_l(&lift, &back).unwrap();
            assert!(again.sub(&lambda).norm() <= 1e-14);
        }
    }

    #[test]
    fn identity_l_values_on_basis() {
        // L(g) = I_q: Λ(g H_jj) = 1, Λ(g H_jk) = 0 for j ≠ k
        let e = scalar_line();
        let q = 2;
        let lift = lift_scalar_space(&e, q).unwrap();
        let l = MatrixMomentFunctional::new(
            q,
            vec![HermMat::identity(q); e.dim()],
        )
        .unwrap();
        let lambda = functional_from_l(&lift, &l).unwrap();
        for i in 0..e.dim() {
            for j in 0..q {
                for k in 0..q {
                    let v = lambda.values[i * q * q + j * q + k];
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn lfvv_identity() {
        // Λ_L(g vv*) = v* L(g) v
        let mut rng = testutil::rng(53);
        let e = scalar_line();
        let q = 2;
        let lift = lift_scalar_space(&e, q).unwrap();
        let l = MatrixMomentFunctional::new(
            q,
            (0..e.dim()).map(|_| testutil::random_herm(q, &mut rng)).collect(),
        )
        .unwrap();
        let lambda = functional_from_l(&lift, &l).unwrap();
        let hjk = HjkBasis::<f64>::new(q);
        for _ in 0..10 {
            let v = testutil::random_cvec::<f64>(q, &mut rng);
            let dyad = HermMat::rank_one(&v);
            for gi in 0..e.dim() {
                // coefficients of g_i·vv* on the lifted basis
                let mut coeffs = vec![0.0; lift.dim()];
                for (h, c) in hjk.coordinates(&dyad).iter().enumerate() {
                    coeffs[gi * q * q + h] = *c;
                }
                let got = lambda.eval(&coeffs).unwrap();
                let lw = l.values[gi].as_cmat();
                let want: f64 = (0..q)
                    .flat_map(|a| (0..q).map(move |b| (a, b)))
                    .map(|(a, b)| (v[a].conj() * lw[(a, b)] * v[b]).re)
                    .sum();
                assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn measure_functional_zero_and_sums() {
        let e = scalar_line();
        let q = 1;
        let lift = lift_scalar_space(&e, q).unwrap();
        // O-mass measure gives the zero functional
        let nu = AtomicMeasure::new(vec![Atom {
            point: "x1".into(),
            mass: HermMat::zero(1),
        }])
        .unwrap();
        let lambda = functional_from_measure(&lift, &nu).unwrap();
        assert!(lambda.values.iter().all(|v| *v == 0.0));

        // two-atom q=1 measure is the weighted sum of evaluations
        let nu = AtomicMeasure::new(vec![
            Atom {
                point: "x1".into(),
                mass: HermMat::diag(&[0.5]),
            },
            Atom {
                point: "x2".into(),
                mass: HermMat::diag(&[2.0]),
            },
        ])
        .unwrap();
        let lambda = functional_from_measure(&lift, &nu).unwrap();
        // basis: 1 and x at points 0,1,2
        assert!((lambda.values[0] - 2.5).abs() < 1e-14);
        assert!((lambda.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eval_functional_matches_dot() {
        let mut rng = testutil::rng(57);
        let lambda = MomentFunctional::new(
            (0..6).map(|_| testutil::uniform::<f64>(&mut rng, -2.0, 2.0)).collect(),
        );
        let coeffs: Vec<f64> = (0..6).map(|_| testutil::uniform(&mut rng, -2.0, 2.0)).collect();
        let want: f64 = coeffs.iter().zip(&lambda.values).map(|(a, b)| a * b).sum();
        assert_eq!(lambda.eval(&coeffs).unwrap(), want);
        assert_eq!(lambda.eval(&vec![0.0; 6]).unwrap(), 0.0);
        assert!(lambda.eval(&vec![0.0; 5]).is_err());
    }

    #[test]
    fn richter_total_mass_case() {
        // q=1, E = span{1}: δ_a + δ_b reduces to one atom of total mass 2
        let space = FiniteSpace::from_coords(&[vec![0.0], vec![1.0]]).unwrap();
        let e = ScalarSpace::polynomials(space, 1, 0).unwrap();
        let lift = lift_scalar_space(&e, 1).unwrap();
        let nu = AtomicMeasure::new(vec![
            Atom {
                point: "x1".into(),
                mass: HermMat::<f64>::diag(&[1.0]),
            },
            Atom {
                point: "x2".into(),
                mass: HermMat::diag(&[1.0]),
            },
        ])
        .unwrap();
        let lambda = functional_from_measure(&lift, &nu).unwrap();
        let red = richter_reduce(&lift, &lambda, &nu).unwrap();
        assert_eq!(red.atoms.len(), 1);
        assert!((red.atoms[0].mass.trace() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn richter_keeps_small_measures() {
        let mut rng = testutil::rng(59);
        let e = scalar_line();
        let lift = lift_scalar_space(&e, 1).unwrap();
        let nu = AtomicMeasure::new(vec![
            Atom {
                point: "x1".into(),
                mass: testutil::random_psd(1, &mut rng),
            },
            Atom {
                point: "x3".into(),
                mass: testutil::random_psd(1, &mut rng),
            },
        ])
        .unwrap();
        let lambda = functional_from_measure(&lift, &nu).unwrap();
        let red = richter_reduce(&lift, &lambda, &nu).unwrap();
        assert_eq!(red.atoms.len(), 2);
    }

    #[test]
    fn richter_reduces_oversupported() {
        // random 10-atom q=2 measure on 10 points, dim 𝓔 = 8 → ≤ 8 atoms
        let mut rng = testutil::rng(61);
        let coords: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 3.0]).collect();
        let space = FiniteSpace::from_coords(&coords).unwrap();
        let e = ScalarSpace::polynomials(space, 1, 1).unwrap();
        let lift = lift_scalar_space(&e, 2).unwrap();
        assert_eq!(lift.dim(), 8);
        let atoms: Vec<Atom<f64>> = (0..10)
            .map(|i| Atom {
                point: format!("x{}", i + 1),
                mass: testutil::random_psd(2, &mut rng),
            })
            .collect();
        let nu = AtomicMeasure::new(atoms).unwrap();
        let lambda = functional_from_measure(&lift, &nu).unwrap();
        let red = richter_reduce(&lift, &lambda, &nu).unwrap();
        assert!(red.atoms.len() <= 8, "{} atoms", red.atoms.len());
        for a in &red.atoms {
            assert!(eig::psd_check(&a.mass, 1e-9));
        }
        let err = representation_error(&lift, &lambda, &red).unwrap();
        assert!(err <= 1e-8, "residual {err}");
    }

    #[test]
    fn richter_rejects_non_representing() {
        let e = scalar_line();
        let lift = lift_scalar_space(&e, 1).unwrap();
        let nu = AtomicMeasure::new(vec![Atom {
            point: "x1".into(),
            mass: HermMat::diag(&[1.0]),
        }])
        .unwrap();
        let lambda = MomentFunctional::new(vec![5.0, 5.0]);
        assert!(matches!(
            richter_reduce(&lift, &lambda, &nu),
            Err(SpaceError::NotRepresenting(_))
        ));
    }

    #[test]
    fn measure_functional_nonneg_on_pointwise_psd() {
        // Λ^ν(F) ≥ 0 whenever F is pointwise PSD
        let mut rng = testutil::rng(63);
        let e = scalar_line();
        let q = 2;
        let lift = lift_scalar_space(&e, q).unwrap();
        let nu = AtomicMeasure::new(vec![
            Atom {
                point: "x1".into(),
                mass: testutil::random_psd(q, &mut rng),
            },
            Atom {
                point: "x2".into(),
                mass: testutil::random_psd(q, &mut rng),
            },
        ])
        .unwrap();
        let lambda = functional_from_measure(&lift, &nu).unwrap();
        let mut found = 0;
        for _ in 0..200 {
            let coeffs: Vec<f64> = (0..lift.dim())
                .map(|_| testutil::uniform(&mut rng, -1.0, 1.0))
                .collect();
            if lift.is_pointwise_psd(&coeffs, 1e-12) {
                found += 1;
                assert!(lambda.eval(&coeffs).unwrap() >= -1e-10);
            }
        }
        // make sure the PSD sampler found something, else add explicit cones
        let unit = lift.unit().unwrap().coeffs.clone();
        assert!(lambda.eval(&unit).unwrap() >= -1e-10);
        let _ = found;
    }
}
