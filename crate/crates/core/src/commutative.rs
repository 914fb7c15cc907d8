//! Commutative matrix moment functionals: detection, diagonalization into
//! scalar functionals, and reassembly of commuting-mass measures.
//!
//! A matrix moment functional `L` with pairwise commuting values is
//! unitarily a direct sum of scalar functionals: `U* L(g) U` is diagonal
//! for one unitary `U`, and the diagonal entries define scalar moment
//! functionals `l_1, …, l_q`. Conversely, scalar representing measures of
//! the `l_r` reassemble (atoms unioned, absent weights zero) into a
//! representing measure with pairwise commuting masses.

use crate::cmat::CMat;
use crate::eig;
use crate::functional::{Atom, AtomicMeasure, MatrixMomentFunctional};
use crate::herm::HermMat;
use crate::scalar::{real, Real};
use crate::{LinAlgError, SpaceError};

/// Pairwise commutativity of the basis values, at a tolerance relative to
/// the largest value norm (bilinearity reduces the quantifier to a basis).
pub fn is_commutative<T: Real>(l: &MatrixMomentFunctional<T>, tol: T) -> bool {
    let scale = l
        .values
        .iter()
        .map(|m| m.norm_fro())
        .fold(T::zero(), T::max)
        .max(T::one());
    for i in 0..l.values.len() {
        for j in (i + 1)..l.values.len() {
            let c = l.values[i].commutator(&l.values[j]).norm_fro();
            if c > tol * scale * scale {
                return false;
            }
        }
    }
    true
}

/// A scalar functional on the same scalar basis, as its value vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFunctional<T: Real> {
    pub values: Vec<T>,
}

/// Diagonalization `U* L(g_i) U = diag(l_1(g_i), …, l_q(g_i))`.
///
/// Columns of `U` are the common eigenvectors; `l_r` collects the r-th
/// diagonal entries across the basis.
pub fn diagonalize<T: Real>(
    l: &MatrixMomentFunctional<T>,
    tol: T,
) -> Result<(CMat<T>, Vec<ScalarFunctional<T>>), LinAlgError> {
    let (u, diags) = eig::simultaneous_diagonalize(&l.values, tol)?;
    let q = l.q;
    let mut scalars = Vec::with_capacity(q);
    for r in 0..q {
        scalars.push(ScalarFunctional {
            values: diags.iter().map(|d| d[r]).collect(),
        });
    }
    Ok((u, scalars))
}

/// Reassembles a matrix measure from a diagonalizing unitary and scalar
/// atomic measures `ν_1, …, ν_q` (all `q = 1`): atoms are unioned, absent
/// weights are zero, and the mass at `x_j` is `U diag(c_{1j},…,c_{qj}) U*`.
/// All masses pairwise commute by construction (this is checked).
pub fn commuting_measure_from_diagonal<T: Real>(
    u: &CMat<T>,
    scalar_measures: &[AtomicMeasure<T>],
) -> Result<AtomicMeasure<T>, SpaceError> {
    let q = scalar_measures.len();
    if u.rows() != q || u.cols() != q {
        return Err(SpaceError::LinAlg(LinAlgError::NotSquare {
            rows: u.rows(),
            cols: u.cols(),
        }));
    }
    // union of atoms, sorted for determinism
    let mut labels: Vec<String> = scalar_measures
        .iter()
        .flat_map(|nu| nu.atoms.iter().map(|a| a.point.clone()))
        .collect();
    labels.sort();
    labels.dedup();

    let mut atoms = Vec::with_capacity(labels.len());
    for label in labels {
        let mut weights = Vec::with_capacity(q);
        for nu in scalar_measures {
            let w = nu
                .atoms
                .iter()
                .find(|a| a.point == label)
                .map(|a| a.mass.trace())
                .unwrap_or_else(T::zero);
            if w < -real::<T>(1e-10) {
                return Err(SpaceError::NotRepresenting(w.to_f64().unwrap_or(f64::NAN)));
            }
            weights.push(w.max(T::zero()));
        }
        let mass = HermMat::from_spectrum(u, &weights);
        atoms.push(Atom {
            point: label,
            mass,
        });
    }
    let nu = AtomicMeasure::new(atoms)?;
    // commuting by construction; verify numerically
    for i in 0..nu.atoms.len() {
        for j in (i + 1)..nu.atoms.len() {
            let c = nu.atoms[i].mass.commutator(&nu.atoms[j].mass).norm_fro();
            debug_assert!(c <= real(1e-8), "masses fail to commute: {c:?}");
        }
    }
    Ok(nu)
}

/// `L^ν` has commuting values iff the masses pairwise commute; the
/// trace-normalized densities inherit this exactly.
pub fn masses_commute<T: Real>(nu: &AtomicMeasure<T>, tol: T) -> bool {
    let scale = nu
        .atoms
        .iter()
        .map(|a| a.mass.norm_fro())
        .fold(T::one(), T::max);
    for i in 0..nu.atoms.len() {
        for j in (i + 1)..nu.atoms.len() {
            if nu.atoms[i].mass.commutator(&nu.atoms[j].mass).norm_fro() > tol * scale * scale {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::MatrixMomentFunctional;
    use crate::scalar::creal;
    use crate::testutil;

    #[test]
    fn diagonal_values_commute() {
        let l = MatrixMomentFunctional::new(
            2,
            vec![
                HermMat::<f64>::diag(&[1.0, 2.0]),
                HermMat::diag(&[3.0, -1.0]),
            ],
        )
        .unwrap();
        assert!(is_commutative(&l, 1e-9));
    }

    #[test]
    fn pauli_pair_does_not_commute() {
        let mut x = CMat::<f64>::zeros(2, 2);
        x[(0, 1)] = creal(1.0);
        x[(1, 0)] = creal(1.0);
        let l = MatrixMomentFunctional::new(
            2,
            vec![HermMat::new(x).unwrap(), HermMat::diag(&[1.0, -1.0])],
        )
        .unwrap();
        assert!(!is_commutative(&l, 1e-9));
    }

    #[test]
    fn identity_always_commutes() {
        let mut x = CMat::<f64>::zeros(2, 2);
        x[(0, 1)] = creal(1.0);
        x[(1, 0)] = creal(1.0);
        let l = MatrixMomentFunctional::new(
            2,
            vec![HermMat::new(x).unwrap(), HermMat::identity(2)],
        )
        .unwrap();
        assert!(is_commutative(&l, 1e-9));
    }

    #[test]
    fn diagonalize_diagonal_input() {
        let l = MatrixMomentFunctional::new(2, vec![HermMat::<f64>::diag(&[2.0, 3.0])]).unwrap();
        let (u, scalars) = diagonalize(&l, 1e-9).unwrap();
        assert!(u.sub(&CMat::identity(2)).norm_fro() < 1e-12);
        assert_eq!(scalars[0].values, vec![2.0]);
        assert_eq!(scalars[1].values, vec![3.0]);
    }

    #[test]
    fn diagonalize_offdiagonal_pair() {
        let mut x = CMat::<f64>::zeros(2, 2);
        x[(0, 1)] = creal(1.0);
        x[(1, 0)] = creal(1.0);
        let l = MatrixMomentFunctional::new(
            2,
            vec![HermMat::new(x).unwrap(), HermMat::identity(2)],
        )
        .unwrap();
        let (u, scalars) = diagonalize(&l, 1e-9).unwrap();
        // l-values (±1) for the first element, (1,1) for the identity
        let mut firsts = vec![scalars[0].values[0], scalars[1].values[0]];
        firsts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((firsts[0] + 1.0).abs() < 1e-12);
        assert!((firsts[1] - 1.0).abs() < 1e-12);
        assert!((scalars[0].values[1] - 1.0).abs() < 1e-12);
        assert!((scalars[1].values[1] - 1.0).abs() < 1e-12);
        // columns are the (1,±1)/√2 pair
        let s = 1.0 / 2.0_f64.sqrt();
        for c in 0..2 {
            let col = u.column(c);
            assert!((col[0].norm() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_round_trip() {
        let mut rng = testutil::rng(163);
        for _ in 0..25 {
            let q = 3;
            let u = testutil::random_unitary::<f64>(q, &mut rng);
            let l = MatrixMomentFunctional::new(
                q,
                (0..4)
                    .map(|_| {
                        let d: Vec<f64> =
                            (0..q).map(|_| testutil::uniform(&mut rng, -2.0, 2.0)).collect();
                        HermMat::from_spectrum(&u, &d)
                    })
                    .collect(),
            )
            .unwrap();
            assert!(is_commutative(&l, 1e-9));
            let (w, scalars) = diagonalize(&l, 1e-9).unwrap();
            for (i, lv) in l.values.iter().enumerate() {
                let diag: Vec<f64> = (0..q).map(|r| scalars[r].values[i]).collect();
                let back = HermMat::from_spectrum(&w, &diag);
                assert!(back.sub(lv).norm_fro() <= 1e-8 * lv.norm_fro().max(1.0));
            }
        }
    }

    #[test]
    fn assembly_disjoint_atoms() {
        // U = I, ν₁ = δ_a, ν₂ = δ_b: masses diag(1,0) at a and diag(0,1) at b
        let nu1 = AtomicMeasure::new(vec![Atom {
            point: "a".into(),
            mass: HermMat::<f64>::diag(&[1.0]),
        }])
        .unwrap();
        let nu2 = AtomicMeasure::new(vec![Atom {
            point: "b".into(),
            mass: HermMat::diag(&[1.0]),
        }])
        .unwrap();
        let nu = commuting_measure_from_diagonal(&CMat::identity(2), &[nu1, nu2]).unwrap();
        assert_eq!(nu.atoms.len(), 2);
        let at_a = nu.atoms.iter().find(|a| a.point == "a").unwrap();
        assert!(at_a.mass.sub(&HermMat::diag(&[1.0, 0.0])).norm_fro() < 1e-12);
        let at_b = nu.atoms.iter().find(|a| a.point == "b").unwrap();
        assert!(at_b.mass.sub(&HermMat::diag(&[0.0, 1.0])).norm_fro() < 1e-12);
    }

    #[test]
    fn assembly_shared_atom_generic_unitary() {
        let mut rng = testutil::rng(167);
        let u = testutil::random_unitary::<f64>(2, &mut rng);
        let nu1 = AtomicMeasure::new(vec![Atom {
            point: "a".into(),
            mass: HermMat::<f64>::diag(&[0.7]),
        }])
        .unwrap();
        let nu2 = AtomicMeasure::new(vec![Atom {
            point: "a".into(),
            mass: HermMat::diag(&[1.3]),
        }])
        .unwrap();
        let nu = commuting_measure_from_diagonal(&u, &[nu1, nu2]).unwrap();
        assert_eq!(nu.atoms.len(), 1);
        let want = HermMat::from_spectrum(&u, &[0.7, 1.3]);
        assert!(nu.atoms[0].mass.sub(&want).norm_fro() < 1e-12);
        assert!(crate::eig::psd_check(&nu.atoms[0].mass, 1e-10));
        assert!(masses_commute(&nu, 1e-9));
    }

    #[test]
    fn densities_commute_iff_masses_do() {
        let mut rng = testutil::rng(173);
        let u = testutil::random_unitary::<f64>(2, &mut rng);
        let commuting = AtomicMeasure::new(vec![
            Atom {
                point: "a".into(),
                mass: HermMat::from_spectrum(&u, &[1.0, 2.0]),
            },
            Atom {
                point: "b".into(),
                mass: HermMat::from_spectrum(&u, &[3.0, 0.5]),
            },
        ])
        .unwrap();
        assert!(masses_commute(&commuting, 1e-9));
        let densities = commuting.densities(1e-12);
        for i in 0..densities.len() {
            for j in (i + 1)..densities.len() {
                assert!(
                    densities[i].1.commutator(&densities[j].1).norm_fro() < 1e-10
                );
            }
        }

        let non_commuting = AtomicMeasure::new(vec![
            Atom {
                point: "a".into(),
                mass: testutil::random_psd(2, &mut rng),
            },
            Atom {
                point: "b".into(),
                mass: testutil::random_psd(2, &mut rng),
            },
        ])
        .unwrap();
        let densities = non_commuting.densities(1e-12);
        let masses_c = masses_commute(&non_commuting, 1e-9);
        let dens_c = densities[0].1.commutator(&densities[1].1).norm_fro() < 1e-9;
        assert_eq!(masses_c, dens_c);
    }
}
