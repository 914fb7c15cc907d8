//! Built-in problem fixtures used by the test suites and the CLI.
//!
//! `e1012`: a single point carrying a 2×2 functional whose mass set is the
//! antichain `{A_η = [[1,η],[η,1]] : |η| ≤ 1}` — every mass is maximal and
//! none is largest.
//!
//! `e1802`: four points of the unit square under `E = span{1,x,x²,y,y²}`.
//! The evaluations satisfy `ℓ_{x0} + ℓ_{x3} = ℓ_{x1} + ℓ_{x2}`, so the
//! representing measures of a four-atom measure form the one-parameter
//! family `M₀+A, M₁−A, M₂−A, M₃+A` over Hermitian `A` with
//! `M₁ ⪰ A ⪰ −M₀` and `M₂ ⪰ A ⪰ −M₃`.

use crate::functional::{functional_from_measure, Atom, AtomicMeasure, MomentFunctional};
use crate::herm::HermMat;
use crate::masses::{build_nolargest_fixture, MassOptions, NoLargestFixture};
use crate::scalar::{creal, Real};
use crate::space::{lift_scalar_space, FiniteSpace, MatrixFunctionSpace, ScalarSpace};
use crate::MassError;

/// `A_η = [[1,η],[η,1]]`.
pub fn a_eta<T: Real>(eta: T) -> HermMat<T> {
    let mut m = crate::cmat::CMat::<T>::identity(2);
    m[(0, 1)] = creal(eta);
    m[(1, 0)] = creal(eta);
    HermMat::symmetrize(m)
}

/// The single-point antichain fixture. Space dimension 3, `q = 2`;
/// the point is labeled `x1`.
pub fn e1012<T: Real>() -> Result<NoLargestFixture<T>, MassError> {
    let space = FiniteSpace::from_coords(&[vec![T::zero()]])?;
    let e = ScalarSpace::polynomials(space, 1, 0)?;
    build_nolargest_fixture(
        &e,
        &[("x1".to_string(), T::one(), T::zero())],
        "x1",
        &MassOptions::default(),
    )
}

/// The four-point square fixture with prescribed masses (`q = 2`).
/// Points are labeled `x0..x3` at `(0,0), (1,0), (0,1), (1,1)`.
pub struct SquareFixture<T: Real> {
    pub space: MatrixFunctionSpace<T>,
    pub scalar: ScalarSpace<T>,
    pub lambda: MomentFunctional<T>,
    pub measure: AtomicMeasure<T>,
}

pub fn e1802<T: Real>(masses: [HermMat<T>; 4]) -> Result<SquareFixture<T>, MassError> {
    let pts = FiniteSpace::new(vec![
        crate::space::Point {
            label: "x0".into(),
            coords: Some(vec![T::zero(), T::zero()]),
        },
        crate::space::Point {
            label: "x1".into(),
            coords: Some(vec![T::one(), T::zero()]),
        },
        crate::space::Point {
            label: "x2".into(),
            coords: Some(vec![T::zero(), T::one()]),
        },
        crate::space::Point {
            label: "x3".into(),
            coords: Some(vec![T::one(), T::one()]),
        },
    ])?;
    // E = span{1, x, x², y, y²}; on the square's vertices x² = x and
    // y² = y pointwise, so the value tables reduce to {1, x, y}
    let tables: Vec<Vec<T>> = vec![
        vec![T::one(); 4],
        pts.points()
            .iter()
            .map(|p| p.coords.as_ref().unwrap()[0])
            .collect(),
        pts.points()
            .iter()
            .map(|p| p.coords.as_ref().unwrap()[1])
            .collect(),
    ];
    let scalar = ScalarSpace::new(pts, tables, true)?;
    let space = lift_scalar_space(&scalar, 2)?;
    let measure = AtomicMeasure::new(
        masses
            .into_iter()
            .enumerate()
            .map(|(k, mass)| Atom {
                point: format!("x{k}"),
                mass,
            })
            .collect(),
    )?;
    let lambda = functional_from_measure(&space, &measure)?;
    Ok(SquareFixture {
        space,
        scalar,
        lambda,
        measure,
    })
}

/// `e1802` with all four masses equal to the identity: the mass set at
/// `x0` is the order interval `[O, 2I]` with unique maximal element `2I`.
pub fn e1802_identity<T: Real>() -> Result<SquareFixture<T>, MassError> {
    let id = HermMat::identity(2);
    e1802([id.clone(), id.clone(), id.clone(), id])
}

/// Mass grid oracle for the square fixture: `Y = M₀ + A` is a mass at `x0`
/// iff `M₁ ⪰ A ⪰ −M₀` and `M₂ ⪰ A ⪰ −M₃`.
pub fn e1802_membership_oracle<T: Real>(
    masses: &[HermMat<T>; 4],
    a: &HermMat<T>,
    tol: T,
) -> bool {
    crate::eig::loewner_geq(&masses[1], a, tol)
        && crate::eig::loewner_geq(a, &masses[0].scale(-T::one()), tol)
        && crate::eig::loewner_geq(&masses[2], a, tol)
        && crate::eig::loewner_geq(a, &masses[3].scale(-T::one()), tol)
}

/// Margin of the grid oracle: the most negative eigenvalue across the four
/// order constraints (positive = strictly inside).
pub fn e1802_membership_margin<T: Real>(masses: &[HermMat<T>; 4], a: &HermMat<T>) -> T {
    let checks = [
        masses[1].sub(a),
        a.add(&masses[0]),
        masses[2].sub(a),
        a.add(&masses[3]),
    ];
    checks
        .iter()
        .map(|m| {
            crate::eig::eigh(m)
                .expect("eigh convergence")
                .min_eigenvalue()
        })
        .fold(T::infinity(), T::min)
}

/// The `δ_1` scalar moment sequence (`s_k = 1` for every k), handy as a
/// smallest nontrivial Hankel fixture.
pub fn delta_one_sequence<T: Real>(degree: usize) -> crate::hankel::MomentSequence<T> {
    crate::hankel::MomentSequence::scalar(1, degree, &vec![T::one(); degree + 1])
        .expect("complete scalar sequence")
}
