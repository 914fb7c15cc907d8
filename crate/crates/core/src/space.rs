//! Finite-support function spaces.
//!
//! Everything downstream works over a finite point set: a scalar space `E`
//! of real-valued functions given by value tables, and a matrix space `𝓔`
//! of Hermitian-matrix-valued functions given by per-point matrix tables.
//! Subspaces are represented by choosing a basis, never by predicates.

use crate::eig;
use crate::herm::{trace_inner, HermMat, HjkBasis};
use crate::scalar::{real, Real};
use crate::SpaceError;

/// An ordered finite set of labeled points, optionally with coordinates
/// in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpace<T: Real> {
    points: Vec<Point<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point<T: Real> {
    pub label: String,
    pub coords: Option<Vec<T>>,
}

impl<T: Real> FiniteSpace<T> {
    pub fn new(points: Vec<Point<T>>) -> Result<Self, SpaceError> {
        let mut seen = std::collections::BTreeSet::new();
        let mut coord_len: Option<usize> = None;
        for p in &points {
            if !seen.insert(p.label.clone()) {
                return Err(SpaceError::DuplicateLabel(p.label.clone()));
            }
            if let Some(c) = &p.coords {
                match coord_len {
                    None => coord_len = Some(c.len()),
                    Some(l) if l != c.len() => return Err(SpaceError::CoordLengthMismatch),
                    _ => {}
                }
            }
        }
        Ok(Self { points })
    }

    /// Points labeled `x1..xn` with the given coordinates.
    pub fn from_coords(coords: &[Vec<T>]) -> Result<Self, SpaceError> {
        Self::new(
            coords
                .iter()
                .enumerate()
                .map(|(i, c)| Point {
                    label: format!("x{}", i + 1),
                    coords: Some(c.clone()),
                })
                .collect(),
        )
    }

    /// Unlabeled-coordinate-free points `x1..xn`.
    pub fn from_labels(labels: &[&str]) -> Result<Self, SpaceError> {
        Self::new(
            labels
                .iter()
                .map(|l| Point {
                    label: l.to_string(),
                    coords: None,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.points[idx].label
    }

    pub fn index_of(&self, label: &str) -> Result<usize, SpaceError> {
        self.points
            .iter()
            .position(|p| p.label == label)
            .ok_or_else(|| SpaceError::UnknownPoint(label.to_string()))
    }
}

/// A finite-dimensional space of real-valued functions on a `FiniteSpace`,
/// each basis function a table of values (one per point).
#[derive(Clone, Debug)]
pub struct ScalarSpace<T: Real> {
    pub space: FiniteSpace<T>,
    /// `tables[i][k]` = value of the i-th basis function at point k.
    tables: Vec<Vec<T>>,
    contains_one: bool,
    /// Coefficients expressing the constant 1, when `contains_one`.
    one_coeffs: Option<Vec<T>>,
}

impl<T: Real> ScalarSpace<T> {
    pub fn new(
        space: FiniteSpace<T>,
        tables: Vec<Vec<T>>,
        contains_one: bool,
    ) -> Result<Self, SpaceError> {
        for t in &tables {
            if t.len() != space.len() {
                return Err(SpaceError::BasisShapeMismatch);
            }
        }
        if !eig::gram_rank_full(&tables) {
            return Err(SpaceError::DependentBasis);
        }
        let one_coeffs = if contains_one {
            let coeffs = solve_tables_for(&tables, &vec![T::one(); space.len()]);
            let mut worst = T::zero();
            for k in 0..space.len() {
                let mut v = T::zero();
                for (c, t) in coeffs.iter().zip(&tables) {
                    v = v + *c * t[k];
                }
                worst = worst.max((v - T::one()).abs());
            }
            if worst > real(1e-10) {
                return Err(SpaceError::OneNotInSpan(worst.to_f64().unwrap_or(f64::NAN)));
            }
            Some(coeffs)
        } else {
            None
        };
        Ok(Self {
            space,
            tables,
            contains_one,
            one_coeffs,
        })
    }

    /// Basis of monomials `x^α`, |α| ≤ n, on points with coordinates.
    /// Degree-graded, so the constant 1 comes first.
    pub fn polynomials(space: FiniteSpace<T>, d: usize, n: usize) -> Result<Self, SpaceError> {
        let idx = crate::hankel::MultiIndexSet::new(d, n);
        let mut tables = Vec::new();
        for alpha in idx.indices() {
            let mut row = Vec::with_capacity(space.len());
            for p in space.points() {
                let c = p
                    .coords
                    .as_ref()
                    .ok_or(SpaceError::CoordLengthMismatch)?;
                row.push(monomial_value(c, alpha));
            }
            tables.push(row);
        }
        Self::new(space, tables, true)
    }

    pub fn dim(&self) -> usize {
        self.tables.len()
    }

    pub fn tables(&self) -> &[Vec<T>] {
        &self.tables
    }

    pub fn contains_one(&self) -> bool {
        self.contains_one
    }

    pub fn one_coeffs(&self) -> Option<&[T]> {
        self.one_coeffs.as_deref()
    }

    /// Value at point `k` of the function with the given coefficients.
    pub fn eval(&self, coeffs: &[T], k: usize) -> T {
        coeffs
            .iter()
            .zip(&self.tables)
            .map(|(&c, t)| c * t[k])
            .fold(T::zero(), |a, b| a + b)
    }
}

/// `x^α` for a coordinate vector.
pub fn monomial_value<T: Real>(x: &[T], alpha: &[usize]) -> T {
    x.iter()
        .zip(alpha)
        .map(|(&xi, &a)| xi.powi(a as i32))
        .fold(T::one(), |p, v| p * v)
}

fn solve_tables_for<T: Real>(tables: &[Vec<T>], target: &[T]) -> Vec<T> {
    use crate::cmat::CMat;
    use crate::scalar::creal;
    let rows = target.len();
    let cols = tables.len();
    let a = CMat::from_fn(rows, cols, |i, j| creal(tables[j][i]));
    let b = CMat::from_fn(rows, 1, |i, _| creal(target[i]));
    let x = eig::lstsq(&a, &b);
    (0..cols).map(|i| x[(i, 0)].re).collect()
}

/// The unit element of a matrix function space: coefficients of an `e ∈ 𝓔`
/// with `e(x) ⪰ εI` at every point.
#[derive(Clone, Debug)]
pub struct UnitElement<T: Real> {
    pub coeffs: Vec<T>,
    pub epsilon: T,
}

/// Marker that a matrix space is the lift `𝓗_q(E)` of a scalar space, with
/// basis `{g_i H_jk}` ordered scalar-major.
#[derive(Clone, Debug)]
pub struct LiftInfo {
    pub q: usize,
    pub scalar_dim: usize,
}

/// A finite-dimensional space of Hermitian-matrix-valued functions on a
/// finite point set; basis element `i` is a table of `HermMat`s, one per
/// point.
#[derive(Clone, Debug)]
pub struct MatrixFunctionSpace<T: Real> {
    pub space: FiniteSpace<T>,
    q: usize,
    basis: Vec<Vec<HermMat<T>>>,
    unit: Option<UnitElement<T>>,
    lift: Option<LiftInfo>,
}

impl<T: Real> MatrixFunctionSpace<T> {
    pub fn new(
        space: FiniteSpace<T>,
        q: usize,
        basis: Vec<Vec<HermMat<T>>>,
        unit: Option<UnitElement<T>>,
    ) -> Result<Self, SpaceError> {
        Self::with_lift(space, q, basis, unit, None)
    }

    fn with_lift(
        space: FiniteSpace<T>,
        q: usize,
        basis: Vec<Vec<HermMat<T>>>,
        unit: Option<UnitElement<T>>,
        lift: Option<LiftInfo>,
    ) -> Result<Self, SpaceError> {
        let hjk = HjkBasis::<T>::new(q);
        let mut flat = Vec::with_capacity(basis.len());
        for table in &basis {
            if table.len() != space.len() {
                return Err(SpaceError::BasisShapeMismatch);
            }
            let mut row = Vec::with_capacity(space.len() * q * q);
            for m in table {
                if m.dim() != q {
                    return Err(SpaceError::BasisShapeMismatch);
                }
                row.extend(hjk.coordinates(m));
            }
            flat.push(row);
        }
        if !eig::gram_rank_full(&flat) {
            return Err(SpaceError::DependentBasis);
        }
        let out = Self {
            space,
            q,
            basis,
            unit: None,
            lift,
        };
        let out = match unit {
            None => out,
            Some(u) => out.with_unit(u)?,
        };
        Ok(out)
    }

    /// Attach a unit element, validating `e(x) − εI ⪰ O` at every point.
    pub fn with_unit(mut self, unit: UnitElement<T>) -> Result<Self, SpaceError> {
        if unit.coeffs.len() != self.basis.len() {
            return Err(SpaceError::LengthMismatch {
                got: unit.coeffs.len(),
                want: self.basis.len(),
            });
        }
        let eps_id = HermMat::identity(self.q).scale(unit.epsilon);
        for k in 0..self.space.len() {
            let e = self.eval(&unit.coeffs, k);
            if !eig::psd_check(&e.sub(&eps_id), real(1e-9)) {
                return Err(SpaceError::UnitNotPositive(
                    self.space.label(k).to_string(),
                ));
            }
        }
        self.unit = Some(unit);
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<HermMat<T>>] {
        &self.basis
    }

    /// Value table of basis element `i`: `basis_at(i, k)` = `F_i(x_k)`.
    pub fn basis_at(&self, i: usize, k: usize) -> &HermMat<T> {
        &self.basis[i][k]
    }

    pub fn unit(&self) -> Option<&UnitElement<T>> {
        self.unit.as_ref()
    }

    pub fn lift_info(&self) -> Option<&LiftInfo> {
        self.lift.as_ref()
    }

    /// `F(x_k)` for the function with the given coefficients.
    pub fn eval(&self, coeffs: &[T], k: usize) -> HermMat<T> {
        let mut out = HermMat::zero(self.q);
        for (c, table) in coeffs.iter().zip(&self.basis) {
            out = out.add(&table[k].scale(*c));
        }
        out
    }

    /// Whether the function with the given coefficients is pointwise PSD.
    pub fn is_pointwise_psd(&self, coeffs: &[T], tol: T) -> bool {
        (0..self.space.len()).all(|k| eig::psd_check(&self.eval(coeffs, k), tol))
    }

    /// Orthogonal projection of an arbitrary per-point Hermitian table onto
    /// the span of the basis; returns the coefficient vector.
    pub fn project_table(&self, table: &[HermMat<T>]) -> Vec<T> {
        let n = self.dim();
        let dot = |a: &[HermMat<T>], b: &[HermMat<T>]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| trace_inner(x, y))
                .fold(T::zero(), |s, v| s + v)
        };
        let mut g = crate::cmat::CMat::zeros(n, n);
        let mut rhs = vec![T::zero(); n];
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = crate::scalar::creal(dot(&self.basis[i], &self.basis[j]));
            }
            rhs[i] = dot(&self.basis[i], table);
        }
        let pinv = eig::SymPinv::new(&HermMat::symmetrize(g)).expect("gram eig");
        pinv.apply(&rhs)
    }
}

/// Lift a scalar space to `𝓗_q(E)` with basis `{g_i H_jk}` (scalar index
/// major, `H_jk` row-major). When `1 ∈ E`, the unit element `1·I_q` with
/// `ε = 1` is attached.
pub fn lift_scalar_space<T: Real>(
    e: &ScalarSpace<T>,
    q: usize,
) -> Result<MatrixFunctionSpace<T>, SpaceError> {
    let hjk = HjkBasis::<T>::new(q);
    let mut basis = Vec::with_capacity(e.dim() * q * q);
    for table in e.tables() {
        for h in hjk.iter() {
            let row: Vec<HermMat<T>> = table.iter().map(|&v| h.scale(v)).collect();
            basis.push(row);
        }
    }
    let unit = e.one_coeffs().map(|coeffs| {
        let mut u = vec![T::zero(); e.dim() * q * q];
        for (i, &c) in coeffs.iter().enumerate() {
            for j in 0..q {
                // H_jj components of I_q are 1
                u[i * q * q + j * q + j] = c;
            }
        }
        UnitElement {
            coeffs: u,
            epsilon: T::one(),
        }
    });
    MatrixFunctionSpace::with_lift(
        e.space.clone(),
        q,
        basis,
        unit,
        Some(LiftInfo {
            q,
            scalar_dim: e.dim(),
        }),
    )
}
