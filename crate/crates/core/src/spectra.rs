//! Representing-measure spectrahedra over finite supports and the conic
//! feasibility oracle.
//!
//! The solution set is `{(M_k) ⪰ O : Σ_k tr(F_i(x_k)M_k) = Λ(F_i)}`,
//! optionally with pinned masses (`M_{x_p} = Y` exactly) and trace
//! halfspaces (`tr(M_{x_h} D) ≥ b`). Feasibility runs Dykstra's alternating
//! projections between the affine subspace, the product PSD cone and the
//! halfspaces; only eigendecompositions are needed.
//!
//! "Infeasible" without inconsistent equations is a stall heuristic and is
//! flagged as such (`certain = false`); bisection callers treat
//! inconclusive as infeasible and tighten tolerances.

use rand::Rng;

use crate::eig;
use crate::functional::{Atom, AtomicMeasure, MomentFunctional};
use crate::herm::{HermMat, HjkBasis};
use crate::scalar::{real, Real};
use crate::space::MatrixFunctionSpace;
use crate::SpectraError;

/// `tr(M_{point} · direction) ≥ bound`.
#[derive(Clone, Debug)]
pub struct Halfspace<T: Real> {
    pub point: String,
    pub direction: HermMat<T>,
    pub bound: T,
}

/// `M_{point} = mass` exactly.
#[derive(Clone, Debug)]
pub struct Pin<T: Real> {
    pub point: String,
    pub mass: HermMat<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeasStatus {
    Feasible,
    Infeasible,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct FeasibilityReport<T: Real> {
    pub status: FeasStatus,
    pub witness: Option<AtomicMeasure<T>>,
    /// Final max constraint violation of the (cone-exact) iterate.
    pub distance: T,
    pub iterations: usize,
    /// `true` only for infeasibility certified by inconsistent equations.
    pub certain: bool,
    /// Cycles on which the distance measure increased noticeably.
    pub monotone_violations: usize,
}

impl<T: Real> FeasibilityReport<T> {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasStatus::Feasible
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions<T: Real> {
    pub tol: T,
    pub max_iter: usize,
    /// Consecutive stalled cycles before declaring (heuristic) infeasibility.
    pub stall_window: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: real(1e-7),
            max_iter: 20_000,
            stall_window: 200,
        }
    }
}

/// The affine-plus-conic feasibility problem, with the affine projection
/// cache (Gram pseudo-inverse) built eagerly.
pub struct Spectrahedron<T: Real> {
    space: MatrixFunctionSpace<T>,
    q: usize,
    npoints: usize,
    dim: usize,
    hjk: HjkBasis<T>,
    halfspaces: Vec<(usize, Vec<T>, T)>, // (point idx, direction coords, bound)
    amat: Vec<T>,                        // row-major R×D
    bvec: Vec<T>,
    rows: usize,
    pinv: eig::SymPinv<T>,
    scale: T,
}

impl<T: Real> Spectrahedron<T> {
    pub fn new(
        space: &MatrixFunctionSpace<T>,
        target: &MomentFunctional<T>,
        pins: &[Pin<T>],
        halfspaces: &[Halfspace<T>],
    ) -> Result<Self, SpectraError> {
        if target.dim() != space.dim() {
            return Err(SpectraError::TargetMismatch {
                got: target.dim(),
                want: space.dim(),
            });
        }
        let q = space.q();
        let npoints = space.space.len();
        let dim = npoints * q * q;
        let hjk = HjkBasis::<T>::new(q);

        let mut amat: Vec<T> = Vec::new();
        let mut bvec: Vec<T> = Vec::new();
        // moment equations
        for i in 0..space.dim() {
            let mut row = vec![T::zero(); dim];
            for k in 0..npoints {
                let coords = hjk.coordinates(space.basis_at(i, k));
                row[k * q * q..(k + 1) * q * q].copy_from_slice(&coords);
            }
            amat.extend(row);
            bvec.push(target.values[i]);
        }
        // pins: q² coordinate equations each
        for pin in pins {
            let k = space
                .space
                .index_of(&pin.point)
                .map_err(|_| SpectraError::UnknownPoint(pin.point.clone()))?;
            let coords = hjk.coordinates(&pin.mass);
            for (h, &c) in coords.iter().enumerate() {
                let mut row = vec![T::zero(); dim];
                row[k * q * q + h] = T::one();
                amat.extend(row);
                bvec.push(c);
            }
        }
        let rows = bvec.len();

        // Gram AAᵀ and its pseudo-inverse
        let mut gram = crate::cmat::CMat::zeros(rows, rows);
        for i in 0..rows {
            for j in i..rows {
                let mut s = T::zero();
                for c in 0..dim {
                    s = s + amat[i * dim + c] * amat[j * dim + c];
                }
                gram[(i, j)] = crate::scalar::creal(s);
                gram[(j, i)] = crate::scalar::creal(s);
            }
        }
        let pinv = eig::SymPinv::new(&HermMat::symmetrize(gram))?;

        let halfspaces = halfspaces
            .iter()
            .map(|h| {
                let k = space
                    .space
                    .index_of(&h.point)
                    .map_err(|_| SpectraError::UnknownPoint(h.point.clone()))?;
                Ok((k, hjk.coordinates(&h.direction), h.bound))
            })
            .collect::<Result<Vec<_>, SpectraError>>()?;

        let scale = bvec
            .iter()
            .map(|v| v.abs())
            .fold(T::one(), T::max);

        Ok(Self {
            space: space.clone(),
            q,
            npoints,
            dim,
            hjk,
            halfspaces,
            amat,
            bvec,
            rows,
            pinv,
            scale,
        })
    }

    fn residual(&self, x: &[T]) -> Vec<T> {
        let mut r = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let mut s = T::zero();
            for c in 0..self.dim {
                s = s + self.amat[i * self.dim + c] * x[c];
            }
            r[i] = s - self.bvec[i];
        }
        r
    }

    fn project_affine(&self, x: &mut Vec<T>) {
        let r = self.residual(x);
        let w = self.pinv.apply(&r);
        for i in 0..self.rows {
            let wi = w[i];
            if wi == T::zero() {
                continue;
            }
            for c in 0..self.dim {
                x[c] = x[c] - self.amat[i * self.dim + c] * wi;
            }
        }
    }

    fn mass_at(&self, x: &[T], k: usize) -> HermMat<T> {
        self.hjk
            .from_coordinates(&x[k * self.q * self.q..(k + 1) * self.q * self.q])
    }

    fn project_cone(&self, x: &mut Vec<T>) {
        for k in 0..self.npoints {
            let m = self.mass_at(x, k);
            let p = eig::psd_project(&m);
            let coords = self.hjk.coordinates(&p);
            x[k * self.q * self.q..(k + 1) * self.q * self.q].copy_from_slice(&coords);
        }
    }

    /// Max over points of the negative-eigenvalue violation at `x`.
    fn cone_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for k in 0..self.npoints {
            let m = self.mass_at(x, k);
            let d = eig::eigh(&m).expect("eigh convergence");
            worst = worst.max(-d.min_eigenvalue());
        }
        worst.max(T::zero())
    }

    fn halfspace_violation(&self, x: &[T]) -> T {
        let qq = self.q * self.q;
        let mut worst = T::zero();
        for (k, dir, bound) in &self.halfspaces {
            let dot = dir
                .iter()
                .zip(&x[k * qq..(k + 1) * qq])
                .map(|(&a, &b)| a * b)
                .fold(T::zero(), |s, v| s + v);
            worst = worst.max(*bound - dot);
        }
        worst.max(T::zero())
    }

    fn affine_violation(&self, x: &[T]) -> T {
        self.residual(x)
            .iter()
            .map(|&v| v * v)
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Min-norm solution of the affine system; the default start point.
    pub fn affine_start(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.dim];
        self.project_affine(&mut x);
        x
    }

    fn witness(&self, x: &[T]) -> AtomicMeasure<T> {
        let atoms = (0..self.npoints)
            .map(|k| Atom {
                point: self.space.space.label(k).to_string(),
                mass: eig::psd_project(&self.mass_at(x, k)),
            })
            .collect();
        AtomicMeasure { atoms }
    }

    /// Dykstra's alternating projections; see module docs.
    pub fn feasible(&self, opts: &SolveOptions<T>, warm: Option<&[T]>) -> FeasibilityReport<T> {
        let tol_abs = opts.tol * self.scale;

        // inconsistent equations: certainly infeasible
        let start = match warm {
            Some(w) if w.len() == self.dim => {
                let mut x = w.to_vec();
                self.project_affine(&mut x);
                x
            }
            _ => self.affine_start(),
        };
        let affres = self.affine_violation(&start);
        if affres > tol_abs.max(self.scale * real(1e-9)) * real(10.0) {
            return FeasibilityReport {
                status: FeasStatus::Infeasible,
                witness: None,
                distance: affres,
                iterations: 0,
                certain: true,
                monotone_violations: 0,
            };
        }

        let mut x = start;
        let qq = self.q * self.q;
        let mut p_cone = vec![T::zero(); self.dim];
        let mut p_half: Vec<Vec<T>> = vec![vec![T::zero(); self.dim]; self.halfspaces.len()];

        let mut best = T::infinity();
        let mut stalled = 0usize;
        let mut monotone_violations = 0usize;
        let mut prev = T::infinity();

        for iter in 1..=opts.max_iter {
            // affine projection (no Dykstra increment needed on a subspace)
            self.project_affine(&mut x);

            // PSD cone with increment
            for (xi, pi) in x.iter_mut().zip(&p_cone) {
                *xi = *xi + *pi;
            }
            let before = x.clone();
            self.project_cone(&mut x);
            for i in 0..self.dim {
                p_cone[i] = before[i] - x[i];
            }

            // halfspaces with increments
            for (h, (k, dir, bound)) in self.halfspaces.iter().enumerate() {
                for (xi, pi) in x.iter_mut().zip(&p_half[h]) {
                    *xi = *xi + *pi;
                }
                let seg = &x[k * qq..(k + 1) * qq];
                let dot = dir
                    .iter()
                    .zip(seg)
                    .map(|(&a, &b)| a * b)
                    .fold(T::zero(), |s, v| s + v);
                let before: Vec<T> = x.clone();
                if dot < *bound {
                    let nrm = dir
                        .iter()
                        .map(|&a| a * a)
                        .fold(T::zero(), |s, v| s + v);
                    if nrm > T::zero() {
                        let step = (*bound - dot) / nrm;
                        for (i, &a) in dir.iter().enumerate() {
                            x[k * qq + i] = x[k * qq + i] + step * a;
                        }
                    }
                }
                for i in 0..self.dim {
                    p_half[h][i] = before[i] - x[i];
                }
            }

            // distance of the cone-exact iterate to the remaining sets
            let dist = self
                .affine_violation(&x)
                .max(self.cone_violation(&x) )
                .max(self.halfspace_violation(&x));

            if dist <= tol_abs {
                return FeasibilityReport {
                    status: FeasStatus::Feasible,
                    witness: Some(self.witness(&x)),
                    distance: dist,
                    iterations: iter,
                    certain: true,
                    monotone_violations,
                };
            }
            if dist > prev * (T::one() + real(1e-6)) && iter > 1 {
                monotone_violations += 1;
            }
            prev = dist;

            // stall: no meaningful progress while clearly away from feasibility
            if dist > tol_abs * real(10.0) && dist > best * (T::one() - real(1e-4)) {
                stalled += 1;
                if stalled >= opts.stall_window {
                    return FeasibilityReport {
                        status: FeasStatus::Infeasible,
                        witness: None,
                        distance: dist,
                        iterations: iter,
                        certain: false,
                        monotone_violations,
                    };
                }
            } else {
                stalled = 0;
            }
            best = best.min(dist);
        }

        let dist = self
            .affine_violation(&x)
            .max(self.cone_violation(&x))
            .max(self.halfspace_violation(&x));
        FeasibilityReport {
            status: FeasStatus::Inconclusive,
            witness: None,
            distance: dist,
            iterations: opts.max_iter,
            certain: false,
            monotone_violations,
        }
    }
}

/// Existence test: on a finite space with a unit element, positivity on the
/// pointwise-PSD cone is equivalent to being a moment functional, so the
/// test is direct feasibility of the unpinned spectrahedron.
pub fn is_moment_functional<T: Real>(
    space: &MatrixFunctionSpace<T>,
    lambda: &MomentFunctional<T>,
    opts: &SolveOptions<T>,
) -> Result<FeasibilityReport<T>, SpectraError> {
    if space.unit().is_none() {
        return Err(SpectraError::MissingUnit);
    }
    let s = Spectrahedron::new(space, lambda, &[], &[])?;
    Ok(s.feasible(opts, None))
}

/// Randomized falsifier: searches for a pointwise-PSD element `F` of the
/// space with `Λ(F) < −tol`. Samples sums of `g·vv*` with `g ≥ 0`,
/// projects them into the span and keeps projections that stay pointwise
/// PSD. Returns the coefficient vector of a violator, if found.
pub fn positivity_violation_search<T: Real>(
    space: &MatrixFunctionSpace<T>,
    lambda: &MomentFunctional<T>,
    trials: usize,
    tol: T,
    rng: &mut impl Rng,
) -> Option<Vec<T>> {
    let q = space.q();
    let npoints = space.space.len();
    for _ in 0..trials {
        let terms = 1 + rng.gen_range(0..3usize);
        let mut table: Vec<HermMat<T>> = vec![HermMat::zero(q); npoints];
        for _ in 0..terms {
            let v = crate::testutil::random_cvec::<T>(q, rng);
            let dyad = HermMat::rank_one(&v);
            for item in table.iter_mut() {
                let g: T = crate::testutil::uniform::<T>(rng, -1.5, 1.5);
                *item = item.add(&dyad.scale(g * g));
            }
        }
        let coeffs = space.project_table(&table);
        if !space.is_pointwise_psd(&coeffs, real(1e-10)) {
            continue;
        }
        let val = lambda.eval(&coeffs).ok()?;
        // reject near-zero functions; scale-aware violation test
        let size = coeffs
            .iter()
            .map(|c| c.abs())
            .fold(T::zero(), T::max);
        if size > real(1e-9) && val < -tol {
            return Some(coeffs);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{functional_from_measure, Atom, AtomicMeasure};
    use crate::space::{lift_scalar_space, FiniteSpace, ScalarSpace};
    use crate::testutil;

    fn line_space(q: usize) -> MatrixFunctionSpace<f64> {
        let space = FiniteSpace::from_coords(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let e = ScalarSpace::polynomials(space, 1, 1).unwrap();
        lift_scalar_space(&e, q).unwrap()
    }

    #[test]
    fn constructed_measure_is_feasible() {
        let mut rng = testutil::rng(103);
        for q in 1..=2 {
            let lift = line_space(q);
            let nu = AtomicMeasure::new(vec![
                Atom {
                    point: "x1".into(),
                    mass: testutil::random_psd(q, &mut rng),
                },
                Atom {
                    point: "x3".into(),
                    mass: testutil::random_psd(q, &mut rng),
                },
            ])
            .unwrap();
            let lambda = functional_from_measure(&lift, &nu).unwrap();
            let rep = is_moment_functional(&lift, &lambda, &SolveOptions::default()).unwrap();
            assert!(rep.is_feasible(), "distance {}", rep.distance);
            let w = rep.witness.unwrap();
            let err = crate::functional::representation_error(&lift, &lambda, &w).unwrap();
            assert!(err <= 1e-6, "witness error {err}");
        }
    }

    #[test]
    fn negative_total_mass_is_infeasible() {
        // q=1, E = span{1}, Λ(1) = −1
        let space = FiniteSpace::from_coords(&[vec![0.0]]).unwrap();
        let e = ScalarSpace::polynomials(space, 1, 0).unwrap();
        let lift = lift_scalar_space(&e, 1).unwrap();
        let lambda = MomentFunctional::new(vec![-1.0]);
        let rep = is_moment_functional(&lift, &lambda, &SolveOptions::default()).unwrap();
        assert_eq!(rep.status, FeasStatus::Infeasible);
    }

    #[test]
    fn missing_unit_is_rejected() {
        let space = FiniteSpace::from_coords(&[vec![0.0], vec![1.0]]).unwrap();
        // basis {x} only: no unit element
        let e = ScalarSpace::new(space, vec![vec![0.0, 1.0]], false).unwrap();
        let lift = lift_scalar_space(&e, 1).unwrap();
        let lambda = MomentFunctional::new(vec![1.0]);
        assert!(matches!(
            is_moment_functional(&lift, &lambda, &SolveOptions::default()),
            Err(SpectraError::MissingUnit)
        ));
    }

    #[test]
    fn pinned_mass_constraint_holds() {
        let mut rng = testutil::rng(107);
        let lift = line_space(1);
        let nu = AtomicMeasure::new(vec![
            Atom {
                point: "x1".into(),
                mass: HermMat::diag(&[1.0]),
            },
            Atom {
                point: "x2".into(),
                mass: HermMat::diag(&[2.0]),
            },
        ])
        .unwrap();
        let lambda = functional_from_measure(&lift, &nu).unwrap();
        // pin the x2 mass to its true value: feasible
        let s = Spectrahedron::new(
            &lift,
            &lambda,
            &[Pin {
                point: "x2".into(),
                mass: HermMat::diag(&[2.0]),
            }],
            &[],
        )
        .unwrap();
        let rep = s.feasible(&SolveOptions::default(), None);
        assert!(rep.is_feasible());
        let w = rep.witness.unwrap();
        let m2 = &w.atoms.iter().find(|a| a.point == "x2").unwrap().mass;
        assert!((m2.trace() - 2.0).abs() <= 1e-6);
        let _ = &mut rng;
    }

    #[test]
    fn halfspace_constraint_holds() {
        let lift = line_space(1);
        let nu = AtomicMeasure::new(vec![
            Atom {
                point: "x1".into(),
                mass: HermMat::<f64>::diag(&[1.0]),
            },
            Atom {
                point: "x2".into(),
                mass: HermMat::diag(&[2.0]),
            },
        ])
        .unwrap();
        let lambda = functional_from_measure(&lift, &nu).unwrap();
        // "mass at x1 has trace ≥ 0.9" — achievable
        let s = Spectrahedron::new(
            &lift,
            &lambda,
            &[],
            &[Halfspace {
                point: "x1".into(),
                direction: HermMat::identity(1),
                bound: 0.9,
            }],
        )
        .unwrap();
        let rep = s.feasible(&SolveOptions::default(), None);
        assert!(rep.is_feasible());
        // "trace ≥ 10" — beyond the total available mass at that point set
        let s = Spectrahedron::new(
            &lift,
            &lambda,
            &[],
            &[Halfspace {
                point: "x1".into(),
                direction: HermMat::identity(1),
                bound: 10.0,
            }],
        )
        .unwrap();
        let rep = s.feasible(&SolveOptions::default(), None);
        assert_ne!(rep.status, FeasStatus::Feasible);
    }

    #[test]
    fn violation_search_finds_negative_unit() {
        // Λ(1·I) = −1 on a singleton: F = I is a pointwise-PSD violator
        let space = FiniteSpace::from_coords(&[vec![0.0]]).unwrap();
        let e = ScalarSpace::polynomials(space, 1, 0).unwrap();
        let lift = lift_scalar_space(&e, 1).unwrap();
        let lambda = MomentFunctional::new(vec![-1.0]);
        let mut rng = testutil::rng(109);
        let found = positivity_violation_search(&lift, &lambda, 200, 1e-9, &mut rng);
        assert!(found.is_some());
    }

    #[test]
    fn violation_search_silent_on_moment_functional() {
        let mut rng = testutil::rng(113);
        let lift = line_space(2);
        let nu = AtomicMeasure::new(vec![Atom {
            point: "x2".into(),
            mass: testutil::random_psd(2, &mut rng),
        }])
        .unwrap();
        let lambda = functional_from_measure(&lift, &nu).unwrap();
        assert!(positivity_violation_search(&lift, &lambda, 300, 1e-7, &mut rng).is_none());
    }

    #[test]
    fn oracle_consistency_random_instances() {
        // feasible() and the violation search never both succeed
        let mut rng = testutil::rng(127);
        let mut feasible_count = 0;
        let mut violated_count = 0;
        for case in 0..60 {
            let q = 1 + case % 2;
            let lift = line_space(q);
            // random target: either from a measure (feasible) or random values
            let lambda = if case % 2 == 0 {
                let nu = AtomicMeasure::new(vec![Atom {
                    point: "x1".into(),
                    mass: testutil::random_psd(q, &mut rng),
                }])
                .unwrap();
                functional_from_measure(&lift, &nu).unwrap()
            } else {
                MomentFunctional::new(
                    (0..lift.dim())
                        .map(|_| testutil::uniform(&mut rng, -1.0, 1.0))
                        .collect(),
                )
            };
            let rep = is_moment_functional(&lift, &lambda, &SolveOptions::default()).unwrap();
            let viol = positivity_violation_search(&lift, &lambda, 120, 1e-6, &mut rng);
            if rep.is_feasible() {
                feasible_count += 1;
                assert!(
                    viol.is_none(),
                    "case {case}: both a witness measure and a violator found"
                );
            }
            if viol.is_some() {
                violated_count += 1;
                assert!(!rep.is_feasible());
            }
        }
        assert!(feasible_count > 10, "sampler never feasible");
        assert!(violated_count > 10, "sampler never violated");
    }
}
