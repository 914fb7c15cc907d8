//! Cross-module property batteries that don't fit a single module's unit
//! tests: mass-set inclusions, convexity/boundedness/closedness probes,
//! scaling homogeneity, oracle cross-validation at scale, and a generic
//! `f32` smoke pass.

use matmoment_core::eig;
use matmoment_core::fixtures::{self, a_eta};
use matmoment_core::functional::{functional_from_measure, Atom, AtomicMeasure, MomentFunctional};
use matmoment_core::herm::HermMat;
use matmoment_core::masses::{self, MassOptions};
use matmoment_core::space::{lift_scalar_space, FiniteSpace, ScalarSpace};
use matmoment_core::spectra::{self, SolveOptions};
use matmoment_core::testutil;

#[test]
fn mass_membership_implies_penumbra() {
    // M(Λ;x₀) ⊆ P(Λ;x₀)
    let opts = MassOptions::default();
    let fx = fixtures::e1012::<f64>().unwrap();
    for eta in [-0.8, 0.0, 0.3, 1.0] {
        let y = a_eta(eta);
        let in_m = masses::mass_membership(&fx.space, &fx.lambda, "x1", &y, &opts)
            .unwrap()
            .is_feasible();
        let in_p = masses::penumbra_membership(&fx.space, &fx.lambda, "x1", &y, &opts)
            .unwrap()
            .is_feasible();
        assert!(in_m);
        assert!(in_p, "A_{eta} in M but not in P");
    }
    // and on the square fixture with a non-maximal member
    let sq = fixtures::e1802_identity::<f64>().unwrap();
    let y = HermMat::identity(2).scale(0.7);
    assert!(masses::mass_membership(&sq.space, &sq.lambda, "x0", &y, &opts)
        .unwrap()
        .is_feasible());
    assert!(masses::penumbra_membership(&sq.space, &sq.lambda, "x0", &y, &opts)
        .unwrap()
        .is_feasible());
}

#[test]
fn accepted_masses_form_convex_set() {
    let opts = MassOptions::default();
    let fx = fixtures::e1012::<f64>().unwrap();
    let y1 = a_eta(-0.6);
    let y2 = a_eta(0.9);
    for t in [0.25, 0.5, 0.75] {
        let mix = y1.scale(1.0 - t).add(&y2.scale(t));
        let rep = masses::mass_membership(&fx.space, &fx.lambda, "x1", &mix, &opts).unwrap();
        assert!(rep.is_feasible(), "convex combination at t={t} rejected");
    }
    let sq = fixtures::e1802_identity::<f64>().unwrap();
    let y1 = HermMat::identity(2).scale(0.2);
    let y2 = HermMat::identity(2).scale(1.9);
    for t in [0.3, 0.6] {
        let mix = y1.scale(1.0 - t).add(&y2.scale(t));
        let rep = masses::mass_membership(&sq.space, &sq.lambda, "x0", &mix, &opts).unwrap();
        assert!(rep.is_feasible());
    }
}

#[test]
fn accepted_masses_obey_trace_bound() {
    // tr Y ≤ Λ(e)/ε + tol for every accepted mass
    let opts = MassOptions::default();
    let sq = fixtures::e1802_identity::<f64>().unwrap();
    let unit = sq.space.unit().unwrap();
    let bound = sq.lambda.eval(&unit.coeffs).unwrap() / unit.epsilon;
    let mut rng = testutil::rng(271);
    let mut accepted = 0;
    for _ in 0..40 {
        let y = testutil::random_psd::<f64>(2, &mut rng).scale(testutil::uniform(&mut rng, 0.1, 2.0));
        let rep = masses::mass_membership(&sq.space, &sq.lambda, "x0", &y, &opts).unwrap();
        if rep.is_feasible() {
            accepted += 1;
            assert!(y.trace() <= bound + 1e-6, "tr {} vs bound {bound}", y.trace());
        }
    }
    assert!(accepted > 0, "sampler never accepted");
}

#[test]
fn penumbra_boundary_points_are_accepted() {
    // closedness probe: walk to the boundary along 10 directions and test
    // the boundary point itself
    let opts = MassOptions::default();
    let sq = fixtures::e1802_identity::<f64>().unwrap();
    let mut rng = testutil::rng(277);
    for probe in 0..10 {
        let v = testutil::random_unit_cvec::<f64>(2, &mut rng);
        let dir = HermMat::rank_one(&v);
        let (sup, limit_ok) =
            masses::boundary_probe(&sq.space, &sq.lambda, "x0", &HermMat::zero(2), &dir, &opts)
                .unwrap();
        assert!(sup > 0.1, "probe {probe}: boundary unexpectedly close");
        assert!(limit_ok, "probe {probe}: boundary point rejected");
    }
}

#[test]
fn order_convexity_probe_on_interval() {
    // the square fixture's mass set is the order interval [O, 2I]
    let opts = MassOptions::default();
    let sq = fixtures::e1802_identity::<f64>().unwrap();
    let mut rng = testutil::rng(281);
    let (accepted, total) = masses::order_convexity_probe(
        &sq.space,
        &sq.lambda,
        "x0",
        &HermMat::zero(2),
        &HermMat::identity(2).scale(2.0),
        20,
        &opts,
        &mut rng,
    )
    .unwrap();
    assert_eq!(accepted, total, "order interval must accept all samples");
}

#[test]
fn scaling_is_homogeneous_to_1e6() {
    // I(c·M) = I(M)/c, relative error ≤ 1e-6
    let opts = MassOptions::default();
    let sq = fixtures::e1802_identity::<f64>().unwrap();
    let m = HermMat::identity(2);
    let base = masses::scaling_sup(&sq.space, &sq.lambda, "x0", &m, &opts).unwrap();
    for c in [0.5, 2.0, 3.0] {
        let scaled = masses::scaling_sup(&sq.space, &sq.lambda, "x0", &m.scale(c), &opts).unwrap();
        let want = base / c;
        assert!(
            (scaled - want).abs() <= 1e-6 * (1.0 + want.abs()),
            "c={c}: {scaled} vs {want}"
        );
    }
    assert!((base - 2.0).abs() <= 1e-6, "I(I) = {base}");
}

#[test]
fn oracle_consistency_two_hundred_instances() {
    // feasibility and the positivity-violation search never both succeed
    let mut rng = testutil::rng(283);
    let opts = SolveOptions::default();
    let mut feasible = 0;
    let mut violated = 0;
    for case in 0..200 {
        let q = 1 + case % 2;
        let npoints = 2 + case % 4; // up to 5 points
        let coords: Vec<Vec<f64>> = (0..npoints)
            .map(|i| vec![i as f64 - 1.0 + 0.1 * (case as f64).sin()])
            .collect();
        let space = FiniteSpace::from_coords(&coords).unwrap();
        let deg = (npoints - 1).min(if q == 1 { 3 } else { 2 });
        let e = ScalarSpace::polynomials(space, 1, deg).unwrap();
        let lift = lift_scalar_space(&e, q).unwrap();
        if lift.dim() > 12 {
            continue;
        }
        let lambda = if case % 2 == 0 {
            let nu = AtomicMeasure::new(
                (0..npoints)
                    .filter(|i| i % 2 == 0)
                    .map(|i| Atom {
                        point: format!("x{}", i + 1),
                        mass: testutil::random_psd(q, &mut rng),
                    })
                    .collect(),
            )
            .unwrap();
            functional_from_measure(&lift, &nu).unwrap()
        } else {
            MomentFunctional::new(
                (0..lift.dim())
                    .map(|_| testutil::uniform(&mut rng, -1.0, 1.0))
                    .collect(),
            )
        };
        let rep = spectra::is_moment_functional(&lift, &lambda, &opts).unwrap();
        let viol = spectra::positivity_violation_search(&lift, &lambda, 100, 1e-6, &mut rng);
        if rep.is_feasible() {
            feasible += 1;
            assert!(viol.is_none(), "case {case}: witness and violator coexist");
        }
        if let Some(coeffs) = &viol {
            violated += 1;
            // the violator is genuinely pointwise PSD with a negative value
            assert!(lift.is_pointwise_psd(coeffs, 1e-9));
            assert!(lambda.eval(coeffs).unwrap() < 0.0);
            assert!(!rep.is_feasible());
        }
    }
    assert!(feasible >= 50, "only {feasible} feasible instances sampled");
    assert!(violated >= 50, "only {violated} violated instances sampled");
}

#[test]
fn dykstra_distance_mostly_monotone() {
    // the distance trace is monitored; flag counts stay negligible on
    // well-posed instances
    let sq = fixtures::e1802_identity::<f64>().unwrap();
    let rep = spectra::is_moment_functional(&sq.space, &sq.lambda, &SolveOptions::default())
        .unwrap();
    assert!(rep.is_feasible());
    assert!(
        rep.monotone_violations <= rep.iterations / 10 + 1,
        "{} violations over {} iterations",
        rep.monotone_violations,
        rep.iterations
    );
}

#[test]
fn hankel_blocks_hermitian_exactly() {
    let mut rng = testutil::rng(293);
    let atoms: Vec<matmoment_core::extract::CoordAtom<f64>> = (0..3)
        .map(|j| matmoment_core::extract::CoordAtom {
            coords: vec![j as f64, -(j as f64) * 0.5],
            mass: testutil::random_psd::<f64>(2, &mut rng),
        })
        .collect();
    let seq = matmoment_core::extract::moments_from_measure(&atoms, 2, 2, 4).unwrap();
    let h = matmoment_core::hankel::build_hankel(&seq, 2).unwrap();
    let m = h.matrix().as_cmat();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            assert_eq!(m[(i, j)], m[(j, i)].conj());
        }
    }
}

#[test]
fn scalar_generic_f32_smoke() {
    // the numeric core is generic over the scalar; a loose-tolerance f32
    // pass over the main identities
    let mut rng = testutil::rng(307);
    for _ in 0..20 {
        let a = testutil::random_herm::<f32>(3, &mut rng);
        let d = eig::eigh(&a).unwrap();
        assert!(d.reconstruct().sub(&a).norm_fro() <= 5e-5 * a.norm_fro().max(1.0));
    }
    let p = matmoment_core::apolar::power_form::<f32>(&[1.0, 1.0], 2, &HermMat::diag(&[1.0]));
    let v = matmoment_core::apolar::apolar_product(&p, &p).unwrap();
    assert!((v - 4.0).abs() < 1e-4);

    let atoms = vec![matmoment_core::extract::CoordAtom {
        coords: vec![1.0f32],
        mass: HermMat::diag(&[1.0f32]),
    }];
    let seq = matmoment_core::extract::moments_from_measure(&atoms, 1, 1, 4).unwrap();
    assert!(matmoment_core::hankel::is_flat(&seq, 1, 1e-4).unwrap());
}
