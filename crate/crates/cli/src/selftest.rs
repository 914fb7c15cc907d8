//! Condensed property suites behind `matmoment selftest`.
//!
//! A quick pass over the load-bearing identities of each subsystem; the
//! full batteries live in the acceptance test target of the core crate.

use matmoment_core::extract::{extract, moments_from_measure, CoordAtom, ExtractOptions};
use matmoment_core::functional::functional_from_measure;
use matmoment_core::herm::{trace_inner, HermMat};
use matmoment_core::masses::{self, MassOptions};
use matmoment_core::spectra::{is_moment_functional, SolveOptions};
use matmoment_core::{apolar, eig, fixtures, testutil, transport};

pub fn run(seed: u64) -> Result<u8, String> {
    let mut rng = testutil::rng(seed);
    let mut failures = 0;

    let mut report = |name: &str, ok: bool| {
        println!("{}: {}", name, if ok { "pass" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // eigensolver reconstruction
    let ok = (0..50).all(|_| {
        let a = testutil::random_herm::<f64>(4, &mut rng);
        let d = eig::eigh(&a).unwrap();
        d.reconstruct().sub(&a).norm_fro() <= 1e-10 * a.norm_fro().max(1.0)
    });
    report("eigensolver reconstruction", ok);

    // extraction round trip
    let ok = (0..5).all(|case| {
        let atoms = vec![
            CoordAtom {
                coords: vec![0.0, 0.3 * case as f64],
                mass: testutil::random_psd::<f64>(2, &mut rng),
            },
            CoordAtom {
                coords: vec![1.0, -0.5],
                mass: testutil::random_psd::<f64>(2, &mut rng),
            },
        ];
        let seq = moments_from_measure(&atoms, 2, 2, 6).unwrap();
        match extract(&seq, 2, &ExtractOptions::default(), &mut rng) {
            Ok(res) => res.residual <= 1e-6,
            Err(_) => false,
        }
    });
    report("flat extraction round trip", ok);

    // feasibility on a constructed measure
    let fx = fixtures::e1012::<f64>().map_err(|e| e.to_string())?;
    let rep = is_moment_functional(&fx.space, &fx.lambda, &SolveOptions::default())
        .map_err(|e| e.to_string())?;
    report("existence oracle on the antichain fixture", rep.is_feasible());

    // mass interval of the square fixture
    let sq = fixtures::e1802_identity::<f64>().map_err(|e| e.to_string())?;
    let opts = MassOptions::default();
    let inside =
        masses::penumbra_membership(&sq.space, &sq.lambda, "x0", &HermMat::identity(2).scale(2.0), &opts)
            .map_err(|e| e.to_string())?
            .is_feasible();
    let outside = !masses::penumbra_membership(
        &sq.space,
        &sq.lambda,
        "x0",
        &HermMat::identity(2).scale(2.05),
        &opts,
    )
    .map_err(|e| e.to_string())?
    .is_feasible();
    report("mass interval of the square fixture", inside && outside);

    // transport adjoint identity
    let ok = (0..20).all(|_| {
        let kraus = vec![matmoment_core::cmat::CMat::from_fn(2, 2, |_, _| {
            matmoment_core::scalar::C::new(
                testutil::uniform(&mut rng, -1.0, 1.0),
                testutil::uniform(&mut rng, -1.0, 1.0),
            )
        })];
        let map = transport::PositiveMap::new(2, 2, kraus, false).unwrap();
        let a = testutil::random_herm::<f64>(2, &mut rng);
        let b = testutil::random_herm::<f64>(2, &mut rng);
        (trace_inner(&map.apply(&a), &b) - trace_inner(&a, &map.adjoint().apply(&b))).abs()
            <= 1e-12
    });
    report("positive-map adjoint identity", ok);

    // apolar duality
    let ok = (0..30).all(|_| {
        let entries: Vec<_> = apolar::homogeneous_indices(2, 3)
            .into_iter()
            .map(|a| (a, testutil::random_herm::<f64>(2, &mut rng)))
            .collect();
        let p = apolar::MatHomPoly::from_apolar_coeffs(2, 3, 2, &entries).unwrap();
        let entries: Vec<_> = apolar::homogeneous_indices(2, 3)
            .into_iter()
            .map(|a| (a, testutil::random_herm::<f64>(2, &mut rng)))
            .collect();
        let q = apolar::MatHomPoly::from_apolar_coeffs(2, 3, 2, &entries).unwrap();
        let bracket = apolar::apolar_product(&p, &q).unwrap();
        let diff = apolar::diff_apply(&p, &q).unwrap().as_scalar().unwrap() / 6.0;
        (bracket - diff).abs() <= 1e-8 * (1.0 + bracket.abs())
    });
    report("apolar duality", ok);

    // functional round trip through a measure
    let nu = sq.measure.clone();
    let back = functional_from_measure(&sq.space, &nu).map_err(|e| e.to_string())?;
    report(
        "measure functional reproduction",
        back.sub(&sq.lambda).norm() < 1e-12,
    );

    if failures == 0 {
        println!("selftest: all suites passed");
        Ok(0)
    } else {
        Err(format!("{failures} selftest suite(s) failed"))
    }
}
