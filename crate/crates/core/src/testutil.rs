//! Seeded random generators for matrices, measures and spaces.
//!
//! Used by the test suites and by the randomized runtime searches
//! (violation probes, direction sweeps), so it lives in the library.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

use crate::cmat::CMat;
use crate::herm::HermMat;
use crate::scalar::{real, C, Real};

/// Deterministic RNG from a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample in `[lo, hi)`.
pub fn uniform<T: Real>(rng: &mut impl Rng, lo: f64, hi: f64) -> T {
    real::<T>(rng.gen_range(lo..hi))
}

/// Random complex vector with entries uniform in the unit square.
pub fn random_cvec<T: Real>(q: usize, rng: &mut impl Rng) -> Vec<C<T>> {
    (0..q)
        .map(|_| C::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)))
        .collect()
}

/// Random Hermitian matrix with entries of order one.
pub fn random_herm<T: Real>(q: usize, rng: &mut impl Rng) -> HermMat<T> {
    let m = CMat::from_fn(q, q, |_, _| {
        C::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0))
    });
    HermMat::symmetrize(m)
}

/// Random PSD matrix `B*B`.
pub fn random_psd<T: Real>(q: usize, rng: &mut impl Rng) -> HermMat<T> {
    let b = CMat::from_fn(q, q, |_, _| {
        C::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0))
    });
    HermMat::symmetrize(b.adjoint().mul(&b))
}

/// Random unitary from the eigenvectors of a random Hermitian matrix.
pub fn random_unitary<T: Real>(q: usize, rng: &mut impl Rng) -> CMat<T> {
    loop {
        let h = random_herm::<T>(q, rng);
        // distinct eigenvalues almost surely; eigenvectors then unitary
        if let Ok(d) = crate::eig::eigh(&h) {
            return d.eigenvectors;
        }
    }
}

/// Random normalized complex vector.
pub fn random_unit_cvec<T: Real>(q: usize, rng: &mut impl Rng) -> Vec<C<T>> {
    loop {
        let v = random_cvec::<T>(q, rng);
        let n = v.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        if n > real(1e-3) {
            return v.iter().map(|c| c.scale(T::one() / n)).collect();
        }
    }
}
