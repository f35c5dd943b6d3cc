//! Seeded random operators for property checks and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fock::{CMatrix, CVector, DensityMatrix, FockDim, HermitianOperator, StateVector, C64};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, dim: FockDim) -> CMatrix {
    let d = dim.get();
    CMatrix::from_fn(d, d, |_, _| gaussian_complex(rng))
}

/// Hermitian matrix with i.i.d. complex Gaussian entries (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: FockDim) -> HermitianOperator {
    let g = ginibre(rng, dim);
    HermitianOperator::new((&g + g.adjoint()).scale(0.5)).expect("symmetrized matrix is Hermitian")
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: FockDim) -> StateVector {
    let v = CVector::from_fn(dim.get(), |_, _| gaussian_complex(rng));
    StateVector::normalized(v).expect("Gaussian vector is nonzero")
}

/// Random mixed state `G G† / Tr{G G†}`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: FockDim) -> DensityMatrix {
    let g = ginibre(rng, dim);
    let w = &g * g.adjoint();
    let op = HermitianOperator::new(w).expect("Gram matrix is Hermitian");
    DensityMatrix::normalize(&op).expect("Gram matrix has positive trace")
}

/// Random positive operator whose largest eigenvalue is a uniform draw in
/// `(0, 1]`, i.e. a valid POVM element up to completion.
pub fn random_effect<R: Rng + ?Sized>(rng: &mut R, dim: FockDim) -> HermitianOperator {
    let g = ginibre(rng, dim);
    let w = HermitianOperator::new(&g * g.adjoint()).expect("Gram matrix is Hermitian");
    let top = w.eigh().expect("finite matrix").max();
    let target: f64 = 1.0 - rng.random::<f64>();
    w.scale(target / top)
}
