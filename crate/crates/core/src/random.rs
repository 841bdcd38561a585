//! Seeded random instances.
//!
//! Every generator draws from a [`ChaCha8Rng`] seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. Complex Gaussian matrices are filled
//! column-major, each entry consuming two standard normal draws (real part
//! first, then imaginary part), so instances can be regenerated by any
//! implementation following the same layout.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_spectrum, trace, ComplexMatrix};
use crate::C64;

pub type InstanceRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian (Ginibre) matrix, column-major fill.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(r, c)] = C64::new(re, im);
        }
    }
    m
}

pub fn gaussian_vector(n: usize, rng: &mut impl Rng) -> DVector<C64> {
    ginibre(n, 1, rng).column(0).into_owned()
}

/// Density matrix `G G^dag / Tr(G G^dag)` with `G` a `d × k` Ginibre matrix.
pub fn random_density_rank(d: usize, k: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(d, k, rng);
    let r = &g * g.adjoint();
    let t = trace(&r).re;
    r.unscale(t)
}

/// Full-rank Ginibre-induced density matrix.
pub fn random_density(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    random_density_rank(d, d, rng)
}

/// Unit vector, Haar distributed.
pub fn random_pure(d: usize, rng: &mut impl Rng) -> DVector<C64> {
    let v = gaussian_vector(d, rng);
    let n = v.norm();
    v.unscale(n)
}

/// Matrix with orthonormal columns from the QR factorization of a Ginibre
/// matrix, with the phases of `R`'s diagonal absorbed so the result is Haar.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = ginibre(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..cols {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..rows {
            q[(row, c)] *= phase;
        }
    }
    q
}

pub fn random_unitary(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    random_isometry(d, d, rng)
}

/// POVM `{E_k}` built as `E_k = S^{-1/2} F_k S^{-1/2}` from Ginibre-induced
/// PSD `F_k` with `S = Σ F_k`.
pub fn random_povm(d: usize, outcomes: usize, rng: &mut impl Rng) -> Vec<ComplexMatrix> {
    let raw: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(d, d, rng);
            &g * g.adjoint()
        })
        .collect();
    let sum = raw.iter().fold(ComplexMatrix::zeros(d, d), |acc, f| acc + f);
    let spec = hermitian_spectrum(&sum);
    let inv_sqrt = crate::linalg::apply_to_spectrum(&spec, |x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 });
    raw.iter().map(|f| &inv_sqrt * f * &inv_sqrt).collect()
}
