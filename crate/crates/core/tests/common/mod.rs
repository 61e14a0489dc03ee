#![allow(dead_code)]

use cvqkd::gaussian::{symplectic_form, CovarianceMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random physical covariance matrix `S D S^T` with `S = exp(Omega H)` for a random
/// symmetric `H`, and symplectic eigenvalues drawn from `[1/2, 4]`. Returns the matrix and
/// its spectrum.
pub fn random_physical(modes: usize, rng: &mut impl Rng) -> (CovarianceMatrix, Vec<f64>) {
    let dim = 2 * modes;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = rng.random_range(-0.6..0.6);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let s = (symplectic_form(modes) * h).exp();
    let nus: Vec<f64> = (0..modes).map(|_| rng.random_range(0.5..4.0)).collect();
    let d = DMatrix::from_fn(dim, dim, |i, j| if i == j { nus[i / 2] } else { 0.0 });
    let g = &s * d * s.transpose();
    (CovarianceMatrix::new(g).expect("random matrix is physical"), nus)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
