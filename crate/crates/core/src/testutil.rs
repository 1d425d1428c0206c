use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::random;
use crate::seed;
use crate::spectra::SampleSpectrum;

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    random::gaussian_matrix(rows, cols, &mut seed::rng(seed))
}

/// Sorted squared Gaussians with `q ∈ 1..=q_max`, `p ∈ q+1..=p_max`.
pub fn random_spectrum<R: Rng>(rng: &mut R, q_max: usize, p_max: usize) -> SampleSpectrum {
    let q = rng.random_range(1..=q_max);
    let p = rng.random_range(q + 1..=p_max);
    let mut ell: Vec<f64> = (0..q)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * z + 1e-6
        })
        .collect();
    ell.sort_by(|a, b| b.total_cmp(a));
    SampleSpectrum::from_eigenvalues(p, ell).unwrap()
}
