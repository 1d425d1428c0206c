//! Random matrices: Gaussian ensembles, Haar-distributed orthogonal matrices
//! and uniform points on the Stiefel manifold.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // Column-major fill so the draw order is fixed by the storage layout.
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_vec(rows, cols, data)
}

/// Modified Gram-Schmidt on the columns of `m`, in place.
///
/// This is the QR factorization with a positive diagonal in `R`, so applied
/// to a Gaussian matrix it yields a frame distributed by the normalized Haar
/// measure on the Stiefel manifold.
pub fn orthonormalize_columns(m: &mut DMatrix<f64>) {
    let k = m.ncols();
    for j in 0..k {
        for i in 0..j {
            let proj = m.column(i).dot(&m.column(j));
            let ci = m.column(i).clone_owned();
            m.column_mut(j).axpy(-proj, &ci, 1.0);
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
}

/// Uniform draw from `V_k(ℝ^p)`, the orthonormal `k`-frames in `ℝ^p`.
pub fn stiefel_frame<R: Rng + ?Sized>(p: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(k <= p, "frame of {k} columns does not fit in dimension {p}");
    let mut m = gaussian_matrix(p, k, rng);
    orthonormalize_columns(&mut m);
    m
}

/// Haar-distributed `p × p` orthogonal matrix.
pub fn haar_orthogonal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DMatrix<f64> {
    stiefel_frame(p, p, rng)
}
