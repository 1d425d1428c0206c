//! Critical-point residuals of the adjusted log-likelihood.
//!
//! The flat estimate solves the equations exactly; the `κ = 1` endpoint
//! solves them up to an error that shrinks like `1/p`.
//!
//! ```bash
//! cargo run --release --example likelihood_critical_points
//! ```

use eigenshrink::{adjusted_loglik, lambda_one, lambda_zero, mle_residual, SampleSpectrum};

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn main() -> eigenshrink::Result<()> {
    for p in [10, 100, 1000, 10_000] {
        let spec = SampleSpectrum::from_eigenvalues(p, vec![4.0, 1.0])?;
        let l0 = lambda_zero(&spec).lambda_hat;
        let l1 = lambda_one(&spec).lambda_hat;
        println!(
            "p = {p:6}  |r(lambda0)| = {:.1e}  |r(lambda1)| = {:.3e}  loglik(lambda0) = {:.4}",
            max_abs(&mle_residual(&l0, &spec)?),
            max_abs(&mle_residual(&l1, &spec)?),
            adjusted_loglik(&l0, &spec)?
        );
    }
    Ok(())
}
