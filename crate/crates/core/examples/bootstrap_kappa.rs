//! Bootstrap selection of kappa on isotropic data.
//!
//! When the population covariance is a multiple of the identity the flat
//! estimate is the right answer, so the selected kappa sits near zero.
//!
//! ```bash
//! cargo run --release --example bootstrap_kappa
//! ```

use eigenshrink::simbench::{sample_gaussian, ReferenceSpec};
use eigenshrink::{bootstrap_select, seed, CovarianceEstimate, KappaGrid, LossKind};

fn main() -> eigenshrink::Result<()> {
    let (p, n) = (50, 25);
    let sigma = CovarianceEstimate::scaled_identity(p, 1.0);
    let grid = KappaGrid::with_step(0.05)?;
    let x = sample_gaussian(&sigma, n, seed::derive(7, seed::Stream::Data, 0))?;
    let reference = ReferenceSpec::LambdaOneNs.build(&x)?;
    let curve = bootstrap_select(&x, LossKind::Frobenius, &reference, 100, &grid, 7, false)?;

    for (k, r) in curve.grid.values().iter().zip(&curve.risk).step_by(4) {
        println!("kappa = {k:.2}  bootstrap risk = {r:.5}");
    }
    let diag = curve.bootstrap.as_ref().unwrap();
    println!("kappa_hat = {:.2}  (grid median {:.3})", curve.kappa_hat(), grid.median());
    println!("replicate ranks {}..={}, redraws {}", diag.ranks.iter().min().unwrap(), diag.ranks.iter().max().unwrap(), diag.redraws);
    Ok(())
}
