//! Leave-one-out and K-fold risk curves against the Monte-Carlo oracle.
//!
//! The cross-validated Frobenius curve omits the `tr Σ²` term, so it matches
//! the oracle only up to an additive constant; the argmin is what counts.
//!
//! ```bash
//! cargo run --release --example cross_validation
//! ```

use eigenshrink::simbench::{make_sigma, sample_gaussian, ScenarioKind, ScenarioSpec};
use eigenshrink::{cv_select, oracle_select, seed, Folds, KappaGrid, LossKind};

fn main() -> eigenshrink::Result<()> {
    let spec = ScenarioSpec::new(ScenarioKind::Sigma3, 40, 2.0)?;
    let sigma = make_sigma(&spec)?;
    let grid = KappaGrid::with_step(0.1)?;
    let oracle = oracle_select(&sigma, spec.n(), LossKind::Frobenius, &grid, 200, 1)?;
    let x = sample_gaussian(&sigma, spec.n(), seed::derive(1, seed::Stream::Data, 0))?;

    println!("{:>6} {:>12} {:>12} {:>12}", "kappa", "oracle", "loo", "5-fold");
    let loo = cv_select(&x, LossKind::Frobenius, Folds::LeaveOneOut, &grid, 1)?;
    let k5 = cv_select(&x, LossKind::Frobenius, Folds::K(5), &grid, 1)?;
    for (i, k) in grid.values().iter().enumerate() {
        println!("{k:6.2} {:12.4} {:12.4} {:12.4}", oracle.risk[i], loo.risk[i], k5.risk[i]);
    }
    println!("oracle kappa' = {:.2}, loo kappa_hat = {:.2}, 5-fold kappa_hat = {:.2}", oracle.kappa_hat(), loo.kappa_hat(), k5.kappa_hat());
    println!("oracle risk at the loo choice: {:.4} (minimum {:.4})", oracle.risk_at(loo.kappa_hat()), oracle.min_risk());
    Ok(())
}
