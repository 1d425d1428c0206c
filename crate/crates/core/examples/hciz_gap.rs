//! Large-p approximation of the Stiefel integral against Monte Carlo.
//!
//! ```bash
//! cargo run --release --example hciz_gap
//! ```

use eigenshrink::hciz::{approx_log_jn, approximation_gap, mc_log_jn, tau_series, SpectralProfile};
use eigenshrink::CovarianceEstimate;

fn main() -> eigenshrink::Result<()> {
    let ell = [3.0, 1.0];
    let iso = mc_log_jn(&CovarianceEstimate::scaled_identity(20, 1.5), &ell, 1000, 1)?;
    println!("isotropic: mc = {:.15}, approx = {:.15}", iso.log_value, approx_log_jn(&[1.5; 20], &ell, 20)?.log_value);

    let profile: SpectralProfile = "linspace:0.5:2".parse()?;
    println!("{:>5} {:>12} {:>12} {:>10}", "p", "delta", "|delta|", "se");
    for row in approximation_gap(&profile, &ell, &[10, 30, 100], 200_000, 1)? {
        println!("{:5} {:12.6} {:12.6} {:10.2e}", row.p, row.delta, row.abs_delta, row.mc_se);
    }

    let s = tau_series(&[0.3, 0.1, -0.2], &[1.0, 0.5, 0.0])?;
    println!("tau series: f1 = {:.6} (product {:.6}), f2 = {:.6} (product {:.6})", s.f1, s.product_f1, s.f2, s.product_f2);
    Ok(())
}
