//! Evaluate every loss on a pair of matrices and compute a PRIAL.
//!
//! ```bash
//! cargo run --release --example loss_functions
//! ```

use eigenshrink::{loss, prial, CovarianceEstimate, LossKind};

fn main() -> eigenshrink::Result<()> {
    let p = 6;
    let truth = CovarianceEstimate::diagonal(&[6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
    let near = CovarianceEstimate::diagonal(&[5.5, 5.0, 4.2, 3.0, 2.1, 1.2]);
    let flat = CovarianceEstimate::scaled_identity(p, truth.trace() / p as f64);

    println!("{:<10} {:>12} {:>12}", "loss", "near", "flat");
    for kind in LossKind::ALL {
        let a = loss(kind, &near, &truth)?;
        let b = loss(kind, &flat, &truth)?;
        println!("{:<10} {:>12.6} {:>12.6}", kind.tag(), a.value, b.value);
    }

    let stein = loss(LossKind::Stein, &CovarianceEstimate::scaled_identity(p, 2.0), &CovarianceEstimate::scaled_identity(p, 1.0))?;
    println!("st(2I, I) = {:.12}, p(1 - ln 2) = {:.12}", stein.value, p as f64 * (1.0 - 2f64.ln()));

    let reference = [4.0, 3.5, 5.0, 4.5];
    let candidate = [2.0, 2.5, 2.0, 3.0];
    println!("PRIAL = {:.2}%", 100.0 * prial(&reference, &candidate)?);
    Ok(())
}
