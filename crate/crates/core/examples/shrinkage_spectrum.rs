//! Decompose a wide data matrix and compare the three eigenvalue estimates.
//!
//! ```bash
//! cargo run --release --example shrinkage_spectrum
//! ```

use eigenshrink::random::gaussian_matrix;
use eigenshrink::{assemble, decompose, lambda_kappa, lambda_one, lambda_one_ns, lambda_zero, seed, DataMatrix, DEFAULT_RANK_TOL};

fn main() -> eigenshrink::Result<()> {
    let (n, p) = (10, 40);
    let mut rng = seed::rng(42);
    let mut x = gaussian_matrix(n, p, &mut rng);
    // A few strong directions on top of unit noise.
    for (j, s) in [3.0, 2.0, 1.5].iter().enumerate() {
        x.column_mut(j).scale_mut(*s);
    }
    let x = DataMatrix::new(x)?;
    let spec = decompose(&x, DEFAULT_RANK_TOL)?;
    println!("p = {}, q = {}, tr S = {:.4}", spec.p(), spec.q(), spec.trace());
    println!("ell = {:.3?}", spec.ell());

    let l0 = lambda_zero(&spec);
    let l1 = lambda_one(&spec);
    let ns = lambda_one_ns(&spec);
    println!("lambda0 (flat)    = {:.4}", l0.lambda_hat[0]);
    println!("lambda1 leading   = {:.4?}", &l1.lambda_hat[..spec.q()]);
    println!("lambda1-NS tail   = {:.4}", ns.tail().unwrap());

    for kappa in [0.0, 0.25, 0.5, 0.75, 0.99] {
        let lam = lambda_kappa(&spec, kappa)?;
        let est = assemble(&spec, &lam)?;
        println!(
            "kappa = {kappa:<4}  top = {:8.4}  tail = {:.4}  q*sum = {:.6}  min eig = {:.4}",
            lam.lambda_hat[0],
            lam.tail().unwrap(),
            lam.scaled_sum(),
            est.min_eigenvalue()
        );
    }
    Ok(())
}
