//! Monte-Carlo risk and PRIAL of the bootstrap estimator against `S/n`.
//!
//! ```bash
//! cargo run --release --example risk_benchmark
//! ```

use eigenshrink::simbench::{bench_prial, EstimatorSpec, ScenarioSpec};
use eigenshrink::{KappaGrid, LossKind};

fn main() -> eigenshrink::Result<()> {
    let spec = ScenarioSpec::preset("s3-p30-g2")?;
    let grid = KappaGrid::with_step(0.1)?;
    let cand = EstimatorSpec::parse("kappa-boot")?.with_grid(grid);
    let cand = match cand {
        EstimatorSpec::KappaBoot { grid, reference, invert_roles, select_loss, .. } => EstimatorSpec::KappaBoot {
            grid,
            replicates: 40,
            reference,
            invert_roles,
            select_loss,
        },
        other => other,
    };
    let base = EstimatorSpec::Sample;
    let losses = [LossKind::Frobenius, LossKind::Evl2, LossKind::TopEv];
    println!("scenario {} (n = {})", spec.label(), spec.n());
    for r in bench_prial(&spec, &losses, (&cand, &base), 100, 3)? {
        let (c, b) = (&r.estimates[0], &r.estimates[1]);
        println!(
            "{:<8} {:<11} {:9.4} ± {:.4}   {:<7} {:9.4} ± {:.4}   PRIAL {:6.1}%",
            r.loss.tag(),
            c.estimator,
            c.mean,
            c.se,
            b.estimator,
            b.mean,
            b.se,
            100.0 * r.prial.unwrap()
        );
    }
    Ok(())
}
