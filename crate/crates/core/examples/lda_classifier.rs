//! Plug-in discriminant analysis on a simulated 31-variable, 20-case study.
//!
//! ```bash
//! cargo run --release --example lda_classifier
//! ```

use eigenshrink::classify::{evaluate, fit_lda, simulate_template, PluginSpec, Priors, TwoClassTemplate};
use eigenshrink::simbench::ReferenceSpec;
use eigenshrink::{Folds, KappaGrid, LossKind};

fn main() -> eigenshrink::Result<()> {
    let t = TwoClassTemplate::BREAST_CANCER_SHAPE;
    let data = simulate_template(&t, 2024)?;
    let grid = KappaGrid::with_step(0.05)?;
    let plugins = [
        ("kappa = 0", PluginSpec::Fixed(0.0)),
        ("kappa = 0.9", PluginSpec::Fixed(0.9)),
        (
            "bootstrap",
            PluginSpec::Boot {
                loss: LossKind::Frobenius,
                reference: ReferenceSpec::LambdaOneNs,
                replicates: 100,
                grid: grid.clone(),
                invert_roles: false,
            },
        ),
        (
            "loo cv",
            PluginSpec::Cv {
                loss: LossKind::Frobenius,
                folds: Folds::LeaveOneOut,
                grid,
            },
        ),
    ];
    println!("train {}+{}, test {}", data.train0.rows(), data.train1.rows(), data.test.rows());
    for (name, plugin) in &plugins {
        let model = fit_lda(&data.train0, &data.train1, plugin, Priors::Proportions, 1)?;
        let r = evaluate(&model, &data.test, &data.labels)?;
        println!(
            "{name:<12} kappa {:.2}  MCR {:.3}  sens {:.3}  spec {:.3}",
            model.kappa,
            r.mcr,
            r.sens.unwrap_or(f64::NAN),
            r.spec.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
