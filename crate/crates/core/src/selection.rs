//! Choosing the mixing weight κ from data.
//!
//! Three risk curves over a grid of κ values:
//!
//! * [`bootstrap_select`] resamples rows, rebuilds the (possibly lower-rank)
//!   estimator on each resample and averages its loss against a reference;
//! * [`cv_select`] evaluates held-out quadratic forms for the Frobenius,
//!   quadratic and Stein criteria, leave-one-out or K-fold;
//! * [`oracle_select`] averages the true loss over simulated datasets and is
//!   only usable when the population covariance is known.
//!
//! Every replicate and fold draws from its own seed stream, so a curve does
//! not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::losses::{loss_with_roles, LossKind};
use crate::par;
use crate::seed::{self, Stream};
use crate::shrinkage::{assemble, lambda_kappa, lambda_one, lambda_zero};
use crate::simbench::sample_gaussian;
use crate::spectra::{decompose, DataMatrix, SampleSpectrum, DEFAULT_RANK_TOL};

pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 200;
pub const DEFAULT_GRID_STEP: f64 = 0.01;
/// Redraws allowed per bootstrap replicate before giving up.
pub const MAX_REDRAWS: usize = 100;
/// Risks within this relative distance of the minimum count as tied.
const TIE_TOL: f64 = 1e-12;

/// Strictly increasing κ values in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct KappaGrid {
    values: Vec<f64>,
}

impl KappaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if let Some(&v) = values.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(Error::InvalidGrid(format!("value {v} outside [0, 1)")));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("values must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// `{0, h, 2h, …}` below 1. When `1/h` is an integer `m` the points are
    /// computed as `i/m`, so `0.05` gives exactly `0.05, 0.1, …, 0.95`.
    pub fn with_step(step: f64) -> Result<Self> {
        if !(step > 0.0 && step < 1.0) {
            return Err(Error::InvalidGrid(format!("step {step} outside (0, 1)")));
        }
        let m = (1.0 / step).round();
        let values = if ((1.0 / step) - m).abs() < 1e-9 {
            let m = m as usize;
            (0..m).map(|i| i as f64 / m as f64).collect()
        } else {
            (0..)
                .map(|i| i as f64 * step)
                .take_while(|&v| v < 1.0)
                .collect()
        };
        Self::new(values)
    }

    pub fn single(kappa: f64) -> Result<Self> {
        Self::new(vec![kappa])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The middle value (lower middle for even lengths).
    pub fn median(&self) -> f64 {
        let n = self.values.len();
        if n % 2 == 1 {
            self.values[n / 2]
        } else {
            0.5 * (self.values[n / 2 - 1] + self.values[n / 2])
        }
    }
}

impl Default for KappaGrid {
    fn default() -> Self {
        Self::with_step(DEFAULT_GRID_STEP).expect("default step is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bootstrap,
    Cv,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bootstrap => "bootstrap",
            Method::Cv => "cv",
            Method::Oracle => "oracle",
        })
    }
}

/// Per-replicate bookkeeping of a bootstrap run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapDiagnostics {
    /// Rank `q_b` of each replicate.
    pub ranks: Vec<usize>,
    /// Number of distinct original rows in each replicate.
    pub distinct_rows: Vec<usize>,
    /// Total redraws of rank-degenerate resamples.
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskCurve {
    pub grid: KappaGrid,
    pub risk: Vec<f64>,
    pub method: Method,
    pub loss: LossKind,
    pub argmin: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapDiagnostics>,
}

impl RiskCurve {
    pub fn new(grid: KappaGrid, risk: Vec<f64>, method: Method, loss: LossKind) -> Result<Self> {
        if risk.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: risk.len(),
            });
        }
        if let Some(i) = risk.iter().position(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "risk at kappa = {} is not finite",
                grid.values()[i]
            )));
        }
        let argmin = argmin_smallest(&risk);
        Ok(Self {
            grid,
            risk,
            method,
            loss,
            argmin,
            bootstrap: None,
        })
    }

    pub fn kappa_hat(&self) -> f64 {
        self.grid.values()[self.argmin]
    }

    pub fn min_risk(&self) -> f64 {
        self.risk[self.argmin]
    }

    /// Risk at the grid point closest to `kappa`.
    pub fn risk_at(&self, kappa: f64) -> f64 {
        let i = self
            .grid
            .values()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - kappa).abs().total_cmp(&(b.1 - kappa).abs()))
            .map(|(i, _)| i)
            .expect("grid is non-empty");
        self.risk[i]
    }
}

/// First index whose value is within a relative `1e-12` of the minimum.
fn argmin_smallest(risk: &[f64]) -> usize {
    let min = risk.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * min.abs().max(1.0);
    risk.iter().position(|&r| r <= min + tol).unwrap_or(0)
}

/// Bootstrap risk of an arbitrary per-κ criterion. `eval(Σ̂^κ_b, κ)` is
/// called for every replicate and grid point; returns the averaged curve
/// values and the replicate diagnostics.
pub fn bootstrap_risk<F>(
    x: &DataMatrix,
    replicates: usize,
    grid: &KappaGrid,
    seed: u64,
    eval: F,
) -> Result<(Vec<f64>, BootstrapDiagnostics)>
where
    F: Fn(&CovarianceEstimate, f64) -> Result<f64> + Sync,
{
    if replicates == 0 {
        return Err(Error::InvalidArgument("bootstrap needs B >= 1".into()));
    }
    let n = x.rows();
    let per_rep = par::try_map(replicates, |b| {
        let mut rng = seed::rng_for(seed, Stream::Bootstrap, b as u64);
        let mut redraws = 0;
        let (spec, distinct) = loop {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            match decompose(&x.select_rows(&idx), DEFAULT_RANK_TOL) {
                Ok(spec) => {
                    let mut seen = idx.clone();
                    seen.sort_unstable();
                    seen.dedup();
                    break (spec, seen.len());
                }
                Err(Error::AllZeroMatrix | Error::DegenerateSpectrum { .. }) if redraws < MAX_REDRAWS => {
                    redraws += 1;
                }
                Err(Error::AllZeroMatrix | Error::DegenerateSpectrum { .. }) => {
                    return Err(Error::ResampleDegenerate {
                        replicate: b,
                        attempts: redraws,
                    })
                }
                Err(e) => return Err(e.at_replicate(b)),
            }
        };
        debug_assert!(spec.q() <= distinct);
        let values = grid
            .values()
            .iter()
            .map(|&k| {
                let est = assemble(&spec, &lambda_kappa(&spec, k)?)?;
                eval(&est, k)
            })
            .collect::<Result<Vec<f64>>>()
            .map_err(|e| e.at_replicate(b))?;
        Ok((values, spec.q(), distinct, redraws))
    })?;

    let mut risk = vec![0.0; grid.len()];
    let mut diag = BootstrapDiagnostics {
        ranks: Vec::with_capacity(replicates),
        distinct_rows: Vec::with_capacity(replicates),
        redraws: 0,
    };
    for (values, q, distinct, redraws) in per_rep {
        for (r, v) in risk.iter_mut().zip(values) {
            *r += v;
        }
        diag.ranks.push(q);
        diag.distinct_rows.push(distinct);
        diag.redraws += redraws;
    }
    for r in &mut risk {
        *r /= replicates as f64;
    }
    Ok((risk, diag))
}

/// Bootstrap κ selection against `reference`.
///
/// With `invert_roles` the loss is `L(Σ̄, Σ̂^κ_b)` instead of `L(Σ̂^κ_b, Σ̄)`,
/// which lets the quadratic loss use a singular reference such as `S/n`.
pub fn bootstrap_select(
    x: &DataMatrix,
    loss: LossKind,
    reference: &CovarianceEstimate,
    replicates: usize,
    grid: &KappaGrid,
    seed: u64,
    invert_roles: bool,
) -> Result<RiskCurve> {
    if reference.p() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            got: reference.p(),
        });
    }
    // Stein needs both arguments invertible; q only its second.
    let needs_inverse = match loss {
        LossKind::Stein => true,
        LossKind::Quadratic => !invert_roles,
        _ => false,
    };
    if needs_inverse && !reference.is_invertible() {
        return Err(Error::SingularReference);
    }
    let (risk, diag) = bootstrap_risk(x, replicates, grid, seed, |est, _| {
        Ok(loss_with_roles(loss, est, reference, invert_roles)?.value)
    })?;
    let mut curve = RiskCurve::new(grid.clone(), risk, Method::Bootstrap, loss)?;
    curve.bootstrap = Some(diag);
    Ok(curve)
}

/// Cross-validation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Folds {
    LeaveOneOut,
    K(usize),
}

impl FromStr for Folds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("loo") {
            return Ok(Folds::LeaveOneOut);
        }
        s.parse::<usize>()
            .map(Folds::K)
            .map_err(|_| Error::Parse(format!("folds must be an integer or 'loo', got '{s}'")))
    }
}

impl fmt::Display for Folds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Folds::LeaveOneOut => f.write_str("loo"),
            Folds::K(k) => write!(f, "{k}"),
        }
    }
}

/// Row indices of each fold. K-fold shuffles the rows with the fold seed
/// stream and deals them round-robin.
pub fn fold_assignment(n: usize, folds: Folds, seed: u64) -> Result<Vec<Vec<usize>>> {
    match folds {
        Folds::LeaveOneOut => Ok((0..n).map(|i| vec![i]).collect()),
        Folds::K(k) => {
            if k < 2 || k > n {
                return Err(Error::InvalidArgument(format!(
                    "K = {k} folds is not in [2, n = {n}]"
                )));
            }
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut seed::rng_for(seed, Stream::FoldShuffle, 0));
            let mut out = vec![Vec::new(); k];
            for (j, &i) in perm.iter().enumerate() {
                out[j % k].push(i);
            }
            for f in &mut out {
                f.sort_unstable();
            }
            Ok(out)
        }
    }
}

/// Per-κ values of the held-out quadratic forms `xᵀΣ̂x` or `xᵀΣ̂⁻¹x` for
/// one row, using frame coordinates of the held-in spectrum.
struct HeldOut {
    coords: Vec<f64>,
    residual: f64,
}

impl HeldOut {
    fn new(spec: &SampleSpectrum, x: &nalgebra::DVector<f64>) -> Self {
        let c = spec.frame().tr_mul(x);
        let residual = if spec.q() < spec.p() {
            (x.norm_squared() - c.norm_squared()).max(0.0)
        } else {
            0.0
        };
        Self {
            coords: c.iter().map(|v| v * v).collect(),
            residual,
        }
    }

    fn forward(&self, lead: &[f64], tail: f64) -> f64 {
        let s: f64 = self.coords.iter().zip(lead).map(|(c, l)| c * l).sum();
        s + tail * self.residual
    }

    fn inverse(&self, lead: &[f64], tail: f64) -> f64 {
        let s: f64 = self.coords.iter().zip(lead).map(|(c, l)| c / l).sum();
        if self.residual > 0.0 {
            s + self.residual / tail
        } else {
            s
        }
    }
}

/// `κλ¹ + (1 − κ)λ⁰` for the leading entries and the tail, evaluated in the
/// same order as [`lambda_kappa`].
fn mixed(l1: &[f64], l0: f64, kappa: f64) -> (Vec<f64>, f64) {
    let base = (1.0 - kappa) * l0;
    (l1.iter().map(|v| kappa * v + base).collect(), base)
}

/// Cross-validated κ selection for `frob`, `q` or `st`.
///
/// With `z_i = X_iᵀ(Σ̂^κ_{∖i})⁻¹X_i` computed on the held-in rows:
///
/// * frob: `tr(Σ̂^κΣ̂^κ) − (2/n)Σ X_iᵀΣ̂^κ_{∖i}X_i`
/// * q: `−(2/n)Σz_i + (1/2n)Σz_i² − ½((1/n)Σz_i)²`
/// * st: `(1/2n)Σz_i + ½ ln det Σ̂^κ`
///
/// Each criterion differs from the corresponding risk by a κ-free term.
/// The quadratic and Stein criteria are for the reversed roles `L(Σ, Σ̂^κ)`.
pub fn cv_select(x: &DataMatrix, loss: LossKind, folds: Folds, grid: &KappaGrid, seed: u64) -> Result<RiskCurve> {
    if !matches!(loss, LossKind::Frobenius | LossKind::Quadratic | LossKind::Stein) {
        return Err(Error::UnsupportedLoss(loss.tag()));
    }
    let n = x.rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let assignment = fold_assignment(n, folds, seed)?;
    let kappas = grid.values();

    // z[i][k]: quadratic form of row i under the κ_k held-in estimator.
    let per_fold = par::try_map(assignment.len(), |f| {
        let held_in = x.without_rows(&assignment[f]);
        let spec = decompose(&held_in, DEFAULT_RANK_TOL)?;
        let l1 = lambda_one(&spec).lambda_hat[..spec.q()].to_vec();
        let l0 = lambda_zero(&spec).lambda_hat[0];
        let rows: Vec<(usize, Vec<f64>)> = assignment[f]
            .iter()
            .map(|&i| {
                let h = HeldOut::new(&spec, &x.row(i));
                let z = kappas
                    .iter()
                    .map(|&k| {
                        let (lead, tail) = mixed(&l1, l0, k);
                        match loss {
                            LossKind::Frobenius => h.forward(&lead, tail),
                            _ => h.inverse(&lead, tail),
                        }
                    })
                    .collect();
                (i, z)
            })
            .collect();
        Ok(rows)
    })?;
    let mut z = vec![Vec::new(); n];
    for (i, zi) in per_fold.into_iter().flatten() {
        z[i] = zi;
    }

    let full = decompose(x, DEFAULT_RANK_TOL)?;
    let l1 = lambda_one(&full).lambda_hat[..full.q()].to_vec();
    let l0 = lambda_zero(&full).lambda_hat[0];
    let tail_count = (full.p() - full.q()) as f64;
    let nf = n as f64;

    let risk = kappas
        .iter()
        .enumerate()
        .map(|(k, &kappa)| {
            let (lead, tail) = mixed(&l1, l0, kappa);
            let col = || z.iter().map(|zi| zi[k]);
            let mean = col().sum::<f64>() / nf;
            match loss {
                LossKind::Frobenius => {
                    let tr_sq = lead.iter().map(|v| v * v).sum::<f64>() + tail_count * tail * tail;
                    tr_sq - 2.0 * mean
                }
                LossKind::Quadratic => {
                    let sq = col().map(|v| v * v).sum::<f64>();
                    -2.0 * mean + sq / (2.0 * nf) - 0.5 * mean * mean
                }
                _ => {
                    let log_det = lead.iter().map(|v| v.ln()).sum::<f64>() + tail_count * tail.ln();
                    0.5 * mean + 0.5 * log_det
                }
            }
        })
        .collect();
    RiskCurve::new(grid.clone(), risk, Method::Cv, loss)
}

/// Monte-Carlo risk `E L(Σ̂^κ, Σ)` over `reps` Gaussian datasets of size `n`
/// drawn from the true `sigma`.
pub fn oracle_select(
    sigma: &CovarianceEstimate,
    n: usize,
    loss: LossKind,
    grid: &KappaGrid,
    reps: usize,
    seed: u64,
) -> Result<RiskCurve> {
    if reps == 0 {
        return Err(Error::InvalidArgument("oracle needs reps >= 1".into()));
    }
    let per_rep = par::try_map(reps, |r| {
        let run = || {
            let x = sample_gaussian(sigma, n, seed::derive(seed, Stream::Oracle, r as u64))?;
            let spec = decompose(&x, DEFAULT_RANK_TOL)?;
            grid.values()
                .iter()
                .map(|&k| {
                    let est = assemble(&spec, &lambda_kappa(&spec, k)?)?;
                    Ok(loss_with_roles(loss, &est, sigma, false)?.value)
                })
                .collect::<Result<Vec<f64>>>()
        };
        run().map_err(|e| e.at_replicate(r))
    })?;
    let mut risk = vec![0.0; grid.len()];
    for values in per_rep {
        for (r, v) in risk.iter_mut().zip(values) {
            *r += v;
        }
    }
    for r in &mut risk {
        *r /= reps as f64;
    }
    RiskCurve::new(grid.clone(), risk, Method::Oracle, loss)
}
