//! Synthetic covariance scenarios, Gaussian sampling and Monte-Carlo risk.
//!
//! Population structures for dimension `p`:
//!
//! | kind | Σ |
//! |------|---|
//! | s1 | `diag(p², …, 2², 1²)` |
//! | s2 | `diag(λ*₍₁₎, λ₍₂₎, …, λ₍p₎)` with `λᵢ ~ U(1, p/2)` sorted descending and `λ*₍₁₎ = λ₍₁₎²` |
//! | s3 | AR(1): `σᵢᵢ = 16`, `σᵢⱼ = 4·0.7^{|i−j|}` |
//! | s4 | `diag(2p, p, 1, …, 1)` |
//! | s5 | `I_p` |
//! | file | a user-supplied SPD matrix |
//!
//! The sample size is `n = round(p/γ)`. Replicate `r` of a run with master
//! seed `s` draws its dataset from stream `Data`, index `r`, and any
//! estimator randomness from stream `Estimator`, index `r`; two estimators
//! run with the same seed therefore see identical datasets.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::Serialize;

use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::losses::{loss_with_roles, prial, LossKind};
use crate::par;
use crate::random::gaussian_matrix;
use crate::seed::{self, Stream};
use crate::selection::{bootstrap_select, cv_select, oracle_select, Folds, KappaGrid, DEFAULT_BOOTSTRAP_REPLICATES};
use crate::shrinkage::{assemble, lambda_kappa, lambda_one_ns, sample_covariance};
use crate::spectra::{decompose, DataMatrix, DEFAULT_RANK_TOL};

pub const DEFAULT_REPS: usize = 1000;
pub const DEFAULT_ORACLE_REPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Sigma1,
    Sigma2,
    Sigma3,
    Sigma4,
    Sigma5,
    File,
}

impl ScenarioKind {
    pub fn tag(self) -> &'static str {
        match self {
            ScenarioKind::Sigma1 => "s1",
            ScenarioKind::Sigma2 => "s2",
            ScenarioKind::Sigma3 => "s3",
            ScenarioKind::Sigma4 => "s4",
            ScenarioKind::Sigma5 => "s5",
            ScenarioKind::File => "file",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "s1" | "sigma1" => ScenarioKind::Sigma1,
            "s2" | "sigma2" => ScenarioKind::Sigma2,
            "s3" | "sigma3" => ScenarioKind::Sigma3,
            "s4" | "sigma4" => ScenarioKind::Sigma4,
            "s5" | "sigma5" => ScenarioKind::Sigma5,
            "file" => ScenarioKind::File,
            other => return Err(Error::Parse(format!("unknown scenario '{other}'"))),
        })
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub p: usize,
    pub gamma: f64,
    /// Seed of the random eigenvalues of `s2`; unused by the other kinds.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, p: usize, gamma: f64) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidArgument(format!("scenario needs p >= 2, got {p}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        let spec = Self {
            kind,
            p,
            gamma,
            seed: 0,
            path: None,
        };
        if spec.n() == 0 {
            return Err(Error::InvalidArgument(format!("p/gamma = {} rounds to n = 0", p as f64 / gamma)));
        }
        Ok(spec)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// A `file` scenario; `p` must match the stored matrix.
    pub fn from_file(path: PathBuf, p: usize, gamma: f64) -> Result<Self> {
        let mut s = Self::new(ScenarioKind::File, p, gamma)?;
        s.path = Some(path);
        Ok(s)
    }

    /// Parses names like `s3-p50-g2` or `s1-p100-g1.25`.
    pub fn preset(name: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("preset '{name}' is not of the form s<k>-p<dim>-g<gamma>"));
        let parts: Vec<&str> = name.split('-').collect();
        let [kind, p, g] = parts.as_slice() else {
            return Err(bad());
        };
        let kind: ScenarioKind = kind.parse()?;
        if kind == ScenarioKind::File {
            return Err(bad());
        }
        let p = p.strip_prefix('p').and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let g = g.strip_prefix('g').and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        Self::new(kind, p, g)
    }

    /// The thirty configurations: five structures, `p ∈ {50, 100}`,
    /// `γ ∈ {1.25, 2, 5}`.
    pub fn presets() -> Vec<String> {
        let mut out = Vec::new();
        for k in 1..=5 {
            for p in [50, 100] {
                for g in ["1.25", "2", "5"] {
                    out.push(format!("s{k}-p{p}-g{g}"));
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        (self.p as f64 / self.gamma).round() as usize
    }

    /// Whether `n < p`, the regime the estimator targets.
    pub fn is_high_dimensional(&self) -> bool {
        self.n() < self.p
    }

    pub fn label(&self) -> String {
        match self.kind {
            ScenarioKind::File => "file".into(),
            k => format!("{}-p{}-g{}", k.tag(), self.p, self.gamma),
        }
    }
}

/// Population covariance of a scenario.
pub fn make_sigma(spec: &ScenarioSpec) -> Result<CovarianceEstimate> {
    let p = spec.p;
    let pf = p as f64;
    Ok(match spec.kind {
        ScenarioKind::Sigma1 => CovarianceEstimate::diagonal(
            &(0..p).map(|i| ((p - i) as f64).powi(2)).collect::<Vec<_>>(),
        ),
        ScenarioKind::Sigma2 => {
            let mut rng = seed::rng_for(spec.seed, Stream::Sigma, 0);
            let hi = pf / 2.0;
            let mut v: Vec<f64> = (0..p).map(|_| 1.0 + (hi - 1.0) * rng.random::<f64>()).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v[0] *= v[0];
            CovarianceEstimate::diagonal(&v)
        }
        ScenarioKind::Sigma3 => {
            let m = DMatrix::from_fn(p, p, |i, j| {
                if i == j {
                    16.0
                } else {
                    4.0 * 0.7f64.powi(i.abs_diff(j) as i32)
                }
            });
            CovarianceEstimate::from_dense(m)?
        }
        ScenarioKind::Sigma4 => {
            let mut v = vec![1.0; p];
            v[0] = 2.0 * pf;
            v[1] = pf;
            CovarianceEstimate::diagonal(&v)
        }
        ScenarioKind::Sigma5 => CovarianceEstimate::scaled_identity(p, 1.0),
        ScenarioKind::File => {
            let path = spec
                .path
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("file scenario without a path".into()))?;
            sigma_from_matrix(crate::io::read_matrix(path, false)?, p)?
        }
    })
}

/// Validates a user-supplied population matrix.
pub fn sigma_from_matrix(m: DMatrix<f64>, p: usize) -> Result<CovarianceEstimate> {
    if m.nrows() != m.ncols() {
        return Err(Error::FileNotSpd(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    if m.nrows() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: m.nrows(),
        });
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (&m - m.transpose()).amax();
    if asym > 1e-8 * scale {
        return Err(Error::FileNotSpd(format!("max |a_ij - a_ji| = {asym:e}")));
    }
    let s = CovarianceEstimate::from_dense(m).map_err(|e| Error::FileNotSpd(e.to_string()))?;
    let min = s.min_eigenvalue();
    if min <= 1e-8 * scale {
        return Err(Error::FileNotSpd(format!("smallest eigenvalue {min:e}")));
    }
    Ok(s)
}

/// `n` independent rows from `N(0, Σ)`, computed as `Z·Lᵀ` with `Σ = LLᵀ`
/// the Cholesky factor and `Z` standard normal.
pub fn sample_gaussian(sigma: &CovarianceEstimate, n: usize, seed: u64) -> Result<DataMatrix> {
    let p = sigma.p();
    let chol = sigma
        .dense()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::FactorizationFailure("covariance is not numerically positive definite".into()))?;
    let z = gaussian_matrix(n, p, &mut seed::rng(seed));
    DataMatrix::new(z * chol.l().transpose())
}

/// Stable hash of a dataset's bit pattern.
pub fn dataset_hash(x: &DataMatrix) -> u64 {
    let mut h = DefaultHasher::new();
    x.values().shape().hash(&mut h);
    for v in x.values().iter() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Reference matrix for bootstrap κ selection.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSpec {
    /// The non-singular extension of `λ¹` from the same data.
    LambdaOneNs,
    /// `S/n` from the same data.
    Sample,
    Fixed(CovarianceEstimate),
}

impl ReferenceSpec {
    pub fn build(&self, x: &DataMatrix) -> Result<CovarianceEstimate> {
        match self {
            ReferenceSpec::Fixed(m) => Ok(m.clone()),
            other => {
                let spec = decompose(x, DEFAULT_RANK_TOL)?;
                match other {
                    ReferenceSpec::LambdaOneNs => assemble(&spec, &lambda_one_ns(&spec)),
                    _ => sample_covariance(&spec),
                }
            }
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ReferenceSpec::LambdaOneNs => "ns",
            ReferenceSpec::Sample => "sample",
            ReferenceSpec::Fixed(_) => "file",
        }
    }
}

/// An estimator pipeline applied to each simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    /// Returns the population matrix itself.
    Truth,
    /// `S/n`.
    Sample,
    LambdaOneNs,
    KappaFixed(f64),
    /// κ′ from the Monte-Carlo oracle curve, computed once per run.
    KappaOracle { grid: KappaGrid, reps: usize },
    /// Bootstrap κ̂ on every dataset. `select_loss = None` uses the loss
    /// being evaluated.
    KappaBoot {
        grid: KappaGrid,
        replicates: usize,
        reference: ReferenceSpec,
        invert_roles: bool,
        select_loss: Option<LossKind>,
    },
    /// Cross-validated κ̂ on every dataset.
    KappaCv {
        grid: KappaGrid,
        folds: Folds,
        select_loss: Option<LossKind>,
    },
}

impl EstimatorSpec {
    pub fn tag(&self) -> String {
        match self {
            EstimatorSpec::Truth => "truth".into(),
            EstimatorSpec::Sample => "sample".into(),
            EstimatorSpec::LambdaOneNs => "lambda-one-ns".into(),
            EstimatorSpec::KappaFixed(k) => format!("kappa-fixed:{k}"),
            EstimatorSpec::KappaOracle { .. } => "kappa-oracle".into(),
            EstimatorSpec::KappaBoot { .. } => "kappa-boot".into(),
            EstimatorSpec::KappaCv { .. } => "kappa-cv".into(),
        }
    }

    /// Parses a tag with default settings: `truth`, `sample`,
    /// `lambda-one-ns`, `kappa-fixed:<κ>`, `kappa-oracle`, `kappa-boot`,
    /// `kappa-cv`.
    pub fn parse(tag: &str) -> Result<Self> {
        let lower = tag.to_ascii_lowercase();
        if let Some(k) = lower.strip_prefix("kappa-fixed:") {
            let k: f64 = k.parse().map_err(|_| Error::Parse(format!("bad kappa in '{tag}'")))?;
            crate::shrinkage::check_kappa(k)?;
            return Ok(EstimatorSpec::KappaFixed(k));
        }
        Ok(match lower.as_str() {
            "truth" => EstimatorSpec::Truth,
            "sample" => EstimatorSpec::Sample,
            "lambda-one-ns" | "ns" => EstimatorSpec::LambdaOneNs,
            "kappa-oracle" => EstimatorSpec::KappaOracle {
                grid: KappaGrid::default(),
                reps: DEFAULT_ORACLE_REPS,
            },
            "kappa-boot" => EstimatorSpec::KappaBoot {
                grid: KappaGrid::default(),
                replicates: DEFAULT_BOOTSTRAP_REPLICATES,
                reference: ReferenceSpec::LambdaOneNs,
                invert_roles: false,
                select_loss: None,
            },
            "kappa-cv" => EstimatorSpec::KappaCv {
                grid: KappaGrid::default(),
                folds: Folds::LeaveOneOut,
                select_loss: None,
            },
            _ => return Err(Error::Parse(format!("unknown estimator '{tag}'"))),
        })
    }

    /// Returns a copy with its κ grid replaced, where it has one.
    pub fn with_grid(mut self, new: KappaGrid) -> Self {
        match &mut self {
            EstimatorSpec::KappaOracle { grid, .. }
            | EstimatorSpec::KappaBoot { grid, .. }
            | EstimatorSpec::KappaCv { grid, .. } => *grid = new,
            _ => {}
        }
        self
    }
}

/// Per-run state, such as the oracle κ′ for a given loss.
#[derive(Debug, Clone)]
enum Prepared {
    Fixed(f64),
    Other,
}

fn prepare(est: &EstimatorSpec, sigma: &CovarianceEstimate, n: usize, loss: LossKind, seed: u64) -> Result<Prepared> {
    Ok(match est {
        EstimatorSpec::KappaFixed(k) => Prepared::Fixed(*k),
        EstimatorSpec::KappaOracle { grid, reps } => {
            let curve = oracle_select(sigma, n, loss, grid, *reps, seed::derive(seed, Stream::Oracle, 0))?;
            Prepared::Fixed(curve.kappa_hat())
        }
        _ => Prepared::Other,
    })
}

/// Runs the estimator on one dataset; also returns the κ it used, if any.
fn apply(
    est: &EstimatorSpec,
    prep: &Prepared,
    x: &DataMatrix,
    sigma: &CovarianceEstimate,
    loss: LossKind,
    seed: u64,
) -> Result<(CovarianceEstimate, Option<f64>)> {
    if let EstimatorSpec::Truth = est {
        return Ok((sigma.clone(), None));
    }
    let spec = decompose(x, DEFAULT_RANK_TOL)?;
    let kappa = match (est, prep) {
        (EstimatorSpec::Sample, _) => return Ok((sample_covariance(&spec)?, None)),
        (EstimatorSpec::LambdaOneNs, _) => return Ok((assemble(&spec, &lambda_one_ns(&spec))?, None)),
        (_, Prepared::Fixed(k)) => *k,
        (
            EstimatorSpec::KappaBoot {
                grid,
                replicates,
                reference,
                invert_roles,
                select_loss,
            },
            _,
        ) => {
            let r = reference.build(x)?;
            bootstrap_select(x, select_loss.unwrap_or(loss), &r, *replicates, grid, seed, *invert_roles)?.kappa_hat()
        }
        (EstimatorSpec::KappaCv { grid, folds, select_loss }, _) => {
            cv_select(x, select_loss.unwrap_or(loss), *folds, grid, seed)?.kappa_hat()
        }
        _ => unreachable!("fixed-kappa estimators are prepared"),
    };
    Ok((assemble(&spec, &lambda_kappa(&spec, kappa)?)?, Some(kappa)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub estimator: String,
    pub mean: f64,
    pub se: f64,
    pub reps: usize,
    /// Per-replicate losses in replicate order.
    #[serde(skip)]
    pub losses: Vec<f64>,
    /// Per-replicate κ, for κ-based estimators.
    #[serde(skip)]
    pub kappas: Vec<f64>,
}

impl RiskEstimate {
    fn from_losses(estimator: String, losses: Vec<f64>, kappas: Vec<f64>) -> Self {
        let (mean, se) = mean_se(&losses);
        Self {
            estimator,
            mean,
            se,
            reps: losses.len(),
            losses,
            kappas,
        }
    }
}

/// Mean and standard error `sd/√m`, with the `m − 1` variance divisor.
/// One observation gives SE 0.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub scenario: String,
    pub p: usize,
    pub n: usize,
    pub loss: LossKind,
    pub estimates: Vec<RiskEstimate>,
    /// PRIAL of the first estimate relative to the second.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prial: Option<f64>,
    #[serde(skip)]
    pub dataset_hashes: Vec<u64>,
}

/// Monte-Carlo risk `E L(Σ̂, Σ)` of one estimator under one loss.
pub fn mc_risk(spec: &ScenarioSpec, estimator: &EstimatorSpec, loss: LossKind, reps: usize, seed: u64) -> Result<BenchResult> {
    let sigma = make_sigma(spec)?;
    mc_risk_with_sigma(spec, &sigma, estimator, loss, reps, seed)
}

/// [`mc_risk`] with the population matrix already built.
pub fn mc_risk_with_sigma(
    spec: &ScenarioSpec,
    sigma: &CovarianceEstimate,
    estimator: &EstimatorSpec,
    loss: LossKind,
    reps: usize,
    seed: u64,
) -> Result<BenchResult> {
    let mut r = run_paired(spec, sigma, &[estimator], &[loss], reps, seed)?;
    Ok(r.remove(0))
}

/// Paired comparison of `pair.0` against the reference `pair.1` on shared
/// datasets, one result per loss with the PRIAL filled in.
pub fn bench_prial(
    spec: &ScenarioSpec,
    losses: &[LossKind],
    pair: (&EstimatorSpec, &EstimatorSpec),
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchResult>> {
    let sigma = make_sigma(spec)?;
    let mut out = run_paired(spec, &sigma, &[pair.0, pair.1], losses, reps, seed)?;
    for r in &mut out {
        r.prial = Some(prial(&r.estimates[1].losses, &r.estimates[0].losses)?);
    }
    Ok(out)
}

/// Every estimator on every loss over the same `reps` datasets.
fn run_paired(
    spec: &ScenarioSpec,
    sigma: &CovarianceEstimate,
    estimators: &[&EstimatorSpec],
    losses: &[LossKind],
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchResult>> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be >= 1".into()));
    }
    if sigma.p() != spec.p {
        return Err(Error::DimensionMismatch {
            expected: spec.p,
            got: sigma.p(),
        });
    }
    let n = spec.n();
    // prepared[e][l]
    let prepared = estimators
        .iter()
        .map(|e| losses.iter().map(|&l| prepare(e, sigma, n, l, seed)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    // per_rep[r] = (hash, values[e][l], kappas[e][l])
    type Rep = (u64, Vec<Vec<f64>>, Vec<Vec<Option<f64>>>);
    let per_rep: Vec<Rep> = par::try_map(reps, |r| {
        let run = || -> Result<Rep> {
            let x = sample_gaussian(sigma, n, seed::derive(seed, Stream::Data, r as u64))?;
            let est_seed = seed::derive(seed, Stream::Estimator, r as u64);
            let mut values = Vec::with_capacity(estimators.len());
            let mut kappas = Vec::with_capacity(estimators.len());
            for (e, est) in estimators.iter().enumerate() {
                let mut v = Vec::with_capacity(losses.len());
                let mut k = Vec::with_capacity(losses.len());
                for (l, &loss) in losses.iter().enumerate() {
                    let (sh, kappa) = apply(est, &prepared[e][l], &x, sigma, loss, est_seed)?;
                    v.push(loss_with_roles(loss, &sh, sigma, false)?.value);
                    k.push(kappa);
                }
                values.push(v);
                kappas.push(k);
            }
            Ok((dataset_hash(&x), values, kappas))
        };
        run().map_err(|e| e.at_replicate(r))
    })?;

    let hashes: Vec<u64> = per_rep.iter().map(|r| r.0).collect();
    Ok(losses
        .iter()
        .enumerate()
        .map(|(l, &loss)| BenchResult {
            scenario: spec.label(),
            p: spec.p,
            n,
            loss,
            estimates: estimators
                .iter()
                .enumerate()
                .map(|(e, est)| {
                    RiskEstimate::from_losses(
                        est.tag(),
                        per_rep.iter().map(|r| r.1[e][l]).collect(),
                        per_rep.iter().filter_map(|r| r.2[e][l]).collect(),
                    )
                })
                .collect(),
            prial: None,
            dataset_hashes: hashes.clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{ChiSquared, Distribution};

    fn spec(kind: ScenarioKind, p: usize, gamma: f64) -> ScenarioSpec {
        ScenarioSpec::new(kind, p, gamma).unwrap()
    }

    #[test]
    fn scenario_matrices() {
        let d = |k, p| make_sigma(&spec(k, p, 2.0)).unwrap().dense().clone();
        assert_eq!(d(ScenarioKind::Sigma1, 3), DMatrix::from_diagonal(&nalgebra::dvector![9.0, 4.0, 1.0]));
        assert_eq!(d(ScenarioKind::Sigma4, 4), DMatrix::from_diagonal(&nalgebra::dvector![8.0, 4.0, 1.0, 1.0]));
        let s3 = d(ScenarioKind::Sigma3, 2);
        assert!((s3 - DMatrix::from_row_slice(2, 2, &[16.0, 2.8, 2.8, 16.0])).amax() < 1e-14);
        assert_eq!(d(ScenarioKind::Sigma5, 7), DMatrix::identity(7, 7));
    }

    #[test]
    fn sigma2_shape() {
        let s = spec(ScenarioKind::Sigma2, 50, 2.0).with_seed(3);
        let e = make_sigma(&s).unwrap().eigenvalues();
        assert!(e[1..].iter().all(|&v| (1.0..=25.0).contains(&v)));
        assert!(e.windows(2).all(|w| w[0] >= w[1]));
        assert!(e[0] >= 1.0 && e[0] <= 625.0);
        assert!(e[0] > e[1]);
        assert_eq!(make_sigma(&s).unwrap(), make_sigma(&s).unwrap());
        assert_ne!(make_sigma(&s).unwrap(), make_sigma(&s.clone().with_seed(4)).unwrap());
    }

    #[test]
    fn scenarios_are_spd() {
        for kind in [
            ScenarioKind::Sigma1,
            ScenarioKind::Sigma2,
            ScenarioKind::Sigma3,
            ScenarioKind::Sigma4,
            ScenarioKind::Sigma5,
        ] {
            for p in [2, 50, 100] {
                let s = make_sigma(&spec(kind, p, 2.0)).unwrap();
                assert!(s.min_eigenvalue() > 0.0, "{kind} p={p}");
            }
        }
    }

    #[test]
    fn presets_and_sample_size() {
        let s = ScenarioSpec::preset("s3-p50-g2").unwrap();
        assert_eq!((s.kind, s.p, s.gamma, s.n()), (ScenarioKind::Sigma3, 50, 2.0, 25));
        assert_eq!(ScenarioSpec::preset("s1-p100-g1.25").unwrap().n(), 80);
        assert_eq!(ScenarioSpec::preset("s5-p50-g5").unwrap().n(), 10);
        assert!(ScenarioSpec::preset("s7-p50-g2").is_err());
        assert!(ScenarioSpec::preset("s3-50-2").is_err());
        assert_eq!(ScenarioSpec::presets().len(), 30);
        for name in ScenarioSpec::presets() {
            assert_eq!(ScenarioSpec::preset(&name).unwrap().label(), name);
        }
        assert!(!spec(ScenarioKind::Sigma5, 10, 0.5).is_high_dimensional());
        assert!(ScenarioSpec::new(ScenarioKind::Sigma5, 1, 2.0).is_err());
        assert!(ScenarioSpec::new(ScenarioKind::Sigma5, 2, 10.0).is_err());
    }

    #[test]
    fn file_matrix_validation() {
        let ok = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!(sigma_from_matrix(ok, 2).is_ok());
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.4, 1.0]);
        assert!(matches!(sigma_from_matrix(asym, 2), Err(Error::FileNotSpd(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(sigma_from_matrix(indef, 2), Err(Error::FileNotSpd(_))));
        let rect = DMatrix::zeros(2, 3);
        assert!(matches!(sigma_from_matrix(rect, 2), Err(Error::FileNotSpd(_))));
    }

    #[test]
    fn gaussian_sampling() {
        let s = CovarianceEstimate::diagonal(&[2.0, 1.0]);
        assert_eq!(sample_gaussian(&s, 5, 1).unwrap(), sample_gaussian(&s, 5, 1).unwrap());
        let n = 100_000;
        let x = sample_gaussian(&s, n, 2).unwrap();
        let c = x.values().transpose() * x.values() / n as f64;
        // Var of x_i x_j products: 2σ_ii² on the diagonal, σ_11σ_22 off it.
        let se = |v: f64| (v / n as f64).sqrt();
        assert!((c[(0, 0)] - 2.0).abs() < 3.0 * se(8.0));
        assert!((c[(1, 1)] - 1.0).abs() < 3.0 * se(2.0));
        assert!(c[(0, 1)].abs() < 3.0 * se(2.0));
        let one = sample_gaussian(&CovarianceEstimate::scaled_identity(3, 1.0), 1, 3).unwrap();
        assert_eq!((one.rows(), one.cols()), (1, 3));
        assert_eq!(decompose(&one, DEFAULT_RANK_TOL).unwrap().q(), 1);
        let bad = CovarianceEstimate::diagonal(&[1.0, -1.0]);
        assert!(matches!(sample_gaussian(&bad, 2, 0), Err(Error::FactorizationFailure(_))));
    }

    #[test]
    fn truth_has_zero_risk() {
        let s = spec(ScenarioKind::Sigma3, 10, 2.0);
        for loss in LossKind::ALL {
            let r = mc_risk(&s, &EstimatorSpec::Truth, loss, 3, 1).unwrap();
            assert!(r.estimates[0].mean.abs() < 1e-9, "{loss}");
        }
    }

    #[test]
    fn chi_square_oracle_for_isotropic_kappa_zero() {
        // Σ̂⁰ = (tr S/(np)) I and tr S ~ χ²(np), so the loss is √p |χ²/(np) − 1|.
        let s = spec(ScenarioKind::Sigma5, 50, 2.0);
        let r = mc_risk(&s, &EstimatorSpec::KappaFixed(0.0), LossKind::Frobenius, 500, 11).unwrap();
        let est = &r.estimates[0];
        let df = (50 * 25) as f64;
        let chi = ChiSquared::new(df).unwrap();
        let mut rng = seed::rng(12345);
        let m = 400_000;
        let oracle = (0..m).map(|_| (chi.sample(&mut rng) / df - 1.0).abs()).sum::<f64>() / m as f64 * 50f64.sqrt();
        assert!((est.mean - oracle).abs() < 3.0 * est.se, "{} vs {oracle} (se {})", est.mean, est.se);
    }

    #[test]
    fn reproducible_and_se_scaling() {
        let s = spec(ScenarioKind::Sigma4, 20, 2.0);
        let a = mc_risk(&s, &EstimatorSpec::KappaFixed(0.5), LossKind::Quadratic, 2, 7).unwrap();
        let b = mc_risk(&s, &EstimatorSpec::KappaFixed(0.5), LossKind::Quadratic, 2, 7).unwrap();
        assert_eq!(a, b);
        let small = mc_risk(&s, &EstimatorSpec::KappaFixed(0.5), LossKind::Frobenius, 100, 8).unwrap();
        let large = mc_risk(&s, &EstimatorSpec::KappaFixed(0.5), LossKind::Frobenius, 400, 8).unwrap();
        let ratio = large.estimates[0].se / small.estimates[0].se;
        assert!((ratio - 0.5).abs() < 0.5 * 0.3, "{ratio}");
    }

    #[test]
    fn paired_design_shares_datasets() {
        let s = spec(ScenarioKind::Sigma3, 12, 2.0);
        let a = EstimatorSpec::KappaFixed(0.2);
        let b = EstimatorSpec::LambdaOneNs;
        let res = bench_prial(&s, &[LossKind::Frobenius, LossKind::Evl1], (&a, &b), 6, 3).unwrap();
        let single = mc_risk(&s, &b, LossKind::Frobenius, 6, 3).unwrap();
        assert_eq!(res[0].dataset_hashes, single.dataset_hashes);
        assert_eq!(res[0].estimates[1].losses, single.estimates[0].losses);
        let same = bench_prial(&s, &[LossKind::Frobenius, LossKind::Stein], (&a, &a), 5, 3).unwrap();
        assert!(same.iter().all(|r| r.prial == Some(0.0)));
    }

    #[test]
    fn sample_candidate_under_stein() {
        let s = spec(ScenarioKind::Sigma1, 20, 2.0);
        let e = mc_risk(&s, &EstimatorSpec::Sample, LossKind::Stein, 2, 1).unwrap_err();
        match e {
            Error::Replicate { source, .. } => assert!(matches!(*source, Error::SingularEstimate("st"))),
            other => panic!("{other}"),
        }
        assert!(mc_risk(&s, &EstimatorSpec::Sample, LossKind::Quadratic, 2, 1).is_ok());
    }

    #[test]
    fn estimator_tags() {
        for t in ["truth", "sample", "lambda-one-ns", "kappa-oracle", "kappa-boot", "kappa-cv", "kappa-fixed:0.25"] {
            assert_eq!(EstimatorSpec::parse(t).unwrap().tag(), t);
        }
        assert!(EstimatorSpec::parse("kappa-fixed:1").is_err());
        assert!(EstimatorSpec::parse("lw1").is_err());
    }

    #[test]
    fn selection_estimators_record_kappa() {
        let s = spec(ScenarioKind::Sigma5, 16, 2.0);
        let grid = KappaGrid::with_step(0.25).unwrap();
        let boot = EstimatorSpec::KappaBoot {
            grid: grid.clone(),
            replicates: 5,
            reference: ReferenceSpec::LambdaOneNs,
            invert_roles: false,
            select_loss: None,
        };
        let r = mc_risk(&s, &boot, LossKind::Frobenius, 4, 2).unwrap();
        assert_eq!(r.estimates[0].kappas.len(), 4);
        let cv = EstimatorSpec::parse("kappa-cv").unwrap().with_grid(grid);
        let r = mc_risk(&s, &cv, LossKind::Stein, 3, 2).unwrap();
        assert!(r.estimates[0].kappas.iter().all(|k| (0.0..1.0).contains(k)));
        assert!(matches!(
            mc_risk(&s, &cv, LossKind::Evs, 1, 2),
            Err(Error::Replicate { .. })
        ));
    }
}
