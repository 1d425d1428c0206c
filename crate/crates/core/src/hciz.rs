//! The eigenvector integral over the Stiefel manifold and its large-p
//! approximation.
//!
//! For population eigenvalues `λ` (length `p`) and sample roots `ℓ`
//! (length `n ≤ p`) the integral is
//!
//! `J_n = ∫_{V_n(ℝ^p)} etr(−½ Σ⁻¹ H₁ L H₁ᵀ) (dH₁)`
//!
//! against the normalized Haar measure. The approximation
//!
//! `ln J_n ≈ −½ Σᵢ ℓ̂ᵢ/λᵢ − ½ Σ_{i<j} ln(1 + (1/p)((λᵢ−λⱼ)/(λᵢλⱼ))(ℓ̂ᵢ−ℓ̂ⱼ))`
//!
//! with `ℓ̂ᵢ = 0` past `n` holds only up to a constant that depends on
//! neither `λ` nor `ℓ`, so it is validated by differences against an
//! isotropic reference: see [`approximation_gap`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::par;
use crate::random::stiefel_frame;
use crate::seed::{self, Stream};

/// Frames drawn per parallel block of [`mc_log_jn`].
pub const BLOCK: usize = 8192;
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegralMethod {
    Approx,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StiefelIntegralResult {
    pub log_value: f64,
    pub method: IntegralMethod,
    pub mc_samples: usize,
    pub mc_se: f64,
}

fn check_ell(ell: &[f64], p: usize) -> Result<()> {
    if ell.is_empty() || ell.len() > p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: ell.len(),
        });
    }
    if ell.iter().any(|&l| !(l > 0.0 && l.is_finite())) || ell.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument("sample roots must be positive and strictly decreasing".into()));
    }
    Ok(())
}

/// Large-p approximation of `ln J_n`. `lambda` is used in the order given;
/// entry `i` is paired with `ℓᵢ` for `i < n`.
pub fn approx_log_jn(lambda: &[f64], ell: &[f64], p: usize) -> Result<StiefelIntegralResult> {
    if lambda.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: lambda.len(),
        });
    }
    check_ell(ell, p)?;
    if let Some((index, &value)) = lambda.iter().enumerate().find(|(_, &l)| !(l > 0.0 && l.is_finite())) {
        return Err(Error::NonPositiveLambda { index, value });
    }
    let n = ell.len();
    let pf = p as f64;
    let ell_hat = |i: usize| if i < n { ell[i] } else { 0.0 };
    let mut v = -0.5 * (0..n).map(|i| ell[i] / lambda[i]).sum::<f64>();
    // Pairs with both indices past n have ℓ̂ᵢ = ℓ̂ⱼ and contribute ln 1.
    for i in 0..n {
        for j in (i + 1)..p {
            let arg = 1.0 + (lambda[i] - lambda[j]) / (lambda[i] * lambda[j]) * (ell[i] - ell_hat(j)) / pf;
            if !(arg > 0.0) {
                return Err(Error::LogDomainError { i, j, value: arg });
            }
            v -= 0.5 * arg.ln();
        }
    }
    Ok(StiefelIntegralResult {
        log_value: v,
        method: IntegralMethod::Approx,
        mc_samples: 0,
        mc_se: 0.0,
    })
}

/// Σ⁻¹ in the cheapest usable form.
enum Precision {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl Precision {
    fn new(sigma: &CovarianceEstimate) -> Result<Self> {
        let p = sigma.p();
        let singular = || Error::FactorizationFailure("covariance is singular".into());
        if !sigma.is_invertible() {
            return Err(singular());
        }
        let diag = sigma.frame().ncols() == 0
            || (sigma.frame().ncols() == p && sigma.frame() == &DMatrix::identity(p, p));
        if diag {
            let d = (0..p).map(|i| sigma.dense()[(i, i)].recip()).collect();
            return Ok(Precision::Diagonal(d));
        }
        Ok(Precision::Dense(sigma.inverse().ok_or_else(singular)?.dense().clone()))
    }

    /// `hᵀ Σ⁻¹ h` for column `a` of `h`.
    fn quad(&self, h: &DMatrix<f64>, a: usize) -> f64 {
        let col = h.column(a);
        match self {
            Precision::Diagonal(d) => col.iter().zip(d).map(|(x, w)| w * x * x).sum(),
            Precision::Dense(m) => col.dot(&(m * col)),
        }
    }
}

/// Mean and centered second moment of `e^{vⱼ − max}`, merged with the
/// pairwise update so a constant integrand has exactly zero spread.
#[derive(Debug, Clone, Copy)]
struct LogMoments {
    max: f64,
    mean: f64,
    m2: f64,
    count: usize,
}

impl LogMoments {
    fn from_values(v: &[f64]) -> Self {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let m2 = w.iter().map(|x| (x - mean).powi(2)).sum();
        Self {
            max,
            mean,
            m2,
            count: v.len(),
        }
    }

    fn merge(self, o: Self) -> Self {
        let max = self.max.max(o.max);
        let (a, b) = ((self.max - max).exp(), (o.max - max).exp());
        let (ma, mb) = (self.mean * a, o.mean * b);
        let (na, nb) = (self.count as f64, o.count as f64);
        let n = na + nb;
        let d = mb - ma;
        Self {
            max,
            mean: ma + d * nb / n,
            m2: self.m2 * a * a + o.m2 * b * b + d * d * na * nb / n,
            count: self.count + o.count,
        }
    }

    /// `ln mean` and its delta-method standard error.
    fn log_mean_se(&self) -> (f64, f64) {
        let m = self.count as f64;
        let var = self.m2 / (m - 1.0);
        (self.max + self.mean.ln(), (var / m).sqrt() / self.mean)
    }
}

/// Monte-Carlo estimate of `ln J_n` under the normalized Haar measure.
///
/// Frames are drawn in blocks of [`BLOCK`], block `b` from stream
/// `Stiefel`, index `b`, and combined in block order.
pub fn mc_log_jn(sigma: &CovarianceEstimate, ell: &[f64], samples: usize, seed: u64) -> Result<StiefelIntegralResult> {
    let p = sigma.p();
    check_ell(ell, p)?;
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let prec = Precision::new(sigma)?;
    let n = ell.len();
    let blocks = samples.div_ceil(BLOCK);
    let moments = par::try_map(blocks, |b| {
        let mut rng = seed::rng_for(seed, Stream::Stiefel, b as u64);
        let len = BLOCK.min(samples - b * BLOCK);
        let v: Vec<f64> = (0..len)
            .map(|_| {
                let h = stiefel_frame(p, n, &mut rng);
                -0.5 * (0..n).map(|a| ell[a] * prec.quad(&h, a)).sum::<f64>()
            })
            .collect();
        Ok(LogMoments::from_values(&v))
    })?;
    let total = moments.into_iter().reduce(LogMoments::merge).expect("at least one block");
    let (log_value, mc_se) = total.log_mean_se();
    Ok(StiefelIntegralResult {
        log_value,
        method: IntegralMethod::MonteCarlo,
        mc_samples: samples,
        mc_se,
    })
}

/// A population spectrum defined for every dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralProfile {
    /// `p` equally spaced values from `a` to `b`.
    Linspace(f64, f64),
    Constant(f64),
}

impl SpectralProfile {
    /// Eigenvalues at dimension `p`, sorted descending.
    pub fn eigenvalues(&self, p: usize) -> Vec<f64> {
        let mut v: Vec<f64> = match *self {
            SpectralProfile::Constant(c) => vec![c; p],
            SpectralProfile::Linspace(a, b) if p == 1 => vec![0.5 * (a + b)],
            SpectralProfile::Linspace(a, b) => (0..p).map(|i| a + (b - a) * i as f64 / (p - 1) as f64).collect(),
        };
        v.sort_by(|x, y| y.total_cmp(x));
        v
    }
}

impl FromStr for SpectralProfile {
    type Err = Error;

    /// `linspace:a:b` or `const:c`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("profile '{s}' is not linspace:a:b or const:c"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<f64>().ok().filter(|v| *v > 0.0 && v.is_finite()).ok_or_else(bad);
        match parts.as_slice() {
            ["linspace", a, b] => Ok(SpectralProfile::Linspace(num(a)?, num(b)?)),
            ["const", c] => Ok(SpectralProfile::Constant(num(c)?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SpectralProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralProfile::Linspace(a, b) => write!(f, "linspace:{a}:{b}"),
            SpectralProfile::Constant(c) => write!(f, "const:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub p: usize,
    pub n: usize,
    pub mc: f64,
    pub mc_iso: f64,
    pub approx: f64,
    pub approx_iso: f64,
    pub delta: f64,
    pub abs_delta: f64,
    pub mc_se: f64,
}

/// `Δ(p) = [mc(Σ_p) − mc(Σ_p^iso)] − [approx(λ_p) − approx(λ_p^iso)]` for
/// each `p`, where `Σ_p^iso` has every eigenvalue equal to the mean of
/// `λ_p`. The seed for dimension `p` is derived from stream `Outer`,
/// index `p`.
pub fn approximation_gap(
    profile: &SpectralProfile,
    ell: &[f64],
    p_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<GapRow>> {
    p_list
        .iter()
        .map(|&p| {
            let lambda = profile.eigenvalues(p);
            let mean = lambda.iter().sum::<f64>() / p as f64;
            let iso = vec![mean; p];
            let s = seed::derive(seed, Stream::Outer, p as u64);
            let mc = mc_log_jn(&CovarianceEstimate::diagonal(&lambda), ell, samples, s)?;
            let mc_iso = mc_log_jn(&CovarianceEstimate::scaled_identity(p, mean), ell, samples, s)?;
            let approx = approx_log_jn(&lambda, ell, p)?.log_value;
            let approx_iso = approx_log_jn(&iso, ell, p)?.log_value;
            let delta = (mc.log_value - mc_iso.log_value) - (approx - approx_iso);
            Ok(GapRow {
                p,
                n: ell.len(),
                mc: mc.log_value,
                mc_iso: mc_iso.log_value,
                approx,
                approx_iso,
                delta,
                abs_delta: delta.abs(),
                mc_se: mc.mc_se.hypot(mc_iso.mc_se),
            })
        })
        .collect()
}

/// Second-order terms of the τ-expansion of the orthogonal-group integral
/// `∫ etr(HXHᵀY) dH = e^{Σxᵢyᵢ} f(τ)`, `τᵢⱼ = (xᵢ−xⱼ)(yᵢ−yⱼ)`.
///
/// Edge pairs are classified by the graph they form: a doubled edge,
/// two edges sharing one vertex, or two disjoint edges; each unordered
/// pair of distinct edges is counted once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauSeries {
    pub f1: f64,
    pub f2: f64,
    /// `f₁` and `f₂` of the power series of `Π_{i<j}(1 + 2τᵢⱼ/p)^{-1/2}`.
    pub product_f1: f64,
    pub product_f2: f64,
}

/// `(Σ τ², Σ shared-vertex pairs, Σ disjoint pairs, Σ τ)`, in `O(p²)`.
///
/// With `dᵢ = Σⱼ τᵢⱼ`, pairs sharing a vertex sum to `½Σᵢ(dᵢ² − Σⱼτᵢⱼ²)`
/// and all distinct pairs to `½((Στ)² − Στ²)`.
fn tau_sums(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let p = x.len();
    let tau = |i: usize, j: usize| (x[i] - x[j]) * (y[i] - y[j]);
    let (mut sq, mut lin, mut star) = (0.0, 0.0, 0.0);
    for i in 0..p {
        let (mut d, mut d2) = (0.0, 0.0);
        for j in 0..p {
            if j != i {
                let t = tau(i, j);
                d += t;
                d2 += t * t;
                if j > i {
                    lin += t;
                    sq += t * t;
                }
            }
        }
        star += 0.5 * (d * d - d2);
    }
    let all_pairs = 0.5 * (lin * lin - sq);
    (sq, star, all_pairs - star, lin)
}

pub fn tau_series(x: &[f64], y: &[f64]) -> Result<TauSeries> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let p = x.len() as f64;
    let (sq, shared, disjoint, lin) = tau_sums(x, y);
    let f1 = -lin / p;
    let mut f2 = 1.5 / (p * (p + 2.0)) * sq + shared / (p * (p + 2.0));
    if x.len() > 1 {
        f2 += (p + 1.0) / ((p - 1.0) * p * (p + 2.0)) * disjoint;
    }
    Ok(TauSeries {
        f1,
        f2,
        product_f1: f1,
        product_f2: (1.5 * sq + shared + disjoint) / (p * p),
    })
}

/// `Π_{i<j}(1 + 2τᵢⱼ/p)^{-1/2}`.
pub fn product_form(x: &[f64], y: &[f64]) -> f64 {
    let p = x.len();
    let mut log = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            log -= 0.5 * (1.0 + 2.0 * (x[i] - x[j]) * (y[i] - y[j]) / p as f64).ln();
        }
    }
    log.exp()
}
