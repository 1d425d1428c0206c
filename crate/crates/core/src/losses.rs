//! Loss functions between a covariance estimate and a target, and PRIAL.
//!
//! `L(Σ̂, Σ)` for the nine kinds:
//!
//! | tag      | definition |
//! |----------|------------|
//! | st       | `tr(Σ̂Σ⁻¹ − I) − ln det(Σ̂Σ⁻¹)` |
//! | q        | `tr((Σ̂Σ⁻¹ − I)²)` |
//! | evl1     | `Σ|λ̂ᵢ − λᵢ|/p` |
//! | evl2     | `Σ(λ̂ᵢ − λᵢ)²/p` |
//! | frob     | `‖Σ̂ − Σ‖_F` |
//! | onenorm  | `maxᵢ Σⱼ |σ̂ᵢⱼ − σᵢⱼ|` |
//! | topev    | `|λ̂₁ − λ₁|` |
//! | lastev   | `|λ̂_p − λ_p|` |
//! | evs      | `Σ_{i=⌈3p/4⌉}^{p} |λ̂ᵢ − λᵢ|` |
//!
//! Eigenvalue losses compare the two spectra sorted in descending order.
//! `st` and `q` are evaluated through the eigenvalues `μ` of
//! `Σ^{-1/2} Σ̂ Σ^{-1/2}` as `Σ(μ − 1 − ln μ)` and `Σ(μ − 1)²`.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossKind {
    Stein,
    Quadratic,
    Evl1,
    Evl2,
    Frobenius,
    OneNorm,
    TopEv,
    LastEv,
    Evs,
}

impl LossKind {
    pub const ALL: [LossKind; 9] = [
        LossKind::Stein,
        LossKind::Quadratic,
        LossKind::Evl1,
        LossKind::Evl2,
        LossKind::Frobenius,
        LossKind::OneNorm,
        LossKind::TopEv,
        LossKind::LastEv,
        LossKind::Evs,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            LossKind::Stein => "st",
            LossKind::Quadratic => "q",
            LossKind::Evl1 => "evl1",
            LossKind::Evl2 => "evl2",
            LossKind::Frobenius => "frob",
            LossKind::OneNorm => "onenorm",
            LossKind::TopEv => "topev",
            LossKind::LastEv => "lastev",
            LossKind::Evs => "evs",
        }
    }

    /// Losses that invert their second argument.
    pub fn inverts_target(self) -> bool {
        matches!(self, LossKind::Stein | LossKind::Quadratic)
    }

    /// Parses a comma-separated list; `all` expands to every kind.
    pub fn parse_list(s: &str) -> Result<Vec<LossKind>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::ALL.to_vec());
        }
        s.split(',').map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.to_ascii_lowercase().as_str() {
            "st" | "stein" => LossKind::Stein,
            "q" | "quadratic" => LossKind::Quadratic,
            "evl1" => LossKind::Evl1,
            "evl2" => LossKind::Evl2,
            "frob" | "frobenius" => LossKind::Frobenius,
            "onenorm" => LossKind::OneNorm,
            "topev" => LossKind::TopEv,
            "lastev" => LossKind::LastEv,
            "evs" => LossKind::Evs,
            other => return Err(Error::Parse(format!("unknown loss '{other}'"))),
        };
        Ok(kind)
    }
}

impl Serialize for LossKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossReport {
    pub kind: LossKind,
    pub value: f64,
    /// The loss was computed as `L(Σ, Σ̂)`.
    pub inverted_roles: bool,
}

/// `L(est, truth)`.
pub fn loss(kind: LossKind, est: &CovarianceEstimate, truth: &CovarianceEstimate) -> Result<LossReport> {
    loss_with_roles(kind, est, truth, false)
}

/// `L(est, truth)`, or `L(truth, est)` when `inverted_roles` is set.
///
/// Errors name the matrices by role, not by argument position:
/// [`Error::SingularTruth`] when `truth` would need inverting and is
/// singular, [`Error::SingularEstimate`] in the symmetric case.
pub fn loss_with_roles(
    kind: LossKind,
    est: &CovarianceEstimate,
    truth: &CovarianceEstimate,
    inverted_roles: bool,
) -> Result<LossReport> {
    if est.p() != truth.p() {
        return Err(Error::DimensionMismatch {
            expected: truth.p(),
            got: est.p(),
        });
    }
    let (a, b) = if inverted_roles { (truth, est) } else { (est, truth) };
    let value = evaluate(kind, a, b).map_err(|side| match (side, inverted_roles) {
        (Side::Target, false) | (Side::Candidate, true) => Error::SingularTruth(kind.tag()),
        (Side::Candidate, false) | (Side::Target, true) => Error::SingularEstimate(kind.tag()),
    })?;
    Ok(LossReport {
        kind,
        value,
        inverted_roles,
    })
}

/// Which argument made the loss undefined.
#[derive(Debug, Clone, Copy)]
enum Side {
    Candidate,
    Target,
}

fn evaluate(kind: LossKind, a: &CovarianceEstimate, b: &CovarianceEstimate) -> std::result::Result<f64, Side> {
    let p = a.p();
    let v = match kind {
        LossKind::Stein => {
            if !a.is_invertible() {
                return Err(Side::Candidate);
            }
            relative_eigenvalues(a, b)?
                .into_iter()
                .map(|mu| {
                    let d = mu - 1.0;
                    (d - d.ln_1p()).max(0.0)
                })
                .sum()
        }
        LossKind::Quadratic => relative_eigenvalues(a, b)?
            .into_iter()
            .map(|mu| (mu - 1.0).powi(2))
            .sum(),
        LossKind::Frobenius => (a.dense() - b.dense()).norm(),
        LossKind::OneNorm => {
            let d = a.dense() - b.dense();
            d.row_iter()
                .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        }
        LossKind::Evl1 | LossKind::Evl2 | LossKind::TopEv | LossKind::LastEv | LossKind::Evs => {
            let (la, lb) = (a.eigenvalues(), b.eigenvalues());
            let diff = |i: usize| la[i] - lb[i];
            match kind {
                LossKind::Evl1 => (0..p).map(|i| diff(i).abs()).sum::<f64>() / p as f64,
                LossKind::Evl2 => (0..p).map(|i| diff(i).powi(2)).sum::<f64>() / p as f64,
                LossKind::TopEv => diff(0).abs(),
                LossKind::LastEv => diff(p - 1).abs(),
                _ => (quartile_start(p)..p).map(|i| diff(i).abs()).sum(),
            }
        }
    };
    Ok(v)
}

/// 0-based index of `⌈3p/4⌉` (1-based), where the smallest quartile starts.
pub fn quartile_start(p: usize) -> usize {
    (3 * p).div_ceil(4).max(1) - 1
}

/// Eigenvalues of `b^{-1/2} a b^{-1/2}`, i.e. of `a·b⁻¹`.
fn relative_eigenvalues(a: &CovarianceEstimate, b: &CovarianceEstimate) -> std::result::Result<Vec<f64>, Side> {
    let w = b.inv_sqrt_dense().ok_or(Side::Target)?;
    let c = w * a.dense() * w;
    let c = (&c + c.transpose()) * 0.5;
    Ok(c.symmetric_eigenvalues().iter().copied().collect())
}

/// Proportion reduction in integrated average loss of `cand` relative to
/// `reference`: `(Σ ref − Σ cand) / Σ ref`.
pub fn prial(reference: &[f64], cand: &[f64]) -> Result<f64> {
    if reference.len() != cand.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: cand.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("PRIAL of empty loss vectors".into()));
    }
    let r: f64 = reference.iter().sum();
    let c: f64 = cand.iter().sum();
    if r == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((r - c) / r)
}
