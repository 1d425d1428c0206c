//! Eigenvalue estimators and the adjusted log-likelihood.
//!
//! Sample roots `ℓ₁ > … > ℓ_q > 0` of a rank-`q` matrix `S` in dimension `p`
//! give three eigenvalue vectors of length `p`:
//!
//! * `λ⁰`, all entries `Σℓ / (pq)`, an exact critical point of the adjusted
//!   log-likelihood;
//! * `λ¹`, with `λ¹_a = ℓ_a/q − (1/q) Σ_b (ℓ_a − ℓ_b) / (p + q(1/ℓ_b − 1/ℓ_a)(ℓ_a − ℓ_b))`
//!   for `a ≤ q` and zero beyond, an approximate critical point to first
//!   order in `1/p`;
//! * `λ^κ = κλ¹ + (1 − κ)λ⁰` for `0 ≤ κ < 1`, the proposed estimate.
//!
//! For `κ ∈ [0, 1)` the mixture is strictly decreasing over the first `q`
//! entries, constant and positive over the rest, and satisfies the trace
//! condition `q·Σλ = Σℓ`.

use serde::Serialize;

use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::spectra::SampleSpectrum;

/// Eigenvalue estimates of length `p` plus the mixing weight that produced them.
///
/// `kappa = 1` marks the `λ¹` endpoint (and its non-singular extension),
/// which is never a valid mixing weight itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkageSpectrum {
    pub kappa: f64,
    pub q: usize,
    pub p: usize,
    pub lambda_hat: Vec<f64>,
    #[serde(skip)]
    pub trace_s: f64,
}

impl ShrinkageSpectrum {
    /// `q·Σλ̂`, which equals `trace_s` for every estimate except `λ¹_NS`.
    pub fn scaled_sum(&self) -> f64 {
        self.q as f64 * self.lambda_hat.iter().sum::<f64>()
    }

    /// The common value of the trailing `p − q` entries, if there are any.
    pub fn tail(&self) -> Option<f64> {
        self.lambda_hat.get(self.q).copied()
    }
}

fn lambda_zero_value(spec: &SampleSpectrum) -> f64 {
    spec.trace() / (spec.p() as f64 * spec.q() as f64)
}

/// The isotropic estimate `Σℓ/(pq)` in every coordinate.
pub fn lambda_zero(spec: &SampleSpectrum) -> ShrinkageSpectrum {
    ShrinkageSpectrum {
        kappa: 0.0,
        q: spec.q(),
        p: spec.p(),
        lambda_hat: vec![lambda_zero_value(spec); spec.p()],
        trace_s: spec.trace(),
    }
}

fn lambda_one_lead(spec: &SampleSpectrum) -> Vec<f64> {
    let ell = spec.ell();
    let p = spec.p() as f64;
    let q = spec.q() as f64;
    ell.iter()
        .enumerate()
        .map(|(a, &la)| {
            let correction: f64 = ell
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(_, &lb)| (la - lb) / (p + q * (1.0 / lb - 1.0 / la) * (la - lb)))
                .sum();
            (la - correction) / q
        })
        .collect()
}

/// The approximate critical point `λ¹`; entries past `q` are zero.
pub fn lambda_one(spec: &SampleSpectrum) -> ShrinkageSpectrum {
    let mut lambda_hat = lambda_one_lead(spec);
    lambda_hat.resize(spec.p(), 0.0);
    ShrinkageSpectrum {
        kappa: 1.0,
        q: spec.q(),
        p: spec.p(),
        lambda_hat,
        trace_s: spec.trace(),
    }
}

/// `λ¹` with its zero entries replaced by `λ¹_q`; invertible, and it does
/// not satisfy the trace condition.
pub fn lambda_one_ns(spec: &SampleSpectrum) -> ShrinkageSpectrum {
    let mut lambda_hat = lambda_one_lead(spec);
    let last = *lambda_hat.last().expect("spectrum has q >= 1");
    lambda_hat.resize(spec.p(), last);
    ShrinkageSpectrum {
        kappa: 1.0,
        q: spec.q(),
        p: spec.p(),
        lambda_hat,
        trace_s: spec.trace(),
    }
}

pub fn check_kappa(kappa: f64) -> Result<()> {
    if (0.0..1.0).contains(&kappa) {
        Ok(())
    } else {
        Err(Error::KappaOutOfRange(kappa))
    }
}

/// `κλ¹ + (1 − κ)λ⁰` entrywise.
pub fn lambda_kappa(spec: &SampleSpectrum, kappa: f64) -> Result<ShrinkageSpectrum> {
    check_kappa(kappa)?;
    let base = (1.0 - kappa) * lambda_zero_value(spec);
    let mut lambda_hat: Vec<f64> = lambda_one_lead(spec)
        .into_iter()
        .map(|l1| kappa * l1 + base)
        .collect();
    lambda_hat.resize(spec.p(), base);
    Ok(ShrinkageSpectrum {
        kappa,
        q: spec.q(),
        p: spec.p(),
        lambda_hat,
        trace_s: spec.trace(),
    })
}

/// `Σ̂ = H₁·diag(λ̂₁…λ̂_q)·H₁ᵀ + λ̂_{q+1}·(I − H₁H₁ᵀ)`.
pub fn assemble(spec: &SampleSpectrum, lam: &ShrinkageSpectrum) -> Result<CovarianceEstimate> {
    if lam.p != spec.p() || lam.lambda_hat.len() != spec.p() {
        return Err(Error::DimensionMismatch {
            expected: spec.p(),
            got: lam.lambda_hat.len(),
        });
    }
    if lam.q != spec.q() {
        return Err(Error::DimensionMismatch {
            expected: spec.q(),
            got: lam.q,
        });
    }
    let q = spec.q();
    let tail = lam.tail().unwrap_or(0.0);
    CovarianceEstimate::from_factors(spec.frame().clone(), lam.lambda_hat[..q].to_vec(), tail)
}

/// The usual sample covariance `S/n`, singular whenever `q < p`.
pub fn sample_covariance(spec: &SampleSpectrum) -> Result<CovarianceEstimate> {
    let n = spec.rows() as f64;
    CovarianceEstimate::from_factors(
        spec.frame().clone(),
        spec.ell().iter().map(|l| l / n).collect(),
        0.0,
    )
}

/// Pairwise argument `1 + (1/p)·((λ_a − λ_b)/(λ_a λ_b))·(ℓ̂_a − ℓ̂_b)` of the
/// eigenvector-integral correction.
#[inline]
fn pair_arg(p: f64, la: f64, lb: f64, ella: f64, ellb: f64) -> f64 {
    1.0 + (la - lb) / (la * lb) * (ella - ellb) / p
}

fn check_lambda(lambda: &[f64], spec: &SampleSpectrum, allow_zero_tail: bool) -> Result<()> {
    if lambda.len() != spec.p() {
        return Err(Error::DimensionMismatch {
            expected: spec.p(),
            got: lambda.len(),
        });
    }
    for (i, &v) in lambda.iter().enumerate() {
        let ok = if allow_zero_tail && i >= spec.q() {
            v >= 0.0
        } else {
            v > 0.0
        };
        if !ok || !v.is_finite() {
            return Err(Error::NonPositiveLambda { index: i, value: v });
        }
    }
    Ok(())
}

/// Adjusted log-likelihood of the population eigenvalues:
///
/// `−(q/2)Σᵢ ln λᵢ − ½Σ_a ℓ_a/λ_a − ½Σ_{a<b≤q} ln(1 + (1/p)((λ_a−λ_b)/(λ_aλ_b))(ℓ_a−ℓ_b))
///  − ½Σ_{a≤q<r≤p} ln(1 + (1/p)((λ_a−λ_r)/(λ_aλ_r))ℓ_a)`.
pub fn adjusted_loglik(lambda: &[f64], spec: &SampleSpectrum) -> Result<f64> {
    check_lambda(lambda, spec, false)?;
    let ell = spec.ell();
    let (p, q) = (spec.p(), spec.q());
    let pf = p as f64;

    let mut value = -0.5 * q as f64 * lambda.iter().map(|l| l.ln()).sum::<f64>();
    value -= 0.5 * ell.iter().zip(lambda).map(|(l, lam)| l / lam).sum::<f64>();
    for a in 0..q {
        for b in (a + 1)..q {
            let arg = pair_arg(pf, lambda[a], lambda[b], ell[a], ell[b]);
            if !(arg > 0.0) {
                return Err(Error::LogDomainError { i: a, j: b, value: arg });
            }
            value -= 0.5 * arg.ln();
        }
        for r in q..p {
            let arg = pair_arg(pf, lambda[a], lambda[r], ell[a], 0.0);
            if !(arg > 0.0) {
                return Err(Error::LogDomainError { i: a, j: r, value: arg });
            }
            value -= 0.5 * arg.ln();
        }
    }
    Ok(value)
}

/// Residuals `q·λᵢ − RHSᵢ` of the critical-point equations
///
/// `q λᵢ = ℓ̂ᵢ − (1/p)Σ_{b≤q} (ℓ̂ᵢ−ℓ_b)/(1 + (1/p)((λᵢ−λ_b)/(λᵢλ_b))(ℓ̂ᵢ−ℓ_b))
///         − (ℓ̂ᵢ/p)Σ_{r>q} 1/(1 + (1/p)((λᵢ−λ_r)/(λᵢλ_r))ℓ̂ᵢ)`
///
/// with `ℓ̂ᵢ = 0` for `i > q`. Up to the factor `−2λᵢ²` this is the gradient
/// of [`adjusted_loglik`].
///
/// Trailing entries (`i > q`) may be exactly zero, as in `λ¹`; every term
/// involving such an entry is replaced by its `λ → 0⁺` limit, which is zero.
pub fn mle_residual(lambda: &[f64], spec: &SampleSpectrum) -> Result<Vec<f64>> {
    check_lambda(lambda, spec, true)?;
    let ell = spec.ell();
    let (p, q) = (spec.p(), spec.q());
    let pf = p as f64;
    let ell_hat = |i: usize| if i < q { ell[i] } else { 0.0 };

    let mut out = Vec::with_capacity(p);
    for i in 0..p {
        let li = lambda[i];
        if li == 0.0 {
            out.push(0.0);
            continue;
        }
        let ei = ell_hat(i);
        let mut rhs = ei;
        for b in 0..q {
            if b == i {
                continue;
            }
            let arg = pair_arg(pf, li, lambda[b], ei, ell[b]);
            if !(arg > 0.0) {
                return Err(Error::LogDomainError { i, j: b, value: arg });
            }
            rhs -= (ei - ell[b]) / arg / pf;
        }
        if i < q {
            let mut s = 0.0;
            for r in q..p {
                if lambda[r] == 0.0 {
                    continue;
                }
                let arg = pair_arg(pf, li, lambda[r], ei, 0.0);
                if !(arg > 0.0) {
                    return Err(Error::LogDomainError { i, j: r, value: arg });
                }
                s += 1.0 / arg;
            }
            rhs -= ei / pf * s;
        }
        out.push(q as f64 * li - rhs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::haar_orthogonal;
    use crate::seed;
    use crate::spectra::{decompose, DataMatrix, DEFAULT_RANK_TOL};
    use crate::testutil::{gaussian_matrix, random_spectrum};
    use nalgebra::{DMatrix, DVector};

    fn spec(p: usize, ell: &[f64]) -> SampleSpectrum {
        SampleSpectrum::from_eigenvalues(p, ell.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn lambda_zero_examples() {
        let l = lambda_zero(&spec(5, &[4.0, 1.0]));
        close(&l.lambda_hat, &[0.5; 5], 0.0);
        assert_eq!(l.kappa, 0.0);
        // Σℓ = p·q gives unit entries.
        let l = lambda_zero(&spec(4, &[4.0]));
        close(&l.lambda_hat, &[1.0; 4], 0.0);
        let s = spec(7, &[9.0, 2.5, 0.25]);
        let l = lambda_zero(&s);
        assert!((3.0 * 7.0 * l.lambda_hat[0] - s.trace()).abs() < 1e-14);
    }

    #[test]
    fn lambda_one_examples() {
        assert_eq!(lambda_one(&spec(6, &[2.5])).lambda_hat[0], 2.5);
        // By hand: the b-correction for ell = (4, 1), p = 5, q = 2 is 3/9.5.
        let l = lambda_one(&spec(5, &[4.0, 1.0]));
        close(&l.lambda_hat, &[35.0 / 19.0, 25.0 / 38.0, 0.0, 0.0, 0.0], 1e-15);
        assert!((l.scaled_sum() - 5.0).abs() < 1e-14);

        let s = spec(50, &[9.0, 4.0, 1.0]);
        let l = lambda_one(&s);
        assert!(l.lambda_hat[0] > l.lambda_hat[1] && l.lambda_hat[1] > l.lambda_hat[2]);
        assert!(l.lambda_hat[2] > 0.0);
        assert!((l.scaled_sum() - 14.0).abs() < 1e-12 * 14.0);
    }

    #[test]
    fn lambda_kappa_examples() {
        let s = spec(5, &[4.0, 1.0]);
        close(&lambda_kappa(&s, 0.0).unwrap().lambda_hat, &[0.5; 5], 0.0);
        let l = lambda_kappa(&s, 0.5).unwrap();
        close(
            &l.lambda_hat,
            &[35.0 / 38.0 + 0.25, 25.0 / 76.0 + 0.25, 0.25, 0.25, 0.25],
            1e-15,
        );
        assert!((l.scaled_sum() - 5.0).abs() < 1e-14);

        let l = lambda_kappa(&spec(10, &[10.0]), 0.999).unwrap();
        assert!((l.lambda_hat[0] - 9.991).abs() < 1e-12);
        for v in &l.lambda_hat[1..] {
            assert!((v - 0.001).abs() < 1e-12);
        }
        assert!(matches!(lambda_kappa(&s, 1.0), Err(Error::KappaOutOfRange(_))));
        assert!(matches!(lambda_kappa(&s, -0.1), Err(Error::KappaOutOfRange(_))));
    }

    #[test]
    fn lambda_one_ns_examples() {
        let l = lambda_one_ns(&spec(5, &[4.0, 1.0]));
        let small = 25.0 / 38.0;
        close(&l.lambda_hat, &[35.0 / 19.0, small, small, small, small], 1e-15);
        close(&lambda_one_ns(&spec(4, &[3.0])).lambda_hat, &[3.0; 4], 0.0);
        let s = spec(20, &[8.0, 3.0, 2.0]);
        let l = lambda_one_ns(&s);
        let min = l.lambda_hat.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(min, l.lambda_hat[2]);
    }

    #[test]
    fn mixture_is_affine() {
        let mut rng = seed::rng(3);
        for _ in 0..50 {
            let s = random_spectrum(&mut rng, 8, 60);
            let one = lambda_one(&s);
            let zero = lambda_zero(&s);
            for kappa in [0.1, 0.37, 0.8] {
                let k = lambda_kappa(&s, kappa).unwrap();
                for i in 0..s.p() {
                    let mix = kappa * one.lambda_hat[i] + (1.0 - kappa) * zero.lambda_hat[i];
                    assert!((k.lambda_hat[i] - mix).abs() <= 4.0 * f64::EPSILON * mix.abs());
                }
            }
        }
    }

    #[test]
    fn assemble_examples() {
        let s = spec(4, &[3.0, 1.0]);
        let lam = ShrinkageSpectrum {
            kappa: 0.0,
            q: 2,
            p: 4,
            lambda_hat: vec![0.7; 4],
            trace_s: 4.0,
        };
        let c = assemble(&s, &lam).unwrap();
        assert!((c.dense() - DMatrix::identity(4, 4) * 0.7).amax() < 1e-15);

        let x = DataMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0]]).unwrap();
        let s = decompose(&x, DEFAULT_RANK_TOL).unwrap();
        let lam = lambda_kappa(&s, 0.5).unwrap();
        let (a, b, c3) = (lam.lambda_hat[0], lam.lambda_hat[1], lam.lambda_hat[2]);
        let est = assemble(&s, &lam).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![b, a, c3]));
        assert!((est.dense() - expect).amax() < 1e-14);

        let bad = lambda_zero(&spec(5, &[4.0, 1.0]));
        assert!(matches!(assemble(&s, &bad), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn assemble_round_trip_eigenvalues() {
        let x = DataMatrix::new(gaussian_matrix(6, 15, 8)).unwrap();
        let s = decompose(&x, DEFAULT_RANK_TOL).unwrap();
        let lam = lambda_kappa(&s, 0.6).unwrap();
        let est = assemble(&s, &lam).unwrap();
        let mut ev: Vec<f64> = est.dense().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ev.iter().zip(&lam.lambda_hat) {
            assert!((a - b).abs() < 1e-9 * lam.lambda_hat[0]);
        }
    }

    #[test]
    fn completion_is_immaterial() {
        // Any orthonormal completion of the frame yields the same matrix.
        let x = DataMatrix::new(gaussian_matrix(3, 7, 9)).unwrap();
        let s = decompose(&x, DEFAULT_RANK_TOL).unwrap();
        let lam = lambda_kappa(&s, 0.4).unwrap();
        let est = assemble(&s, &lam).unwrap();
        let h1 = s.frame();
        let proj = DMatrix::identity(7, 7) - h1 * h1.transpose();
        let mut rng = seed::rng(10);
        let g = haar_orthogonal(7, &mut rng);
        let mut h2 = &proj * g;
        // Orthonormal basis of the complement from the projected columns.
        let svd = h2.clone().svd(true, false);
        h2 = svd.u.unwrap().columns(0, 4).into_owned();
        let mut full = DMatrix::zeros(7, 7);
        full.columns_mut(0, 3).copy_from(h1);
        full.columns_mut(3, 4).copy_from(&h2);
        let alt = &full * DMatrix::from_diagonal(&DVector::from_vec(lam.lambda_hat.clone())) * full.transpose();
        assert!((alt - est.dense()).norm() < 1e-10 * est.dense().norm());
    }

    #[test]
    fn loglik_examples() {
        let s = spec(2, &[1.0]);
        assert!((adjusted_loglik(&[1.0, 1.0], &s).unwrap() + 0.5).abs() < 1e-15);

        // With equal λ = c the cross terms vanish: L = −(qp/2) ln c − pq/2.
        let s = spec(9, &[7.0, 3.0, 0.5]);
        let c = s.trace() / 27.0;
        let expect = -(27.0 / 2.0) * c.ln() - 27.0 / 2.0;
        let got = adjusted_loglik(&lambda_zero(&s).lambda_hat, &s).unwrap();
        assert!((got - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn loglik_leading_entry_leaves_domain_before_zero() {
        // arg(a, r) = 1 + (1/p)(1/λ_r − 1/λ_a)ℓ_a turns negative as λ_a → 0⁺.
        let s = spec(12, &[6.0, 2.0]);
        let base = lambda_kappa(&s, 0.3).unwrap().lambda_hat;
        for i in 0..s.q() {
            let mut lam = base.clone();
            let hit = [1e-1, 1e-2, 1e-3, 1e-4].iter().any(|&scale| {
                lam[i] = base[i] * scale;
                matches!(adjusted_loglik(&lam, &s), Err(Error::LogDomainError { .. }))
            });
            assert!(hit, "i={i}");
        }
    }

    #[test]
    fn loglik_tail_entry_has_finite_limit() {
        // For r > q the −(q/2)ln λ_r term cancels against the r-pair logs.
        let s = spec(12, &[6.0, 2.0]);
        let mut lam = lambda_kappa(&s, 0.3).unwrap().lambda_hat;
        let mut values = Vec::new();
        for scale in [1e-6, 1e-8, 1e-10] {
            lam[7] = scale;
            values.push(adjusted_loglik(&lam, &s).unwrap());
        }
        assert!((values[1] - values[2]).abs() < 1e-6);
        assert!((values[0] - values[1]).abs() < 1e-4);
    }

    #[test]
    fn loglik_domain_errors() {
        let s = spec(3, &[2.0]);
        assert!(matches!(
            adjusted_loglik(&[1.0, 0.0, 1.0], &s),
            Err(Error::NonPositiveLambda { index: 1, .. })
        ));
        // (λ₁ − λ₂)/(λ₁λ₂)·ℓ/p = −(1/1e-3 − 1)·2/3 < −1.
        assert!(matches!(
            adjusted_loglik(&[1e-3, 1.0, 1.0], &s),
            Err(Error::LogDomainError { .. })
        ));
        assert!(matches!(
            adjusted_loglik(&[1.0, 1.0], &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn residual_vanishes_at_lambda_zero() {
        let s = spec(30, &[12.0, 5.0, 2.0, 0.3]);
        let r = mle_residual(&lambda_zero(&s).lambda_hat, &s).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn residual_nonzero_after_perturbation() {
        let s = spec(30, &[12.0, 5.0, 2.0]);
        let mut lam = lambda_zero(&s).lambda_hat;
        lam[1] *= 1.1;
        let r = mle_residual(&lam, &s).unwrap();
        assert!(r.iter().map(|v| v.abs()).fold(0.0, f64::max) > 1e-3);
    }

    #[test]
    fn residual_is_scaled_gradient() {
        // Central differences oracle: residualᵢ = −2λᵢ² ∂L/∂λᵢ.
        let s = spec(7, &[5.0, 2.0, 1.0]);
        let lam = vec![1.9, 0.9, 0.4, 0.3, 0.25, 0.2, 0.15];
        let r = mle_residual(&lam, &s).unwrap();
        for i in 0..lam.len() {
            let h = 1e-6 * lam[i];
            let mut up = lam.clone();
            up[i] += h;
            let mut dn = lam.clone();
            dn[i] -= h;
            let g = (adjusted_loglik(&up, &s).unwrap() - adjusted_loglik(&dn, &s).unwrap()) / (2.0 * h);
            let fd = -2.0 * lam[i] * lam[i] * g;
            assert!((fd - r[i]).abs() < 1e-6 * (1.0 + r[i].abs()), "i={i}: {fd} vs {}", r[i]);
        }
    }

    #[test]
    fn residual_at_lambda_one_shrinks_with_p() {
        let max_res = |p: usize| {
            let s = spec(p, &[4.0, 1.0]);
            mle_residual(&lambda_one(&s).lambda_hat, &s)
                .unwrap()
                .iter()
                .map(|v| v.abs())
                .fold(0.0, f64::max)
        };
        let (r100, r1000) = (max_res(100), max_res(1000));
        assert!(r100 > 0.0);
        assert!(r1000 < 0.1 * r100, "{r100} {r1000}");
    }
}
