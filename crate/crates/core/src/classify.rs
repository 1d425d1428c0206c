//! Two-class linear discriminant analysis with a shrinkage plug-in for the
//! common covariance.
//!
//! The pooled covariance is estimated from the stacked class-centered
//! training rows, whose rank is at most `n₀ + n₁ − 2`. A test point `x` is
//! assigned to class 1 when
//!
//! `xᵀΣ̂⁻¹(μ₁ − μ₀) − ½(μ₁ + μ₀)ᵀΣ̂⁻¹(μ₁ − μ₀) + ln π₁ − ln π₀ > 0`
//!
//! and to class 0 otherwise, ties included.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::seed::{self, Stream};
use crate::selection::{bootstrap_select, cv_select, Folds, KappaGrid};
use crate::shrinkage::{assemble, check_kappa, lambda_kappa};
use crate::simbench::{sample_gaussian, ReferenceSpec};
use crate::spectra::{decompose, DataMatrix, DEFAULT_RANK_TOL};

/// How κ is chosen for the pooled covariance.
#[derive(Debug, Clone, PartialEq)]
pub enum PluginSpec {
    Fixed(f64),
    Boot {
        loss: LossKind,
        reference: ReferenceSpec,
        replicates: usize,
        grid: KappaGrid,
        invert_roles: bool,
    },
    Cv {
        loss: LossKind,
        folds: Folds,
        grid: KappaGrid,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Priors {
    /// Class proportions in the training data.
    Proportions,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub mu0: DVector<f64>,
    pub mu1: DVector<f64>,
    pub pooled: CovarianceEstimate,
    pub log_prior0: f64,
    pub log_prior1: f64,
    pub kappa: f64,
    /// Rank of the pooled residual matrix.
    pub rank: usize,
    /// `Σ̂⁻¹(μ₁ − μ₀)`.
    direction: DVector<f64>,
    offset: f64,
}

impl LdaModel {
    pub fn p(&self) -> usize {
        self.mu0.len()
    }

    /// The discriminant score; positive means class 1.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.direction) - self.offset + self.log_prior1 - self.log_prior0
    }
}

fn centered(x: &DataMatrix, mu: &DVector<f64>) -> DMatrix<f64> {
    let mut r = x.values().clone();
    for mut row in r.row_iter_mut() {
        row -= mu.transpose();
    }
    r
}

/// Fits the classifier. `seed` drives any κ selection.
pub fn fit_lda(x0: &DataMatrix, x1: &DataMatrix, plugin: &PluginSpec, priors: Priors, seed: u64) -> Result<LdaModel> {
    let p = x0.cols();
    if x1.cols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: x1.cols(),
        });
    }
    let (mu0, mu1) = (x0.mean(), x1.mean());
    let (n0, n1) = (x0.rows(), x1.rows());
    let mut resid = DMatrix::zeros(n0 + n1, p);
    resid.rows_mut(0, n0).copy_from(&centered(x0, &mu0));
    resid.rows_mut(n0, n1).copy_from(&centered(x1, &mu1));
    let resid = DataMatrix::new(resid)?;
    let spec = decompose(&resid, DEFAULT_RANK_TOL)?;

    let kappa = match plugin {
        PluginSpec::Fixed(k) => {
            if *k == 1.0 {
                return Err(Error::NonInvertiblePlugin(*k));
            }
            check_kappa(*k)?;
            *k
        }
        PluginSpec::Boot {
            loss,
            reference,
            replicates,
            grid,
            invert_roles,
        } => {
            let r = reference.build(&resid)?;
            let s = seed::derive(seed, Stream::Estimator, 0);
            bootstrap_select(&resid, *loss, &r, *replicates, grid, s, *invert_roles)?.kappa_hat()
        }
        PluginSpec::Cv { loss, folds, grid } => {
            cv_select(&resid, *loss, *folds, grid, seed::derive(seed, Stream::Estimator, 0))?.kappa_hat()
        }
    };
    let pooled = assemble(&spec, &lambda_kappa(&spec, kappa)?)?;
    let diff = &mu1 - &mu0;
    let direction = pooled.solve(&diff).ok_or(Error::NonInvertiblePlugin(kappa))?;
    let offset = 0.5 * (&mu1 + &mu0).dot(&direction);
    let (log_prior0, log_prior1) = match priors {
        Priors::Uniform => (0.5f64.ln(), 0.5f64.ln()),
        Priors::Proportions => {
            let n = (n0 + n1) as f64;
            ((n0 as f64 / n).ln(), (n1 as f64 / n).ln())
        }
    };
    Ok(LdaModel {
        mu0,
        mu1,
        pooled,
        log_prior0,
        log_prior1,
        kappa,
        rank: spec.q(),
        direction,
        offset,
    })
}

/// Predicted labels (0 or 1), one per row.
pub fn predict(model: &LdaModel, x: &DataMatrix) -> Result<Vec<u8>> {
    if x.cols() != model.p() {
        return Err(Error::DimensionMismatch {
            expected: model.p(),
            got: x.cols(),
        });
    }
    Ok((0..x.rows()).map(|i| u8::from(model.score(&x.row(i)) > 0.0)).collect())
}

/// Confusion counts with class 1 as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub mcr: f64,
    /// `tp / (tp + fn)`; `None` without positive test cases.
    pub sens: Option<f64>,
    /// `tn / (tn + fp)`; `None` without negative test cases.
    pub spec: Option<f64>,
    pub confusion: Confusion,
    pub n: usize,
}

impl ClassificationReport {
    pub fn from_labels(predicted: &[u8], truth: &[u8]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        if predicted.is_empty() {
            return Err(Error::InvalidArgument("no test cases".into()));
        }
        if let Some(&bad) = truth.iter().chain(predicted).find(|&&l| l > 1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not 0 or 1")));
        }
        let mut c = Confusion { tp: 0, tn: 0, fp: 0, fn_: 0 };
        for (&y, &t) in predicted.iter().zip(truth) {
            match (y, t) {
                (1, 1) => c.tp += 1,
                (0, 0) => c.tn += 1,
                (1, 0) => c.fp += 1,
                _ => c.fn_ += 1,
            }
        }
        let n = truth.len();
        let ratio = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);
        Ok(Self {
            mcr: (c.fp + c.fn_) as f64 / n as f64,
            sens: ratio(c.tp, c.fn_),
            spec: ratio(c.tn, c.fp),
            confusion: c,
            n,
        })
    }
}

pub fn evaluate(model: &LdaModel, x: &DataMatrix, labels: &[u8]) -> Result<ClassificationReport> {
    ClassificationReport::from_labels(&predict(model, x)?, labels)
}

/// Shapes of a classification study: a training pool, a small training
/// subsample with the same class ratio, and a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoClassTemplate {
    pub p: usize,
    pub train_pos: usize,
    pub train_neg: usize,
    pub test_pos: usize,
    pub test_neg: usize,
    pub sub_pos: usize,
    pub sub_neg: usize,
    /// Mahalanobis distance between the class means.
    pub separation: f64,
}

impl TwoClassTemplate {
    /// 31 variables; 82 training cases, 51 test cases (13 positive) and a
    /// 20-case training subsample (5 positive).
    pub const BREAST_CANCER_SHAPE: TwoClassTemplate = TwoClassTemplate {
        p: 31,
        train_pos: 21,
        train_neg: 61,
        test_pos: 13,
        test_neg: 38,
        sub_pos: 5,
        sub_neg: 15,
        separation: 2.5,
    };
}

#[derive(Debug, Clone)]
pub struct TwoClassData {
    /// Subsampled training rows of each class.
    pub train0: DataMatrix,
    pub train1: DataMatrix,
    pub test: DataMatrix,
    pub labels: Vec<u8>,
}

/// Simulates the template with an AR(1) correlation `0.25·0.7^{|i−j|}` off
/// the unit diagonal, class 0 centered at zero and class 1 shifted along
/// the all-ones direction.
pub fn simulate_template(t: &TwoClassTemplate, seed: u64) -> Result<TwoClassData> {
    if t.sub_pos > t.train_pos || t.sub_neg > t.train_neg {
        return Err(Error::InvalidArgument("subsample exceeds the training pool".into()));
    }
    let p = t.p;
    let corr = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { 0.25 * 0.7f64.powi(i.abs_diff(j) as i32) });
    let sigma = CovarianceEstimate::from_dense(corr)?;
    let dir = DVector::from_element(p, 1.0);
    let scale = t.separation / sigma.inv_quad_form(&dir).expect("correlation is SPD").sqrt();
    let shift = dir * scale;
    let draw = |n: usize, idx: u64, shifted: bool| -> Result<DMatrix<f64>> {
        if n == 0 {
            return Ok(DMatrix::zeros(0, p));
        }
        let mut m = sample_gaussian(&sigma, n, seed::derive(seed, Stream::Data, idx))?.into_values();
        if shifted {
            for mut row in m.row_iter_mut() {
                row += shift.transpose();
            }
        }
        Ok(m)
    };
    // The subsample is the first rows of each training pool.
    let pool0 = draw(t.train_neg, 0, false)?;
    let pool1 = draw(t.train_pos, 1, true)?;
    let test0 = draw(t.test_neg, 2, false)?;
    let test1 = draw(t.test_pos, 3, true)?;
    let mut test = DMatrix::zeros(t.test_neg + t.test_pos, p);
    test.rows_mut(0, t.test_neg).copy_from(&test0);
    test.rows_mut(t.test_neg, t.test_pos).copy_from(&test1);
    let mut labels = vec![0u8; t.test_neg];
    labels.resize(t.test_neg + t.test_pos, 1);
    Ok(TwoClassData {
        train0: DataMatrix::new(pool0.rows(0, t.sub_neg).into_owned())?,
        train1: DataMatrix::new(pool1.rows(0, t.sub_pos).into_owned())?,
        test: DataMatrix::new(test)?,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::haar_orthogonal;
    use crate::testutil::gaussian_matrix;

    fn jittered(rows: usize, at: &[f64], seed: u64) -> DataMatrix {
        let j = gaussian_matrix(rows, at.len(), seed) * 1e-3;
        DataMatrix::new(DMatrix::from_fn(rows, at.len(), |i, k| at[k] + j[(i, k)])).unwrap()
    }

    #[test]
    fn recovers_means() {
        let x0 = jittered(6, &[0.0, 0.0], 1);
        let x1 = jittered(5, &[1.0, 1.0], 2);
        let m = fit_lda(&x0, &x1, &PluginSpec::Fixed(0.5), Priors::Proportions, 0).unwrap();
        assert!((m.mu0.amax()) < 1e-2);
        assert!((&m.mu1 - DVector::from_element(2, 1.0)).amax() < 1e-2);
        assert!((m.log_prior0.exp() + m.log_prior1.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_zero_is_nearest_centroid() {
        let x0 = DataMatrix::new(gaussian_matrix(8, 12, 3)).unwrap();
        let x1 = DataMatrix::new(gaussian_matrix(8, 12, 4).add_scalar(0.8)).unwrap();
        let m = fit_lda(&x0, &x1, &PluginSpec::Fixed(0.0), Priors::Uniform, 0).unwrap();
        let d = m.pooled.dense();
        let c = d[(0, 0)];
        assert!((d - DMatrix::identity(12, 12) * c).amax() < 1e-12);
        let test = DataMatrix::new(gaussian_matrix(40, 12, 5).add_scalar(0.4)).unwrap();
        let labels = predict(&m, &test).unwrap();
        for (i, &l) in labels.iter().enumerate() {
            let x = test.row(i);
            let closer1 = (&x - &m.mu1).norm() < (&x - &m.mu0).norm();
            assert_eq!(l == 1, closer1);
        }
    }

    #[test]
    fn breast_cancer_shape_rank() {
        let d = simulate_template(&TwoClassTemplate::BREAST_CANCER_SHAPE, 7).unwrap();
        assert_eq!((d.train0.rows(), d.train1.rows(), d.test.rows()), (15, 5, 51));
        assert_eq!(d.labels.iter().filter(|&&l| l == 1).count(), 13);
        let m = fit_lda(&d.train0, &d.train1, &PluginSpec::Fixed(0.5), Priors::Proportions, 0).unwrap();
        assert_eq!(m.rank, 18);
        let r = evaluate(&m, &d.test, &d.labels).unwrap();
        assert_eq!(r.n, 51);
        assert!(r.mcr < 0.5);
    }

    #[test]
    fn discriminant_sign_and_ties() {
        let x0 = DataMatrix::from_rows(&[vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let x1 = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let m = fit_lda(&x0, &x1, &PluginSpec::Fixed(0.0), Priors::Uniform, 0).unwrap();
        let t = DataMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.0], vec![0.0, 7.0], vec![-0.1, 0.0]]).unwrap();
        assert_eq!(predict(&m, &t).unwrap(), vec![1, 0, 0, 0]);
    }

    #[test]
    fn well_separated_classes() {
        let p = 10;
        let sigma = CovarianceEstimate::scaled_identity(p, 1.0);
        let shift = 10.0 / (p as f64).sqrt();
        let sample = |n, s, shifted: bool| {
            let m = sample_gaussian(&sigma, n, s).unwrap().into_values();
            DataMatrix::new(if shifted { m.add_scalar(shift) } else { m }).unwrap()
        };
        let (x0, x1) = (sample(30, 1, false), sample(30, 2, true));
        let m = fit_lda(&x0, &x1, &PluginSpec::Fixed(0.5), Priors::Proportions, 0).unwrap();
        let t0 = sample(500, 3, false);
        let t1 = sample(500, 4, true);
        let mut test = DMatrix::zeros(1000, p);
        test.rows_mut(0, 500).copy_from(t0.values());
        test.rows_mut(500, 500).copy_from(t1.values());
        let labels: Vec<u8> = (0..1000).map(|i| u8::from(i >= 500)).collect();
        let r = evaluate(&m, &DataMatrix::new(test).unwrap(), &labels).unwrap();
        assert!(r.mcr <= 0.01, "{}", r.mcr);
    }

    #[test]
    fn rotation_invariant_predictions() {
        let d = simulate_template(&TwoClassTemplate::BREAST_CANCER_SHAPE, 11).unwrap();
        let g = haar_orthogonal(31, &mut seed::rng(12));
        for plugin in [
            PluginSpec::Fixed(0.3),
            PluginSpec::Cv {
                loss: LossKind::Frobenius,
                folds: Folds::LeaveOneOut,
                grid: KappaGrid::with_step(0.1).unwrap(),
            },
        ] {
            let m = fit_lda(&d.train0, &d.train1, &plugin, Priors::Proportions, 3).unwrap();
            let mr = fit_lda(&d.train0.rotated(&g).unwrap(), &d.train1.rotated(&g).unwrap(), &plugin, Priors::Proportions, 3).unwrap();
            assert_eq!(m.kappa, mr.kappa);
            assert_eq!(predict(&m, &d.test).unwrap(), predict(&mr, &d.test.rotated(&g).unwrap()).unwrap());
        }
    }

    #[test]
    fn bootstrap_plugin_runs() {
        let d = simulate_template(&TwoClassTemplate::BREAST_CANCER_SHAPE, 13).unwrap();
        let plugin = PluginSpec::Boot {
            loss: LossKind::Frobenius,
            reference: ReferenceSpec::LambdaOneNs,
            replicates: 20,
            grid: KappaGrid::with_step(0.1).unwrap(),
            invert_roles: false,
        };
        let a = fit_lda(&d.train0, &d.train1, &plugin, Priors::Proportions, 5).unwrap();
        let b = fit_lda(&d.train0, &d.train1, &plugin, Priors::Proportions, 5).unwrap();
        assert_eq!(a, b);
        assert!((0.0..1.0).contains(&a.kappa));
    }

    #[test]
    fn plugin_domain() {
        let x0 = DataMatrix::new(gaussian_matrix(4, 6, 1)).unwrap();
        let x1 = DataMatrix::new(gaussian_matrix(4, 6, 2)).unwrap();
        assert!(matches!(
            fit_lda(&x0, &x1, &PluginSpec::Fixed(1.0), Priors::Uniform, 0),
            Err(Error::NonInvertiblePlugin(_))
        ));
        assert!(matches!(
            fit_lda(&x0, &x1, &PluginSpec::Fixed(1.5), Priors::Uniform, 0),
            Err(Error::KappaOutOfRange(_))
        ));
        let x2 = DataMatrix::new(gaussian_matrix(4, 5, 2)).unwrap();
        assert!(fit_lda(&x0, &x2, &PluginSpec::Fixed(0.0), Priors::Uniform, 0).is_err());
    }

    #[test]
    fn report_counts() {
        let r = ClassificationReport::from_labels(&[1, 0, 1, 1, 0], &[1, 0, 0, 1, 1]).unwrap();
        assert_eq!(r.confusion, Confusion { tp: 2, tn: 1, fp: 1, fn_: 1 });
        assert!((r.mcr - 0.4).abs() < 1e-15);
        assert!((1.0 - r.mcr - 3.0 / 5.0).abs() < 1e-15);
        assert_eq!(r.sens, Some(2.0 / 3.0));
        assert_eq!(r.spec, Some(0.5));
        let all_neg = ClassificationReport::from_labels(&[0, 1], &[0, 0]).unwrap();
        assert_eq!(all_neg.sens, None);
        assert!(ClassificationReport::from_labels(&[2], &[0]).is_err());
    }
}
