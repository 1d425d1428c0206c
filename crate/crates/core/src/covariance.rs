//! Symmetric positive (semi)definite matrices in factored form.
//!
//! A [`CovarianceEstimate`] is stored as `H₁·diag(d)·H₁ᵀ + t·(I − H₁H₁ᵀ)`
//! with `H₁` a `p × k` orthonormal frame. When `k = p` the tail value `t` is
//! unused. An orthogonally equivariant estimator with equal trailing
//! eigenvalues fits this form exactly, and so do diagonal and dense truths.
//! The dense matrix is materialized on first use.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold under which an eigenvalue counts as zero.
const SINGULAR_RTOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    frame: DMatrix<f64>,
    lead: Vec<f64>,
    tail: f64,
    dense: OnceLock<DMatrix<f64>>,
    inv_sqrt: OnceLock<DMatrix<f64>>,
}

impl PartialEq for CovarianceEstimate {
    fn eq(&self, other: &Self) -> bool {
        self.frame == other.frame && self.lead == other.lead && self.tail == other.tail
    }
}

impl CovarianceEstimate {
    /// `frame·diag(lead)·frameᵀ + tail·(I − frame·frameᵀ)`.
    /// The frame must have orthonormal columns.
    pub fn from_factors(frame: DMatrix<f64>, lead: Vec<f64>, tail: f64) -> Result<Self> {
        if frame.ncols() != lead.len() {
            return Err(Error::DimensionMismatch {
                expected: frame.ncols(),
                got: lead.len(),
            });
        }
        if frame.ncols() > frame.nrows() {
            return Err(Error::DimensionMismatch {
                expected: frame.nrows(),
                got: frame.ncols(),
            });
        }
        if lead.iter().chain(std::iter::once(&tail)).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite eigenvalue".into()));
        }
        let tail = if frame.ncols() == frame.nrows() { 0.0 } else { tail };
        Ok(Self {
            frame,
            lead,
            tail,
            dense: OnceLock::new(),
            inv_sqrt: OnceLock::new(),
        })
    }

    pub fn scaled_identity(p: usize, c: f64) -> Self {
        Self {
            frame: DMatrix::zeros(p, 0),
            lead: Vec::new(),
            tail: c,
            dense: OnceLock::new(),
            inv_sqrt: OnceLock::new(),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let p = values.len();
        Self {
            frame: DMatrix::identity(p, p),
            lead: values.to_vec(),
            tail: 0.0,
            dense: OnceLock::new(),
            inv_sqrt: OnceLock::new(),
        }
    }

    /// Eigendecomposes a symmetric matrix. Asymmetry above `1e-8` relative
    /// to the largest entry is rejected.
    pub fn from_dense(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-8 * scale {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symmetric (max |a_ij - a_ji| = {asym:e})"
            )));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let p = sym.nrows();
        let mut frame = DMatrix::zeros(p, p);
        for (c, &i) in order.iter().enumerate() {
            frame.set_column(c, &eig.eigenvectors.column(i));
        }
        let lead = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let out = Self {
            frame,
            lead,
            tail: 0.0,
            dense: OnceLock::new(),
            inv_sqrt: OnceLock::new(),
        };
        let _ = out.dense.set(sym);
        Ok(out)
    }

    pub fn p(&self) -> usize {
        self.frame.nrows()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Eigenvalues attached to the frame columns.
    pub fn lead(&self) -> &[f64] {
        &self.lead
    }

    /// Eigenvalue on the orthogonal complement of the frame.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    fn tail_multiplicity(&self) -> usize {
        self.p() - self.lead.len()
    }

    /// All `p` eigenvalues, sorted descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = self.lead.clone();
        v.extend(std::iter::repeat_n(self.tail, self.tail_multiplicity()));
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn is_invertible(&self) -> bool {
        let ev = self.eigenvalues();
        match (ev.first(), ev.last()) {
            (Some(&max), Some(&min)) => min > 0.0 && min > SINGULAR_RTOL * max,
            _ => false,
        }
    }

    pub fn trace(&self) -> f64 {
        self.lead.iter().sum::<f64>() + self.tail * self.tail_multiplicity() as f64
    }

    pub fn log_det(&self) -> f64 {
        self.lead.iter().map(|v| v.ln()).sum::<f64>()
            + self.tail_multiplicity() as f64 * self.tail.ln()
    }

    /// `Σ_a f(d_a) h_a h_aᵀ + f(t)(I − H₁H₁ᵀ)` as a dense matrix.
    fn dense_map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let p = self.p();
        let ft = if self.tail_multiplicity() > 0 { f(self.tail) } else { 0.0 };
        let shifted = DVector::from_iterator(self.lead.len(), self.lead.iter().map(|&d| f(d) - ft));
        let mut scaled = self.frame.clone();
        for (mut col, s) in scaled.column_iter_mut().zip(shifted.iter()) {
            col *= *s;
        }
        let mut m = scaled * self.frame.transpose();
        for i in 0..p {
            m[(i, i)] += ft;
        }
        (&m + m.transpose()) * 0.5
    }

    /// The `p × p` matrix, computed once.
    pub fn dense(&self) -> &DMatrix<f64> {
        self.dense.get_or_init(|| self.dense_map(|d| d))
    }

    /// Matrix power `Σ^t` for an invertible estimate (or `t > 0`).
    pub fn power_dense(&self, t: f64) -> DMatrix<f64> {
        self.dense_map(|d| d.powf(t))
    }

    /// `Σ^{-1/2}`, computed once; `None` when singular.
    pub fn inv_sqrt_dense(&self) -> Option<&DMatrix<f64>> {
        if !self.is_invertible() {
            return None;
        }
        Some(self.inv_sqrt.get_or_init(|| self.power_dense(-0.5)))
    }

    pub fn inverse(&self) -> Option<CovarianceEstimate> {
        if !self.is_invertible() {
            return None;
        }
        Some(Self {
            frame: self.frame.clone(),
            lead: self.lead.iter().map(|d| 1.0 / d).collect(),
            tail: if self.tail_multiplicity() > 0 { 1.0 / self.tail } else { 0.0 },
            dense: OnceLock::new(),
            inv_sqrt: OnceLock::new(),
        })
    }

    /// Frame coordinates `H₁ᵀx` and the squared norm of the residual `x − H₁H₁ᵀx`.
    pub fn project(&self, x: &DVector<f64>) -> (DVector<f64>, f64) {
        let c = self.frame.tr_mul(x);
        let resid = if self.tail_multiplicity() > 0 {
            (x.norm_squared() - c.norm_squared()).max(0.0)
        } else {
            0.0
        };
        (c, resid)
    }

    /// `xᵀΣx`.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let (c, resid) = self.project(x);
        c.iter().zip(&self.lead).map(|(ci, d)| d * ci * ci).sum::<f64>() + self.tail * resid
    }

    /// `xᵀΣ⁻¹x`.
    pub fn inv_quad_form(&self, x: &DVector<f64>) -> Option<f64> {
        if !self.is_invertible() {
            return None;
        }
        let (c, resid) = self.project(x);
        let tail_term = if self.tail_multiplicity() > 0 { resid / self.tail } else { 0.0 };
        Some(c.iter().zip(&self.lead).map(|(ci, d)| ci * ci / d).sum::<f64>() + tail_term)
    }

    /// `Σ⁻¹v`.
    pub fn solve(&self, v: &DVector<f64>) -> Option<DVector<f64>> {
        if !self.is_invertible() {
            return None;
        }
        let c = self.frame.tr_mul(v);
        let in_span = &self.frame * &c;
        let mut out = if self.tail_multiplicity() > 0 {
            (v - &in_span) / self.tail
        } else {
            DVector::zeros(v.len())
        };
        for (a, d) in self.lead.iter().enumerate() {
            out.axpy(c[a] / d, &self.frame.column(a).clone_owned(), 1.0);
        }
        Some(out)
    }

    /// `GΣGᵀ`.
    pub fn rotated(&self, g: &DMatrix<f64>) -> Result<CovarianceEstimate> {
        if g.nrows() != self.p() || g.ncols() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                got: g.nrows(),
            });
        }
        Ok(Self {
            frame: g * &self.frame,
            lead: self.lead.clone(),
            tail: self.tail,
            dense: OnceLock::new(),
            inv_sqrt: OnceLock::new(),
        })
    }
}
