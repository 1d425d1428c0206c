//! Data matrices and the spectral decomposition of `S = XᵀX`.
//!
//! The decomposition goes through the SVD of the `n × p` data matrix, which
//! costs `O(n²p)` instead of the `O(p³)` of an eigendecomposition of `S`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative threshold on singular values for numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// An `n × p` matrix of observations, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    centered: bool,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = values.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        for j in 0..cols {
            for i in 0..rows {
                if !values[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self {
            values,
            centered: false,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    /// Checks the centering invariant: every column sums to zero within
    /// `1e-10 · n · max|x|`.
    pub fn columns_sum_to_zero(&self) -> bool {
        let n = self.rows() as f64;
        let scale = self.values.amax();
        let tol = 1e-10 * n * scale.max(f64::MIN_POSITIVE);
        self.values
            .column_iter()
            .all(|c| c.sum().abs() <= tol)
    }

    /// Rows `indices` (repetition allowed) as a new, uncentered matrix.
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        let p = self.cols();
        DataMatrix {
            values: DMatrix::from_fn(indices.len(), p, |i, j| self.values[(indices[i], j)]),
            centered: false,
        }
    }

    /// All rows except those in `excluded` (sorted or not).
    pub fn without_rows(&self, excluded: &[usize]) -> DataMatrix {
        let keep: Vec<usize> = (0..self.rows()).filter(|i| !excluded.contains(i)).collect();
        self.select_rows(&keep)
    }

    /// The rotated sample `X·Gᵀ`, i.e. each row mapped by `G`.
    pub fn rotated(&self, g: &DMatrix<f64>) -> Result<DataMatrix> {
        if g.nrows() != self.cols() || g.ncols() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                got: g.nrows(),
            });
        }
        Ok(DataMatrix {
            values: &self.values * g.transpose(),
            centered: self.centered,
        })
    }

    /// Column means.
    pub fn mean(&self) -> DVector<f64> {
        self.values.row_mean().transpose()
    }
}

/// Sample roots and eigenvectors of `S = XᵀX` for its nonzero eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpectrum {
    p: usize,
    rows: usize,
    ell: Vec<f64>,
    frame: DMatrix<f64>,
}

impl SampleSpectrum {
    /// A spectrum with the given eigenvalues and the first `q` coordinate
    /// axes as its frame. For spectrum-only computations and tests.
    pub fn from_eigenvalues(p: usize, ell: Vec<f64>) -> Result<Self> {
        let q = ell.len();
        if q == 0 {
            return Err(Error::AllZeroMatrix);
        }
        if q > p {
            return Err(Error::DimensionMismatch { expected: p, got: q });
        }
        check_roots(&ell)?;
        Ok(Self {
            p,
            rows: q,
            ell,
            frame: DMatrix::identity(p, q),
        })
    }

    /// Assembles a spectrum from parts, validating the invariants.
    pub fn from_parts(rows: usize, ell: Vec<f64>, frame: DMatrix<f64>) -> Result<Self> {
        if frame.ncols() != ell.len() {
            return Err(Error::DimensionMismatch {
                expected: ell.len(),
                got: frame.ncols(),
            });
        }
        if ell.is_empty() {
            return Err(Error::AllZeroMatrix);
        }
        check_roots(&ell)?;
        Ok(Self {
            p: frame.nrows(),
            rows,
            ell,
            frame,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Numerical rank of `S`.
    pub fn q(&self) -> usize {
        self.ell.len()
    }

    /// Number of rows of the data matrix that produced this spectrum.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Nonzero eigenvalues of `S`, strictly decreasing.
    pub fn ell(&self) -> &[f64] {
        &self.ell
    }

    /// `p × q` orthonormal eigenvectors matching [`Self::ell`].
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// `tr S`.
    pub fn trace(&self) -> f64 {
        self.ell.iter().sum()
    }

    pub fn to_json(&self, with_frame: bool) -> SpectrumJson {
        SpectrumJson {
            p: self.p,
            q: self.q(),
            ell: self.ell.clone(),
            frame: with_frame.then(|| {
                self.frame
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect()
            }),
        }
    }
}

fn check_roots(ell: &[f64]) -> Result<()> {
    for (i, &l) in ell.iter().enumerate() {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::NonPositiveLambda { index: i, value: l });
        }
    }
    for w in ell.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::DegenerateSpectrum {
                first: w[0],
                second: w[1],
            });
        }
    }
    Ok(())
}

/// Wire form of a [`SampleSpectrum`]; the frame is emitted row by row.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumJson {
    pub p: usize,
    pub q: usize,
    pub ell: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<Vec<f64>>>,
}

/// Spectrum of `S = XᵀX` from the SVD of `X`.
///
/// Singular values `σᵢ > rank_tol · σ_max` are retained; `ellᵢ = σᵢ²`.
/// Each frame column is signed so that its largest-magnitude entry is positive.
pub fn decompose(x: &DataMatrix, rank_tol: f64) -> Result<SampleSpectrum> {
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::RankToleranceOutOfRange(rank_tol));
    }
    let p = x.cols();
    let svd = x.values().clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::FactorizationFailure("SVD did not return V".into()))?;

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma_max = order
        .first()
        .map_or(0.0, |&i| svd.singular_values[i]);
    if !(sigma_max > 0.0) {
        return Err(Error::AllZeroMatrix);
    }
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > rank_tol * sigma_max)
        .collect();

    let ell: Vec<f64> = kept
        .iter()
        .map(|&i| svd.singular_values[i].powi(2))
        .collect();
    let tie_tol = rank_tol * ell[0];
    for w in ell.windows(2) {
        if w[0] - w[1] <= tie_tol {
            return Err(Error::DegenerateSpectrum {
                first: w[0],
                second: w[1],
            });
        }
    }

    let mut frame = DMatrix::zeros(p, kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let v = v_t.row(i);
        let (mut arg, mut best) = (0, 0.0);
        for (j, &vj) in v.iter().enumerate() {
            if vj.abs() > best {
                best = vj.abs();
                arg = j;
            }
        }
        let sign = if v[arg] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..p {
            frame[(j, col)] = sign * v[j];
        }
    }
    Ok(SampleSpectrum {
        p,
        rows: x.rows(),
        ell,
        frame,
    })
}

/// Subtracts the column means: `Yᵢ = Xᵢ − X̄`.
pub fn center(x: &DataMatrix) -> Result<DataMatrix> {
    if x.rows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: x.rows(),
        });
    }
    let mean = x.values().row_mean();
    let mut values = x.values().clone();
    for mut row in values.row_iter_mut() {
        row -= &mean;
    }
    Ok(DataMatrix {
        values,
        centered: true,
    })
}
