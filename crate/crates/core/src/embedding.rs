//! Block-Hankel delay embedding of output sequences.
//!
//! An output sequence `y_0..y_{N-1}` of m-vectors is turned into stacked
//! windows `w_k = [y_k; y_{k+1}; ...; y_{k+s-1}]` and arranged as a
//! block-Hankel matrix whose columns are the windows. The past/future
//! split shifts that matrix by one column, with overlapping data.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ordered output samples, each an m-vector, with an optional sampling
/// interval in seconds (required only for temporal-trend reporting).
#[derive(Debug, Clone)]
pub struct OutputSequence {
    samples: Vec<DVector<f64>>,
    m: usize,
    dt: Option<f64>,
}

impl OutputSequence {
    /// Validates dimensions and finiteness; non-finite samples are rejected
    /// at ingestion rather than propagated.
    pub fn new(samples: Vec<DVector<f64>>, dt: Option<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("output sequence is empty".into()));
        }
        let m = samples[0].len();
        if m == 0 {
            return Err(Error::InvalidInput("output samples have dimension 0".into()));
        }
        for (k, y) in samples.iter().enumerate() {
            if y.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "sample {k} has dimension {} but expected {m}",
                    y.len()
                )));
            }
            if y.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "sample {k} contains a non-finite value"
                )));
            }
        }
        if let Some(dt) = dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "sampling interval must be positive and finite, got {dt}"
                )));
            }
        }
        Ok(Self { samples, m, dt })
    }

    /// Columns of `data` (m x N) become the samples.
    pub fn from_matrix(data: &DMatrix<f64>, dt: Option<f64>) -> Result<Self> {
        let samples = (0..data.ncols())
            .map(|k| data.column(k).into_owned())
            .collect();
        Self::new(samples, dt)
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sampling interval must be positive and finite, got {dt}"
            )));
        }
        self.dt = Some(dt);
        Ok(self)
    }

    /// Number of samples N.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Output dimension m.
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn dt(&self) -> Option<f64> {
        self.dt
    }

    pub fn sample(&self, k: usize) -> &DVector<f64> {
        &self.samples[k]
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    /// Samples as columns of an m x N matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.samples)
    }
}

/// Delay-embedded data matrices: the full window matrix `y_full`
/// (ms x (ell+1)) and its overlapping past/future column splits (ms x ell).
#[derive(Debug, Clone)]
pub struct HankelPair {
    pub y_full: DMatrix<f64>,
    pub y_past: DMatrix<f64>,
    pub y_future: DMatrix<f64>,
    /// Delay order.
    pub s: usize,
    /// Output dimension.
    pub m: usize,
    /// Number of past columns, `ell = N - s`.
    pub ell: usize,
}

impl HankelPair {
    /// Splits a full window matrix into the overlapping past/future pair.
    ///
    /// The columns need not come from a single Hankel embedding; the
    /// regression operations are well defined for arbitrary data, and tests
    /// exercise them on synthetic instances built this way.
    pub fn from_full(y_full: DMatrix<f64>, m: usize, s: usize) -> Result<Self> {
        crate::matdecomp::check_finite(&y_full, "window matrix")?;
        if m == 0 || s == 0 {
            return Err(Error::InvalidInput("m and s must be at least 1".into()));
        }
        if y_full.nrows() != m * s {
            return Err(Error::DimensionMismatch(format!(
                "window matrix has {} rows, expected m*s = {}",
                y_full.nrows(),
                m * s
            )));
        }
        if y_full.ncols() < 2 {
            return Err(Error::InsufficientData {
                required: 2,
                actual: y_full.ncols(),
            });
        }
        let ell = y_full.ncols() - 1;
        let y_past = y_full.columns(0, ell).into_owned();
        let y_future = y_full.columns(1, ell).into_owned();
        Ok(Self {
            y_full,
            y_past,
            y_future,
            s,
            m,
            ell,
        })
    }

    /// Builds a pair from explicit past/future matrices that do not share
    /// columns; `y_full` is completed as `[y_past, last column of y_future]`.
    pub fn from_parts(y_past: DMatrix<f64>, y_future: DMatrix<f64>, m: usize, s: usize) -> Result<Self> {
        if y_past.shape() != y_future.shape() {
            return Err(Error::DimensionMismatch(format!(
                "past is {}x{} but future is {}x{}",
                y_past.nrows(),
                y_past.ncols(),
                y_future.nrows(),
                y_future.ncols()
            )));
        }
        crate::matdecomp::check_finite(&y_past, "past window matrix")?;
        crate::matdecomp::check_finite(&y_future, "future window matrix")?;
        if m == 0 || s == 0 || y_past.nrows() != m * s {
            return Err(Error::DimensionMismatch(format!(
                "window matrices have {} rows, expected m*s = {}",
                y_past.nrows(),
                m * s
            )));
        }
        let ell = y_past.ncols();
        let mut y_full = DMatrix::zeros(m * s, ell + 1);
        y_full.columns_mut(0, ell).copy_from(&y_past);
        y_full.column_mut(ell).copy_from(&y_future.column(ell - 1));
        Ok(Self {
            y_full,
            y_past,
            y_future,
            s,
            m,
            ell,
        })
    }

    /// Window size ms.
    pub fn window_dim(&self) -> usize {
        self.m * self.s
    }
}

/// Builds the block-Hankel pair of delay order `s` from a sequence of
/// `N >= s + 1` samples, giving `ell = N - s` past columns.
pub fn hankel_embed(seq: &OutputSequence, s: usize) -> Result<HankelPair> {
    if s == 0 {
        return Err(Error::InvalidInput("delay order s must be at least 1".into()));
    }
    let n_samples = seq.len();
    if n_samples < s + 1 {
        return Err(Error::InsufficientData {
            required: s + 1,
            actual: n_samples,
        });
    }
    let m = seq.dim();
    let ell = n_samples - s;
    let mut y_full = DMatrix::zeros(m * s, ell + 1);
    for c in 0..=ell {
        for r in 0..s {
            y_full
                .view_mut((r * m, c), (m, 1))
                .copy_from(seq.sample(c + r));
        }
    }
    HankelPair::from_full(y_full, m, s)
}

/// Stacked window `[y_k; y_{k+1}; ...; y_{k+s-1}]` starting at sample `k`.
pub fn stacked_window(seq: &OutputSequence, k: usize, s: usize) -> Result<DVector<f64>> {
    if s == 0 {
        return Err(Error::InvalidInput("delay order s must be at least 1".into()));
    }
    if k + s > seq.len() {
        return Err(Error::InvalidInput(format!(
            "window [{}..{}] out of range for {} samples",
            k,
            k + s,
            seq.len()
        )));
    }
    let m = seq.dim();
    let mut w = DVector::zeros(m * s);
    for r in 0..s {
        w.rows_mut(r * m, m).copy_from(seq.sample(k + r));
    }
    Ok(w)
}
