//! Reference identification baselines: the UPC subspace method and classic
//! truncated-SVD DMD, with the oblique row projections they are built on.
//!
//! UPC attains the same optimal objective as the rank-constrained
//! regression; truncating the past data matrix instead (classic DMD) is in
//! general strictly suboptimal, and both facts are exercised by tests.

use nalgebra::DMatrix;

use crate::embedding::HankelPair;
use crate::error::{Error, Result};
use crate::matdecomp::{pinv, svd_truncated};

/// Oblique row projection `A/B = A B^+ B` of the rows of `a` onto the row
/// space of `b`. Grouped as `A (B^+ B)` so no ms x ms intermediate appears.
pub fn project_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "projection needs matching column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let row_proj = pinv(b)? * b;
    Ok(a * row_proj)
}

/// Complement projection `A/B_perp = A (I - B^+ B)`.
pub fn project_rows_complement(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(a - project_rows(a, b)?)
}

/// UPC estimate: observability factor and state sequence.
#[derive(Debug, Clone)]
pub struct UpcSolution {
    /// `Gamma = U S^{1/2}` from the truncated SVD of `Y_f / Y_p`.
    pub gamma: DMatrix<f64>,
    /// `X = S^{-1/2} U^T Y_f Y_p^+ Y`, feasible by construction.
    pub x: DMatrix<f64>,
}

/// UPC subspace identification for autonomous systems: truncate the oblique
/// projection of the future onto the past and split the singular values
/// between the observability factor and the state sequence.
pub fn upc_identify(h: &HankelPair, n: usize) -> Result<UpcSolution> {
    if n == 0 {
        return Err(Error::InvalidInput("order n must be at least 1".into()));
    }
    let proj = project_rows(&h.y_future, &h.y_past)?;
    let tsvd = svd_truncated(&proj, n)?;
    let r = tsvd.s.len();

    let mut gamma = tsvd.u.clone();
    for (j, &sv) in tsvd.s.iter().enumerate() {
        gamma.column_mut(j).scale_mut(sv.sqrt());
    }

    // X = S^-1/2 U^T Y_f Y_p^+ Y, right-to-left so intermediates stay thin
    let y_pinv = pinv(&h.y_past)?;
    let t = tsvd.u.transpose() * &h.y_future; // r x ell
    let t = t * y_pinv; // r x ms
    let mut x = t * &h.y_full; // r x (ell+1)
    for (i, &sv) in tsvd.s.iter().enumerate() {
        // zero singular values propagate zeros rather than dividing
        let scale = if sv > 0.0 { 1.0 / sv.sqrt() } else { 0.0 };
        x.row_mut(i).scale_mut(scale);
    }
    debug_assert_eq!(gamma.ncols(), r);
    Ok(UpcSolution { gamma, x })
}

/// Classic truncated-SVD DMD map in factored form `Theta = L R^T` with
/// `L = Y_f V~ S~^-1` and `R = U~` from the rank-n truncation of `Y_p`.
#[derive(Debug, Clone)]
pub struct TruncatedDmdMap {
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

impl TruncatedDmdMap {
    /// The full ms x ms map; quadratic in the window size.
    pub fn dense(&self) -> DMatrix<f64> {
        &self.left * self.right.transpose()
    }

    /// The operator projected onto the truncated basis, `U~^T Theta U~`.
    pub fn projected(&self) -> DMatrix<f64> {
        self.right.transpose() * &self.left
    }

    /// `||y_future - Theta y_past||_F` without materializing the map.
    pub fn objective(&self, h: &HankelPair) -> f64 {
        (&h.y_future - &self.left * (self.right.transpose() * &h.y_past)).norm()
    }
}

/// Factored form of the classic DMD baseline; usable at full output scale.
pub fn truncated_dmd_factored(h: &HankelPair, n: usize) -> Result<TruncatedDmdMap> {
    if n == 0 {
        return Err(Error::InvalidInput("order n must be at least 1".into()));
    }
    let tsvd = svd_truncated(&h.y_past, n)?;
    let mut vs_inv = tsvd.v.clone();
    for (j, &sv) in tsvd.s.iter().enumerate() {
        vs_inv.column_mut(j).scale_mut(1.0 / sv);
    }
    Ok(TruncatedDmdMap {
        left: &h.y_future * vs_inv,
        right: tsvd.u,
    })
}

/// Classic DMD map as a dense ms x ms matrix, directly comparable with the
/// rank-constrained minimizer.
pub fn truncated_dmd(h: &HankelPair, n: usize) -> Result<DMatrix<f64>> {
    Ok(truncated_dmd_factored(h, n)?.dense())
}
