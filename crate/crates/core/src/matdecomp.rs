//! Dense matrix decomposition primitives with fixed sign and ordering
//! conventions, so every downstream result is reproducible bit-for-bit
//! across runs.
//!
//! Conventions:
//! - singular values sorted nonincreasing; in each left singular vector the
//!   entry of largest magnitude is nonnegative (ties broken by lowest row
//!   index), with the matching right vector flipped alongside;
//! - eigenvalues sorted by nonincreasing modulus, ties by nonincreasing real
//!   part; conjugate pairs adjacent with the positive-imaginary member first;
//! - numerical rank cutoff is `max(rows, cols) * sigma_max * eps`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// LAPACK-style numerical rank cutoff.
pub fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * sigma_max * f64::EPSILON
}

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidInput(format!("{what}: empty matrix")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what}: non-finite entry in {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Thin singular value decomposition `M = U diag(s) V^T`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Singular values, nonincreasing.
    pub s: DVector<f64>,
    /// Right singular vectors, orthonormal columns.
    pub v: DMatrix<f64>,
    /// Numerical rank under the `rank_tolerance` cutoff.
    pub rank: usize,
}

impl SvdResult {
    /// `U diag(s) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, &sv) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sv);
        }
        us * self.v.transpose()
    }

    /// Keep the leading `k` triplets.
    pub fn take(&self, k: usize) -> SvdResult {
        let k = k.min(self.s.len());
        SvdResult {
            u: self.u.columns(0, k).into_owned(),
            s: DVector::from_iterator(k, self.s.iter().take(k).copied()),
            v: self.v.columns(0, k).into_owned(),
            rank: self.rank.min(k),
        }
    }

    /// Triplets restricted to numerically nonzero singular values.
    pub fn nonzero(&self) -> SvdResult {
        self.take(self.rank)
    }
}

/// Economic SVD: `min(rows, cols)` triplets, sorted, deterministic signs.
pub fn svd_econ(m: &DMatrix<f64>) -> Result<SvdResult> {
    check_finite(m, "svd_econ")?;
    let svd = m.clone().svd(true, true);
    let mut u = svd.u.expect("u requested");
    let mut v = svd.v_t.expect("v_t requested").transpose();
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();

    // nalgebra sorts nonincreasing already; enforce it anyway so the
    // convention does not depend on upstream behavior.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    if order.iter().enumerate().any(|(i, &j)| i != j) {
        let up = u.clone();
        let vp = v.clone();
        let sp = s.clone();
        for (dst, &src) in order.iter().enumerate() {
            u.set_column(dst, &up.column(src));
            v.set_column(dst, &vp.column(src));
            s[dst] = sp[src];
        }
    }

    apply_sign_convention(&mut u, &mut v);

    let sigma_max = s.first().copied().unwrap_or(0.0);
    let tol = rank_tolerance(m.nrows(), m.ncols(), sigma_max);
    let rank = s.iter().filter(|&&x| x > tol).count();

    Ok(SvdResult {
        u,
        s: DVector::from_vec(s),
        v,
        rank,
    })
}

/// `n`-truncated SVD: at most `min(n, numerical rank)` leading triplets,
/// the Frobenius-optimal rank-`n` approximation by Eckart-Young.
pub fn svd_truncated(m: &DMatrix<f64>, n: usize) -> Result<SvdResult> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "svd_truncated: rank bound must be at least 1".into(),
        ));
    }
    let econ = svd_econ(m)?;
    Ok(econ.take(n.min(econ.rank)))
}

/// True when truncating `s` at rank `n` cuts through a near-degenerate
/// boundary (`s[n-1] - s[n] < 1e-10 * s[0]`), in which case the truncated
/// SVD (and anything built from it) is not uniquely determined.
pub fn degenerate_truncation(s: &DVector<f64>, n: usize, rank: usize) -> bool {
    if n >= rank || s.len() < 2 || n == 0 {
        // nothing numerically nonzero is discarded
        return false;
    }
    let gap = s[n - 1] - s[n];
    gap < 1e-10 * s[0]
}

/// Moore-Penrose pseudoinverse via SVD, with singular values below the
/// rank cutoff treated as zero.
pub fn pinv(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = svd_econ(m)?.nonzero();
    let mut vs = svd.v.clone();
    for (j, &sv) in svd.s.iter().enumerate() {
        vs.column_mut(j).scale_mut(1.0 / sv);
    }
    Ok(vs * svd.u.transpose())
}

/// `sigma_max / sigma_min`; infinite for rank-deficient input.
pub fn condition_number(m: &DMatrix<f64>) -> Result<f64> {
    let svd = svd_econ(m)?;
    let smax = svd.s[0];
    let smin = svd.s[svd.s.len() - 1];
    if smin <= rank_tolerance(m.nrows(), m.ncols(), smax) {
        Ok(f64::INFINITY)
    } else {
        Ok(smax / smin)
    }
}

/// Condition number of a complex matrix.
pub fn condition_number_complex(m: &DMatrix<Complex<f64>>) -> f64 {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= rank_tolerance(m.nrows(), m.ncols(), smax) {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Orthonormal basis of the orthogonal complement of `col(basis)`.
///
/// Returns an `m x (m - rank)` matrix; `m x m` identity-like basis when
/// `basis` has rank zero.
pub fn orthonormal_complement(basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_finite(basis, "orthonormal_complement")?;
    let m = basis.nrows();
    let ortho = svd_econ(basis)?.nonzero();
    let r = ortho.rank;
    if r == 0 {
        return Ok(DMatrix::identity(m, m));
    }
    if r == m {
        return Ok(DMatrix::zeros(m, 0));
    }
    // QR of [U I]: the first r Householder columns reproduce col(basis),
    // the remaining m - r columns of Q are its orthogonal complement.
    let mut aug = DMatrix::zeros(m, r + m);
    aug.columns_mut(0, r).copy_from(&ortho.u);
    aug.columns_mut(r, m).copy_from(&DMatrix::identity(m, m));
    let q = aug.qr().q();
    Ok(q.columns(r, m - r).into_owned())
}

fn apply_sign_convention(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut imax = 0;
        let mut best = -1.0;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                imax = i;
            }
        }
        if u[(imax, j)] < 0.0 {
            u.column_mut(j).neg_mut();
            if j < v.ncols() {
                v.column_mut(j).neg_mut();
            }
        }
    }
}

/// Tag for each eigenvalue slot in an [`EigResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenTag {
    Real,
    /// Positive-imaginary member of a conjugate pair.
    ConjugateFirst,
    /// Negative-imaginary member, directly after its partner.
    ConjugateSecond,
}

/// Eigendecomposition `A Phi = Phi Lambda` of a real square matrix.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub eigenvalues: Vec<Complex<f64>>,
    /// Eigenvectors as columns, in the same order as `eigenvalues`.
    pub eigenvectors: DMatrix<Complex<f64>>,
    pub pairing: Vec<EigenTag>,
    /// Diagnostic set when the matrix is defective (non-diagonalizable
    /// beyond tolerance); consumers requiring diagonalizability must refuse.
    pub defective: Option<String>,
}

impl EigResult {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    /// (number of real eigenvalues, number of conjugate pairs)
    pub fn census(&self) -> (usize, usize) {
        let real = self.pairing.iter().filter(|t| **t == EigenTag::Real).count();
        let pairs = self
            .pairing
            .iter()
            .filter(|t| **t == EigenTag::ConjugateFirst)
            .count();
        (real, pairs)
    }
}

enum EigGroup {
    Real(f64),
    /// Positive-imaginary representative of a conjugate pair.
    Pair(Complex<f64>),
}

impl EigGroup {
    fn value(&self) -> Complex<f64> {
        match self {
            EigGroup::Real(x) => Complex::new(*x, 0.0),
            EigGroup::Pair(z) => *z,
        }
    }
}

/// Eigendecomposition of a real square matrix with deterministic ordering
/// and conjugate-pair structure preserved exactly.
///
/// Never fails on a defective matrix; instead the `defective` diagnostic is
/// set, since only consumers that need a diagonalizable input (the mode
/// decomposition) must reject it.
///
/// Eigenvalue features below `1e-7 * ||A||` are treated as degenerate:
/// imaginary parts that small collapse to the real axis, and eigenvalues
/// that close are clustered into a joint null space of matching dimension.
/// A defective matrix perturbed by a basis change splits its repeated
/// eigenvalue on the order of `sqrt(eps)`, so without this collapse it
/// would masquerade as diagonalizable with nearly parallel eigenvectors.
pub fn eig(a: &DMatrix<f64>) -> Result<EigResult> {
    check_finite(a, "eig")?;
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "eig: matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let scale = a.norm();
    let raw: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();

    let mut defective: Option<String> = None;

    // Split into real eigenvalues and conjugate pairs.
    let im_tol = 1e-7 * scale;
    let mut reals: Vec<f64> = Vec::new();
    let mut pos: Vec<Complex<f64>> = Vec::new();
    let mut neg: Vec<Complex<f64>> = Vec::new();
    for z in &raw {
        if z.im.abs() <= im_tol {
            reals.push(z.re);
        } else if z.im > 0.0 {
            pos.push(*z);
        } else {
            neg.push(*z);
        }
    }
    let mut groups: Vec<EigGroup> = reals.into_iter().map(EigGroup::Real).collect();
    for z in pos {
        // match each positive-imaginary eigenvalue with its conjugate
        let want = z.conj();
        match neg
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - want).norm().partial_cmp(&(*b - want).norm()).unwrap())
        {
            Some((k, _)) => {
                neg.remove(k);
                groups.push(EigGroup::Pair(z));
            }
            None => {
                defective = Some("unpaired complex eigenvalue".into());
                groups.push(EigGroup::Pair(z));
            }
        }
    }
    if !neg.is_empty() {
        defective = Some("unpaired complex eigenvalue".into());
        for z in neg {
            groups.push(EigGroup::Pair(z.conj()));
        }
    }

    // Nonincreasing modulus, ties by nonincreasing real part.
    groups.sort_by(|a, b| {
        let (za, zb) = (a.value(), b.value());
        zb.norm()
            .partial_cmp(&za.norm())
            .unwrap()
            .then(zb.re.partial_cmp(&za.re).unwrap())
    });

    // Cluster coincident groups of the same kind so repeated eigenvalues get
    // a joint null space of matching dimension.
    let ctol = 1e-7 * scale;
    let mut eigenvalues: Vec<Complex<f64>> = Vec::with_capacity(n);
    let mut pairing: Vec<EigenTag> = Vec::with_capacity(n);
    let mut vectors: Vec<DVector<Complex<f64>>> = Vec::with_capacity(n);

    let mut i = 0;
    while i < groups.len() {
        let mut j = i + 1;
        while j < groups.len() {
            let same_kind = matches!(
                (&groups[i], &groups[j]),
                (EigGroup::Real(_), EigGroup::Real(_)) | (EigGroup::Pair(_), EigGroup::Pair(_))
            );
            if same_kind && (groups[j].value() - groups[i].value()).norm() <= ctol {
                j += 1;
            } else {
                break;
            }
        }
        let mult = j - i;
        let mean = groups[i..j]
            .iter()
            .fold(Complex::new(0.0, 0.0), |acc, g| acc + g.value())
            / mult as f64;

        match &groups[i] {
            EigGroup::Real(_) => {
                let (vecs, ok) = real_null_space(a, mean.re, mult, scale);
                if !ok {
                    defective = Some(format!(
                        "eigenvalue {:.6} has geometric multiplicity below {}",
                        mean.re, mult
                    ));
                }
                for v in vecs {
                    eigenvalues.push(Complex::new(mean.re, 0.0));
                    pairing.push(EigenTag::Real);
                    vectors.push(v.map(|x| Complex::new(x, 0.0)));
                }
            }
            EigGroup::Pair(_) => {
                let (vecs, ok) = complex_null_space(a, mean, mult, scale);
                if !ok {
                    defective = Some(format!(
                        "eigenvalue {:.6}{:+.6}i has geometric multiplicity below {}",
                        mean.re, mean.im, mult
                    ));
                }
                for v in vecs {
                    let v = normalize_phase(v);
                    eigenvalues.push(mean);
                    pairing.push(EigenTag::ConjugateFirst);
                    vectors.push(v.clone());
                    eigenvalues.push(mean.conj());
                    pairing.push(EigenTag::ConjugateSecond);
                    vectors.push(v.map(|x| x.conj()));
                }
            }
        }
        i = j;
    }

    let phi = DMatrix::from_columns(&vectors);
    let ac: DMatrix<Complex<f64>> = a.map(|x| Complex::new(x, 0.0));
    let lambda = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
    let residual = (&ac * &phi - &phi * &lambda).norm();
    if residual > 1e-8 * scale {
        defective.get_or_insert_with(|| {
            format!(
                "eigendecomposition residual {:.3e} exceeds tolerance",
                residual / scale
            )
        });
    }

    Ok(EigResult {
        eigenvalues,
        eigenvectors: phi,
        pairing,
        defective,
    })
}

/// `mult` orthonormal null vectors of `A - lambda I` for real `lambda`.
/// The boolean is false when the null space is numerically deficient.
fn real_null_space(a: &DMatrix<f64>, lambda: f64, mult: usize, scale: f64) -> (Vec<DVector<f64>>, bool) {
    let n = a.nrows();
    let mut shifted = a.clone();
    for k in 0..n {
        shifted[(k, k)] -= lambda;
    }
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("v requested");
    let s = &svd.singular_values;
    let null_tol = (1e-9 * scale).max(rank_tolerance(n, n, s.max()));
    let total = s.len();
    let mut vecs = Vec::with_capacity(mult);
    let mut ok = true;
    for k in 0..mult {
        let idx = total - 1 - k;
        if s[idx] > null_tol {
            ok = false;
        }
        let mut v: DVector<f64> = v_t.row(idx).transpose();
        // deterministic sign: largest-magnitude entry nonnegative
        let mut imax = 0;
        let mut best = -1.0;
        for (i, &x) in v.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                imax = i;
            }
        }
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        vecs.push(v);
    }
    (vecs, ok)
}

fn complex_null_space(
    a: &DMatrix<f64>,
    lambda: Complex<f64>,
    mult: usize,
    scale: f64,
) -> (Vec<DVector<Complex<f64>>>, bool) {
    let n = a.nrows();
    let mut shifted: DMatrix<Complex<f64>> = a.map(|x| Complex::new(x, 0.0));
    for k in 0..n {
        shifted[(k, k)] -= lambda;
    }
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("v requested");
    let s = &svd.singular_values;
    let null_tol = (1e-9 * scale).max(rank_tolerance(n, n, s.max()));
    let total = s.len();
    let mut vecs = Vec::with_capacity(mult);
    let mut ok = true;
    for k in 0..mult {
        let idx = total - 1 - k;
        if s[idx] > null_tol {
            ok = false;
        }
        vecs.push(v_t.row(idx).adjoint());
    }
    (vecs, ok)
}

/// Rotate so the largest-magnitude entry is real and positive (ties broken
/// by lowest index), then renormalize.
fn normalize_phase(mut v: DVector<Complex<f64>>) -> DVector<Complex<f64>> {
    let mut imax = 0;
    let mut best = -1.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            imax = i;
        }
    }
    let pivot = v[imax];
    if pivot.norm() > 0.0 {
        let phase = pivot / pivot.norm();
        let rot = phase.conj();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
    let nrm = v.norm();
    if nrm > 0.0 {
        for z in v.iter_mut() {
            *z /= nrm;
        }
    }
    v
}
