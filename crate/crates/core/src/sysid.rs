//! State-space extraction, mode decomposition, state estimation, and
//! prediction on top of the factored regression solution.
//!
//! Models are identified only up to a similarity transformation, so nothing
//! here (or in any test) compares raw entries of `A`; eigenvalue multisets
//! and input-output behavior are the meaningful quantities.

use nalgebra::{Complex, DMatrix, DVector};

use crate::embedding::{hankel_embed, HankelPair, OutputSequence};
use crate::error::{Error, Result};
use crate::lowrank::{solve_rank_constrained, LowRankMap};
use crate::matdecomp::{condition_number_complex, eig, pinv, svd_econ, EigenTag};

/// Discrete-time autonomous state-space model `x_{k+1} = A x_k`,
/// `y_k = C x_k`.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    /// State transition, n x n.
    pub a: DMatrix<f64>,
    /// Output map, m x n.
    pub c: DMatrix<f64>,
    /// Model order.
    pub n: usize,
    /// Delay order used in identification.
    pub s: usize,
    /// Output dimension.
    pub m: usize,
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, c: DMatrix<f64>, s: usize) -> Result<Self> {
        crate::matdecomp::check_finite(&a, "state matrix")?;
        crate::matdecomp::check_finite(&c, "output matrix")?;
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "state matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if c.ncols() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "output matrix has {} columns but state dimension is {}",
                c.ncols(),
                a.nrows()
            )));
        }
        let n = a.nrows();
        let m = c.nrows();
        Ok(Self { a, c, n, s, m })
    }

    /// Extended observability matrix `[C; CA; ...; CA^{s-1}]`.
    pub fn observability_matrix(&self, s: usize) -> DMatrix<f64> {
        let mut gamma = DMatrix::zeros(self.m * s, self.n);
        let mut block = self.c.clone();
        for r in 0..s {
            gamma.view_mut((r * self.m, 0), (self.m, self.n)).copy_from(&block);
            if r + 1 < s {
                block = &block * &self.a;
            }
        }
        gamma
    }
}

/// Spatial modes (columns of `Psi = C Phi`), temporal modes (eigenvalues of
/// `A`), and their conjugate-pair structure.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Complex m-vectors, one column per mode.
    pub spatial: DMatrix<Complex<f64>>,
    /// Eigenvalues of `A`, same order as the spatial columns.
    pub temporal: Vec<Complex<f64>>,
    pub pairing: Vec<EigenTag>,
    /// Sampling interval in seconds.
    pub dt: f64,
    /// Eigenvector matrix `Phi`; kept so mode-coordinate initial conditions
    /// can be solved from a state estimate.
    pub eigenvectors: DMatrix<Complex<f64>>,
}

impl ModeSet {
    pub fn count(&self) -> usize {
        self.temporal.len()
    }

    /// (real modes, conjugate pairs)
    pub fn census(&self) -> (usize, usize) {
        let real = self.pairing.iter().filter(|t| **t == EigenTag::Real).count();
        let pairs = self
            .pairing
            .iter()
            .filter(|t| **t == EigenTag::ConjugateFirst)
            .count();
        (real, pairs)
    }

    /// Temporal trend `lambda_k^{t/dt}` of mode `k` at time `t` seconds.
    pub fn trend(&self, k: usize, t: f64) -> Complex<f64> {
        self.temporal[k].powf(t / self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictMethod {
    /// Iterate the state recursion `x <- A x`, `y = C x`.
    StateSpace,
    /// Iterate the window map `w <- Theta* w` and read the leading block.
    ExtendedAr,
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub horizon: usize,
    /// Predicted outputs for steps 1..=horizon past the window.
    pub outputs: Vec<DVector<f64>>,
    pub method: PredictMethod,
}

/// System matrices from the factored map: `A = Q^T P`, `C = P[1:m, :]`.
pub fn extract_system(map: &LowRankMap) -> StateSpaceModel {
    let a = map.q.transpose() * &map.p;
    let c = map.p.rows(0, map.m).into_owned();
    StateSpaceModel {
        n: map.rank,
        s: map.s,
        m: map.m,
        a,
        c,
    }
}

/// Alternative extraction from the shift invariance of the observability
/// factor: `A = Gamma[1:m(s-1), :]^+ Gamma[m+1:ms, :]` with `Gamma = P`.
/// Kept as a cross-validation path; requires `s >= 2`.
pub fn extract_system_shift(map: &LowRankMap) -> Result<StateSpaceModel> {
    if map.s < 2 {
        return Err(Error::InvalidInput(
            "shift extraction needs delay order s >= 2".into(),
        ));
    }
    let m = map.m;
    let rows = m * (map.s - 1);
    let top = map.p.rows(0, rows).into_owned();
    if svd_econ(&top)?.rank < map.rank {
        return Err(Error::Observability(
            "leading observability block is rank-deficient; increase s".into(),
        ));
    }
    let bottom = map.p.rows(m, rows).into_owned();
    let a = pinv(&top)? * bottom;
    let c = map.p.rows(0, m).into_owned();
    StateSpaceModel::new(a, c, map.s)
}

/// State sequence estimate `X = Q^T Y` (n x (ell+1)); feasible for the
/// state-sequence problem by construction and attains the same objective
/// as the regression optimum.
pub fn estimate_states(map: &LowRankMap, h: &HankelPair) -> DMatrix<f64> {
    map.q.transpose() * &h.y_full
}

/// Spatiotemporal mode decomposition `Psi = C Phi`, `A Phi = Phi Lambda`.
/// Refuses defective `A`, for which the mode form is not defined.
pub fn modes(model: &StateSpaceModel, dt: f64) -> Result<ModeSet> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sampling interval must be positive and finite, got {dt}"
        )));
    }
    let e = eig(&model.a)?;
    if let Some(diag) = e.defective {
        return Err(Error::Defective(format!(
            "mode decomposition requires a diagonalizable state matrix: {diag}"
        )));
    }
    let c_complex: DMatrix<Complex<f64>> = model.c.map(|x| Complex::new(x, 0.0));
    let spatial = &c_complex * &e.eigenvectors;
    Ok(ModeSet {
        spatial,
        temporal: e.eigenvalues,
        pairing: e.pairing,
        dt,
        eigenvectors: e.eigenvectors,
    })
}

fn check_window(map: &LowRankMap, window: &DVector<f64>) -> Result<()> {
    let ms = map.m * map.s;
    if window.len() != ms {
        return Err(Error::DimensionMismatch(format!(
            "window must be a stacked ms-vector of length {ms}, got {}",
            window.len()
        )));
    }
    if window.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("window contains a non-finite value".into()));
    }
    Ok(())
}

/// Multi-step output prediction from the last stacked window.
///
/// Both methods realize the same map: the leading m rows of
/// `(P Q^T)^t w` equal `C A^{t-1} (Q^T w)`, so they agree in exact
/// arithmetic for every horizon.
pub fn predict(
    model: &StateSpaceModel,
    map: &LowRankMap,
    window: &DVector<f64>,
    horizon: usize,
    method: PredictMethod,
) -> Result<Prediction> {
    if horizon == 0 {
        return Err(Error::InvalidInput("prediction horizon must be at least 1".into()));
    }
    check_window(map, window)?;
    if model.n != map.rank || model.m != map.m {
        return Err(Error::DimensionMismatch(
            "model and map come from different factorizations".into(),
        ));
    }
    let m = map.m;
    let mut outputs = Vec::with_capacity(horizon);
    match method {
        PredictMethod::ExtendedAr => {
            let mut w = window.clone();
            for _ in 0..horizon {
                w = map.apply_vec(&w);
                outputs.push(w.rows(0, m).into_owned());
            }
        }
        PredictMethod::StateSpace => {
            let mut x = map.q.transpose() * window;
            for _ in 0..horizon {
                outputs.push(&model.c * &x);
                x = &model.a * x;
            }
        }
    }
    Ok(Prediction {
        horizon,
        outputs,
        method,
    })
}

/// Prediction through the mode form `Psi Lambda^{t-1} b`, where
/// `b = Phi^-1 (Q^T window)` is solved linearly; refuses an eigenvector
/// matrix with condition number above 1e10.
pub fn predict_by_modes(
    modes: &ModeSet,
    map: &LowRankMap,
    window: &DVector<f64>,
    horizon: usize,
) -> Result<Vec<DVector<f64>>> {
    if horizon == 0 {
        return Err(Error::InvalidInput("prediction horizon must be at least 1".into()));
    }
    check_window(map, window)?;
    let cond = condition_number_complex(&modes.eigenvectors);
    if cond > 1e10 {
        return Err(Error::IllConditioned(format!(
            "eigenvector matrix condition {cond:.3e} exceeds 1e10"
        )));
    }
    let x0 = map.q.transpose() * window;
    let rhs: DVector<Complex<f64>> = x0.map(|x| Complex::new(x, 0.0));
    let lu = modes.eigenvectors.clone().lu();
    let b = lu
        .solve(&rhs)
        .ok_or_else(|| Error::IllConditioned("eigenvector matrix is singular".into()))?;

    let m = map.m;
    let mut coeff = b;
    let mut outputs = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let y: DVector<Complex<f64>> = &modes.spatial * &coeff;
        outputs.push(DVector::from_iterator(m, y.iter().map(|z| z.re)));
        for (k, z) in coeff.iter_mut().enumerate() {
            *z *= modes.temporal[k];
        }
    }
    Ok(outputs)
}

/// Full identification pipeline with residual report.
#[derive(Debug, Clone)]
pub struct Identification {
    pub model: StateSpaceModel,
    pub modes: ModeSet,
    pub map: LowRankMap,
    /// `||y_future - Theta* y_past||_F / ||y_future||_F`.
    pub relative_residual: f64,
}

/// Identification pipeline: delay-embed, solve the rank-constrained
/// regression, extract `(A, C)`, and decompose into modes. The sampling
/// interval of `seq` (default 1.0) scales the temporal trends.
pub fn identify(seq: &OutputSequence, n: usize, s: usize) -> Result<Identification> {
    let h = hankel_embed(seq, s)?;
    identify_embedded(&h, n, seq.dt().unwrap_or(1.0))
}

/// Identification from an existing delay embedding.
pub fn identify_embedded(h: &HankelPair, n: usize, dt: f64) -> Result<Identification> {
    let map = solve_rank_constrained(h, n)?;
    let model = extract_system(&map);
    let modes = modes(&model, dt)?;
    let relative_residual = map.relative_residual(h);
    Ok(Identification {
        model,
        modes,
        map,
        relative_residual,
    })
}
