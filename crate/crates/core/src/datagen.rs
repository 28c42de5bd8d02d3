//! Synthetic data generation: random observable systems with prescribed
//! spectra, simulated trajectories, regression test instances, and a
//! video-like surrogate driven by a hidden three-state linear system.
//!
//! Everything is deterministic under a fixed seed.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embedding::{HankelPair, OutputSequence};
use crate::error::{Error, Result};
use crate::matdecomp::{eig, svd_econ};
use crate::sysid::StateSpaceModel;

const MAX_RESAMPLE: usize = 100;

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Real block-diagonal matrix with the given spectrum: 1x1 blocks for real
/// eigenvalues, 2x2 rotation-scaling blocks for conjugate pairs.
fn modal_form(spectrum: &[Complex<f64>]) -> Result<DMatrix<f64>> {
    let n = spectrum.len();
    let mut reals: Vec<f64> = Vec::new();
    let mut pos: Vec<Complex<f64>> = Vec::new();
    let mut neg: Vec<Complex<f64>> = Vec::new();
    for z in spectrum {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput("spectrum contains a non-finite value".into()));
        }
        if z.im == 0.0 {
            reals.push(z.re);
        } else if z.im > 0.0 {
            pos.push(*z);
        } else {
            neg.push(*z);
        }
    }
    // closure under conjugation: match each positive-imaginary member
    for z in &pos {
        let want = z.conj();
        match neg
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - want).norm().partial_cmp(&(*b - want).norm()).unwrap())
        {
            Some((k, partner)) if (*partner - want).norm() <= 1e-12 * want.norm().max(1.0) => {
                neg.remove(k);
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "spectrum is not closed under conjugation near {:+.6}{:+.6}i",
                    z.re, z.im
                )))
            }
        }
    }
    if !neg.is_empty() {
        return Err(Error::InvalidInput(
            "spectrum is not closed under conjugation".into(),
        ));
    }

    let mut b = DMatrix::zeros(n, n);
    let mut k = 0;
    for lam in reals {
        b[(k, k)] = lam;
        k += 1;
    }
    for z in pos {
        b[(k, k)] = z.re;
        b[(k, k + 1)] = -z.im;
        b[(k + 1, k)] = z.im;
        b[(k + 1, k + 1)] = z.re;
        k += 2;
    }
    Ok(b)
}

/// Random observable model with the prescribed spectrum: `A = T B T^-1`
/// with a well-conditioned random basis change, and a random output map
/// resampled until the extended observability matrix for the requested
/// delay order `s` has full column rank.
pub fn random_observable_system(
    n: usize,
    m: usize,
    spectrum: &[Complex<f64>],
    s: usize,
    seed: u64,
) -> Result<StateSpaceModel> {
    if n == 0 || m == 0 || s == 0 {
        return Err(Error::InvalidInput("n, m, s must all be at least 1".into()));
    }
    if spectrum.len() != n {
        return Err(Error::InvalidInput(format!(
            "spectrum has {} entries but order is {n}",
            spectrum.len()
        )));
    }
    if m * s < n {
        return Err(Error::Observability(format!(
            "order-{n} system cannot be observable with m*s = {}",
            m * s
        )));
    }
    let block = modal_form(spectrum)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut basis = None;
    for _ in 0..MAX_RESAMPLE {
        let t = gaussian_matrix(&mut rng, n, n);
        if crate::matdecomp::condition_number(&t)? < 100.0 {
            basis = Some(t);
            break;
        }
    }
    let t = basis.ok_or_else(|| {
        Error::InvalidInput("could not sample a well-conditioned basis change".into())
    })?;
    let t_inv = t.clone().try_inverse().expect("condition < 100 implies invertible");
    let a = &t * block * t_inv;

    for _ in 0..MAX_RESAMPLE {
        let c = gaussian_matrix(&mut rng, m, n);
        let model = StateSpaceModel::new(a.clone(), c, s)?;
        let gamma = model.observability_matrix(s);
        if svd_econ(&gamma)?.rank == n {
            return Ok(model);
        }
    }
    Err(Error::Observability(format!(
        "could not sample an output map with observability index <= {s}"
    )))
}

/// Initial state with a nonzero component along every eigenvector, so a
/// noiseless trajectory excites all modes. Resamples until the smallest
/// mode coordinate is bounded away from zero.
pub fn exciting_initial_state(model: &StateSpaceModel, seed: u64) -> Result<DVector<f64>> {
    let e = eig(&model.a)?;
    let lu = e.eigenvectors.clone().lu();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESAMPLE {
        let x0 = DVector::from_fn(model.n, |_, _| {
            let mag: f64 = rng.random_range(0.5..1.5);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        });
        let rhs: DVector<Complex<f64>> = x0.map(|x| Complex::new(x, 0.0));
        if let Some(coeff) = lu.solve(&rhs) {
            let min = coeff.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            if min >= 1e-3 * x0.norm() {
                return Ok(x0);
            }
        }
    }
    Err(Error::InvalidInput(
        "could not sample an initial state exciting all modes".into(),
    ))
}

/// Forward simulation `x_{k+1} = A x_k + w_k`, `y_k = C x_k + v_k` with
/// i.i.d. Gaussian process and output noise of the given standard deviation
/// (zero gives the exact trajectory).
pub fn simulate(
    model: &StateSpaceModel,
    x0: &DVector<f64>,
    steps: usize,
    noise_std: f64,
    seed: u64,
) -> Result<OutputSequence> {
    if x0.len() != model.n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {} but order is {}",
            x0.len(),
            model.n
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be at least 1".into()));
    }
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise standard deviation must be nonnegative, got {noise_std}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.clone();
    let mut samples = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut y = &model.c * &x;
        if noise_std > 0.0 {
            for v in y.iter_mut() {
                *v += noise_std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        samples.push(y);
        let mut next = &model.a * &x;
        if noise_std > 0.0 {
            for w in next.iter_mut() {
                *w += noise_std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        x = next;
    }
    OutputSequence::new(samples, None)
}

/// Video-like surrogate of a contaminant-driven brightening field: frames of
/// `width x height` pixels driven by a hidden three-state linear system with
/// one real growth mode and one decaying oscillatory pair, flattened
/// row-major to `m = width * height` vectors.
///
/// The output is exactly linear in the hidden state, so identification with
/// order 3 fits it to machine precision, and the spectrum forces a mode
/// census of one real mode plus one conjugate pair. `speed` scales the
/// growth rate monotonically. Sampling interval is 1/30 s.
pub fn lc_surrogate(
    width: usize,
    height: usize,
    frames: usize,
    speed: f64,
    seed: u64,
) -> Result<OutputSequence> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("frame dimensions must be at least 1".into()));
    }
    if width * height < 3 {
        return Err(Error::InvalidInput(
            "surrogate needs at least 3 pixels to observe 3 states".into(),
        ));
    }
    if frames < 2 {
        return Err(Error::InvalidInput("surrogate needs at least 2 frames".into()));
    }
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::InvalidInput(format!("speed must be positive, got {speed}")));
    }
    let m = width * height;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // hidden dynamics: growth mode rho plus a decaying oscillation
    let rho = 1.0 + 0.06 * speed;
    let r_osc = 0.985;
    let theta = (0.45 * speed).min(2.8);
    let spectrum = [
        Complex::new(rho, 0.0),
        Complex::new(r_osc * theta.cos(), r_osc * theta.sin()),
        Complex::new(r_osc * theta.cos(), -r_osc * theta.sin()),
    ];
    let a = modal_form(&spectrum)?;

    // spatial patterns: brightening that starts at the frame boundary plus
    // two smooth waves carrying the oscillatory pair
    let mut c = DMatrix::zeros(m, 3);
    let half_w = (width as f64 - 1.0) / 2.0;
    let half_h = (height as f64 - 1.0) / 2.0;
    let phase1: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let phase2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    for row in 0..height {
        for col in 0..width {
            let idx = row * width + col;
            let edge = (col.min(width - 1 - col).min(row).min(height - 1 - row)) as f64;
            let max_edge = half_w.min(half_h).max(1.0);
            let inward = (edge / max_edge).min(1.0);
            let jitter: f64 = rng.random_range(-0.03..0.03);
            c[(idx, 0)] = (1.0 - inward).powi(2) * (1.0 + jitter) + 0.02;

            let u = col as f64 / width as f64;
            let v = row as f64 / height as f64;
            c[(idx, 1)] = 0.4 * (std::f64::consts::TAU * (u + v) + phase1).cos();
            c[(idx, 2)] = 0.4 * (std::f64::consts::TAU * (u - v) + phase2).sin();
        }
    }

    let x0 = DVector::from_vec(vec![0.01, 0.006, 0.0]);
    let mut x = x0;
    let mut raw: Vec<DVector<f64>> = Vec::with_capacity(frames);
    let mut peak: f64 = 0.0;
    for _ in 0..frames {
        let y = &c * &x;
        peak = peak.max(y.amax());
        raw.push(y);
        x = &a * &x;
    }
    // normalize so the brightest pixel sits at 0.9; a scalar rescaling of
    // the output map, so exact linearity is preserved
    let gain = if peak > 0.0 { 0.9 / peak } else { 1.0 };
    for y in raw.iter_mut() {
        y.scale_mut(gain);
    }
    OutputSequence::new(raw, Some(1.0 / 30.0))
}

/// Generic dense regression instance: a random full window matrix sliced
/// into its overlapping past/future pair.
pub fn random_window_instance(ms: usize, ell: usize, seed: u64) -> HankelPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y_full = DMatrix::from_fn(ms, ell + 1, |_, _| rng.random_range(-1.0..1.0));
    HankelPair::from_full(y_full, 1, ms).expect("valid dimensions")
}

/// Regression instance whose past block has column space of the given rank.
pub fn rank_deficient_instance(ms: usize, ell: usize, rank: usize, seed: u64) -> HankelPair {
    assert!(rank >= 1 && rank < ms, "rank must be in 1..ms");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = DMatrix::from_fn(ms, rank, |_, _| rng.random_range(-1.0..1.0));
    let coeff = DMatrix::from_fn(rank, ell, |_, _| rng.random_range(-1.0..1.0));
    let y_past = basis * coeff;
    let y_future = DMatrix::from_fn(ms, ell, |_, _| rng.random_range(-1.0..1.0));
    HankelPair::from_parts(y_past, y_future, 1, ms).expect("valid dimensions")
}

/// Instance on which rank-1 truncation of the past data is strictly
/// suboptimal: the dominant direction of `y_past` carries no predictive
/// information, so projecting onto it discards the entire future.
pub fn tdmd_misaligned_instance() -> HankelPair {
    let y_past = DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 1.0]);
    let y_future = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 5.0]);
    HankelPair::from_parts(y_past, y_future, 2, 1).expect("valid dimensions")
}
