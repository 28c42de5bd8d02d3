//! Shared helpers for the integration suites: an independent brute-force
//! oracle for the rank-constrained regression and small utilities.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use siddmd::embedding::HankelPair;

/// `||y_future - theta y_past||_F` for an explicit candidate.
pub fn objective(theta: &DMatrix<f64>, h: &HankelPair) -> f64 {
    (&h.y_future - theta * &h.y_past).norm()
}

/// SVD pseudoinverse through nalgebra's own kernel, so the oracle shares no
/// code with the implementation path it checks.
fn pinv_ls(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eps = f64::EPSILON * m.nrows().max(m.ncols()) as f64 * m.norm().max(1.0);
    m.clone()
        .svd(true, true)
        .pseudo_inverse(eps)
        .expect("svd requested u and v")
}

/// Best objective over `candidates` random rank-n factorizations plus
/// `als_starts` alternating-least-squares refinements (50 iterations,
/// 1e-10 objective-change tolerance), all from an explicit seed.
pub fn brute_force_best_objective(
    h: &HankelPair,
    n: usize,
    candidates: usize,
    als_starts: usize,
    seed: u64,
) -> f64 {
    let ms = h.window_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data_scale = (h.y_future.norm() / h.y_past.norm().max(1e-12)).max(0.1);
    let mut best = f64::INFINITY;

    for _ in 0..candidates {
        let a = gaussian(&mut rng, ms, n).scale(data_scale);
        let b = gaussian(&mut rng, ms, n);
        best = best.min(objective(&(a * b.transpose()), h));
    }

    for _ in 0..als_starts {
        best = best.min(als_refine(h, n, &mut rng));
    }
    best
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Alternating least squares on `Theta = A B^T`:
/// fixing B, the optimal A is `Y_f (B^T Y_p)^+`; fixing A, the optimal
/// `B^T = A^+ Y_f Y_p^+`.
fn als_refine(h: &HankelPair, n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let ms = h.window_dim();
    let mut b = gaussian(rng, ms, n);
    let mut prev = f64::INFINITY;
    let mut current = prev;
    for _ in 0..50 {
        let w = b.transpose() * &h.y_past;
        let a = &h.y_future * pinv_ls(&w);
        let bt = pinv_ls(&a) * &h.y_future * pinv_ls(&h.y_past);
        b = bt.transpose();
        current = objective(&(&a * b.transpose()), h);
        if (prev - current).abs() < 1e-10 {
            break;
        }
        prev = current;
    }
    current
}

/// Largest distance under a greedy matching of the two eigenvalue multisets.
pub fn eigenvalue_multiset_error(got: &[Complex<f64>], want: &[Complex<f64>]) -> f64 {
    assert_eq!(got.len(), want.len(), "multiset sizes differ");
    let mut remaining: Vec<Complex<f64>> = got.to_vec();
    let mut worst: f64 = 0.0;
    for w in want {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - w).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("non-empty");
        remaining.remove(idx);
        worst = worst.max(dist);
    }
    worst
}

/// Random spectrum of the given order, closed under conjugation, with all
/// moduli inside `[lo, hi]` and pairwise separation at least `min_gap`.
pub fn random_spectrum(
    n: usize,
    lo: f64,
    hi: f64,
    min_gap: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Complex<f64>> {
    loop {
        let mut spec: Vec<Complex<f64>> = Vec::with_capacity(n);
        while spec.len() < n {
            let modulus: f64 = rng.random_range(lo..hi);
            if n - spec.len() >= 2 && rng.random_bool(0.5) {
                let angle: f64 = rng.random_range(0.25..2.6);
                spec.push(Complex::new(modulus * angle.cos(), modulus * angle.sin()));
                spec.push(Complex::new(modulus * angle.cos(), -modulus * angle.sin()));
            } else {
                let sign = if rng.random_bool(0.8) { 1.0 } else { -1.0 };
                spec.push(Complex::new(sign * modulus, 0.0));
            }
        }
        let separated = (0..n).all(|i| (0..i).all(|j| (spec[i] - spec[j]).norm() >= min_gap));
        if separated {
            return spec;
        }
    }
}
