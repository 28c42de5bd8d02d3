//! Rank-constrained matrix regression in closed form.
//!
//! Solves `min ||Y_f - Theta Y_p||_F  s.t.  rank(Theta) <= n` by SVD:
//! with the economic SVD `Y_p = U2 S2 V2^T` (restricted to numerically
//! nonzero singular values) and the n-truncated SVD `Z_(n) = U1 S1 V1^T`
//! of `Z = Y_f V2`, the minimizer is `Theta* = Z_(n) S2^-1 U2^T`, kept in
//! factored form `Theta* = P Q^T` with `P = U1`, `Q = U2 S2^-1 V1 S1`.
//! The factored form is what makes the large-output regime workable:
//! `Theta*` itself is ms x ms and is never materialized on the hot path.

use nalgebra::DMatrix;

use crate::embedding::HankelPair;
use crate::error::{Error, Result};
use crate::matdecomp::{degenerate_truncation, pinv, svd_econ};

/// Factored solution `Theta* = P Q^T` of the rank-constrained regression.
#[derive(Debug, Clone)]
pub struct LowRankMap {
    /// Left factor, ms x r, orthonormal columns.
    pub p: DMatrix<f64>,
    /// Right factor, ms x r.
    pub q: DMatrix<f64>,
    /// Effective rank r (at most the requested bound; smaller when the data
    /// itself has lower rank, which is still feasible and optimal since the
    /// constraint is an inequality).
    pub rank: usize,
    pub requested_n: usize,
    /// `||y_future - Theta* y_past||_F`.
    pub residual_frobenius: f64,
    /// Set when the truncation boundary cuts through near-equal singular
    /// values of Z, in which case the minimizer is not unique.
    pub degenerate_truncation: bool,
    /// Output dimension of the originating data.
    pub m: usize,
    /// Delay order of the originating data.
    pub s: usize,
}

impl LowRankMap {
    /// Materializes `Theta* = P Q^T`. Quadratic in the window size; intended
    /// for desk-scale analysis and tests.
    pub fn theta(&self) -> DMatrix<f64> {
        &self.p * self.q.transpose()
    }

    /// `Theta* X` computed through the factors as `P (Q^T X)`.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.p * (self.q.transpose() * x)
    }

    /// `Theta* v` for a single stacked window.
    pub fn apply_vec(&self, v: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        &self.p * (self.q.transpose() * v)
    }

    /// Relative residual `||y_future - Theta* y_past||_F / ||y_future||_F`.
    pub fn relative_residual(&self, h: &HankelPair) -> f64 {
        let denom = h.y_future.norm();
        if denom == 0.0 {
            0.0
        } else {
            self.residual_frobenius / denom
        }
    }
}

/// Closed-form global minimizer of the rank-constrained regression.
pub fn solve_rank_constrained(h: &HankelPair, n: usize) -> Result<LowRankMap> {
    if n == 0 {
        return Err(Error::InvalidInput("rank bound n must be at least 1".into()));
    }
    let past = svd_econ(&h.y_past)?.nonzero();
    let ms = h.window_dim();

    if past.rank == 0 {
        // zero past data: any map is optimal, return the minimum-norm one
        let residual = h.y_future.norm();
        return Ok(LowRankMap {
            p: DMatrix::zeros(ms, 0),
            q: DMatrix::zeros(ms, 0),
            rank: 0,
            requested_n: n,
            residual_frobenius: residual,
            degenerate_truncation: false,
            m: h.m,
            s: h.s,
        });
    }

    let z = &h.y_future * &past.v;
    let zsvd = svd_econ(&z)?;
    let degenerate = degenerate_truncation(&zsvd.s, n, zsvd.rank);
    let zn = zsvd.take(n.min(zsvd.rank));

    let p = zn.u.clone();
    // Q = U2 S2^-1 V1 S1
    let mut v1s1 = zn.v.clone();
    for (j, &sv) in zn.s.iter().enumerate() {
        v1s1.column_mut(j).scale_mut(sv);
    }
    for (i, &sv) in past.s.iter().enumerate() {
        v1s1.row_mut(i).scale_mut(1.0 / sv);
    }
    let q = &past.u * v1s1;

    let residual = (&h.y_future - &p * (q.transpose() * &h.y_past)).norm();

    Ok(LowRankMap {
        rank: zn.s.len(),
        p,
        q,
        requested_n: n,
        residual_frobenius: residual,
        degenerate_truncation: degenerate,
        m: h.m,
        s: h.s,
    })
}

/// Unconstrained least-squares minimizer `Theta_full = Z S2^-1 U2^T`,
/// materialized densely (ms x ms).
pub fn solve_full_rank(h: &HankelPair) -> Result<DMatrix<f64>> {
    let past = svd_econ(&h.y_past)?.nonzero();
    let ms = h.window_dim();
    if past.rank == 0 {
        return Ok(DMatrix::zeros(ms, ms));
    }
    let mut v2s2inv = past.v.clone();
    for (j, &sv) in past.s.iter().enumerate() {
        v2s2inv.column_mut(j).scale_mut(1.0 / sv);
    }
    Ok(&h.y_future * v2s2inv * past.u.transpose())
}

/// Optimal objective value of the rank-constrained regression, from the
/// orthogonal decomposition
/// `||Y_f - Theta Y_p||_F^2 = ||Z - Theta U2 S2||_F^2 + ||Y_f V2_perp||_F^2`:
/// the constant term plus the Eckart-Young tail of Z.
pub fn optimal_objective(h: &HankelPair, n: usize) -> Result<f64> {
    let past = svd_econ(&h.y_past)?.nonzero();
    if past.rank == 0 {
        return Ok(h.y_future.norm());
    }
    let z = &h.y_future * &past.v;
    let zsvd = svd_econ(&z)?;
    // ||Y_f V2_perp||_F = ||Y_f - Z V2^T||_F; the entrywise difference
    // avoids the cancellation that ||Y_f||^2 - ||Z||^2 suffers when the
    // future lies almost entirely in the past's row space
    let off_row_space = (&h.y_future - &z * past.v.transpose()).norm_squared();
    let tail: f64 = zsvd.s.iter().skip(n).map(|x| x * x).sum();
    Ok((off_row_space + tail).sqrt())
}

/// Residual of an arbitrary candidate map on the pair.
pub fn map_objective(candidate: &DMatrix<f64>, h: &HankelPair) -> f64 {
    (&h.y_future - candidate * &h.y_past).norm()
}

/// Both sides of the full-vs-truncated residual-gap identity
/// `||Theta_full Y_p - Theta* Y_p||_F = sqrt(sum_{k>n} sigma_k(Z)^2)`,
/// computed by independent routes.
#[derive(Debug, Clone, Copy)]
pub struct ResidualGap {
    /// Left side, by explicit matrix products.
    pub direct: f64,
    /// Right side, from the tail singular values of Z.
    pub from_singular_values: f64,
}

pub fn residual_gap(h: &HankelPair, n: usize) -> Result<ResidualGap> {
    let full = solve_full_rank(h)?;
    let truncated = solve_rank_constrained(h, n)?;
    let direct = (&full * &h.y_past - truncated.apply(&h.y_past)).norm();

    let past = svd_econ(&h.y_past)?.nonzero();
    let from_singular_values = if past.rank == 0 {
        0.0
    } else {
        let z = &h.y_future * &past.v;
        let zsvd = svd_econ(&z)?;
        zsvd.s.iter().skip(n).map(|x| x * x).sum::<f64>().sqrt()
    };
    debug_assert!(
        (direct - from_singular_values).abs() <= 1e-8 * h.y_future.norm().max(1.0),
        "residual-gap identity violated: {direct} vs {from_singular_values}"
    );
    Ok(ResidualGap {
        direct,
        from_singular_values,
    })
}

/// Outcome of checking a candidate against the solution characterization:
/// a map solves the regression iff it attains the optimal objective and
/// respects the rank bound.
#[derive(Debug, Clone, Copy)]
pub struct SolutionCheck {
    pub is_solution: bool,
    pub objective: f64,
    pub optimal_objective: f64,
    /// `objective - optimal_objective`.
    pub objective_gap: f64,
    /// Numerical rank of the candidate.
    pub rank: usize,
}

pub fn is_solution(candidate: &DMatrix<f64>, h: &HankelPair, n: usize) -> Result<SolutionCheck> {
    let ms = h.window_dim();
    if candidate.nrows() != ms || candidate.ncols() != ms {
        return Err(Error::DimensionMismatch(format!(
            "candidate must be {ms}x{ms}, got {}x{}",
            candidate.nrows(),
            candidate.ncols()
        )));
    }
    let rank = svd_econ(candidate)?.rank;
    let objective = map_objective(candidate, h);
    let optimal = optimal_objective(h, n)?;
    let gap = objective - optimal;
    let tol = 1e-8 * h.y_future.norm().max(1.0);
    Ok(SolutionCheck {
        is_solution: rank <= n && gap <= tol,
        objective,
        optimal_objective: optimal,
        objective_gap: gap,
        rank,
    })
}

/// The minimizer is unique iff `y_past` has full row rank and the truncation
/// boundary of Z is not degenerate.
pub fn is_unique(h: &HankelPair, n: usize) -> Result<bool> {
    let past_rank = svd_econ(&h.y_past)?.rank;
    let map = solve_rank_constrained(h, n)?;
    Ok(past_rank == h.window_dim() && !map.degenerate_truncation)
}

/// Prediction-error objective `||y_future - gamma x_past||_F` of a
/// state-sequence candidate, with the row-space feasibility constraint
/// `row(x) subseteq row(y_full)` checked via `x Y^+ Y = x`.
pub fn sid_objective(gamma: &DMatrix<f64>, x: &DMatrix<f64>, h: &HankelPair) -> Result<f64> {
    if x.ncols() != h.ell + 1 {
        return Err(Error::DimensionMismatch(format!(
            "state sequence must have {} columns, got {}",
            h.ell + 1,
            x.ncols()
        )));
    }
    if gamma.ncols() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "gamma has {} columns but state sequence has {} rows",
            gamma.ncols(),
            x.nrows()
        )));
    }
    if gamma.nrows() != h.window_dim() {
        return Err(Error::DimensionMismatch(format!(
            "gamma must have {} rows, got {}",
            h.window_dim(),
            gamma.nrows()
        )));
    }
    let y_pinv = pinv(&h.y_full)?;
    let row_proj = y_pinv * &h.y_full; // (ell+1) x (ell+1)
    let violation = (x * row_proj - x).norm();
    if violation > 1e-8 * x.norm().max(1.0) {
        return Err(Error::Infeasible(format!(
            "state sequence leaves the data row space (violation {violation:.3e})"
        )));
    }
    let x_past = x.columns(0, h.ell);
    Ok((&h.y_future - gamma * x_past).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{hankel_embed, OutputSequence};
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_pair(ms: usize, ell: usize, seed: u64) -> HankelPair {
        HankelPair::from_full(random_matrix(ms, ell + 1, seed), 1, ms).unwrap()
    }

    fn geometric_pair() -> HankelPair {
        let seq = OutputSequence::new(
            (0..5).map(|k| DVector::from_vec(vec![(2.0f64).powi(k)])).collect(),
            None,
        )
        .unwrap();
        hankel_embed(&seq, 1).unwrap()
    }

    #[test]
    fn solve_geometric_sequence() {
        let h = geometric_pair();
        let map = solve_rank_constrained(&h, 1).unwrap();
        assert_eq!(map.rank, 1);
        assert!((map.theta()[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(map.residual_frobenius < 1e-12);
        assert!((map.p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((map.q[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn solve_eckart_young_diagonal() {
        let h = HankelPair::from_parts(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]),
            2,
            1,
        )
        .unwrap();
        let map = solve_rank_constrained(&h, 1).unwrap();
        let theta = map.theta();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 3.0]);
        assert!((theta - expected).norm() < 1e-12);
        assert!((map.residual_frobenius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn solve_exact_low_rank_model() {
        // y_future = M_true y_past with rank(M_true) = 2
        let y_past = random_matrix(6, 12, 40);
        let m_true = random_matrix(6, 2, 41) * random_matrix(2, 6, 42);
        let y_future = &m_true * &y_past;
        let h = HankelPair::from_parts(y_past.clone(), y_future.clone(), 1, 6).unwrap();
        let map = solve_rank_constrained(&h, 2).unwrap();
        assert!(map.residual_frobenius <= 1e-8 * y_future.norm());
        assert!((map.apply(&y_past) - &y_future).norm() <= 1e-8 * y_future.norm());
    }

    #[test]
    fn random_candidates_never_beat_the_minimizer() {
        let h = random_pair(6, 12, 45);
        let n = 2;
        let map = solve_rank_constrained(&h, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for _ in 0..1000 {
            let a = DMatrix::from_fn(6, n, |_, _| rng.random_range(-2.0..2.0));
            let b = DMatrix::from_fn(6, n, |_, _| rng.random_range(-2.0..2.0));
            let candidate = a * b.transpose();
            assert!(map_objective(&candidate, &h) >= map.residual_frobenius - 1e-10);
        }
    }

    #[test]
    fn projection_identity_holds() {
        let h = random_pair(5, 9, 50);
        let map = solve_rank_constrained(&h, 2).unwrap();
        let u2 = svd_econ(&h.y_past).unwrap().nonzero().u;
        let theta = map.theta();
        let projected = &theta * &u2 * u2.transpose();
        assert!((projected - &theta).norm() <= 1e-8 * theta.norm().max(1.0));
    }

    #[test]
    fn objective_decomposition_identity() {
        for seed in [1u64, 2, 3, 4, 5] {
            let h = random_pair(6, 10, seed);
            for n in 1..=4 {
                let map = solve_rank_constrained(&h, n).unwrap();
                let formula = optimal_objective(&h, n).unwrap();
                let scale = h.y_future.norm().max(1.0);
                assert!(
                    (map.residual_frobenius - formula).abs() <= 1e-8 * scale,
                    "seed {seed} n {n}: direct {} vs formula {}",
                    map.residual_frobenius,
                    formula
                );
            }
        }
    }

    #[test]
    fn residual_monotone_in_rank() {
        let h = random_pair(6, 11, 60);
        let mut last = f64::INFINITY;
        for n in 1..=6 {
            let map = solve_rank_constrained(&h, n).unwrap();
            assert!(map.residual_frobenius <= last + 1e-12);
            last = map.residual_frobenius;
        }
    }

    #[test]
    fn full_rank_matches_inverse_on_square_data() {
        let y_past = random_matrix(4, 4, 70);
        let y_future = random_matrix(4, 4, 71);
        let h = HankelPair::from_parts(y_past.clone(), y_future.clone(), 1, 4).unwrap();
        let full = solve_full_rank(&h).unwrap();
        let direct = &y_future * y_past.try_inverse().unwrap();
        assert!((full - direct).norm() < 1e-8);
    }

    #[test]
    fn full_rank_agrees_with_unconstrained_solve() {
        let h = random_pair(4, 9, 72);
        let full = solve_full_rank(&h).unwrap();
        let map = solve_rank_constrained(&h, 4).unwrap();
        assert!((full - map.theta()).norm() < 1e-8);
        for n in 1..4 {
            let truncated = solve_rank_constrained(&h, n).unwrap();
            let full_obj = map_objective(&solve_full_rank(&h).unwrap(), &h);
            assert!(full_obj <= truncated.residual_frobenius + 1e-12);
        }
    }

    #[test]
    fn residual_gap_identity() {
        let h = random_pair(5, 9, 80);
        for n in 1..=5 {
            let gap = residual_gap(&h, n).unwrap();
            let scale = h.y_future.norm().max(1.0);
            assert!(
                (gap.direct - gap.from_singular_values).abs() <= 1e-8 * scale,
                "n {n}: {} vs {}",
                gap.direct,
                gap.from_singular_values
            );
        }
        // no truncation: gap 0
        let g = residual_gap(&h, 5).unwrap();
        assert!(g.direct <= 1e-8);
    }

    #[test]
    fn residual_gap_zero_on_exact_rank_data() {
        let y_past = random_matrix(5, 8, 81);
        let m_true = random_matrix(5, 2, 82) * random_matrix(2, 5, 83);
        let h = HankelPair::from_parts(y_past.clone(), &m_true * &y_past, 1, 5).unwrap();
        let g = residual_gap(&h, 2).unwrap();
        assert!(g.direct <= 1e-8 * h.y_future.norm());
        assert!(g.from_singular_values <= 1e-8 * h.y_future.norm());
    }

    #[test]
    fn is_solution_accepts_optimum_rejects_zero() {
        let h = random_pair(4, 8, 90);
        let map = solve_rank_constrained(&h, 2).unwrap();
        let check = is_solution(&map.theta(), &h, 2).unwrap();
        assert!(check.is_solution, "gap {}", check.objective_gap);

        let zero = DMatrix::zeros(4, 4);
        let check0 = is_solution(&zero, &h, 2).unwrap();
        assert!(!check0.is_solution);
    }

    #[test]
    fn alternate_solution_on_rank_deficient_past() {
        // rank-deficient y_past: build from a 3-dim column space in R^5
        let basis = random_matrix(5, 3, 91);
        let y_past = &basis * random_matrix(3, 9, 92);
        let y_future = random_matrix(5, 9, 93);
        let h = HankelPair::from_parts(y_past.clone(), y_future, 1, 5).unwrap();
        let n = 2;
        let map = solve_rank_constrained(&h, n).unwrap();
        let theta_star = map.theta();

        // q_perp orthogonal to col(y_past); theta' = theta* + p1 q_perp^T
        let comp = crate::matdecomp::orthonormal_complement(&y_past).unwrap();
        assert!(comp.ncols() >= 1);
        let q_perp = comp.column(0).into_owned();
        let p1 = map.p.column(0).into_owned();
        let alt = &theta_star + &p1 * q_perp.transpose();

        let check = is_solution(&alt, &h, n).unwrap();
        assert!(check.is_solution, "gap {} rank {}", check.objective_gap, check.rank);
        // minimum-norm property of theta*
        assert!(theta_star.norm() <= alt.norm() + 1e-10);
        assert!(!is_unique(&h, n).unwrap());
    }

    #[test]
    fn uniqueness_conditions() {
        let h = HankelPair::from_parts(
            DMatrix::identity(3, 3),
            random_matrix(3, 3, 95),
            1,
            3,
        )
        .unwrap();
        assert!(is_unique(&h, 2).unwrap());

        // zero row in y_past
        let mut y_past = random_matrix(3, 6, 96);
        y_past.row_mut(1).fill(0.0);
        let h2 = HankelPair::from_parts(y_past, random_matrix(3, 6, 97), 1, 3).unwrap();
        assert!(!is_unique(&h2, 2).unwrap());

        // more rows than columns cannot have full row rank
        let h3 = random_pair(6, 4, 98);
        assert!(!is_unique(&h3, 2).unwrap());
    }

    #[test]
    fn degenerate_truncation_boundary_defeats_uniqueness() {
        // equal singular values of Z straddling the cut: the minimizer is a
        // specific realization, flagged as such, and not unique even though
        // the past has full row rank
        let h = HankelPair::from_parts(
            DMatrix::identity(4, 4),
            DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[3.0, 2.0, 2.0, 1.0])),
            4,
            1,
        )
        .unwrap();
        let map = solve_rank_constrained(&h, 2).unwrap();
        assert!(map.degenerate_truncation);
        assert!(!is_unique(&h, 2).unwrap());
        // boundary clear of the tie: unique again
        let map3 = solve_rank_constrained(&h, 3).unwrap();
        assert!(!map3.degenerate_truncation);
        assert!(is_unique(&h, 3).unwrap());
    }

    #[test]
    fn sid_objective_examples() {
        let h = random_pair(4, 7, 99);
        // x = 0 is feasible, objective is ||y_future||
        let gamma = random_matrix(4, 2, 100);
        let x0 = DMatrix::zeros(2, 8);
        let obj = sid_objective(&gamma, &x0, &h).unwrap();
        assert!((obj - h.y_future.norm()).abs() < 1e-12);

        // a row outside row(Y) is infeasible: use a left null vector of Y^T
        let comp = crate::matdecomp::orthonormal_complement(&h.y_full.transpose()).unwrap();
        if comp.ncols() > 0 {
            let bad = DMatrix::from_fn(1, h.ell + 1, |_, j| comp[(j, 0)]);
            let err = sid_objective(&random_matrix(4, 1, 101), &bad, &h);
            assert!(matches!(err, Err(Error::Infeasible(_))));
        }
    }

    #[test]
    fn sid_objective_matches_regression_residual() {
        // Feeding (P, Q^T Y) back into the state-sequence objective must
        // reproduce the regression residual.
        let h = random_pair(5, 10, 110);
        let map = solve_rank_constrained(&h, 2).unwrap();
        let x = map.q.transpose() * &h.y_full;
        let obj = sid_objective(&map.p, &x, &h).unwrap();
        assert!((obj - map.residual_frobenius).abs() <= 1e-8 * map.residual_frobenius.max(1.0));
    }

    #[test]
    fn effective_rank_capped_by_data_rank() {
        let y_past = random_matrix(4, 1, 120) * random_matrix(1, 8, 121);
        let y_future = random_matrix(4, 1, 122) * random_matrix(1, 8, 123);
        let h = HankelPair::from_parts(y_past, y_future, 1, 4).unwrap();
        let map = solve_rank_constrained(&h, 3).unwrap();
        assert!(map.rank <= 1);
        assert_eq!(map.requested_n, 3);
    }
}
