//! Constructive mappings between the state-space and extended-AR model
//! forms, and between solutions of the two identification problems. These
//! are the oracles the test suite uses to certify the equivalences
//! numerically.

use nalgebra::DMatrix;

use crate::embedding::HankelPair;
use crate::error::{Error, Result};
use crate::lowrank::LowRankMap;
use crate::matdecomp::{orthonormal_complement, pinv, svd_econ};
use crate::sysid::StateSpaceModel;

/// Window-advance map of an exact state-space model:
/// `Theta = Gamma_s A Gamma_s^+`, which advances every stacked window of a
/// noiseless trajectory exactly. Requires observability index at most `s`.
pub fn ar_from_ss(model: &StateSpaceModel, s: usize) -> Result<DMatrix<f64>> {
    if s == 0 {
        return Err(Error::InvalidInput("delay order s must be at least 1".into()));
    }
    let gamma = model.observability_matrix(s);
    if svd_econ(&gamma)?.rank < model.n {
        return Err(Error::Observability(format!(
            "extended observability matrix is rank-deficient at s = {s}; \
             the observability index exceeds s"
        )));
    }
    Ok(&gamma * &model.a * pinv(&gamma)?)
}

/// Orthonormal basis of the column span of a matrix of observed windows.
pub fn window_basis(windows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(svd_econ(windows)?.nonzero().u)
}

/// State-space model of order `n` from a rank-bounded window-advance map.
///
/// Projects the map onto the observed window span, factors it as `P Q^T`
/// through its SVD, reads off `A = Q^T P` and `C = P[1:m, :]`, and
/// zero-pads to order `n` with output columns orthogonal to the extracted
/// ones. On noiseless data the result reproduces the trajectory exactly.
pub fn ss_from_ar(
    theta: &DMatrix<f64>,
    window_basis: &DMatrix<f64>,
    n: usize,
    m: usize,
) -> Result<StateSpaceModel> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("n and m must be at least 1".into()));
    }
    let ms = theta.nrows();
    if !theta.is_square() || ms == 0 || !ms.is_multiple_of(m) {
        return Err(Error::DimensionMismatch(format!(
            "map must be square with row count divisible by m = {m}, got {}x{}",
            theta.nrows(),
            theta.ncols()
        )));
    }
    let s = ms / m;
    if window_basis.nrows() != ms {
        return Err(Error::DimensionMismatch(format!(
            "window basis must have {ms} rows, got {}",
            window_basis.nrows()
        )));
    }
    if svd_econ(theta)?.rank > n {
        return Err(Error::InvalidInput(format!(
            "map has rank above the requested order {n}"
        )));
    }

    let projected = window_basis * (window_basis.transpose() * theta);
    let fact = svd_econ(&projected)?.nonzero();
    let r = fact.rank.min(n);

    let (a_small, c_small) = if r == 0 {
        (DMatrix::zeros(0, 0), DMatrix::zeros(m, 0))
    } else {
        let mut p = fact.u.columns(0, r).into_owned();
        for (j, &sv) in fact.s.iter().take(r).enumerate() {
            p.column_mut(j).scale_mut(sv);
        }
        let q = fact.v.columns(0, r).into_owned();
        (q.transpose() * &p, p.rows(0, m).into_owned())
    };

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (r, r)).copy_from(&a_small);

    let mut c = DMatrix::zeros(m, n);
    c.columns_mut(0, r).copy_from(&c_small);
    if r < n {
        let comp = if r == 0 {
            DMatrix::identity(m, m)
        } else {
            orthonormal_complement(&c_small)?
        };
        if comp.ncols() < n - r {
            return Err(Error::DimensionMismatch(format!(
                "cannot complete the output map: need {} orthogonal columns in \
                 dimension {m} but only {} remain",
                n - r,
                comp.ncols()
            )));
        }
        c.columns_mut(r, n - r).copy_from(&comp.columns(0, n - r));
    }
    StateSpaceModel::new(a, c, s)
}

/// Solution transfer from the state-sequence problem to the regression:
/// `Theta = Gamma X_p Y_p^+`. When `(gamma, x)` is optimal, the result
/// attains the regression optimum.
pub fn map_sid_to_dmd(
    gamma: &DMatrix<f64>,
    x: &DMatrix<f64>,
    h: &HankelPair,
) -> Result<DMatrix<f64>> {
    if x.ncols() != h.ell + 1 || gamma.ncols() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "state sequence must be {} x {}, gamma columns must match its rows",
            gamma.ncols(),
            h.ell + 1
        )));
    }
    let x_past = x.columns(0, h.ell).into_owned();
    Ok(gamma * (x_past * pinv(&h.y_past)?))
}

/// Solution transfer from the regression to the state-sequence problem:
/// the factored minimizer packages directly as `(P, Q^T Y)`.
pub fn map_dmd_to_sid(map: &LowRankMap, h: &HankelPair) -> (DMatrix<f64>, DMatrix<f64>) {
    (map.p.clone(), crate::sysid::estimate_states(map, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::upc_identify;
    use crate::datagen::{
        exciting_initial_state, random_observable_system, random_window_instance, simulate,
    };
    use crate::embedding::hankel_embed;
    use crate::lowrank::{is_solution, sid_objective, solve_rank_constrained};
    use crate::matdecomp::eig;
    use nalgebra::{Complex, DVector};

    #[test]
    fn ar_from_scalar_model() {
        let model = StateSpaceModel::new(
            DMatrix::from_row_slice(1, 1, &[2.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            1,
        )
        .unwrap();
        let theta = ar_from_ss(&model, 1).unwrap();
        assert!((theta[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ar_from_scalar_model_with_delay_two() {
        // Gamma_2 = [1; 2], Theta = (2/5) [[1, 2], [2, 4]]
        let model = StateSpaceModel::new(
            DMatrix::from_row_slice(1, 1, &[2.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            2,
        )
        .unwrap();
        let theta = ar_from_ss(&model, 2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.4, 0.8, 0.8, 1.6]);
        assert!((&theta - expected).amax() < 1e-12);
        // advances windows of y_k = 2^k exactly
        let w0 = DVector::from_vec(vec![1.0, 2.0]);
        let w1 = &theta * &w0;
        assert!((w1 - DVector::from_vec(vec![2.0, 4.0])).amax() < 1e-12);
    }

    #[test]
    fn ar_map_advances_noiseless_windows() {
        let spectrum = [
            Complex::new(0.9, 0.0),
            Complex::new(0.5, 0.5),
            Complex::new(0.5, -0.5),
        ];
        let sys = random_observable_system(3, 2, &spectrum, 3, 300).unwrap();
        let x0 = exciting_initial_state(&sys, 301).unwrap();
        let seq = simulate(&sys, &x0, 25, 0.0, 0).unwrap();
        let theta = ar_from_ss(&sys, 3).unwrap();
        let h = hankel_embed(&seq, 3).unwrap();
        let advanced = &theta * &h.y_past;
        assert!((advanced - &h.y_future).norm() <= 1e-8 * h.y_future.norm());
    }

    #[test]
    fn ar_from_ss_rejects_unobservable_horizon() {
        // two states, one output, s = 1: Gamma_1 = C is 1x2, rank-deficient
        let model = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.5]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            1,
        )
        .unwrap();
        assert!(matches!(ar_from_ss(&model, 1), Err(Error::Observability(_))));
    }

    #[test]
    fn round_trip_preserves_spectrum_and_trajectory() {
        let spectrum = [
            Complex::new(0.95, 0.0),
            Complex::new(0.7, 0.35),
            Complex::new(0.7, -0.35),
        ];
        let sys = random_observable_system(3, 2, &spectrum, 4, 310).unwrap();
        let x0 = exciting_initial_state(&sys, 311).unwrap();
        let s = 4;
        let horizon = 50;
        let seq = simulate(&sys, &x0, horizon + s + 2, 0.0, 0).unwrap();
        let h = hankel_embed(&seq, s).unwrap();

        let theta = ar_from_ss(&sys, s).unwrap();
        let basis = window_basis(&h.y_full).unwrap();
        let rebuilt = ss_from_ar(&theta, &basis, 3, sys.m).unwrap();

        // eigenvalue multiset within 1e-6
        let mut got = eig(&rebuilt.a).unwrap().eigenvalues;
        for want in &spectrum {
            let (idx, dist) = got
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - want).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert!(dist < 1e-6, "eigenvalue {want} off by {dist}");
            got.remove(idx);
        }

        // matched initial windows give identical outputs over the horizon
        let fact = svd_econ(&(basis.clone() * (basis.transpose() * &theta))).unwrap().nonzero();
        let x1 = fact.v.transpose() * h.y_full.column(0);
        let mut state = DVector::zeros(rebuilt.n);
        state.rows_mut(0, x1.len()).copy_from(&x1);
        let mut worst: f64 = 0.0;
        for k in 1..=horizon {
            let y_hat = &rebuilt.c * &state;
            let truth = seq.sample(k);
            worst = worst.max((&y_hat - truth).norm() / truth.norm().max(1e-12));
            state = &rebuilt.a * state;
        }
        assert!(worst <= 1e-8, "trajectory mismatch {worst}");
    }

    #[test]
    fn zero_map_gives_zero_response() {
        let theta = DMatrix::zeros(4, 4);
        let basis = DMatrix::identity(4, 4);
        let model = ss_from_ar(&theta, &basis, 2, 2).unwrap();
        assert_eq!(model.a.norm(), 0.0);
        let y = &model.c * DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(y.norm(), 0.0);
    }

    #[test]
    fn padding_adds_zero_eigenvalues() {
        // rank-1 map, order 3: exactly two zero eigenvalues from padding
        let model0 = StateSpaceModel::new(
            DMatrix::from_row_slice(1, 1, &[0.8]),
            DMatrix::from_row_slice(3, 1, &[1.0, 0.5, -0.2]),
            2,
        )
        .unwrap();
        let theta = ar_from_ss(&model0, 2).unwrap();
        let x0 = DVector::from_vec(vec![1.0]);
        let seq = simulate(&model0, &x0, 12, 0.0, 0).unwrap();
        let h = hankel_embed(&seq, 2).unwrap();
        let basis = window_basis(&h.y_full).unwrap();
        let rebuilt = ss_from_ar(&theta, &basis, 3, 3).unwrap();
        let eigs = eig(&rebuilt.a).unwrap().eigenvalues;
        let zeros = eigs.iter().filter(|z| z.norm() < 1e-9).count();
        assert_eq!(zeros, 2);
        assert!(eigs.iter().any(|z| (z.re - 0.8).abs() < 1e-8));
    }

    #[test]
    fn padding_refuses_when_output_dim_too_small() {
        // completing 2 orthogonal columns in output dimension 2 against a
        // rank-1 extracted output map is impossible
        let model0 = StateSpaceModel::new(
            DMatrix::from_row_slice(1, 1, &[0.8]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.5]),
            2,
        )
        .unwrap();
        let theta = ar_from_ss(&model0, 2).unwrap();
        let x0 = DVector::from_vec(vec![1.0]);
        let seq = simulate(&model0, &x0, 12, 0.0, 0).unwrap();
        let h = hankel_embed(&seq, 2).unwrap();
        let basis = window_basis(&h.y_full).unwrap();
        assert!(matches!(
            ss_from_ar(&theta, &basis, 3, 2),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn sid_to_dmd_transfers_optimality() {
        for seed in 0..5u64 {
            let h = random_window_instance(5, 11, 900 + seed);
            let n = 2;
            // UPC solution mapped to the regression attains its optimum
            let upc = upc_identify(&h, n).unwrap();
            let theta = map_sid_to_dmd(&upc.gamma, &upc.x, &h).unwrap();
            let check = is_solution(&theta, &h, n).unwrap();
            assert!(check.is_solution, "seed {seed}: gap {}", check.objective_gap);

            // (P, Q^T Y) maps back to something acting like Theta* on the past
            let map = solve_rank_constrained(&h, n).unwrap();
            let (gamma, x) = map_dmd_to_sid(&map, &h);
            let theta_back = map_sid_to_dmd(&gamma, &x, &h).unwrap();
            assert!(
                (&theta_back * &h.y_past - map.apply(&h.y_past)).norm()
                    <= 1e-8 * h.y_future.norm().max(1.0)
            );
        }
    }

    #[test]
    fn zero_states_map_to_zero() {
        let h = random_window_instance(4, 8, 950);
        let gamma = DMatrix::from_fn(4, 2, |i, j| (i + j) as f64);
        let x = DMatrix::zeros(2, 9);
        let theta = map_sid_to_dmd(&gamma, &x, &h).unwrap();
        assert_eq!(theta.norm(), 0.0);
    }

    #[test]
    fn dmd_to_sid_is_feasible_and_optimal() {
        let h = random_window_instance(6, 12, 960);
        let n = 3;
        let map = solve_rank_constrained(&h, n).unwrap();
        let (gamma, x) = map_dmd_to_sid(&map, &h);
        let obj = sid_objective(&gamma, &x, &h).unwrap();
        assert!((obj - map.residual_frobenius).abs() <= 1e-8 * map.residual_frobenius.max(1.0));
    }
}
