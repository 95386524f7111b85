use proptest::prelude::*;
use trslab::linalg::{dot, norm2, DenseSymmetric, SymmetricTridiagonal};
use trslab::trs::{solve_trs_dense, solve_trs_tridiagonal, CaseTag, TrsError};

/// `‖(T+λI)h + β₀e₁‖`
fn stationarity(t: &SymmetricTridiagonal, beta0: f64, lambda: f64, h: &[f64]) -> f64 {
    let mut r = t.matvec(h);
    for (ri, hi) in r.iter_mut().zip(h) {
        *ri += lambda * hi;
    }
    r[0] += beta0;
    norm2(&r)
}

/// Tridiagonal with spectrum `d` whose first row carries weights `w/‖w‖`,
/// by Lanczos with full reorthogonalization on `diag(d)`.
fn lanczos_tridiagonal(d: &[f64], w: &[f64]) -> SymmetricTridiagonal {
    let nw = norm2(w);
    let mut q: Vec<f64> = w.iter().map(|x| x / nw).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for j in 0..d.len() {
        let mut r: Vec<f64> = q.iter().zip(d).map(|(x, di)| x * di).collect();
        alpha.push(dot(&r, &q));
        basis.push(q);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&r, v);
                r.iter_mut().zip(v).for_each(|(ri, vi)| *ri -= c * vi);
            }
        }
        if j + 1 == d.len() {
            break;
        }
        let nr = norm2(&r);
        beta.push(nr);
        q = r.iter().map(|x| x / nr).collect();
    }
    SymmetricTridiagonal::new(alpha, beta).unwrap()
}

fn lanczos_instance() -> impl Strategy<Value = (SymmetricTridiagonal, f64, f64)> {
    (1usize..=30)
        .prop_flat_map(|m| {
            (
                prop::collection::vec(-2.0f64..2.0, m),
                prop::collection::vec(0.05f64..1.0, m),
                prop::collection::vec(prop::bool::ANY, m),
                0.5f64..5.0,
                0.2f64..2.0,
            )
        })
        .prop_map(|(d, w, signs, beta0, delta)| {
            let w: Vec<f64> = w
                .iter()
                .zip(signs)
                .map(|(x, s)| if s { *x } else { -x })
                .collect();
            (lanczos_tridiagonal(&d, &w), beta0, delta)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tridiagonal_solution_satisfies_kkt((t, beta0, delta) in lanczos_instance()) {
        let sol = solve_trs_tridiagonal(&t, beta0, delta, 1e-13).unwrap();
        let scale = t.norm_inf() * delta + beta0;
        prop_assert!(stationarity(&t, beta0, sol.lambda, &sol.h) <= 1e-10 * scale);
        prop_assert!(sol.lambda >= 0.0);
        prop_assert!(t.smallest_eigenvalue() + sol.lambda >= -1e-10 * scale);
        let hn = norm2(&sol.h);
        match sol.case {
            CaseTag::Interior => prop_assert!(sol.lambda == 0.0 && hn < delta),
            _ => prop_assert!((hn - delta).abs() <= 1e-10 * delta),
        }
    }

    #[test]
    fn tridiagonal_matches_dense_oracle((t, beta0, delta) in lanczos_instance()) {
        let sol = solve_trs_tridiagonal(&t, beta0, delta, 1e-13).unwrap();
        let mut g = vec![0.0; t.order()];
        g[0] = beta0;
        let oracle = solve_trs_dense(&t.to_dense(), &g, delta, 1e-14).unwrap();
        prop_assert!((sol.lambda - oracle.lambda).abs() <= 1e-9 * (1.0 + oracle.lambda));
        let dh: Vec<f64> = sol.h.iter().zip(&oracle.h).map(|(a, b)| a - b).collect();
        prop_assert!(norm2(&dh) <= 1e-8);
    }

    #[test]
    fn scaling_the_problem_scales_lambda(
        (t, beta0, delta) in lanczos_instance(),
        c in 0.1f64..10.0,
    ) {
        let base = solve_trs_tridiagonal(&t, beta0, delta, 1e-13).unwrap();
        let ts = SymmetricTridiagonal::new(
            t.diag().iter().map(|x| c * x).collect(),
            t.offdiag().iter().map(|x| c * x).collect(),
        ).unwrap();
        let scaled = solve_trs_tridiagonal(&ts, c * beta0, delta, 1e-13).unwrap();
        prop_assert!((scaled.lambda - c * base.lambda).abs() <= 1e-9 * c * (1.0 + base.lambda));
        let dh: Vec<f64> = scaled.h.iter().zip(&base.h).map(|(a, b)| a - b).collect();
        prop_assert!(norm2(&dh) <= 1e-7);
    }

    /// Independent uniform entries often put e₁ almost orthogonal to the
    /// bottom eigenvector. The solver must either flag that or return a
    /// point that satisfies the optimality conditions.
    #[test]
    fn uniform_entries_flag_or_solve(
        diag in prop::collection::vec(-2.0f64..2.0, 1..40),
        off_seed in prop::collection::vec(0.5f64..1.5, 40),
        beta0 in 0.5f64..5.0,
        delta in 0.5f64..2.0,
    ) {
        let m = diag.len();
        let t = SymmetricTridiagonal::new(diag, off_seed[..m - 1].to_vec()).unwrap();
        match solve_trs_tridiagonal(&t, beta0, delta, 1e-14) {
            Ok(sol) => {
                let scale = t.norm_inf() * delta + beta0;
                prop_assert!(stationarity(&t, beta0, sol.lambda, &sol.h) <= 1e-10 * scale);
                prop_assert!(t.smallest_eigenvalue() + sol.lambda >= -1e-10 * scale);
                if sol.case == CaseTag::Boundary {
                    prop_assert!((norm2(&sol.h) - delta).abs() <= 1e-6 * delta);
                }
            }
            Err(TrsError::NearHardCase { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn one_by_one_by_hand() {
    // min 4h + h², |h| ≤ 1: boundary at h = −1 with (2+λ)(−1) = −4.
    let t = SymmetricTridiagonal::new(vec![2.0], vec![]).unwrap();
    let sol = solve_trs_tridiagonal(&t, 4.0, 1.0, 1e-14).unwrap();
    assert_eq!(sol.case, CaseTag::Boundary);
    assert!((sol.lambda - 2.0).abs() < 1e-14);
    assert!((sol.h[0] + 1.0).abs() < 1e-14);
}

#[test]
fn positive_definite_with_large_radius_is_interior() {
    let t = SymmetricTridiagonal::new(vec![2.0, 3.0], vec![0.0]).unwrap();
    let sol = solve_trs_tridiagonal(&t, 1.0, 10.0, 1e-14).unwrap();
    assert_eq!(sol.case, CaseTag::Interior);
    assert_eq!(sol.lambda, 0.0);
    assert!((sol.h[0] + 0.5).abs() < 1e-15 && sol.h[1] == 0.0);
}

#[test]
fn negative_curvature_forces_the_boundary() {
    let t = SymmetricTridiagonal::new(vec![-1.0, 2.0], vec![0.5]).unwrap();
    let sol = solve_trs_tridiagonal(&t, 0.1, 100.0, 1e-13).unwrap();
    assert_eq!(sol.case, CaseTag::Boundary);
    assert!(sol.lambda > -t.smallest_eigenvalue());
    assert!((norm2(&sol.h) - 100.0).abs() < 1e-9);
}

#[test]
fn invalid_inputs_are_rejected() {
    let t = SymmetricTridiagonal::new(vec![1.0], vec![]).unwrap();
    assert!(matches!(
        solve_trs_tridiagonal(&t, 1.0, 0.0, 1e-12),
        Err(TrsError::InvalidInput(_))
    ));
    assert!(matches!(
        solve_trs_tridiagonal(&t, f64::NAN, 1.0, 1e-12),
        Err(TrsError::InvalidInput(_))
    ));
}

#[test]
fn dense_solver_agrees_with_hand_solution() {
    // A = I, ‖g‖ = 2, Δ = 1: s = −g/2, λ = 1, q = −2 + ½ = −1.5.
    let a = DenseSymmetric::identity(3);
    let g = [2.0 / 3f64.sqrt(); 3];
    let sol = solve_trs_dense(&a, &g, 1.0, 1e-14).unwrap();
    assert!((sol.lambda - 1.0).abs() < 1e-13);
    for (s, gi) in sol.h.iter().zip(&g) {
        assert!((s + 0.5 * gi).abs() < 1e-13);
    }
}
