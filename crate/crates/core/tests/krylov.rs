//! Lanczos factorization and GLTR iteration properties on random dense
//! problems.

use proptest::prelude::*;
use trslab::gltr::{gltr_solve, GltrError, GltrOptions, TerminationReason};
use trslab::lanczos::lanczos_run;
use trslab::linalg::{
    dot, gaussian_vector, norm2, random_unit_vector, seeded_rng, symmetric_eig_dense, DenseMatrix,
    DenseOperator, DiagonalOperator, SymmetricLinearOperator,
};
use trslab::trs::{solve_trs_dense, CaseTag};

/// `(G + Gᵀ)/(2√n)` with seeded Gaussian `G`, plus a diagonal shift.
fn random_symmetric(n: usize, seed: u64, shift: f64) -> DenseMatrix {
    let g = gaussian_vector(&mut seeded_rng(seed), n * n);
    let s = 2.0 * (n as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (g[i * n + j] + g[j * n + i]) / s + if i == j { shift } else { 0.0 })
                .collect()
        })
        .collect();
    DenseMatrix::from_rows(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lanczos_basis_is_orthonormal_and_satisfies_the_three_term_relation(
        n in 5usize..40,
        steps in 1usize..30,
        seed in any::<u64>(),
    ) {
        let m = random_symmetric(n, seed, 0.0);
        let a = DenseOperator::new(m).unwrap();
        let g = random_unit_vector(&mut seeded_rng(seed ^ 1), n);
        let f = lanczos_run(&a, &g, steps.min(n - 1), 1e-12).unwrap();
        let k = f.k();
        for i in 0..=k {
            for j in 0..=i {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(f.column(i), f.column(j)) - want).abs() <= 1e-12);
            }
        }
        // A q_j = β_{j-1} q_{j-1} + α_j q_j + β_j q_{j+1}
        let t = f.t();
        for j in 0..=k {
            let mut r = a.apply_vec(f.column(j));
            let mut sub = |c: f64, v: &[f64]| r.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            sub(t.diag()[j], f.column(j));
            if j > 0 {
                sub(t.offdiag()[j - 1], f.column(j - 1));
            }
            if j < k {
                sub(t.offdiag()[j], f.column(j + 1));
            } else {
                sub(f.beta_next(), f.q_next());
            }
            prop_assert!(norm2(&r) <= 1e-12 * (1.0 + f.norm_estimate()));
        }
    }

    #[test]
    fn ritz_values_lie_inside_the_spectrum(n in 5usize..30, seed in any::<u64>()) {
        let m = random_symmetric(n, seed, 0.0);
        let eig = symmetric_eig_dense(&m.to_symmetric(1e-14).unwrap(), 1e-14).unwrap();
        let (lo, hi) = (eig.values[0], eig.values[n - 1]);
        let a = DenseOperator::new(m).unwrap();
        let g = random_unit_vector(&mut seeded_rng(seed ^ 2), n);
        let f = lanczos_run(&a, &g, n / 2, 1e-12).unwrap();
        let t = f.t();
        prop_assert!(t.smallest_eigenvalue() >= lo - 1e-12);
        prop_assert!(t.largest_eigenvalue() <= hi + 1e-12);
    }

    #[test]
    fn gltr_iterates_are_monotone_and_converge_to_the_dense_solution(
        n in 10usize..60,
        seed in any::<u64>(),
        delta in 0.3f64..3.0,
    ) {
        let m = random_symmetric(n, seed, 0.0);
        let dense = m.to_symmetric(1e-14).unwrap();
        let a = DenseOperator::new(m).unwrap();
        let g = random_unit_vector(&mut seeded_rng(seed ^ 3), n);
        let opts = GltrOptions {
            resid_tol: 1e-12,
            k_max: n,
            verify_residuals: true,
            ..GltrOptions::default()
        };
        let r = gltr_solve(&a, &g, delta, &opts).unwrap();
        let h = &r.history;
        for w in h.windows(2) {
            prop_assert!(w[1].lambda >= w[0].lambda - 1e-13 * (1.0 + w[0].lambda));
            prop_assert!(w[1].q <= w[0].q + 1e-13 * (1.0 + w[0].q.abs()));
        }
        let scale = 3.0 * delta + 1.0;
        for rec in h {
            let explicit = rec.resid_explicit.unwrap();
            prop_assert!((explicit - rec.resid_formula).abs() <= 1e-10 * scale);
            let qd = rec.q_direct.unwrap();
            prop_assert!((qd - rec.q).abs() <= 1e-10 * rec.q.abs());
        }
        prop_assert!(norm2(&r.s) <= delta * (1.0 + 1e-12));
        let oracle = solve_trs_dense(&dense, &g, delta, 1e-14).unwrap();
        prop_assert!((r.lambda - oracle.lambda).abs() <= 1e-8 * (1.0 + oracle.lambda));
        let ds: Vec<f64> = r.s.iter().zip(&oracle.h).map(|(x, y)| x - y).collect();
        prop_assert!(norm2(&ds) <= 1e-7 * delta);
    }
}

#[test]
fn identity_breaks_down_after_one_step() {
    let a = DiagonalOperator::new(vec![1.0; 6]);
    let g = [1.0, 2.0, 0.0, -1.0, 0.5, 0.0];
    let f = lanczos_run(&a, &g, 5, 1e-12).unwrap();
    assert!(f.broken_down());
    assert_eq!(f.k(), 0);
    assert!(f.beta_next().abs() <= 1e-15);
}

#[test]
fn gltr_identity_by_hand() {
    // A = I, ‖g‖ = 2, Δ = 1: λ = 1, s = −g/2, q = −2 + ½ = −1.5.
    let a = DiagonalOperator::new(vec![1.0; 4]);
    let g = [1.0, 1.0, 1.0, 1.0];
    let r = gltr_solve(&a, &g, 1.0, &GltrOptions::default()).unwrap();
    assert_eq!(r.case, CaseTag::Boundary);
    assert!((r.lambda - 1.0).abs() < 1e-13);
    assert!((r.q + 1.5).abs() < 1e-13);
    assert_eq!(r.termination, TerminationReason::Breakdown);
}

#[test]
fn gltr_positive_definite_large_radius_is_interior() {
    let m = random_symmetric(30, 11, 4.0);
    let a = DenseOperator::new(m).unwrap();
    let g = random_unit_vector(&mut seeded_rng(12), 30);
    let r = gltr_solve(&a, &g, 100.0, &GltrOptions::default()).unwrap();
    assert_eq!(r.case, CaseTag::Interior);
    assert_eq!(r.lambda, 0.0);
    assert!(norm2(&r.s) < 100.0);
}

#[test]
fn gltr_input_errors() {
    let a = DiagonalOperator::new(vec![1.0, 2.0]);
    assert!(matches!(
        gltr_solve(&a, &[0.0, 0.0], 1.0, &GltrOptions::default()),
        Err(GltrError::ZeroGradient)
    ));
    assert!(matches!(
        gltr_solve(&a, &[1.0], 1.0, &GltrOptions::default()),
        Err(GltrError::InvalidInput(_))
    ));
    assert!(gltr_solve(&a, &[1.0, 1.0], -1.0, &GltrOptions::default()).is_err());
}

#[test]
fn gltr_respects_k_max() {
    let a = DiagonalOperator::new((0..200).map(|i| -1.0 + i as f64 / 100.0).collect());
    let g = random_unit_vector(&mut seeded_rng(5), 200);
    let opts = GltrOptions {
        resid_tol: 1e-15,
        k_max: 7,
        ..GltrOptions::default()
    };
    let r = gltr_solve(&a, &g, 1.0, &opts).unwrap();
    assert_eq!(r.termination, TerminationReason::KMax);
    assert!(r.iterations() <= 8);
}
