mod common;

use cascade_core::design::{design_cascade_gains, is_observable_pair, place_poles_observer, verify_block_decoupling};
use cascade_core::grid::{integrate, Quadrature};
use cascade_core::heat::{heat_sylvester_s, phi, HeatPlant};
use cascade_core::linalg::{eigenvalues, even_matrix_function_pair, expm, inverse, multiset_distance};
use cascade_core::sylvester::{kronecker_oracle, residual, residual_bound, solve_sylvester, SylvesterProblem};
use cascade_core::{Error, Matrix};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expm_semigroup(seed in any::<u64>(), n in 1usize..6, s in 0.0f64..1.5, t in 0.0f64..1.5) {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, n, n, 2.0);
        let whole = expm(&a, s + t).unwrap();
        let split = &expm(&a, s).unwrap() * &expm(&a, t).unwrap();
        prop_assert!((&whole - &split).norm_fro() <= 1e-10 * (1.0 + whole.norm_fro()));
    }

    #[test]
    fn even_pair_identity(seed in any::<u64>(), n in 1usize..5, x in 0.0f64..1.0) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, n, n, 10.0 / n as f64);
        let (ch, g) = even_matrix_function_pair(&m, x).unwrap();
        let lhs = &(&ch * &ch) - &(&(&m * &g) * &g).scale(x * x);
        prop_assert!((&lhs - &Matrix::identity(n)).max_abs() <= 1e-8, "{}", (&lhs - &Matrix::identity(n)).max_abs());
    }

    #[test]
    fn eigenvalues_are_similarity_invariant(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, n, n, 2.0);
        let t = Matrix::identity(n).checked_add(&random_matrix(&mut r, n, n, 0.3)).unwrap();
        let b = &(&t * &a) * &inverse(&t).unwrap();
        let ea = eigenvalues(&a).unwrap().eigenvalues;
        let eb = eigenvalues(&b).unwrap().eigenvalues;
        prop_assert!(multiset_distance(&ea, &eb) <= 1e-6 * (1.0 + a.norm_fro()));
    }

    #[test]
    fn sylvester_matches_oracle_and_is_linear(seed in any::<u64>(), n1 in 1usize..7, n2 in 1usize..7, alpha in -3.0f64..3.0) {
        let mut r = rng(seed);
        let p = random_sylvester(&mut r, n1, n2, 0.5);
        let s = solve_sylvester(&p).unwrap();
        prop_assert!(residual(&p, &s).unwrap() <= residual_bound(&p, &s));
        let k = kronecker_oracle(&p).unwrap();
        prop_assert!(rel_diff(&s, &k) <= 1e-9);

        let c2 = random_matrix(&mut r, n1, n2, 1.0);
        let p2 = SylvesterProblem::new(p.a.clone(), p.b.clone(), c2.clone()).unwrap();
        let p3 = SylvesterProblem::new(p.a.clone(), p.b.clone(), &p.c + &c2.scale(alpha)).unwrap();
        let combined = &s + &solve_sylvester(&p2).unwrap().scale(alpha);
        prop_assert!(rel_diff(&solve_sylvester(&p3).unwrap(), &combined) <= 1e-9);
    }

    #[test]
    fn output_injection_keeps_observability(seed in any::<u64>(), n in 1usize..5, hidden in any::<bool>()) {
        let mut r = rng(seed);
        let mut a = random_matrix(&mut r, n + 1, n + 1, 1.5);
        let mut c = random_matrix(&mut r, 1, n + 1, 1.0);
        if hidden {
            // last state neither measured nor feeding measured states
            for i in 0..n {
                a[(i, n)] = 0.0;
            }
            c[(0, n)] = 0.0;
        }
        let f = random_matrix(&mut r, n + 1, 1, 2.0);
        let before = is_observable_pair(&a, &c).unwrap();
        let after = is_observable_pair(&(&a + &(&f * &c)), &c).unwrap();
        prop_assert_eq!(before, after);
        if hidden {
            prop_assert!(!before);
        }
    }

    #[test]
    fn placement_hits_requested_poles(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, n, n, 1.5);
        let c = random_matrix(&mut r, 1, n, 1.0);
        let poles = random_stable_poles(&mut r, n, 0.5, 3.0);
        let f = place_poles_observer(&a, &c, &poles).unwrap();
        let got = eigenvalues(&(&a + &(&f * &c))).unwrap().eigenvalues;
        prop_assert!(multiset_distance(&got, &poles) <= 1e-6);
    }

    #[test]
    fn cascade_gains_decouple(seed in any::<u64>(), n1 in 1usize..4, n2 in 1usize..4) {
        let mut r = rng(seed);
        let sys = random_cascade(&mut r, n1, n2, CascadeKind::Generic);
        let sp = random_stable_poles(&mut r, n1, 0.5, 3.0);
        let pp = random_stable_poles(&mut r, n2, 0.5, 3.0);
        match design_cascade_gains(&sys, &sp, &pp) {
            Ok(g) => {
                let defect = verify_block_decoupling(&sys, &g).unwrap();
                let scale = 1.0 + g.s.norm_fro() * (g.f2.norm_fro() + sys.interconnection().norm_fro());
                prop_assert!(defect <= 1e-10 * scale, "{defect}");
            }
            // the sensor transfer function may vanish near σ(A₂) by chance
            Err(Error::Design(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn heat_s_residuals(seed in any::<u64>(), m in 1usize..4) {
        let mut r = rng(seed);
        let af = random_hurwitz(&mut r, m, 0.1);
        prop_assume!(af.norm_fro() <= 10.0);
        let b1 = random_matrix(&mut r, m, 1, 1.0);
        let c1 = Matrix::from_fn(1, m, |_, j| if j == 0 { 1.0 } else { 0.0 });
        let p = HeatPlant::new(4.0, af.clone(), b1.clone(), c1).unwrap();
        let grid = 400;
        let s = match heat_sylvester_s(&p, &Matrix::zeros(m, 1), grid) {
            Ok(s) => s,
            Err(Error::Design(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let dx = s.dx();
        prop_assert!(s.at(0).iter().all(|&v| v == 0.0));
        let z_norm = af.shift(-4.0).norm_fro();
        let tol = dx * dx * (1.0 + z_norm * z_norm) * (1.0 + s.max_abs());
        for k in 1..grid {
            for i in 0..m {
                let d2 = (s.at(k - 1)[i] - 2.0 * s.at(k)[i] + s.at(k + 1)[i]) / (dx * dx);
                let rhs: f64 = (0..m).map(|j| af[(i, j)] * s.at(k)[j]).sum();
                prop_assert!((d2 + 4.0 * s.at(k)[i] - rhs).abs() <= tol);
            }
        }
        for i in 0..m {
            let d1 = (3.0 * s.at(grid)[i] - 4.0 * s.at(grid - 1)[i] + s.at(grid - 2)[i]) / (2.0 * dx);
            prop_assert!((d1 - b1[(i, 0)]).abs() <= tol);
        }
    }
}

#[test]
fn modes_are_orthonormal() {
    let n = 512;
    let dx = 1.0 / n as f64;
    let mut worst: f64 = 0.0;
    for i in 1..=8 {
        for j in 1..=8 {
            let f: Vec<f64> = (0..=n).map(|k| phi(i, k as f64 * dx) * phi(j, k as f64 * dx)).collect();
            let g = integrate(&f, dx, Quadrature::Simpson).unwrap();
            worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    assert!(worst <= 1e-8, "{worst}");
}
