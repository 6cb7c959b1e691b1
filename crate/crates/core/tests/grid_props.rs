mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::dense_d;
use currentflow::grid::{l2_inner, pairing, star, star_inv, DiscreteForm, TorusGrid};
use currentflow::tvprox::tv_energy;
use proptest::prelude::*;

fn grids() -> Vec<Arc<TorusGrid>> {
    vec![
        Arc::new(TorusGrid::new(vec![5], vec![2.0]).unwrap()),
        Arc::new(TorusGrid::new(vec![4, 6], vec![1.0, 3.0]).unwrap()),
        Arc::new(TorusGrid::new(vec![3, 4, 5], vec![1.0, 0.5, 2.0]).unwrap()),
        Arc::new(TorusGrid::new(vec![3, 3, 2, 4], vec![1.0, 1.0, 1.5, 1.0]).unwrap()),
    ]
}

#[test]
fn dd_vanishes_exactly() {
    for g in grids() {
        for p in 0..g.n().saturating_sub(1) {
            let dd = g.d(p + 1).unwrap().matmul(&g.d(p).unwrap());
            assert_eq!(dd.max_abs_entry(), 0.0);
        }
    }
}

#[test]
fn sparse_d_matches_dense_construction() {
    for g in grids() {
        for p in 0..g.n() {
            let dense = dense_d(&g, p);
            let sparse = g.d(p).unwrap();
            for r in 0..dense.nrows() {
                for c in 0..dense.ncols() {
                    assert!((dense[(r, c)] - sparse.get(r, c)).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn refinement_of_smooth_forms() {
    // sin(2πx₁) dx₁ is closed: E vanishes and the norm is exact at every resolution
    for n in [8, 16, 32, 64] {
        let g = Arc::new(TorusGrid::cube(2, n, 1.0).unwrap());
        let w = DiscreteForm::from_fn(g, 1, |x, c| if c == 0 { (2.0 * PI * x[0]).sin() } else { 0.0 }).unwrap();
        assert!(tv_energy(&w).unwrap() < 1e-9);
        assert!((w.l2_norm() - 0.5f64.sqrt()).abs() < 1e-12);
    }
    // ω = sin(2πx₁) dx₂ + sin(2πx₂) dx₃ on T³: E = 4π² ∫∫ sqrt(cos²a + cos²b)
    let exact = {
        let m = 4000;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let (a, b) = ((i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64);
                s += ((2.0 * PI * a).cos().powi(2) + (2.0 * PI * b).cos().powi(2)).sqrt();
            }
        }
        2.0 * PI * s / (m * m) as f64
    };
    let mut errors = Vec::new();
    for n in [6, 12, 24, 48] {
        let g = Arc::new(TorusGrid::cube(3, n, 1.0).unwrap());
        let w = DiscreteForm::from_fn(g, 1, |x, c| match c {
            1 => (2.0 * PI * x[0]).sin(),
            2 => (2.0 * PI * x[1]).sin(),
            _ => 0.0,
        })
        .unwrap();
        errors.push((tv_energy(&w).unwrap() - exact).abs());
    }
    for pair in errors.windows(2) {
        assert!(pair[1] <= 0.6 * pair[0], "{errors:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn d_and_delta_are_adjoint(seed in any::<u64>(), gi in 0usize..4, p in 0usize..4) {
        let g = grids()[gi].clone();
        prop_assume!(p < g.n());
        let a = DiscreteForm::random(g.clone(), p, seed);
        let b = DiscreteForm::random(g, p + 1, seed ^ 1);
        let lhs = l2_inner(&a.d().unwrap(), &b).unwrap();
        let rhs = l2_inner(&a, &b.delta().unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (a.l2_norm() * b.l2_norm() + 1.0) * 10.0);
    }

    #[test]
    fn star_is_isometry(seed in any::<u64>(), gi in 0usize..4, p in 0usize..5) {
        let g = grids()[gi].clone();
        prop_assume!(p <= g.n());
        let w = DiscreteForm::random(g, p, seed);
        prop_assert!((star(&w).l2_norm() - w.l2_norm()).abs() <= 1e-12 * (1.0 + w.l2_norm()));
        prop_assert!((&star_inv(&star(&w)) - &w).max_abs() == 0.0);
    }

    #[test]
    fn stokes_on_the_torus(seed in any::<u64>(), gi in 0usize..4, q in 0usize..4) {
        let g = grids()[gi].clone();
        let n = g.n();
        prop_assume!(q < n);
        // γ of degree q, ω of degree n − q − 1
        let gamma = DiscreteForm::random(g.clone(), q, seed);
        let omega = DiscreteForm::random(g, n - q - 1, seed ^ 5);
        let s = star_inv(&omega);
        let lhs = l2_inner(&gamma.d().unwrap(), &s).unwrap();
        let rhs = l2_inner(&gamma, &s.delta().unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + gamma.l2_norm() * omega.l2_norm()));
        prop_assert!((pairing(&gamma.d().unwrap(), &omega).unwrap() - lhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}
