use std::sync::Arc;

use currentflow::grid::{DiscreteForm, TorusGrid};
use currentflow::hodge::{closed_projection, hodge_decompose, DEFAULT_CG_TOL};
use proptest::prelude::*;

fn grid_for(n: usize) -> Arc<TorusGrid> {
    match n {
        1 => Arc::new(TorusGrid::new(vec![32], vec![1.0]).unwrap()),
        2 => Arc::new(TorusGrid::new(vec![12, 10], vec![1.0, 2.0]).unwrap()),
        _ => Arc::new(TorusGrid::new(vec![4, 5, 4, 3], vec![1.0, 1.0, 2.0, 1.0]).unwrap()),
    }
}

#[test]
fn orthogonal_split_on_fifty_forms_per_case() {
    for (n, p) in [(1, 0), (2, 0), (2, 1), (4, 2)] {
        let g = grid_for(n);
        for s in 0..50 {
            let w = DiscreteForm::random(g.clone(), p, s);
            let r = hodge_decompose(&w, DEFAULT_CG_TOL).unwrap().residuals(&w);
            assert!(r.orthogonality <= 1e-8, "({n},{p}) seed {s}: {r:?}");
            assert!(r.reconstruction <= 1e-8);
            assert!(r.pythagoras <= 1e-7);
        }
    }
}

#[test]
fn harmonic_part_is_killed_by_laplacian() {
    let g = grid_for(4);
    let w = DiscreteForm::random(g.clone(), 2, 3);
    let h = hodge_decompose(&w, DEFAULT_CG_TOL).unwrap().harmonic;
    let lap = currentflow::hodge::laplacian(&g, 2).unwrap();
    assert!(lap.mul_vec(h.values()).iter().all(|v| v.abs() < 1e-10));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_forms_have_no_coexact_part(seed in any::<u64>(), n in 1usize..=3) {
        let n = if n == 3 { 4 } else { n };
        let g = grid_for(n);
        for p in 1..=n {
            let mut w = DiscreteForm::random(g.clone(), p - 1, seed).d().unwrap();
            let c: Vec<f64> = (0..g.components(p)).map(|i| i as f64 - 0.5).collect();
            w.axpy(1.0, &DiscreteForm::constant(g.clone(), p, &c).unwrap());
            let split = hodge_decompose(&w, DEFAULT_CG_TOL).unwrap();
            prop_assert!(split.coexact.l2_norm() <= 1e-8 * (1.0 + w.l2_norm()));
        }
    }

    #[test]
    fn closed_projection_is_idempotent(seed in any::<u64>(), n in 1usize..=3, p in 0usize..=4) {
        let n = if n == 3 { 4 } else { n };
        prop_assume!(p <= n);
        let g = grid_for(n);
        let w = DiscreteForm::random(g, p, seed);
        let once = closed_projection(&w, DEFAULT_CG_TOL).unwrap();
        let twice = closed_projection(&once, DEFAULT_CG_TOL).unwrap();
        prop_assert!((&once - &twice).l2_norm() <= 1e-8 * (1.0 + w.l2_norm()));
        prop_assert!(once.d().map(|d| d.l2_norm()).unwrap_or(0.0) <= 1e-8 * w.d().map(|d| d.l2_norm()).unwrap_or(0.0) + 1e-12);
    }
}
