use microlp::{ComparisonOp, OptimizationDirection, Problem};
use proptest::prelude::*;
use wdro_core::oracle::{min_cost_transport, solve_budgeted_lp};

/// Losses, an `n x m` cost matrix with some forbidden cells and at least one
/// zero-cost cell per row, weights and a budget.
fn lp_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (1..5usize, 1..7usize).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-2.0..3.0f64, m),
            prop::collection::vec((0.0..4.0f64, prop::bool::weighted(0.2)), n * m),
            prop::collection::vec(0usize..m, n),
            prop::collection::vec(0.05..1.0f64, n),
            0.0..3.0f64,
        )
            .prop_map(move |(losses, cells, home, w, budget)| {
                let mut costs: Vec<f64> = cells.into_iter().map(|(c, off)| if off { f64::INFINITY } else { c }).collect();
                for (i, &j) in home.iter().enumerate() {
                    costs[i * m + j] = 0.0;
                }
                let total: f64 = w.iter().sum();
                (losses, costs, w.into_iter().map(|v| v / total).collect(), budget)
            })
    })
}

fn simplex_lp(losses: &[f64], costs: &[f64], weights: &[f64], budget: f64) -> f64 {
    let m = losses.len();
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let mut spent = Vec::new();
    for (i, &w) in weights.iter().enumerate() {
        let mut row = Vec::new();
        for (j, &l) in losses.iter().enumerate() {
            let c = costs[i * m + j];
            if c.is_finite() {
                let v = p.add_var(l, (0.0, f64::INFINITY));
                row.push((v, 1.0));
                spent.push((v, c));
            }
        }
        p.add_constraint(row, ComparisonOp::Eq, w);
    }
    p.add_constraint(spent, ComparisonOp::Le, budget);
    p.solve().unwrap().solution().unwrap().objective()
}

fn simplex_transport(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let m = b.len();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let mut cols = vec![Vec::new(); m];
    for (i, &ai) in a.iter().enumerate() {
        let mut row = Vec::new();
        for j in 0..m {
            let v = p.add_var(c[i * m + j], (0.0, f64::INFINITY));
            row.push((v, 1.0));
            cols[j].push((v, 1.0));
        }
        p.add_constraint(row, ComparisonOp::Eq, ai);
    }
    for (col, &bj) in cols.into_iter().zip(b) {
        p.add_constraint(col, ComparisonOp::Eq, bj);
    }
    p.solve().unwrap().solution().unwrap().objective()
}

fn simplex_weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..1.0f64, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn budgeted_lp_matches_simplex((losses, costs, w, budget) in lp_case()) {
        let sol = solve_budgeted_lp(&losses, &costs, &w, budget, None).unwrap();
        let reference = simplex_lp(&losses, &costs, &w, budget);
        prop_assert!((sol.value - reference).abs() <= 1e-9 * (1.0 + reference.abs()), "{} vs {reference}", sol.value);
        prop_assert!((sol.dual_value - sol.value).abs() <= 1e-9 * (1.0 + reference.abs()));
    }

    #[test]
    fn recovered_coupling_is_feasible((losses, costs, w, budget) in lp_case()) {
        let sol = solve_budgeted_lp(&losses, &costs, &w, budget, None).unwrap();
        let m = losses.len();
        for (i, wi) in w.iter().enumerate() {
            let row: f64 = sol.coupling.matrix[i * m..(i + 1) * m].iter().sum();
            prop_assert!((row - wi).abs() <= 1e-9);
            for j in 0..m {
                if costs[i * m + j].is_infinite() {
                    prop_assert_eq!(sol.coupling.matrix[i * m + j], 0.0);
                }
            }
        }
        let cols: f64 = sol.grid_weights.iter().sum();
        prop_assert!((cols - 1.0).abs() <= 1e-9);
        prop_assert!(sol.used_budget <= budget + 1e-9 * (1.0 + budget));
        if sol.budget_tight {
            prop_assert!((sol.used_budget - budget).abs() <= 1e-10 * (1.0 + budget), "{} vs {budget}", sol.used_budget);
        }
    }

    #[test]
    fn value_grows_with_budget((losses, costs, w, budget) in lp_case(), extra in 0.0..2.0f64) {
        let a = solve_budgeted_lp(&losses, &costs, &w, budget, None).unwrap().value;
        let b = solve_budgeted_lp(&losses, &costs, &w, budget + extra, None).unwrap().value;
        prop_assert!(a <= b + 1e-10 * (1.0 + b.abs()));
    }

    #[test]
    fn adding_columns_never_lowers_the_value((losses, costs, w, budget) in lp_case(), l_new in -2.0..3.0f64, c_new in 0.0..4.0f64) {
        let m = losses.len();
        let base = solve_budgeted_lp(&losses, &costs, &w, budget, None).unwrap().value;
        let mut losses2 = losses.clone();
        losses2.push(l_new);
        let mut costs2 = Vec::new();
        for i in 0..w.len() {
            costs2.extend_from_slice(&costs[i * m..(i + 1) * m]);
            costs2.push(c_new + i as f64 * 0.1);
        }
        let wider = solve_budgeted_lp(&losses2, &costs2, &w, budget, None).unwrap().value;
        prop_assert!(base <= wider + 1e-10 * (1.0 + wider.abs()));
    }

    #[test]
    fn transport_matches_simplex(
        (a, b, c) in (1..5usize, 1..5usize).prop_flat_map(|(n, m)| {
            (simplex_weights(n), simplex_weights(m), prop::collection::vec(0.0..5.0f64, n * m))
        })
    ) {
        let (flow, total) = min_cost_transport(&a, &b, &c).unwrap();
        let reference = simplex_transport(&a, &b, &c);
        prop_assert!((total - reference).abs() <= 1e-9 * (1.0 + reference), "{total} vs {reference}");
        let m = b.len();
        for (i, ai) in a.iter().enumerate() {
            let row: f64 = flow[i * m..(i + 1) * m].iter().sum();
            prop_assert!((row - ai).abs() <= 1e-9);
        }
        for (j, bj) in b.iter().enumerate() {
            let col: f64 = (0..a.len()).map(|i| flow[i * m + j]).sum();
            prop_assert!((col - bj).abs() <= 1e-9);
        }
        prop_assert!(flow.iter().all(|f| *f >= 0.0));
    }
}

#[test]
fn infeasible_budget_is_reported() {
    let err = solve_budgeted_lp(&[1.0, 2.0], &[0.5, 1.0], &[1.0], 0.1, None);
    assert!(err.is_err());
}
