#![allow(dead_code)]

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use wdro_core::costs::{eval_cost, CostSpec, ExtReal};
use wdro_core::losses::LossSpec;
use wdro_core::space::{DiscreteDistribution, Label, Point};

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut Xoshiro256PlusPlus, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn labeled(rng: &mut Xoshiro256PlusPlus, n: usize, dim: usize) -> Vec<Point> {
    (0..n).map(|_| Point::Labeled { x: uniform_vec(rng, dim, 2.0), y: rng.random_range(-2.0..2.0) }).collect()
}

pub fn binary(rng: &mut Xoshiro256PlusPlus, n: usize, dim: usize) -> Vec<Point> {
    (0..n)
        .map(|i| Point::Binary { x: uniform_vec(rng, dim, 2.0), y: if i % 2 == 0 { Label::Pos } else { Label::Neg } })
        .collect()
}

pub fn plain(rng: &mut Xoshiro256PlusPlus, n: usize, dim: usize) -> Vec<Point> {
    (0..n).map(|_| Point::Plain(uniform_vec(rng, dim, 2.0))).collect()
}

/// Primal of the grid-restricted worst case, solved as a dense LP.
pub fn lp_worst_case(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64, grid: &[Point]) -> f64 {
    let r = loss.r();
    let values: Vec<f64> = grid.iter().map(|z| loss.eval_loss(z).unwrap()).collect();
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let mut budget = Vec::new();
    for (a, w) in dist.iter() {
        let mut row = Vec::new();
        for (z, v) in grid.iter().zip(&values) {
            if let ExtReal::Finite(c) = eval_cost(loss.cost(), z, a).unwrap() {
                let var = p.add_var(*v, (0.0, f64::INFINITY));
                row.push((var, 1.0));
                budget.push((var, c.powf(r)));
            }
        }
        p.add_constraint(row, ComparisonOp::Eq, w);
    }
    p.add_constraint(budget, ComparisonOp::Le, delta.powf(r));
    p.solve().unwrap().solution().unwrap().objective()
}

/// `W_{d,r}(p, q)` as a dense transportation LP.
pub fn lp_wasserstein(loss: &LossSpec, p_dist: &DiscreteDistribution, q_dist: &DiscreteDistribution) -> f64 {
    let r = loss.r();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let mut cols: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); q_dist.len()];
    for (a, wa) in p_dist.iter() {
        let mut row = Vec::new();
        for (j, (b, _)) in q_dist.iter().enumerate() {
            if let ExtReal::Finite(c) = eval_cost(loss.cost(), a, b).unwrap() {
                let var = p.add_var(c.powf(r), (0.0, f64::INFINITY));
                row.push((var, 1.0));
                cols[j].push((var, 1.0));
            }
        }
        p.add_constraint(row, ComparisonOp::Eq, wa);
    }
    for (col, (_, wb)) in cols.into_iter().zip(q_dist.iter()) {
        p.add_constraint(col, ComparisonOp::Eq, wb);
    }
    p.solve().unwrap().solution().unwrap().objective().max(0.0).powf(1.0 / r)
}

/// `sup CVaR_alpha^P(G)` over grid-supported `P` in the ball: joint LP in the
/// plan `pi` and the tail weights `u <= q / (1 - alpha)`, `sum u = 1`.
pub fn lp_worst_cvar(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64, grid: &[Point], alpha: f64) -> f64 {
    let values: Vec<f64> = grid.iter().map(|z| loss.eval_psi(z).unwrap()).collect();
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let mut budget = Vec::new();
    let mut mass: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); grid.len()];
    for (a, w) in dist.iter() {
        let mut row = Vec::new();
        for (j, z) in grid.iter().enumerate() {
            if let ExtReal::Finite(c) = eval_cost(loss.cost(), z, a).unwrap() {
                let var = p.add_var(0.0, (0.0, f64::INFINITY));
                row.push((var, 1.0));
                budget.push((var, c));
                mass[j].push((var, -1.0 / (1.0 - alpha)));
            }
        }
        p.add_constraint(row, ComparisonOp::Eq, w);
    }
    p.add_constraint(budget, ComparisonOp::Le, delta);
    let mut total = Vec::new();
    for (j, v) in values.iter().enumerate() {
        let u = p.add_var(*v, (0.0, f64::INFINITY));
        total.push((u, 1.0));
        let mut cap = mass[j].clone();
        cap.push((u, 1.0));
        p.add_constraint(cap, ComparisonOp::Le, 0.0);
    }
    p.add_constraint(total, ComparisonOp::Eq, 1.0);
    p.solve().unwrap().solution().unwrap().objective()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// A random `z'` at finite cost from `z`, at a random scale.
pub fn probe(cost: &CostSpec, z: &Point, g: &mut Xoshiro256PlusPlus) -> Point {
    let scale = 10f64.powf(g.random_range(-3.0..1.5));
    let mut p = z.clone();
    match (cost, &mut p) {
        (CostSpec::FullNorm { .. } | CostSpec::ProductCost, Point::Labeled { x, y }) => {
            for v in x.iter_mut() {
                *v += scale * g.random_range(-1.0..1.0);
            }
            *y += scale * g.random_range(-1.0..1.0);
        }
        (CostSpec::SubsetNorm { index_set, .. }, _) => {
            let f = p.features_mut();
            for &i in index_set {
                f[i] += scale * g.random_range(-1.0..1.0);
            }
        }
        (CostSpec::SemiNormB { b }, _) => {
            let u: Vec<f64> = (0..b.rows()).map(|_| scale * g.random_range(-1.0..1.0)).collect();
            let shift = b.tr_mul_vec(&u);
            for (v, s) in p.features_mut().iter_mut().zip(shift) {
                *v += s;
            }
        }
        // Points inside (0, 1) stay there, as the cross-entropy domain requires.
        (CostSpec::AbsoluteScalar, Point::Plain(v)) if v[0] > 0.0 && v[0] < 1.0 => {
            v[0] = g.random_range(1e-9..1.0 - 1e-9);
        }
        _ => {
            for v in p.features_mut() {
                *v += scale * g.random_range(-1.0..1.0);
            }
        }
    }
    p
}
