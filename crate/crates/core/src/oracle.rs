//! Discrete oracle: the worst-case expectation over distributions supported on
//! a finite grid, and exact Wasserstein distances between discrete measures.
//!
//! With atoms `Z_i` (weights `mu_i`), grid points `z_j`, losses `l_j` and
//! costs `c_ij = d(z_j, Z_i)^r`, the oracle solves
//!
//! ```text
//! max  sum_ij pi_ij l_j   s.t.  sum_j pi_ij = mu_i,  sum_ij pi_ij c_ij <= delta^r,  pi >= 0
//! ```
//!
//! through its one-dimensional dual
//!
//! ```text
//! g(rho) = rho delta^r + sum_i mu_i max_j (l_j - rho c_ij),   rho >= 0
//! ```
//!
//! which is convex and piecewise linear. Bisection on the sign of the
//! subgradient brackets the optimal `rho`; a primal coupling is recovered by
//! mixing the cheapest and the most expensive maximizers so that the budget is
//! met exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::costs::{eval_cost, CostSpec};
use crate::losses::{LossSpec, WitnessMode};
use crate::math::{pow_r, root_r};
use crate::space::{Coupling, DiscreteDistribution, Point};
use crate::{Error, Result};

const MAX_BISECTIONS: usize = 400;

/// One bisection step of the dual search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoStep {
    pub iteration: usize,
    pub rho: f64,
    /// Subgradient interval `[delta^r - usage_high, delta^r - usage_low]` of `g` at `rho`.
    pub subgradient_low: f64,
    pub subgradient_high: f64,
}

/// Solution of the budgeted linear program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetedLpSolution {
    /// Primal value of the recovered coupling.
    pub value: f64,
    /// Smallest dual objective found; equals `value` up to the bisection width.
    pub dual_value: f64,
    pub rho: f64,
    /// Rows index atoms, columns index grid points.
    pub coupling: Coupling,
    /// Column marginal: the worst-case distribution on the grid.
    pub grid_weights: Vec<f64>,
    /// Transport cost `sum pi_ij c_ij` of the coupling.
    pub used_budget: f64,
    pub budget_tight: bool,
}

struct Lp<'a> {
    losses: &'a [f64],
    costs: &'a [f64],
    weights: &'a [f64],
    m: usize,
}

impl Lp<'_> {
    /// Maximizer of `l_j - rho c_ij`; ties go to the cheapest (`high = false`)
    /// or the most expensive (`high = true`) column.
    fn best(&self, i: usize, rho: f64, high: bool) -> (usize, f64) {
        let row = &self.costs[i * self.m..(i + 1) * self.m];
        let mut top = f64::NEG_INFINITY;
        for (l, c) in self.losses.iter().zip(row) {
            if c.is_finite() {
                top = top.max(l - rho * c);
            }
        }
        let tol = 1e-13 * (1.0 + top.abs());
        let mut pick = usize::MAX;
        for (j, (l, c)) in self.losses.iter().zip(row).enumerate() {
            if c.is_finite() && l - rho * c >= top - tol {
                let better = pick == usize::MAX || if high { *c > row[pick] } else { *c < row[pick] };
                if better {
                    pick = j;
                }
            }
        }
        (pick, top)
    }

    fn choose(&self, rho: f64, high: bool) -> (Vec<usize>, f64, f64) {
        let mut cols = Vec::with_capacity(self.weights.len());
        let mut usage = 0.0;
        let mut inner = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            let (j, top) = self.best(i, rho, high);
            cols.push(j);
            if w > 0.0 {
                usage += w * self.costs[i * self.m + j];
                inner += w * top;
            }
        }
        (cols, usage, inner)
    }

    fn linear_piece(&self, cols: &[usize]) -> (f64, f64) {
        let mut value = 0.0;
        let mut usage = 0.0;
        for (i, (&j, &w)) in cols.iter().zip(self.weights).enumerate() {
            if w > 0.0 {
                value += w * self.losses[j];
                usage += w * self.costs[i * self.m + j];
            }
        }
        (value, usage)
    }
}

/// Solves the budgeted program for raw loss values and a row-major `N x M`
/// cost matrix in which `f64::INFINITY` marks forbidden cells.
pub fn solve_budgeted_lp(
    losses: &[f64],
    costs: &[f64],
    weights: &[f64],
    budget: f64,
    mut trace: Option<&mut dyn FnMut(&RhoStep)>,
) -> Result<BudgetedLpSolution> {
    let n = weights.len();
    let m = losses.len();
    if m == 0 {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    if costs.len() != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, found: costs.len() });
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidParameter(format!("budget must be finite and nonnegative, got {budget}")));
    }
    if let Some(l) = losses.iter().find(|l| !l.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite loss value {l}")));
    }
    let mut min_usage = 0.0;
    let mut min_pos = f64::INFINITY;
    for (i, &w) in weights.iter().enumerate() {
        let row = &costs[i * m..(i + 1) * m];
        let cmin = row.iter().copied().filter(|c| c.is_finite()).fold(f64::INFINITY, f64::min);
        if !cmin.is_finite() {
            if w > 0.0 {
                return Err(Error::NoFiniteCostColumn { index: i });
            }
            continue;
        }
        min_usage += w * cmin;
        for &c in row {
            if c.is_finite() && c > 0.0 {
                min_pos = min_pos.min(c);
            }
        }
    }
    if min_usage > budget * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::BudgetInfeasible);
    }
    let lp = Lp { losses, costs, weights, m };
    let finish = |cols_a: Vec<usize>, cols_c: Vec<usize>, theta: f64, rho: f64, dual: f64, tight: bool| {
        let mut matrix = vec![0.0; n * m];
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                matrix[i * m + cols_a[i]] += w * (1.0 - theta);
                matrix[i * m + cols_c[i]] += w * theta;
            }
        }
        let coupling = Coupling { rows: n, cols: m, matrix };
        let grid_weights = coupling.col_marginal();
        let value = grid_weights.iter().zip(losses).map(|(q, l)| q * l).sum();
        let used_budget = coupling
            .matrix
            .iter()
            .zip(costs)
            .map(|(p, c)| if *p > 0.0 { p * c } else { 0.0 })
            .sum();
        BudgetedLpSolution { value, dual_value: dual, rho, coupling, grid_weights, used_budget, budget_tight: tight }
    };

    let (cols0, usage0, inner0) = lp.choose(0.0, false);
    if usage0 <= budget {
        return Ok(finish(cols0.clone(), cols0, 0.0, 0.0, inner0, false));
    }

    let l_max = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let l_min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = if min_pos.is_finite() { (l_max - l_min) / min_pos + 1.0 } else { 1.0 };
    for _ in 0..2000 {
        if lp.choose(hi, false).1 <= budget {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let mut exact = None;
    for it in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (_, u_low, _) = lp.choose(mid, false);
        let (_, u_high, _) = lp.choose(mid, true);
        if let Some(t) = trace.as_deref_mut() {
            t(&RhoStep { iteration: it, rho: mid, subgradient_low: budget - u_high, subgradient_high: budget - u_low });
        }
        if u_low > budget {
            lo = mid;
        } else if u_high < budget {
            hi = mid;
        } else {
            exact = Some(mid);
            break;
        }
    }
    let (rho_a, rho_c) = match exact {
        Some(r) => (r, r),
        None => (hi, lo),
    };
    let (cols_a, _, _) = lp.choose(rho_a, false);
    let (cols_c, _, _) = lp.choose(rho_c, true);
    let (val_a, use_a) = lp.linear_piece(&cols_a);
    let (val_c, use_c) = lp.linear_piece(&cols_c);
    let theta = if use_c > use_a { ((budget - use_a) / (use_c - use_a)).clamp(0.0, 1.0) } else { 0.0 };
    // The two linear pieces of g cross at the kink.
    let rho = if use_c > use_a {
        let r = (val_c - val_a) / (use_c - use_a);
        if r.is_finite() && r >= rho_c && r <= rho_a {
            r
        } else {
            0.5 * (rho_a + rho_c)
        }
    } else {
        rho_a
    };
    let g = |r: f64| r * budget + lp.choose(r, false).2;
    let dual = g(rho).min(g(rho_a)).min(g(rho_c));
    Ok(finish(cols_a, cols_c, theta, rho, dual, true))
}

/// Loss values and the `N x M` matrix of `d(z_j, Z_i)^r`.
pub fn lp_inputs(loss: &LossSpec, dist: &DiscreteDistribution, grid: &[Point]) -> Result<(Vec<f64>, Vec<f64>)> {
    let losses = grid.iter().map(|z| loss.eval_loss(z)).collect::<Result<Vec<_>>>()?;
    let mut costs = Vec::with_capacity(dist.len() * grid.len());
    for a in dist.atoms() {
        for z in grid {
            costs.push(eval_cost(loss.cost(), z, a)?.pow(loss.r()).to_f64());
        }
    }
    Ok((losses, costs))
}

/// Worst-case expected loss over distributions on `grid` within Wasserstein radius `delta`.
pub fn sup_over_grid(
    loss: &LossSpec,
    dist: &DiscreteDistribution,
    delta: f64,
    grid: &[Point],
    trace: Option<&mut dyn FnMut(&RhoStep)>,
) -> Result<BudgetedLpSolution> {
    let (losses, costs) = lp_inputs(loss, dist, grid)?;
    solve_budgeted_lp(&losses, &costs, dist.weights(), pow_r(delta, loss.r()), trace)
}

/// Dual objective `inf_rho g(rho)` restricted to `grid`.
pub fn dual_bound_i(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64, grid: &[Point]) -> Result<f64> {
    Ok(sup_over_grid(loss, dist, delta, grid, None)?.dual_value)
}

/// `sum_i mu_i L_i`, where `L_i` is the worst case for the Dirac mass at `Z_i`.
pub fn lower_bound_l(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64, grid: &[Point]) -> Result<f64> {
    for (index, a) in dist.atoms().iter().enumerate() {
        if !grid.contains(a) {
            return Err(Error::GridMissingAtoms { index });
        }
    }
    let (losses, costs) = lp_inputs(loss, dist, grid)?;
    let m = grid.len();
    let budget = pow_r(delta, loss.r());
    let mut acc = 0.0;
    for (i, &w) in dist.weights().iter().enumerate() {
        if w > 0.0 {
            let row = &costs[i * m..(i + 1) * m];
            acc += w * solve_budgeted_lp(&losses, row, &[1.0], budget, None)?.value;
        }
    }
    Ok(acc)
}

/// Grid construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Interior points on each segment from an atom to a witness.
    pub resolution: usize,
    /// Witness slack as fractions of the anchor's Lipschitz constant.
    pub eps_fractions: Vec<f64>,
    /// Also add, per atom, a witness at distance `delta mu_i^{-1/r}`, far
    /// enough for that atom alone to absorb the whole budget.
    pub full_budget: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { resolution: 8, eps_fractions: vec![1e-1, 1e-2, 1e-3], full_budget: true }
    }
}

impl GridOptions {
    pub fn with_resolution(resolution: usize) -> Self {
        GridOptions { resolution, ..Self::default() }
    }
}

fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    let mix = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(p, q)| p + t * (q - p)).collect() };
    match (a, b) {
        (Point::Labeled { x: xa, y: ya }, Point::Labeled { x: xb, y: yb }) => {
            Point::Labeled { x: mix(xa, xb), y: ya + t * (yb - ya) }
        }
        _ => {
            let mut p = a.clone();
            let f = mix(a.features(), b.features());
            p.features_mut().copy_from_slice(&f);
            p
        }
    }
}

/// Atoms, witnesses and the segments joining them.
pub fn make_grid(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64, resolution: usize) -> Result<Vec<Point>> {
    make_grid_with(loss, dist, delta, &GridOptions::with_resolution(resolution))
}

fn optional(w: Result<Point>) -> Result<Option<Point>> {
    match w {
        Ok(p) => Ok(Some(p)),
        Err(Error::WitnessNotFound(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// [`make_grid`] with explicit options.
pub fn make_grid_with(
    loss: &LossSpec,
    dist: &DiscreteDistribution,
    delta: f64,
    opts: &GridOptions,
) -> Result<Vec<Point>> {
    if opts.resolution == 0 {
        return Err(Error::InvalidParameter("grid resolution must be at least 1".into()));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be finite and nonnegative, got {delta}")));
    }
    let mut grid: Vec<Point> = Vec::new();
    let push = |p: Point, grid: &mut Vec<Point>| {
        if !grid.contains(&p) {
            grid.push(p);
        }
    };
    for a in dist.atoms() {
        push(a.clone(), &mut grid);
    }
    if delta == 0.0 {
        return Ok(grid);
    }
    let r = loss.r();
    let e = dist.expectation(|z| loss.eval_loss(z))?;
    let exact = loss.has_exact_slope() && e > 0.0;
    for (a, mu) in dist.iter() {
        let l = loss.lipschitz_at(a)?;
        if l <= 0.0 {
            continue;
        }
        let psi = loss.eval_psi(a)?;
        for &frac in &opts.eps_fractions {
            let eps = frac * l;
            // Saturating losses have no steep point beyond some reach; the
            // nearest steep point still belongs on the grid.
            let steep = |reach: f64| match loss.witness(a, eps, reach, WitnessMode::Steep) {
                Err(Error::WitnessNotFound(_)) => optional(loss.witness(a, eps, 0.0, WitnessMode::Steep)),
                other => other.map(Some),
            };
            let mut targets = vec![steep(delta)?];
            if opts.full_budget && mu > 0.0 && mu < 1.0 {
                targets.push(steep(delta * root_r(1.0 / mu, r))?);
            }
            if exact && psi > 0.0 {
                let d = psi * delta / root_r(e, r);
                targets.push(optional(loss.witness(a, eps, delta, WitnessMode::AtDistance(d)))?);
            }
            let targets = targets.into_iter().flatten();
            for w in targets {
                for k in 1..opts.resolution {
                    push(lerp(a, &w, k as f64 / opts.resolution as f64), &mut grid);
                }
                push(w, &mut grid);
            }
        }
    }
    Ok(grid)
}

/// Optimal plan between two discrete distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    /// `(min sum pi_ij d^r)^{1/r}`.
    pub distance: f64,
    /// Rows index the first distribution, columns the second.
    pub coupling: Coupling,
}

/// `W_{d,r}(p, q)`, solved exactly by successive shortest paths on the
/// bipartite transport network; infinite-cost cells carry no arc.
pub fn wasserstein_discrete(
    cost: &CostSpec,
    r: f64,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<TransportPlan> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::InvalidParameter(format!("r must be >= 1, got {r}")));
    }
    let mut c = Vec::with_capacity(p.len() * q.len());
    for a in p.atoms() {
        for b in q.atoms() {
            c.push(eval_cost(cost, a, b)?.pow(r).to_f64());
        }
    }
    let (flow, total) = min_cost_transport(p.weights(), q.weights(), &c)?;
    Ok(TransportPlan {
        distance: root_r(total.max(0.0), r),
        coupling: Coupling { rows: p.len(), cols: q.len(), matrix: flow },
    })
}

/// Min-cost transport between supplies `a` and demands `b` (both summing to
/// one) over the row-major cost matrix `c`. Returns the flow and its cost.
pub fn min_cost_transport(a: &[f64], b: &[f64], c: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = a.len();
    let m = b.len();
    if c.len() != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, found: c.len() });
    }
    let tol = 1e-14;
    let mut flow = vec![0.0; n * m];
    let mut ra: Vec<f64> = a.to_vec();
    let mut rb: Vec<f64> = b.to_vec();
    // Node potentials keep reduced costs nonnegative for Dijkstra.
    let mut pu = vec![0.0; n];
    let mut pv = vec![0.0; m];
    let cap = 50 * (n + m) * (n + m) + 100;
    for _ in 0..cap {
        let remaining: f64 = ra.iter().filter(|v| **v > tol).sum();
        if remaining <= tol {
            break;
        }
        // Dense Dijkstra over sources (0..n) and sinks (n..n+m).
        let mut du = vec![f64::INFINITY; n];
        let mut dv = vec![f64::INFINITY; m];
        let mut pred_v = vec![usize::MAX; m];
        let mut pred_u = vec![usize::MAX; n];
        let mut done_u = vec![false; n];
        let mut done_v = vec![false; m];
        for i in 0..n {
            if ra[i] > tol {
                du[i] = 0.0;
            }
        }
        loop {
            let mut best = f64::INFINITY;
            let mut node = None;
            for i in 0..n {
                if !done_u[i] && du[i] < best {
                    best = du[i];
                    node = Some((true, i));
                }
            }
            for j in 0..m {
                if !done_v[j] && dv[j] < best {
                    best = dv[j];
                    node = Some((false, j));
                }
            }
            let Some((is_u, k)) = node else { break };
            if is_u {
                done_u[k] = true;
                for j in 0..m {
                    let cij = c[k * m + j];
                    if cij.is_finite() && !done_v[j] {
                        let nd = du[k] + (cij + pu[k] - pv[j]).max(0.0);
                        if nd < dv[j] {
                            dv[j] = nd;
                            pred_v[j] = k;
                        }
                    }
                }
            } else {
                done_v[k] = true;
                for i in 0..n {
                    if flow[i * m + k] > tol && !done_u[i] {
                        let nd = dv[k] + (-c[i * m + k] + pv[k] - pu[i]).max(0.0);
                        if nd < du[i] {
                            du[i] = nd;
                            pred_u[i] = k;
                        }
                    }
                }
            }
        }
        let mut target = None;
        let mut tdist = f64::INFINITY;
        for j in 0..m {
            if rb[j] > tol && dv[j] < tdist {
                tdist = dv[j];
                target = Some(j);
            }
        }
        let Some(t) = target else {
            return Err(Error::InfeasibleTransport);
        };
        for i in 0..n {
            pu[i] += du[i].min(tdist);
        }
        for j in 0..m {
            pv[j] += dv[j].min(tdist);
        }
        // Walk back: sink t <- source u <- sink v <- ... <- source with supply.
        let mut amount = rb[t];
        let mut j = t;
        loop {
            let i = pred_v[j];
            if pred_u[i] == usize::MAX {
                amount = amount.min(ra[i]);
                break;
            }
            let jp = pred_u[i];
            amount = amount.min(flow[i * m + jp]);
            j = jp;
        }
        let mut j = t;
        loop {
            let i = pred_v[j];
            flow[i * m + j] += amount;
            if pred_u[i] == usize::MAX {
                ra[i] -= amount;
                break;
            }
            let jp = pred_u[i];
            flow[i * m + jp] -= amount;
            j = jp;
        }
        rb[t] -= amount;
    }
    let left: f64 = ra.iter().filter(|v| **v > tol).sum();
    if left > 1e-9 {
        return Err(Error::InfeasibleTransport);
    }
    let total = flow.iter().zip(c).map(|(f, cij)| if *f > 0.0 { f * cij } else { 0.0 }).sum();
    Ok((flow, total))
}
