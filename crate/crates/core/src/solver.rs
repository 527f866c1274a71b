//! Subgradient descent on the regularized training objective
//!
//! ```text
//! F(beta) = (E_{P_N}[psi_beta^r])^{1/r} + L(beta) delta
//! ```
//!
//! and on its CVaR and higher-moment analogues, where the radius term is
//! divided by `1 - alpha`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::equivalence::{cvar_of_values, hmcr_minimize};
use crate::losses::{LossFamily, LossSpec};
use crate::math::{pow_r, root_r, sqrt};
use crate::space::DiscreteDistribution;
use crate::{Error, Result};

/// Solver settings. `loss` fixes the family, its parameters, `r` and the cost;
/// its `beta` is ignored in favour of the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub loss: LossSpec,
    pub delta: f64,
    /// Base step `eta_0`; iteration `k` uses `min(eta_0 / sqrt(k), F / |g|^2)`,
    /// the second term only while `F > 0`.
    #[serde(default = "default_step")]
    pub step0: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Stop once the best objective improves by less than
    /// `stall_tol (1 + |F_best|)` over `stall_window` iterations.
    #[serde(default = "default_stall_tol")]
    pub stall_tol: f64,
    #[serde(default = "default_stall_window")]
    pub stall_window: usize,
    #[serde(default)]
    pub record_trajectory: bool,
}

fn default_step() -> f64 {
    0.5
}

fn default_max_iter() -> usize {
    20_000
}

fn default_stall_tol() -> f64 {
    1e-12
}

fn default_stall_window() -> usize {
    2_000
}

impl SolveConfig {
    pub fn new(loss: LossSpec, delta: f64) -> Self {
        SolveConfig {
            loss,
            delta,
            step0: default_step(),
            max_iter: default_max_iter(),
            stall_tol: default_stall_tol(),
            stall_window: default_stall_window(),
            record_trajectory: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationCap,
    Stall,
    ZeroSubgradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub beta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub stop: StopReason,
    /// Objective at every iterate, when requested.
    pub trajectory: Vec<f64>,
}

/// `F(beta)` for the loss as configured.
pub fn objective(loss: &LossSpec, data: &DiscreteDistribution, delta: f64) -> Result<f64> {
    Ok(objective_and_subgradient(loss, data, delta)?.0)
}

/// `F(beta)` and one subgradient.
pub fn objective_and_subgradient(loss: &LossSpec, data: &DiscreteDistribution, delta: f64) -> Result<(f64, Vec<f64>)> {
    if !loss.family().is_convex() {
        return Err(Error::NonConvexFamily { family: loss.name() });
    }
    let p = loss.family().beta().len();
    let l = loss.global_lipschitz()?;
    let dl = loss.lipschitz_grad()?;
    let mut psis = Vec::with_capacity(data.len());
    let mut grads = Vec::with_capacity(data.len());
    for (z, w) in data.iter() {
        if w > 0.0 {
            let (v, g) = loss.psi_and_grad(z)?;
            psis.push(v);
            grads.push(g);
        } else {
            psis.push(0.0);
            grads.push(vec![0.0; p]);
        }
    }
    let weights = data.weights();
    let mut grad = vec![0.0; p];
    let add = |grad: &mut Vec<f64>, g: &[f64], c: f64| {
        for (o, v) in grad.iter_mut().zip(g) {
            *o += c * v;
        }
    };
    let value = match loss.family() {
        LossFamily::CvarAbsResidual { alpha, .. } | LossFamily::CvarMargin { alpha, .. } => {
            let tail = 1.0 - alpha;
            let nominal = cvar_of_values(&psis, weights, *alpha)?;
            let mut idx: Vec<usize> = (0..psis.len()).collect();
            idx.sort_by(|&a, &b| psis[b].total_cmp(&psis[a]));
            let mut left = tail;
            for i in idx {
                if left <= 0.0 {
                    break;
                }
                let take = weights[i].min(left);
                add(&mut grad, &grads[i], take / tail);
                left -= take;
            }
            add(&mut grad, &dl, delta / tail);
            nominal + l * delta / tail
        }
        LossFamily::Hmcr { alpha, order, .. } => {
            let tail = 1.0 - alpha;
            let (t, nominal) = hmcr_minimize(&psis, weights, *alpha, *order)?;
            let m: f64 = psis.iter().zip(weights).map(|(g, w)| w * pow_r((g - t).max(0.0), *order)).sum();
            if m > 0.0 {
                let scale = pow_r(m, 1.0 / order - 1.0) / tail;
                for ((g, w), gr) in psis.iter().zip(weights).zip(&grads) {
                    let e = (g - t).max(0.0);
                    if e > 0.0 {
                        add(&mut grad, gr, scale * w * pow_r(e, order - 1.0));
                    }
                }
            }
            add(&mut grad, &dl, delta / tail);
            nominal + l * delta / tail
        }
        _ => {
            let r = loss.r();
            let m: f64 = psis.iter().zip(weights).map(|(v, w)| w * pow_r(*v, r)).sum();
            if m > 0.0 {
                let scale = pow_r(m, 1.0 / r - 1.0);
                for ((v, w), gr) in psis.iter().zip(weights).zip(&grads) {
                    if *w > 0.0 {
                        add(&mut grad, gr, scale * w * pow_r(*v, r - 1.0));
                    }
                }
            }
            add(&mut grad, &dl, delta);
            root_r(m, r) + l * delta
        }
    };
    Ok((value, grad))
}

/// Minimizes `F` from `beta0`, returning the best iterate.
pub fn minimize_regularized(config: &SolveConfig, data: &DiscreteDistribution, beta0: &[f64]) -> Result<SolveResult> {
    if !config.loss.family().is_convex() {
        return Err(Error::NonConvexFamily { family: config.loss.name() });
    }
    if !(config.delta.is_finite() && config.delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be finite and nonnegative, got {}", config.delta)));
    }
    if !(config.step0.is_finite() && config.step0 > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {}", config.step0)));
    }
    let mut spec = config.loss.with_beta(beta0)?;
    let mut beta = beta0.to_vec();
    let (f0, mut g) = objective_and_subgradient(&spec, data, config.delta)?;
    let limit = 1e3 * f0.abs().max(1.0);
    let mut best = (beta.clone(), f0);
    let mut trajectory = Vec::new();
    if config.record_trajectory {
        trajectory.push(f0);
    }
    let mut f = f0;
    let mut mark = f0;
    let mut since = 0;
    let mut stop = StopReason::IterationCap;
    let mut k = 0;
    while k < config.max_iter {
        k += 1;
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        if gn2 == 0.0 {
            stop = StopReason::ZeroSubgradient;
            break;
        }
        let mut step = config.step0 / sqrt(k as f64);
        if f > 0.0 {
            step = step.min(f / gn2);
        }
        for (b, gi) in beta.iter_mut().zip(&g) {
            *b -= step * gi;
        }
        spec = spec.with_beta(&beta)?;
        let (fv, gv) = objective_and_subgradient(&spec, data, config.delta)?;
        if !fv.is_finite() || fv > limit {
            return Err(Error::DivergenceDetected { iteration: k, value: fv });
        }
        if config.record_trajectory {
            trajectory.push(fv);
        }
        f = fv;
        g = gv;
        if fv < best.1 {
            best = (beta.clone(), fv);
        }
        since += 1;
        if since >= config.stall_window {
            if mark - best.1 <= config.stall_tol * (1.0 + best.1.abs()) {
                stop = StopReason::Stall;
                break;
            }
            mark = best.1;
            since = 0;
        }
    }
    let objective = objective(&config.loss.with_beta(&best.0)?, data, config.delta)?;
    Ok(SolveResult { beta: best.0, objective, iterations: k, stop, trajectory })
}

/// Largest deviation `|g_k - fd_k| / max(1, |fd_k|)` between the analytic
/// subgradient and central differences with step `h`.
pub fn finite_difference_check(loss: &LossSpec, data: &DiscreteDistribution, delta: f64, h: f64) -> Result<f64> {
    let (_, g) = objective_and_subgradient(loss, data, delta)?;
    let beta = loss.family().beta().to_vec();
    let mut worst = 0.0f64;
    for k in 0..beta.len() {
        let mut up = beta.clone();
        let mut dn = beta.clone();
        up[k] += h;
        dn[k] -= h;
        let fd = (objective(&loss.with_beta(&up)?, data, delta)? - objective(&loss.with_beta(&dn)?, data, delta)?) / (2.0 * h);
        worst = worst.max((g[k] - fd).abs() / fd.abs().max(1.0));
    }
    Ok(worst)
}
