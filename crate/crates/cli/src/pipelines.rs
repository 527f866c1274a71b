//! Per-configuration work: every requested pipeline at every radius.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use wdro_core::equivalence::{
    expected_loss, robust_cvar, robust_hmcr, upper_bound, worst_case_distribution, Regime, WorstCaseCertificate,
};
use wdro_core::losses::{weak_lipschitz, LossFamily, LossSpec};
use wdro_core::oracle::{lower_bound_l, make_grid, sup_over_grid, RhoStep};
use wdro_core::solver::{minimize_regularized, SolveConfig, StopReason};
use wdro_core::space::DiscreteDistribution;
use wdro_core::Error;

use crate::config::{ExperimentConfig, Pipeline};
use crate::data::resolve;
use crate::report::{float, Table, BOUND_COLUMNS};

/// One line of `trace.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pipeline", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceEvent {
    /// A bisection step of the budgeted program's dual.
    Oracle { config_id: String, delta: f64, step: RhoStep },
    /// The objective at one solver iterate.
    Solve { config_id: String, delta: f64, iteration: usize, objective: f64 },
}

/// One line of `certificates.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateRecord {
    pub config_id: String,
    pub delta: f64,
    pub certificate: WorstCaseCertificate,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub trace: bool,
    pub timing: bool,
}

pub fn header(p: Pipeline) -> Vec<&'static str> {
    let mut h = match p {
        Pipeline::Bounds | Pipeline::Oracle | Pipeline::Certificate => BOUND_COLUMNS.to_vec(),
        Pipeline::Cvar => {
            vec!["config_id", "family", "cost", "alpha", "order", "delta", "nominal", "robust", "threshold", "runtime_ms"]
        }
        Pipeline::Solve => {
            vec!["config_id", "family", "cost", "r", "delta", "objective", "iterations", "stop", "beta", "runtime_ms"]
        }
    };
    match p {
        Pipeline::Oracle => h.extend(["I", "grid_size"]),
        Pipeline::Certificate => h.extend(["achieved", "target", "epsilon_effective", "regime"]),
        _ => {}
    }
    h.push("error");
    h
}

/// Everything one configuration contributes to the outputs.
#[derive(Debug, Clone)]
pub struct ConfigOutput {
    /// One table per pipeline, in `Pipeline::ALL` order; `None` when not requested.
    pub tables: Vec<Option<Table>>,
    pub trace: Vec<TraceEvent>,
    pub certificates: Vec<CertificateRecord>,
    pub failed: bool,
}

type Cells = Vec<(&'static str, String)>;

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    loss: &'a LossSpec,
    data: &'a DiscreteDistribution,
    opts: Options,
}

impl Ctx<'_> {
    fn ident(&self, delta: f64) -> Cells {
        vec![
            ("config_id", self.cfg.config_id.clone()),
            ("family", self.loss.name().to_string()),
            ("cost", self.loss.cost().name().to_string()),
            ("delta", float(delta)),
        ]
    }
}

fn regime_name(r: Regime) -> String {
    match r {
        Regime::Equivalent => "equivalent".into(),
        Regime::Saturated { value } => format!("saturated({})", float(value)),
        Regime::Unverified => "unverified".into(),
    }
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::IterationCap => "iteration_cap",
        StopReason::Stall => "stall",
        StopReason::ZeroSubgradient => "zero_subgradient",
    }
}

fn bounds(ctx: &Ctx, delta: f64) -> wdro_core::Result<Cells> {
    let b = upper_bound(ctx.loss, ctx.data, delta)?;
    Ok(vec![
        ("r", float(ctx.loss.r())),
        ("E", float(b.expected)),
        ("L", float(b.lipschitz)),
        ("U", float(b.upper)),
    ])
}

fn oracle(ctx: &Ctx, delta: f64, trace: &mut Vec<TraceEvent>) -> wdro_core::Result<Cells> {
    let b = upper_bound(ctx.loss, ctx.data, delta)?;
    let grid = make_grid(ctx.loss, ctx.data, delta, ctx.cfg.grid_resolution)?;
    let mut steps = Vec::new();
    let mut record = |s: &RhoStep| steps.push(*s);
    let hook: Option<&mut dyn FnMut(&RhoStep)> = if ctx.opts.trace { Some(&mut record) } else { None };
    let sol = sup_over_grid(ctx.loss, ctx.data, delta, &grid, hook)?;
    let lower = lower_bound_l(ctx.loss, ctx.data, delta, &grid)?;
    trace.extend(steps.into_iter().map(|step| TraceEvent::Oracle { config_id: ctx.cfg.config_id.clone(), delta, step }));
    let radius = sol.used_budget.max(0.0).powf(1.0 / ctx.loss.r());
    Ok(vec![
        ("r", float(ctx.loss.r())),
        ("E", float(b.expected)),
        ("L", float(b.lipschitz)),
        ("U", float(b.upper)),
        ("L_lower", float(lower)),
        ("oracle_value", float(sol.value)),
        ("gap", float(b.upper - sol.value)),
        ("radius", float(radius)),
        ("I", float(sol.dual_value)),
        ("grid_size", grid.len().to_string()),
    ])
}

fn certificate(ctx: &Ctx, delta: f64, records: &mut Vec<CertificateRecord>) -> wdro_core::Result<Cells> {
    let b = upper_bound(ctx.loss, ctx.data, delta)?;
    let cert = if delta == 0.0 {
        // The empirical distribution is the only point of a zero-radius ball.
        let e = expected_loss(ctx.loss, ctx.data)?;
        WorstCaseCertificate {
            distribution: ctx.data.clone(),
            achieved_value: e,
            target_value: e,
            epsilon_effective: 0.0,
            wasserstein_radius: 0.0,
            regime: Regime::Equivalent,
        }
    } else {
        let lc = weak_lipschitz(ctx.loss, ctx.data)?;
        let l_min = lc.per_point.iter().copied().fold(f64::INFINITY, f64::min);
        let eps = ctx.cfg.epsilon_fraction * l_min.min(delta * l_min);
        worst_case_distribution(ctx.loss, ctx.data, delta, eps)?
    };
    let cells = vec![
        ("r", float(ctx.loss.r())),
        ("E", float(b.expected)),
        ("L", float(b.lipschitz)),
        ("U", float(b.upper)),
        ("gap", float(b.upper - cert.achieved_value)),
        ("radius", float(cert.wasserstein_radius)),
        ("achieved", float(cert.achieved_value)),
        ("target", float(cert.target_value)),
        ("epsilon_effective", float(cert.epsilon_effective)),
        ("regime", regime_name(cert.regime)),
    ];
    records.push(CertificateRecord { config_id: ctx.cfg.config_id.clone(), delta, certificate: cert });
    Ok(cells)
}

fn cvar(ctx: &Ctx, delta: f64) -> wdro_core::Result<Cells> {
    let (risk, order) = match ctx.loss.family() {
        LossFamily::Hmcr { order, .. } => (robust_hmcr(ctx.loss, ctx.data, delta)?, *order),
        LossFamily::CvarAbsResidual { .. } | LossFamily::CvarMargin { .. } => (robust_cvar(ctx.loss, ctx.data, delta)?, 1.0),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "the cvar pipeline needs a CVaR or HMCR family, got {}",
                ctx.loss.name()
            )))
        }
    };
    let alpha = ctx.loss.family().alpha().unwrap_or(f64::NAN);
    Ok(vec![
        ("alpha", float(alpha)),
        ("order", float(order)),
        ("nominal", float(risk.nominal)),
        ("robust", float(risk.robust)),
        ("threshold", float(risk.threshold)),
    ])
}

fn solve(ctx: &Ctx, delta: f64, trace: &mut Vec<TraceEvent>) -> wdro_core::Result<Cells> {
    let s = &ctx.cfg.solver;
    let config = SolveConfig {
        loss: ctx.loss.clone(),
        delta,
        step0: s.step0,
        max_iter: s.max_iter,
        stall_tol: s.stall_tol,
        stall_window: s.stall_window,
        record_trajectory: ctx.opts.trace,
    };
    let res = minimize_regularized(&config, ctx.data, ctx.loss.family().beta())?;
    trace.extend(res.trajectory.iter().enumerate().map(|(iteration, &objective)| TraceEvent::Solve {
        config_id: ctx.cfg.config_id.clone(),
        delta,
        iteration,
        objective,
    }));
    let beta: Vec<String> = res.beta.iter().map(|v| float(*v)).collect();
    Ok(vec![
        ("r", float(ctx.loss.r())),
        ("objective", float(res.objective)),
        ("iterations", res.iterations.to_string()),
        ("stop", stop_name(res.stop).to_string()),
        ("beta", beta.join(";")),
    ])
}

/// Runs every requested pipeline of one configuration. Failures become rows
/// with the `error` column set; later rows still run.
pub fn run_config(cfg: &ExperimentConfig, opts: Options) -> ConfigOutput {
    let mut tables: Vec<Option<Table>> =
        Pipeline::ALL.iter().map(|p| cfg.pipelines.contains(p).then(|| Table::new(header(*p)))).collect();
    let mut out_trace = Vec::new();
    let mut certificates = Vec::new();
    let mut failed = false;
    let loss = &cfg.loss;
    let data = match resolve(&cfg.data, loss) {
        Ok(d) => d,
        Err(e) => {
            for t in tables.iter_mut().flatten() {
                t.push(&[
                    ("config_id", cfg.config_id.clone()),
                    ("family", loss.name().to_string()),
                    ("cost", loss.cost().name().to_string()),
                    ("error", format!("data: {e}")),
                ]);
            }
            return ConfigOutput { tables, trace: out_trace, certificates, failed: true };
        }
    };
    let ctx = Ctx { cfg, loss, data: &data, opts };
    for (p, table) in Pipeline::ALL.iter().zip(tables.iter_mut()) {
        let Some(table) = table else { continue };
        for &delta in &cfg.delta_grid {
            let start = Instant::now();
            let result = match p {
                Pipeline::Bounds => bounds(&ctx, delta),
                Pipeline::Oracle => oracle(&ctx, delta, &mut out_trace),
                Pipeline::Certificate => certificate(&ctx, delta, &mut certificates),
                Pipeline::Cvar => cvar(&ctx, delta),
                Pipeline::Solve => solve(&ctx, delta, &mut out_trace),
            };
            let mut cells = ctx.ident(delta);
            match result {
                Ok(c) => cells.extend(c),
                Err(e) => {
                    failed = true;
                    cells.push(("error", e.to_string()));
                }
            }
            if opts.timing {
                cells.push(("runtime_ms", float(start.elapsed().as_secs_f64() * 1e3)));
            }
            table.push(&cells);
        }
    }
    ConfigOutput { tables, trace: out_trace, certificates, failed }
}
