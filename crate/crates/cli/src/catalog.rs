//! Supported loss and cost pairings.

use wdro_core::costs::{CostSpec, GroundNorm};
use wdro_core::linalg::Matrix;
use wdro_core::losses::{FunctionalCoef, FunctionalShape, LossFamily, LossSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogRow {
    pub family: &'static str,
    pub cost: &'static str,
    pub exponent: &'static str,
    pub lipschitz: &'static str,
    pub bound: &'static str,
    pub regime: &'static str,
}

fn families() -> Vec<LossFamily> {
    let b = vec![1.0];
    vec![
        LossFamily::AbsLinear { beta: b.clone() },
        LossFamily::LowerPartial { beta: b.clone(), tau: 0.5 },
        LossFamily::TauInsensitive { beta: b.clone(), tau: 0.5 },
        LossFamily::LogCosh { beta: b.clone() },
        LossFamily::Huber { beta: b.clone() },
        LossFamily::Quantile { beta: b.clone(), gamma: 0.5 },
        LossFamily::HingePow { beta: b.clone() },
        LossFamily::SvmAbsPow { beta: b.clone() },
        LossFamily::LogExp { beta: b.clone() },
        LossFamily::SmoothHinge { beta: b.clone() },
        LossFamily::TruncPinball { beta: b.clone(), tau1: 0.5, tau2: 0.5 },
        LossFamily::BinaryCrossEntropy { beta: 0.5 },
        LossFamily::HardSigmoid { beta: b.clone() },
        LossFamily::RidgeSquare { beta: b.clone() },
        LossFamily::FunctionalLinear {
            coefficient: FunctionalCoef::Nodal { beta: vec![1.0, 1.0] },
            shape: FunctionalShape::Abs,
            grid_nodes: 2,
        },
        LossFamily::CvarAbsResidual { beta: b.clone(), alpha: 0.5 },
        LossFamily::CvarMargin { beta: b.clone(), alpha: 0.5 },
        LossFamily::Hmcr { beta: b, alpha: 0.5, order: 2.0 },
    ]
}

fn costs() -> Vec<CostSpec> {
    let n = GroundNorm::L2;
    vec![
        CostSpec::FullNorm { norm: n.clone() },
        CostSpec::FeatureNormLabelIndicator { norm: n.clone() },
        CostSpec::SubsetNorm { norm: n.clone(), index_set: vec![0] },
        CostSpec::SemiNormB { b: Matrix::from_rows(vec![vec![1.0]]).expect("1 x 1 matrix") },
        CostSpec::ProductCost,
        CostSpec::L2FunctionLabelIndicator,
        CostSpec::PlainNorm { norm: n },
        CostSpec::AbsoluteScalar,
    ]
}

fn lipschitz(family: &LossFamily, cost: &CostSpec) -> &'static str {
    match (family, cost) {
        (LossFamily::BinaryCrossEntropy { .. }, _) => {
            "per atom: beta max(-h(t)/t, |h(beta) - h(t)|/(beta - t)), t = beta z, h(t) = t ln t + (1-t) ln(1-t)"
        }
        (LossFamily::HardSigmoid { .. }, _) => "per atom: ||beta||_*/2 if |<beta, z>| < 1, else 0",
        (LossFamily::RidgeSquare { .. }, _) => "||beta||_2^2 + 1",
        (LossFamily::FunctionalLinear { .. }, _) => "||b||_L2 under trapezoid quadrature",
        (_, CostSpec::FullNorm { .. }) => "||(-beta, 1)||_*",
        (_, CostSpec::SubsetNorm { .. }) => "||beta_I||_*",
        (_, CostSpec::SemiNormB { .. }) => "||B beta||_2",
        (_, CostSpec::AbsoluteScalar) => "|beta|",
        _ => "||beta||_*",
    }
}

fn bound(family: &LossFamily) -> &'static str {
    match family {
        LossFamily::CvarAbsResidual { .. } | LossFamily::CvarMargin { .. } => "CVaR + L delta / (1 - alpha)",
        LossFamily::Hmcr { .. } => "HMCR + L delta / (1 - alpha)",
        f if f.accepts_power() => "(E^(1/r) + L delta)^r",
        _ => "E + L delta",
    }
}

/// Every cataloged pairing, in a fixed order.
pub fn catalog() -> Vec<CatalogRow> {
    let mut rows = Vec::new();
    for f in families() {
        for c in costs() {
            let Ok(spec) = LossSpec::new(f.clone(), 1.0, c.clone()) else { continue };
            if spec.check_pairing().is_err() {
                continue;
            }
            rows.push(CatalogRow {
                family: f.name(),
                cost: c.name(),
                exponent: if f.accepts_power() { "r >= 1" } else { "r = 1" },
                lipschitz: lipschitz(&f, &c),
                bound: bound(&f),
                regime: if f.is_conditional() { "conditional regime" } else { "unconditional" },
            });
        }
    }
    rows
}

/// The catalog as an aligned text table.
pub fn render() -> String {
    let rows = catalog();
    let pairs: Vec<String> = rows.iter().map(|r| format!("{} × {}", r.family, r.cost)).collect();
    let w = pairs.iter().map(|p| p.chars().count()).max().unwrap_or(0);
    let mut out = format!("{:<w$}  {:<7}  {:<28}  {:<18}  L\n", "pairing", "r", "bound", "regime");
    for (r, p) in rows.iter().zip(&pairs) {
        let pad = w - p.chars().count();
        out.push_str(&format!(
            "{p}{}  {:<7}  {:<28}  {:<18}  {}\n",
            " ".repeat(pad),
            r.exponent,
            r.bound,
            r.regime,
            r.lipschitz
        ));
    }
    out
}
