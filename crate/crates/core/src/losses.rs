//! Loss families `psi`, their weak-Lipschitz constants and witness points.
//!
//! Most families are an outer function `h` applied to a score `t` that is
//! linear in the moved coordinates:
//!
//! ```text
//! residual  t = y - <beta, x>        (labeled)   or  <beta, z>  (plain)
//! margin    t = y <beta, x>          (binary)
//! function  t = y - int x(s) b(s) ds (sampled)
//! ```
//!
//! Every such pairing has a unit-cost direction `v` along which `t` grows at
//! the rate `L_phi`, and `h` is 1-Lipschitz, so `L = L_phi`. Binary cross
//! entropy and the hard sigmoid only admit per-point constants; the ridge
//! square loss uses the product cost.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::costs::{eval_cost, CostSpec, GroundNorm};
use crate::math::{dot, exp, ln, ln_1p, pow_r, sgn, sqrt};
use crate::space::{trapezoid_weights, DiscreteDistribution, Point, PointKind};
use crate::{Error, Result};

const MAX_DOUBLINGS: usize = 60;
const ALPHA_MAX: f64 = 1.0 - 1e-6;

/// Coefficient function of the functional linear model, sampled on the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalCoef {
    /// `b(t_k) = beta_k`.
    Nodal { beta: Vec<f64> },
    /// `b = sum_j beta_j g_j`; each basis function is given by its node values.
    Basis { beta: Vec<f64>, basis: Vec<Vec<f64>> },
}

/// Outer function of the functional linear model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalShape {
    Abs,
    LowerPartial { tau: f64 },
    Insensitive { tau: f64 },
}

/// Loss family with its parameters. Serialized with a `"family"` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossFamily {
    /// `|phi|`.
    AbsLinear { beta: Vec<f64> },
    /// `(phi - tau)_+`.
    LowerPartial { beta: Vec<f64>, tau: f64 },
    /// `(|phi| - tau)_+`.
    TauInsensitive { beta: Vec<f64>, tau: f64 },
    LogCosh { beta: Vec<f64> },
    Huber { beta: Vec<f64> },
    /// Pinball with slope `gamma` on the right and 1 on the left.
    Quantile { beta: Vec<f64>, gamma: f64 },
    /// `(1 - t)_+` on the margin.
    HingePow { beta: Vec<f64> },
    /// `|1 - t|` on the margin.
    SvmAbsPow { beta: Vec<f64> },
    /// `log(1 + exp(-t))`.
    LogExp { beta: Vec<f64> },
    SmoothHinge { beta: Vec<f64> },
    TruncPinball { beta: Vec<f64>, tau1: f64, tau2: f64 },
    /// `h(beta z)` with `h(t) = t ln t + (1 - t) ln(1 - t)` on `z in (0, 1)`.
    BinaryCrossEntropy { beta: f64 },
    /// `max(0, min(1, (<beta, z> + 1) / 2))`.
    HardSigmoid { beta: Vec<f64> },
    /// `(y + <beta, x>)^2`.
    RidgeSquare { beta: Vec<f64> },
    FunctionalLinear { coefficient: FunctionalCoef, shape: FunctionalShape, grid_nodes: usize },
    /// `G = |phi|`, used through CVaR.
    CvarAbsResidual { beta: Vec<f64>, alpha: f64 },
    /// `G = -y <beta, x>`, used through CVaR.
    CvarMargin { beta: Vec<f64>, alpha: f64 },
    /// `G = <beta, z>`, used through the higher-moment risk of the given order.
    Hmcr { beta: Vec<f64>, alpha: f64, order: f64 },
}

impl LossFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::AbsLinear { .. } => "AbsLinear",
            LossFamily::LowerPartial { .. } => "LowerPartial",
            LossFamily::TauInsensitive { .. } => "TauInsensitive",
            LossFamily::LogCosh { .. } => "LogCosh",
            LossFamily::Huber { .. } => "Huber",
            LossFamily::Quantile { .. } => "Quantile",
            LossFamily::HingePow { .. } => "HingePow",
            LossFamily::SvmAbsPow { .. } => "SvmAbsPow",
            LossFamily::LogExp { .. } => "LogExp",
            LossFamily::SmoothHinge { .. } => "SmoothHinge",
            LossFamily::TruncPinball { .. } => "TruncPinball",
            LossFamily::BinaryCrossEntropy { .. } => "BinaryCrossEntropy",
            LossFamily::HardSigmoid { .. } => "HardSigmoid",
            LossFamily::RidgeSquare { .. } => "RidgeSquare",
            LossFamily::FunctionalLinear { .. } => "FunctionalLinear",
            LossFamily::CvarAbsResidual { .. } => "CvarAbsResidual",
            LossFamily::CvarMargin { .. } => "CvarMargin",
            LossFamily::Hmcr { .. } => "Hmcr",
        }
    }

    /// Families whose kernel is nonnegative and piecewise linear, the ones
    /// that accept `r > 1`.
    pub fn accepts_power(&self) -> bool {
        matches!(
            self,
            LossFamily::AbsLinear { .. }
                | LossFamily::LowerPartial { .. }
                | LossFamily::TauInsensitive { .. }
                | LossFamily::HingePow { .. }
                | LossFamily::SvmAbsPow { .. }
                | LossFamily::FunctionalLinear { .. }
        )
    }

    /// Families convex in `beta`.
    pub fn is_convex(&self) -> bool {
        !matches!(
            self,
            LossFamily::TruncPinball { .. } | LossFamily::BinaryCrossEntropy { .. } | LossFamily::HardSigmoid { .. }
        )
    }

    /// Families whose equivalence holds only in a conditional regime.
    pub fn is_conditional(&self) -> bool {
        matches!(self, LossFamily::BinaryCrossEntropy { .. } | LossFamily::HardSigmoid { .. })
    }

    /// Risk level of the CVaR-type families.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            LossFamily::CvarAbsResidual { alpha, .. }
            | LossFamily::CvarMargin { alpha, .. }
            | LossFamily::Hmcr { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }

    /// The decision vector `beta`; empty for binary cross entropy.
    pub fn beta(&self) -> &[f64] {
        match self {
            LossFamily::AbsLinear { beta }
            | LossFamily::LowerPartial { beta, .. }
            | LossFamily::TauInsensitive { beta, .. }
            | LossFamily::LogCosh { beta }
            | LossFamily::Huber { beta }
            | LossFamily::Quantile { beta, .. }
            | LossFamily::HingePow { beta }
            | LossFamily::SvmAbsPow { beta }
            | LossFamily::LogExp { beta }
            | LossFamily::SmoothHinge { beta }
            | LossFamily::TruncPinball { beta, .. }
            | LossFamily::HardSigmoid { beta }
            | LossFamily::RidgeSquare { beta }
            | LossFamily::CvarAbsResidual { beta, .. }
            | LossFamily::CvarMargin { beta, .. }
            | LossFamily::Hmcr { beta, .. } => beta,
            LossFamily::FunctionalLinear { coefficient, .. } => match coefficient {
                FunctionalCoef::Nodal { beta } | FunctionalCoef::Basis { beta, .. } => beta,
            },
            LossFamily::BinaryCrossEntropy { .. } => &[],
        }
    }

    fn beta_mut(&mut self) -> Option<&mut Vec<f64>> {
        match self {
            LossFamily::AbsLinear { beta }
            | LossFamily::LowerPartial { beta, .. }
            | LossFamily::TauInsensitive { beta, .. }
            | LossFamily::LogCosh { beta }
            | LossFamily::Huber { beta }
            | LossFamily::Quantile { beta, .. }
            | LossFamily::HingePow { beta }
            | LossFamily::SvmAbsPow { beta }
            | LossFamily::LogExp { beta }
            | LossFamily::SmoothHinge { beta }
            | LossFamily::TruncPinball { beta, .. }
            | LossFamily::HardSigmoid { beta }
            | LossFamily::RidgeSquare { beta }
            | LossFamily::CvarAbsResidual { beta, .. }
            | LossFamily::CvarMargin { beta, .. }
            | LossFamily::Hmcr { beta, .. } => Some(beta),
            LossFamily::FunctionalLinear { coefficient, .. } => match coefficient {
                FunctionalCoef::Nodal { beta } | FunctionalCoef::Basis { beta, .. } => Some(beta),
            },
            LossFamily::BinaryCrossEntropy { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.beta().iter().any(|b| !b.is_finite()) {
            return bad(format!("{}: non-finite beta", self.name()));
        }
        let finite = |name: &str, v: f64| if v.is_finite() { Ok(()) } else { bad(format!("{name} must be finite")) };
        match self {
            LossFamily::LowerPartial { tau, .. } | LossFamily::TauInsensitive { tau, .. } => finite("tau", *tau)?,
            LossFamily::Quantile { gamma, .. } if !(*gamma > 0.0 && *gamma < 1.0) => {
                return bad(format!("quantile gamma must lie in (0, 1), got {gamma}"));
            }
            LossFamily::TruncPinball { tau1, tau2, .. } if !((0.0..=1.0).contains(tau1) && *tau2 >= 0.0 && tau2.is_finite()) => {
                return bad(format!("truncated pinball needs tau1 in [0, 1] and tau2 >= 0, got {tau1}, {tau2}"));
            }
            LossFamily::BinaryCrossEntropy { beta } if !(*beta > 0.0 && *beta < 1.0) => {
                return bad(format!("cross entropy beta must lie in (0, 1), got {beta}"));
            }
            LossFamily::CvarAbsResidual { alpha, .. } | LossFamily::CvarMargin { alpha, .. } => check_alpha(*alpha)?,
            LossFamily::Hmcr { alpha, order, .. } => {
                check_alpha(*alpha)?;
                if !(order.is_finite() && *order >= 1.0) {
                    return bad(format!("moment order must be >= 1, got {order}"));
                }
            }
            LossFamily::FunctionalLinear { coefficient, shape, grid_nodes } => {
                if *grid_nodes < 2 {
                    return bad(format!("grid_nodes must be at least 2, got {grid_nodes}"));
                }
                match shape {
                    FunctionalShape::LowerPartial { tau } | FunctionalShape::Insensitive { tau } => finite("tau", *tau)?,
                    FunctionalShape::Abs => {}
                }
                match coefficient {
                    FunctionalCoef::Nodal { beta } if beta.len() != *grid_nodes => {
                        return Err(Error::DimensionMismatch { expected: *grid_nodes, found: beta.len() });
                    }
                    FunctionalCoef::Basis { beta, basis } => {
                        if basis.len() != beta.len() {
                            return Err(Error::DimensionMismatch { expected: basis.len(), found: beta.len() });
                        }
                        if let Some(g) = basis.iter().find(|g| g.len() != *grid_nodes) {
                            return Err(Error::DimensionMismatch { expected: *grid_nodes, found: g.len() });
                        }
                    }
                    _ => {}
                }
            }
            _ => {}
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && (0.0..=ALPHA_MAX).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange { alpha })
    }
}

/// A loss family together with the exponent `r` and the transport cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LossSpecRepr", into = "LossSpecRepr")]
pub struct LossSpec {
    family: LossFamily,
    r: f64,
    cost: CostSpec,
}

#[derive(Serialize, Deserialize)]
struct LossSpecRepr {
    #[serde(flatten)]
    family: LossFamily,
    r: f64,
    cost: CostSpec,
}

impl TryFrom<LossSpecRepr> for LossSpec {
    type Error = Error;

    fn try_from(r: LossSpecRepr) -> Result<Self> {
        LossSpec::new(r.family, r.r, r.cost)
    }
}

impl From<LossSpec> for LossSpecRepr {
    fn from(s: LossSpec) -> Self {
        LossSpecRepr { family: s.family, r: s.r, cost: s.cost }
    }
}

/// Scope of a weak-Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Global,
    PerPoint,
}

/// Whether the closed-form bound is claimed to be attained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Unconditional,
    Conditional,
}

/// Weak-Lipschitz certificate `|psi(z') - psi(z)| <= L d(z', z)` at the atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCertificate {
    /// `max_i L_i`.
    pub constant: f64,
    pub scope: Scope,
    /// One constant per atom of the distribution the certificate was built for.
    pub per_point: Vec<f64>,
    pub claim: Claim,
}

/// Target of a witness search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WitnessMode {
    /// Any distance `>= delta` with slope at least `L - epsilon`.
    Steep,
    /// Exactly the given distance, with slope at least `L - epsilon`.
    AtDistance(f64),
}

/// Outer function applied to a linear score.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Outer {
    Abs,
    LowerPartial(f64),
    Insensitive(f64),
    Hinge,
    SvmAbs,
    Neg,
    Identity,
    LogCosh,
    Huber,
    Quantile(f64),
    LogExp,
    SmoothHinge,
    TruncPinball(f64, f64),
}

impl Outer {
    fn value(self, t: f64) -> f64 {
        match self {
            Outer::Abs => t.abs(),
            Outer::LowerPartial(tau) => (t - tau).max(0.0),
            Outer::Insensitive(tau) => (t.abs() - tau).max(0.0),
            Outer::Hinge => (1.0 - t).max(0.0),
            Outer::SvmAbs => (1.0 - t).abs(),
            Outer::Neg => -t,
            Outer::Identity => t,
            Outer::LogCosh => {
                let a = t.abs();
                a + ln_1p(exp(-2.0 * a)) - core::f64::consts::LN_2
            }
            Outer::Huber => {
                if t.abs() <= 1.0 {
                    0.5 * t * t
                } else {
                    t.abs() - 0.5
                }
            }
            Outer::Quantile(g) => {
                if t >= 0.0 {
                    g * t
                } else {
                    -t
                }
            }
            Outer::LogExp => {
                if t > 0.0 {
                    ln_1p(exp(-t))
                } else {
                    -t + ln_1p(exp(t))
                }
            }
            Outer::SmoothHinge => {
                if t >= 1.0 {
                    0.0
                } else if t > 0.0 {
                    0.5 * (1.0 - t) * (1.0 - t)
                } else {
                    0.5 - t
                }
            }
            Outer::TruncPinball(t1, t2) => {
                if t <= 1.0 {
                    1.0 - t
                } else if t < t2 + 1.0 {
                    t1 * (t - 1.0)
                } else {
                    t1 * t2
                }
            }
        }
    }

    /// A subgradient of the outer function.
    fn deriv(self, t: f64) -> f64 {
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            Outer::Abs => sgn(t),
            Outer::LowerPartial(tau) => ind(t > tau),
            Outer::Insensitive(tau) => sgn(t) * ind(t.abs() > tau),
            Outer::Hinge => -ind(t < 1.0),
            Outer::SvmAbs => -sgn(1.0 - t),
            Outer::Neg => -1.0,
            Outer::Identity => 1.0,
            Outer::LogCosh => libm::tanh(t),
            Outer::Huber => t.clamp(-1.0, 1.0),
            Outer::Quantile(g) => {
                if t >= 0.0 {
                    g
                } else {
                    -1.0
                }
            }
            Outer::LogExp => -1.0 / (1.0 + exp(t)),
            Outer::SmoothHinge => {
                if t >= 1.0 {
                    0.0
                } else if t > 0.0 {
                    t - 1.0
                } else {
                    -1.0
                }
            }
            Outer::TruncPinball(t1, t2) => {
                if t <= 1.0 {
                    -1.0
                } else if t < t2 + 1.0 {
                    t1
                } else {
                    0.0
                }
            }
        }
    }

    /// Direction in which the score should move to gain slope 1.
    fn ascent(self, t: f64) -> f64 {
        match self {
            Outer::Abs | Outer::Insensitive(_) | Outer::LogCosh | Outer::Huber => sgn(t),
            Outer::LowerPartial(_) | Outer::Identity => 1.0,
            Outer::SvmAbs => -sgn(1.0 - t),
            Outer::Hinge | Outer::Neg | Outer::Quantile(_) | Outer::LogExp | Outer::SmoothHinge | Outer::TruncPinball(..) => {
                -1.0
            }
        }
    }

    /// For the exact-slope piecewise-linear outers, how far the score must
    /// travel along the ascent before the slope becomes 1.
    fn dead_zone(self, t: f64) -> Option<f64> {
        match self {
            Outer::Abs | Outer::SvmAbs | Outer::Neg | Outer::Identity => Some(0.0),
            Outer::LowerPartial(tau) => Some((tau - t).max(0.0)),
            Outer::Insensitive(tau) => Some((tau - t.abs()).max(0.0)),
            Outer::Hinge => Some((t - 1.0).max(0.0)),
            _ => None,
        }
    }
}

/// Linear score `t(z)`.
#[derive(Debug, Clone, Copy)]
enum Score<'a> {
    Residual(&'a [f64]),
    Margin(&'a [f64]),
    Functional { coef: &'a FunctionalCoef, nodes: usize },
}

#[derive(Debug, Clone, Copy)]
enum Model<'a> {
    Linear(Score<'a>, Outer),
    Bce(f64),
    HardSigmoid(&'a [f64]),
    Ridge(&'a [f64]),
}

fn functional_b(coef: &FunctionalCoef, nodes: usize) -> Vec<f64> {
    match coef {
        FunctionalCoef::Nodal { beta } => beta.clone(),
        FunctionalCoef::Basis { beta, basis } => {
            let mut b = vec![0.0; nodes];
            for (bj, g) in beta.iter().zip(basis) {
                for (o, gk) in b.iter_mut().zip(g) {
                    *o += bj * gk;
                }
            }
            b
        }
    }
}

fn quad_norm(b: &[f64], w: &[f64]) -> f64 {
    sqrt(b.iter().zip(w).map(|(v, wk)| wk * v * v).sum())
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Moves `z` by `s * dir`. For labeled points `dir` has one extra entry for `y`.
fn displace(z: &Point, dir: &[f64], s: f64) -> Point {
    match z {
        Point::Labeled { x, y } => Point::Labeled {
            x: x.iter().zip(dir).map(|(a, d)| a + s * d).collect(),
            y: y + s * dir.get(x.len()).copied().unwrap_or(0.0),
        },
        _ => z.shifted(dir, s),
    }
}

fn bce_h(t: f64) -> f64 {
    t * ln(t) + (1.0 - t) * ln_1p(-t)
}

fn hard_sigmoid(t: f64) -> f64 {
    ((t + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Largest chord slope of the hard sigmoid from `t_hat`.
fn hard_sigmoid_slope(t_hat: f64) -> f64 {
    if t_hat.abs() <= 1.0 {
        0.5
    } else {
        1.0 / (t_hat.abs() + 1.0)
    }
}

impl<'a> Score<'a> {
    fn value(self, z: &Point) -> Result<f64> {
        match (self, z) {
            (Score::Residual(b), Point::Labeled { x, y }) => {
                check_dim(b.len(), x.len())?;
                Ok(y - dot(b, x))
            }
            (Score::Residual(b), Point::Plain(v)) => {
                check_dim(b.len(), v.len())?;
                Ok(dot(b, v))
            }
            (Score::Margin(b), Point::Binary { x, y }) => {
                check_dim(b.len(), x.len())?;
                Ok(y.value() * dot(b, x))
            }
            (Score::Functional { coef, nodes }, Point::Sampled { values, quad_weights, y }) => {
                check_dim(nodes, values.len())?;
                let b = functional_b(coef, nodes);
                Ok(y - values.iter().zip(&b).zip(quad_weights).map(|((x, bk), w)| w * x * bk).sum::<f64>())
            }
            (s, z) => Err(Error::VariantMismatch { expected: s.kind_name(), found: z.kind().name() }),
        }
    }

    fn kind_name(self) -> &'static str {
        match self {
            Score::Residual(_) => "labeled or plain",
            Score::Margin(_) => "binary",
            Score::Functional { .. } => "sampled",
        }
    }

    /// `d t / d beta` at `z`.
    fn grad_beta(self, z: &Point) -> Result<Vec<f64>> {
        match (self, z) {
            (Score::Residual(_), Point::Labeled { x, .. }) => Ok(x.iter().map(|v| -v).collect()),
            (Score::Residual(_), Point::Plain(v)) => Ok(v.clone()),
            (Score::Margin(_), Point::Binary { x, y }) => Ok(x.iter().map(|v| y.value() * v).collect()),
            (Score::Functional { coef, .. }, Point::Sampled { values, quad_weights, .. }) => {
                let wx: Vec<f64> = values.iter().zip(quad_weights).map(|(x, w)| -w * x).collect();
                Ok(match coef {
                    FunctionalCoef::Nodal { .. } => wx,
                    FunctionalCoef::Basis { basis, .. } => basis.iter().map(|g| dot(g, &wx)).collect(),
                })
            }
            (s, z) => Err(Error::VariantMismatch { expected: s.kind_name(), found: z.kind().name() }),
        }
    }

    /// `L_phi`, the largest rate of change of `t` per unit cost.
    fn lipschitz(self, cost: &CostSpec) -> Result<f64> {
        match self {
            Score::Residual(b) => match cost {
                CostSpec::FullNorm { norm } => {
                    let mut v: Vec<f64> = b.iter().map(|x| -x).collect();
                    v.push(1.0);
                    norm.dual_norm(&v)
                }
                CostSpec::FeatureNormLabelIndicator { norm } | CostSpec::PlainNorm { norm } => norm.dual_norm(b),
                CostSpec::SubsetNorm { norm, index_set } => {
                    let sub: Vec<f64> = index_set.iter().map(|&i| b.get(i).copied().unwrap_or(0.0)).collect();
                    norm.dual_norm(&sub)
                }
                CostSpec::SemiNormB { b: m } => {
                    check_dim(m.cols(), b.len())?;
                    let g = m.mul_vec(b);
                    Ok(sqrt(dot(&g, &g)))
                }
                CostSpec::AbsoluteScalar => {
                    check_dim(1, b.len())?;
                    Ok(b[0].abs())
                }
                _ => unreachable!("pairing checked"),
            },
            Score::Margin(b) => match cost {
                CostSpec::FeatureNormLabelIndicator { norm } => norm.dual_norm(b),
                _ => unreachable!("pairing checked"),
            },
            Score::Functional { coef, nodes } => {
                let w = trapezoid_weights(nodes)?;
                Ok(quad_norm(&functional_b(coef, nodes), &w))
            }
        }
    }

    /// A subgradient of `L_phi` with respect to `beta`.
    fn lipschitz_grad(self, cost: &CostSpec) -> Result<Vec<f64>> {
        let achiever = |norm: &GroundNorm, v: &[f64]| match norm.dual_achiever(v) {
            Err(Error::ZeroVector) => Ok(vec![0.0; v.len()]),
            other => other,
        };
        match self {
            Score::Residual(b) => match cost {
                CostSpec::FullNorm { norm } => {
                    let mut v: Vec<f64> = b.iter().map(|x| -x).collect();
                    v.push(1.0);
                    let u = achiever(norm, &v)?;
                    Ok(u[..b.len()].iter().map(|x| -x).collect())
                }
                CostSpec::FeatureNormLabelIndicator { norm } | CostSpec::PlainNorm { norm } => achiever(norm, b),
                CostSpec::SubsetNorm { norm, index_set } => {
                    let sub: Vec<f64> = index_set.iter().map(|&i| b[i]).collect();
                    let u = achiever(norm, &sub)?;
                    let mut g = vec![0.0; b.len()];
                    for (&i, ui) in index_set.iter().zip(u) {
                        g[i] = ui;
                    }
                    Ok(g)
                }
                CostSpec::SemiNormB { b: m } => {
                    let g = m.mul_vec(b);
                    let n = sqrt(dot(&g, &g));
                    if n == 0.0 {
                        return Ok(vec![0.0; b.len()]);
                    }
                    Ok(m.tr_mul_vec(&g).into_iter().map(|v| v / n).collect())
                }
                CostSpec::AbsoluteScalar => Ok(vec![if b[0] == 0.0 { 0.0 } else { sgn(b[0]) }]),
                _ => unreachable!("pairing checked"),
            },
            Score::Margin(b) => match cost {
                CostSpec::FeatureNormLabelIndicator { norm } => achiever(norm, b),
                _ => unreachable!("pairing checked"),
            },
            Score::Functional { coef, nodes } => {
                let w = trapezoid_weights(nodes)?;
                let b = functional_b(coef, nodes);
                let n = quad_norm(&b, &w);
                let wb: Vec<f64> = b.iter().zip(&w).map(|(v, wk)| if n == 0.0 { 0.0 } else { wk * v / n }).collect();
                Ok(match coef {
                    FunctionalCoef::Nodal { .. } => wb,
                    FunctionalCoef::Basis { basis, .. } => basis.iter().map(|g| dot(g, &wb)).collect(),
                })
            }
        }
    }

    /// Unit-cost direction at `z` along which `t` grows at rate `L_phi`.
    fn direction(self, cost: &CostSpec, z: &Point) -> Result<Vec<f64>> {
        match self {
            Score::Residual(b) => match cost {
                CostSpec::FullNorm { norm } => {
                    let mut v: Vec<f64> = b.iter().map(|x| -x).collect();
                    v.push(1.0);
                    norm.dual_achiever(&v)
                }
                CostSpec::FeatureNormLabelIndicator { norm } => {
                    let neg: Vec<f64> = b.iter().map(|x| -x).collect();
                    let mut u = norm.dual_achiever(&neg)?;
                    u.push(0.0);
                    Ok(u)
                }
                CostSpec::SubsetNorm { norm, index_set } => {
                    let sub: Vec<f64> = index_set.iter().map(|&i| -b[i]).collect();
                    let u = norm.dual_achiever(&sub)?;
                    let mut d = vec![0.0; b.len() + 1];
                    for (&i, ui) in index_set.iter().zip(u) {
                        d[i] = ui;
                    }
                    Ok(d)
                }
                CostSpec::SemiNormB { b: m } => {
                    let g = m.mul_vec(b);
                    let n = sqrt(dot(&g, &g));
                    if n == 0.0 {
                        return Err(Error::ZeroVector);
                    }
                    let u: Vec<f64> = g.iter().map(|v| -v / n).collect();
                    let mut d = m.tr_mul_vec(&u);
                    d.push(0.0);
                    Ok(d)
                }
                CostSpec::PlainNorm { norm } => norm.dual_achiever(b),
                CostSpec::AbsoluteScalar => {
                    if b[0] == 0.0 {
                        Err(Error::ZeroVector)
                    } else {
                        Ok(vec![sgn(b[0])])
                    }
                }
                _ => unreachable!("pairing checked"),
            },
            Score::Margin(b) => match (cost, z) {
                (CostSpec::FeatureNormLabelIndicator { norm }, Point::Binary { y, .. }) => {
                    Ok(norm.dual_achiever(b)?.into_iter().map(|v| y.value() * v).collect())
                }
                _ => Err(Error::VariantMismatch { expected: "binary", found: z.kind().name() }),
            },
            Score::Functional { coef, nodes } => {
                let w = trapezoid_weights(nodes)?;
                let b = functional_b(coef, nodes);
                let n = quad_norm(&b, &w);
                if n == 0.0 {
                    return Err(Error::ZeroVector);
                }
                Ok(b.iter().map(|v| -v / n).collect())
            }
        }
    }
}

impl LossSpec {
    /// Validates parameters and the exponent. Whether the pairing with `cost`
    /// is cataloged is checked by [`weak_lipschitz`].
    pub fn new(family: LossFamily, r: f64, cost: CostSpec) -> Result<Self> {
        family.validate()?;
        cost.validate()?;
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::UnsupportedExponent { family: family.name(), r });
        }
        if r > 1.0 && !family.accepts_power() {
            return Err(Error::UnsupportedExponent { family: family.name(), r });
        }
        Ok(LossSpec { family, r, cost })
    }

    pub fn family(&self) -> &LossFamily {
        &self.family
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    /// Same loss with a different decision vector.
    pub fn with_beta(&self, beta: &[f64]) -> Result<LossSpec> {
        let mut s = self.clone();
        match s.family.beta_mut() {
            Some(b) => {
                check_dim(b.len(), beta.len())?;
                b.copy_from_slice(beta);
            }
            None => return Err(Error::NonConvexFamily { family: self.name() }),
        }
        s.family.validate()?;
        Ok(s)
    }

    fn model(&self) -> Model<'_> {
        use LossFamily as F;
        fn lin(b: &[f64], o: Outer) -> Model<'_> {
            Model::Linear(Score::Residual(b), o)
        }
        fn mar(b: &[f64], o: Outer) -> Model<'_> {
            Model::Linear(Score::Margin(b), o)
        }
        match &self.family {
            F::AbsLinear { beta } | F::CvarAbsResidual { beta, .. } => Model::Linear(Score::Residual(beta), Outer::Abs),
            F::LowerPartial { beta, tau } => lin(beta, Outer::LowerPartial(*tau)),
            F::TauInsensitive { beta, tau } => lin(beta, Outer::Insensitive(*tau)),
            F::LogCosh { beta } => lin(beta, Outer::LogCosh),
            F::Huber { beta } => lin(beta, Outer::Huber),
            F::Quantile { beta, gamma } => lin(beta, Outer::Quantile(*gamma)),
            F::Hmcr { beta, .. } => lin(beta, Outer::Identity),
            F::HingePow { beta } => mar(beta, Outer::Hinge),
            F::SvmAbsPow { beta } => mar(beta, Outer::SvmAbs),
            F::LogExp { beta } => mar(beta, Outer::LogExp),
            F::SmoothHinge { beta } => mar(beta, Outer::SmoothHinge),
            F::TruncPinball { beta, tau1, tau2 } => mar(beta, Outer::TruncPinball(*tau1, *tau2)),
            F::CvarMargin { beta, .. } => mar(beta, Outer::Neg),
            F::FunctionalLinear { coefficient, shape, grid_nodes } => Model::Linear(
                Score::Functional { coef: coefficient, nodes: *grid_nodes },
                match shape {
                    FunctionalShape::Abs => Outer::Abs,
                    FunctionalShape::LowerPartial { tau } => Outer::LowerPartial(*tau),
                    FunctionalShape::Insensitive { tau } => Outer::Insensitive(*tau),
                },
            ),
            F::BinaryCrossEntropy { beta } => Model::Bce(*beta),
            F::HardSigmoid { beta } => Model::HardSigmoid(beta),
            F::RidgeSquare { beta } => Model::Ridge(beta),
        }
    }

    /// Errors with `UnsupportedPairing` unless the family is cataloged with the cost.
    pub fn check_pairing(&self) -> Result<()> {
        use CostSpec as C;
        use LossFamily as F;
        let ok = matches!(
            (&self.family, &self.cost),
            (
                F::AbsLinear { .. }
                | F::LowerPartial { .. }
                | F::TauInsensitive { .. }
                | F::LogCosh { .. }
                | F::Huber { .. }
                | F::Quantile { .. }
                | F::CvarAbsResidual { .. },
                C::FullNorm { .. }
                | C::FeatureNormLabelIndicator { .. }
                | C::SubsetNorm { .. }
                | C::SemiNormB { .. }
                | C::PlainNorm { .. }
                | C::AbsoluteScalar,
            ) | (
                F::HingePow { .. }
                | F::SvmAbsPow { .. }
                | F::LogExp { .. }
                | F::SmoothHinge { .. }
                | F::TruncPinball { .. }
                | F::CvarMargin { .. },
                C::FeatureNormLabelIndicator { .. },
            ) | (F::Hmcr { .. }, C::PlainNorm { .. } | C::AbsoluteScalar)
                | (F::BinaryCrossEntropy { .. }, C::AbsoluteScalar)
                | (F::HardSigmoid { .. }, C::PlainNorm { .. })
                | (F::RidgeSquare { .. }, C::ProductCost)
                | (F::FunctionalLinear { .. }, C::L2FunctionLabelIndicator)
        );
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedPairing { family: self.name(), cost: self.cost.name() })
        }
    }

    /// Point kind the pairing lives on.
    pub fn point_kind(&self) -> Result<PointKind> {
        self.check_pairing()?;
        Ok(match (&self.family, &self.cost) {
            (LossFamily::HingePow { .. }
            | LossFamily::SvmAbsPow { .. }
            | LossFamily::LogExp { .. }
            | LossFamily::SmoothHinge { .. }
            | LossFamily::TruncPinball { .. }
            | LossFamily::CvarMargin { .. }, _) => PointKind::Binary,
            (LossFamily::FunctionalLinear { .. }, _) => PointKind::Sampled,
            (_, CostSpec::PlainNorm { .. } | CostSpec::AbsoluteScalar) => PointKind::Plain,
            _ => PointKind::Labeled,
        })
    }

    /// `psi(z)`.
    pub fn eval_psi(&self, z: &Point) -> Result<f64> {
        match self.model() {
            Model::Linear(score, outer) => Ok(outer.value(score.value(z)?)),
            Model::Bce(beta) => {
                let v = scalar(z)?;
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::DomainError(format!("cross entropy needs z in (0, 1), got {v}")));
                }
                Ok(bce_h(beta * v))
            }
            Model::HardSigmoid(beta) => match z {
                Point::Plain(v) => {
                    check_dim(beta.len(), v.len())?;
                    Ok(hard_sigmoid(dot(beta, v)))
                }
                _ => Err(Error::VariantMismatch { expected: "plain", found: z.kind().name() }),
            },
            Model::Ridge(beta) => {
                let s = ridge_score(beta, z)?;
                Ok(s * s)
            }
        }
    }

    /// `psi(z)^r`.
    pub fn eval_loss(&self, z: &Point) -> Result<f64> {
        Ok(pow_r(self.eval_psi(z)?, self.r))
    }

    /// `psi(z)` and a subgradient with respect to `beta`.
    pub fn psi_and_grad(&self, z: &Point) -> Result<(f64, Vec<f64>)> {
        match self.model() {
            Model::Linear(score, outer) => {
                let t = score.value(z)?;
                let d = outer.deriv(t);
                Ok((outer.value(t), score.grad_beta(z)?.into_iter().map(|g| d * g).collect()))
            }
            Model::Ridge(beta) => {
                let s = ridge_score(beta, z)?;
                let x = &z.features()[..beta.len()];
                Ok((s * s, x.iter().map(|v| 2.0 * s * v).collect()))
            }
            _ => Err(Error::NonConvexFamily { family: self.name() }),
        }
    }

    /// Global constant `L(beta)` for the families that have one.
    pub fn global_lipschitz(&self) -> Result<f64> {
        self.check_pairing()?;
        match self.model() {
            Model::Linear(score, _) => score.lipschitz(&self.cost),
            Model::Ridge(beta) => Ok(dot(beta, beta) + 1.0),
            _ => Err(Error::UnsupportedPairing { family: self.name(), cost: self.cost.name() }),
        }
    }

    /// A subgradient of `L(beta)`.
    pub fn lipschitz_grad(&self) -> Result<Vec<f64>> {
        self.check_pairing()?;
        match self.model() {
            Model::Linear(score, _) => score.lipschitz_grad(&self.cost),
            Model::Ridge(beta) => Ok(beta.iter().map(|b| 2.0 * b).collect()),
            _ => Err(Error::NonConvexFamily { family: self.name() }),
        }
    }

    /// Weak-Lipschitz constant at one anchor.
    pub fn lipschitz_at(&self, anchor: &Point) -> Result<f64> {
        self.check_pairing()?;
        match self.model() {
            Model::Bce(beta) => {
                let zh = scalar(anchor)?;
                if !(zh > 0.0 && zh < 1.0) {
                    return Err(Error::DomainError(format!("cross entropy anchor {zh} outside (0, 1)")));
                }
                let th = beta * zh;
                let low = -bce_h(th) / th;
                let high = ((bce_h(beta) - bce_h(th)) / (beta - th)).abs();
                Ok(beta * low.max(high))
            }
            Model::HardSigmoid(beta) => {
                let Point::Plain(v) = anchor else {
                    return Err(Error::VariantMismatch { expected: "plain", found: anchor.kind().name() });
                };
                check_dim(beta.len(), v.len())?;
                let CostSpec::PlainNorm { norm } = &self.cost else { unreachable!("pairing checked") };
                Ok(norm.dual_norm(beta)? * hard_sigmoid_slope(dot(beta, v)))
            }
            _ => self.global_lipschitz(),
        }
    }

    /// Witness `z~` for `anchor`: `psi(z~) - psi(anchor) >= (L - epsilon) d(z~, anchor)`
    /// with `d(z~, anchor) >= delta` (steep mode) or equal to the target distance.
    pub fn witness(&self, anchor: &Point, epsilon: f64, delta: f64, mode: WitnessMode) -> Result<Point> {
        let l = self.lipschitz_at(anchor)?;
        if !(epsilon > 0.0 && epsilon < l) {
            return Err(Error::EpsilonOutOfRange { epsilon, limit: l });
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be finite and nonnegative, got {delta}")));
        }
        if let WitnessMode::AtDistance(d) = mode {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidParameter(format!("target distance must be finite and nonnegative, got {d}")));
            }
            if d == 0.0 {
                return Ok(anchor.clone());
            }
        }
        let psi0 = self.eval_psi(anchor)?;
        let steep = |z: &Point| -> Result<Option<f64>> {
            let Some(d) = eval_cost(&self.cost, z, anchor)?.finite() else { return Ok(None) };
            if d <= 0.0 {
                return Ok(None);
            }
            let slope = (self.eval_psi(z)? - psi0) / d;
            Ok((slope >= l - epsilon).then_some(d))
        };
        let not_found = |why: &str| Err(Error::WitnessNotFound(format!("{}: {why}", self.name())));

        match self.model() {
            Model::Linear(score, outer) => {
                let dir = score.direction(&self.cost, anchor)?;
                let s = outer.ascent(score.value(anchor)?);
                let place = |sigma: f64| -> Result<Point> {
                    let z = displace(anchor, &dir, s * sigma);
                    // Norm costs are homogeneous; one rescale absorbs rounding in the direction.
                    match eval_cost(&self.cost, &z, anchor)?.finite() {
                        Some(c) if c > 0.0 => Ok(displace(anchor, &dir, s * sigma * sigma / c)),
                        _ => Ok(z),
                    }
                };
                match mode {
                    WitnessMode::AtDistance(d) => {
                        let z = place(d)?;
                        match steep(&z)? {
                            Some(_) => Ok(z),
                            None => not_found("slope condition fails at the target distance"),
                        }
                    }
                    WitnessMode::Steep => {
                        let t0 = score.value(anchor)?;
                        let mut sigma = match outer.dead_zone(t0) {
                            Some(g) if g > 0.0 => 2.0 * g / epsilon + delta,
                            _ => delta,
                        };
                        if sigma <= 0.0 {
                            sigma = 1.0;
                        }
                        for _ in 0..=MAX_DOUBLINGS {
                            let z = place(sigma)?;
                            if let Some(d) = steep(&z)? {
                                if d >= delta * (1.0 - 1e-12) {
                                    return Ok(z);
                                }
                            }
                            sigma *= 2.0;
                        }
                        not_found("slope condition not met after 60 doublings")
                    }
                }
            }
            Model::Bce(beta) => {
                if let WitnessMode::AtDistance(_) = mode {
                    return not_found("no exact-distance witness for cross entropy");
                }
                let zh = scalar(anchor)?;
                let th = beta * zh;
                let low = -bce_h(th) / th;
                let high = ((bce_h(beta) - bce_h(th)) / (beta - th)).abs();
                for k in 1..=MAX_DOUBLINGS {
                    let f = libm::ldexp(1.0, -(k as i32));
                    let zt = if low >= high {
                        if zh - delta <= 0.0 {
                            return not_found("budget reaches the boundary at 0");
                        }
                        (zh - delta) * f
                    } else {
                        if zh + delta >= 1.0 {
                            return not_found("budget reaches the boundary at 1");
                        }
                        1.0 - (1.0 - zh - delta) * f
                    };
                    let z = Point::Plain(vec![zt]);
                    if steep(&z)?.is_some() {
                        return Ok(z);
                    }
                }
                not_found("slope condition not met near the boundary")
            }
            Model::HardSigmoid(beta) => {
                let CostSpec::PlainNorm { norm } = &self.cost else { unreachable!("pairing checked") };
                let th = dot(beta, anchor.features());
                if th >= 1.0 {
                    return not_found("anchor already saturated at 1");
                }
                let theta = norm.dual_norm(beta)?;
                let a = norm.dual_achiever(beta)?;
                let reach = (1.0 - th) / theta;
                let dist = match mode {
                    WitnessMode::Steep if reach >= delta => reach,
                    WitnessMode::AtDistance(d) if th >= -1.0 && d <= reach => d,
                    _ => return not_found("required distance outside the linear ramp"),
                };
                let z = anchor.shifted(&a, dist);
                match steep(&z)? {
                    Some(_) => Ok(z),
                    None => not_found("slope condition fails"),
                }
            }
            Model::Ridge(beta) => {
                if let WitnessMode::AtDistance(_) = mode {
                    return not_found("no exact-distance witness for the product cost");
                }
                let mut v = beta.to_vec();
                v.push(1.0);
                let n = sqrt(dot(&v, &v));
                let dir: Vec<f64> = v.iter().map(|c| c / n).collect();
                let mut k = delta.max(1.0);
                for _ in 0..=MAX_DOUBLINGS {
                    let z = match anchor {
                        Point::Labeled { .. } => displace(anchor, &dir, k),
                        _ => anchor.shifted(&dir, k),
                    };
                    if let Some(d) = steep(&z)? {
                        if d >= delta {
                            return Ok(z);
                        }
                    }
                    k *= 2.0;
                }
                not_found("slope condition not met after 60 doublings")
            }
        }
    }

    /// Whether exact-distance witnesses exist for every anchor with positive loss.
    pub fn has_exact_slope(&self) -> bool {
        match self.model() {
            Model::Linear(_, o) => o.dead_zone(0.0).is_some(),
            _ => false,
        }
    }
}

fn scalar(z: &Point) -> Result<f64> {
    match z {
        Point::Plain(v) if v.len() == 1 => Ok(v[0]),
        Point::Plain(v) => Err(Error::DimensionMismatch { expected: 1, found: v.len() }),
        _ => Err(Error::VariantMismatch { expected: "plain", found: z.kind().name() }),
    }
}

fn ridge_score(beta: &[f64], z: &Point) -> Result<f64> {
    match z {
        Point::Labeled { x, y } => {
            check_dim(beta.len(), x.len())?;
            Ok(y + dot(beta, x))
        }
        Point::Plain(v) => {
            check_dim(beta.len() + 1, v.len())?;
            Ok(v[beta.len()] + dot(beta, &v[..beta.len()]))
        }
        _ => Err(Error::VariantMismatch { expected: "labeled or plain", found: z.kind().name() }),
    }
}

/// Weak-Lipschitz certificate of `psi` at the atoms of `data`.
pub fn weak_lipschitz(spec: &LossSpec, data: &DiscreteDistribution) -> Result<LipschitzCertificate> {
    spec.check_pairing()?;
    spec.cost().check_shape(data.kind(), data.dim())?;
    let claim = if spec.family().is_conditional() { Claim::Conditional } else { Claim::Unconditional };
    if matches!(spec.family(), LossFamily::BinaryCrossEntropy { .. } | LossFamily::HardSigmoid { .. }) {
        let per_point = data.atoms().iter().map(|z| spec.lipschitz_at(z)).collect::<Result<Vec<_>>>()?;
        let constant = per_point.iter().fold(0.0f64, |m, v| m.max(*v));
        Ok(LipschitzCertificate { constant, scope: Scope::PerPoint, per_point, claim })
    } else {
        let constant = spec.global_lipschitz()?;
        Ok(LipschitzCertificate { constant, scope: Scope::Global, per_point: vec![constant; data.len()], claim })
    }
}

/// Largest difference quotient `|psi(a) - psi(b)| / d(a, b)` over the given
/// pairs, skipping pairs at zero or infinite cost.
pub fn empirical_lipschitz(spec: &LossSpec, pairs: &[(Point, Point)]) -> Result<f64> {
    let mut best = 0.0f64;
    for (a, b) in pairs {
        if let Some(d) = eval_cost(spec.cost(), a, b)?.finite() {
            if d > 0.0 {
                best = best.max((spec.eval_psi(a)? - spec.eval_psi(b)?).abs() / d);
            }
        }
    }
    Ok(best)
}

/// Chord slope `(h(t) - h(t_hat)) / (t - t_hat)` of the cross-entropy kernel.
pub fn bce_chord_slope(t: f64, t_hat: f64) -> f64 {
    (bce_h(t) - bce_h(t_hat)) / (t - t_hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(x: &[f64], y: f64) -> Point {
        Point::Labeled { x: x.to_vec(), y }
    }

    fn l2_full() -> CostSpec {
        CostSpec::FullNorm { norm: GroundNorm::L2 }
    }

    #[test]
    fn abs_linear_value() {
        let s = LossSpec::new(LossFamily::AbsLinear { beta: vec![1.0] }, 1.0, l2_full()).unwrap();
        assert_eq!(s.eval_psi(&lab(&[2.0], 5.0)).unwrap(), 3.0);
    }

    #[test]
    fn lipschitz_of_full_norm() {
        let s = LossSpec::new(LossFamily::AbsLinear { beta: vec![3.0] }, 1.0, l2_full()).unwrap();
        assert!((s.global_lipschitz().unwrap() - sqrt(10.0)).abs() < 1e-15);
    }

    #[test]
    fn trunc_pinball_middle_branch() {
        let s = LossSpec::new(
            LossFamily::TruncPinball { beta: vec![1.0], tau1: 0.5, tau2: 2.0 },
            1.0,
            CostSpec::FeatureNormLabelIndicator { norm: GroundNorm::L2 },
        )
        .unwrap();
        let z = Point::Binary { x: vec![2.0], y: crate::space::Label::Pos };
        assert_eq!(s.eval_psi(&z).unwrap(), 0.5);
    }

    #[test]
    fn huber_branches() {
        assert_eq!(Outer::Huber.value(0.5), 0.125);
        assert_eq!(Outer::Huber.value(-3.0), 2.5);
    }

    #[test]
    fn bce_per_point_constant() {
        let s = LossSpec::new(LossFamily::BinaryCrossEntropy { beta: 0.5 }, 1.0, CostSpec::AbsoluteScalar).unwrap();
        let l = s.lipschitz_at(&Point::Plain(vec![0.5])).unwrap();
        assert!((l - 1.124_670).abs() < 1e-6, "{l}");
    }

    #[test]
    fn hard_sigmoid_constants() {
        let s = LossSpec::new(
            LossFamily::HardSigmoid { beta: vec![2.0, 0.0] },
            1.0,
            CostSpec::PlainNorm { norm: GroundNorm::L2 },
        )
        .unwrap();
        assert_eq!(s.lipschitz_at(&Point::Plain(vec![0.0, 0.0])).unwrap(), 1.0);
        // theta = 2, anchor -(3/theta) a_beta gives L = theta / 4.
        assert_eq!(s.lipschitz_at(&Point::Plain(vec![-1.5, 0.0])).unwrap(), 0.5);
        let w = s.witness(&Point::Plain(vec![0.0, 0.0]), 0.1, 0.4, WitnessMode::Steep).unwrap();
        assert_eq!(w, Point::Plain(vec![0.5, 0.0]));
    }

    #[test]
    fn power_rejected_for_nonlinear() {
        let r = LossSpec::new(LossFamily::LogCosh { beta: vec![1.0] }, 2.0, l2_full());
        assert!(matches!(r, Err(Error::UnsupportedExponent { .. })));
    }

    #[test]
    fn unsupported_pairing() {
        let s = LossSpec::new(LossFamily::HingePow { beta: vec![1.0] }, 1.0, l2_full()).unwrap();
        assert!(matches!(s.global_lipschitz(), Err(Error::UnsupportedPairing { .. })));
    }

    #[test]
    fn abs_witness_at_zero_residual() {
        let s = LossSpec::new(LossFamily::AbsLinear { beta: vec![1.0] }, 1.0, l2_full()).unwrap();
        let z = lab(&[0.0], 0.0);
        let w = s.witness(&z, 0.1, 0.5, WitnessMode::Steep).unwrap();
        let d = eval_cost(s.cost(), &w, &z).unwrap().finite().unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert!((s.eval_psi(&w).unwrap() - sqrt(2.0) * 0.5).abs() < 1e-12);
    }

    #[test]
    fn serde_uses_family_tag() {
        let s = LossSpec::new(LossFamily::Quantile { beta: vec![1.0, 2.0], gamma: 0.3 }, 1.0, l2_full()).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"family\":\"quantile\""), "{j}");
        assert_eq!(serde_json::from_str::<LossSpec>(&j).unwrap(), s);
        let bad = j.replace("0.3", "1.5");
        assert!(serde_json::from_str::<LossSpec>(&bad).is_err());
    }
}
