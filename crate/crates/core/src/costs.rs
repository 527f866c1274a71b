//! Transport costs `d(z', z)` with values in `[0, +inf]`.
//!
//! Indicator parts (`delta_0(y' - y)`) make a cost infinite whenever the labels
//! differ, so moving mass across labels is never allowed.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{symmetric_eigen, Matrix};
use crate::math::{pow_r, sgn, sqrt};
use crate::space::{Point, PointKind};
use crate::{Error, Result};

const RANGE_TOL: f64 = 1e-9;

/// Extended nonnegative real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn pow(self, r: f64) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(pow_r(v, r)),
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }

    /// Value as `f64`, mapping `Infinite` to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// Norm on `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroundNorm {
    L1,
    L2,
    Linf,
    /// `sqrt(sum_i w_i v_i^2)` with `w_i > 0`.
    WeightedL2 { weights: Vec<f64> },
}

impl GroundNorm {
    pub fn name(&self) -> &'static str {
        match self {
            GroundNorm::L1 => "L1",
            GroundNorm::L2 => "L2",
            GroundNorm::Linf => "Linf",
            GroundNorm::WeightedL2 { .. } => "WeightedL2",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let GroundNorm::WeightedL2 { weights } = self {
            if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(Error::InvalidParameter("weighted L2 needs positive finite weights".into()));
            }
        }
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        match self {
            GroundNorm::WeightedL2 { weights } if weights.len() != n => {
                Err(Error::DimensionMismatch { expected: weights.len(), found: n })
            }
            _ => Ok(()),
        }
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v.len())?;
        Ok(match self {
            GroundNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            GroundNorm::L2 => sqrt(v.iter().map(|x| x * x).sum()),
            GroundNorm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            GroundNorm::WeightedL2 { weights } => sqrt(v.iter().zip(weights).map(|(x, w)| w * x * x).sum()),
        })
    }

    /// `sup { <v, u> : ||u|| <= 1 }`.
    pub fn dual_norm(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v.len())?;
        Ok(match self {
            GroundNorm::L1 => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            GroundNorm::L2 => sqrt(v.iter().map(|x| x * x).sum()),
            GroundNorm::Linf => v.iter().map(|x| x.abs()).sum(),
            GroundNorm::WeightedL2 { weights } => sqrt(v.iter().zip(weights).map(|(x, w)| x * x / w).sum()),
        })
    }

    /// A `u` with `||u|| = 1` and `<v, u> = ||v||_*`.
    pub fn dual_achiever(&self, v: &[f64]) -> Result<Vec<f64>> {
        let d = self.dual_norm(v)?;
        if d == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(match self {
            GroundNorm::L1 => {
                let mut k = 0;
                for (i, x) in v.iter().enumerate() {
                    if x.abs() > v[k].abs() {
                        k = i;
                    }
                }
                let mut u = vec![0.0; v.len()];
                u[k] = sgn(v[k]);
                u
            }
            GroundNorm::L2 => v.iter().map(|x| x / d).collect(),
            GroundNorm::Linf => v.iter().map(|&x| sgn(x)).collect(),
            GroundNorm::WeightedL2 { weights } => v.iter().zip(weights).map(|(x, w)| x / w / d).collect(),
        })
    }
}

/// Transport cost family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    /// `||[x' - x; y' - y]||` on labeled points.
    FullNorm { norm: GroundNorm },
    /// `||x' - x|| + delta_0(y' - y)` on labeled or binary points.
    FeatureNormLabelIndicator { norm: GroundNorm },
    /// `||x'_I - x_I|| + delta_0([x'_J - x_J; y' - y])` with `J` the complement of `I`.
    SubsetNorm { norm: GroundNorm, index_set: Vec<usize> },
    /// `min { ||u||_2 : B^T u = x' - x } + delta_0(y' - y)`, infinite off the range of `B^T`.
    SemiNormB { b: Matrix },
    /// `||z' - z||_2 * ||z' + z||_2`.
    ProductCost,
    /// Quadrature `L2` distance of sampled functions plus `delta_0(y' - y)`.
    L2FunctionLabelIndicator,
    /// `||z' - z||` on plain points.
    PlainNorm { norm: GroundNorm },
    /// `|z' - z|` on scalars.
    AbsoluteScalar,
}

impl CostSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CostSpec::FullNorm { .. } => "FullNorm",
            CostSpec::FeatureNormLabelIndicator { .. } => "FeatureNormLabelIndicator",
            CostSpec::SubsetNorm { .. } => "SubsetNorm",
            CostSpec::SemiNormB { .. } => "SemiNormB",
            CostSpec::ProductCost => "ProductCost",
            CostSpec::L2FunctionLabelIndicator => "L2FunctionLabelIndicator",
            CostSpec::PlainNorm { .. } => "PlainNorm",
            CostSpec::AbsoluteScalar => "AbsoluteScalar",
        }
    }

    /// Whether the cost is defined on points of this kind.
    pub fn accepts(&self, kind: PointKind) -> bool {
        use PointKind::*;
        match self {
            CostSpec::FullNorm { .. } | CostSpec::SubsetNorm { .. } | CostSpec::SemiNormB { .. } => kind == Labeled,
            CostSpec::FeatureNormLabelIndicator { .. } => matches!(kind, Labeled | Binary),
            CostSpec::ProductCost => matches!(kind, Labeled | Plain),
            CostSpec::L2FunctionLabelIndicator => kind == Sampled,
            CostSpec::PlainNorm { .. } | CostSpec::AbsoluteScalar => kind == Plain,
        }
    }

    /// Parameter checks independent of the data.
    pub fn validate(&self) -> Result<()> {
        match self {
            CostSpec::FullNorm { norm } | CostSpec::FeatureNormLabelIndicator { norm } | CostSpec::PlainNorm { norm } => {
                norm.validate()
            }
            CostSpec::SubsetNorm { norm, index_set } => {
                norm.validate()?;
                if index_set.is_empty() || index_set.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter("index set must be nonempty, sorted and unique".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Checks that points of this kind and feature dimension fit the cost.
    pub fn check_shape(&self, kind: PointKind, dim: usize) -> Result<()> {
        if !self.accepts(kind) {
            return Err(Error::VariantMismatch { expected: self.name(), found: kind.name() });
        }
        match self {
            CostSpec::SubsetNorm { index_set, .. } => {
                if let Some(&last) = index_set.last() {
                    if last >= dim {
                        return Err(Error::DimensionMismatch { expected: dim, found: last + 1 });
                    }
                }
            }
            CostSpec::SemiNormB { b } if b.cols() != dim => {
                return Err(Error::DimensionMismatch { expected: b.cols(), found: dim });
            }
            CostSpec::AbsoluteScalar if dim != 1 => {
                return Err(Error::DimensionMismatch { expected: 1, found: dim });
            }
            _ => {}
        }
        Ok(())
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `d(z', z)`.
pub fn eval_cost(spec: &CostSpec, zp: &Point, z: &Point) -> Result<ExtReal> {
    if zp.kind() != z.kind() {
        return Err(Error::VariantMismatch { expected: z.kind().name(), found: zp.kind().name() });
    }
    if zp.dim() != z.dim() {
        return Err(Error::DimensionMismatch { expected: z.dim(), found: zp.dim() });
    }
    spec.check_shape(z.kind(), z.dim())?;
    let same_label = zp.label() == z.label();
    let dx = diff(zp.features(), z.features());
    let finite = |v: f64| Ok(ExtReal::Finite(v));
    match spec {
        CostSpec::FullNorm { norm } => finite(norm.norm(&diff(&zp.stacked(), &z.stacked()))?),
        CostSpec::FeatureNormLabelIndicator { norm } => {
            if same_label {
                finite(norm.norm(&dx)?)
            } else {
                Ok(ExtReal::Infinite)
            }
        }
        CostSpec::SubsetNorm { norm, index_set } => {
            let fixed = dx.iter().enumerate().all(|(i, v)| *v == 0.0 || index_set.binary_search(&i).is_ok());
            if !(same_label && fixed) {
                return Ok(ExtReal::Infinite);
            }
            let sub: Vec<f64> = index_set.iter().map(|&i| dx[i]).collect();
            finite(norm.norm(&sub)?)
        }
        CostSpec::SemiNormB { b } => {
            if !same_label {
                return Ok(ExtReal::Infinite);
            }
            Ok(min_norm_preimage(b, &dx))
        }
        CostSpec::ProductCost => {
            let a = zp.stacked();
            let c = z.stacked();
            let minus: f64 = a.iter().zip(&c).map(|(p, q)| (p - q) * (p - q)).sum();
            let plus: f64 = a.iter().zip(&c).map(|(p, q)| (p + q) * (p + q)).sum();
            finite(sqrt(minus) * sqrt(plus))
        }
        CostSpec::L2FunctionLabelIndicator => {
            let (Point::Sampled { quad_weights: w1, .. }, Point::Sampled { quad_weights: w2, .. }) = (zp, z) else {
                unreachable!()
            };
            if w1 != w2 {
                return Err(Error::InvalidPoint("sampled points use different quadrature grids".into()));
            }
            if !same_label {
                return Ok(ExtReal::Infinite);
            }
            finite(sqrt(dx.iter().zip(w2).map(|(v, w)| w * v * v).sum()))
        }
        CostSpec::PlainNorm { norm } => finite(norm.norm(&dx)?),
        CostSpec::AbsoluteScalar => finite(dx[0].abs()),
    }
}

/// `min { ||u||_2 : B^T u = v }`, or `Infinite` when `v` is not in the range of `B^T`.
pub fn min_norm_preimage(b: &Matrix, v: &[f64]) -> ExtReal {
    let n = b.cols();
    let vnorm = sqrt(v.iter().map(|x| x * x).sum());
    if vnorm == 0.0 {
        return ExtReal::Finite(0.0);
    }
    // ||u||^2 = v^T (B^T B)^+ v on the range, with B^T B = sum_k lambda_k q_k q_k^T.
    let (vals, vecs) = symmetric_eigen(&b.gram(), n);
    let top = vals.iter().fold(0.0f64, |m, x| m.max(*x));
    let cut = top * 1e-12 * n as f64;
    let mut residual = v.to_vec();
    let mut sq = 0.0;
    for (lam, q) in vals.iter().zip(&vecs) {
        if *lam > cut {
            let c = crate::math::dot(q, v);
            sq += c * c / lam;
            for (r, qi) in residual.iter_mut().zip(q) {
                *r -= c * qi;
            }
        }
    }
    let res = sqrt(residual.iter().map(|x| x * x).sum());
    if res > RANGE_TOL * vnorm {
        ExtReal::Infinite
    } else {
        ExtReal::Finite(sqrt(sq))
    }
}

/// `d(z', z)^r` as `f64`, infinite when the cost is.
pub fn eval_cost_pow(spec: &CostSpec, zp: &Point, z: &Point, r: f64) -> Result<f64> {
    Ok(eval_cost(spec, zp, z)?.pow(r).to_f64())
}
