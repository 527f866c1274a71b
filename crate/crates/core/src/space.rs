//! Sample points, finitely supported distributions and couplings.
//!
//! A [`Point`] is one of four variants. All atoms of a [`DiscreteDistribution`]
//! share the variant and dimension. Distributions serialize as
//!
//! ```text
//! {"variant": "labeled", "atoms": [{"x": [..], "y": 0.5}, ..], "weights": [..]}
//! ```

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-9;
const QUAD_SUM_TOL: f64 = 1e-12;

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Neg => -1.0,
            Label::Pos => 1.0,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(Label::Neg),
            1 => Ok(Label::Pos),
            other => Err(Error::InvalidPoint(format!("binary label must be -1 or 1, got {other}"))),
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Neg => -1,
            Label::Pos => 1,
        }
    }
}

/// A sample point.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Point {
    /// `z` in `R^n`.
    Plain(Vec<f64>),
    /// Features `x` in `R^n` and a real response `y`.
    Labeled { x: Vec<f64>, y: f64 },
    /// Features `x` and a label in `{-1, +1}`.
    Binary { x: Vec<f64>, y: Label },
    /// A function sampled on a fixed grid of `[0, 1]`, with quadrature weights,
    /// and a real response `y`.
    Sampled { values: Vec<f64>, quad_weights: Vec<f64>, y: f64 },
}

/// Variant tag shared by all atoms of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Plain,
    Labeled,
    Binary,
    Sampled,
}

impl PointKind {
    pub fn name(self) -> &'static str {
        match self {
            PointKind::Plain => "plain",
            PointKind::Labeled => "labeled",
            PointKind::Binary => "binary",
            PointKind::Sampled => "sampled",
        }
    }
}

impl Point {
    pub fn kind(&self) -> PointKind {
        match self {
            Point::Plain(_) => PointKind::Plain,
            Point::Labeled { .. } => PointKind::Labeled,
            Point::Binary { .. } => PointKind::Binary,
            Point::Sampled { .. } => PointKind::Sampled,
        }
    }

    /// Length of the feature (or sample) vector.
    pub fn dim(&self) -> usize {
        match self {
            Point::Plain(z) => z.len(),
            Point::Labeled { x, .. } | Point::Binary { x, .. } => x.len(),
            Point::Sampled { values, .. } => values.len(),
        }
    }

    /// Feature part: `z`, `x` or the sampled values.
    pub fn features(&self) -> &[f64] {
        match self {
            Point::Plain(z) => z,
            Point::Labeled { x, .. } | Point::Binary { x, .. } => x,
            Point::Sampled { values, .. } => values,
        }
    }

    pub fn features_mut(&mut self) -> &mut [f64] {
        match self {
            Point::Plain(z) => z,
            Point::Labeled { x, .. } | Point::Binary { x, .. } => x,
            Point::Sampled { values, .. } => values,
        }
    }

    /// Real label, if the variant carries one.
    pub fn label(&self) -> Option<f64> {
        match self {
            Point::Plain(_) => None,
            Point::Labeled { y, .. } | Point::Sampled { y, .. } => Some(*y),
            Point::Binary { y, .. } => Some(y.value()),
        }
    }

    /// Trapezoid-rule point on a uniform grid of `nodes` points of `[0, 1]`.
    pub fn sampled(values: Vec<f64>, y: f64) -> Result<Point> {
        let p = Point::Sampled { quad_weights: trapezoid_weights(values.len())?, values, y };
        p.validate()?;
        Ok(p)
    }

    /// Checks finiteness and the per-variant invariants.
    pub fn validate(&self) -> Result<()> {
        if self.features().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate in {} point", self.kind().name())));
        }
        match self {
            Point::Labeled { y, .. } if !y.is_finite() => {
                Err(Error::InvalidPoint(format!("non-finite label {y}")))
            }
            Point::Sampled { values, quad_weights, y } => {
                if !y.is_finite() {
                    return Err(Error::InvalidPoint(format!("non-finite label {y}")));
                }
                if values.len() != quad_weights.len() {
                    return Err(Error::DimensionMismatch { expected: values.len(), found: quad_weights.len() });
                }
                if quad_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::InvalidPoint("quadrature weights must be positive".into()));
                }
                let s: f64 = quad_weights.iter().sum();
                if (s - 1.0).abs() > QUAD_SUM_TOL {
                    return Err(Error::InvalidPoint(format!("quadrature weights sum to {s}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `self + s * dir` on the features; the label is kept.
    pub fn shifted(&self, dir: &[f64], s: f64) -> Point {
        let mut p = self.clone();
        for (a, d) in p.features_mut().iter_mut().zip(dir) {
            *a += s * d;
        }
        p
    }

    /// Full coordinate vector `[x; y]` for labeled points, the features otherwise.
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = self.features().to_vec();
        if let Point::Labeled { y, .. } = self {
            v.push(*y);
        }
        v
    }

    fn same_shape(&self, other: &Point) -> Result<()> {
        if self.kind() != other.kind() {
            return Err(Error::VariantMismatch { expected: self.kind().name(), found: other.kind().name() });
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

/// Composite trapezoid weights on `nodes` uniform points of `[0, 1]`.
pub fn trapezoid_weights(nodes: usize) -> Result<Vec<f64>> {
    if nodes < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 grid nodes, got {nodes}")));
    }
    let h = 1.0 / (nodes - 1) as f64;
    let mut w = alloc::vec![h; nodes];
    w[0] = h / 2.0;
    w[nodes - 1] = h / 2.0;
    Ok(w)
}

/// Uniform grid nodes `t_k = k / (nodes - 1)`.
pub fn grid_nodes(nodes: usize) -> Vec<f64> {
    let m = (nodes.max(2) - 1) as f64;
    (0..nodes).map(|k| k as f64 / m).collect()
}

/// Finitely supported probability distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct DiscreteDistribution {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates atoms and weights; weights within `1e-9` of summing to one are renormalized.
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyAtoms);
        }
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: atoms.len(), found: weights.len() });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSumMismatch { sum });
        }
        let first = &atoms[0];
        for a in &atoms {
            a.validate()?;
            first.same_shape(a)?;
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(DiscreteDistribution { atoms, weights })
    }

    /// Equal weights `1/N`.
    pub fn uniform(atoms: Vec<Point>) -> Result<Self> {
        let n = atoms.len().max(1);
        let w = alloc::vec![1.0 / n as f64; atoms.len()];
        Self::new(atoms, w)
    }

    /// Dirac mass at `z`.
    pub fn dirac(z: Point) -> Result<Self> {
        Self::new(alloc::vec![z], alloc::vec![1.0])
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn kind(&self) -> PointKind {
        self.atoms[0].kind()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// `E[f]`; zero-weight atoms are skipped, so `f` may fail on them harmlessly.
    pub fn expectation<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(&Point) -> Result<f64>,
    {
        let mut acc = 0.0;
        for (z, w) in self.iter() {
            if w > 0.0 {
                acc += w * f(z)?;
            }
        }
        Ok(acc)
    }

    /// Mixture `sum_k w_k P_k` on the union of atoms; identical atoms merge and
    /// zero-mass atoms are dropped.
    pub fn mix(components: &[DiscreteDistribution], weights: &[f64]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyAtoms);
        }
        if components.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: components.len(), found: weights.len() });
        }
        let mut atoms: Vec<Point> = Vec::new();
        let mut mass: Vec<f64> = Vec::new();
        for (c, &wk) in components.iter().zip(weights) {
            if !(wk.is_finite() && wk >= 0.0) {
                return Err(Error::NegativeWeight { index: atoms.len(), value: wk });
            }
            for (z, w) in c.iter() {
                let m = wk * w;
                if m == 0.0 {
                    continue;
                }
                match atoms.iter().position(|a| a == z) {
                    Some(i) => mass[i] += m,
                    None => {
                        atoms.push(z.clone());
                        mass.push(m);
                    }
                }
            }
        }
        Self::new(atoms, mass)
    }
}

/// Transport plan between two discrete distributions, stored row-major with
/// rows indexing the source atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<f64>,
}

impl Coupling {
    pub fn new(rows: usize, cols: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: matrix.len() });
        }
        Ok(Coupling { rows, cols, matrix })
    }

    /// Product coupling `a (x) b`.
    pub fn independent(a: &[f64], b: &[f64]) -> Self {
        let matrix = a.iter().flat_map(|&ai| b.iter().map(move |&bj| ai * bj)).collect();
        Coupling { rows: a.len(), cols: b.len(), matrix }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.cols + j]
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.matrix.chunks(self.cols.max(1)).map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut q = alloc::vec![0.0; self.cols];
        for row in self.matrix.chunks(self.cols.max(1)) {
            for (qj, v) in q.iter_mut().zip(row) {
                *qj += v;
            }
        }
        q
    }

    /// Checks nonnegativity and both marginals to `tol`.
    pub fn validate(&self, row: &[f64], col: &[f64], tol: f64) -> Result<()> {
        if row.len() != self.rows || col.len() != self.cols {
            return Err(Error::InvalidMarginals(format!(
                "shape {}x{} against marginals of length {} and {}",
                self.rows,
                self.cols,
                row.len(),
                col.len()
            )));
        }
        if let Some(v) = self.matrix.iter().find(|v| v.is_nan() || **v < -tol) {
            return Err(Error::InvalidMarginals(format!("negative entry {v}")));
        }
        for (i, (got, want)) in self.row_marginal().iter().zip(row).enumerate() {
            if (got - want).abs() > tol {
                return Err(Error::InvalidMarginals(format!("row {i}: {got} vs {want}")));
            }
        }
        for (j, (got, want)) in self.col_marginal().iter().zip(col).enumerate() {
            if (got - want).abs() > tol {
                return Err(Error::InvalidMarginals(format!("column {j}: {got} vs {want}")));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
enum DistRepr {
    Plain { atoms: Vec<Vec<f64>>, weights: Vec<f64> },
    Labeled { atoms: Vec<LabeledAtom>, weights: Vec<f64> },
    Binary { atoms: Vec<BinaryAtom>, weights: Vec<f64> },
    Sampled { atoms: Vec<SampledAtom>, weights: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabeledAtom {
    x: Vec<f64>,
    y: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BinaryAtom {
    x: Vec<f64>,
    y: Label,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampledAtom {
    values: Vec<f64>,
    quad_weights: Vec<f64>,
    y: f64,
}

impl TryFrom<DistRepr> for DiscreteDistribution {
    type Error = Error;

    fn try_from(r: DistRepr) -> Result<Self> {
        let (atoms, weights): (Vec<Point>, Vec<f64>) = match r {
            DistRepr::Plain { atoms, weights } => (atoms.into_iter().map(Point::Plain).collect(), weights),
            DistRepr::Labeled { atoms, weights } => {
                (atoms.into_iter().map(|a| Point::Labeled { x: a.x, y: a.y }).collect(), weights)
            }
            DistRepr::Binary { atoms, weights } => {
                (atoms.into_iter().map(|a| Point::Binary { x: a.x, y: a.y }).collect(), weights)
            }
            DistRepr::Sampled { atoms, weights } => (
                atoms
                    .into_iter()
                    .map(|a| Point::Sampled { values: a.values, quad_weights: a.quad_weights, y: a.y })
                    .collect(),
                weights,
            ),
        };
        DiscreteDistribution::new(atoms, weights)
    }
}

impl From<DiscreteDistribution> for DistRepr {
    fn from(d: DiscreteDistribution) -> Self {
        let weights = d.weights;
        match d.atoms[0].kind() {
            PointKind::Plain => DistRepr::Plain {
                atoms: d
                    .atoms
                    .into_iter()
                    .map(|p| match p {
                        Point::Plain(z) => z,
                        _ => unreachable!(),
                    })
                    .collect(),
                weights,
            },
            PointKind::Labeled => DistRepr::Labeled {
                atoms: d
                    .atoms
                    .into_iter()
                    .map(|p| match p {
                        Point::Labeled { x, y } => LabeledAtom { x, y },
                        _ => unreachable!(),
                    })
                    .collect(),
                weights,
            },
            PointKind::Binary => DistRepr::Binary {
                atoms: d
                    .atoms
                    .into_iter()
                    .map(|p| match p {
                        Point::Binary { x, y } => BinaryAtom { x, y },
                        _ => unreachable!(),
                    })
                    .collect(),
                weights,
            },
            PointKind::Sampled => DistRepr::Sampled {
                atoms: d
                    .atoms
                    .into_iter()
                    .map(|p| match p {
                        Point::Sampled { values, quad_weights, y } => SampledAtom { values, quad_weights, y },
                        _ => unreachable!(),
                    })
                    .collect(),
                weights,
            },
        }
    }
}
