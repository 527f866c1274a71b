//! Closed-form bounds, worst-case certificates and robust risk measures.
//!
//! ```text
//! E = E_{P_N}[psi^r]
//! U = (E^{1/r} + L delta)^r
//! ```
//!
//! For `r = 1` the worst case mixes each atom with a steep witness. For `r > 1`
//! each atom moves to a witness at distance `psi(Z_i) delta / E^{1/r}`, which
//! spends the budget exactly.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::losses::{check_alpha, weak_lipschitz, LossFamily, LossSpec, Scope, WitnessMode};
use crate::math::{pow_r, root_r};
use crate::oracle::wasserstein_discrete;
use crate::space::{DiscreteDistribution, Point};
use crate::{Error, Result};

/// `E_{P_N}[psi^r]`.
pub fn expected_loss(loss: &LossSpec, dist: &DiscreteDistribution) -> Result<f64> {
    dist.expectation(|z| loss.eval_loss(z))
}

/// Ingredients of the closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub expected: f64,
    pub lipschitz: f64,
    pub upper: f64,
}

fn combine(e: f64, l: f64, delta: f64, r: f64) -> f64 {
    if r == 1.0 {
        e + l * delta
    } else {
        pow_r(root_r(e, r) + l * delta, r)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delta must be finite and nonnegative, got {delta}")))
    }
}

/// `U = (E^{1/r} + L delta)^r` with `L = max_i L_i`.
pub fn upper_bound(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64) -> Result<Bound> {
    check_delta(delta)?;
    let cert = weak_lipschitz(loss, dist)?;
    let e = expected_loss(loss, dist)?;
    Ok(Bound { expected: e, lipschitz: cert.constant, upper: combine(e, cert.constant, delta, loss.r()) })
}

/// Shorthand for `upper_bound(..).upper`.
pub fn upper_bound_u(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64) -> Result<f64> {
    Ok(upper_bound(loss, dist, delta)?.upper)
}

/// Per-point sandwich for families with per-atom constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerPointBounds {
    /// `E + delta sum_i mu_i L_i`.
    pub lower: f64,
    /// `E + delta max_i L_i`.
    pub upper: f64,
}

/// Sandwich `lower <= S <= upper`; requires a steep witness at every atom.
pub fn per_point_bounds(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64) -> Result<PerPointBounds> {
    check_delta(delta)?;
    let cert = weak_lipschitz(loss, dist)?;
    if cert.scope != Scope::PerPoint {
        return Err(Error::NoPerPointCertificate { family: loss.name() });
    }
    for (z, &l) in dist.atoms().iter().zip(&cert.per_point) {
        if l > 0.0 && delta > 0.0 {
            loss.witness(z, l * 1e-3, delta, WitnessMode::Steep)?;
        }
    }
    let e = expected_loss(loss, dist)?;
    let avg: f64 = cert.per_point.iter().zip(dist.weights()).map(|(l, w)| l * w).sum();
    Ok(PerPointBounds { lower: e + delta * avg, upper: e + delta * cert.constant })
}

/// Which statement about the worst case applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// The worst case equals the closed-form bound.
    Equivalent,
    /// The budget reaches the edge of the loss range; the worst case is `value`.
    Saturated { value: f64 },
    /// No equivalence claim.
    Unverified,
}

/// Regime of the conditional families; unconditional ones are `Equivalent`.
pub fn conditional_regime(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64) -> Result<Regime> {
    check_delta(delta)?;
    let cert = weak_lipschitz(loss, dist)?;
    if !loss.family().is_conditional() {
        return Ok(Regime::Equivalent);
    }
    let same_l = cert.per_point.iter().all(|l| (l - cert.constant).abs() <= 1e-12 * cert.constant);
    let witnesses = dist
        .atoms()
        .iter()
        .zip(&cert.per_point)
        .all(|(z, &l)| l > 0.0 && loss.witness(z, l * 1e-6, delta, WitnessMode::Steep).is_ok());
    if same_l && witnesses {
        return Ok(Regime::Equivalent);
    }
    if dist.len() == 1 {
        return Ok(match loss.family() {
            LossFamily::BinaryCrossEntropy { .. } => Regime::Saturated { value: 0.0 },
            _ => Regime::Saturated { value: 1.0 },
        });
    }
    Ok(Regime::Unverified)
}

/// Explicit near-worst-case distribution with its verified radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseCertificate {
    pub distribution: DiscreteDistribution,
    pub achieved_value: f64,
    /// `U` for global constants, the per-point lower bound otherwise.
    pub target_value: f64,
    pub epsilon_effective: f64,
    /// `W(P~, P_N)` recomputed by the transport solver.
    pub wasserstein_radius: f64,
    pub regime: Regime,
}

/// Builds `P~` with `W(P~, P_N) <= delta` and `E_{P~}[psi^r] >= target - epsilon_effective`.
pub fn worst_case_distribution(
    loss: &LossSpec,
    dist: &DiscreteDistribution,
    delta: f64,
    epsilon: f64,
) -> Result<WorstCaseCertificate> {
    check_delta(delta)?;
    let cert = weak_lipschitz(loss, dist)?;
    let l = cert.constant;
    let l_min = cert.per_point.iter().copied().fold(f64::INFINITY, f64::min);
    let limit = l_min.min(delta * l_min);
    if !(epsilon > 0.0 && epsilon < limit) {
        return Err(Error::EpsilonOutOfRange { epsilon, limit });
    }
    let r = loss.r();
    let e = expected_loss(loss, dist)?;
    let slack = epsilon / delta;
    let mut parts = Vec::with_capacity(dist.len());
    let (target, eps_eff) = if r == 1.0 || e == 0.0 {
        for z in dist.atoms() {
            let w = loss.witness(z, slack, delta, WitnessMode::Steep)?;
            let d = crate::costs::eval_cost(loss.cost(), &w, z)?.to_f64();
            let eta = (pow_r(delta, r) / pow_r(d, r)).min(1.0);
            parts.push(DiscreteDistribution::mix(
                &[DiscreteDistribution::dirac(w)?, DiscreteDistribution::dirac(z.clone())?],
                &[eta, 1.0 - eta],
            )?);
        }
        if r == 1.0 {
            let avg: f64 = cert.per_point.iter().zip(dist.weights()).map(|(li, w)| li * w).sum();
            (e + avg * delta, epsilon)
        } else {
            let u = combine(e, l, delta, r);
            (u, u - pow_r(l * delta - epsilon, r))
        }
    } else {
        let scale = delta / root_r(e, r);
        for z in dist.atoms() {
            let d = loss.eval_psi(z)? * scale;
            let w = loss.witness(z, slack, delta, WitnessMode::AtDistance(d))?;
            parts.push(DiscreteDistribution::dirac(w)?);
        }
        let u = combine(e, l, delta, r);
        (u, u - pow_r(root_r(e, r) + l * delta - epsilon, r))
    };
    let worst = DiscreteDistribution::mix(&parts, dist.weights())?;
    let achieved = expected_loss(loss, &worst)?;
    let radius = wasserstein_discrete(loss.cost(), r, &worst, dist)?.distance;
    let regime = conditional_regime(loss, dist, delta)?;
    Ok(WorstCaseCertificate {
        distribution: worst,
        achieved_value: achieved,
        target_value: target,
        epsilon_effective: eps_eff,
        wasserstein_radius: radius,
        regime,
    })
}

/// `CVaR_alpha` of a weighted sample: the mean of the upper `1 - alpha` tail.
pub fn cvar_of_values(values: &[f64], weights: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), found: weights.len() });
    }
    if values.is_empty() {
        return Err(Error::EmptyAtoms);
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let tail = 1.0 - alpha;
    let mut left = tail;
    let mut acc = 0.0;
    for i in idx {
        if left <= 0.0 {
            break;
        }
        let take = weights[i].min(left);
        acc += take * values[i];
        left -= take;
    }
    Ok(acc / tail)
}

/// `CVaR_alpha(G)` under `dist`.
pub fn cvar<F>(dist: &DiscreteDistribution, mut g: F, alpha: f64) -> Result<f64>
where
    F: FnMut(&Point) -> Result<f64>,
{
    let values = dist.atoms().iter().map(&mut g).collect::<Result<Vec<_>>>()?;
    cvar_of_values(&values, dist.weights(), alpha)
}

/// Nominal risk and its worst case over the Wasserstein ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustRisk {
    pub nominal: f64,
    pub robust: f64,
    /// Minimizing threshold `t`.
    pub threshold: f64,
}

/// `CVaR_alpha(G) + L_G delta / (1 - alpha)` for the CVaR families.
pub fn robust_cvar(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64) -> Result<RobustRisk> {
    check_delta(delta)?;
    let alpha = match loss.family() {
        LossFamily::CvarAbsResidual { alpha, .. } | LossFamily::CvarMargin { alpha, .. } => *alpha,
        _ => return Err(Error::UnsupportedPairing { family: loss.name(), cost: loss.cost().name() }),
    };
    let lg = weak_lipschitz(loss, dist)?.constant;
    let values = dist.atoms().iter().map(|z| loss.eval_psi(z)).collect::<Result<Vec<_>>>()?;
    let nominal = cvar_of_values(&values, dist.weights(), alpha)?;
    let threshold = value_at_risk(&values, dist.weights(), alpha);
    Ok(RobustRisk { nominal, robust: nominal + lg * delta / (1.0 - alpha), threshold })
}

fn value_at_risk(values: &[f64], weights: &[f64], alpha: f64) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut cum = 0.0;
    for &i in &idx {
        cum += weights[i];
        if cum >= alpha - 1e-15 && weights[i] > 0.0 {
            return values[i];
        }
    }
    values[idx[idx.len() - 1]]
}

/// `t + (E[(G - t)_+^r])^{1/r} / (1 - alpha)` at fixed `t`.
pub fn hmcr_objective(values: &[f64], weights: &[f64], alpha: f64, r: f64, t: f64) -> f64 {
    let m: f64 = values.iter().zip(weights).map(|(g, w)| w * pow_r((g - t).max(0.0), r)).sum();
    t + root_r(m, r) / (1.0 - alpha)
}

fn hmcr_slope(values: &[f64], weights: &[f64], alpha: f64, r: f64, t: f64) -> f64 {
    let m: f64 = values.iter().zip(weights).map(|(g, w)| w * pow_r((g - t).max(0.0), r)).sum();
    if m == 0.0 {
        return 1.0;
    }
    let num: f64 = values.iter().zip(weights).map(|(g, w)| w * pow_r((g - t).max(0.0), r - 1.0)).sum();
    1.0 - num * pow_r(m, 1.0 / r - 1.0) / (1.0 - alpha)
}

/// Minimizes the higher-moment risk over `t` by golden-section search.
pub fn hmcr_minimize(values: &[f64], weights: &[f64], alpha: f64, r: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::InvalidParameter(format!("moment order must be >= 1, got {r}")));
    }
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::EmptyAtoms);
    }
    let g_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let g_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut width = 1.0;
    let mut a = g_min - width;
    for _ in 0..200 {
        if hmcr_slope(values, weights, alpha, r, a) < 0.0 {
            break;
        }
        width *= 2.0;
        a = g_min - width;
    }
    let mut b = g_max;
    let phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let f = |t: f64| hmcr_objective(values, weights, alpha, r, t);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > 1e-10 * (1.0 + a.abs().max(b.abs())) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for t in [a, b, g_max] {
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    Ok(best)
}

/// Higher-moment coherent risk of `G` and its robust value `nominal + L_G delta / (1 - alpha)`.
pub fn hmcr<F>(
    dist: &DiscreteDistribution,
    mut g: F,
    alpha: f64,
    r: f64,
    delta: f64,
    lipschitz_g: f64,
) -> Result<RobustRisk>
where
    F: FnMut(&Point) -> Result<f64>,
{
    check_delta(delta)?;
    let values = dist.atoms().iter().map(&mut g).collect::<Result<Vec<_>>>()?;
    let (threshold, nominal) = hmcr_minimize(&values, dist.weights(), alpha, r)?;
    Ok(RobustRisk { nominal, robust: nominal + lipschitz_g * delta / (1.0 - alpha), threshold })
}

/// [`hmcr`] for an `Hmcr` loss, using its risk level, order and constant.
pub fn robust_hmcr(loss: &LossSpec, dist: &DiscreteDistribution, delta: f64) -> Result<RobustRisk> {
    let LossFamily::Hmcr { alpha, order, .. } = loss.family() else {
        return Err(Error::UnsupportedPairing { family: loss.name(), cost: loss.cost().name() });
    };
    let lg = weak_lipschitz(loss, dist)?.constant;
    hmcr(dist, |z| loss.eval_psi(z), *alpha, *order, delta, lg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{CostSpec, GroundNorm};
    use alloc::vec;

    fn plain(v: f64) -> Point {
        Point::Plain(vec![v])
    }

    #[test]
    fn abs_at_origin() {
        let s = LossSpec::new(LossFamily::AbsLinear { beta: vec![1.0] }, 1.0, CostSpec::AbsoluteScalar).unwrap();
        let d = DiscreteDistribution::dirac(plain(0.0)).unwrap();
        assert_eq!(upper_bound_u(&s, &d, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn square_of_abs_at_origin() {
        let s = LossSpec::new(LossFamily::AbsLinear { beta: vec![1.0] }, 2.0, CostSpec::AbsoluteScalar).unwrap();
        let d = DiscreteDistribution::dirac(plain(0.0)).unwrap();
        assert_eq!(upper_bound_u(&s, &d, 0.5).unwrap(), 0.25);
    }

    #[test]
    fn cvar_tail_mean() {
        let v = cvar_of_values(&[1.0, 2.0, 3.0, 4.0], &[0.25; 4], 0.5).unwrap();
        assert!((v - 3.5).abs() < 1e-15);
        assert!(matches!(cvar_of_values(&[1.0], &[1.0], 1.0), Err(Error::AlphaOutOfRange { .. })));
    }

    #[test]
    fn hmcr_point_mass() {
        let (_, v) = hmcr_minimize(&[2.0], &[1.0], 0.5, 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn robust_cvar_adds_scaled_radius() {
        let s = LossSpec::new(
            LossFamily::CvarAbsResidual { beta: vec![0.0], alpha: 0.5 },
            1.0,
            CostSpec::FullNorm { norm: GroundNorm::L2 },
        )
        .unwrap();
        let d = DiscreteDistribution::uniform(vec![
            Point::Labeled { x: vec![0.0], y: 1.0 },
            Point::Labeled { x: vec![0.0], y: 3.0 },
        ])
        .unwrap();
        let r = robust_cvar(&s, &d, 0.1).unwrap();
        assert!((r.nominal - 3.0).abs() < 1e-15);
        assert!((r.robust - 3.2).abs() < 1e-12);
    }
}
