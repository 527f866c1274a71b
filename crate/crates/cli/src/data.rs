//! Seeded synthetic data.
//!
//! The generator is xoshiro256++ seeded through `seed_from_u64` (SplitMix64
//! expansion of the 64-bit seed), so a seed names the same sample on every
//! platform. Atoms are drawn one after another, features first and then the
//! response or label.

use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use wdro_core::losses::{LossFamily, LossSpec};
use wdro_core::space::{DiscreteDistribution, Label, Point, PointKind};
use wdro_core::Result;

use crate::config::{DataSource, GeneratorSpec, Sampler};

struct Draw {
    rng: Xoshiro256PlusPlus,
    sampler: Sampler,
    scale: f64,
}

impl Draw {
    fn value(&mut self) -> f64 {
        match self.sampler {
            Sampler::Uniform => self.rng.random_range(-self.scale..self.scale),
            Sampler::Gaussian => {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                self.scale * z
            }
        }
    }

    fn vector(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.value()).collect()
    }

    /// Uniform on the open interval `(0, 1)`.
    fn unit(&mut self) -> f64 {
        loop {
            let v: f64 = self.rng.random_range(0.0..1.0);
            if v > 0.0 {
                return v;
            }
        }
    }
}

/// Uniform empirical distribution of `g.n` draws. Cross-entropy data is
/// drawn uniformly on `(0, 1)` whatever the sampler.
pub fn generate(g: &GeneratorSpec, loss: &LossSpec) -> Result<DiscreteDistribution> {
    let mut draw =
        Draw { rng: Xoshiro256PlusPlus::seed_from_u64(g.seed), sampler: g.sampler, scale: g.scale };
    let kind = loss.point_kind()?;
    let bce = matches!(loss.family(), LossFamily::BinaryCrossEntropy { .. });
    let mut atoms = Vec::with_capacity(g.n);
    for _ in 0..g.n {
        let p = match kind {
            PointKind::Plain if bce => Point::Plain((0..g.dim).map(|_| draw.unit()).collect()),
            PointKind::Plain => Point::Plain(draw.vector(g.dim)),
            PointKind::Labeled => {
                let x = draw.vector(g.dim);
                Point::Labeled { x, y: draw.value() }
            }
            PointKind::Binary => {
                let x = draw.vector(g.dim);
                let y = if draw.rng.random_bool(0.5) { Label::Pos } else { Label::Neg };
                Point::Binary { x, y }
            }
            PointKind::Sampled => {
                let values = draw.vector(g.dim);
                Point::sampled(values, draw.value())?
            }
        };
        atoms.push(p);
    }
    DiscreteDistribution::uniform(atoms)
}

/// The distribution a configuration describes.
pub fn resolve(source: &DataSource, loss: &LossSpec) -> Result<DiscreteDistribution> {
    match source {
        DataSource::Distribution(d) => Ok(d.clone()),
        DataSource::Generator(g) => generate(g, loss),
    }
}
