use super::dist::InputDistribution;
use super::noise::NoiseChannel;
use crate::boolean::{InputBatch, Target};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// The joint law of `(x, y)` with `x ~ dist` and `y = f(x) * xi`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSource {
    dist: InputDistribution,
    target: Target,
    noise: NoiseChannel,
}

impl LabeledSource {
    pub fn new(dist: InputDistribution, target: Target, noise: NoiseChannel) -> Result<Self> {
        if dist.dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: dist.dim(),
            });
        }
        Ok(Self {
            dist,
            target,
            noise,
        })
    }

    pub fn dist(&self) -> &InputDistribution {
        &self.dist
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn noise(&self) -> NoiseChannel {
        self.noise
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    /// Same target and noise on another input distribution.
    pub fn with_dist(&self, dist: InputDistribution) -> Result<Self> {
        Self::new(dist, self.target.clone(), self.noise)
    }

    pub fn with_noise(&self, noise: NoiseChannel) -> Self {
        Self {
            noise,
            ..self.clone()
        }
    }

    /// Noisy labels for `xs`, one independent flip per row.
    pub fn draw_labels(&self, xs: &InputBatch, rng: &mut Rng) -> Result<Vec<i8>> {
        if !xs.is_empty() && xs.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: xs.dim(),
            });
        }
        Ok(xs
            .rows()
            .map(|x| self.target.eval_bits(x) * self.noise.draw(rng))
            .collect())
    }

    /// Draws one labeled example into `x`, returning its label.
    pub fn sample_one(&self, rng: &mut Rng, x: &mut [i8]) -> i8 {
        self.dist.sample_one(rng, x);
        self.target.eval_bits(x) * self.noise.draw(rng)
    }

    /// Replaces the contents of `xs`/`ys` with `n` fresh labeled draws.
    pub fn sample_into(&self, rng: &mut Rng, n: usize, xs: &mut InputBatch, ys: &mut Vec<i8>) {
        xs.clear();
        ys.clear();
        let d = self.dim();
        let data = xs.data_mut();
        data.resize(n * d, 0);
        for row in data.chunks_exact_mut(d) {
            ys.push(self.sample_one(rng, row));
        }
    }

    pub fn sample(&self, rng: &mut Rng, n: usize) -> (InputBatch, Vec<i8>) {
        let mut xs = InputBatch::with_capacity(self.dim(), n);
        let mut ys = Vec::with_capacity(n);
        self.sample_into(rng, n, &mut xs, &mut ys);
        (xs, ys)
    }
}
