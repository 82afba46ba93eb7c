use serde::{Deserialize, Serialize};

use super::loss::Loss;
use super::net::{sign, Model};
use crate::boolean::{HypercubeInput, InputBatch};
use crate::distributions::LabeledSource;
use crate::error::{Error, Result};
use crate::rng::Rng;

const CHUNK: usize = 1024;

/// How [`zero_one_error`] measures the error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMode {
    /// Enumerate the cube (d <= 20) and mix in the noise rate analytically.
    Exact,
    /// Fraction of mistakes on this many fresh noisy draws.
    Sampled(usize),
}

/// A fixed labeled test set.
#[derive(Clone, Debug)]
pub struct TestSet {
    dim: usize,
    x: Vec<f64>,
    y: Vec<i8>,
}

impl TestSet {
    pub fn draw(src: &LabeledSource, n: usize, rng: &mut Rng) -> Self {
        let (xs, ys) = src.sample(rng, n);
        Self::from_batch(&xs, ys)
    }

    pub fn from_batch(xs: &InputBatch, ys: Vec<i8>) -> Self {
        let mut x = Vec::new();
        xs.write_f64(&mut x);
        Self {
            dim: xs.dim(),
            x,
            y: ys,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn for_each_chunk<M: Model>(
        &self,
        model: &M,
        ws: &mut M::Workspace,
        mut f: impl FnMut(&[f64], &[i8]),
    ) {
        let mut out = vec![0.0; CHUNK];
        for start in (0..self.len()).step_by(CHUNK) {
            let rows = CHUNK.min(self.len() - start);
            model.forward_batch(&self.x[start * self.dim..], rows, &mut out, ws);
            f(&out[..rows], &self.y[start..start + rows]);
        }
    }

    /// Fraction of points where `sign(f(x)) != y`.
    pub fn error<M: Model>(&self, model: &M, ws: &mut M::Workspace) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let mut wrong = 0usize;
        self.for_each_chunk(model, ws, |out, ys| {
            wrong += out.iter().zip(ys).filter(|(&o, &y)| sign(o) != y).count();
        });
        wrong as f64 / self.len() as f64
    }

    /// Mean loss with the label mean of the set itself.
    pub fn mean_loss<M: Model>(&self, model: &M, loss: Loss, ws: &mut M::Workspace) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let ybar = self.y.iter().map(|&y| f64::from(y)).sum::<f64>() / self.len() as f64;
        let mut total = 0.0;
        self.for_each_chunk(model, ws, |out, ys| {
            total += out
                .iter()
                .zip(ys)
                .map(|(&o, &y)| loss.value(o, f64::from(y), ybar))
                .sum::<f64>();
        });
        total / self.len() as f64
    }
}

/// `P[sign(f(x)) != y]` under the source's distribution and noise.
pub fn zero_one_error<M: Model>(
    model: &M,
    src: &LabeledSource,
    mode: ErrorMode,
    rng: &mut Rng,
) -> Result<f64> {
    if model.input_dim() != src.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            got: model.input_dim(),
        });
    }
    let mut ws = M::Workspace::default();
    match mode {
        ErrorMode::Sampled(n) => Ok(TestSet::draw(src, n, rng).error(model, &mut ws)),
        ErrorMode::Exact => {
            let d = src.dim();
            if d > 20 {
                return Err(Error::arg(format!("exact error needs d <= 20, got {d}")));
            }
            let total = 1u64 << d;
            let mut mistakes = 0.0;
            let mut x = Vec::with_capacity(CHUNK * d);
            let mut bits = Vec::with_capacity(CHUNK);
            let mut out = vec![0.0; CHUNK];
            let mut start = 0;
            while start < total {
                let end = (start + CHUNK as u64).min(total);
                x.clear();
                bits.clear();
                for idx in start..end {
                    let p = HypercubeInput::from_index(idx, d)?;
                    x.extend(p.bits().iter().map(|&v| f64::from(v)));
                    bits.push(p);
                }
                let rows = bits.len();
                model.forward_batch(&x, rows, &mut out, &mut ws);
                for (p, &o) in bits.iter().zip(&out[..rows]) {
                    if sign(o) != src.target().eval_bits(p.bits()) {
                        mistakes += src.dist().density_bits(p.bits());
                    }
                }
                start = end;
            }
            let eta = src.noise().eta();
            Ok(eta + (1.0 - 2.0 * eta) * mistakes)
        }
    }
}
