use serde::{Deserialize, Serialize};

use crate::boolean::{InputBatch, Target};
use crate::distributions::InputDistribution;
use crate::rng::Rng;

/// Predictor returned by the query-model learners.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    Constant { label: i8 },
    Target(Target),
}

impl Hypothesis {
    /// The constant-0 predictor (label -1), matching the codec fallback.
    pub fn zero() -> Self {
        Hypothesis::Constant { label: -1 }
    }

    pub fn predict(&self, x: &[i8]) -> i8 {
        match self {
            Hypothesis::Constant { label } => *label,
            Hypothesis::Target(t) => t.eval_bits(x),
        }
    }

    /// Parity support, when the hypothesis is a parity.
    pub fn parity_support(&self) -> Option<&[usize]> {
        match self {
            Hypothesis::Target(Target::Parity(p)) => Some(p.support()),
            _ => None,
        }
    }

    /// Fraction of `n` fresh draws from `dist` where the prediction differs
    /// from the noiseless `target`.
    pub fn disagreement(
        &self,
        target: &Target,
        dist: &InputDistribution,
        n: usize,
        rng: &mut Rng,
    ) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let xs: InputBatch = dist.sample(rng, n);
        let wrong = xs
            .rows()
            .filter(|x| self.predict(x) != target.eval_bits(x))
            .count();
        wrong as f64 / n as f64
    }
}
