use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Per-coordinate means `mu_i = E[x_i]`, each in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BiasVector {
    mu: Vec<f64>,
}

impl BiasVector {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::arg("bias vector needs dimension >= 1"));
        }
        if let Some(i) = mu.iter().position(|m| !m.is_finite() || m.abs() > 1.0) {
            return Err(Error::arg(format!(
                "bias {} on coordinate {i} is outside [-1, 1]",
                mu[i]
            )));
        }
        Ok(Self { mu })
    }

    pub fn constant(dim: usize, mu: f64) -> Result<Self> {
        Self::new(vec![mu; dim])
    }

    /// `mu ~ Unif[-1, 1]^d`.
    pub fn random(dim: usize, rng: &mut Rng) -> Result<Self> {
        Self::new((0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.mu[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    pub fn is_zero(&self) -> bool {
        self.mu.iter().all(|&m| m == 0.0)
    }
}

impl TryFrom<Vec<f64>> for BiasVector {
    type Error = Error;

    fn try_from(mu: Vec<f64>) -> Result<Self> {
        Self::new(mu)
    }
}

impl From<BiasVector> for Vec<f64> {
    fn from(b: BiasVector) -> Self {
        b.mu
    }
}
