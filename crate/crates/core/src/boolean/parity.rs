use serde::{Deserialize, Serialize};

use super::point::HypercubeInput;
use crate::error::{Error, Result};

/// `chi_S(x) = prod_{i in S} x_i` over `{-1,+1}^d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityTarget {
    dim: usize,
    support: Vec<usize>,
}

impl ParityTarget {
    /// `support` holds 0-based coordinates; it is stored sorted.
    pub fn new(dim: usize, support: impl IntoIterator<Item = usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("parity dimension must be positive"));
        }
        let mut support: Vec<usize> = support.into_iter().collect();
        support.sort_unstable();
        if let Some(w) = support.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::arg(format!(
                "coordinate {} repeated in support",
                w[0]
            )));
        }
        if let Some(&i) = support.iter().find(|&&i| i >= dim) {
            return Err(Error::arg(format!(
                "support coordinate {i} outside d={dim}"
            )));
        }
        Ok(Self { dim, support })
    }

    /// Parity on the first `k` coordinates.
    pub fn prefix(dim: usize, k: usize) -> Result<Self> {
        Self::new(dim, 0..k)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn eval(&self, x: &HypercubeInput) -> Result<i8> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(self.eval_bits(x.bits()))
    }

    pub fn eval_bits(&self, x: &[i8]) -> i8 {
        let negatives = self.support.iter().filter(|&&i| x[i] < 0).count();
        if negatives % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// 0/1 indicator vector of the support, as used for first-layer rows.
    pub fn indicator(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &i in &self.support {
            v[i] = 1.0;
        }
        v
    }
}
