use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Random classification noise: each label flips independently with rate `eta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseChannel {
    eta: f64,
}

impl NoiseChannel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::arg(format!("noise rate {eta} outside [0, 0.5)")));
        }
        Ok(Self { eta })
    }

    pub fn clean() -> Self {
        Self { eta: 0.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `1 - 2 eta`, the factor every label moment carries.
    pub fn attenuation(&self) -> f64 {
        1.0 - 2.0 * self.eta
    }

    /// Draws the multiplier `xi`. One generator draw per call even when
    /// `eta = 0`, so streams stay aligned across noise rates.
    pub fn draw(&self, rng: &mut Rng) -> i8 {
        let u: f64 = rng.random();
        if u < self.eta {
            -1
        } else {
            1
        }
    }
}

impl TryFrom<f64> for NoiseChannel {
    type Error = Error;

    fn try_from(eta: f64) -> Result<Self> {
        Self::new(eta)
    }
}

impl From<NoiseChannel> for f64 {
    fn from(n: NoiseChannel) -> Self {
        n.eta
    }
}
