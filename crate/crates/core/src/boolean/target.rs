use serde::{Deserialize, Serialize};

use super::circuit::CircuitTarget;
use super::junta::JuntaTarget;
use super::parity::ParityTarget;
use super::point::HypercubeInput;
use crate::error::{Error, Result};

/// A `{-1,+1}`-valued labeling rule on `{-1,+1}^d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Target {
    Parity(ParityTarget),
    Junta(JuntaTarget),
    Circuit(CircuitTarget),
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::Parity(t) => t.dim(),
            Target::Junta(t) => t.dim(),
            Target::Circuit(t) => t.dim(),
        }
    }

    /// Relevant coordinates, when the family exposes them.
    pub fn support(&self) -> Option<&[usize]> {
        match self {
            Target::Parity(t) => Some(t.support()),
            Target::Junta(t) => Some(t.support()),
            Target::Circuit(_) => None,
        }
    }

    pub fn eval(&self, x: &HypercubeInput) -> Result<i8> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(self.eval_bits(x.bits()))
    }

    pub fn eval_bits(&self, x: &[i8]) -> i8 {
        match self {
            Target::Parity(t) => t.eval_bits(x),
            Target::Junta(t) => t.eval_bits(x),
            Target::Circuit(t) => t.eval_bits(x),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Target::Parity(_) => "parity",
            Target::Junta(_) => "junta",
            Target::Circuit(_) => "circuit",
        }
    }
}

impl From<ParityTarget> for Target {
    fn from(t: ParityTarget) -> Self {
        Target::Parity(t)
    }
}

impl From<JuntaTarget> for Target {
    fn from(t: JuntaTarget) -> Self {
        Target::Junta(t)
    }
}

impl From<CircuitTarget> for Target {
    fn from(t: CircuitTarget) -> Self {
        Target::Circuit(t)
    }
}
