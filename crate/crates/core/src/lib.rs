//! Learning Boolean targets under positive distribution shift: hypercube
//! distributions, analytic and neural learners, query-model reductions and an
//! experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod boolean;
pub mod distributions;
mod error;
pub mod harness;
pub mod neural;
pub mod query;
pub mod rng;

pub use boolean::{
    build_fk, BooleanCircuit, CircuitTarget, Gate, HypercubeInput, InputBatch, JuntaTarget,
    ParityTarget, Target,
};
pub use distributions::{
    exact_moment, BiasVector, DistributionSpec, InputDistribution, LabeledSource, NoiseChannel,
};
pub use error::{Error, Result};
