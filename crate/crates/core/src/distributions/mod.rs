//! Input distributions on the hypercube, the label-noise channel and exact
//! label–coordinate moments.

mod bias;
mod dist;
mod moments;
mod named;
mod noise;
mod source;

pub use bias::BiasVector;
pub use dist::{binomial, AtomDistribution, InputDistribution, MixtureDistribution};
pub use moments::{brute_force_moment, exact_indicator_moment, exact_moment};
pub use named::{build_named_distribution, DistributionSpec, NAMED_DISTRIBUTIONS};
pub use noise::NoiseChannel;
pub use source::LabeledSource;
