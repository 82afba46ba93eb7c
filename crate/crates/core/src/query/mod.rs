//! Non-adaptive membership-query learners and the reductions between query
//! learning and distribution-shift PAC learning.

mod hypothesis;
mod learner;
mod reduction;

pub use hypothesis::Hypothesis;
pub use learner::{
    ddspac_to_namq, run_ddspac, run_namq, ConstantLearner, CorrelationParityLearner, DdsPacLearner,
    LabeledBatch, NamqLearner, SampledQueries,
};
pub use reduction::{
    coverage_sample_size, majority_denoise, namq_to_rdspac, repetition_count, KeyedNoise,
    LabelOracle, ReductionReport,
};
