//! Non-neural learners: correlation-threshold parity recovery, the CSQ junta
//! learner, and the bit-transmission codec with its circuit learner.

mod bitcode;
mod correlation;
mod csq;
mod fpds;
mod interp;

pub use bitcode::{decode_bits, decode_frequencies, encode_bits, BitCode, FrequencyCounter};
pub use correlation::{
    correlation_gap, learn_parity_correlation, support_from_estimates, CorrelationAccumulator,
    CorrelationFit,
};
pub use csq::{
    csq_learn_junta, support_threshold, CsqFit, CsqMode, CsqOracle, CsqQuery, QueryForm,
    QueryRecord,
};
pub use fpds::{
    fpds_learn_circuit, fpds_payload, fpds_source, FpdsDecoder, FpdsHypothesis, HEADER_BITS,
};
pub use interp::{chebyshev_nodes, coefficient_amplification, eval_poly, interpolate_chebyshev};
