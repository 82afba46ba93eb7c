//! Boolean targets on the hypercube: parities, juntas and circuits, plus
//! Fourier–Walsh coefficients and the circuit bit codec.
//!
//! Conventions: learning code works with the signed view `{-1, +1}`.
//! Circuits and the codec use the `{0, 1}` view with `+1 -> 1`, `-1 -> 0`;
//! as an integer, bit `i` holds coordinate `i`. Coordinates and node ids are
//! 0-based in Rust and 1-based on the wire (netlists, bit layouts).

mod circuit;
mod codec;
mod fourier;
mod junta;
mod parity;
mod point;
mod target;

pub use circuit::{BooleanCircuit, CircuitTarget, Gate};
pub use codec::{bits_to_circuit, circuit_to_bits, encoded_len, BitReader, BitWriter};
pub use fourier::{fourier_coefficient, walsh_hadamard};
pub use junta::{build_fk, JuntaTarget, MAX_JUNTA_SUPPORT};
pub use parity::ParityTarget;
pub use point::{index_of, HypercubeInput, InputBatch};
pub use target::Target;
