use serde::{Deserialize, Serialize};

use super::bitcode::{BitCode, FrequencyCounter};
use crate::boolean::{
    bits_to_circuit, circuit_to_bits, BitWriter, BooleanCircuit, CircuitTarget, InputBatch,
};
use crate::distributions::{LabeledSource, NoiseChannel};
use crate::error::{Error, Result};

/// Width of the length header that prefixes the circuit bits.
pub const HEADER_BITS: usize = 32;

/// Largest atom index the decoder tracks; bounds memory under uniform
/// contamination in small dimensions.
const MAX_TRACKED_ATOM: u64 = 1 << 24;

/// Header (circuit bit count, 32 bits, MSB first) followed by the circuit bits.
pub fn fpds_payload(c: &BooleanCircuit) -> Result<Vec<bool>> {
    let body = circuit_to_bits(c)?;
    let mut w = BitWriter::new();
    w.push(body.len() as u64, HEADER_BITS as u32);
    w.extend(&body);
    Ok(w.finish())
}

/// The training source for target `f`: `w * atoms(payload(f)) + (1 - w) * uniform`,
/// labeled by `f` with noise.
pub fn fpds_source(
    target: &CircuitTarget,
    noise: NoiseChannel,
    mixture_weight: f64,
) -> Result<(LabeledSource, BitCode)> {
    let theta = fpds_payload(target.circuit())?;
    let code = BitCode::new(theta.len(), target.dim(), mixture_weight)?;
    let dist = code.training_distribution(&theta)?;
    Ok((
        LabeledSource::new(dist, target.clone().into(), noise)?,
        code,
    ))
}

/// A decoded circuit, or the constant-0 predictor when decoding failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpdsHypothesis {
    pub circuit: Option<BooleanCircuit>,
    pub diagnostic: Option<String>,
}

impl FpdsHypothesis {
    fn fallback(reason: impl Into<String>) -> Self {
        Self {
            circuit: None,
            diagnostic: Some(reason.into()),
        }
    }

    pub fn fallback_used(&self) -> bool {
        self.circuit.is_none()
    }

    /// Output bit; the fallback always answers 0.
    pub fn predict_bit(&self, x: &[i8], scratch: &mut Vec<bool>) -> u8 {
        self.circuit.as_ref().map_or(0, |c| c.eval_with(x, scratch))
    }

    /// Output as a label (bit 1 -> +1, bit 0 -> -1).
    pub fn predict(&self, x: &[i8], scratch: &mut Vec<bool>) -> i8 {
        if self.predict_bit(x, scratch) == 1 {
            1
        } else {
            -1
        }
    }
}

/// Streaming form of the circuit learner: feed inputs, then decode.
#[derive(Clone, Debug)]
pub struct FpdsDecoder {
    d: usize,
    mixture_weight: f64,
    counter: FrequencyCounter,
}

impl FpdsDecoder {
    pub fn new(d: usize, mixture_weight: f64) -> Self {
        let limit = if d >= 24 { MAX_TRACKED_ATOM } else { 1 << d };
        Self {
            d,
            mixture_weight,
            counter: FrequencyCounter::new(limit),
        }
    }

    pub fn observe(&mut self, x: &[i8]) {
        self.counter.observe(x);
    }

    pub fn samples(&self) -> u64 {
        self.counter.total()
    }

    pub fn finish(&self) -> FpdsHypothesis {
        match self.decode() {
            Ok(c) => FpdsHypothesis {
                circuit: Some(c),
                diagnostic: None,
            },
            Err(e) => FpdsHypothesis::fallback(e.to_string()),
        }
    }

    fn decode(&self) -> Result<BooleanCircuit> {
        if self.counter.total() == 0 {
            return Err(Error::Decode("no samples".into()));
        }
        // The payload length is unknown until the header is read, so the
        // header is split at the midpoint of its own frequency range. Its top
        // bit is always 0 and the length is nonzero, so both masses occur.
        let header: Vec<f64> = (1..=HEADER_BITS as u64)
            .map(|i| self.counter.frequency(i))
            .collect();
        let (lo, hi) = header
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &f| {
                (l.min(f), h.max(f))
            });
        if lo >= hi {
            return Err(Error::Decode("header frequencies are indistinct".into()));
        }
        let mid = 0.5 * (lo + hi);
        let body_len = header
            .iter()
            .fold(0usize, |acc, &f| (acc << 1) | usize::from(f >= mid));
        let r = HEADER_BITS + body_len;
        let code = BitCode::new(r, self.d, self.mixture_weight)
            .map_err(|e| Error::Decode(format!("decoded length {body_len} is unusable: {e}")))?;
        if r as u64 >= MAX_TRACKED_ATOM {
            return Err(Error::Decode(format!(
                "decoded length {body_len} is too large"
            )));
        }
        let t = code.threshold();
        let bits: Vec<bool> = (1..=r as u64)
            .map(|i| self.counter.frequency(i) >= t)
            .collect();
        let recheck = bits[..HEADER_BITS]
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
        if recheck != body_len {
            return Err(Error::Decode(
                "header disagrees with the payload threshold".into(),
            ));
        }
        let circuit = bits_to_circuit(&bits[HEADER_BITS..])?;
        if circuit.min_dim() > self.d {
            return Err(Error::Decode("circuit reads coordinates beyond d".into()));
        }
        Ok(circuit)
    }
}

/// Decodes the target circuit from training inputs. Labels are accepted for
/// interface symmetry and never read.
pub fn fpds_learn_circuit(
    xs: &InputBatch,
    _ys: &[i8],
    d: usize,
    mixture_weight: f64,
) -> FpdsHypothesis {
    if !xs.is_empty() && xs.dim() != d {
        return FpdsHypothesis::fallback(format!("inputs have d={}, expected {d}", xs.dim()));
    }
    let mut dec = FpdsDecoder::new(d, mixture_weight);
    for x in xs.rows() {
        dec.observe(x);
    }
    dec.finish()
}
