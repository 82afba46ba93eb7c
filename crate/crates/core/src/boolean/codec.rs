use super::circuit::{BooleanCircuit, Gate};
use crate::error::{Error, Result};

const FIELD: u32 = 16;
const RECORD: usize = 2 + 16 + 16;
const HEADER: usize = 32;
const MAX_FIELD: usize = (1 << FIELD) - 1;

/// MSB-first bit accumulator.
#[derive(Clone, Debug, Default)]
pub struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: u64, width: u32) {
        for shift in (0..width).rev() {
            self.bits.push((value >> shift) & 1 == 1);
        }
    }

    pub fn extend(&mut self, bits: &[bool]) {
        self.bits.extend_from_slice(bits);
    }

    pub fn finish(self) -> Vec<bool> {
        self.bits
    }
}

/// MSB-first reader over a bit slice.
#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a [bool]) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn read(&mut self, width: u32) -> Result<u64> {
        let end = self.pos + width as usize;
        if end > self.bits.len() {
            return Err(Error::Decode(format!(
                "truncated: needed {width} bits at offset {}, have {}",
                self.pos,
                self.bits.len() - self.pos
            )));
        }
        let v = self.bits[self.pos..end]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b));
        self.pos = end;
        Ok(v)
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

/// Encoded length for a circuit with `nodes` nodes.
pub fn encoded_len(nodes: usize) -> usize {
    HEADER + RECORD * nodes
}

/// Fixed-width layout: `M` (16) and output id (16), then per node a 2-bit
/// kind (`00` INPUT, `01` NOT, `10` AND, `11` OR), a 16-bit payload (input
/// coordinate or first operand) and a 16-bit second operand (0 if unused).
/// All ids and coordinates are written 1-based.
pub fn circuit_to_bits(c: &BooleanCircuit) -> Result<Vec<bool>> {
    let m = c.len();
    if m > MAX_FIELD {
        return Err(Error::Encoding(format!(
            "{m} nodes do not fit the 16-bit node count"
        )));
    }
    let mut w = BitWriter::new();
    w.push(m as u64, FIELD);
    w.push(c.output() as u64 + 1, FIELD);
    for gate in c.nodes() {
        let (kind, payload, second) = match *gate {
            Gate::Input(i) => {
                if i + 1 > MAX_FIELD {
                    return Err(Error::Encoding(format!(
                        "input coordinate {} does not fit 16 bits",
                        i + 1
                    )));
                }
                (0b00, i + 1, 0)
            }
            Gate::Not(a) => (0b01, a + 1, 0),
            Gate::And(a, b) => (0b10, a + 1, b + 1),
            Gate::Or(a, b) => (0b11, a + 1, b + 1),
        };
        w.push(kind, 2);
        w.push(payload as u64, FIELD);
        w.push(second as u64, FIELD);
    }
    Ok(w.finish())
}

pub fn bits_to_circuit(bits: &[bool]) -> Result<BooleanCircuit> {
    if bits.is_empty() {
        return Err(Error::Decode("empty bit string".into()));
    }
    let mut r = BitReader::new(bits);
    let m = r.read(FIELD)? as usize;
    let out = r.read(FIELD)? as usize;
    if m == 0 {
        return Err(Error::Decode("header declares zero nodes".into()));
    }
    if bits.len() != encoded_len(m) {
        return Err(Error::Decode(format!(
            "header declares {m} nodes ({} bits) but got {} bits",
            encoded_len(m),
            bits.len()
        )));
    }
    if out == 0 {
        return Err(Error::Decode(
            "output id 0 is not a valid 1-based id".into(),
        ));
    }
    let mut nodes = Vec::with_capacity(m);
    for id in 0..m {
        let kind = r.read(2)?;
        let payload = r.read(FIELD)? as usize;
        let second = r.read(FIELD)? as usize;
        let operand = |v: usize| {
            v.checked_sub(1)
                .ok_or_else(|| Error::Decode(format!("node {} has operand id 0", id + 1)))
        };
        let gate = match kind {
            0b00 | 0b01 if second != 0 => {
                return Err(Error::Decode(format!(
                    "node {} carries an unused second operand",
                    id + 1
                )))
            }
            0b00 => Gate::Input(operand(payload)?),
            0b01 => Gate::Not(operand(payload)?),
            0b10 => Gate::And(operand(payload)?, operand(second)?),
            _ => Gate::Or(operand(payload)?, operand(second)?),
        };
        nodes.push(gate);
    }
    BooleanCircuit::new(nodes, out - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn not_input() -> BooleanCircuit {
        BooleanCircuit::new(vec![Gate::Input(0), Gate::Not(0)], 1).unwrap()
    }

    #[test]
    fn layout_of_not_input() {
        let bits = circuit_to_bits(&not_input()).unwrap();
        assert_eq!(bits.len(), 32 + 34 * 2);
        let mut r = BitReader::new(&bits);
        assert_eq!(r.read(16).unwrap(), 2);
        assert_eq!(r.read(16).unwrap(), 2);
        assert_eq!(
            (r.read(2).unwrap(), r.read(16).unwrap(), r.read(16).unwrap()),
            (0b00, 1, 0)
        );
        assert_eq!(
            (r.read(2).unwrap(), r.read(16).unwrap(), r.read(16).unwrap()),
            (0b01, 1, 0)
        );
        assert_eq!(r.remaining(), 0);
        assert_eq!(bits_to_circuit(&bits).unwrap(), not_input());
    }

    #[test]
    fn forward_reference_is_structural() {
        let mut bits = circuit_to_bits(&not_input()).unwrap();
        // Point the NOT's operand at itself (id 2).
        let payload = 32 + 34 + 2;
        bits[payload + 14] = true;
        bits[payload + 15] = false;
        assert!(matches!(bits_to_circuit(&bits), Err(Error::Structural(_))));
    }

    #[test]
    fn decode_errors() {
        assert!(matches!(bits_to_circuit(&[]), Err(Error::Decode(_))));
        let bits = circuit_to_bits(&not_input()).unwrap();
        assert!(matches!(
            bits_to_circuit(&bits[..bits.len() - 1]),
            Err(Error::Decode(_))
        ));
        let mut longer = bits.clone();
        longer.push(false);
        assert!(matches!(bits_to_circuit(&longer), Err(Error::Decode(_))));
    }

    #[test]
    fn oversized_circuit_is_rejected() {
        let mut nodes = vec![Gate::Input(0)];
        nodes.extend((0..MAX_FIELD).map(Gate::Not));
        let c = BooleanCircuit::new(nodes, 0).unwrap();
        assert!(matches!(circuit_to_bits(&c), Err(Error::Encoding(_))));
    }
}
