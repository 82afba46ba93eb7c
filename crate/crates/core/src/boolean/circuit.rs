use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::point::HypercubeInput;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// One node of a circuit. Operands are ids of earlier nodes (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    /// Reads a 0-based input coordinate.
    Input(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
}

/// A fan-in-2 circuit over `{AND, OR, NOT}` whose node list is a
/// topological order. Evaluates to a bit in the `{0, 1}` view.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanCircuit {
    nodes: Vec<Gate>,
    output: usize,
    min_dim: usize,
}

impl BooleanCircuit {
    pub fn new(nodes: Vec<Gate>, output: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Structural("circuit has no nodes".into()));
        }
        if output >= nodes.len() {
            return Err(Error::Structural(format!(
                "output node {output} out of range ({} nodes)",
                nodes.len()
            )));
        }
        let mut min_dim = 0;
        for (id, gate) in nodes.iter().enumerate() {
            let earlier = |p: usize| {
                if p < id {
                    Ok(())
                } else {
                    Err(Error::Structural(format!(
                        "node {id} reads node {p}, which is not earlier"
                    )))
                }
            };
            match *gate {
                Gate::Input(i) => min_dim = min_dim.max(i + 1),
                Gate::Not(a) => earlier(a)?,
                Gate::And(a, b) | Gate::Or(a, b) => {
                    earlier(a)?;
                    earlier(b)?;
                }
            }
        }
        Ok(Self {
            nodes,
            output,
            min_dim,
        })
    }

    /// `n_inputs` INPUT nodes on uniformly random coordinates, then `n_gates`
    /// random gates whose operands are uniform over all earlier nodes. The
    /// last gate is the output.
    pub fn random(dim: usize, n_inputs: usize, n_gates: usize, rng: &mut Rng) -> Result<Self> {
        if dim == 0 || n_inputs == 0 {
            return Err(Error::arg(
                "random circuit needs d >= 1 and at least one input",
            ));
        }
        let mut nodes = Vec::with_capacity(n_inputs + n_gates);
        for _ in 0..n_inputs {
            nodes.push(Gate::Input(rng.random_range(0..dim)));
        }
        for _ in 0..n_gates {
            let n = nodes.len();
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            nodes.push(match rng.random_range(0..3u8) {
                0 => Gate::Not(a),
                1 => Gate::And(a, b),
                _ => Gate::Or(a, b),
            });
        }
        let output = nodes.len() - 1;
        Self::new(nodes, output)
    }

    pub fn nodes(&self) -> &[Gate] {
        &self.nodes
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Smallest input dimension the circuit can be evaluated on.
    pub fn min_dim(&self) -> usize {
        self.min_dim
    }

    pub fn eval(&self, x: &HypercubeInput) -> Result<u8> {
        if x.dim() < self.min_dim {
            return Err(Error::DimensionMismatch {
                expected: self.min_dim,
                got: x.dim(),
            });
        }
        let mut scratch = Vec::with_capacity(self.nodes.len());
        Ok(self.eval_with(x.bits(), &mut scratch))
    }

    /// Single forward pass; `scratch` is reused across calls.
    pub fn eval_with(&self, x: &[i8], scratch: &mut Vec<bool>) -> u8 {
        scratch.clear();
        for gate in &self.nodes {
            let v = match *gate {
                Gate::Input(i) => x[i] > 0,
                Gate::Not(a) => !scratch[a],
                Gate::And(a, b) => scratch[a] && scratch[b],
                Gate::Or(a, b) => scratch[a] || scratch[b],
            };
            scratch.push(v);
        }
        u8::from(scratch[self.output])
    }

    pub fn to_netlist(&self) -> String {
        let mut out = String::new();
        for (id, gate) in self.nodes.iter().enumerate() {
            let n = id + 1;
            let _ = match *gate {
                Gate::Input(i) => writeln!(out, "INPUT {}", i + 1),
                Gate::Not(a) => writeln!(out, "{n} = NOT {}", a + 1),
                Gate::And(a, b) => writeln!(out, "{n} = AND {} {}", a + 1, b + 1),
                Gate::Or(a, b) => writeln!(out, "{n} = OR {} {}", a + 1, b + 1),
            };
        }
        let _ = writeln!(out, "OUTPUT {}", self.output + 1);
        out
    }

    /// Parses the line-oriented netlist written by [`Self::to_netlist`].
    /// Blank lines and `#` comments are skipped; ids must match node order.
    pub fn from_netlist(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Decode(format!("netlist line {line}: {msg}"));
        let mut nodes = Vec::new();
        let mut output = None;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if output.is_some() {
                return Err(bad(lineno, "content after OUTPUT"));
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<usize> {
                match s.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(bad(lineno, &format!("expected a 1-based id, got `{s}`"))),
                }
            };
            match tokens.as_slice() {
                ["INPUT", i] => nodes.push(Gate::Input(num(i)?)),
                ["OUTPUT", o] => output = Some(num(o)?),
                [id, "=", op, rest @ ..] => {
                    if num(id)? != nodes.len() {
                        return Err(bad(lineno, "node id does not match its position"));
                    }
                    let gate = match (*op, rest) {
                        ("NOT", [a]) => Gate::Not(num(a)?),
                        ("AND", [a, b]) => Gate::And(num(a)?, num(b)?),
                        ("OR", [a, b]) => Gate::Or(num(a)?, num(b)?),
                        _ => return Err(bad(lineno, "unknown gate or wrong operand count")),
                    };
                    nodes.push(gate);
                }
                _ => return Err(bad(lineno, "unrecognized line")),
            }
        }
        let output = output.ok_or_else(|| Error::Decode("netlist has no OUTPUT line".into()))?;
        Self::new(nodes, output)
    }
}

/// A circuit used as a `{-1,+1}` labeling rule: output 1 maps to +1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitTarget {
    dim: usize,
    circuit: BooleanCircuit,
}

impl CircuitTarget {
    pub fn new(dim: usize, circuit: BooleanCircuit) -> Result<Self> {
        if circuit.min_dim() > dim {
            return Err(Error::arg(format!(
                "circuit reads coordinate {} but d={dim}",
                circuit.min_dim()
            )));
        }
        Ok(Self { dim, circuit })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn circuit(&self) -> &BooleanCircuit {
        &self.circuit
    }

    pub fn eval_bits(&self, x: &[i8]) -> i8 {
        let mut scratch = Vec::with_capacity(self.circuit.len());
        if self.circuit.eval_with(x, &mut scratch) == 1 {
            1
        } else {
            -1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn reference_eval(c: &BooleanCircuit, node: usize, x: &[i8]) -> bool {
        match c.nodes()[node] {
            Gate::Input(i) => x[i] > 0,
            Gate::Not(a) => !reference_eval(c, a, x),
            Gate::And(a, b) => reference_eval(c, a, x) && reference_eval(c, b, x),
            Gate::Or(a, b) => reference_eval(c, a, x) || reference_eval(c, b, x),
        }
    }

    #[test]
    fn small_gates() {
        let not = BooleanCircuit::new(vec![Gate::Input(0), Gate::Not(0)], 1).unwrap();
        assert_eq!(not.eval(&HypercubeInput::ones(3)).unwrap(), 0);
        let and =
            BooleanCircuit::new(vec![Gate::Input(0), Gate::Input(1), Gate::And(0, 1)], 2).unwrap();
        assert_eq!(and.eval(&HypercubeInput::ones(4)).unwrap(), 1);
    }

    #[test]
    fn matches_recursive_evaluator_on_the_whole_cube() {
        let mut rng = seeded(11);
        let d = 10;
        let c = BooleanCircuit::random(d, 10, 50, &mut rng).unwrap();
        let mut scratch = Vec::new();
        for idx in 0..1u64 << d {
            let x = HypercubeInput::from_index(idx, d).unwrap();
            let fast = c.eval_with(x.bits(), &mut scratch);
            assert_eq!(fast == 1, reference_eval(&c, c.output(), x.bits()));
        }
    }

    #[test]
    fn structural_errors_at_construction() {
        assert!(matches!(
            BooleanCircuit::new(vec![Gate::Not(0)], 0),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            BooleanCircuit::new(vec![Gate::Input(0), Gate::And(0, 2), Gate::Input(1)], 1),
            Err(Error::Structural(_))
        ));
        assert!(BooleanCircuit::new(vec![Gate::Input(0)], 1).is_err());
        assert!(BooleanCircuit::new(vec![], 0).is_err());
    }

    #[test]
    fn eval_checks_dimension() {
        let c = BooleanCircuit::new(vec![Gate::Input(4)], 0).unwrap();
        assert!(c.eval(&HypercubeInput::ones(4)).is_err());
        assert!(c.eval(&HypercubeInput::ones(5)).is_ok());
    }

    #[test]
    fn netlist_round_trip() {
        let mut rng = seeded(5);
        for _ in 0..20 {
            let c = BooleanCircuit::random(12, 6, 30, &mut rng).unwrap();
            let text = c.to_netlist();
            assert_eq!(BooleanCircuit::from_netlist(&text).unwrap(), c);
        }
        let text = "INPUT 1\n2 = NOT 1\nOUTPUT 2\n";
        let c = BooleanCircuit::from_netlist(text).unwrap();
        assert_eq!(c.nodes(), &[Gate::Input(0), Gate::Not(0)]);
        assert_eq!(c.to_netlist(), text);
    }

    #[test]
    fn netlist_errors() {
        assert!(BooleanCircuit::from_netlist("INPUT 1\n").is_err());
        assert!(BooleanCircuit::from_netlist("INPUT 1\n3 = NOT 1\nOUTPUT 2\n").is_err());
        assert!(BooleanCircuit::from_netlist("INPUT 1\n2 = XOR 1 1\nOUTPUT 2\n").is_err());
        assert!(BooleanCircuit::from_netlist("INPUT 0\nOUTPUT 1\n").is_err());
    }
}
