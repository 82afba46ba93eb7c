use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::point::HypercubeInput;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const MAX_JUNTA_SUPPORT: usize = 20;

/// `f(x) = g(x_S)` with `g` given as a truth table over the ordered support.
///
/// `table[z]` is the label when bit `j` of `z` is the `{0,1}` value of
/// `x[support[j]]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JuntaTarget {
    dim: usize,
    support: Vec<usize>,
    table: Vec<i8>,
}

impl JuntaTarget {
    pub fn new(dim: usize, support: Vec<usize>, table: Vec<i8>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("junta dimension must be positive"));
        }
        let k = support.len();
        if k > MAX_JUNTA_SUPPORT {
            return Err(Error::arg(format!(
                "junta support {k} exceeds the cap of {MAX_JUNTA_SUPPORT}"
            )));
        }
        if let Some(&i) = support.iter().find(|&&i| i >= dim) {
            return Err(Error::arg(format!(
                "support coordinate {i} outside d={dim}"
            )));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::arg("junta support has repeated coordinates"));
        }
        if table.len() != 1 << k {
            return Err(Error::arg(format!("table length {} != 2^{k}", table.len())));
        }
        if table.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::arg("table entries must be -1 or +1"));
        }
        Ok(Self {
            dim,
            support,
            table,
        })
    }

    /// Tabulates `g` over the support; `g` receives the signed support values.
    pub fn from_fn(
        dim: usize,
        support: Vec<usize>,
        mut g: impl FnMut(&[i8]) -> i8,
    ) -> Result<Self> {
        let k = support.len();
        if k > MAX_JUNTA_SUPPORT {
            return Err(Error::arg(format!(
                "junta support {k} exceeds the cap of {MAX_JUNTA_SUPPORT}"
            )));
        }
        let mut z = vec![0i8; k];
        let table = (0..1usize << k)
            .map(|idx| {
                for (j, zj) in z.iter_mut().enumerate() {
                    *zj = if (idx >> j) & 1 == 1 { 1 } else { -1 };
                }
                g(&z)
            })
            .collect();
        Self::new(dim, support, table)
    }

    /// Uniformly random support of size `k` and uniformly random table.
    pub fn random(dim: usize, k: usize, rng: &mut Rng) -> Result<Self> {
        if k > dim {
            return Err(Error::arg(format!("k={k} exceeds d={dim}")));
        }
        let support = sample_indices(rng, dim, k).into_vec();
        let table = (0..1usize << k)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self::new(dim, support, table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn eval(&self, x: &HypercubeInput) -> Result<i8> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(self.eval_bits(x.bits()))
    }

    pub fn eval_bits(&self, x: &[i8]) -> i8 {
        self.table[self.cell(x)]
    }

    /// Truth-table index of `x` restricted to the support.
    pub fn cell(&self, x: &[i8]) -> usize {
        self.support.iter().enumerate().fold(
            0,
            |acc, (j, &i)| if x[i] > 0 { acc | (1 << j) } else { acc },
        )
    }

    /// Mean label under the uniform distribution.
    pub fn uniform_mean(&self) -> f64 {
        self.table.iter().map(|&v| f64::from(v)).sum::<f64>() / self.table.len() as f64
    }
}

/// `f_k(x) = 1/2 * prod_{i<k-1} x_i * (1 + x_{k-1} + x_k - x_{k-1} x_k)` on
/// the first `k` coordinates. Its lowest nonzero Fourier degree is `k-2`.
pub fn build_fk(k: usize, d: usize) -> Result<JuntaTarget> {
    if !(3..=MAX_JUNTA_SUPPORT).contains(&k) {
        return Err(Error::arg(format!("f_k needs 3 <= k <= 20, got {k}")));
    }
    if d < k {
        return Err(Error::arg(format!("f_k needs d >= k, got d={d}, k={k}")));
    }
    JuntaTarget::from_fn(d, (0..k).collect(), |z| {
        let prefix: i8 = z[..k - 2].iter().product();
        let (a, b) = (z[k - 2], z[k - 1]);
        prefix * (1 + a + b - a * b) / 2
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn dictator() {
        let t = JuntaTarget::new(5, vec![2], vec![-1, 1]).unwrap();
        let mut bits = vec![-1i8; 5];
        bits[2] = 1;
        assert_eq!(t.eval(&HypercubeInput::new(bits).unwrap()).unwrap(), 1);
    }

    #[test]
    fn f7_values() {
        let f = build_fk(7, 10).unwrap();
        assert_eq!(f.eval_bits(&[1; 10]), 1);
        let mut x = [1i8; 10];
        x[5] = -1;
        x[6] = -1;
        assert_eq!(f.eval_bits(&x), -1);
        let mut x = [1i8; 10];
        x[0] = -1;
        assert_eq!(f.eval_bits(&x), -1);
    }

    #[test]
    fn f3_value() {
        let f = build_fk(3, 3).unwrap();
        assert_eq!(f.eval_bits(&[1, -1, -1]), -1);
    }

    #[test]
    fn fk_tables_are_signs() {
        for k in 3..=12 {
            let f = build_fk(k, k).unwrap();
            assert!(f.table().iter().all(|&v| v == 1 || v == -1));
        }
        assert!(build_fk(2, 5).is_err());
        assert!(build_fk(21, 30).is_err());
        assert!(build_fk(5, 4).is_err());
    }

    #[test]
    fn random_junta_is_valid() {
        let mut rng = seeded(3);
        let t = JuntaTarget::random(40, 6, &mut rng).unwrap();
        assert_eq!(t.k(), 6);
        assert_eq!(t.table().len(), 64);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(JuntaTarget::new(4, vec![0, 1], vec![1, 1, 1]).is_err());
        assert!(JuntaTarget::new(4, vec![0, 0], vec![1; 4]).is_err());
        assert!(JuntaTarget::new(4, vec![0], vec![1, 0]).is_err());
    }
}
