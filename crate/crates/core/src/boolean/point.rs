use crate::error::{Error, Result};

/// A point of `{-1, +1}^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HypercubeInput {
    bits: Vec<i8>,
}

impl HypercubeInput {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::arg("hypercube input needs dimension >= 1"));
        }
        if let Some(pos) = bits.iter().position(|&b| b != 1 && b != -1) {
            return Err(Error::arg(format!(
                "coordinate {pos} is {}, expected -1 or +1",
                bits[pos]
            )));
        }
        Ok(Self { bits })
    }

    pub fn ones(dim: usize) -> Self {
        Self {
            bits: vec![1; dim.max(1)],
        }
    }

    /// Inverse of [`HypercubeInput::to_index`].
    pub fn from_index(index: u64, dim: usize) -> Result<Self> {
        if dim == 0 || dim > 64 {
            return Err(Error::arg(format!(
                "integer view needs 1 <= d <= 64, got {dim}"
            )));
        }
        if dim < 64 && index >> dim != 0 {
            return Err(Error::arg(format!(
                "index {index} out of range for d={dim}"
            )));
        }
        let bits = (0..dim)
            .map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 })
            .collect();
        Ok(Self { bits })
    }

    /// The `{0,1}` view as an integer: bit `i` is 1 iff coordinate `i` is +1.
    pub fn to_index(&self) -> Result<u64> {
        if self.dim() > 64 {
            return Err(Error::arg(format!(
                "integer view needs d <= 64, got {}",
                self.dim()
            )));
        }
        Ok(index_of(&self.bits))
    }

    pub fn dim(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[i8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<i8> {
        self.bits
    }

    /// Coordinatewise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self { bits })
    }
}

/// Integer view of a signed slice; only the first 64 coordinates count.
pub fn index_of(bits: &[i8]) -> u64 {
    bits.iter().take(64).enumerate().fold(
        0u64,
        |acc, (i, &b)| if b > 0 { acc | (1 << i) } else { acc },
    )
}

/// Row-major batch of hypercube points sharing one dimension.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InputBatch {
    dim: usize,
    data: Vec<i8>,
}

impl InputBatch {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    pub fn from_rows(dim: usize, data: Vec<i8>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::arg("batch data length must be a multiple of dim"));
        }
        if data.iter().any(|&b| b != 1 && b != -1) {
            return Err(Error::arg("batch entries must be -1 or +1"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_inputs(dim: usize, xs: &[HypercubeInput]) -> Result<Self> {
        let mut batch = Self::with_capacity(dim, xs.len());
        for x in xs {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.dim(),
                });
            }
            batch.data.extend_from_slice(x.bits());
        }
        Ok(batch)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[i8]> + '_ {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn push(&mut self, row: &[i8]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn clear(&mut self) {
        self.data.clear();
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut Vec<i8> {
        &mut self.data
    }

    pub fn to_inputs(&self) -> Vec<HypercubeInput> {
        self.rows()
            .map(|r| HypercubeInput { bits: r.to_vec() })
            .collect()
    }

    /// Writes the batch as `f64` into `out` (row-major), resizing it.
    pub fn write_f64(&self, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.data.iter().map(|&b| f64::from(b)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_view_is_a_bijection() {
        for d in 1..=6 {
            for idx in 0..(1u64 << d) {
                let x = HypercubeInput::from_index(idx, d).unwrap();
                assert_eq!(x.to_index().unwrap(), idx);
            }
        }
        let x = HypercubeInput::new(vec![1, -1, -1, 1]).unwrap();
        assert_eq!(x.to_index().unwrap(), 0b1001);
    }

    #[test]
    fn rejects_non_sign_entries() {
        assert!(HypercubeInput::new(vec![1, 0]).is_err());
        assert!(HypercubeInput::new(vec![]).is_err());
        assert!(HypercubeInput::from_index(4, 2).is_err());
    }

    #[test]
    fn full_width_index() {
        let x = HypercubeInput::from_index(u64::MAX, 64).unwrap();
        assert!(x.bits().iter().all(|&b| b == 1));
        assert_eq!(x.to_index().unwrap(), u64::MAX);
    }
}
