use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::linalg::{gemm, View};
use super::net::Model;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Fully connected ReLU network with a scalar linear output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer sizes from input to output; the last entry is 1.
    sizes: Vec<usize>,
    /// Per layer: `W` (`out x in`, row-major) followed by `b`.
    layers: Vec<Vec<f64>>,
}

#[derive(Default)]
pub struct MlpWorkspace {
    /// Pre-activations per layer.
    z: Vec<Vec<f64>>,
    /// Post-activations per hidden layer.
    h: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl Mlp {
    /// Standard uniform initialization for hidden widths `hidden`.
    pub fn standard_uniform(dim: usize, hidden: &[usize], rng: &mut Rng) -> Result<Self> {
        if dim == 0 || hidden.contains(&0) {
            return Err(Error::arg("layer sizes must be positive"));
        }
        let mut sizes = vec![dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|io| {
                let r = 1.0 / (io[0] as f64).sqrt();
                (0..io[1] * io[0] + io[1])
                    .map(|_| rng.random_range(-r..r))
                    .collect()
            })
            .collect();
        Ok(Self { sizes, layers })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub(crate) fn from_layers(sizes: Vec<usize>, layers: Vec<Vec<f64>>) -> Result<Self> {
        if sizes.len() < 2 || sizes.last() != Some(&1) || layers.len() != sizes.len() - 1 {
            return Err(Error::arg("inconsistent layer list"));
        }
        for (io, l) in sizes.windows(2).zip(&layers) {
            if l.len() != io[0] * io[1] + io[1] {
                return Err(Error::arg("layer block has the wrong length"));
            }
        }
        Ok(Self { sizes, layers })
    }

    pub fn forward_bits(&self, x: &[i8]) -> f64 {
        let xf: Vec<f64> = x.iter().map(|&v| f64::from(v)).collect();
        let mut out = [0.0];
        self.forward_batch(&xf, 1, &mut out, &mut MlpWorkspace::default());
        out[0]
    }
}

impl Model for Mlp {
    type Workspace = MlpWorkspace;

    fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    fn num_params(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    fn params(&self) -> Vec<f64> {
        self.layers.concat()
    }

    fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::arg(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                p.len()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let len = l.len();
            l.copy_from_slice(&p[off..off + len]);
            off += len;
        }
        Ok(())
    }

    fn forward_batch(&self, x: &[f64], rows: usize, out: &mut [f64], ws: &mut MlpWorkspace) {
        let depth = self.layers.len();
        ws.z.resize_with(depth, Vec::new);
        ws.h.resize_with(depth - 1, Vec::new);
        for l in 0..depth {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.layers[l].split_at(fan_in * fan_out);
            let mut z = std::mem::take(&mut ws.z[l]);
            z.resize(rows * fan_out, 0.0);
            for r in 0..rows {
                z[r * fan_out..(r + 1) * fan_out].copy_from_slice(b);
            }
            let input: &[f64] = if l == 0 {
                &x[..rows * fan_in]
            } else {
                &ws.h[l - 1]
            };
            gemm(
                1.0,
                View::row_major(input, rows, fan_in),
                View::row_major(w, fan_out, fan_in).t(),
                1.0,
                &mut z,
            );
            if l + 1 < depth {
                let h = &mut ws.h[l];
                h.clear();
                h.extend(z.iter().map(|&v| v.max(0.0)));
            } else {
                out[..rows].copy_from_slice(&z);
            }
            ws.z[l] = z;
        }
    }

    fn backward(&self, x: &[f64], rows: usize, g: &[f64], ws: &mut MlpWorkspace, grad: &mut [f64]) {
        let depth = self.layers.len();
        let mut offsets = Vec::with_capacity(depth);
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.len();
        }
        ws.delta.clear();
        ws.delta.extend_from_slice(&g[..rows]);
        for l in (0..depth).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let block = &mut grad[offsets[l]..offsets[l] + fan_in * fan_out + fan_out];
            let (gw, gb) = block.split_at_mut(fan_in * fan_out);
            let input: &[f64] = if l == 0 {
                &x[..rows * fan_in]
            } else {
                &ws.h[l - 1]
            };
            gemm(
                1.0,
                View::row_major(&ws.delta, rows, fan_out).t(),
                View::row_major(input, rows, fan_in),
                0.0,
                gw,
            );
            gb.fill(0.0);
            for r in 0..rows {
                for (o, &dv) in gb.iter_mut().zip(&ws.delta[r * fan_out..(r + 1) * fan_out]) {
                    *o += dv;
                }
            }
            if l > 0 {
                let w = &self.layers[l][..fan_in * fan_out];
                ws.next.resize(rows * fan_in, 0.0);
                gemm(
                    1.0,
                    View::row_major(&ws.delta, rows, fan_out),
                    View::row_major(w, fan_out, fan_in),
                    0.0,
                    &mut ws.next,
                );
                for (v, &z) in ws.next.iter_mut().zip(&ws.z[l - 1]) {
                    if z <= 0.0 {
                        *v = 0.0;
                    }
                }
                std::mem::swap(&mut ws.delta, &mut ws.next);
            }
        }
    }

    fn axpy(&mut self, alpha: f64, delta: &[f64]) {
        let mut off = 0;
        for l in &mut self.layers {
            for (p, &v) in l.iter_mut().zip(&delta[off..]) {
                *p += alpha * v;
            }
            off += l.len();
        }
    }
}
