use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::linalg::{gemm, View};
use crate::boolean::HypercubeInput;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// A scalar-output network trained by the batch SGD loop.
///
/// Inputs are row-major `rows x input_dim` blocks of ±1 values stored as
/// `f64`. Gradients use a flat parameter layout matching [`Model::params`].
pub trait Model {
    type Workspace: Default;

    fn input_dim(&self) -> usize;
    fn num_params(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, p: &[f64]) -> Result<()>;

    /// Writes `f(x_r)` into `out[r]` and caches activations in `ws`.
    fn forward_batch(&self, x: &[f64], rows: usize, out: &mut [f64], ws: &mut Self::Workspace);

    /// Gradient of `sum_r g[r] f(x_r)`. Must follow a `forward_batch` on the
    /// same `x`.
    fn backward(
        &self,
        x: &[f64],
        rows: usize,
        g: &[f64],
        ws: &mut Self::Workspace,
        grad: &mut [f64],
    );

    /// `params += alpha * delta`.
    fn axpy(&mut self, alpha: f64, delta: &[f64]);
}

/// `f(x) = sum_j a_j ReLU(<w_j, x> + b_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerNet {
    dim: usize,
    a: Vec<f64>,
    /// `width x dim`, row-major.
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Default)]
pub struct TwoLayerWorkspace {
    h: Vec<f64>,
    dh: Vec<f64>,
}

/// Sign with the tie `sign(0) = +1`.
pub fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

impl TwoLayerNet {
    pub fn new(dim: usize, a: Vec<f64>, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n = a.len();
        if dim == 0 {
            return Err(Error::arg("input dimension must be positive"));
        }
        if b.len() != n || w.len() != n * dim {
            return Err(Error::arg(format!(
                "shape mismatch: a has {n} entries, b {}, W {} (expected {})",
                b.len(),
                w.len(),
                n * dim
            )));
        }
        Ok(Self { dim, a, w, b })
    }

    pub fn zeros(width: usize, dim: usize) -> Result<Self> {
        Self::new(
            dim,
            vec![0.0; width],
            vec![0.0; width * dim],
            vec![0.0; width],
        )
    }

    /// Each layer uniform in `±1/sqrt(fan_in)`.
    pub fn standard_uniform(width: usize, dim: usize, rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(width, dim)?;
        let r1 = 1.0 / (dim as f64).sqrt();
        let r2 = 1.0 / (width as f64).sqrt();
        for v in &mut net.w {
            *v = rng.random_range(-r1..r1);
        }
        for v in &mut net.b {
            *v = rng.random_range(-r1..r1);
        }
        for v in &mut net.a {
            *v = rng.random_range(-r2..r2);
        }
        Ok(net)
    }

    /// `4d + 6` neurons with `W = 0`, one per pair `a in {+1, -1}`,
    /// `b in {-d-1, ..., d+1}`. The output is identically zero.
    pub fn layerwise_l1_init(dim: usize) -> Result<Self> {
        let span = dim as i64 + 1;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for sign in [1.0, -1.0] {
            for bias in -span..=span {
                a.push(sign);
                b.push(bias as f64);
            }
        }
        let n = a.len();
        Self::new(dim, a, vec![0.0; n * dim], b)
    }

    /// `W = 0`, `b = kappa`, first half `a = kappa`, second half `a = -kappa`.
    pub fn layerwise_cov_init(width: usize, dim: usize, kappa: f64) -> Result<Self> {
        if !width.is_multiple_of(2) || width == 0 {
            return Err(Error::arg(format!(
                "width must be even and positive, got {width}"
            )));
        }
        if !(kappa > 0.0) {
            return Err(Error::arg(format!("kappa must be positive, got {kappa}")));
        }
        let a = (0..width)
            .map(|i| if i < width / 2 { kappa } else { -kappa })
            .collect();
        Self::new(dim, a, vec![0.0; width * dim], vec![kappa; width])
    }

    pub fn width(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn a_mut(&mut self) -> &mut [f64] {
        &mut self.a
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn w_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.w[j * self.dim..(j + 1) * self.dim]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn b_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }

    /// Hidden activations `ReLU(<w_j, x> + b_j)`.
    pub fn features(&self, x: &[i8], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.dim);
        out.clear();
        out.extend(self.b.iter().enumerate().map(|(j, &bj)| {
            let row = self.row(j);
            let pre = row
                .iter()
                .zip(x)
                .fold(bj, |acc, (&w, &xi)| if xi > 0 { acc + w } else { acc - w });
            pre.max(0.0)
        }));
    }

    /// Hidden activations for a row-major block of inputs, `rows x width`.
    pub fn features_batch(&self, x: &[f64], rows: usize, out: &mut Vec<f64>) {
        let n = self.width();
        out.clear();
        for _ in 0..rows {
            out.extend_from_slice(&self.b);
        }
        gemm(
            1.0,
            View::row_major(&x[..rows * self.dim], rows, self.dim),
            View::row_major(&self.w, n, self.dim).t(),
            1.0,
            out,
        );
        for v in out.iter_mut() {
            *v = v.max(0.0);
        }
    }

    pub fn forward_bits(&self, x: &[i8]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut total = 0.0;
        for (j, (&aj, &bj)) in self.a.iter().zip(&self.b).enumerate() {
            let pre = self
                .row(j)
                .iter()
                .zip(x)
                .fold(bj, |acc, (&w, &xi)| if xi > 0 { acc + w } else { acc - w });
            total += aj * pre.max(0.0);
        }
        total
    }

    pub fn forward(&self, x: &HypercubeInput) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(self.forward_bits(x.bits()))
    }

    pub fn predict_sign(&self, x: &HypercubeInput) -> Result<i8> {
        self.forward(x).map(sign)
    }
}

impl Model for TwoLayerNet {
    type Workspace = TwoLayerWorkspace;

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn num_params(&self) -> usize {
        self.w.len() + 2 * self.a.len()
    }

    /// Layout: `W` row-major, then `b`, then `a`.
    fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        p.extend_from_slice(&self.w);
        p.extend_from_slice(&self.b);
        p.extend_from_slice(&self.a);
        p
    }

    fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::arg(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                p.len()
            )));
        }
        let (w, rest) = p.split_at(self.w.len());
        let (b, a) = rest.split_at(self.b.len());
        self.w.copy_from_slice(w);
        self.b.copy_from_slice(b);
        self.a.copy_from_slice(a);
        Ok(())
    }

    fn forward_batch(&self, x: &[f64], rows: usize, out: &mut [f64], ws: &mut TwoLayerWorkspace) {
        let n = self.width();
        ws.h.resize(rows * n, 0.0);
        for r in 0..rows {
            ws.h[r * n..(r + 1) * n].copy_from_slice(&self.b);
        }
        gemm(
            1.0,
            View::row_major(&x[..rows * self.dim], rows, self.dim),
            View::row_major(&self.w, n, self.dim).t(),
            1.0,
            &mut ws.h,
        );
        for (r, o) in out[..rows].iter_mut().enumerate() {
            let h = &ws.h[r * n..(r + 1) * n];
            *o = h.iter().zip(&self.a).map(|(&v, &a)| a * v.max(0.0)).sum();
        }
    }

    fn backward(
        &self,
        x: &[f64],
        rows: usize,
        g: &[f64],
        ws: &mut TwoLayerWorkspace,
        grad: &mut [f64],
    ) {
        let n = self.width();
        let d = self.dim;
        ws.dh.resize(rows * n, 0.0);
        let (gw, rest) = grad.split_at_mut(n * d);
        let (gb, ga) = rest.split_at_mut(n);
        gb.fill(0.0);
        ga.fill(0.0);
        for r in 0..rows {
            let h = &ws.h[r * n..(r + 1) * n];
            let dh = &mut ws.dh[r * n..(r + 1) * n];
            let gr = g[r];
            // Branch-free: the activation pattern is data-dependent.
            for j in 0..n {
                let on = f64::from(u8::from(h[j] > 0.0));
                ga[j] += gr * h[j].max(0.0);
                dh[j] = on * gr * self.a[j];
                gb[j] += dh[j];
            }
        }
        gemm(
            1.0,
            View::row_major(&ws.dh, rows, n).t(),
            View::row_major(&x[..rows * d], rows, d),
            0.0,
            gw,
        );
    }

    fn axpy(&mut self, alpha: f64, delta: &[f64]) {
        let (dw, rest) = delta.split_at(self.w.len());
        let (db, da) = rest.split_at(self.b.len());
        for (p, &v) in self.w.iter_mut().zip(dw) {
            *p += alpha * v;
        }
        for (p, &v) in self.b.iter_mut().zip(db) {
            *p += alpha * v;
        }
        for (p, &v) in self.a.iter_mut().zip(da) {
            *p += alpha * v;
        }
    }
}
