//! Flat little-endian checkpoints.
//!
//! Two-layer networks: `u64 N, u64 d, u64 layers = 2`, then `W` (`N x d`,
//! row-major), `b`, `a` as `f64`. Deeper networks: `u64 N, u64 d,
//! u64 layers`, then the `layers + 1` layer sizes as `u64`, then per layer
//! `W` (`out x in`, row-major) and `b`.

use std::fs;
use std::path::Path;

use super::mlp::Mlp;
use super::net::TwoLayerNet;
use crate::error::{Error, Result};

fn put_u64(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u64).to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() < n {
            return Err(Error::Decode("checkpoint is truncated".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u64(&mut self) -> Result<usize> {
        let b = self.take(8)?;
        let v = u64::from_le_bytes(b.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::Decode(format!("size {v} too large")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::Decode("size overflow".into()))?;
        let b = self.take(len)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(Error::Decode(format!(
                "{} trailing bytes",
                self.bytes.len()
            )))
        }
    }
}

pub fn two_layer_to_bytes(net: &TwoLayerNet) -> Vec<u8> {
    let mut out = Vec::new();
    put_u64(&mut out, net.width());
    put_u64(&mut out, net.dim());
    put_u64(&mut out, 2);
    put_f64s(&mut out, net.w());
    put_f64s(&mut out, net.b());
    put_f64s(&mut out, net.a());
    out
}

pub fn two_layer_from_bytes(bytes: &[u8]) -> Result<TwoLayerNet> {
    let mut c = Cursor { bytes };
    let (n, d, layers) = (c.u64()?, c.u64()?, c.u64()?);
    if layers != 2 {
        return Err(Error::Decode(format!("expected 2 layers, found {layers}")));
    }
    let w = c.f64s(
        n.checked_mul(d)
            .ok_or_else(|| Error::Decode("size overflow".into()))?,
    )?;
    let b = c.f64s(n)?;
    let a = c.f64s(n)?;
    c.finish()?;
    TwoLayerNet::new(d, a, w, b)
}

pub fn mlp_to_bytes(net: &Mlp) -> Vec<u8> {
    let sizes = net.sizes();
    let mut out = Vec::new();
    put_u64(&mut out, sizes[1]);
    put_u64(&mut out, sizes[0]);
    put_u64(&mut out, sizes.len() - 1);
    for &s in sizes {
        put_u64(&mut out, s);
    }
    for l in net.layers() {
        put_f64s(&mut out, l);
    }
    out
}

pub fn mlp_from_bytes(bytes: &[u8]) -> Result<Mlp> {
    let mut c = Cursor { bytes };
    let (n, d, layers) = (c.u64()?, c.u64()?, c.u64()?);
    if layers == 0 || layers > 64 {
        return Err(Error::Decode(format!("bad layer count {layers}")));
    }
    let sizes = (0..=layers).map(|_| c.u64()).collect::<Result<Vec<_>>>()?;
    if sizes[0] != d || sizes[1] != n {
        return Err(Error::Decode("header disagrees with layer sizes".into()));
    }
    let mut blocks = Vec::with_capacity(layers);
    for io in sizes.windows(2) {
        let len = io[0]
            .checked_mul(io[1])
            .and_then(|v| v.checked_add(io[1]))
            .ok_or_else(|| Error::Decode("size overflow".into()))?;
        blocks.push(c.f64s(len)?);
    }
    c.finish()?;
    Mlp::from_layers(sizes, blocks).map_err(|e| Error::Decode(e.to_string()))
}

pub fn save_two_layer(net: &TwoLayerNet, path: &Path) -> Result<()> {
    fs::write(path, two_layer_to_bytes(net))?;
    Ok(())
}

pub fn load_two_layer(path: &Path) -> Result<TwoLayerNet> {
    two_layer_from_bytes(&fs::read(path)?)
}
