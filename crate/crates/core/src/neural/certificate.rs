use super::net::TwoLayerNet;
use crate::boolean::ParityTarget;
use crate::error::{Error, Result};

fn support_rows(dim: usize, support: &[usize]) -> Result<(Vec<f64>, usize)> {
    let target = ParityTarget::new(dim, support.iter().copied())?;
    let mut w = vec![0.0; dim];
    for &i in target.support() {
        w[i] = 1.0;
    }
    Ok((w, target.k()))
}

/// Exact ReLU network for `chi_S` with `|S| = k` odd, as a function of
/// `s = <1_S, x>`:
///
/// ```text
/// g(s) = -R(s + k + 1) + c0 R(s) + 2 sum_{j=0}^{(k-1)/2} (-1)^j R(s + k - 2j)
///        + R(-s + k + 1) - c0 R(-s) - 2 sum_{j=0}^{(k-1)/2} (-1)^j R(-s + k - 2j)
/// ```
///
/// with `c0 = (-1)^((k+1)/2)`, which makes the linear part of `g` equal to
/// `s`. Uses `k + 5` neurons; every output is exactly `±1`.
pub fn build_parity_certificate(k: usize, dim: usize, support: &[usize]) -> Result<TwoLayerNet> {
    let (w_s, found) = support_rows(dim, support)?;
    if found != k {
        return Err(Error::arg(format!(
            "support has {found} coordinates, expected {k}"
        )));
    }
    if k.is_multiple_of(2) {
        return Err(Error::Unsupported(format!(
            "the certificate needs odd k, got {k}; use build_parity_interpolant"
        )));
    }
    if k > 25 {
        return Err(Error::arg(format!("k must be at most 25, got {k}")));
    }
    let kf = k as f64;
    let c0 = if k.div_ceil(2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let mut half: Vec<(f64, f64)> = vec![(-1.0, kf + 1.0), (c0, 0.0)];
    for j in 0..=(k - 1) / 2 {
        let sign = if j % 2 == 0 { 2.0 } else { -2.0 };
        half.push((sign, (k - 2 * j) as f64));
    }
    let neg: Vec<f64> = w_s.iter().map(|v| -v).collect();
    let mut a = Vec::new();
    let mut w = Vec::new();
    let mut b = Vec::new();
    for (row, flip) in [(&w_s, 1.0), (&neg, -1.0)] {
        for &(coef, bias) in &half {
            a.push(flip * coef);
            w.extend_from_slice(row);
            b.push(bias);
        }
    }
    TwoLayerNet::new(dim, a, w, b)
}

/// Piecewise-linear ReLU interpolant of `chi_S` through every level
/// `s in {-k, -k+2, ..., k}`, valid for any `k >= 1`. The constant term is
/// carried by `R(s + k + 1) - R(s + k)`, which is 1 on the cube.
pub fn build_parity_interpolant(dim: usize, support: &[usize]) -> Result<TwoLayerNet> {
    let (w_s, k) = support_rows(dim, support)?;
    if k == 0 {
        return Err(Error::arg("support must be nonempty"));
    }
    let ki = k as i64;
    let level = |s: i64| -> f64 {
        // Number of negative coordinates is (k - s) / 2.
        if ((ki - s) / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let mut terms: Vec<(f64, f64)> = Vec::new();
    let g0 = level(-ki);
    terms.push((g0, (ki + 1) as f64));
    terms.push((-g0, ki as f64));
    let mut slope = 0.0;
    let mut s = -ki;
    while s < ki {
        let next = (level(s + 2) - level(s)) / 2.0;
        if next != slope {
            terms.push((next - slope, -(s as f64)));
            slope = next;
        }
        s += 2;
    }
    let mut a = Vec::new();
    let mut w = Vec::new();
    let mut b = Vec::new();
    for (coef, bias) in terms {
        a.push(coef);
        w.extend_from_slice(&w_s);
        b.push(bias);
    }
    TwoLayerNet::new(dim, a, w, b)
}
