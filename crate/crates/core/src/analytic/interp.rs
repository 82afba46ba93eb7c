use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `mu_r = 1/2 cos((2r - 1) pi / (2k))` for `r = 1..=k`.
pub fn chebyshev_nodes(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|r| 0.5 * ((2 * r - 1) as f64 * PI / (2 * k) as f64).cos())
        .collect()
}

/// Horner evaluation of `sum_j coeffs[j] x^j`.
pub fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::arg("interpolation needs at least one node"));
    }
    for (i, a) in nodes.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::arg(format!("node {i} is not finite")));
        }
        if nodes[..i].contains(a) {
            return Err(Error::arg(format!("duplicate interpolation node {a}")));
        }
    }
    Ok(())
}

/// Double-double value `hi + lo`, used so the monomial coefficients come out
/// correctly rounded even though the basis conversion is ill-conditioned.
#[derive(Clone, Copy, Debug, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: err }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        Self::renorm(s.hi, s.lo + self.lo + o.lo)
    }

    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        Self::renorm(p, err + self.hi * o.lo + self.lo * o.hi)
    }

    fn recip(self) -> Self {
        let q = 1.0 / self.hi;
        // One Newton step: q + q (1 - self q).
        let r = Self::new(1.0).add(self.mul(Self::new(q)).neg());
        Self::new(q).add(Self::new(q).mul(r))
    }
}

fn barycentric_weights(nodes: &[Dd]) -> Vec<Dd> {
    nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .fold(Dd::new(1.0), |acc, (_, &xm)| acc.mul(xj.add(xm.neg())))
                .recip()
        })
        .collect()
}

/// Monomial coefficients of `prod_m (x - nodes[m])`, lowest degree first.
fn node_polynomial(nodes: &[Dd]) -> Vec<Dd> {
    let mut p = vec![Dd::new(1.0)];
    for &x0 in nodes {
        let mut next = vec![Dd::default(); p.len() + 1];
        for (j, &c) in p.iter().enumerate() {
            next[j + 1] = next[j + 1].add(c);
            next[j] = next[j].add(x0.mul(c).neg());
        }
        p = next;
    }
    p
}

/// Monomial coefficients of the Lagrange basis polynomials, scaled by their
/// barycentric weights: row `j` holds `w_j prod_{m != j} (x - x_m)`.
fn basis_coefficients(nodes: &[f64]) -> Vec<Vec<Dd>> {
    let nodes: Vec<Dd> = nodes.iter().map(|&x| Dd::new(x)).collect();
    let w = barycentric_weights(&nodes);
    (0..nodes.len())
        .map(|j| {
            let others: Vec<Dd> = nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .map(|(_, &x)| x)
                .collect();
            node_polynomial(&others)
                .into_iter()
                .map(|c| c.mul(w[j]))
                .collect()
        })
        .collect()
}

/// Interpolating polynomial of degree `< k` through `(nodes[r], values[r])`,
/// returned in the monomial basis (lowest degree first).
pub fn interpolate_chebyshev(nodes: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    check_nodes(nodes)?;
    if nodes.len() != values.len() {
        return Err(Error::arg(format!(
            "{} nodes but {} values",
            nodes.len(),
            values.len()
        )));
    }
    let basis = basis_coefficients(nodes);
    let mut coeffs = vec![Dd::default(); nodes.len()];
    for (row, &y) in basis.iter().zip(values) {
        for (c, &b) in coeffs.iter_mut().zip(row) {
            *c = c.add(b.mul(Dd::new(y)));
        }
    }
    Ok(coeffs.into_iter().map(|c| c.hi + c.lo).collect())
}

/// Largest coefficient magnitude produced per unit of value perturbation:
/// the infinity norm of the values-to-coefficients map.
pub fn coefficient_amplification(nodes: &[f64]) -> Result<f64> {
    check_nodes(nodes)?;
    let basis = basis_coefficients(nodes);
    Ok((0..nodes.len())
        .map(|deg| basis.iter().map(|row| row[deg].hi.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}
