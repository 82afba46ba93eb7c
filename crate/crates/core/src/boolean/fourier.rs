use super::target::Target;
use crate::distributions::BiasVector;
use crate::error::{Error, Result};

/// Fourier–Walsh coefficient of `t` on `set` under the product measure
/// `D_mu`, with basis functions `prod_{i in set} (x_i - mu_i) / sqrt(1 - mu_i^2)`.
///
/// Parities use the factorized closed form; juntas enumerate the `2^k`
/// support assignments. Coordinates of `set` outside the support contribute
/// a zero factor.
pub fn fourier_coefficient(t: &Target, set: &[usize], mu: &BiasVector) -> Result<f64> {
    let d = t.dim();
    if mu.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mu.dim(),
        });
    }
    let mut in_set = vec![false; d];
    for &i in set {
        if i >= d {
            return Err(Error::arg(format!("coordinate {i} outside d={d}")));
        }
        if in_set[i] {
            return Err(Error::arg(format!("coordinate {i} repeated in set")));
        }
        in_set[i] = true;
    }
    let support = t.support().ok_or_else(|| {
        Error::Unsupported("Fourier coefficients need a parity or junta target".into())
    })?;
    let mut in_support = vec![false; d];
    for &i in support {
        in_support[i] = true;
    }
    for i in 0..d {
        if (in_set[i] || in_support[i]) && mu.get(i).abs() >= 1.0 {
            return Err(Error::SingularBias { coord: i });
        }
    }
    if set.iter().any(|&i| !in_support[i]) {
        return Ok(0.0);
    }
    let sigma = |i: usize| (1.0 - mu.get(i) * mu.get(i)).sqrt();

    match t {
        Target::Parity(_) => Ok(support
            .iter()
            .map(|&i| if in_set[i] { sigma(i) } else { mu.get(i) })
            .product()),
        Target::Junta(j) => {
            let k = support.len();
            let mut total = 0.0;
            for (z, &label) in j.table().iter().enumerate() {
                let mut term = f64::from(label);
                for (pos, &i) in support.iter().enumerate() {
                    let m = mu.get(i);
                    let x = if (z >> pos) & 1 == 1 { 1.0 } else { -1.0 };
                    term *= (1.0 + x * m) / 2.0;
                    if in_set[i] {
                        term *= (x - m) / sigma(i);
                    }
                }
                total += term;
            }
            debug_assert!(k <= super::junta::MAX_JUNTA_SUPPORT);
            Ok(total)
        }
        Target::Circuit(_) => unreachable!("circuits have no declared support"),
    }
}

/// Standard (uniform-measure) Fourier coefficients of a `+-1` truth table,
/// indexed by subset mask over the table's variables.
pub fn walsh_hadamard(table: &[i8]) -> Vec<f64> {
    assert!(
        table.len().is_power_of_two(),
        "table length must be a power of two"
    );
    let mut a: Vec<f64> = table.iter().map(|&v| f64::from(v)).collect();
    let n = a.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (u, v) = (a[i], a[i + h]);
                a[i] = u + v;
                a[i + h] = u - v;
            }
        }
        h *= 2;
    }
    // The butterflies use (-1)^{|S & z|}; with bit 1 meaning +1 the character
    // is (-1)^{|S \ z|}, which differs by (-1)^{|S|}.
    for (mask, v) in a.iter_mut().enumerate() {
        let sign = if mask.count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        *v *= sign / n as f64;
    }
    a
}
