use super::source::LabeledSource;
use crate::boolean::{HypercubeInput, Target};
use crate::error::{Error, Result};

/// `E[y x_i]`, or `E[y]` when `coord` is `None`, computed in closed form.
///
/// Parities reduce to `(1 - 2 eta) E[chi_{S xor {i}}]`; juntas enumerate
/// the marginal law of the support plus `i`.
pub fn exact_moment(src: &LabeledSource, coord: Option<usize>) -> Result<f64> {
    let d = src.dim();
    if let Some(i) = coord {
        if i >= d {
            return Err(Error::arg(format!("coordinate {i} outside d={d}")));
        }
    }
    let atten = src.noise().attenuation();
    let dist = src.dist();
    match src.target() {
        Target::Parity(p) => {
            let mut set: Vec<usize> = p.support().to_vec();
            if let Some(i) = coord {
                match set.binary_search(&i) {
                    Ok(pos) => {
                        set.remove(pos);
                    }
                    Err(pos) => set.insert(pos, i),
                }
            }
            Ok(atten * dist.parity_expectation(&set))
        }
        Target::Junta(j) => {
            let mut coords = j.support().to_vec();
            let extra = match coord {
                Some(i) => match coords.iter().position(|&c| c == i) {
                    Some(pos) => pos,
                    None => {
                        coords.push(i);
                        coords.len() - 1
                    }
                },
                None => usize::MAX,
            };
            let k = j.k();
            let mut z = vec![0i8; coords.len()];
            let mut total = 0.0;
            for idx in 0..1usize << coords.len() {
                for (pos, zp) in z.iter_mut().enumerate() {
                    *zp = if (idx >> pos) & 1 == 1 { 1 } else { -1 };
                }
                let mass = dist.marginal_mass(&coords, &z);
                if mass == 0.0 {
                    continue;
                }
                let label = j.table()[idx & ((1 << k) - 1)];
                let xi = if extra == usize::MAX { 1 } else { z[extra] };
                total += mass * f64::from(label * xi);
            }
            Ok(atten * total)
        }
        Target::Circuit(_) => Err(Error::Unsupported(
            "exact moments need a parity or junta target".into(),
        )),
    }
}

/// `E[1(x_coords = z) y]` for parity or junta targets.
pub fn exact_indicator_moment(src: &LabeledSource, coords: &[usize], z: &[i8]) -> Result<f64> {
    if coords.len() != z.len() {
        return Err(Error::arg("coordinate list and pattern differ in length"));
    }
    let support = src
        .target()
        .support()
        .ok_or_else(|| Error::Unsupported("exact moments need a parity or junta target".into()))?;
    let mut all = coords.to_vec();
    all.extend(support.iter().filter(|i| !coords.contains(i)));
    if all.len() > 24 {
        return Err(Error::Unsupported(format!(
            "indicator moment over {} coordinates is too large to enumerate",
            all.len()
        )));
    }
    let d = src.dim();
    let t = coords.len();
    let free = all.len() - t;
    let mut point = vec![1i8; d];
    let mut pattern = z.to_vec();
    pattern.resize(all.len(), 1);
    let mut total = 0.0;
    for idx in 0..1usize << free {
        for j in 0..free {
            pattern[t + j] = if (idx >> j) & 1 == 1 { 1 } else { -1 };
        }
        let mass = src.dist().marginal_mass(&all, &pattern);
        if mass == 0.0 {
            continue;
        }
        for (&i, &v) in all.iter().zip(&pattern) {
            point[i] = v;
        }
        total += mass * f64::from(src.target().eval_bits(&point));
    }
    Ok(src.noise().attenuation() * total)
}

/// Reference value by summing over all `2^d` points; for `d <= 24`.
pub fn brute_force_moment(src: &LabeledSource, coord: Option<usize>) -> Result<f64> {
    let d = src.dim();
    if d > 24 {
        return Err(Error::arg(format!("brute force needs d <= 24, got {d}")));
    }
    let mut total = 0.0;
    for idx in 0..1u64 << d {
        let x = HypercubeInput::from_index(idx, d)?;
        let p = src.dist().density_bits(x.bits());
        let xi = coord.map_or(1.0, |i| f64::from(x.bits()[i]));
        total += p * f64::from(src.target().eval_bits(x.bits())) * xi;
    }
    Ok(src.noise().attenuation() * total)
}
