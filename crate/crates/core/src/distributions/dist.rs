use std::collections::HashMap;

use rand::{Rng as _, RngCore};

use super::bias::BiasVector;
use crate::boolean::{index_of, HypercubeInput, InputBatch};
use crate::error::{Error, Result};
use crate::rng::Rng;

const WEIGHT_TOL: f64 = 1e-12;

/// A distribution over `{-1,+1}^d`.
#[derive(Clone, Debug, PartialEq)]
pub enum InputDistribution {
    /// Independent coordinates with `P(x_i = +1) = (1 + mu_i) / 2`.
    ProductRademacher(BiasVector),
    UniformHypercube {
        dim: usize,
    },
    /// Level `sum x_i` uniform over `{d, d-2, ..., -d}`, then uniform within
    /// the level set.
    SliceUniform {
        dim: usize,
    },
    /// Uniform off `support`; on `support` all coordinates share one sign,
    /// `+1` or `-1` with probability 1/2.
    TiedSupport {
        dim: usize,
        support: Vec<usize>,
    },
    Mixture(MixtureDistribution),
    Atoms(AtomDistribution),
}

/// Finite mixture; weights are positive and sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureDistribution {
    components: Vec<(f64, InputDistribution)>,
    cumulative: Vec<f64>,
}

/// Finitely many integer points (in the `{0,1}` view) with probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomDistribution {
    dim: usize,
    points: Vec<u64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    lookup: HashMap<u64, usize>,
}

fn check_weights(ws: impl Iterator<Item = f64>, what: &str) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    let cumulative: Vec<f64> = ws
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if (acc - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::arg(format!("{what} sum to {acc}, expected 1")));
    }
    Ok(cumulative)
}

/// Picks an index from a cumulative weight table using one uniform draw.
fn pick(cumulative: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let idx = cumulative.partition_point(|&c| c <= u);
    idx.min(cumulative.len() - 1)
}

impl MixtureDistribution {
    pub fn new(components: Vec<(f64, InputDistribution)>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::arg("mixture needs at least one component"));
        };
        let dim = first.1.dim();
        for (w, c) in &components {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::arg(format!("mixture weight {w} must be positive")));
            }
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        let cumulative = check_weights(components.iter().map(|(w, _)| *w), "mixture weights")?;
        Ok(Self {
            components,
            cumulative,
        })
    }

    pub fn components(&self) -> &[(f64, InputDistribution)] {
        &self.components
    }
}

impl AtomDistribution {
    pub fn new(dim: usize, entries: Vec<(u64, f64)>) -> Result<Self> {
        if dim == 0 || dim > 64 {
            return Err(Error::arg(format!("atoms need 1 <= d <= 64, got {dim}")));
        }
        if entries.is_empty() {
            return Err(Error::arg("atom distribution needs at least one point"));
        }
        let mut lookup = HashMap::with_capacity(entries.len());
        for (pos, &(point, p)) in entries.iter().enumerate() {
            if dim < 64 && point >> dim != 0 {
                return Err(Error::arg(format!("atom {point} outside 0..2^{dim}")));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::arg(format!(
                    "atom probability {p} must be nonnegative"
                )));
            }
            if lookup.insert(point, pos).is_some() {
                return Err(Error::arg(format!("atom {point} listed twice")));
            }
        }
        let cumulative = check_weights(entries.iter().map(|e| e.1), "atom probabilities")?;
        let (points, probs) = entries.into_iter().unzip();
        Ok(Self {
            dim,
            points,
            probs,
            cumulative,
            lookup,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.points.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mass(&self, point: u64) -> f64 {
        self.lookup.get(&point).map_or(0.0, |&i| self.probs[i])
    }
}

/// `C(n, k)` as a float; exact while the result stays below `2^53`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `P(+1) * 2^64` as an integer threshold against a uniform `u64`.
fn plus_threshold(mu: f64) -> Option<u64> {
    let p = (1.0 + mu) / 2.0;
    if p >= 1.0 {
        None
    } else {
        Some((p * 18_446_744_073_709_551_616.0) as u64)
    }
}

impl InputDistribution {
    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("dimension must be positive"));
        }
        Ok(Self::UniformHypercube { dim })
    }

    pub fn slice(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("slice distribution needs d >= 1"));
        }
        Ok(Self::SliceUniform { dim })
    }

    pub fn product(mu: BiasVector) -> Self {
        Self::ProductRademacher(mu)
    }

    pub fn tied(dim: usize, support: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("dimension must be positive"));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() || sorted.last().is_some_and(|&i| i >= dim) {
            return Err(Error::arg(
                "tied support must be distinct coordinates below d",
            ));
        }
        Ok(Self::TiedSupport {
            dim,
            support: sorted,
        })
    }

    pub fn mixture(components: Vec<(f64, InputDistribution)>) -> Result<Self> {
        MixtureDistribution::new(components).map(Self::Mixture)
    }

    pub fn atoms(dim: usize, entries: Vec<(u64, f64)>) -> Result<Self> {
        AtomDistribution::new(dim, entries).map(Self::Atoms)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::ProductRademacher(mu) => mu.dim(),
            Self::UniformHypercube { dim }
            | Self::SliceUniform { dim }
            | Self::TiedSupport { dim, .. } => *dim,
            Self::Mixture(m) => m.components[0].1.dim(),
            Self::Atoms(a) => a.dim,
        }
    }

    /// Writes one draw into `out` (length `d`).
    pub fn sample_one(&self, rng: &mut Rng, out: &mut [i8]) {
        debug_assert_eq!(out.len(), self.dim());
        match self {
            Self::ProductRademacher(mu) => {
                for (x, &m) in out.iter_mut().zip(mu.as_slice()) {
                    *x = match plus_threshold(m) {
                        None => 1,
                        Some(t) => {
                            if rng.next_u64() < t {
                                1
                            } else {
                                -1
                            }
                        }
                    };
                }
            }
            Self::UniformHypercube { .. } => fill_uniform(rng, out),
            Self::SliceUniform { dim } => {
                let d = *dim;
                let plus = rng.random_range(0..=d);
                out.fill(-1);
                let mut order: Vec<usize> = (0..d).collect();
                for j in 0..plus {
                    let pick = rng.random_range(j..d);
                    order.swap(j, pick);
                    out[order[j]] = 1;
                }
            }
            Self::TiedSupport { support, .. } => {
                fill_uniform(rng, out);
                let s = if rng.random::<bool>() { 1 } else { -1 };
                for &i in support {
                    out[i] = s;
                }
            }
            Self::Mixture(m) => {
                let c = pick(&m.cumulative, rng);
                m.components[c].1.sample_one(rng, out);
            }
            Self::Atoms(a) => {
                let point = a.points[pick(&a.cumulative, rng)];
                for (i, x) in out.iter_mut().enumerate() {
                    *x = if (point >> i) & 1 == 1 { 1 } else { -1 };
                }
            }
        }
    }

    /// Appends `n` i.i.d. draws to `batch`.
    pub fn sample_into(&self, rng: &mut Rng, n: usize, batch: &mut InputBatch) {
        let d = self.dim();
        debug_assert_eq!(batch.dim(), d);
        let data = batch.data_mut();
        let start = data.len();
        data.resize(start + n * d, 0);
        for row in data[start..].chunks_exact_mut(d) {
            self.sample_one(rng, row);
        }
    }

    pub fn sample(&self, rng: &mut Rng, n: usize) -> InputBatch {
        let mut batch = InputBatch::with_capacity(self.dim(), n);
        self.sample_into(rng, n, &mut batch);
        batch
    }

    pub fn density(&self, x: &HypercubeInput) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(self.density_bits(x.bits()))
    }

    /// Exact probability mass of the point `x`.
    pub fn density_bits(&self, x: &[i8]) -> f64 {
        match self {
            Self::ProductRademacher(mu) => x
                .iter()
                .zip(mu.as_slice())
                .map(|(&xi, &m)| (1.0 + f64::from(xi) * m) / 2.0)
                .product(),
            Self::UniformHypercube { dim } => 0.5f64.powi(*dim as i32),
            Self::SliceUniform { dim } => {
                let plus = x.iter().filter(|&&b| b > 0).count();
                1.0 / ((*dim + 1) as f64 * binomial(*dim, plus))
            }
            Self::TiedSupport { dim, support } => {
                let tied = support.windows(2).all(|w| x[w[0]] == x[w[1]]);
                if !tied {
                    0.0
                } else if support.is_empty() {
                    0.5f64.powi(*dim as i32)
                } else {
                    0.5 * 0.5f64.powi((*dim - support.len()) as i32)
                }
            }
            Self::Mixture(m) => m
                .components
                .iter()
                .map(|(w, c)| w * c.density_bits(x))
                .sum(),
            Self::Atoms(a) => a.mass(index_of(x)),
        }
    }

    /// `P(x_coords = z)`, where `coords` are distinct coordinates.
    pub fn marginal_mass(&self, coords: &[usize], z: &[i8]) -> f64 {
        debug_assert_eq!(coords.len(), z.len());
        match self {
            Self::ProductRademacher(mu) => coords
                .iter()
                .zip(z)
                .map(|(&i, &zi)| (1.0 + f64::from(zi) * mu.get(i)) / 2.0)
                .product(),
            Self::UniformHypercube { .. } => 0.5f64.powi(coords.len() as i32),
            Self::SliceUniform { .. } => {
                // Any t coordinates of the slice are again slice-distributed on t bits.
                let t = coords.len();
                let plus = z.iter().filter(|&&b| b > 0).count();
                1.0 / ((t + 1) as f64 * binomial(t, plus))
            }
            Self::TiedSupport { support, .. } => {
                let mut free = 0;
                let mut tied: Option<i8> = None;
                for (&i, &zi) in coords.iter().zip(z) {
                    if support.binary_search(&i).is_ok() {
                        match tied {
                            None => tied = Some(zi),
                            Some(s) if s != zi => return 0.0,
                            Some(_) => {}
                        }
                    } else {
                        free += 1;
                    }
                }
                let on = if tied.is_some() { 0.5 } else { 1.0 };
                on * 0.5f64.powi(free)
            }
            Self::Mixture(m) => m
                .components
                .iter()
                .map(|(w, c)| w * c.marginal_mass(coords, z))
                .sum(),
            Self::Atoms(a) => a
                .entries()
                .filter(|&(point, _)| {
                    coords
                        .iter()
                        .zip(z)
                        .all(|(&i, &zi)| ((point >> i) & 1 == 1) == (zi > 0))
                })
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// `E[prod_{i in set} x_i]` for distinct coordinates `set`.
    pub fn parity_expectation(&self, set: &[usize]) -> f64 {
        match self {
            Self::ProductRademacher(mu) => set.iter().map(|&i| mu.get(i)).product(),
            Self::UniformHypercube { .. } => {
                if set.is_empty() {
                    1.0
                } else {
                    0.0
                }
            }
            Self::SliceUniform { .. } => {
                let t = set.len();
                if t.is_multiple_of(2) {
                    1.0 / (t + 1) as f64
                } else {
                    0.0
                }
            }
            Self::TiedSupport { support, .. } => {
                let mut on = 0;
                for &i in set {
                    if support.binary_search(&i).is_ok() {
                        on += 1;
                    } else {
                        return 0.0;
                    }
                }
                if on % 2 == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Mixture(m) => m
                .components
                .iter()
                .map(|(w, c)| w * c.parity_expectation(set))
                .sum(),
            Self::Atoms(a) => a
                .entries()
                .map(|(point, p)| {
                    let neg = set.iter().filter(|&&i| (point >> i) & 1 == 0).count();
                    if neg % 2 == 0 {
                        p
                    } else {
                        -p
                    }
                })
                .sum(),
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            Self::ProductRademacher(mu) => {
                let first = mu.get(0);
                if mu.as_slice().iter().all(|&m| m == first) {
                    format!("product(mu={first})")
                } else {
                    "product(mu=vector)".into()
                }
            }
            Self::UniformHypercube { dim } => format!("uniform(d={dim})"),
            Self::SliceUniform { dim } => format!("slice(d={dim})"),
            Self::TiedSupport { support, .. } => format!("tied(|S|={})", support.len()),
            Self::Mixture(m) => {
                let parts: Vec<String> = m
                    .components
                    .iter()
                    .map(|(w, c)| format!("{w}*{}", c.describe()))
                    .collect();
                parts.join(" + ")
            }
            Self::Atoms(a) => format!("atoms(n={})", a.points.len()),
        }
    }
}

fn fill_uniform(rng: &mut Rng, out: &mut [i8]) {
    for chunk in out.chunks_mut(64) {
        let bits = rng.next_u64();
        for (j, x) in chunk.iter_mut().enumerate() {
            *x = if (bits >> j) & 1 == 1 { 1 } else { -1 };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn all_points(d: usize) -> impl Iterator<Item = HypercubeInput> {
        (0..1u64 << d).map(move |i| HypercubeInput::from_index(i, d).unwrap())
    }

    fn total_mass(dist: &InputDistribution) -> f64 {
        all_points(dist.dim())
            .map(|x| dist.density(&x).unwrap())
            .sum()
    }

    #[test]
    fn density_examples() {
        let u = InputDistribution::uniform(4).unwrap();
        assert_eq!(u.density(&HypercubeInput::ones(4)).unwrap(), 1.0 / 16.0);
        let p = InputDistribution::product(BiasVector::new(vec![0.5, -0.5]).unwrap());
        assert!((p.density(&HypercubeInput::ones(2)).unwrap() - 0.1875).abs() < 1e-15);
        let s = InputDistribution::slice(4).unwrap();
        let x = HypercubeInput::new(vec![1, 1, 1, -1]).unwrap();
        assert!((s.density(&x).unwrap() - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn densities_sum_to_one() {
        let d = 6;
        let dists = vec![
            InputDistribution::uniform(d).unwrap(),
            InputDistribution::slice(d).unwrap(),
            InputDistribution::tied(d, vec![1, 3, 4]).unwrap(),
            InputDistribution::product(
                BiasVector::new(vec![0.1, -0.9, 1.0, 0.0, 0.3, -1.0]).unwrap(),
            ),
            InputDistribution::atoms(d, vec![(0, 0.25), (63, 0.5), (17, 0.25)]).unwrap(),
            InputDistribution::mixture(vec![
                (0.3, InputDistribution::slice(d).unwrap()),
                (0.7, InputDistribution::tied(d, vec![0]).unwrap()),
            ])
            .unwrap(),
        ];
        for dist in &dists {
            assert!(
                (total_mass(dist) - 1.0).abs() < 1e-12,
                "{}",
                dist.describe()
            );
        }
    }

    #[test]
    fn marginals_and_parities_match_enumeration() {
        let d = 5;
        let dists = vec![
            InputDistribution::slice(d).unwrap(),
            InputDistribution::tied(d, vec![0, 2, 3]).unwrap(),
            InputDistribution::product(BiasVector::new(vec![0.1, -0.4, 0.8, 0.0, 0.3]).unwrap()),
            InputDistribution::atoms(d, vec![(3, 0.5), (30, 0.2), (9, 0.3)]).unwrap(),
        ];
        let coords = [3usize, 0, 4];
        for dist in &dists {
            for zi in 0..8u64 {
                let z: Vec<i8> = (0..3)
                    .map(|j| if (zi >> j) & 1 == 1 { 1 } else { -1 })
                    .collect();
                let brute: f64 = all_points(d)
                    .filter(|x| coords.iter().zip(&z).all(|(&i, &v)| x.bits()[i] == v))
                    .map(|x| dist.density(&x).unwrap())
                    .sum();
                assert!((dist.marginal_mass(&coords, &z) - brute).abs() < 1e-14);
            }
            for set in [vec![], vec![2], vec![0, 2], vec![0, 2, 3], vec![1, 2, 3, 4]] {
                let brute: f64 = all_points(d)
                    .map(|x| {
                        let chi: i8 = set.iter().map(|&i| x.bits()[i]).product();
                        f64::from(chi) * dist.density(&x).unwrap()
                    })
                    .sum();
                assert!((dist.parity_expectation(&set) - brute).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_bias_samples_all_ones() {
        let p = InputDistribution::product(BiasVector::constant(8, 1.0).unwrap());
        let batch = p.sample(&mut seeded(1), 100);
        assert!(batch.as_slice().iter().all(|&b| b == 1));
    }

    #[test]
    fn slice_samples_lie_on_levels() {
        let s = InputDistribution::slice(7).unwrap();
        let batch = s.sample(&mut seeded(2), 1000);
        for row in batch.rows() {
            let sum: i32 = row.iter().map(|&b| i32::from(b)).sum();
            assert_eq!((sum + 7) % 2, 0);
        }
    }

    #[test]
    fn tied_support_ties() {
        let t = InputDistribution::tied(3, vec![0, 1]).unwrap();
        let batch = t.sample(&mut seeded(4), 500);
        assert!(batch.rows().all(|r| r[0] == r[1]));
    }

    #[test]
    fn construction_errors() {
        assert!(
            InputDistribution::mixture(vec![(0.5, InputDistribution::uniform(3).unwrap())])
                .is_err()
        );
        assert!(InputDistribution::mixture(vec![
            (0.5, InputDistribution::uniform(3).unwrap()),
            (0.5, InputDistribution::uniform(4).unwrap()),
        ])
        .is_err());
        assert!(InputDistribution::atoms(3, vec![(1, 0.5), (1, 0.5)]).is_err());
        assert!(InputDistribution::atoms(3, vec![(8, 1.0)]).is_err());
        assert!(InputDistribution::slice(0).is_err());
        assert!(BiasVector::new(vec![1.5]).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 3), 4.0);
        assert_eq!(binomial(10, 5), 252.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(50, 25), 126_410_606_437_752.0);
    }
}
