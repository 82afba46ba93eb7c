use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::boolean::{index_of, InputBatch};
use crate::distributions::InputDistribution;
use crate::error::{Error, Result};

/// Parameters of the atom code: `r` payload bits in dimension `d`, with the
/// encoding component carrying mass `mixture_weight` in training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitCode {
    pub r: usize,
    pub d: usize,
    pub mixture_weight: f64,
}

impl BitCode {
    pub fn new(r: usize, d: usize, mixture_weight: f64) -> Result<Self> {
        let code = Self {
            r,
            d,
            mixture_weight,
        };
        code.validate()?;
        Ok(code)
    }

    /// `1 <= r <= 2^d / 20`, `d <= 64`, weight in `(0, 1]`.
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > 64 {
            return Err(Error::arg(format!(
                "codec needs 1 <= d <= 64, got {}",
                self.d
            )));
        }
        if self.r == 0 || self.r as f64 > 2f64.powi(self.d as i32) / 20.0 {
            return Err(Error::arg(format!(
                "payload length r={} outside 1..=2^d/20 for d={}",
                self.r, self.d
            )));
        }
        if !(self.mixture_weight > 0.0 && self.mixture_weight <= 1.0) {
            return Err(Error::arg(format!(
                "mixture weight {} outside (0, 1]",
                self.mixture_weight
            )));
        }
        Ok(())
    }

    /// Decision threshold on the frequency of atom `i`.
    pub fn threshold(&self) -> f64 {
        let w = self.mixture_weight;
        w * 2.5 / (5.0 * self.r as f64) + (1.0 - w) * 0.5f64.powi(self.d as i32)
    }

    /// `ceil(r^2 (ln r + ln(1/eps)) / w)` samples.
    pub fn decode_sample_size(&self, eps: f64) -> usize {
        let r = self.r as f64;
        (r * r * (r.ln() + (1.0 / eps).ln()) / self.mixture_weight).ceil() as usize
    }

    /// The training distribution `w * atoms + (1 - w) * uniform`.
    pub fn training_distribution(&self, theta: &[bool]) -> Result<InputDistribution> {
        let atoms = encode_bits(theta, self)?;
        if self.mixture_weight >= 1.0 {
            Ok(atoms)
        } else {
            InputDistribution::mixture(vec![
                (self.mixture_weight, atoms),
                (
                    1.0 - self.mixture_weight,
                    InputDistribution::uniform(self.d)?,
                ),
            ])
        }
    }
}

/// Atom `i` (the point with integer view `i`) gets `2/(5r)` for a 0 bit and
/// `3/(5r)` for a 1 bit; atom 0 takes the remaining mass.
pub fn encode_bits(theta: &[bool], code: &BitCode) -> Result<InputDistribution> {
    code.validate()?;
    if theta.len() != code.r {
        return Err(Error::arg(format!(
            "payload has {} bits, code expects r={}",
            theta.len(),
            code.r
        )));
    }
    let unit = 1.0 / (5.0 * code.r as f64);
    let masses: Vec<f64> = theta
        .iter()
        .map(|&b| if b { 3.0 * unit } else { 2.0 * unit })
        .collect();
    let rest = 1.0 - masses.iter().sum::<f64>();
    let mut entries = Vec::with_capacity(code.r + 1);
    entries.push((0u64, rest));
    entries.extend(
        masses
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i as u64 + 1, p)),
    );
    InputDistribution::atoms(code.d, entries)
}

/// Counts of integer points below `limit`; everything else only bumps the total.
#[derive(Clone, Debug, Default)]
pub struct FrequencyCounter {
    limit: u64,
    counts: HashMap<u64, u64>,
    total: u64,
}

impl FrequencyCounter {
    pub fn new(limit: u64) -> Self {
        Self {
            limit,
            counts: HashMap::new(),
            total: 0,
        }
    }

    pub fn observe(&mut self, x: &[i8]) {
        let idx = index_of(x);
        if idx < self.limit {
            *self.counts.entry(idx).or_insert(0) += 1;
        }
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequency(&self, point: u64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.get(&point).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

/// Thresholds given frequencies `freqs[i-1]` of atoms `i = 1..=r`. Ties decode as 1.
pub fn decode_frequencies(freqs: &[f64], code: &BitCode) -> Result<Vec<bool>> {
    code.validate()?;
    if freqs.len() != code.r {
        return Err(Error::arg(format!(
            "{} frequencies for r={}",
            freqs.len(),
            code.r
        )));
    }
    let t = code.threshold();
    Ok(freqs.iter().map(|&y| y >= t).collect())
}

/// Recovers the payload from unlabeled inputs by atom frequencies.
pub fn decode_bits(samples: &InputBatch, code: &BitCode) -> Result<Vec<bool>> {
    code.validate()?;
    if samples.is_empty() {
        return Err(Error::arg("decoding needs at least one sample"));
    }
    let mut counter = FrequencyCounter::new(code.r as u64 + 1);
    for x in samples.rows() {
        counter.observe(x);
    }
    let freqs: Vec<f64> = (1..=code.r as u64).map(|i| counter.frequency(i)).collect();
    decode_frequencies(&freqs, code)
}
