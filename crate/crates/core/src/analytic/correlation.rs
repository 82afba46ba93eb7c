use serde::{Deserialize, Serialize};

use crate::boolean::InputBatch;
use crate::error::{Error, Result};

/// Outcome of the correlation-threshold parity learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFit {
    /// Recovered coordinates, ascending.
    pub support: Vec<usize>,
    /// `T_i = mean(y x_i)` per coordinate.
    pub estimates: Vec<f64>,
    /// `(min T + max T) / 2`.
    pub threshold: f64,
    /// Every estimate is identical, so no split exists and the support is empty.
    pub degenerate_gap: bool,
    /// The spread `max T - min T` is within the sampling noise expected when
    /// all true correlations are equal (a union bound at level 0.05).
    pub gap_below_noise: bool,
}

/// Streaming sums of `y x_i`.
#[derive(Clone, Debug)]
pub struct CorrelationAccumulator {
    sums: Vec<i64>,
    count: usize,
}

impl CorrelationAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            sums: vec![0; dim],
            count: 0,
        }
    }

    pub fn push(&mut self, x: &[i8], y: i8) {
        debug_assert_eq!(x.len(), self.sums.len());
        let y = i64::from(y);
        for (s, &xi) in self.sums.iter_mut().zip(x) {
            *s += y * i64::from(xi);
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn estimates(&self) -> Vec<f64> {
        let m = self.count.max(1) as f64;
        self.sums.iter().map(|&s| s as f64 / m).collect()
    }

    pub fn finish(&self) -> Result<CorrelationFit> {
        if self.count < 2 {
            return Err(Error::arg(format!(
                "correlation learner needs at least 2 samples, got {}",
                self.count
            )));
        }
        let mut fit = support_from_estimates(&self.estimates());
        let m = self.count as f64;
        let d = self.sums.len() as f64;
        let se = fit
            .estimates
            .iter()
            .map(|t| ((1.0 - t * t).max(0.0) / m).sqrt())
            .fold(0.0, f64::max);
        let (lo, hi) = min_max(&fit.estimates);
        fit.gap_below_noise = hi - lo <= 2.0 * se * (2.0 * (d / 0.05).ln()).sqrt();
        Ok(fit)
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        })
}

/// Midpoint split of precomputed correlations (exact moments or estimates).
pub fn support_from_estimates(estimates: &[f64]) -> CorrelationFit {
    let (lo, hi) = min_max(estimates);
    let threshold = 0.5 * (lo + hi);
    let degenerate_gap = estimates.is_empty() || lo == hi;
    let support = if degenerate_gap {
        Vec::new()
    } else {
        (0..estimates.len())
            .filter(|&i| estimates[i] > threshold)
            .collect()
    };
    CorrelationFit {
        support,
        estimates: estimates.to_vec(),
        threshold,
        degenerate_gap,
        gap_below_noise: degenerate_gap,
    }
}

/// Recovers a parity support from labeled samples by thresholding
/// `T_i = mean(y x_i)` at the midpoint of its range.
pub fn learn_parity_correlation(xs: &InputBatch, ys: &[i8]) -> Result<CorrelationFit> {
    if xs.len() != ys.len() {
        return Err(Error::arg(format!(
            "{} inputs but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if ys.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::arg("labels must be -1 or +1"));
    }
    let mut acc = CorrelationAccumulator::new(xs.dim());
    for (x, &y) in xs.rows().zip(ys) {
        acc.push(x, y);
    }
    acc.finish()
}

/// Gap between in-support and out-of-support correlations for a `k`-parity
/// under `1/2 D_mu + 1/2 uniform` with `mu = 1 - 2/d`:
/// `1/2 (1-2 eta) mu^(k-1) (1 - mu^2)`.
pub fn correlation_gap(d: usize, k: usize, eta: f64) -> f64 {
    let mu = 1.0 - 2.0 / d as f64;
    0.5 * (1.0 - 2.0 * eta) * mu.powi(k as i32 - 1) * (1.0 - mu * mu)
}
