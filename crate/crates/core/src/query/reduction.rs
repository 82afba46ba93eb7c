use std::collections::HashMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::hypothesis::Hypothesis;
use super::learner::{LabeledBatch, NamqLearner};
use crate::boolean::InputBatch;
use crate::distributions::LabeledSource;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Points used to measure the final hypothesis against the noiseless target.
const EVAL_POINTS: usize = 8192;

/// Answers label requests for points of a source's target.
pub trait LabelOracle {
    fn source(&self) -> &LabeledSource;

    fn label(&self, x: &[i8], rng: &mut Rng) -> i8;
}

impl LabelOracle for LabeledSource {
    fn source(&self) -> &LabeledSource {
        self
    }

    /// Fresh independent noise on every request.
    fn label(&self, x: &[i8], rng: &mut Rng) -> i8 {
        self.target().eval_bits(x) * self.noise().draw(rng)
    }
}

/// Noise that is a fixed function of `(key, x)`: every request for the same
/// point returns the same label. Used to couple two runs that ask for the
/// same points in different orders or multiplicities.
#[derive(Clone, Debug)]
pub struct KeyedNoise {
    src: LabeledSource,
    key: u64,
}

impl KeyedNoise {
    pub fn new(src: LabeledSource, key: u64) -> Self {
        Self { src, key }
    }

    fn flip(&self, x: &[i8]) -> bool {
        let mut h = self.key;
        for chunk in x.chunks(64) {
            let bits = chunk
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &v)| acc | (u64::from(v > 0) << i));
            h = splitmix(h ^ bits);
        }
        let u = (splitmix(h) >> 11) as f64 / (1u64 << 53) as f64;
        u < self.src.noise().eta()
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl LabelOracle for KeyedNoise {
    fn source(&self) -> &LabeledSource {
        &self.src
    }

    fn label(&self, x: &[i8], _rng: &mut Rng) -> i8 {
        let y = self.src.target().eval_bits(x);
        if self.flip(x) {
            -y
        } else {
            y
        }
    }
}

/// Sign of the sum; ties go to +1.
pub fn majority_denoise(labels: &[i8]) -> Result<i8> {
    if labels.is_empty() {
        return Err(Error::arg("majority vote over no labels"));
    }
    let s: i64 = labels.iter().map(|&y| i64::from(y)).sum();
    Ok(if s >= 0 { 1 } else { -1 })
}

/// Votes per query point so that all `m` majorities are correct with
/// probability `1 - delta` under noise rate `eta`:
/// `2 ceil(8 ln(2m/delta) / (1-2 eta)^2) + 1`.
pub fn repetition_count(m: usize, delta: f64, eta: f64) -> Result<usize> {
    if m == 0 {
        return Err(Error::arg("m must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg(format!("delta {delta} outside (0, 1)")));
    }
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::arg(format!("noise rate {eta} outside [0, 0.5)")));
    }
    let g = 1.0 - 2.0 * eta;
    let r = (8.0 * (2.0 * m as f64 / delta).ln() / (g * g)).ceil();
    Ok(2 * r as usize + 1)
}

/// `ceil(C |U| (ln |U| + ln(1/delta)))` draws cover all of `U` with
/// probability at least `1 - delta` when `C >= 1`.
pub fn coverage_sample_size(distinct: usize, delta: f64, c: f64) -> Result<usize> {
    if distinct == 0 {
        return Err(Error::DegenerateInput("no distinct query points".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg(format!("delta {delta} outside (0, 1)")));
    }
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::arg(format!(
            "safety multiplier {c} must be at least 1"
        )));
    }
    let u = distinct as f64;
    Ok((c * u * (u.ln() + (1.0 / delta).ln())).ceil() as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub coverage_achieved: bool,
    pub samples_used: usize,
    pub distinct_points: usize,
    pub queries: usize,
    pub fallback_used: bool,
    pub hypothesis: Hypothesis,
    /// Disagreement with the noiseless target on fresh draws from the
    /// source distribution.
    pub measured_error: f64,
    /// The reconstructed labeled query list; absent on fallback.
    #[serde(skip)]
    pub transcript: Option<LabeledBatch>,
}

/// Simulates a query learner from i.i.d. samples of the uniform distribution
/// over its distinct query points. Each point's label is its first
/// occurrence, or the majority over all occurrences when the source is noisy.
/// If any point goes unseen the report carries `h0`.
pub fn namq_to_rdspac<L, O>(
    learner: &L,
    oracle: &O,
    delta: f64,
    c: f64,
    h0: Hypothesis,
    rng: &mut Rng,
) -> Result<ReductionReport>
where
    L: NamqLearner + ?Sized,
    O: LabelOracle + ?Sized,
{
    let src = oracle.source();
    let queries = learner.generate_queries(rng)?;
    let mut index: HashMap<&[i8], usize> = HashMap::with_capacity(queries.len());
    let mut slot = Vec::with_capacity(queries.len());
    let mut distinct: Vec<&[i8]> = Vec::new();
    for q in queries.rows() {
        let next = distinct.len();
        let id = *index.entry(q).or_insert(next);
        if id == next {
            distinct.push(q);
        }
        slot.push(id);
    }
    let u = distinct.len();
    let m = coverage_sample_size(u, delta, c)?;

    let noisy = src.noise().eta() > 0.0;
    let mut first: Vec<Option<i8>> = vec![None; u];
    let mut votes = vec![0i64; u];
    for _ in 0..m {
        let id = rng.random_range(0..u);
        let y = oracle.label(distinct[id], rng);
        first[id].get_or_insert(y);
        votes[id] += i64::from(y);
    }
    let covered = first.iter().all(Option::is_some);

    let (hypothesis, transcript) = if covered {
        let label = |id: usize| -> i8 {
            if noisy {
                if votes[id] >= 0 {
                    1
                } else {
                    -1
                }
            } else {
                first[id].expect("covered")
            }
        };
        let ys: Vec<i8> = slot.iter().map(|&id| label(id)).collect();
        let batch = LabeledBatch {
            xs: queries.clone(),
            ys,
        };
        let h = learner.fit(&LabeledBatch::empty(src.dim()), &batch)?;
        (h, Some(batch))
    } else {
        (h0, None)
    };
    let measured_error = hypothesis.disagreement(src.target(), src.dist(), EVAL_POINTS, rng);
    Ok(ReductionReport {
        coverage_achieved: covered,
        samples_used: m,
        distinct_points: u,
        queries: queries.len(),
        fallback_used: !covered,
        hypothesis,
        measured_error,
        transcript,
    })
}

impl ReductionReport {
    pub fn queries_batch(&self) -> Option<&InputBatch> {
        self.transcript.as_ref().map(|t| &t.xs)
    }
}
