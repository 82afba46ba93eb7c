use super::hypothesis::Hypothesis;
use super::reduction::{majority_denoise, LabelOracle};
use crate::analytic::learn_parity_correlation;
use crate::boolean::{InputBatch, ParityTarget, Target};
use crate::distributions::InputDistribution;
use crate::error::{Error, Result};
use crate::rng::{split, Rng};

/// Inputs paired with their (possibly noisy) labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledBatch {
    pub xs: InputBatch,
    pub ys: Vec<i8>,
}

impl LabeledBatch {
    pub fn empty(dim: usize) -> Self {
        Self {
            xs: InputBatch::new(dim),
            ys: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }
}

/// A non-adaptive membership-query learner. The query batch is produced
/// before any label is observed; the signature of `generate_queries` admits
/// no labels.
pub trait NamqLearner {
    fn dim(&self) -> usize;

    /// True when the query batch does not depend on the generator.
    fn deterministic(&self) -> bool;

    fn generate_queries(&self, rng: &mut Rng) -> Result<InputBatch>;

    fn fit(&self, random: &LabeledBatch, queries: &LabeledBatch) -> Result<Hypothesis>;
}

/// A learner that trains on `sample_size` i.i.d. draws from a declared
/// training distribution.
pub trait DdsPacLearner {
    fn training_distribution(&self) -> &InputDistribution;

    fn sample_size(&self) -> usize;

    fn learn(&self, xs: &InputBatch, ys: &[i8]) -> Result<Hypothesis>;
}

/// Draws `m_rand` labeled examples from the oracle's source, then the query
/// batch, then its labels, and fits. Generator consumption follows that order.
pub fn run_namq<L, O>(learner: &L, oracle: &O, m_rand: usize, rng: &mut Rng) -> Result<Hypothesis>
where
    L: NamqLearner + ?Sized,
    O: LabelOracle + ?Sized,
{
    let src = oracle.source();
    if learner.dim() != src.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            got: learner.dim(),
        });
    }
    let d = src.dim();
    let mut random = LabeledBatch::empty(d);
    let mut x = vec![0i8; d];
    for _ in 0..m_rand {
        src.dist().sample_one(rng, &mut x);
        random.ys.push(oracle.label(&x, rng));
        random.xs.push(&x);
    }
    let queries = learner.generate_queries(rng)?;
    if queries.is_empty() && m_rand == 0 {
        return Err(Error::DegenerateInput(
            "no queries and no random samples".into(),
        ));
    }
    let ys = queries.rows().map(|q| oracle.label(q, rng)).collect();
    learner.fit(&random, &LabeledBatch { xs: queries, ys })
}

/// Runs a sample-based learner directly: `m` draws from its training
/// distribution, then their labels.
pub fn run_ddspac<A, O>(alg: &A, oracle: &O, rng: &mut Rng) -> Result<Hypothesis>
where
    A: DdsPacLearner + ?Sized,
    O: LabelOracle + ?Sized,
{
    let xs = alg.training_distribution().sample(rng, alg.sample_size());
    let ys: Vec<i8> = xs.rows().map(|x| oracle.label(x, rng)).collect();
    alg.learn(&xs, &ys)
}

/// Query-batch form of a sample-based learner: the batch is `m` draws from
/// the declared training distribution, and `fit` runs the learner on the
/// labeled batch.
#[derive(Clone, Debug)]
pub struct SampledQueries<A> {
    alg: A,
    design_seed: Option<u64>,
    repeats: usize,
}

pub fn ddspac_to_namq<A: DdsPacLearner>(alg: A) -> SampledQueries<A> {
    SampledQueries {
        alg,
        design_seed: None,
        repeats: 1,
    }
}

impl<A: DdsPacLearner> SampledQueries<A> {
    /// Fixes the query batch to the draws of `seed`, making the learner
    /// deterministic.
    pub fn with_design_seed(mut self, seed: u64) -> Self {
        self.design_seed = Some(seed);
        self
    }

    /// Asks every query point `r` times and majority-votes the answers
    /// before fitting (see [`super::repetition_count`]).
    pub fn with_repeats(mut self, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::arg("repeat count must be positive"));
        }
        self.repeats = r;
        Ok(self)
    }

    pub fn inner(&self) -> &A {
        &self.alg
    }
}

impl<A: DdsPacLearner> NamqLearner for SampledQueries<A> {
    fn dim(&self) -> usize {
        self.alg.training_distribution().dim()
    }

    fn deterministic(&self) -> bool {
        self.design_seed.is_some()
    }

    fn generate_queries(&self, rng: &mut Rng) -> Result<InputBatch> {
        let m = self.alg.sample_size();
        let dist = self.alg.training_distribution();
        let base = match self.design_seed {
            Some(seed) => dist.sample(&mut split(seed, 0), m),
            None => dist.sample(rng, m),
        };
        if self.repeats == 1 {
            return Ok(base);
        }
        let mut out = InputBatch::with_capacity(base.dim(), m * self.repeats);
        for x in base.rows() {
            for _ in 0..self.repeats {
                out.push(x);
            }
        }
        Ok(out)
    }

    fn fit(&self, _random: &LabeledBatch, queries: &LabeledBatch) -> Result<Hypothesis> {
        if queries.is_empty() {
            return Err(Error::DegenerateInput("empty query batch".into()));
        }
        if self.repeats == 1 {
            return self.alg.learn(&queries.xs, &queries.ys);
        }
        let r = self.repeats;
        if !queries.len().is_multiple_of(r) {
            return Err(Error::arg(format!(
                "{} answers do not split into groups of {r}",
                queries.len()
            )));
        }
        let mut xs = InputBatch::with_capacity(queries.xs.dim(), queries.len() / r);
        let mut ys = Vec::with_capacity(queries.len() / r);
        for (g, labels) in queries.ys.chunks_exact(r).enumerate() {
            xs.push(queries.xs.row(g * r));
            ys.push(majority_denoise(labels)?);
        }
        self.alg.learn(&xs, &ys)
    }
}

/// Correlation-threshold parity learner on a declared training distribution.
#[derive(Clone, Debug)]
pub struct CorrelationParityLearner {
    dist: InputDistribution,
    m: usize,
}

impl CorrelationParityLearner {
    pub fn new(dist: InputDistribution, m: usize) -> Self {
        Self { dist, m }
    }
}

impl DdsPacLearner for CorrelationParityLearner {
    fn training_distribution(&self) -> &InputDistribution {
        &self.dist
    }

    fn sample_size(&self) -> usize {
        self.m
    }

    fn learn(&self, xs: &InputBatch, ys: &[i8]) -> Result<Hypothesis> {
        if xs.is_empty() {
            return Err(Error::DegenerateInput("no labeled examples".into()));
        }
        let fit = learn_parity_correlation(xs, ys)?;
        Ok(Hypothesis::Target(Target::Parity(ParityTarget::new(
            xs.dim(),
            fit.support,
        )?)))
    }
}

/// Ignores its data and answers a fixed label.
#[derive(Clone, Debug)]
pub struct ConstantLearner {
    dist: InputDistribution,
    m: usize,
    label: i8,
}

impl ConstantLearner {
    pub fn new(dist: InputDistribution, m: usize, label: i8) -> Result<Self> {
        if label != 1 && label != -1 {
            return Err(Error::arg("label must be -1 or +1"));
        }
        Ok(Self { dist, m, label })
    }
}

impl DdsPacLearner for ConstantLearner {
    fn training_distribution(&self) -> &InputDistribution {
        &self.dist
    }

    fn sample_size(&self) -> usize {
        self.m
    }

    fn learn(&self, _xs: &InputBatch, _ys: &[i8]) -> Result<Hypothesis> {
        Ok(Hypothesis::Constant { label: self.label })
    }
}
