//! One trial of every experiment kind.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::{CsvRow, Series};
use crate::analytic::{
    chebyshev_nodes, correlation_gap, csq_learn_junta, decode_frequencies, fpds_source, BitCode,
    CorrelationAccumulator, CsqOracle, FpdsDecoder, FrequencyCounter,
};
use crate::boolean::{build_fk, BooleanCircuit, CircuitTarget, JuntaTarget, ParityTarget, Target};
use crate::distributions::{
    build_named_distribution, exact_moment, DistributionSpec, InputDistribution, LabeledSource,
    NoiseChannel,
};
use crate::error::{Error, Result};
use crate::neural::{
    layerwise_junta_cov, layerwise_parity_l1, train_joint_sgd, train_mlp_sgd, Init, MetricsRow,
    Mlp, MlpWorkspace, StopReason, TestSet, TrainConfig, TrainRun, TwoLayerNet, TwoLayerWorkspace,
};
use crate::query::{
    ddspac_to_namq, namq_to_rdspac, run_namq, CorrelationParityLearner, Hypothesis, KeyedNoise,
    LabelOracle, NamqLearner,
};
use crate::rng::split;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Succeeded,
    Failed,
    NonConverged,
}

/// Outcome of one trial (one arm of it, for multi-arm kinds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub eta: f64,
    pub d: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<String>,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metrics: BTreeMap<String, f64>,
}

/// A unit of work: one `(d, eta, trial)` combination.
#[derive(Clone, Debug)]
pub(crate) struct Task {
    pub trial: usize,
    pub seed: u64,
    pub eta: f64,
    pub d: usize,
}

#[derive(Default)]
pub(crate) struct TaskOutput {
    pub records: Vec<TrialRecord>,
    /// Metrics rows keyed by CSV file name.
    pub csv: Vec<(String, Vec<CsvRow>)>,
    pub series: Vec<Series>,
}

impl Task {
    fn record(&self, k: usize, arm: Option<&str>) -> TrialRecord {
        TrialRecord {
            trial: self.trial,
            seed: self.seed,
            eta: self.eta,
            d: self.d,
            k,
            arm: arm.map(str::to_string),
            status: TrialStatus::Succeeded,
            error: None,
            metrics: BTreeMap::new(),
        }
    }

    fn failed(&self, k: usize, arm: Option<&str>, e: &Error) -> TrialRecord {
        TrialRecord {
            status: TrialStatus::Failed,
            error: Some(e.to_string()),
            ..self.record(k, arm)
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn run_task(cfg: &ExperimentConfig, task: &Task) -> TaskOutput {
    let k = cfg.k;
    let single = |r: Result<TrialRecord>| TaskOutput {
        records: vec![r.unwrap_or_else(|e| task.failed(k, None, &e))],
        ..TaskOutput::default()
    };
    match cfg.kind {
        ExperimentKind::ParityCorrelation => single(parity_correlation(cfg, task)),
        ExperimentKind::JuntaCsq => single(junta_csq(cfg, task)),
        ExperimentKind::FpdsCodec => single(fpds_codec(cfg, task)),
        ExperimentKind::NamqReduction => single(namq_reduction(cfg, task)),
        ExperimentKind::TrainParity | ExperimentKind::TrainJunta => train_single(cfg, task),
        ExperimentKind::TransferPanel => transfer_panel(cfg, task),
        ExperimentKind::Sweep => sweep_point(cfg, task),
    }
}

fn noise(eta: f64) -> Result<NoiseChannel> {
    NoiseChannel::new(eta)
}

fn random_parity(d: usize, k: usize, seed: u64) -> Result<ParityTarget> {
    ParityTarget::new(d, sample_indices(&mut split(seed, 0), d, k).into_vec())
}

fn parity_correlation(cfg: &ExperimentConfig, task: &Task) -> Result<TrialRecord> {
    let (d, k) = (task.d, cfg.k);
    let target = random_parity(d, k, task.seed)?;
    let dist = build_named_distribution(&cfg.distribution, d, &mut split(task.seed, 1))?;
    let src = LabeledSource::new(dist, target.clone().into(), noise(task.eta)?)?;
    let mut rng = split(task.seed, 2);
    let mut acc = CorrelationAccumulator::new(d);
    let mut x = vec![0i8; d];
    for _ in 0..cfg.budget.samples {
        let y = src.sample_one(&mut rng, &mut x);
        acc.push(&x, y);
    }
    let fit = acc.finish()?;
    let mut rec = task.record(k, None);
    let m = &mut rec.metrics;
    m.insert(
        "support_recovered".into(),
        flag(fit.support == target.support()),
    );
    m.insert("gap_below_noise".into(), flag(fit.gap_below_noise));
    if k < d {
        let in_s: Vec<bool> = (0..d).map(|i| target.support().contains(&i)).collect();
        let split_mean = |v: &[f64]| {
            let (mut a, mut b) = (0.0, 0.0);
            for (i, &t) in v.iter().enumerate() {
                if in_s[i] {
                    a += t;
                } else {
                    b += t;
                }
            }
            a / k as f64 - b / (d - k) as f64
        };
        m.insert("gap_measured".into(), split_mean(&fit.estimates));
        if let Ok(exact) = (0..d)
            .map(|i| exact_moment(&src, Some(i)))
            .collect::<Result<Vec<f64>>>()
        {
            m.insert("gap_exact".into(), split_mean(&exact));
        }
        if cfg.distribution == DistributionSpec::named("bias-mixture") {
            m.insert("gap_closed_form".into(), correlation_gap(d, k, task.eta));
        }
    }
    Ok(rec)
}

/// Agreement of two juntas as functions on `{-1,+1}^d`.
fn same_junta(a: &JuntaTarget, b: &JuntaTarget) -> bool {
    let mut coords: Vec<usize> = a.support().iter().chain(b.support()).copied().collect();
    coords.sort_unstable();
    coords.dedup();
    let mut x = vec![1i8; a.dim()];
    (0..1u64 << coords.len()).all(|z| {
        for (bit, &c) in coords.iter().enumerate() {
            x[c] = if z >> bit & 1 == 1 { 1 } else { -1 };
        }
        a.eval_bits(&x) == b.eval_bits(&x)
    })
}

fn junta_csq(cfg: &ExperimentConfig, task: &Task) -> Result<TrialRecord> {
    let (d, k) = (task.d, cfg.k);
    let target = JuntaTarget::random(d, k, &mut split(task.seed, 0))?;
    let mut oracle = CsqOracle::new(
        target.clone().into(),
        noise(task.eta)?,
        chebyshev_nodes(k),
        cfg.csq.oracle,
        cfg.csq.form,
        task.seed,
    )?;
    let fit = csq_learn_junta(&mut oracle, d, k, task.eta)?;
    let expected = k + d * k + (1usize << fit.target.k());
    let mut rec = task.record(k, None);
    let m = &mut rec.metrics;
    m.insert(
        "function_recovered".into(),
        flag(same_junta(&fit.target, &target)),
    );
    m.insert("queries".into(), fit.queries as f64);
    m.insert("query_count_ok".into(), flag(fit.queries == expected));
    m.insert("support_size".into(), fit.target.k() as f64);
    Ok(rec)
}

fn fpds_codec(cfg: &ExperimentConfig, task: &Task) -> Result<TrialRecord> {
    let d = task.d;
    let c = &cfg.codec;
    let mut rng = split(task.seed, 0);
    let mut rec = task.record(cfg.k, None);
    if let Some(r) = c.payload_bits {
        let code = BitCode::new(r, d, c.mixture_weight)?;
        let theta: Vec<bool> = (0..r).map(|_| rng.random()).collect();
        let dist = code.training_distribution(&theta)?;
        let m = if cfg.budget.samples > 0 {
            cfg.budget.samples
        } else {
            code.decode_sample_size(c.eps)
        };
        let mut counter = FrequencyCounter::new(r as u64 + 1);
        let mut x = vec![0i8; d];
        let mut srng = split(task.seed, 1);
        for _ in 0..m {
            dist.sample_one(&mut srng, &mut x);
            counter.observe(&x);
        }
        let freqs: Vec<f64> = (1..=r as u64).map(|i| counter.frequency(i)).collect();
        let decoded = decode_frequencies(&freqs, &code)?;
        let errors = decoded.iter().zip(&theta).filter(|(a, b)| a != b).count();
        rec.metrics
            .insert("exact_recovery".into(), flag(errors == 0));
        rec.metrics.insert("bit_errors".into(), errors as f64);
        rec.metrics.insert("samples".into(), m as f64);
        return Ok(rec);
    }
    let circuit = BooleanCircuit::random(d, c.inputs, c.gates, &mut rng)?;
    let target = CircuitTarget::new(d, circuit)?;
    let (src, code) = fpds_source(&target, noise(task.eta)?, c.mixture_weight)?;
    let m = if cfg.budget.samples > 0 {
        cfg.budget.samples
    } else {
        code.decode_sample_size(c.eps)
    };
    let mut dec = FpdsDecoder::new(d, c.mixture_weight);
    let mut x = vec![0i8; d];
    let mut srng = split(task.seed, 1);
    // The decoder reads inputs only, so labels are never drawn.
    let dist = src.dist();
    for _ in 0..m {
        dist.sample_one(&mut srng, &mut x);
        dec.observe(&x);
    }
    let h = dec.finish();
    let test =
        InputDistribution::uniform(d)?.sample(&mut split(task.seed, 2), cfg.budget.test_points);
    let mut scratch = Vec::new();
    let agree = test
        .rows()
        .filter(|x| h.predict(x, &mut scratch) == target.eval_bits(x))
        .count();
    let m_ = &mut rec.metrics;
    m_.insert("agreement".into(), agree as f64 / test.len() as f64);
    m_.insert(
        "exact_circuit".into(),
        flag(h.circuit.as_ref() == Some(target.circuit())),
    );
    m_.insert("fallback_used".into(), flag(h.fallback_used()));
    m_.insert("payload_bits".into(), code.r as f64);
    m_.insert("samples".into(), m as f64);
    Ok(rec)
}

fn namq_reduction(cfg: &ExperimentConfig, task: &Task) -> Result<TrialRecord> {
    let (d, k) = (task.d, cfg.k);
    let r = &cfg.reduction;
    let target = random_parity(d, k, task.seed)?;
    let design = build_named_distribution(&cfg.distribution, d, &mut split(task.seed, 1))?;
    let test = build_named_distribution(&cfg.test_distribution, d, &mut split(task.seed, 2))?;
    let src = LabeledSource::new(test, target.clone().into(), noise(task.eta)?)?;
    let learner = ddspac_to_namq(CorrelationParityLearner::new(design, r.queries))
        .with_design_seed(task.seed);
    let keyed = KeyedNoise::new(src.clone(), task.seed);
    let oracle: &dyn LabelOracle = if r.keyed_noise { &keyed } else { &src };
    let report = namq_to_rdspac(
        &learner,
        oracle,
        r.delta,
        r.c,
        Hypothesis::zero(),
        &mut split(task.seed, 3),
    )?;

    let mut rec = task.record(k, None);
    let m = &mut rec.metrics;
    m.insert("coverage".into(), flag(report.coverage_achieved));
    m.insert("fallback_used".into(), flag(report.fallback_used));
    m.insert("distinct_points".into(), report.distinct_points as f64);
    m.insert("samples_used".into(), report.samples_used as f64);
    m.insert("measured_error".into(), report.measured_error);
    m.insert(
        "support_recovered".into(),
        flag(report.hypothesis.parity_support() == Some(target.support())),
    );
    if let Some(t) = &report.transcript {
        let mut lrng = split(task.seed, 4);
        let direct = run_namq(&learner, oracle, 0, &mut lrng)?;
        let mut qrng = split(task.seed, 4);
        let q = learner.generate_queries(&mut qrng)?;
        let ys: Vec<i8> = q.rows().map(|x| oracle.label(x, &mut qrng)).collect();
        m.insert("transcript_equal".into(), flag(t.xs == q && t.ys == ys));
        m.insert("hypothesis_equal".into(), flag(direct == report.hypothesis));
    }
    Ok(rec)
}

/// A trained network of either shape.
pub(crate) enum Trained {
    Two(TrainRun<TwoLayerNet>),
    Deep(TrainRun<Mlp>),
}

impl Trained {
    pub fn rows(&self) -> &[MetricsRow] {
        match self {
            Trained::Two(r) => &r.rows,
            Trained::Deep(r) => &r.rows,
        }
    }

    pub fn stop(&self) -> StopReason {
        match self {
            Trained::Two(r) => r.stop,
            Trained::Deep(r) => r.stop,
        }
    }

    pub fn error(&self, set: &TestSet) -> f64 {
        match self {
            Trained::Two(r) => set.error(&r.model, &mut TwoLayerWorkspace::default()),
            Trained::Deep(r) => set.error(&r.model, &mut MlpWorkspace::default()),
        }
    }
}

/// Picks the trainer from the init scheme and the layer list.
pub(crate) fn train_network(
    tc: &TrainConfig,
    train_src: &LabeledSource,
    target_src: &LabeledSource,
) -> Result<Trained> {
    match tc.init {
        Init::StandardUniform if tc.hidden_layers.is_empty() => {
            train_joint_sgd(tc, train_src, target_src).map(Trained::Two)
        }
        Init::StandardUniform => train_mlp_sgd(tc, train_src, target_src).map(Trained::Deep),
        Init::LayerwiseL1 => layerwise_parity_l1(tc, train_src, target_src).map(Trained::Two),
        Init::LayerwiseCov { .. } => {
            layerwise_junta_cov(tc, train_src, target_src).map(Trained::Two)
        }
    }
}

/// `samples_seen` at the first of `consecutive` evaluations in a row whose
/// target error is at most `threshold`.
pub fn samples_to_threshold(
    rows: &[MetricsRow],
    threshold: f64,
    consecutive: usize,
) -> Option<u64> {
    if consecutive == 0 {
        return rows.first().map(|r| r.samples_seen);
    }
    let mut run = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.test_error_target <= threshold {
            run += 1;
            if run == consecutive {
                return Some(rows[i + 1 - consecutive].samples_seen);
            }
        } else {
            run = 0;
        }
    }
    None
}

fn target_for(kind: ExperimentKind, d: usize, k: usize) -> Result<Target> {
    match kind {
        ExperimentKind::TrainJunta | ExperimentKind::Sweep => Ok(build_fk(k, d)?.into()),
        _ => Ok(ParityTarget::prefix(d, k)?.into()),
    }
}

fn train_metrics(rec: &mut TrialRecord, run: &Trained) {
    let rows = run.rows();
    let last = rows
        .last()
        .expect("the recorder always writes a step-0 row");
    let m = &mut rec.metrics;
    m.insert("final_error_target".into(), last.test_error_target);
    m.insert("final_error_train_dist".into(), last.test_error_train_dist);
    m.insert(
        "best_error_target".into(),
        rows.iter()
            .map(|r| r.test_error_target)
            .fold(f64::INFINITY, f64::min),
    );
    m.insert("steps".into(), last.step as f64);
    m.insert("samples_seen".into(), last.samples_seen as f64);
    m.insert(
        "stopped_early".into(),
        flag(run.stop() != StopReason::Budget),
    );
}

fn curve(name: String, rows: &[MetricsRow]) -> Series {
    Series {
        name,
        points: rows
            .iter()
            .map(|r| (r.samples_seen as f64, r.test_error_target))
            .collect(),
    }
}

fn csv_rows(rows: &[MetricsRow], task: &Task, k: usize) -> Vec<CsvRow> {
    rows.iter()
        .map(|r| CsvRow::from_metrics(r, task.seed, task.eta, task.d, k))
        .collect()
}

fn sources(
    target: &Target,
    train: &DistributionSpec,
    test: &DistributionSpec,
    task: &Task,
) -> Result<(LabeledSource, LabeledSource)> {
    let d = task.d;
    let train = build_named_distribution(train, d, &mut split(task.seed, 1))?;
    let test = build_named_distribution(test, d, &mut split(task.seed, 2))?;
    let n = noise(task.eta)?;
    Ok((
        LabeledSource::new(train, target.clone(), n)?,
        LabeledSource::new(test, target.clone(), n)?,
    ))
}

fn train_single(cfg: &ExperimentConfig, task: &Task) -> TaskOutput {
    let k = cfg.k;
    let attempt = || -> Result<(TrialRecord, Trained)> {
        let target = target_for(cfg.kind, task.d, k)?;
        let (train_src, target_src) =
            sources(&target, &cfg.distribution, &cfg.test_distribution, task)?;
        let tc = TrainConfig {
            seed: task.seed,
            ..cfg.train.clone()
        };
        let run = train_network(&tc, &train_src, &target_src)?;
        let mut rec = task.record(k, None);
        train_metrics(&mut rec, &run);
        if let Some(t) = tc.stop_below {
            match samples_to_threshold(run.rows(), t, tc.stop_patience) {
                Some(s) => {
                    rec.metrics.insert("samples_to_threshold".into(), s as f64);
                }
                None => rec.status = TrialStatus::NonConverged,
            }
        }
        Ok((rec, run))
    };
    match attempt() {
        Ok((rec, run)) => TaskOutput {
            records: vec![rec],
            csv: vec![("metrics.csv".into(), csv_rows(run.rows(), task, k))],
            series: vec![curve(
                format!("eta={} trial {}", task.eta, task.trial),
                run.rows(),
            )],
        },
        Err(e) => TaskOutput {
            records: vec![task.failed(k, None, &e)],
            csv: vec![("metrics.csv".into(), Vec::new())],
            ..TaskOutput::default()
        },
    }
}

pub(crate) const PANEL_ARMS: [&str; 3] = ["uniform", "mixture", "shifted"];

fn transfer_panel(cfg: &ExperimentConfig, task: &Task) -> TaskOutput {
    let k = cfg.k;
    let mut out = TaskOutput::default();
    for arm in PANEL_ARMS {
        let attempt = || -> Result<(TrialRecord, Trained)> {
            let d = task.d;
            let mu = cfg.panel.mu;
            let target: Target = ParityTarget::prefix(d, k)?.into();
            let spec = match arm {
                "uniform" => DistributionSpec::named("uniform"),
                "mixture" => DistributionSpec::named("bias-mixture").with_mu(mu),
                _ => DistributionSpec::named("product").with_mu(mu),
            };
            let (train_src, d0) =
                sources(&target, &spec, &DistributionSpec::named("uniform"), task)?;
            let dmu = d0.with_dist(build_named_distribution(
                &DistributionSpec::named("product").with_mu(mu),
                d,
                &mut split(task.seed, 1),
            )?)?;
            let tc = TrainConfig {
                seed: task.seed,
                ..cfg.train.clone()
            };
            let run = train_network(&tc, &train_src, &d0)?;
            let n = cfg.budget.test_points;
            let e0 = run.error(&TestSet::draw(&d0, n, &mut split(task.seed, 20)));
            let emu = run.error(&TestSet::draw(&dmu, n, &mut split(task.seed, 21)));
            let mut rec = task.record(k, Some(arm));
            train_metrics(&mut rec, &run);
            rec.metrics.insert("error_d0".into(), e0);
            rec.metrics.insert("error_dmu".into(), emu);
            Ok((rec, run))
        };
        let file = format!("metrics-{arm}.csv");
        match attempt() {
            Ok((rec, run)) => {
                out.records.push(rec);
                out.csv.push((file, csv_rows(run.rows(), task, k)));
                out.series.push(curve(
                    format!("{arm} eta={} trial {}", task.eta, task.trial),
                    run.rows(),
                ));
            }
            Err(e) => {
                out.records.push(task.failed(k, Some(arm), &e));
                out.csv.push((file, Vec::new()));
            }
        }
    }
    out
}

pub(crate) const SWEEP_ARMS: [&str; 2] = ["pds", "no-pds"];

fn sweep_point(cfg: &ExperimentConfig, task: &Task) -> TaskOutput {
    let k = cfg.k;
    let s = &cfg.sweep;
    let threshold = task.eta + s.threshold_offset;
    let mut out = TaskOutput::default();
    for arm in SWEEP_ARMS {
        let spec = if arm == "pds" { &s.pds } else { &s.no_pds };
        let attempt = || -> Result<(TrialRecord, Trained)> {
            let target = target_for(cfg.kind, task.d, k)?;
            let (train_src, target_src) = sources(&target, spec, &cfg.test_distribution, task)?;
            let tc = TrainConfig {
                seed: task.seed,
                stop_below: Some(threshold),
                stop_patience: s.consecutive,
                early_stop_loss: None,
                ..cfg.train.clone()
            };
            let run = train_network(&tc, &train_src, &target_src)?;
            let mut rec = task.record(k, Some(arm));
            train_metrics(&mut rec, &run);
            rec.metrics.insert("threshold".into(), threshold);
            match samples_to_threshold(run.rows(), threshold, s.consecutive) {
                Some(v) => {
                    rec.metrics.insert("samples_to_threshold".into(), v as f64);
                }
                None => rec.status = TrialStatus::NonConverged,
            }
            Ok((rec, run))
        };
        let file = format!("metrics-{arm}.csv");
        match attempt() {
            Ok((rec, run)) => {
                out.records.push(rec);
                out.csv.push((file, csv_rows(run.rows(), task, k)));
            }
            Err(e) => {
                out.records.push(task.failed(k, Some(arm), &e));
                out.csv.push((file, Vec::new()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: u64, err: f64) -> MetricsRow {
        MetricsRow {
            step,
            samples_seen: step * 10,
            train_loss: 0.0,
            test_error_target: err,
            test_error_train_dist: err,
            wall_ms: 0,
        }
    }

    #[test]
    fn threshold_scan_needs_consecutive_evals() {
        let rows = vec![
            row(0, 0.5),
            row(1, 0.0),
            row(2, 0.3),
            row(3, 0.01),
            row(4, 0.0),
            row(5, 0.005),
        ];
        assert_eq!(samples_to_threshold(&rows, 0.01, 3), Some(30));
        assert_eq!(samples_to_threshold(&rows, 0.01, 1), Some(10));
        assert_eq!(samples_to_threshold(&rows, 0.001, 1), Some(10));
        assert_eq!(samples_to_threshold(&rows, 0.01, 4), None);
        assert_eq!(samples_to_threshold(&[], 0.01, 3), None);
    }

    #[test]
    fn junta_equality_is_functional() {
        let a = JuntaTarget::from_fn(6, vec![1, 3], |z| z[0]).unwrap();
        let b = JuntaTarget::from_fn(6, vec![1], |z| z[0]).unwrap();
        assert!(same_junta(&a, &b));
        let c = JuntaTarget::from_fn(6, vec![2], |z| z[0]).unwrap();
        assert!(!same_junta(&b, &c));
        assert!(same_junta(&b, &b));
    }
}
