use std::time::Instant;

use super::config::{Init, MetricsRow, StopReason, TrainConfig, TrainRun};
use super::eval::TestSet;
use super::loss::Loss;
use super::mlp::Mlp;
use super::net::{Model, TwoLayerNet};
use crate::boolean::InputBatch;
use crate::distributions::LabeledSource;
use crate::error::{Error, Result};
use crate::rng::{split, Rng};

pub(crate) const STREAM_INIT: u64 = 0;
pub(crate) const STREAM_TRAIN: u64 = 1;
pub(crate) const STREAM_TEST_TARGET: u64 = 2;
pub(crate) const STREAM_TEST_TRAIN: u64 = 3;

/// Fixed test sets on the target and training distributions plus the running
/// bookkeeping shared by every trainer.
pub(crate) struct Recorder {
    target: TestSet,
    train: TestSet,
    start: Instant,
    loss_sum: f64,
    loss_count: usize,
    below: usize,
    pub rows: Vec<MetricsRow>,
}

impl Recorder {
    pub fn new(
        cfg: &TrainConfig,
        train_src: &LabeledSource,
        target_src: &LabeledSource,
    ) -> Result<Self> {
        if train_src.dim() != target_src.dim() {
            return Err(Error::DimensionMismatch {
                expected: train_src.dim(),
                got: target_src.dim(),
            });
        }
        Ok(Self {
            target: TestSet::draw(
                target_src,
                cfg.test_size,
                &mut split(cfg.seed, STREAM_TEST_TARGET),
            ),
            train: TestSet::draw(
                train_src,
                cfg.test_size,
                &mut split(cfg.seed, STREAM_TEST_TRAIN),
            ),
            start: Instant::now(),
            loss_sum: 0.0,
            loss_count: 0,
            below: 0,
            rows: Vec::new(),
        })
    }

    pub fn add_loss(&mut self, v: f64) {
        self.loss_sum += v;
        self.loss_count += 1;
    }

    /// Records a row; the training loss is the mean since the previous row,
    /// or the loss on the training-distribution test set when nothing was
    /// accumulated.
    pub fn record<M: Model>(
        &mut self,
        model: &M,
        ws: &mut M::Workspace,
        loss: Loss,
        step: u64,
        samples_seen: u64,
    ) -> MetricsRow {
        let train_loss = if self.loss_count == 0 {
            self.train.mean_loss(model, loss, ws)
        } else {
            self.loss_sum / self.loss_count as f64
        };
        self.loss_sum = 0.0;
        self.loss_count = 0;
        let row = MetricsRow {
            step,
            samples_seen,
            train_loss,
            test_error_target: self.target.error(model, ws),
            test_error_train_dist: self.train.error(model, ws),
            wall_ms: self.start.elapsed().as_millis() as u64,
        };
        self.rows.push(row.clone());
        row
    }

    /// Applies the early-stop rules to the latest row.
    pub fn should_stop(
        &mut self,
        cfg: &TrainConfig,
        row: &MetricsRow,
        had_steps: bool,
    ) -> Option<StopReason> {
        if let Some(threshold) = cfg.stop_below {
            if row.test_error_target <= threshold {
                self.below += 1;
            } else {
                self.below = 0;
            }
            if self.below >= cfg.stop_patience {
                return Some(StopReason::BelowThreshold);
            }
        }
        match cfg.early_stop_loss {
            Some(limit) if had_steps && row.train_loss < limit => Some(StopReason::LowTrainLoss),
            _ => None,
        }
    }
}

/// Draws training batches, fresh or from a fixed pool.
pub(crate) struct BatchSource<'a> {
    src: &'a LabeledSource,
    rng: Rng,
    pool: Option<(InputBatch, Vec<i8>)>,
    cursor: usize,
    xs: InputBatch,
    ys: Vec<i8>,
}

impl<'a> BatchSource<'a> {
    pub fn new(cfg: &TrainConfig, src: &'a LabeledSource, rng: Rng) -> Self {
        let mut rng = rng;
        let pool = (!cfg.fresh_samples).then(|| src.sample(&mut rng, cfg.train_pool));
        Self {
            src,
            rng,
            pool,
            cursor: 0,
            xs: InputBatch::new(src.dim()),
            ys: Vec::new(),
        }
    }

    pub fn next(&mut self, n: usize, x: &mut Vec<f64>, y: &mut Vec<f64>) {
        match &self.pool {
            None => {
                self.src
                    .sample_into(&mut self.rng, n, &mut self.xs, &mut self.ys);
                self.xs.write_f64(x);
                y.clear();
                y.extend(self.ys.iter().map(|&v| f64::from(v)));
            }
            Some((px, py)) => {
                x.clear();
                y.clear();
                for _ in 0..n {
                    let i = self.cursor % py.len();
                    x.extend(px.row(i).iter().map(|&v| f64::from(v)));
                    y.push(f64::from(py[i]));
                    self.cursor += 1;
                }
            }
        }
    }

    pub fn rng(&mut self) -> &mut Rng {
        &mut self.rng
    }
}

pub(crate) fn check_label_mean(loss: Loss, ybar: f64) -> Result<()> {
    if let Loss::Covariance { c, .. } = loss {
        if c * ybar.abs() >= 1.0 {
            return Err(Error::InvalidCovarianceWeight {
                value: c * ybar.abs(),
            });
        }
    }
    Ok(())
}

/// Minibatch SGD on all parameters with a constant learning rate.
pub fn train_sgd<M: Model>(
    mut model: M,
    cfg: &TrainConfig,
    train_src: &LabeledSource,
    target_src: &LabeledSource,
) -> Result<TrainRun<M>> {
    cfg.validate()?;
    if model.input_dim() != train_src.dim() {
        return Err(Error::DimensionMismatch {
            expected: train_src.dim(),
            got: model.input_dim(),
        });
    }
    let mut rec = Recorder::new(cfg, train_src, target_src)?;
    let mut batches = BatchSource::new(cfg, train_src, split(cfg.seed, STREAM_TRAIN));
    let mut ws = M::Workspace::default();
    let b = cfg.batch;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut out = vec![0.0; b];
    let mut g = vec![0.0; b];
    let mut grad = vec![0.0; model.num_params()];

    let row = rec.record(&model, &mut ws, cfg.loss, 0, 0);
    if let Some(stop) = rec.should_stop(cfg, &row, false) {
        return Ok(TrainRun {
            model,
            rows: rec.rows,
            stop,
        });
    }
    for step in 1..=cfg.steps {
        batches.next(b, &mut x, &mut y);
        model.forward_batch(&x, b, &mut out, &mut ws);
        let ybar = if cfg.loss.uses_label_mean() {
            let m = y.iter().sum::<f64>() / b as f64;
            check_label_mean(cfg.loss, m)?;
            m
        } else {
            0.0
        };
        let mut total = 0.0;
        for r in 0..b {
            total += cfg.loss.value(out[r], y[r], ybar);
            g[r] = cfg.loss.derivative(out[r], y[r], ybar) / b as f64;
        }
        let mean = total / b as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence { step });
        }
        rec.add_loss(mean);
        model.backward(&x, b, &g, &mut ws, &mut grad);
        model.axpy(-cfg.lr, &grad);
        if step % cfg.eval_every == 0 || step == cfg.steps {
            let row = rec.record(&model, &mut ws, cfg.loss, step as u64, (step * b) as u64);
            if let Some(stop) = rec.should_stop(cfg, &row, true) {
                return Ok(TrainRun {
                    model,
                    rows: rec.rows,
                    stop,
                });
            }
        }
    }
    Ok(TrainRun {
        model,
        rows: rec.rows,
        stop: StopReason::Budget,
    })
}

/// Joint SGD on a standard-uniform two-layer network of width `cfg.width`.
pub fn train_joint_sgd(
    cfg: &TrainConfig,
    train_src: &LabeledSource,
    target_src: &LabeledSource,
) -> Result<TrainRun<TwoLayerNet>> {
    cfg.validate()?;
    if cfg.init != Init::StandardUniform {
        return Err(Error::Unsupported(format!(
            "joint SGD uses the standard-uniform init, got {:?}",
            cfg.init
        )));
    }
    let net = TwoLayerNet::standard_uniform(
        cfg.width,
        train_src.dim(),
        &mut split(cfg.seed, STREAM_INIT),
    )?;
    train_sgd(net, cfg, train_src, target_src)
}

/// Joint SGD on a standard-uniform network with hidden widths
/// `cfg.hidden_layers`.
pub fn train_mlp_sgd(
    cfg: &TrainConfig,
    train_src: &LabeledSource,
    target_src: &LabeledSource,
) -> Result<TrainRun<Mlp>> {
    cfg.validate()?;
    if cfg.hidden_layers.is_empty() {
        return Err(Error::config(
            "train.hidden_layers",
            "needs at least one hidden width",
        ));
    }
    let net = Mlp::standard_uniform(
        train_src.dim(),
        &cfg.hidden_layers,
        &mut split(cfg.seed, STREAM_INIT),
    )?;
    train_sgd(net, cfg, train_src, target_src)
}
