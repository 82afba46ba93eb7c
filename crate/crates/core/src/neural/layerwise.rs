use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{Init, StopReason, TrainConfig, TrainRun};
use super::loss::{soft_threshold, Loss};
use super::net::TwoLayerNet;
use super::train::{check_label_mean, BatchSource, Recorder, STREAM_INIT, STREAM_TRAIN};
use crate::boolean::Target;
use crate::distributions::{exact_moment, LabeledSource};
use crate::error::{Error, Result};
use crate::rng::{split, Rng};

/// First-layer hyperparameters of the l1 trainer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Step {
    pub lambda1: f64,
    pub s1: f64,
}

/// Derives `lambda1` and `s1` from the exact correlations `c_i = E[y x_i]`
/// of a parity source so that the prox step maps every neuron with
/// `b >= 0` to `a * 1_S` and every other neuron to zero.
///
/// With `c_in = min_{i in S} |c_i|` and `c_out = max_{i not in S} |c_i|`,
/// the gradient magnitudes are `2 c_in` and `2 c_out`; the threshold sits at
/// their midpoint, `lambda1 = c_in + c_out`, and `s1 = 1 / (c_in - c_out)`
/// scales the surviving weights to one.
pub fn auto_l1_step(src: &LabeledSource) -> Result<L1Step> {
    let support = match src.target() {
        Target::Parity(p) => p.support().to_vec(),
        other => {
            return Err(Error::Unsupported(format!(
                "automatic l1 step needs a parity target, got a {}",
                other.family()
            )))
        }
    };
    let mut c_in = f64::INFINITY;
    let mut c_out = 0.0f64;
    for i in 0..src.dim() {
        let c = exact_moment(src, Some(i))?.abs();
        if support.binary_search(&i).is_ok() {
            c_in = c_in.min(c);
        } else {
            c_out = c_out.max(c);
        }
    }
    if support.is_empty() || c_in <= c_out {
        return Err(Error::Unsupported(format!(
            "source does not separate the support: in-support correlation {c_in}, outside {c_out}"
        )));
    }
    Ok(L1Step {
        lambda1: c_in + c_out,
        s1: 1.0 / (c_in - c_out),
    })
}

/// Squared-loss first-layer gradient at a zero-output initialization,
/// `G_j = -2 a_j 1[b_j >= 0] E[y x]`, as a `width x dim` row-major block.
/// `samples = None` uses exact moments; otherwise an empirical mean over that
/// many draws.
pub fn l1_first_layer_gradient(
    net: &TwoLayerNet,
    src: &LabeledSource,
    samples: Option<usize>,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let d = net.dim();
    if d != src.dim() {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: src.dim(),
        });
    }
    if net.w().iter().any(|&w| w != 0.0) {
        return Err(Error::arg("first-layer gradient formula assumes W = 0"));
    }
    let corr: Vec<f64> = match samples {
        None => (0..d)
            .map(|i| exact_moment(src, Some(i)))
            .collect::<Result<_>>()?,
        Some(m) => {
            let mut sums = vec![0i64; d];
            let mut x = vec![0i8; d];
            for _ in 0..m {
                let y = i64::from(src.sample_one(rng, &mut x));
                for (s, &xi) in sums.iter_mut().zip(&x) {
                    *s += y * i64::from(xi);
                }
            }
            sums.iter().map(|&s| s as f64 / m as f64).collect()
        }
    };
    let mut g = vec![0.0; net.width() * d];
    for (j, row) in g.chunks_exact_mut(d).enumerate() {
        if net.b()[j] >= 0.0 {
            let scale = -2.0 * net.a()[j];
            for (gi, &c) in row.iter_mut().zip(&corr) {
                *gi = scale * c;
            }
        }
    }
    Ok(g)
}

/// `W <- rho_{s1 lambda1}(W - s1 G)`.
pub fn l1_prox_step(net: &mut TwoLayerNet, grad: &[f64], step: L1Step) {
    let t = step.s1 * step.lambda1;
    for (w, &g) in net.w_mut().iter_mut().zip(grad) {
        *w = soft_threshold(*w - step.s1 * g, t);
    }
}

/// `a <- (1 - lambda2 s2) a + s2 (y - <a, phi>) phi`; returns the residual
/// before the update.
pub fn online_ridge_step(a: &mut [f64], phi: &[f64], y: f64, lambda2: f64, s2: f64) -> f64 {
    let resid = y - a.iter().zip(phi).map(|(u, v)| u * v).sum::<f64>();
    let shrink = 1.0 - lambda2 * s2;
    for (u, &v) in a.iter_mut().zip(phi) {
        *u = shrink * *u + s2 * resid * v;
    }
    resid
}

/// Upper bound on `||phi(x)||^2` over the cube.
fn feature_norm_bound(net: &TwoLayerNet) -> f64 {
    (0..net.width())
        .map(|j| {
            let l1: f64 = net.row(j).iter().map(|w| w.abs()).sum();
            (l1 + net.b()[j]).max(0.0).powi(2)
        })
        .sum()
}

/// Layerwise training with an l1 first-layer step: one proximal gradient
/// step on `W` from the `4d + 6` neuron initialization, then online ridge
/// SGD on `a` with `W`, `b` frozen, one fresh sample per step for
/// `cfg.steps` steps.
pub fn layerwise_parity_l1(
    cfg: &TrainConfig,
    train_src: &LabeledSource,
    target_src: &LabeledSource,
) -> Result<TrainRun<TwoLayerNet>> {
    cfg.validate()?;
    if cfg.init != Init::LayerwiseL1 {
        return Err(Error::config(
            "train.init",
            "the l1 layerwise trainer needs init kind layerwise-l1",
        ));
    }
    let d = train_src.dim();
    let mut net = TwoLayerNet::layerwise_l1_init(d)?;
    let mut rec = Recorder::new(cfg, train_src, target_src)?;
    let mut batches = BatchSource::new(cfg, train_src, split(cfg.seed, STREAM_TRAIN));

    let step = match (cfg.l1_first_layer, cfg.first_layer_step) {
        (Some(lambda1), Some(s1)) => L1Step { lambda1, s1 },
        (l, s) => {
            let auto = auto_l1_step(train_src)?;
            L1Step {
                lambda1: l.unwrap_or(auto.lambda1),
                s1: s.unwrap_or(auto.s1),
            }
        }
    };
    let grad = l1_first_layer_gradient(&net, train_src, cfg.first_layer_samples, batches.rng())?;
    l1_prox_step(&mut net, &grad, step);
    let m1 = cfg.first_layer_samples.unwrap_or(0) as u64;

    let s2 = match cfg.second_layer_step {
        Some(s) => s,
        None => 0.25 / feature_norm_bound(&net).max(1.0),
    };
    let mut ws = Default::default();
    let row = rec.record(&net, &mut ws, Loss::Square, 0, m1);
    if let Some(stop) = rec.should_stop(cfg, &row, false) {
        return Ok(TrainRun {
            model: net,
            rows: rec.rows,
            stop,
        });
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut phi = Vec::new();
    let mut a = net.a().to_vec();
    for t in 1..=cfg.steps {
        batches.next(1, &mut x, &mut y);
        net.features_batch(&x, 1, &mut phi);
        let resid = online_ridge_step(&mut a, &phi, y[0], cfg.l2_second_layer, s2);
        let loss = resid * resid;
        if !loss.is_finite() {
            return Err(Error::Divergence { step: t });
        }
        rec.add_loss(loss);
        if t % cfg.eval_every == 0 || t == cfg.steps {
            net.a_mut().copy_from_slice(&a);
            let row = rec.record(&net, &mut ws, Loss::Square, t as u64, m1 + t as u64);
            if let Some(stop) = rec.should_stop(cfg, &row, true) {
                return Ok(TrainRun {
                    model: net,
                    rows: rec.rows,
                    stop,
                });
            }
        }
    }
    net.a_mut().copy_from_slice(&a);
    Ok(TrainRun {
        model: net,
        rows: rec.rows,
        stop: StopReason::Budget,
    })
}

/// Covariance-loss first-layer gradient at the layerwise-cov initialization,
/// with the label mean it used. `samples = None` uses exact moments:
/// `E[(1 - c y ybar) y x] = E[y x] - c ybar E[x]`.
pub fn cov_first_layer_gradient(
    net: &TwoLayerNet,
    src: &LabeledSource,
    c: f64,
    samples: Option<usize>,
    rng: &mut Rng,
) -> Result<(Vec<f64>, f64)> {
    let d = net.dim();
    if d != src.dim() {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: src.dim(),
        });
    }
    if net.w().iter().any(|&w| w != 0.0) {
        return Err(Error::arg("covariance first-layer formula assumes W = 0"));
    }
    let (v, ybar) = match samples {
        None => {
            let ybar = exact_moment(src, None)?;
            check_label_mean(Loss::Covariance { c, radius: 1.0 }, ybar)?;
            let v =
                (0..d)
                    .map(|i| {
                        Ok(exact_moment(src, Some(i))?
                            - c * ybar * src.dist().parity_expectation(&[i]))
                    })
                    .collect::<Result<Vec<f64>>>()?;
            (v, ybar)
        }
        Some(m) => {
            let (xs, ys) = src.sample(rng, m);
            let ybar = ys.iter().map(|&y| f64::from(y)).sum::<f64>() / m as f64;
            check_label_mean(Loss::Covariance { c, radius: 1.0 }, ybar)?;
            let mut v = vec![0.0; d];
            for (x, &y) in xs.rows().zip(&ys) {
                let wgt = (1.0 - c * f64::from(y) * ybar) * f64::from(y);
                for (vi, &xi) in v.iter_mut().zip(x) {
                    *vi += wgt * f64::from(xi);
                }
            }
            for vi in &mut v {
                *vi /= m as f64;
            }
            (v, ybar)
        }
    };
    // At f = 0 the hinge is active with slope -y on every sample.
    let mut g = vec![0.0; net.width() * d];
    for (j, row) in g.chunks_exact_mut(d).enumerate() {
        if net.b()[j] > 0.0 {
            for (gi, &vi) in row.iter_mut().zip(&v) {
                *gi = -net.a()[j] * vi;
            }
        }
    }
    Ok((g, ybar))
}

/// Layerwise training with the covariance loss: one gradient step of size
/// `gamma` on `W`, biases redrawn from `Unif[-L, L]`, then projected SGD on
/// `a` (from zero, onto the ball of radius `B`) with the first-step label
/// mean held fixed. The returned network carries the averaged second layer.
pub fn layerwise_junta_cov(
    cfg: &TrainConfig,
    train_src: &LabeledSource,
    target_src: &LabeledSource,
) -> Result<TrainRun<TwoLayerNet>> {
    cfg.validate()?;
    let (kappa, bias_range) = match cfg.init {
        Init::LayerwiseCov { kappa, bias_range } => (kappa, bias_range),
        _ => {
            return Err(Error::config(
                "train.init",
                "the covariance layerwise trainer needs init kind layerwise-cov",
            ))
        }
    };
    let (c, radius) = match cfg.loss {
        Loss::Covariance { c, radius } => (c, radius),
        _ => {
            return Err(Error::config(
                "train.loss",
                "the covariance layerwise trainer needs the covariance loss",
            ))
        }
    };
    if let Target::Junta(j) = train_src.target() {
        if j.uniform_mean() != 0.0 {
            eprintln!("warning: junta target is not balanced under the uniform distribution");
        }
    }
    let d = train_src.dim();
    let mut net = TwoLayerNet::layerwise_cov_init(cfg.width, d, kappa)?;
    let mut init_rng = split(cfg.seed, STREAM_INIT);
    let mut rec = Recorder::new(cfg, train_src, target_src)?;
    let mut batches = BatchSource::new(cfg, train_src, split(cfg.seed, STREAM_TRAIN));
    let loss = cfg.loss;

    let gamma = cfg.first_layer_step.unwrap_or(1.0);
    let (grad, ybar) =
        cov_first_layer_gradient(&net, train_src, c, cfg.first_layer_samples, batches.rng())?;
    for (w, g) in net.w_mut().iter_mut().zip(&grad) {
        *w -= gamma * g;
    }
    for b in net.b_mut() {
        *b = init_rng.random_range(-bias_range..=bias_range);
    }
    net.a_mut().fill(0.0);
    let m1 = cfg.first_layer_samples.unwrap_or(0) as u64;

    let steps = cfg.steps.max(1) as f64;
    let lipschitz = (1.0 + c * ybar.abs()) * feature_norm_bound(&net).sqrt();
    let s2 = match cfg.second_layer_step {
        Some(s) => s,
        None => radius / (lipschitz.max(1e-12) * steps.sqrt()),
    };
    let mut ws = Default::default();
    let row = rec.record(&net, &mut ws, loss, 0, m1);
    if let Some(stop) = rec.should_stop(cfg, &row, false) {
        return Ok(TrainRun {
            model: net,
            rows: rec.rows,
            stop,
        });
    }

    let n = net.width();
    let bsz = cfg.batch;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut phi = Vec::new();
    let mut a = vec![0.0; n];
    let mut a_sum = vec![0.0; n];
    let mut grad_a = vec![0.0; n];
    for t in 1..=cfg.steps {
        batches.next(bsz, &mut x, &mut y);
        net.features_batch(&x, bsz, &mut phi);
        grad_a.fill(0.0);
        let mut total = 0.0;
        for r in 0..bsz {
            let feats = &phi[r * n..(r + 1) * n];
            let f: f64 = feats.iter().zip(&a).map(|(p, u)| p * u).sum();
            total += loss.value(f, y[r], ybar);
            let dl = loss.derivative(f, y[r], ybar) / bsz as f64;
            if dl != 0.0 {
                for (g, &p) in grad_a.iter_mut().zip(feats) {
                    *g += dl * p;
                }
            }
        }
        let mean = total / bsz as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence { step: t });
        }
        rec.add_loss(mean);
        for (u, g) in a.iter_mut().zip(&grad_a) {
            *u -= s2 * g;
        }
        let norm = a.iter().map(|u| u * u).sum::<f64>().sqrt();
        if norm > radius {
            let scale = radius / norm;
            for u in &mut a {
                *u *= scale;
            }
        }
        for (s, u) in a_sum.iter_mut().zip(&a) {
            *s += u;
        }
        if t % cfg.eval_every == 0 || t == cfg.steps {
            for (dst, s) in net.a_mut().iter_mut().zip(&a_sum) {
                *dst = s / t as f64;
            }
            let row = rec.record(&net, &mut ws, loss, t as u64, m1 + (t * bsz) as u64);
            if let Some(stop) = rec.should_stop(cfg, &row, true) {
                return Ok(TrainRun {
                    model: net,
                    rows: rec.rows,
                    stop,
                });
            }
        }
    }
    Ok(TrainRun {
        model: net,
        rows: rec.rows,
        stop: StopReason::Budget,
    })
}
