use serde::{Deserialize, Serialize};

use super::loss::Loss;
use crate::error::{Error, Result};

/// Parameter initialization scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
#[derive(Default)]
pub enum Init {
    /// Every layer uniform in `±1/sqrt(fan_in)`.
    #[default]
    StandardUniform,
    /// `4d + 6` neurons covering every `(a, b)` pair with `a in {±1}`,
    /// `b in {-d-1, ..., d+1}`, and `W = 0`.
    LayerwiseL1,
    /// `W = 0`, `b = kappa`, `a = ±kappa`; biases are redrawn from
    /// `Unif[-bias_range, bias_range]` after the first-layer step.
    LayerwiseCov { kappa: f64, bias_range: f64 },
}

/// Hyperparameters shared by all trainers. Fields a trainer does not use are
/// ignored by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: Loss,
    /// Constant learning rate of the joint SGD trainer.
    pub lr: f64,
    pub batch: usize,
    /// Joint SGD steps, or second-layer steps of the layerwise trainers.
    pub steps: usize,
    /// First-layer l1 weight; `None` derives it from exact moments.
    pub l1_first_layer: Option<f64>,
    /// Second-layer ridge weight.
    pub l2_second_layer: f64,
    /// First-layer step (the l1 trainer's `s1`, the covariance trainer's
    /// `gamma`); `None` means automatic.
    pub first_layer_step: Option<f64>,
    /// Second-layer step; `None` means automatic.
    pub second_layer_step: Option<f64>,
    /// Samples for the first-layer gradient; `None` uses the exact
    /// population gradient.
    pub first_layer_samples: Option<usize>,
    pub width: usize,
    /// Hidden widths of a deeper network; empty selects the two-layer net.
    pub hidden_layers: Vec<usize>,
    pub init: Init,
    pub eval_every: usize,
    pub test_size: usize,
    pub seed: u64,
    /// Draw a fresh batch every step; otherwise cycle through a fixed pool of
    /// `train_pool` samples.
    pub fresh_samples: bool,
    pub train_pool: usize,
    /// Stop once the mean training loss since the last evaluation is below
    /// this value.
    pub early_stop_loss: Option<f64>,
    /// Stop once the target test error is at most this value for
    /// `stop_patience` consecutive evaluations.
    pub stop_below: Option<f64>,
    pub stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: Loss::Square,
            lr: 0.01,
            batch: 64,
            steps: 1_000_000,
            l1_first_layer: None,
            l2_second_layer: 0.0,
            first_layer_step: None,
            second_layer_step: None,
            first_layer_samples: None,
            width: 512,
            hidden_layers: Vec::new(),
            init: Init::StandardUniform,
            eval_every: 1000,
            test_size: 8192,
            seed: 0,
            fresh_samples: true,
            train_pool: 0,
            early_stop_loss: Some(0.01),
            stop_below: None,
            stop_patience: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(format!("train.{field}"), msg));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(
                "lr",
                format!("must be a finite nonnegative number, got {}", self.lr),
            );
        }
        if self.batch == 0 {
            return bad("batch", "must be at least 1".into());
        }
        if self.width == 0 {
            return bad("width", "must be at least 1".into());
        }
        if self.hidden_layers.contains(&0) {
            return bad("hidden_layers", "widths must be positive".into());
        }
        if self.eval_every == 0 {
            return bad("eval_every", "must be at least 1".into());
        }
        if self.test_size == 0 {
            return bad("test_size", "must be at least 1".into());
        }
        if !self.fresh_samples && self.train_pool == 0 {
            return bad(
                "train_pool",
                "must be positive when fresh_samples is false".into(),
            );
        }
        if !(self.l2_second_layer >= 0.0) {
            return bad("l2_second_layer", "must be nonnegative".into());
        }
        for (field, v) in [
            ("l1_first_layer", self.l1_first_layer),
            ("first_layer_step", self.first_layer_step),
            ("second_layer_step", self.second_layer_step),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return bad(field, format!("must be finite and nonnegative, got {v}"));
                }
            }
        }
        if self.first_layer_samples == Some(0) {
            return bad("first_layer_samples", "must be positive when given".into());
        }
        if self.stop_below.is_some() && self.stop_patience == 0 {
            return bad("stop_patience", "must be at least 1".into());
        }
        match self.loss {
            Loss::Covariance { c, radius } if !(c > 0.0 && radius > 0.0) => {
                return bad("loss", "covariance loss needs positive c and radius".into());
            }
            _ => {}
        }
        match self.init {
            Init::LayerwiseCov { kappa, bias_range } if !(kappa > 0.0 && bias_range >= kappa) => {
                bad(
                    "init",
                    format!("need kappa > 0 and bias_range >= kappa, got {kappa}, {bias_range}"),
                )
            }
            _ => Ok(()),
        }
    }
}

/// One evaluation record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub samples_seen: u64,
    pub train_loss: f64,
    pub test_error_target: f64,
    pub test_error_train_dist: f64,
    pub wall_ms: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Budget,
    LowTrainLoss,
    BelowThreshold,
}

/// A trained model with its evaluation trace.
#[derive(Clone, Debug)]
pub struct TrainRun<M> {
    pub model: M,
    pub rows: Vec<MetricsRow>,
    pub stop: StopReason,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_parse() {
        TrainConfig::default().validate().unwrap();
        let cfg: TrainConfig = toml::from_str(
            "lr = 0.05\nwidth = 16\n[loss]\nkind = \"covariance\"\nc = 2.0\nradius = 5.0\n[init]\nkind = \"layerwise-cov\"\nkappa = 1.0\nbias_range = 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.width, 16);
        assert_eq!(
            cfg.loss,
            Loss::Covariance {
                c: 2.0,
                radius: 5.0
            }
        );
        cfg.validate().unwrap();
        assert!(toml::from_str::<TrainConfig>("bogus = 1").is_err());
    }

    #[test]
    fn rejects_bad_fields() {
        let cfg = TrainConfig {
            batch: 0,
            ..TrainConfig::default()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("batch"), "{err}");
    }
}
