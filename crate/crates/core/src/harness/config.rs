use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{CsqMode, QueryForm};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::neural::TrainConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ParityCorrelation,
    JuntaCsq,
    TrainParity,
    TrainJunta,
    FpdsCodec,
    NamqReduction,
    TransferPanel,
    Sweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::ParityCorrelation,
        ExperimentKind::JuntaCsq,
        ExperimentKind::TrainParity,
        ExperimentKind::TrainJunta,
        ExperimentKind::FpdsCodec,
        ExperimentKind::NamqReduction,
        ExperimentKind::TransferPanel,
        ExperimentKind::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ParityCorrelation => "parity-correlation",
            ExperimentKind::JuntaCsq => "junta-csq",
            ExperimentKind::TrainParity => "train-parity",
            ExperimentKind::TrainJunta => "train-junta",
            ExperimentKind::FpdsCodec => "fpds-codec",
            ExperimentKind::NamqReduction => "namq-reduction",
            ExperimentKind::TransferPanel => "transfer-panel",
            ExperimentKind::Sweep => "sweep",
        }
    }

    /// Kinds that train networks and therefore read `[train]`.
    pub fn is_neural(self) -> bool {
        matches!(
            self,
            ExperimentKind::TrainParity
                | ExperimentKind::TrainJunta
                | ExperimentKind::TransferPanel
                | ExperimentKind::Sweep
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    /// Labeled samples per trial for the sample-based kinds; 0 selects the
    /// kind's own default where one exists.
    pub samples: usize,
    /// Fresh test points for agreement and error measurements.
    pub test_points: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            samples: 0,
            test_points: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsqSettings {
    pub oracle: CsqMode,
    pub form: QueryForm,
}

impl Default for CsqSettings {
    fn default() -> Self {
        Self {
            oracle: CsqMode::Exact,
            form: QueryForm::Direct,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecSettings {
    /// Transmit a random payload of this many bits instead of a circuit.
    pub payload_bits: Option<usize>,
    pub inputs: usize,
    pub gates: usize,
    pub mixture_weight: f64,
    /// Failure probability used to size the sample when `budget.samples` is 0.
    pub eps: f64,
}

impl Default for CodecSettings {
    fn default() -> Self {
        Self {
            payload_bits: None,
            inputs: 10,
            gates: 50,
            mixture_weight: 0.5,
            eps: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionSettings {
    pub delta: f64,
    pub c: f64,
    /// Query batch size of the wrapped correlation learner.
    pub queries: usize,
    /// Label queries with noise keyed on the point, so that repeated draws of
    /// a point agree and the direct and reduced transcripts can be compared.
    pub keyed_noise: bool,
}

impl Default for ReductionSettings {
    fn default() -> Self {
        Self {
            delta: 0.1,
            c: 1.0,
            queries: 20_000,
            keyed_noise: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSettings {
    /// Bias of the shifted product distribution.
    pub mu: f64,
}

impl Default for PanelSettings {
    fn default() -> Self {
        Self { mu: 0.96 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub dims: Vec<usize>,
    /// Threshold is the Bayes error `eta` plus this offset.
    pub threshold_offset: f64,
    /// Consecutive evaluations at or below the threshold.
    pub consecutive: usize,
    pub pds: DistributionSpec,
    pub no_pds: DistributionSpec,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            dims: Vec::new(),
            threshold_offset: 0.01,
            consecutive: 3,
            pds: DistributionSpec::named("random-bias-mixture"),
            no_pds: DistributionSpec::named("uniform"),
        }
    }
}

fn default_eta() -> Vec<f64> {
    vec![0.0]
}

fn default_trials() -> usize {
    1
}

fn uniform() -> DistributionSpec {
    DistributionSpec::named("uniform")
}

/// One experiment, as read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub d: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default = "default_eta")]
    pub eta: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output root; `PDSLAB_OUT` or `runs` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Training (or design) distribution.
    #[serde(default = "uniform")]
    pub distribution: DistributionSpec,
    /// Distribution the error is measured on.
    #[serde(default = "uniform")]
    pub test_distribution: DistributionSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub csq: CsqSettings,
    #[serde(default)]
    pub codec: CodecSettings,
    #[serde(default)]
    pub reduction: ReductionSettings,
    #[serde(default)]
    pub panel: PanelSettings,
    #[serde(default)]
    pub sweep: SweepSettings,
}

impl ExperimentConfig {
    /// Minimal config of the given kind; every other field at its default.
    pub fn new(kind: ExperimentKind, d: usize, k: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            name: None,
            d,
            k,
            eta: default_eta(),
            trials: 1,
            seed: 0,
            out: None,
            distribution: uniform(),
            test_distribution: uniform(),
            train: TrainConfig::default(),
            budget: Budget::default(),
            csq: CsqSettings::default(),
            codec: CodecSettings::default(),
            reduction: ReductionSettings::default(),
            panel: PanelSettings::default(),
            sweep: SweepSettings::default(),
        }
    }

    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| {
                    text[s]
                        .split(['=', '\n'])
                        .next()
                        .unwrap_or("")
                        .trim()
                        .to_string()
                })
                .filter(|f| !f.is_empty())
                .unwrap_or_else(|| "<document>".into());
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(field, msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            );
        }
        if self.d == 0 {
            return bad("d", "must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials", "must be positive".into());
        }
        if self.eta.is_empty() {
            return bad("eta", "needs at least one noise rate".into());
        }
        if let Some(e) = self.eta.iter().find(|e| !(0.0..0.5).contains(*e)) {
            return bad("eta", format!("noise rate {e} outside [0, 0.5)"));
        }
        for (field, spec) in [
            ("distribution", &self.distribution),
            ("test_distribution", &self.test_distribution),
        ] {
            spec.validate().or_else(|e| bad(field, e.to_string()))?;
        }
        if self.budget.test_points == 0 {
            return bad("budget.test_points", "must be positive".into());
        }
        let needs_k = !matches!(self.kind, ExperimentKind::FpdsCodec);
        if needs_k && (self.k == 0 || self.k > self.d) {
            return bad("k", format!("must be in 1..=d, got {}", self.k));
        }
        if self.kind.is_neural() {
            self.train.validate()?;
        }
        match self.kind {
            ExperimentKind::ParityCorrelation if self.budget.samples < 2 => bad(
                "budget.samples",
                "the correlation learner needs at least 2 samples".into(),
            ),
            ExperimentKind::JuntaCsq => {
                if self.k > 12 {
                    return bad("k", format!("junta-csq supports k <= 12, got {}", self.k));
                }
                match self.csq.oracle {
                    CsqMode::Sampled { samples: 0 } => {
                        bad("csq.oracle.samples", "must be positive".into())
                    }
                    CsqMode::Noisy { tau } if !(tau >= 0.0 && tau.is_finite()) => {
                        bad("csq.oracle.tau", "must be finite and nonnegative".into())
                    }
                    _ => Ok(()),
                }
            }
            ExperimentKind::TrainJunta if self.k < 3 => bad("k", "f_k targets need k >= 3".into()),
            ExperimentKind::FpdsCodec => {
                let c = &self.codec;
                if self.d > 64 {
                    return bad("d", format!("the codec needs d <= 64, got {}", self.d));
                }
                if !(c.mixture_weight > 0.0 && c.mixture_weight <= 1.0) {
                    return bad(
                        "codec.mixture_weight",
                        format!("{} outside (0, 1]", c.mixture_weight),
                    );
                }
                if !(c.eps > 0.0 && c.eps < 1.0) {
                    return bad("codec.eps", format!("{} outside (0, 1)", c.eps));
                }
                if c.payload_bits == Some(0) {
                    return bad("codec.payload_bits", "must be positive".into());
                }
                if c.payload_bits.is_none() && c.inputs == 0 {
                    return bad("codec.inputs", "must be positive".into());
                }
                Ok(())
            }
            ExperimentKind::NamqReduction => {
                let r = &self.reduction;
                if !(r.delta > 0.0 && r.delta < 1.0) {
                    return bad("reduction.delta", format!("{} outside (0, 1)", r.delta));
                }
                if !(r.c >= 1.0 && r.c.is_finite()) {
                    return bad("reduction.c", format!("must be at least 1, got {}", r.c));
                }
                if r.queries < 2 {
                    return bad("reduction.queries", "must be at least 2".into());
                }
                Ok(())
            }
            ExperimentKind::TransferPanel if !(self.panel.mu.abs() < 1.0) => {
                bad("panel.mu", format!("{} outside (-1, 1)", self.panel.mu))
            }
            ExperimentKind::Sweep => {
                let s = &self.sweep;
                if s.dims.iter().any(|&d| d < self.k) {
                    return bad(
                        "sweep.dims",
                        format!("every dimension must be at least k = {}", self.k),
                    );
                }
                if s.consecutive == 0 {
                    return bad("sweep.consecutive", "must be positive".into());
                }
                if !(s.threshold_offset >= 0.0 && s.threshold_offset.is_finite()) {
                    return bad(
                        "sweep.threshold_offset",
                        "must be finite and nonnegative".into(),
                    );
                }
                s.pds
                    .validate()
                    .or_else(|e| bad("sweep.pds", e.to_string()))?;
                s.no_pds
                    .validate()
                    .or_else(|e| bad("sweep.no_pds", e.to_string()))
            }
            _ => Ok(()),
        }
    }
}
