use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::{create_run_dir, emit_csv, emit_svg, output_root, Chart, CsvRow, Series};
use super::pool::parallel_map;
use super::trials::{run_task, Task, TrialRecord, TrialStatus, PANEL_ARMS, SWEEP_ARMS};
use crate::error::{Error, Result};
use crate::rng::{child_seed, split};

/// Build identifier recorded in every summary.
pub fn build_id() -> String {
    option_env!("PDSLAB_BUILD_ID")
        .map(str::to_string)
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

/// Mean, sample standard deviation and count of one metric over a group
/// of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<String>,
    pub eta: f64,
    pub d: usize,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

/// Final errors of one transfer-panel arm, averaged over trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelEntry {
    pub arm: String,
    pub eta: f64,
    pub error_d0: f64,
    pub error_dmu: f64,
    pub trials: usize,
}

/// One grid point of one sweep arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub eta: f64,
    pub arm: String,
    /// Mean over the converged trials.
    pub samples_to_threshold: Option<f64>,
    /// A strict majority of the trials reached the threshold.
    pub converged: bool,
    pub converged_trials: usize,
    pub trials: usize,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub build_id: String,
    pub master_seed: u64,
    pub trials: Vec<TrialRecord>,
    pub succeeded: usize,
    pub failed: usize,
    pub non_converged: usize,
    pub aggregates: Vec<Aggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub panel: Vec<PanelEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    pub wall_ms: u64,
}

impl Summary {
    pub fn aggregate(&self, arm: Option<&str>, eta: f64, metric: &str) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.arm.as_deref() == arm && a.eta == eta && a.metric == metric)
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub summary: Summary,
    /// Metrics rows per CSV file name.
    pub metrics: BTreeMap<String, Vec<CsvRow>>,
}

impl RunResult {
    pub fn summary_path(&self) -> PathBuf {
        self.dir.join("summary.json")
    }
}

fn tasks(cfg: &ExperimentConfig) -> Vec<Task> {
    let dims: Vec<usize> = if cfg.kind == ExperimentKind::Sweep {
        cfg.sweep.dims.clone()
    } else {
        vec![cfg.d]
    };
    let mut out = Vec::new();
    for &d in &dims {
        for &eta in &cfg.eta {
            for trial in 0..cfg.trials {
                let index = out.len() as u64;
                out.push(Task {
                    trial,
                    seed: child_seed(&mut split(cfg.seed, index + 1)),
                    eta,
                    d,
                });
            }
        }
    }
    out
}

fn stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

type GroupKey = (Option<String>, u64, usize, String);

fn aggregates(records: &[TrialRecord]) -> Vec<Aggregate> {
    // Groups keep first-appearance order so the summary is deterministic.
    let mut groups: Vec<(GroupKey, Vec<f64>)> = Vec::new();
    for r in records.iter().filter(|r| r.status != TrialStatus::Failed) {
        for (metric, &v) in &r.metrics {
            let key = (r.arm.clone(), r.eta.to_bits(), r.d, metric.clone());
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, vs)) => vs.push(v),
                None => groups.push((key, vec![v])),
            }
        }
    }
    groups
        .into_iter()
        .map(|((arm, eta, d, metric), vs)| {
            let (mean, sd) = stats(&vs);
            Aggregate {
                arm,
                eta: f64::from_bits(eta),
                d,
                metric,
                mean,
                sd,
                n: vs.len(),
            }
        })
        .collect()
}

fn panel_table(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<PanelEntry> {
    let mut out = Vec::new();
    for &eta in &cfg.eta {
        for arm in PANEL_ARMS {
            let ok: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| {
                    r.eta == eta && r.arm.as_deref() == Some(arm) && r.status != TrialStatus::Failed
                })
                .collect();
            let mean = |m: &str| stats(&ok.iter().map(|r| r.metrics[m]).collect::<Vec<_>>()).0;
            out.push(PanelEntry {
                arm: arm.to_string(),
                eta,
                error_d0: if ok.is_empty() {
                    f64::NAN
                } else {
                    mean("error_d0")
                },
                error_dmu: if ok.is_empty() {
                    f64::NAN
                } else {
                    mean("error_dmu")
                },
                trials: ok.len(),
            });
        }
    }
    out
}

fn sweep_table(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<SweepRow> {
    let mut out = Vec::new();
    let per_point = cfg.eta.len() * cfg.trials;
    for (gi, &d) in cfg.sweep.dims.iter().enumerate() {
        for (ei, &eta) in cfg.eta.iter().enumerate() {
            for arm in SWEEP_ARMS {
                // Records arrive in task order, two arms per task.
                let first = (gi * per_point + ei * cfg.trials) * SWEEP_ARMS.len();
                let group: Vec<&TrialRecord> = records
                    [first..first + cfg.trials * SWEEP_ARMS.len()]
                    .iter()
                    .filter(|r| r.arm.as_deref() == Some(arm))
                    .collect();
                let hits: Vec<f64> = group
                    .iter()
                    .filter(|r| r.status == TrialStatus::Succeeded)
                    .filter_map(|r| r.metrics.get("samples_to_threshold").copied())
                    .collect();
                out.push(SweepRow {
                    d,
                    eta,
                    arm: arm.to_string(),
                    samples_to_threshold: if hits.is_empty() {
                        None
                    } else {
                        Some(stats(&hits).0)
                    },
                    converged: 2 * hits.len() > group.len(),
                    converged_trials: hits.len(),
                    trials: group.len(),
                    seeds: group.iter().map(|r| r.seed).collect(),
                });
            }
        }
    }
    out
}

/// Long-format per-trial metrics: one line per `(trial, arm, metric)`.
fn trials_csv(records: &[TrialRecord]) -> String {
    let mut s = String::from("trial,seed,eta,d,k,arm,status,metric,value\n");
    for r in records {
        let status = match r.status {
            TrialStatus::Succeeded => "succeeded",
            TrialStatus::Failed => "failed",
            TrialStatus::NonConverged => "non-converged",
        };
        let arm = r.arm.as_deref().unwrap_or("");
        if r.metrics.is_empty() {
            let _ = writeln!(
                s,
                "{},{},{:?},{},{},{arm},{status},,",
                r.trial, r.seed, r.eta, r.d, r.k
            );
        }
        for (m, v) in &r.metrics {
            let _ = writeln!(
                s,
                "{},{},{:?},{},{},{arm},{status},{m},{v:?}",
                r.trial, r.seed, r.eta, r.d, r.k
            );
        }
    }
    s
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("d,eta,arm,samples_to_threshold,converged,converged_trials,trials\n");
    for r in rows {
        let v = r
            .samples_to_threshold
            .map(|v| format!("{v:?}"))
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{:?},{},{v},{},{},{}",
            r.d, r.eta, r.arm, r.converged, r.converged_trials, r.trials
        );
    }
    s
}

fn chart(cfg: &ExperimentConfig, series: Vec<Series>, sweep: &[SweepRow]) -> Option<Chart> {
    if cfg.kind == ExperimentKind::Sweep {
        let series = SWEEP_ARMS
            .iter()
            .flat_map(|&arm| cfg.eta.iter().map(move |&eta| (arm, eta)))
            .map(|(arm, eta)| Series {
                name: format!("{arm} eta={eta}"),
                points: sweep
                    .iter()
                    .filter(|r| r.arm == arm && r.eta == eta && r.converged)
                    .filter_map(|r| r.samples_to_threshold.map(|v| (r.d as f64, v)))
                    .collect(),
            })
            .collect();
        return Some(Chart {
            title: format!("samples to Bayes + {}", cfg.sweep.threshold_offset),
            x_label: "d".into(),
            y_label: "samples".into(),
            log_x: false,
            series,
        });
    }
    if series.is_empty() {
        return None;
    }
    Some(Chart {
        title: format!("{} d={} k={}", cfg.kind, cfg.d, cfg.k),
        x_label: "samples seen".into(),
        y_label: "test error".into(),
        log_x: true,
        series,
    })
}

/// Runs every trial of `cfg` and writes `config.toml`, `summary.json`,
/// `trials.csv`, the metrics CSVs and a chart into a fresh run directory.
/// Trial errors are recorded, not raised.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let root = output_root(cfg.out.as_deref());
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S").to_string();
    let dir = create_run_dir(&root, &stamp, cfg.seed)?;

    let tasks = tasks(cfg);
    let outputs = parallel_map(&tasks, |t| run_task(cfg, t));

    let mut records = Vec::new();
    let mut metrics: BTreeMap<String, Vec<CsvRow>> = BTreeMap::new();
    let mut series = Vec::new();
    if cfg.kind.is_neural() {
        let files: Vec<String> = match cfg.kind {
            ExperimentKind::TransferPanel => PANEL_ARMS
                .iter()
                .map(|a| format!("metrics-{a}.csv"))
                .collect(),
            ExperimentKind::Sweep => SWEEP_ARMS
                .iter()
                .map(|a| format!("metrics-{a}.csv"))
                .collect(),
            _ => vec!["metrics.csv".into()],
        };
        for f in files {
            metrics.insert(f, Vec::new());
        }
    }
    for out in outputs {
        records.extend(out.records);
        for (file, rows) in out.csv {
            metrics.entry(file).or_default().extend(rows);
        }
        series.extend(out.series);
    }
    let panel = if cfg.kind == ExperimentKind::TransferPanel {
        panel_table(cfg, &records)
    } else {
        Vec::new()
    };
    let sweep = if cfg.kind == ExperimentKind::Sweep {
        sweep_table(cfg, &records)
    } else {
        Vec::new()
    };
    let count = |s: TrialStatus| records.iter().filter(|r| r.status == s).count();
    let summary = Summary {
        kind: cfg.kind,
        name: cfg.name.clone(),
        build_id: build_id(),
        master_seed: cfg.seed,
        succeeded: count(TrialStatus::Succeeded),
        failed: count(TrialStatus::Failed),
        non_converged: count(TrialStatus::NonConverged),
        aggregates: aggregates(&records),
        trials: records,
        panel,
        sweep,
        wall_ms: start.elapsed().as_millis() as u64,
    };

    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    for (file, rows) in &metrics {
        emit_csv(rows, &dir.join(file))?;
    }
    fs::write(dir.join("trials.csv"), trials_csv(&summary.trials))?;
    if !summary.sweep.is_empty() || cfg.kind == ExperimentKind::Sweep {
        fs::write(dir.join("sweep.csv"), sweep_csv(&summary.sweep))?;
    }
    if let Some(c) = chart(cfg, series, &summary.sweep) {
        emit_svg(&c, &dir.join("plot.svg"))?;
    }
    let json =
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Encoding(e.to_string()))?;
    fs::write(dir.join("summary.json"), json)?;
    Ok(RunResult {
        dir,
        config: cfg.clone(),
        summary,
        metrics,
    })
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.kind == kind {
        Ok(())
    } else {
        Err(Error::config(
            "kind",
            format!("expected `{kind}`, got `{}`", cfg.kind),
        ))
    }
}

/// Trains on uniform, `1/2 D_mu + 1/2 uniform` and `D_mu`, and reports each
/// arm's error on uniform and on `D_mu`.
pub fn run_transfer_panel(cfg: &ExperimentConfig) -> Result<RunResult> {
    expect_kind(cfg, ExperimentKind::TransferPanel)?;
    run_experiment(cfg)
}

/// Samples-to-threshold for the PDS and no-PDS arms at every grid point.
pub fn sweep(cfg: &ExperimentConfig) -> Result<RunResult> {
    expect_kind(cfg, ExperimentKind::Sweep)?;
    run_experiment(cfg)
}

/// Reads a summary written by [`run_experiment`].
pub fn load_summary(path: &Path) -> Result<Summary> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Decode(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::output::load_csv;

    fn cfg(kind: ExperimentKind, dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            out: Some(dir.to_path_buf()),
            ..ExperimentConfig::new(kind, 10, 3)
        }
    }

    #[test]
    fn parity_correlation_run_writes_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = cfg(ExperimentKind::ParityCorrelation, tmp.path());
        c.distribution = crate::distributions::DistributionSpec::named("bias-mixture");
        c.budget.samples = 20_000;
        c.trials = 3;
        c.eta = vec![0.0, 0.1];
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.summary.trials.len(), 6);
        assert_eq!(r.summary.succeeded, 6);
        let agg = r.summary.aggregate(None, 0.1, "support_recovered").unwrap();
        assert_eq!(agg.n, 3);
        assert_eq!(agg.mean, 1.0);
        for f in ["config.toml", "summary.json", "trials.csv"] {
            assert!(r.dir.join(f).exists(), "{f}");
        }
        let back = load_summary(&r.summary_path()).unwrap();
        assert_eq!(back.trials, r.summary.trials);
        let snap = ExperimentConfig::load(&r.dir.join("config.toml")).unwrap();
        assert_eq!(snap, c);
    }

    #[test]
    fn failed_trials_are_recorded() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = cfg(ExperimentKind::TrainParity, tmp.path());
        // The l1 trainer rejects sources where it cannot separate the support.
        c.train.init = crate::neural::Init::LayerwiseL1;
        c.train.steps = 10;
        c.trials = 2;
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.summary.failed, 2);
        assert!(r.summary.trials.iter().all(|t| t.error.is_some()));
        assert!(load_csv(&r.dir.join("metrics.csv")).unwrap().is_empty());
    }

    #[test]
    fn tiny_no_pds_budget_stays_near_chance() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = cfg(ExperimentKind::TrainParity, tmp.path());
        c.d = 20;
        c.k = 9;
        c.train.steps = 50;
        c.train.width = 32;
        c.train.eval_every = 10;
        c.train.test_size = 2048;
        let r = run_experiment(&c).unwrap();
        let e = r
            .summary
            .aggregate(None, 0.0, "final_error_target")
            .unwrap()
            .mean;
        assert!((e - 0.5).abs() < 0.06, "{e}");
        let rows = load_csv(&r.dir.join("metrics.csv")).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(r.dir.join("plot.svg").exists());
    }

    #[test]
    fn panel_with_zero_steps_is_chance_on_uniform() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = cfg(ExperimentKind::TransferPanel, tmp.path());
        c.d = 12;
        c.k = 5;
        c.train.steps = 0;
        c.train.width = 32;
        c.train.test_size = 1024;
        c.budget.test_points = 4096;
        let r = run_transfer_panel(&c).unwrap();
        assert_eq!(r.summary.panel.len(), 3);
        for p in &r.summary.panel {
            assert!((p.error_d0 - 0.5).abs() < 0.1, "{p:?}");
            assert!((0.0..=1.0).contains(&p.error_dmu), "{p:?}");
        }
    }

    #[test]
    fn empty_and_duplicate_sweep_grids() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = cfg(ExperimentKind::Sweep, tmp.path());
        c.train.steps = 20;
        c.train.width = 16;
        c.train.eval_every = 10;
        c.train.test_size = 256;
        let r = sweep(&c).unwrap();
        assert!(r.summary.sweep.is_empty());
        assert_eq!(
            fs::read_to_string(r.dir.join("sweep.csv"))
                .unwrap()
                .lines()
                .count(),
            1
        );

        c.sweep.dims = vec![8, 8];
        let r = sweep(&c).unwrap();
        assert_eq!(r.summary.sweep.len(), 4);
        let pds: Vec<&SweepRow> = r.summary.sweep.iter().filter(|s| s.arm == "pds").collect();
        assert_eq!(pds.len(), 2);
        assert_ne!(pds[0].seeds, pds[1].seeds);
    }

    #[test]
    fn same_seed_same_bytes() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = cfg(ExperimentKind::TrainJunta, tmp.path());
        c.k = 4;
        c.train.steps = 200;
        c.train.width = 16;
        c.train.eval_every = 50;
        c.train.test_size = 512;
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_ne!(a.dir, b.dir);
        for f in ["metrics.csv", "trials.csv"] {
            assert_eq!(
                fs::read(a.dir.join(f)).unwrap(),
                fs::read(b.dir.join(f)).unwrap()
            );
        }
    }

    #[test]
    fn wrong_kind_is_a_config_error() {
        let tmp = tempfile::tempdir().unwrap();
        let c = cfg(ExperimentKind::TrainParity, tmp.path());
        assert!(matches!(sweep(&c), Err(Error::Config { .. })));
    }
}
