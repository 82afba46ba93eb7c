use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::MetricsRow;

pub const CSV_HEADER: &str =
    "step,samples_seen,train_loss,test_error_target,test_error_train_dist,seed,eta,d,k";

/// One `metrics.csv` line: an evaluation row tagged with its trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub step: u64,
    pub samples_seen: u64,
    pub train_loss: f64,
    pub test_error_target: f64,
    pub test_error_train_dist: f64,
    pub seed: u64,
    pub eta: f64,
    pub d: usize,
    pub k: usize,
}

impl CsvRow {
    pub fn from_metrics(row: &MetricsRow, seed: u64, eta: f64, d: usize, k: usize) -> Self {
        Self {
            step: row.step,
            samples_seen: row.samples_seen,
            train_loss: row.train_loss,
            test_error_target: row.test_error_target,
            test_error_train_dist: row.test_error_train_dist,
            seed,
            eta,
            d,
            k,
        }
    }
}

/// Floats are written in shortest round-trip form.
pub fn csv_string(rows: &[CsvRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{:?},{:?},{:?},{},{:?},{},{}",
            r.step,
            r.samples_seen,
            r.train_loss,
            r.test_error_target,
            r.test_error_train_dist,
            r.seed,
            r.eta,
            r.d,
            r.k
        )
        .expect("write to string");
    }
    s
}

pub fn emit_csv(rows: &[CsvRow], path: &Path) -> Result<()> {
    fs::write(path, csv_string(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Decode("metrics header mismatch".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Decode(format!("line {}: expected 9 fields", i + 2)));
            }
            let bad = |e: &dyn std::fmt::Display| Error::Decode(format!("line {}: {e}", i + 2));
            let u = |s: &str| s.parse::<u64>().map_err(|e| bad(&e));
            let x = |s: &str| s.parse::<f64>().map_err(|e| bad(&e));
            let z = |s: &str| s.parse::<usize>().map_err(|e| bad(&e));
            Ok(CsvRow {
                step: u(f[0])?,
                samples_seen: u(f[1])?,
                train_loss: x(f[2])?,
                test_error_target: x(f[3])?,
                test_error_train_dist: x(f[4])?,
                seed: u(f[5])?,
                eta: x(f[6])?,
                d: z(f[7])?,
                k: z(f[8])?,
            })
        })
        .collect()
}

pub fn load_csv(path: &Path) -> Result<Vec<CsvRow>> {
    parse_csv(&fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Self-contained SVG line chart; one polyline per series.
pub fn svg_string(chart: &Chart) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 180.0, 40.0, 50.0);
    let tx = |x: f64| {
        if chart.log_x {
            x.max(f64::MIN_POSITIVE).log10()
        } else {
            x
        }
    };
    let pts = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!chart.log_x || *x > 0.0));
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let px = |x: f64| left + (tx(x) - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let label = if chart.log_x { 10f64.powf(xv) } else { xv };
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + f * pw,
            top + ph + 16.0,
            tick(label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&chart.y_label)
    );
    for (i, series) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = series
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!chart.log_x || *x > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = w - right + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

pub fn emit_svg(chart: &Chart, path: &Path) -> Result<()> {
    fs::write(path, svg_string(chart))?;
    Ok(())
}

/// Output root: the explicit directory, else `PDSLAB_OUT`, else `runs`.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("PDSLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Creates `<root>/<stamp>-seed<N>`, appending `-1`, `-2`, ... when the name
/// is taken. Existing directories are never reused.
pub fn create_run_dir(root: &Path, stamp: &str, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    let base = format!("{stamp}-seed{seed}");
    for n in 0u32.. {
        let name = if n == 0 {
            base.clone()
        } else {
            format!("{base}-{n}")
        };
        let dir = root.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("run directory suffixes exhausted")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
        assert!(parse_csv(&csv_string(&[])).unwrap().is_empty());
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let chart = Chart {
            title: "t <1>".into(),
            x_label: "samples".into(),
            y_label: "error".into(),
            log_x: true,
            series: vec![
                Series {
                    name: "a".into(),
                    points: vec![(1.0, 0.5), (10.0, 0.2)],
                },
                Series {
                    name: "b".into(),
                    points: vec![(2.0, 0.4), (100.0, 0.0)],
                },
            ],
        };
        let svg = svg_string(&chart);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("t &lt;1&gt;"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn run_dirs_never_collide() {
        let tmp = tempfile::tempdir().unwrap();
        let a = create_run_dir(tmp.path(), "20260101T000000", 3).unwrap();
        let b = create_run_dir(tmp.path(), "20260101T000000", 3).unwrap();
        assert_ne!(a, b);
        assert!(b.ends_with("20260101T000000-seed3-1"));
    }

    fn row() -> impl Strategy<Value = CsvRow> {
        (
            any::<u64>(),
            any::<u64>(),
            -1e6f64..1e6,
            0.0f64..1.0,
            0.0f64..1.0,
            any::<u64>(),
            0.0f64..0.5,
            1usize..100,
            0usize..100,
        )
            .prop_map(
                |(step, samples_seen, train_loss, a, b, seed, eta, d, k)| CsvRow {
                    step,
                    samples_seen,
                    train_loss,
                    test_error_target: a,
                    test_error_train_dist: b,
                    seed,
                    eta,
                    d,
                    k,
                },
            )
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in proptest::collection::vec(row(), 0..20)) {
            prop_assert_eq!(parse_csv(&csv_string(&rows)).unwrap(), rows);
        }
    }
}
