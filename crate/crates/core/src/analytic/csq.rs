use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::interp::{chebyshev_nodes, coefficient_amplification, interpolate_chebyshev};
use crate::boolean::{InputBatch, JuntaTarget, Target, MAX_JUNTA_SUPPORT};
use crate::distributions::{
    exact_indicator_moment, exact_moment, BiasVector, InputDistribution, LabeledSource,
    NoiseChannel,
};
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

/// How the oracle answers a query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CsqMode {
    /// Closed-form expectations.
    Exact,
    /// Empirical mean over `samples` fresh draws per query.
    Sampled { samples: usize },
    /// Closed form plus a uniform perturbation in `[-tau, tau]`.
    Noisy { tau: f64 },
}

/// How node expectations are posed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryForm {
    /// Directly against the node distribution `D_r`.
    Direct,
    /// As `phi_r = p_r / (k p)` against the node mixture `D'`; answers are
    /// `1/k` of the direct ones.
    DensityRatio,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CsqQuery {
    /// `E[y]` at node `r`.
    Mean { node: usize },
    /// `E[y x_i]` at node `r`.
    Coord { node: usize, coord: usize },
    /// `E[1(x_coords = pattern) y]` under the node mixture.
    Cell {
        coords: Vec<usize>,
        pattern: Vec<i8>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: usize,
    pub kind: String,
    pub coord: Option<usize>,
    pub node: Option<usize>,
    pub cell: Option<usize>,
    pub answer: f64,
}

/// Correlational statistical query oracle for one target, serving the
/// product distributions `D_r` with bias `nodes[r]` on every coordinate.
#[derive(Debug)]
pub struct CsqOracle {
    nodes: Vec<f64>,
    node_sources: Vec<LabeledSource>,
    mixture: LabeledSource,
    mode: CsqMode,
    form: QueryForm,
    rng: Rng,
    transcript: Vec<QueryRecord>,
    scratch: InputBatch,
    labels: Vec<i8>,
}

impl CsqOracle {
    pub fn new(
        target: Target,
        noise: NoiseChannel,
        nodes: Vec<f64>,
        mode: CsqMode,
        form: QueryForm,
        seed: u64,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::arg("oracle needs at least one node"));
        }
        match mode {
            CsqMode::Sampled { samples: 0 } => {
                return Err(Error::arg("sampled oracle needs samples >= 1"))
            }
            CsqMode::Noisy { tau } if !(tau.is_finite() && tau >= 0.0) => {
                return Err(Error::arg(format!("tolerance {tau} must be nonnegative")))
            }
            _ => {}
        }
        let d = target.dim();
        let dists = nodes
            .iter()
            .map(|&mu| {
                if mu.abs() >= 1.0 {
                    return Err(Error::arg(format!("node {mu} must lie in (-1, 1)")));
                }
                BiasVector::constant(d, mu).map(InputDistribution::product)
            })
            .collect::<Result<Vec<_>>>()?;
        let w = 1.0 / nodes.len() as f64;
        let mixture = if dists.len() == 1 {
            dists[0].clone()
        } else {
            InputDistribution::mixture(dists.iter().map(|p| (w, p.clone())).collect())?
        };
        let node_sources = dists
            .into_iter()
            .map(|p| LabeledSource::new(p, target.clone(), noise))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nodes,
            node_sources,
            mixture: LabeledSource::new(mixture, target, noise)?,
            mode,
            form,
            rng: seeded(seed),
            transcript: Vec::new(),
            scratch: InputBatch::new(d),
            labels: Vec::new(),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn mode(&self) -> CsqMode {
        self.mode
    }

    pub fn form(&self) -> QueryForm {
        self.form
    }

    pub fn dim(&self) -> usize {
        self.mixture.dim()
    }

    pub fn queries_issued(&self) -> usize {
        self.transcript.len()
    }

    pub fn transcript(&self) -> &[QueryRecord] {
        &self.transcript
    }

    pub fn query(&mut self, q: &CsqQuery) -> Result<f64> {
        let k = self.nodes.len();
        let d = self.dim();
        let (node, coord) = match q {
            CsqQuery::Mean { node } => (Some(*node), None),
            CsqQuery::Coord { node, coord } => (Some(*node), Some(*coord)),
            CsqQuery::Cell { coords, pattern } => {
                if coords.len() != pattern.len() || coords.iter().any(|&i| i >= d) {
                    return Err(Error::arg("malformed cell query"));
                }
                (None, None)
            }
        };
        if node.is_some_and(|r| r >= k) {
            return Err(Error::arg(format!("node index out of range (k={k})")));
        }
        if coord.is_some_and(|i| i >= d) {
            return Err(Error::arg(format!("coordinate out of range (d={d})")));
        }
        let scale = match (node, self.form) {
            (Some(_), QueryForm::DensityRatio) => 1.0 / k as f64,
            _ => 1.0,
        };
        let exact = |this: &Self| -> Result<f64> {
            Ok(match q {
                CsqQuery::Cell { coords, pattern } => {
                    exact_indicator_moment(&this.mixture, coords, pattern)?
                }
                _ => scale * exact_moment(&this.node_sources[node.unwrap_or(0)], coord)?,
            })
        };
        let answer = match self.mode {
            CsqMode::Exact => exact(self)?,
            CsqMode::Noisy { tau } => {
                let e = exact(self)?;
                e + if tau > 0.0 {
                    self.rng.random_range(-tau..=tau)
                } else {
                    0.0
                }
            }
            CsqMode::Sampled { samples } => self.sampled(q, node, coord, samples),
        };
        let cell = match q {
            CsqQuery::Cell { pattern, .. } => Some(
                pattern
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (j, &v)| if v > 0 { acc | (1 << j) } else { acc }),
            ),
            _ => None,
        };
        self.transcript.push(QueryRecord {
            id: self.transcript.len() + 1,
            kind: match q {
                CsqQuery::Mean { .. } => "mean",
                CsqQuery::Coord { .. } => "coord",
                CsqQuery::Cell { .. } => "cell",
            }
            .to_string(),
            coord,
            node: node.map(|r| r + 1),
            cell,
            answer,
        });
        Ok(answer)
    }

    fn sampled(
        &mut self,
        q: &CsqQuery,
        node: Option<usize>,
        coord: Option<usize>,
        m: usize,
    ) -> f64 {
        let direct = matches!(self.form, QueryForm::Direct) && node.is_some();
        let src = if direct {
            &self.node_sources[node.unwrap_or(0)]
        } else {
            &self.mixture
        };
        src.sample_into(&mut self.rng, m, &mut self.scratch, &mut self.labels);
        let k = self.nodes.len() as f64;
        let mut total = 0.0;
        for (x, &y) in self.scratch.rows().zip(&self.labels) {
            let y = f64::from(y);
            total += match q {
                CsqQuery::Cell { coords, pattern } => {
                    if coords.iter().zip(pattern).all(|(&i, &v)| x[i] == v) {
                        y
                    } else {
                        0.0
                    }
                }
                _ => {
                    let xi = coord.map_or(1.0, |i| f64::from(x[i]));
                    let weight = if direct {
                        1.0
                    } else {
                        let r = node.unwrap_or(0);
                        self.node_sources[r].dist().density_bits(x)
                            / (k * self.mixture.dist().density_bits(x))
                    };
                    weight * y * xi
                }
            };
        }
        total / m as f64
    }

    /// Writes `query_id,type,coordinate,node,cell,answer`, 1-based indices.
    pub fn write_transcript_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "query_id,type,coordinate,node,cell,answer")?;
        let opt =
            |v: Option<usize>, shift: usize| v.map(|x| (x + shift).to_string()).unwrap_or_default();
        for r in &self.transcript {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.id,
                r.kind,
                opt(r.coord, 1),
                opt(r.node, 0),
                opt(r.cell, 0),
                r.answer
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Support threshold `1/2 (1 - 2 eta) 2^-k` on the largest coefficient.
pub fn support_threshold(k: usize, eta: f64) -> f64 {
    0.5 * (1.0 - 2.0 * eta) * 0.5f64.powi(k as i32)
}

/// Largest admissible oracle tolerance for `k` nodes. Denoising maps an
/// answer error `tau` to at most `2 tau` in each node value, and
/// interpolation multiplies that by the coefficient amplification `A_k`;
/// the result must stay below the support threshold. Truth-table cells
/// have mass at least `4^-k` under the node mixture.
pub fn tolerance_budget(k: usize, eta: f64, form: QueryForm) -> Result<f64> {
    let amp = coefficient_amplification(&chebyshev_nodes(k))?;
    let scale = match form {
        QueryForm::Direct => 1.0,
        QueryForm::DensityRatio => k as f64,
    };
    let coeff = support_threshold(k, eta) / (2.0 * amp * scale);
    let cell = (1.0 - 2.0 * eta) * 0.25f64.powi(k as i32);
    Ok(coeff.min(cell))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsqFit {
    pub target: JuntaTarget,
    /// Largest interpolated coefficient magnitude per coordinate.
    pub statistics: Vec<f64>,
    pub threshold: f64,
    pub queries: usize,
}

/// CSQ junta learner: node means and correlations, denoising, polynomial
/// support test, then one indicator query per truth-table cell.
pub fn csq_learn_junta(oracle: &mut CsqOracle, d: usize, k: usize, eta: f64) -> Result<CsqFit> {
    if oracle.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: oracle.dim(),
        });
    }
    if k == 0 || k > MAX_JUNTA_SUPPORT {
        return Err(Error::arg(format!("k must be in 1..=20, got {k}")));
    }
    if oracle.nodes().len() != k {
        return Err(Error::arg(format!(
            "oracle has {} nodes, learner needs k={k}",
            oracle.nodes().len()
        )));
    }
    NoiseChannel::new(eta)?;
    if let CsqMode::Noisy { tau } = oracle.mode() {
        let budget = tolerance_budget(k, eta, oracle.form())?;
        if tau >= budget {
            return Err(Error::arg(format!(
                "oracle tolerance {tau} exceeds the admissible {budget:.3e} for k={k}"
            )));
        }
    }
    let start = oracle.queries_issued();
    let nodes = oracle.nodes().to_vec();
    let rescale = match oracle.form() {
        QueryForm::Direct => 1.0,
        QueryForm::DensityRatio => k as f64,
    };

    let mut means = Vec::with_capacity(k);
    for node in 0..k {
        means.push(rescale * oracle.query(&CsqQuery::Mean { node })?);
    }
    let mut z = vec![vec![0.0; k]; d];
    for node in 0..k {
        let mu = nodes[node];
        for (coord, zi) in z.iter_mut().enumerate() {
            let v = rescale * oracle.query(&CsqQuery::Coord { node, coord })?;
            zi[node] = (v - mu * means[node]) / (1.0 - mu * mu);
        }
    }

    let threshold = support_threshold(k, eta);
    let mut statistics = Vec::with_capacity(d);
    let mut support = Vec::new();
    for (i, zi) in z.iter().enumerate() {
        let coeffs = interpolate_chebyshev(&nodes, zi)?;
        let stat = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if stat >= threshold {
            support.push(i);
        }
        statistics.push(stat);
    }
    if support.len() > k {
        return Err(Error::SupportOverflow {
            found: support.len(),
            k,
        });
    }

    let s = support.len();
    let mut table = Vec::with_capacity(1 << s);
    for cell in 0..1usize << s {
        let pattern: Vec<i8> = (0..s)
            .map(|j| if (cell >> j) & 1 == 1 { 1 } else { -1 })
            .collect();
        let a = oracle.query(&CsqQuery::Cell {
            coords: support.clone(),
            pattern,
        })?;
        if a == 0.0 && oracle.mode() == CsqMode::Exact {
            return Err(Error::AmbiguousCell { cell });
        }
        table.push(if a >= 0.0 { 1 } else { -1 });
    }
    Ok(CsqFit {
        target: JuntaTarget::new(d, support, table)?,
        statistics,
        threshold,
        queries: oracle.queries_issued() - start,
    })
}
