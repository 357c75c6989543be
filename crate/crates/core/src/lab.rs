//! Subadditivity bounds, gap reports and parameter sweeps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::{
    bayes_neighborhoods, bfs_neighborhoods, bfs_order, contract, maximal_cliques, truncate,
    Decomposition,
};
use crate::divergence::{f_divergence, generator_curvature, DivergenceValue, GeneratorKind};
use crate::error::{Error, Result};
use crate::gaussian::counterexample_pair;
use crate::model::{autoregressive_bayesnet, ArSpec, BayesNet, FiniteDistribution, Graph, Mrf};
use crate::transport::{metric_from_space, wasserstein2_gaussian, wasserstein_finite, MetricTable};

/// Default tolerance on the gap.
pub const GAP_TOL: f64 = 1e-9;

/// A divergence or transport distance that can be bounded locally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    F(GeneratorKind),
    /// `W_p` with the Euclidean ground metric.
    W(f64),
}

impl Measure {
    pub fn tag(&self) -> String {
        match self {
            Measure::F(k) => k.tag(),
            Measure::W(p) if *p == 1.0 => "w1".into(),
            Measure::W(p) if *p == 2.0 => "w2".into(),
            Measure::W(p) => format!("wp:{p}"),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "w1" => return Ok(Measure::W(1.0)),
            "w2" => return Ok(Measure::W(2.0)),
            _ => {}
        }
        if let Some(rest) = lower.strip_prefix("wp:") {
            let p: f64 = rest.parse().map_err(|_| {
                Error::UnknownKind(format!("measure `{s}` (expected wp:<p> with p >= 1)"))
            })?;
            if !(p.is_finite() && p >= 1.0) {
                return Err(Error::ParameterOutOfRange {
                    name: "p",
                    value: p,
                    domain: "[1, inf)",
                });
            }
            return Ok(Measure::W(p));
        }
        match lower.parse::<GeneratorKind>() {
            Ok(k) => Ok(Measure::F(k)),
            Err(_) => Err(Error::UnknownKind(format!(
                "measure `{s}` (valid: {}, w1, w2, wp:<p>)",
                GeneratorKind::TAGS
            ))),
        }
    }
}

/// `c·Σ locals − joint` together with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub joint: DivergenceValue,
    pub locals: Vec<DivergenceValue>,
    pub coefficient: f64,
    pub bound: f64,
    pub gap: f64,
    pub satisfied: bool,
    /// Some local term is infinite, so the bound holds trivially.
    pub infinite_local: bool,
}

impl GapReport {
    pub fn new(joint: DivergenceValue, locals: Vec<DivergenceValue>, coefficient: f64) -> Self {
        let infinite_local = locals.iter().any(|l| l.is_infinite());
        let sum: f64 = locals.iter().map(|l| l.value()).sum();
        let bound = if coefficient == 0.0 {
            0.0
        } else {
            coefficient * sum
        };
        let gap = if bound.is_infinite() {
            f64::INFINITY
        } else if joint.is_infinite() {
            f64::NEG_INFINITY
        } else {
            bound - joint.value()
        };
        Self {
            joint,
            locals,
            coefficient,
            bound,
            gap,
            satisfied: gap >= -GAP_TOL,
            infinite_local,
        }
    }

    /// Re-evaluate `satisfied` against `gap ≥ −tol`.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.satisfied = self.gap >= -tol;
        self
    }
}

/// The published linear coefficient of each measure on Bayes-nets.
///
/// `W_p` needs the full-space metric. Measures without a linear
/// subadditivity result are rejected.
pub fn linear_coefficient(measure: Measure, metric: Option<&MetricTable>) -> Result<f64> {
    use GeneratorKind::*;
    match measure {
        Measure::F(k) => match k.canonical() {
            Hellinger2 | Kl | SymmetricKl => Ok(1.0),
            JensenShannon => Ok(1.0 / std::f64::consts::LN_2),
            TotalVariation => Ok(2.0),
            other => Err(Error::UnsupportedMeasure(format!(
                "no linear coefficient for {other}"
            ))),
        },
        Measure::W(p) => {
            let metric = metric.ok_or_else(|| Error::MetricRequired(measure.tag()))?;
            if metric.d_min() <= 0.0 {
                return Err(Error::MetricRequired(format!(
                    "{} needs a metric with two distinct points",
                    measure.tag()
                )));
            }
            Ok(2f64.powf(1.0 / p) * metric.diam() / metric.d_min())
        }
    }
}

/// Evaluate `measure(P, Q)`; `W_p` uses the Euclidean metric of `P`'s space.
pub fn measure_value(
    measure: Measure,
    p: &FiniteDistribution,
    q: &FiniteDistribution,
) -> Result<DivergenceValue> {
    match measure {
        Measure::F(k) => f_divergence(k, p, q),
        Measure::W(power) => {
            if !p.space().same_as(q.space()) {
                return Err(Error::SpaceMismatch);
            }
            let metric = metric_from_space(p.space())?;
            let (v, _) = wasserstein_finite(power, p, q, &metric)?;
            Ok(DivergenceValue::new(v))
        }
    }
}

/// Joint measure against the sum over the neighborhoods of `dec`.
pub fn subadditivity_bound(
    measure: Measure,
    p: &FiniteDistribution,
    q: &FiniteDistribution,
    dec: &Decomposition,
    coefficient: f64,
) -> Result<GapReport> {
    if !p.space().same_as(q.space()) {
        return Err(Error::SpaceMismatch);
    }
    dec.check_range(p.space().len())?;
    let joint = measure_value(measure, p, q)?;
    let locals = dec
        .neighborhoods()
        .iter()
        .map(|nb| measure_value(measure, &p.marginal(nb)?, &q.marginal(nb)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport::new(joint, locals, coefficient))
}

/// `W₂(P_XY,Q_XY) + W₂(P_YZ,Q_YZ) − W₂(P,Q)` for the Gaussian pair.
pub fn counterexample_gap(x: f64, y: f64) -> Result<GapReport> {
    let (p, q) = counterexample_pair(x, y)?;
    let joint = wasserstein2_gaussian(&p, &q)?;
    let locals = [[0, 1], [1, 2]]
        .iter()
        .map(|s| {
            Ok(DivergenceValue::new(wasserstein2_gaussian(
                &p.marginal(s)?,
                &q.marginal(s)?,
            )?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport::new(DivergenceValue::new(joint), locals, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SklDecomposition {
    pub direct: f64,
    pub decomposed: f64,
    pub diff: f64,
}

fn check_same_structure(p: &Mrf, q: &Mrf) -> Result<()> {
    if p.same_structure(q) {
        Ok(())
    } else {
        Err(Error::StructureMismatch(
            "MRFs differ in space, graph or cliques".into(),
        ))
    }
}

/// Per-clique `ln ψ^P − ln ψ^Q`, indexed like the potentials.
fn log_ratios(p: &Mrf, q: &Mrf) -> Vec<Vec<f64>> {
    p.potentials()
        .iter()
        .zip(q.potentials())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.ln() - y.ln()).collect())
        .collect()
}

/// SKL on the joint against the clique-wise `E_P − E_Q` of the log potential ratios.
pub fn mrf_skl_decomposition_check(p: &Mrf, q: &Mrf) -> Result<SklDecomposition> {
    check_same_structure(p, q)?;
    let jp = p.expand()?.dist;
    let jq = q.expand()?.dist;
    let direct = f_divergence(GeneratorKind::SymmetricKl, &jp, &jq)?.value();
    let ratios = log_ratios(p, q);
    let mut decomposed = 0.0;
    for (clique, r) in p.cliques().iter().zip(&ratios) {
        let mp = jp.marginal(clique)?;
        let mq = jq.marginal(clique)?;
        decomposed += mp
            .probs()
            .iter()
            .zip(mq.probs())
            .zip(r)
            .map(|((a, b), g)| (a - b) * g)
            .sum::<f64>();
    }
    Ok(SklDecomposition {
        direct,
        decomposed,
        diff: (direct - decomposed).abs(),
    })
}

/// Lipschitz constant of each clique's log potential ratio in the embedded metric.
pub fn clique_lipschitz(p: &Mrf, q: &Mrf) -> Result<Vec<f64>> {
    check_same_structure(p, q)?;
    let ratios = log_ratios(p, q);
    let mut etas = Vec::with_capacity(ratios.len());
    for (clique, r) in p.cliques().iter().zip(&ratios) {
        let space = p.space().restrict(clique)?;
        let metric = metric_from_space(&space)?;
        let mut eta: f64 = 0.0;
        for a in 0..r.len() {
            for b in a + 1..r.len() {
                let dr = (r[a] - r[b]).abs();
                let d = metric.get(a, b);
                if d > 0.0 {
                    eta = eta.max(dr / d);
                } else if dr > 0.0 {
                    // Distinct configurations embedded at the same point.
                    eta = f64::INFINITY;
                }
            }
        }
        etas.push(eta);
    }
    Ok(etas)
}

/// `SKL(P,Q) ≤ η_max · Σ_C W₁(P_C, Q_C)`.
pub fn mrf_w1_skl_check(p: &Mrf, q: &Mrf) -> Result<GapReport> {
    let etas = clique_lipschitz(p, q)?;
    let eta_max = etas.iter().copied().fold(0.0, f64::max);
    let jp = p.expand()?.dist;
    let jq = q.expand()?.dist;
    let joint = f_divergence(GeneratorKind::SymmetricKl, &jp, &jq)?;
    let locals = p
        .cliques()
        .iter()
        .map(|c| measure_value(Measure::W(1.0), &jp.marginal(c)?, &jq.marginal(c)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport::new(joint, locals, eta_max))
}

fn check_same_bn_structure(p: &BayesNet, q: &BayesNet) -> Result<()> {
    if p.space().same_as(q.space()) && p.parents() == q.parents() {
        Ok(())
    } else {
        Err(Error::StructureMismatch(
            "Bayes-nets differ in space or parent sets".into(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    /// `Σ D_f(locals) − D_f(joint)` with the parents decomposition.
    pub gap: f64,
    /// `f''(1)/2 · Σ_i χ²(P_{Π_i}, Q_{Π_i})`.
    pub predicted: f64,
    pub diff: f64,
    /// `max |P/Q − 1|` over the joint states.
    pub realized_eps: f64,
}

/// Compare the subadditivity gap of a close pair with its χ² prediction.
pub fn perturbation_gap_report(
    kind: GeneratorKind,
    p: &BayesNet,
    q: &BayesNet,
) -> Result<PerturbationReport> {
    check_same_bn_structure(p, q)?;
    let curv = generator_curvature(kind)?;
    let jp = p.expand()?;
    let jq = q.expand()?;
    let mut realized: f64 = 0.0;
    for (i, (&a, &b)) in jp.probs().iter().zip(jq.probs()).enumerate() {
        if (a == 0.0) != (b == 0.0) {
            return Err(Error::NotTwoSidedClose(format!(
                "state {i} has P = {a}, Q = {b}"
            )));
        }
        if b > 0.0 {
            realized = realized.max((a / b - 1.0).abs());
        }
    }
    if realized >= 1.0 {
        return Err(Error::NotTwoSidedClose(format!(
            "realized ε = {realized} ≥ 1"
        )));
    }
    let report = subadditivity_bound(Measure::F(kind), &jp, &jq, &bayes_neighborhoods(p), 1.0)?;
    let mut chi2_sum = 0.0;
    for pa in p.parents() {
        if pa.is_empty() {
            continue;
        }
        chi2_sum +=
            f_divergence(GeneratorKind::Chi2, &jp.marginal(pa)?, &jq.marginal(pa)?)?.value();
    }
    let predicted = 0.5 * curv * chi2_sum;
    Ok(PerturbationReport {
        gap: report.gap,
        predicted,
        diff: (report.gap - predicted).abs(),
        realized_eps: realized,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionComparison {
    pub full: GapReport,
    pub contracted: GapReport,
    /// The contracted bound exceeds the full one.
    pub loosened: bool,
}

/// Bound with the parents decomposition against the one with `s`, `s+1` merged.
pub fn contraction_comparison(
    measure: Measure,
    p: &BayesNet,
    q: &BayesNet,
    s: usize,
    coefficient: f64,
) -> Result<ContractionComparison> {
    check_same_bn_structure(p, q)?;
    let jp = p.expand()?;
    let jq = q.expand()?;
    let base = bayes_neighborhoods(p);
    let merged = contract(&base, s)?;
    let full = subadditivity_bound(measure, &jp, &jq, &base, coefficient)?;
    let contracted = subadditivity_bound(measure, &jp, &jq, &merged, coefficient)?;
    let loosened = contracted.bound > full.bound;
    Ok(ContractionComparison {
        full,
        contracted,
        loosened,
    })
}

/// Parameterized experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    /// AR(2) sequences of length 4 with coefficients `[0, x]` vs `[0, y]`.
    H1,
    /// AR(2) sequences with coefficients `[1, −1]` and initials `[½, x]` vs `[½, y]`.
    H2,
    /// The Gaussian W₂ counter-example.
    Counter,
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::H1 => "h1",
            Example::H2 => "h2",
            Example::Counter => "counter",
        }
    }

    /// `N` evenly spaced points covering the example's default range.
    pub fn default_axis(self, n: usize) -> Vec<f64> {
        let (lo, hi) = match self {
            Example::H1 => (-2.0, 2.0),
            Example::H2 => (0.05, 0.95),
            Example::Counter => (0.025, 0.975),
        };
        linspace(lo, hi, n)
    }

    pub fn check_param(self, name: &'static str, v: f64) -> Result<()> {
        let ok = match self {
            Example::H1 => v.is_finite(),
            Example::H2 | Example::Counter => v > 0.0 && v < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange {
                name,
                value: v,
                domain: if self == Example::H1 {
                    "finite reals"
                } else {
                    "(0, 1)"
                },
            })
        }
    }

    /// The Bayes-net pair at `(x, y)`; `None` for the Gaussian example.
    pub fn bayesnet_pair(self, x: f64, y: f64) -> Result<Option<(BayesNet, BayesNet)>> {
        self.check_param("x", x)?;
        self.check_param("y", y)?;
        let spec = |v: f64| match self {
            Example::H1 => ArSpec::new(4, vec![0.0, v], vec![0.5, 0.5]),
            _ => ArSpec::new(4, vec![1.0, -1.0], vec![0.5, v]),
        };
        match self {
            Example::Counter => Ok(None),
            _ => Ok(Some((
                autoregressive_bayesnet(&spec(x)?)?,
                autoregressive_bayesnet(&spec(y)?)?,
            ))),
        }
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "h1" => Ok(Example::H1),
            "h2" => Ok(Example::H2),
            "counter" | "e" => Ok(Example::Counter),
            other => Err(Error::UnknownKind(format!(
                "example `{other}` (valid: h1, h2, counter)"
            ))),
        }
    }
}

/// How the local neighborhoods are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Parents,
    Truncated,
    /// Maximal cliques of the moral graph.
    Cliques,
    /// BFS separators of the moral graph, searched from node 0.
    Bfs,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Parents => "parents",
            Mode::Truncated => "truncated",
            Mode::Cliques => "cliques",
            Mode::Bfs => "bfs",
        }
    }

    pub fn decompose(self, bn: &BayesNet) -> Result<Decomposition> {
        let base = bayes_neighborhoods(bn);
        match self {
            Mode::Parents => Ok(base),
            Mode::Truncated => truncate(bn, &base),
            Mode::Cliques => Ok(maximal_cliques(&Graph::moral(bn))),
            Mode::Bfs => {
                let g = Graph::moral(bn);
                bfs_neighborhoods(&g, &bfs_order(&g))
            }
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parents" => Ok(Mode::Parents),
            "truncated" => Ok(Mode::Truncated),
            "cliques" => Ok(Mode::Cliques),
            "bfs" => Ok(Mode::Bfs),
            other => Err(Error::UnknownKind(format!(
                "mode `{other}` (valid: parents, truncated, cliques, bfs)"
            ))),
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|k| {
                if k + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub x: f64,
    pub y: f64,
    pub gap: f64,
    pub joint: f64,
    pub bound: f64,
}

/// Gap values over a rectangular grid; cells are ordered with `x` outer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub example: Example,
    pub measure: String,
    pub mode: Mode,
    pub coefficient: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn min_gap(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.gap)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_gap(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.gap)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cells with `gap < −tol`.
    pub fn violations(&self, tol: f64) -> usize {
        self.cells.iter().filter(|c| c.gap < -tol).count()
    }
}

/// Evaluate the gap on every `(x, y)` of the grid.
///
/// The counter-example only admits `W₂`; its decomposition is fixed to
/// `{X,Y}`, `{Y,Z}` and `mode` is ignored.
pub fn sweep(
    example: Example,
    xs: &[f64],
    ys: &[f64],
    measure: Measure,
    mode: Mode,
) -> Result<SweepGrid> {
    for &x in xs {
        example.check_param("x", x)?;
    }
    for &y in ys {
        example.check_param("y", y)?;
    }
    let coefficient = match example {
        Example::Counter => {
            if measure != Measure::W(2.0) {
                return Err(Error::UnsupportedMeasure(format!(
                    "the counter-example is defined for w2, not {measure}"
                )));
            }
            1.0
        }
        _ => {
            let (bn, _) = example
                .bayesnet_pair(
                    xs.first().copied().unwrap_or(0.5),
                    ys.first().copied().unwrap_or(0.5),
                )?
                .expect("Bayes-net example");
            let metric = match measure {
                Measure::W(_) => Some(metric_from_space(bn.space())?),
                Measure::F(_) => None,
            };
            linear_coefficient(measure, metric.as_ref())?
        }
    };
    let points: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
        .collect();
    let cells = points
        .par_iter()
        .map(|&(x, y)| {
            let report = match example.bayesnet_pair(x, y)? {
                None => counterexample_gap(x, y)?,
                Some((bp, bq)) => {
                    let dec = mode.decompose(&bp)?;
                    subadditivity_bound(measure, &bp.expand()?, &bq.expand()?, &dec, coefficient)?
                }
            };
            Ok(SweepCell {
                x,
                y,
                gap: report.gap,
                joint: report.joint.value(),
                bound: report.bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        example,
        measure: measure.tag(),
        mode,
        coefficient,
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        cells,
    })
}
