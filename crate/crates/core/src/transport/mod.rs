//! Exact Wasserstein distances on finite metric spaces and between Gaussians.

mod bures;
pub mod simplex;

use serde::Serialize;

pub use bures::{spd_sqrt, wasserstein2_gaussian};

use crate::error::{Error, Result};
use crate::model::{FiniteDistribution, VariableSpace};

/// Marginal tolerance for couplings.
pub const MARGINAL_TOL: f64 = 1e-10;
/// Allowed primal/dual objective mismatch.
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// Pairwise Euclidean distances between the embedded joint states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTable {
    d: Vec<Vec<f64>>,
    diam: f64,
    d_min: f64,
}

impl MetricTable {
    /// Build from an explicit square matrix; checks shape, zero diagonal and symmetry.
    #[allow(clippy::needless_range_loop)]
    pub fn from_matrix(d: Vec<Vec<f64>>) -> Result<Self> {
        let m = d.len();
        if m == 0 || d.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidModel(
                "metric must be a non-empty square matrix".into(),
            ));
        }
        for i in 0..m {
            if d[i][i] != 0.0 {
                return Err(Error::InvalidModel(format!(
                    "metric diagonal entry {i} is nonzero"
                )));
            }
            for j in 0..m {
                let v = d[i][j];
                if !(v.is_finite() && v >= 0.0) || (v - d[j][i]).abs() > 1e-12 {
                    return Err(Error::InvalidModel(format!(
                        "metric entry ({i}, {j}) is invalid"
                    )));
                }
            }
        }
        let diam = d.iter().flatten().fold(0.0f64, |a, &v| a.max(v));
        let d_min = d
            .iter()
            .flatten()
            .filter(|&&v| v > 0.0)
            .fold(f64::INFINITY, |a, &v| a.min(v));
        // A one-point space has no positive distance; fall back to 0.
        let d_min = if d_min.is_finite() { d_min } else { 0.0 };
        Ok(Self { d, diam, d_min })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn d(&self) -> &[Vec<f64>] {
        &self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    /// Largest triangle-inequality violation `d_ik − d_ij − d_jk` over the given triples.
    pub fn triangle_violation(
        &self,
        triples: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> f64 {
        triples
            .into_iter()
            .map(|(i, j, k)| self.d[i][k] - self.d[i][j] - self.d[j][k])
            .fold(0.0f64, f64::max)
    }
}

/// Euclidean metric on the embedded assignments of `space`.
pub fn metric_from_space(space: &VariableSpace) -> Result<MetricTable> {
    let m = space.checked_state_count()?;
    let points: Vec<Vec<f64>> = (0..m).map(|i| space.embed(&space.decode(i))).collect();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let dist = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    MetricTable::from_matrix(d)
}

/// Optimal coupling with its dual certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    pub coupling: Vec<Vec<f64>>,
    /// Optimal value of `Σ d^p π`, before the `1/p` root.
    pub cost: f64,
    pub dual_u: Vec<f64>,
    pub dual_v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub marginal_error: f64,
    /// `|Σu·P + Σv·Q − cost|`.
    pub duality_gap: f64,
    /// Largest `u_i + v_j − c_ij`, clamped at 0.
    pub dual_infeasibility: f64,
    pub negative_flow: f64,
}

impl Certificate {
    pub fn passes(&self) -> bool {
        self.marginal_error <= MARGINAL_TOL
            && self.duality_gap <= CERTIFICATE_TOL
            && self.dual_infeasibility <= CERTIFICATE_TOL
            && self.negative_flow == 0.0
    }
}

impl TransportPlan {
    /// Recompute feasibility and strong duality against the problem data.
    pub fn certificate(
        &self,
        p: &[f64],
        q: &[f64],
        metric: &MetricTable,
        power: f64,
    ) -> Certificate {
        let m = p.len();
        let mut marginal_error: f64 = 0.0;
        let mut negative_flow: f64 = 0.0;
        let mut dual_infeasibility: f64 = 0.0;
        let mut primal = 0.0;
        for i in 0..m {
            let row: f64 = self.coupling[i].iter().sum();
            marginal_error = marginal_error.max((row - p[i]).abs());
            let col: f64 = (0..m).map(|k| self.coupling[k][i]).sum();
            marginal_error = marginal_error.max((col - q[i]).abs());
            for j in 0..m {
                let c = ground_cost(metric.get(i, j), power);
                negative_flow = negative_flow.max(-self.coupling[i][j]);
                primal += c * self.coupling[i][j];
                dual_infeasibility = dual_infeasibility.max(self.dual_u[i] + self.dual_v[j] - c);
            }
        }
        let dual: f64 = (0..m)
            .map(|i| self.dual_u[i] * p[i] + self.dual_v[i] * q[i])
            .sum();
        Certificate {
            marginal_error,
            duality_gap: (dual - self.cost).abs().max((primal - self.cost).abs()),
            dual_infeasibility,
            // Adding 0.0 turns a -0.0 into 0.0.
            negative_flow: negative_flow + 0.0,
        }
    }
}

fn ground_cost(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else {
        d.powf(p)
    }
}

fn check_power(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            domain: "[1, inf)",
        })
    }
}

/// `W_p(P, Q)` by the transportation LP; returns the value and the optimal plan.
pub fn wasserstein_finite(
    p: f64,
    dp: &FiniteDistribution,
    dq: &FiniteDistribution,
    metric: &MetricTable,
) -> Result<(f64, TransportPlan)> {
    check_power(p)?;
    if !dp.space().same_as(dq.space()) {
        return Err(Error::SpaceMismatch);
    }
    let m = dp.len();
    if metric.len() != m {
        return Err(Error::DimensionMismatch(m, metric.len()));
    }
    let cost: Vec<f64> = metric
        .d()
        .iter()
        .flat_map(|row| row.iter().map(|&d| ground_cost(d, p)))
        .collect();
    let sol = simplex::solve(dp.probs(), dq.probs(), &cost)?;
    let value = sol.cost.max(0.0).powf(1.0 / p);
    Ok((
        value,
        TransportPlan {
            coupling: sol.flow,
            cost: sol.cost,
            dual_u: sol.dual_u,
            dual_v: sol.dual_v,
        },
    ))
}

/// `W_p` on the real line by the monotone (quantile) coupling.
pub fn wasserstein_1d_oracle(
    p: f64,
    dp: &FiniteDistribution,
    dq: &FiniteDistribution,
) -> Result<f64> {
    check_power(p)?;
    if !dp.space().same_as(dq.space()) {
        return Err(Error::SpaceMismatch);
    }
    let space = dp.space();
    if space.embedding_dim() != 1 {
        return Err(Error::NotOneDimensional(space.embedding_dim()));
    }
    let atoms = |d: &FiniteDistribution| {
        let mut v: Vec<(f64, f64)> = d
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| (space.embed(&space.decode(i))[0], w))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let (a, b) = (atoms(dp), atoms(dq));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    loop {
        let w = ra.min(rb);
        total += w * ground_cost((a[i].0 - b[j].0).abs(), p);
        ra -= w;
        rb -= w;
        // Advance whichever side is exhausted; the larger residual absorbs rounding.
        if ra <= rb {
            i += 1;
            if i == a.len() {
                break;
            }
            ra += a[i].1;
        } else {
            j += 1;
            if j == b.len() {
                break;
            }
            rb += b[j].1;
        }
    }
    Ok(total.max(0.0).powf(1.0 / p))
}
