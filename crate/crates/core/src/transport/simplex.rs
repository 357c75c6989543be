//! Dense transportation simplex.
//!
//! Northwest-corner start, MODI potentials on the basis tree, and Bland's
//! rule for both the entering cell (first improving cell in row-major
//! order) and the leaving cell (lowest row-major index among the blocking
//! cells). Rows and columns with zero mass are removed before solving and
//! receive dual values afterwards that keep the dual feasible.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    /// `flow[i][j]`, full size including zero-mass rows and columns.
    pub flow: Vec<Vec<f64>>,
    pub cost: f64,
    pub dual_u: Vec<f64>,
    pub dual_v: Vec<f64>,
    pub pivots: usize,
}

struct Basis {
    m: usize,
    n: usize,
    basic: Vec<bool>,
    flow: Vec<f64>,
}

impl Basis {
    fn northwest(supply: &[f64], demand: &[f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut basis = Basis {
            m,
            n,
            basic: vec![false; m * n],
            flow: vec![0.0; m * n],
        };
        let (mut i, mut j) = (0, 0);
        let (mut rs, mut cs) = (supply[0], demand[0]);
        loop {
            let x = rs.min(cs).max(0.0);
            basis.basic[i * n + j] = true;
            basis.flow[i * n + j] = x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            let down = if i == m - 1 {
                false
            } else if j == n - 1 {
                true
            } else {
                rs <= cs
            };
            if down {
                cs -= x;
                i += 1;
                rs = supply[i];
            } else {
                rs -= x;
                j += 1;
                cs = demand[j];
            }
        }
        basis
    }

    /// Tree adjacency: rows are nodes `0..m`, columns `m..m+n`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for i in 0..self.m {
            for j in 0..self.n {
                if self.basic[i * self.n + j] {
                    adj[i].push(self.m + j);
                    adj[self.m + j].push(i);
                }
            }
        }
        adj
    }

    fn potentials(&self, cost: &[f64], adj: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        let mut queue = VecDeque::new();
        pot[0] = 0.0;
        queue.push_back(0);
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if pot[b].is_nan() {
                    let (i, j) = if a < m { (a, b - m) } else { (b, a - m) };
                    pot[b] = cost[i * n + j] - pot[a];
                    queue.push_back(b);
                }
            }
        }
        debug_assert!(
            pot.iter().all(|p| !p.is_nan()),
            "basis tree is not spanning"
        );
        (pot[..m].to_vec(), pot[m..].to_vec())
    }

    /// Basic cells on the tree path from row `i` to column `j`, in order.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Vec<usize> {
        let m = self.m;
        let target = m + j;
        let mut prev = vec![usize::MAX; m + self.n];
        prev[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(a) = queue.pop_front() {
            if a == target {
                break;
            }
            for &b in &adj[a] {
                if prev[b] == usize::MAX {
                    prev[b] = a;
                    queue.push_back(b);
                }
            }
        }
        let mut nodes = vec![target];
        let mut cur = target;
        while cur != i {
            cur = prev[cur];
            nodes.push(cur);
        }
        nodes.reverse();
        nodes
            .windows(2)
            .map(|w| {
                let (r, c) = if w[0] < m {
                    (w[0], w[1] - m)
                } else {
                    (w[1], w[0] - m)
                };
                r * self.n + c
            })
            .collect()
    }
}

/// Minimize `Σ c_ij x_ij` subject to row sums `supply` and column sums `demand`.
///
/// `cost` is row-major `supply.len() × demand.len()`.
pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (m_full, n_full) = (supply.len(), demand.len());
    assert_eq!(cost.len(), m_full * n_full);
    let rows: Vec<usize> = (0..m_full).filter(|&i| supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n_full).filter(|&j| demand[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidModel("transport problem without mass".into()));
    }
    let (m, n) = (rows.len(), cols.len());
    let a: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| demand[j]).collect();
    let c: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost[i * n_full + j]))
        .collect();
    let scale = c.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let tol = 1e-12 * scale;

    let mut basis = Basis::northwest(&a, &b);
    let max_pivots = 50 * m * n + 1000;
    let mut pivots = 0;
    let (u, v) = loop {
        let adj = basis.adjacency();
        let (u, v) = basis.potentials(&c, &adj);
        let entering = (0..m * n).find(|&k| !basis.basic[k] && c[k] - u[k / n] - v[k % n] < -tol);
        let Some(k) = entering else {
            break (u, v);
        };
        if pivots == max_pivots {
            return Err(Error::SolverCycling { iterations: pivots });
        }
        pivots += 1;
        let (i, j) = (k / n, k % n);
        let path = basis.path(&adj, i, j);
        // Cells alternate -, +, -, … along the path from row i to column j.
        let minus: Vec<usize> = path.iter().step_by(2).copied().collect();
        let plus: Vec<usize> = path.iter().skip(1).step_by(2).copied().collect();
        let theta = minus
            .iter()
            .map(|&cell| basis.flow[cell])
            .fold(f64::INFINITY, f64::min);
        let leaving = *minus
            .iter()
            .filter(|&&cell| basis.flow[cell] == theta)
            .min()
            .expect("cycle has a blocking cell");
        for &cell in &minus {
            basis.flow[cell] -= theta;
        }
        for &cell in &plus {
            basis.flow[cell] += theta;
        }
        basis.basic[k] = true;
        basis.flow[k] = theta;
        basis.basic[leaving] = false;
        basis.flow[leaving] = 0.0;
    };

    let mut flow = vec![vec![0.0; n_full]; m_full];
    let mut total = 0.0;
    for (ri, &i) in rows.iter().enumerate() {
        for (ci, &j) in cols.iter().enumerate() {
            let x = basis.flow[ri * n + ci];
            flow[i][j] = x;
            total += x * c[ri * n + ci];
        }
    }

    // Extend the duals to zero-mass rows/columns without breaking feasibility.
    let mut dual_u = vec![f64::NAN; m_full];
    let mut dual_v = vec![f64::NAN; n_full];
    for (ri, &i) in rows.iter().enumerate() {
        dual_u[i] = u[ri];
    }
    for (ci, &j) in cols.iter().enumerate() {
        dual_v[j] = v[ci];
    }
    for i in 0..m_full {
        if dual_u[i].is_nan() {
            dual_u[i] = cols
                .iter()
                .map(|&j| cost[i * n_full + j] - dual_v[j])
                .fold(f64::INFINITY, f64::min);
        }
    }
    for j in 0..n_full {
        if dual_v[j].is_nan() {
            dual_v[j] = (0..m_full)
                .map(|i| cost[i * n_full + j] - dual_u[i])
                .fold(f64::INFINITY, f64::min);
        }
    }

    Ok(TransportSolution {
        flow,
        cost: total,
        dual_u,
        dual_v,
        pivots,
    })
}
