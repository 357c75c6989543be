//! Random model generators and brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use subadd_core::model::{BayesNet, FiniteDistribution, Graph, Mrf, VariableSpace};

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector; with `allow_zeros` some entries are exactly 0.
pub fn simplex_point(rng: &mut TestRng, m: usize, allow_zeros: bool) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..m)
            .map(|_| {
                if allow_zeros && rng.gen_bool(0.2) {
                    0.0
                } else {
                    -rng.gen::<f64>().max(1e-300).ln()
                }
            })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            v.iter_mut().for_each(|x| *x /= s);
            return v;
        }
    }
}

/// Probability vector with entries in `[floor, 1]` before normalization.
pub fn positive_point(rng: &mut TestRng, m: usize, floor: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.gen_range(floor..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn categorical(probs: Vec<f64>) -> FiniteDistribution {
    FiniteDistribution::categorical(probs).unwrap()
}

/// Random DAG on `n` nodes (up to three parents each) in a shuffled order.
pub fn random_parents(rng: &mut TestRng, n: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut parents = vec![Vec::new(); n];
    for (pos, &node) in order.iter().enumerate() {
        for &earlier in &order[..pos] {
            if parents[node].len() < 3 && rng.gen_bool(0.5) {
                parents[node].push(earlier);
            }
        }
    }
    parents
}

pub fn random_cpts(
    rng: &mut TestRng,
    cards: &[usize],
    parents: &[Vec<usize>],
    floor: f64,
) -> Vec<Vec<Vec<f64>>> {
    parents
        .iter()
        .enumerate()
        .map(|(i, pa)| {
            let rows: usize = pa.iter().map(|&p| cards[p]).product();
            (0..rows)
                .map(|_| positive_point(rng, cards[i], floor))
                .collect()
        })
        .collect()
}

/// Two Bayes-nets on one random DAG with independent random CPTs.
pub fn random_bn_pair(rng: &mut TestRng, max_nodes: usize) -> (BayesNet, BayesNet) {
    let n = rng.gen_range(1..=max_nodes);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
    let parents = random_parents(rng, n);
    let space = VariableSpace::new(cards.clone()).unwrap();
    let a = random_cpts(rng, &cards, &parents, 0.05);
    let b = random_cpts(rng, &cards, &parents, 0.05);
    (
        BayesNet::new(space.clone(), parents.clone(), a).unwrap(),
        BayesNet::new(space, parents, b).unwrap(),
    )
}

/// A pair on a random DAG that shares every CPT except those of the leaves.
pub fn leaf_only_pair(rng: &mut TestRng, max_nodes: usize) -> (BayesNet, BayesNet) {
    let n = rng.gen_range(2..=max_nodes);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
    let parents = random_parents(rng, n);
    let has_child: Vec<bool> = (0..n)
        .map(|v| parents.iter().any(|pa| pa.contains(&v)))
        .collect();
    let shared = random_cpts(rng, &cards, &parents, 0.05);
    let other = random_cpts(rng, &cards, &parents, 0.05);
    let mixed = (0..n)
        .map(|i| {
            if has_child[i] {
                shared[i].clone()
            } else {
                other[i].clone()
            }
        })
        .collect();
    let space = VariableSpace::new(cards).unwrap();
    (
        BayesNet::new(space.clone(), parents.clone(), shared).unwrap(),
        BayesNet::new(space, parents, mixed).unwrap(),
    )
}

pub fn random_graph(rng: &mut TestRng, n: usize, density: f64) -> Graph {
    let mut g = Graph::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                g.add_edge(a, b).unwrap();
            }
        }
    }
    g
}

/// Maximal cliques by checking every vertex subset.
pub fn brute_force_cliques(g: &Graph) -> BTreeSet<Vec<usize>> {
    let n = g.len();
    let cliques: Vec<Vec<usize>> = (1u32..1 << n)
        .map(|mask| (0..n).filter(|&v| mask >> v & 1 == 1).collect::<Vec<_>>())
        .filter(|s| g.is_clique(s))
        .collect();
    cliques
        .iter()
        .filter(|c| {
            (0..n).all(|v| {
                c.contains(&v) || {
                    let mut bigger = (*c).clone();
                    bigger.push(v);
                    !g.is_clique(&bigger)
                }
            })
        })
        .cloned()
        .collect()
}

/// Standard BFS order restarting at the smallest undiscovered node.
pub fn bfs_order(g: &Graph) -> Vec<usize> {
    let n = g.len();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

/// No path avoiding `sep` joins `a` to `b`.
pub fn separated_by(g: &Graph, a: &[usize], b: &[usize], sep: &[usize]) -> bool {
    let n = g.len();
    let mut blocked = vec![false; n];
    sep.iter().for_each(|&s| blocked[s] = true);
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = a.iter().copied().filter(|&v| !blocked[v]).collect();
    stack.iter().for_each(|&v| seen[v] = true);
    while let Some(v) = stack.pop() {
        for &w in g.neighbors(v) {
            if !blocked[w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    b.iter().all(|&v| blocked[v] || !seen[v])
}

/// Random MRF on a 4-cycle (`cycle = true`) or a path of 3 to 5 nodes.
pub fn random_mrf(rng: &mut TestRng, cycle: bool, cards: &[usize], cliques: &[Vec<usize>]) -> Mrf {
    let space = VariableSpace::new(cards.to_vec()).unwrap();
    let graph = if cycle {
        Graph::cycle(cards.len())
    } else {
        Graph::path(cards.len())
    };
    let potentials = cliques
        .iter()
        .map(|c| {
            let size: usize = c.iter().map(|&v| cards[v]).product();
            (0..size).map(|_| rng.gen_range(0.2..5.0)).collect()
        })
        .collect();
    Mrf::new(space, graph, cliques.to_vec(), potentials).unwrap()
}

pub fn random_mrf_pair(rng: &mut TestRng, cycle: bool) -> (Mrf, Mrf) {
    let n = if cycle { 4 } else { rng.gen_range(3..=5) };
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
    let mut cliques: Vec<Vec<usize>> = (0..n - 1).map(|i| vec![i, i + 1]).collect();
    if cycle {
        cliques.push(vec![0, n - 1]);
    }
    (
        random_mrf(rng, cycle, &cards, &cliques),
        random_mrf(rng, cycle, &cards, &cliques),
    )
}

/// Direct textbook formulas for a few f-divergences, independent of the generator table.
pub fn kl_direct(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a == 0.0 {
                0.0
            } else if b == 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

pub fn tv_direct(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn h2_direct(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q)
        .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
        .sum::<f64>()
}

pub fn js_direct(p: &[f64], q: &[f64]) -> f64 {
    let term = |a: f64, m: f64| if a == 0.0 { 0.0 } else { a * (a / m).ln() };
    0.5 * p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            term(a, m) + term(b, m)
        })
        .sum::<f64>()
}

/// Exhaustive LP optimum over the vertices of the transportation polytope.
///
/// Every vertex is a basic solution on a spanning tree of `m + n − 1` cells;
/// all such cell sets are enumerated and their flows solved by leaf peeling.
pub fn vertex_enumeration_optimum(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let chosen: Vec<(usize, usize)> = pick.iter().map(|&c| cells[c]).collect();
        if let Some(flow) = tree_flow(a, b, &chosen) {
            if flow.iter().all(|&f| f >= -1e-12) {
                let c: f64 = chosen
                    .iter()
                    .zip(&flow)
                    .map(|(&(i, j), f)| cost[i][j] * f)
                    .sum();
                best = best.min(c);
            }
        }
        // Next k-combination of the cells.
        let total = cells.len();
        let mut i = k;
        while i > 0 && pick[i - 1] == total - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        pick[i - 1] += 1;
        for j in i..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

fn tree_flow(a: &[f64], b: &[f64], chosen: &[(usize, usize)]) -> Option<Vec<f64>> {
    let (m, n) = (a.len(), b.len());
    let mut row_left = a.to_vec();
    let mut col_left = b.to_vec();
    let mut flow = vec![f64::NAN; chosen.len()];
    let mut open: Vec<bool> = vec![true; chosen.len()];
    for _ in 0..chosen.len() {
        // A row or column touched by exactly one open cell fixes that cell.
        let mut fixed = None;
        for line in 0..m + n {
            let touching: Vec<usize> = (0..chosen.len())
                .filter(|&c| {
                    open[c]
                        && if line < m {
                            chosen[c].0 == line
                        } else {
                            chosen[c].1 == line - m
                        }
                })
                .collect();
            if touching.len() == 1 {
                fixed = Some((line, touching[0]));
                break;
            }
        }
        let (line, c) = fixed?;
        let (i, j) = chosen[c];
        let f = if line < m { row_left[i] } else { col_left[j] };
        flow[c] = f;
        row_left[i] -= f;
        col_left[j] -= f;
        open[c] = false;
    }
    let residual = row_left
        .iter()
        .chain(&col_left)
        .fold(0.0f64, |acc, r| acc.max(r.abs()));
    (residual < 1e-12).then_some(flow)
}
