//! Local-neighborhood decompositions of graphical models.
//!
//! A [`Decomposition`] is an ordered list of variable subsets. Each subset
//! also records the node(s) that own it: node `i` for a parent neighborhood
//! `{i} ∪ Π_i`, the merged pair for a contracted neighborhood, and nothing
//! for maximal cliques.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BayesNet, Graph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    BayesParents,
    MaximalCliques,
    BfsSeparators {
        order: Vec<usize>,
    },
    Truncated {
        s: usize,
    },
    Contracted {
        base: Box<Provenance>,
        merges: Vec<usize>,
    },
}

impl Provenance {
    pub fn name(&self) -> String {
        match self {
            Provenance::BayesParents => "parents".into(),
            Provenance::MaximalCliques => "cliques".into(),
            Provenance::BfsSeparators { .. } => "bfs".into(),
            Provenance::Truncated { s } => format!("truncated({s})"),
            Provenance::Contracted { base, merges } => {
                format!("contracted({}, {merges:?})", base.name())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    neighborhoods: Vec<Vec<usize>>,
    #[serde(skip)]
    owners: Vec<Vec<usize>>,
    provenance: Provenance,
}

impl Decomposition {
    /// Neighborhoods are stored sorted; `owners` must be parallel to them.
    pub fn new(
        neighborhoods: Vec<Vec<usize>>,
        owners: Vec<Vec<usize>>,
        provenance: Provenance,
    ) -> Result<Self> {
        if neighborhoods.len() != owners.len() {
            return Err(Error::InvalidModel(
                "owners must parallel neighborhoods".into(),
            ));
        }
        let neighborhoods = neighborhoods
            .into_iter()
            .map(|mut n| {
                n.sort_unstable();
                n.dedup();
                n
            })
            .collect::<Vec<_>>();
        if neighborhoods.iter().any(|n| n.is_empty()) {
            return Err(Error::EmptySubset);
        }
        Ok(Self {
            neighborhoods,
            owners,
            provenance,
        })
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    pub fn owners(&self) -> &[Vec<usize>] {
        &self.owners
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.neighborhoods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighborhoods.is_empty()
    }

    /// Every neighborhood in range for `n` variables.
    pub fn check_range(&self, n: usize) -> Result<()> {
        for &i in self.neighborhoods.iter().flatten() {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
        }
        Ok(())
    }

    /// Union of all neighborhoods.
    pub fn covered(&self) -> BTreeSet<usize> {
        self.neighborhoods.iter().flatten().copied().collect()
    }
}

/// Topological order, lowest available index first.
pub fn topological_order(bn: &BayesNet) -> Result<Vec<usize>> {
    let n = bn.len();
    let mut children = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (i, pa) in bn.parents().iter().enumerate() {
        indeg[i] = pa.len();
        for &j in pa {
            children[j].push(i);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() != n {
        return Err(Error::CyclicGraph);
    }
    Ok(order)
}

/// `[{i} ∪ Π_i for every node i]`.
pub fn bayes_neighborhoods(bn: &BayesNet) -> Decomposition {
    let neighborhoods = bn
        .parents()
        .iter()
        .enumerate()
        .map(|(i, pa)| std::iter::once(i).chain(pa.iter().copied()).collect())
        .collect();
    let owners = (0..bn.len()).map(|i| vec![i]).collect();
    Decomposition::new(neighborhoods, owners, Provenance::BayesParents)
        .expect("neighborhoods contain their node")
}

/// All maximal cliques, by Bron–Kerbosch with Tomita pivoting.
pub fn maximal_cliques(graph: &Graph) -> Decomposition {
    let mut found = Vec::new();
    let p: BTreeSet<usize> = (0..graph.len()).collect();
    bron_kerbosch(graph, &mut Vec::new(), p, BTreeSet::new(), &mut found);
    for c in &mut found {
        c.sort_unstable();
    }
    found.sort_by(|a, b| (a[0], a.len(), a.as_slice()).cmp(&(b[0], b.len(), b.as_slice())));
    let owners = vec![Vec::new(); found.len()];
    Decomposition::new(found, owners, Provenance::MaximalCliques).expect("cliques are nonempty")
}

fn bron_kerbosch(
    graph: &Graph,
    r: &mut Vec<usize>,
    mut p: BTreeSet<usize>,
    mut x: BTreeSet<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    // Pivot maximizing |P ∩ N(u)| over P ∪ X.
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| {
            (
                p.iter().filter(|v| graph.has_edge(u, **v)).count(),
                Reverse(u),
            )
        })
        .expect("P is nonempty");
    let candidates: Vec<usize> = p
        .iter()
        .copied()
        .filter(|&v| !graph.has_edge(pivot, v))
        .collect();
    for v in candidates {
        let nb = graph.neighbors(v);
        r.push(v);
        bron_kerbosch(
            graph,
            r,
            p.intersection(nb).copied().collect(),
            x.intersection(nb).copied().collect(),
            out,
        );
        r.pop();
        p.remove(&v);
        x.insert(v);
    }
}

/// Breadth-first order visiting neighbors in increasing index, restarting at
/// the smallest unvisited node.
pub fn bfs_order(graph: &Graph) -> Vec<usize> {
    let n = graph.len();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in graph.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

/// Check that `order` could be produced by breadth-first search on `graph`.
///
/// A new root may start only once every earlier node's neighbors have been
/// visited, and the earliest-visited neighbor of each non-root node (its BFS
/// parent) must be non-decreasing along the order.
pub fn check_bfs_order(graph: &Graph, order: &[usize]) -> Result<()> {
    let n = graph.len();
    if order.len() != n {
        return Err(Error::NotBfsOrdering(format!(
            "order has {} nodes, graph has {n}",
            order.len()
        )));
    }
    let mut pos = vec![usize::MAX; n];
    for (k, &v) in order.iter().enumerate() {
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, len: n });
        }
        if pos[v] != usize::MAX {
            return Err(Error::NotBfsOrdering(format!("node {v} appears twice")));
        }
        pos[v] = k;
    }
    let mut last_parent = 0usize;
    for (k, &v) in order.iter().enumerate() {
        let parent = graph
            .neighbors(v)
            .iter()
            .map(|&u| pos[u])
            .filter(|&p| p < k)
            .min();
        match parent {
            Some(pp) => {
                if pp < last_parent {
                    return Err(Error::NotBfsOrdering(format!(
                        "node {v} is discovered from position {pp} after a node discovered from position {last_parent}"
                    )));
                }
                last_parent = pp;
            }
            None => {
                let pending = order[..k]
                    .iter()
                    .flat_map(|&u| graph.neighbors(u).iter())
                    .find(|&&w| pos[w] > k);
                if let Some(&w) = pending {
                    return Err(Error::NotBfsOrdering(format!(
                        "node {v} starts a new search while node {w} is still undiscovered"
                    )));
                }
                last_parent = k;
            }
        }
    }
    Ok(())
}

/// `Σ_k = (N_1 ∪ … ∪ N_k) \ {1, …, k}` along a BFS order.
pub fn bfs_separators(graph: &Graph, order: &[usize]) -> Result<Vec<Vec<usize>>> {
    check_bfs_order(graph, order)?;
    let mut processed = BTreeSet::new();
    let mut frontier = BTreeSet::new();
    let mut seps = Vec::with_capacity(order.len());
    for (k, &v) in order.iter().enumerate() {
        processed.insert(v);
        frontier.extend(graph.neighbors(v).iter().copied());
        let sep: Vec<usize> = frontier.difference(&processed).copied().collect();
        if !separates(graph, &order[..=k], &sep) {
            return Err(Error::SeparationViolated { step: k });
        }
        seps.push(sep);
    }
    Ok(seps)
}

/// Whether removing `sep` leaves no path from `processed` to any other node outside `sep`.
pub fn separates(graph: &Graph, processed: &[usize], sep: &[usize]) -> bool {
    let n = graph.len();
    let mut blocked = vec![false; n];
    for &s in sep {
        blocked[s] = true;
    }
    let mut inside = vec![false; n];
    for &v in processed {
        inside[v] = true;
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = processed.iter().copied().filter(|&v| !blocked[v]).collect();
    for &v in &queue {
        seen[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        if !inside[v] {
            return false;
        }
        for &w in graph.neighbors(v) {
            if !blocked[w] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    true
}

/// `[{k} ∪ Σ_k for k in order]`.
pub fn bfs_neighborhoods(graph: &Graph, order: &[usize]) -> Result<Decomposition> {
    let seps = bfs_separators(graph, order)?;
    let neighborhoods = order
        .iter()
        .zip(seps)
        .map(|(&k, sep)| std::iter::once(k).chain(sep).collect())
        .collect();
    let owners = order.iter().map(|&k| vec![k]).collect();
    Decomposition::new(
        neighborhoods,
        owners,
        Provenance::BfsSeparators {
            order: order.to_vec(),
        },
    )
}

/// Stop the induction at the last node whose parents are all earlier nodes.
///
/// With `ord` the topological order, `s` is the largest position whose node
/// has parent set `{ord[0], …, ord[s-1]}`. Neighborhoods owned by earlier
/// nodes are dropped; if only the trivial `s = 0` qualifies the input is
/// returned unchanged.
pub fn truncate(bn: &BayesNet, dec: &Decomposition) -> Result<Decomposition> {
    if dec.provenance != Provenance::BayesParents {
        return Err(Error::ProvenanceMismatch {
            expected: "parents",
            found: dec.provenance.name(),
        });
    }
    let order = topological_order(bn)?;
    let s = (1..order.len()).rev().find(|&s| {
        let pa: BTreeSet<usize> = bn.parents()[order[s]].iter().copied().collect();
        let earlier: BTreeSet<usize> = order[..s].iter().copied().collect();
        pa == earlier
    });
    let Some(s) = s else {
        return Ok(dec.clone());
    };
    let dropped: BTreeSet<usize> = order[..s].iter().copied().collect();
    let (neighborhoods, owners): (Vec<_>, Vec<_>) = dec
        .neighborhoods
        .iter()
        .zip(&dec.owners)
        .filter(|(_, own)| !own.iter().any(|o| dropped.contains(o)))
        .map(|(n, o)| (n.clone(), o.clone()))
        .unzip();
    Decomposition::new(neighborhoods, owners, Provenance::Truncated { s: order[s] })
}

/// Merge the neighborhoods owned by sequence nodes `s` and `s + 1`.
pub fn contract(dec: &Decomposition, s: usize) -> Result<Decomposition> {
    let find = |node: usize| {
        dec.owners
            .iter()
            .position(|own| own.contains(&node))
            .ok_or(Error::NodeNotPresent(node))
    };
    let a = find(s)?;
    let b = find(s + 1)?;
    if a == b {
        return Err(Error::AlreadyContracted(s, s + 1));
    }
    let (first, second) = (a.min(b), a.max(b));
    let mut neighborhoods = dec.neighborhoods.clone();
    let mut owners = dec.owners.clone();
    let merged_n: Vec<usize> = neighborhoods[first]
        .iter()
        .chain(&neighborhoods[second])
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut merged_o: Vec<usize> = owners[first]
        .iter()
        .chain(&owners[second])
        .copied()
        .collect();
    merged_o.sort_unstable();
    neighborhoods[first] = merged_n;
    owners[first] = merged_o;
    neighborhoods.remove(second);
    owners.remove(second);
    let provenance = match &dec.provenance {
        Provenance::Contracted { base, merges } => {
            let mut merges = merges.clone();
            merges.push(s);
            Provenance::Contracted {
                base: base.clone(),
                merges,
            }
        }
        other => Provenance::Contracted {
            base: Box::new(other.clone()),
            merges: vec![s],
        },
    };
    Decomposition::new(neighborhoods, owners, provenance)
}
