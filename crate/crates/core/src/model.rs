//! Discrete distribution models.
//!
//! Joint assignments are indexed row-major with variable 0 varying slowest.
//! Every table in this module (joint probabilities, CPT rows, clique
//! potentials) follows that convention over its own ordered variable list.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Default cap on the number of joint states a model may enumerate.
pub const DEFAULT_ENUM_LIMIT: usize = 1 << 20;

const PROB_TOL: f64 = 1e-12;

/// Product space of discrete variables with a real embedding of every state.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpace {
    cardinalities: Vec<usize>,
    /// `embedding[var][state]` is the coordinate vector of that state.
    embedding: Vec<Vec<Vec<f64>>>,
    enum_limit: usize,
}

impl VariableSpace {
    /// Space with the default embedding (state index as a 1-d coordinate).
    pub fn new(cardinalities: Vec<usize>) -> Result<Self> {
        let embedding = cardinalities
            .iter()
            .map(|&c| (0..c).map(|s| vec![s as f64]).collect())
            .collect();
        Self::with_embedding(cardinalities, embedding)
    }

    pub fn binary(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn with_embedding(
        cardinalities: Vec<usize>,
        embedding: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if cardinalities.is_empty() {
            return Err(Error::InvalidModel("space has no variables".into()));
        }
        if embedding.len() != cardinalities.len() {
            return Err(Error::InvalidModel(format!(
                "embedding covers {} variables, space has {}",
                embedding.len(),
                cardinalities.len()
            )));
        }
        for (v, (&card, states)) in cardinalities.iter().zip(&embedding).enumerate() {
            if card < 2 {
                return Err(Error::InvalidModel(format!(
                    "variable {v} has cardinality {card}, need at least 2"
                )));
            }
            if states.len() != card {
                return Err(Error::InvalidModel(format!(
                    "embedding of variable {v} lists {} states, cardinality is {card}",
                    states.len()
                )));
            }
            let dim = states[0].len();
            if dim == 0 || states.iter().any(|s| s.len() != dim) {
                return Err(Error::InvalidModel(format!(
                    "embedding of variable {v} has inconsistent or zero dimension"
                )));
            }
            if states.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "embedding of variable {v} has a non-finite coordinate"
                )));
            }
        }
        Ok(Self {
            cardinalities,
            embedding,
            enum_limit: DEFAULT_ENUM_LIMIT,
        })
    }

    pub fn with_enum_limit(mut self, limit: usize) -> Self {
        self.enum_limit = limit;
        self
    }

    pub fn enum_limit(&self) -> usize {
        self.enum_limit
    }

    pub fn len(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cardinalities.is_empty()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn embedding(&self) -> &[Vec<Vec<f64>>] {
        &self.embedding
    }

    /// Whether every variable uses the index-as-coordinate embedding.
    pub fn has_default_embedding(&self) -> bool {
        self.embedding.iter().all(|states| {
            states
                .iter()
                .enumerate()
                .all(|(s, c)| c.len() == 1 && c[0] == s as f64)
        })
    }

    /// Total number of joint states, without overflow.
    pub fn state_count_u128(&self) -> u128 {
        self.cardinalities
            .iter()
            .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128))
            .unwrap_or(u128::MAX)
    }

    /// Number of joint states, failing if it exceeds the enumeration limit.
    pub fn checked_state_count(&self) -> Result<usize> {
        let states = self.state_count_u128();
        if states > self.enum_limit as u128 {
            return Err(Error::EnumerationLimitExceeded {
                states,
                limit: self.enum_limit,
            });
        }
        Ok(states as usize)
    }

    /// Sum of the per-variable embedding dimensions.
    pub fn embedding_dim(&self) -> usize {
        self.embedding.iter().map(|s| s[0].len()).sum()
    }

    /// Decode a joint index into per-variable states.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (slot, &card) in out.iter_mut().zip(&self.cardinalities).rev() {
            *slot = index % card;
            index /= card;
        }
        out
    }

    pub fn encode(&self, states: &[usize]) -> usize {
        states
            .iter()
            .zip(&self.cardinalities)
            .fold(0, |acc, (&s, &c)| acc * c + s)
    }

    /// Coordinates of a joint assignment: concatenation of per-variable embeddings.
    pub fn embed(&self, states: &[usize]) -> Vec<f64> {
        states
            .iter()
            .enumerate()
            .flat_map(|(v, &s)| self.embedding[v][s].iter().copied())
            .collect()
    }

    /// Sub-space on an ordered subset; keeps the retained embeddings.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self> {
        validate_subset(subset, self.len())?;
        Ok(Self {
            cardinalities: subset.iter().map(|&i| self.cardinalities[i]).collect(),
            embedding: subset.iter().map(|&i| self.embedding[i].clone()).collect(),
            enum_limit: self.enum_limit,
        })
    }

    /// Same variables and embedding (the enumeration limit is not compared).
    pub fn same_as(&self, other: &Self) -> bool {
        self.cardinalities == other.cardinalities && self.embedding == other.embedding
    }
}

pub(crate) fn validate_subset(subset: &[usize], len: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut seen = BTreeSet::new();
    for &i in subset {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        if !seen.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(())
}

fn check_probability_vector(row: &[f64], what: impl Fn() -> String) -> Result<()> {
    if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidModel(format!(
            "{} has invalid entry {p}",
            what()
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidModel(format!("{} sums to {sum}", what())));
    }
    Ok(())
}

/// Explicit probability table over an enumerated product space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    space: VariableSpace,
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(space: VariableSpace, probs: Vec<f64>) -> Result<Self> {
        let states = space.checked_state_count()?;
        if probs.len() != states {
            return Err(Error::InvalidModel(format!(
                "table has {} entries, space has {states} states",
                probs.len()
            )));
        }
        check_probability_vector(&probs, || "probability table".into())?;
        Ok(Self { space, probs })
    }

    /// Distribution of a single variable with the default embedding.
    pub fn categorical(probs: Vec<f64>) -> Result<Self> {
        Self::new(VariableSpace::new(vec![probs.len()])?, probs)
    }

    /// `P(X = 1) = p` on `{0, 1}`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::categorical(vec![1.0 - p, p])
    }

    pub fn uniform(space: VariableSpace) -> Result<Self> {
        let m = space.checked_state_count()?;
        Self::new(space, vec![1.0 / m as f64; m])
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, states: &[usize]) -> f64 {
        self.probs[self.space.encode(states)]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Marginal over an ordered subset of variables.
    pub fn marginal(&self, subset: &[usize]) -> Result<FiniteDistribution> {
        let space = self.space.restrict(subset)?;
        let m = space.state_count_u128() as usize;
        let mut out = vec![0.0; m];
        let mut states = vec![0usize; self.space.len()];
        for &p in &self.probs {
            let idx = subset
                .iter()
                .fold(0, |acc, &v| acc * self.space.cardinalities[v] + states[v]);
            out[idx] += p;
            increment(&mut states, &self.space.cardinalities);
        }
        Ok(FiniteDistribution { space, probs: out })
    }
}

/// Free-function form of [`FiniteDistribution::marginal`].
pub fn marginal(dist: &FiniteDistribution, subset: &[usize]) -> Result<FiniteDistribution> {
    dist.marginal(subset)
}

/// Advance a row-major multi-index (last variable fastest).
pub(crate) fn increment(states: &mut [usize], cards: &[usize]) {
    for (s, &c) in states.iter_mut().zip(cards).rev() {
        *s += 1;
        if *s < c {
            return;
        }
        *s = 0;
    }
}

/// Discrete Bayes-net: DAG given by parent lists plus one CPT per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    space: VariableSpace,
    parents: Vec<Vec<usize>>,
    /// `cpts[i][row]` is the distribution of node `i` given parent configuration `row`.
    cpts: Vec<Vec<Vec<f64>>>,
}

impl BayesNet {
    pub fn new(
        space: VariableSpace,
        parents: Vec<Vec<usize>>,
        cpts: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = space.len();
        if parents.len() != n || cpts.len() != n {
            return Err(Error::InvalidModel(format!(
                "{n} variables but {} parent lists and {} CPTs",
                parents.len(),
                cpts.len()
            )));
        }
        for (i, pa) in parents.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &j in pa {
                if j >= n {
                    return Err(Error::IndexOutOfRange { index: j, len: n });
                }
                if j == i || !seen.insert(j) {
                    return Err(Error::InvalidModel(format!(
                        "node {i} has invalid parent list {pa:?}"
                    )));
                }
            }
            let rows: usize = pa.iter().map(|&j| space.cardinalities[j]).product();
            if cpts[i].len() != rows {
                return Err(Error::InvalidModel(format!(
                    "CPT of node {i} has {} rows, expected {rows}",
                    cpts[i].len()
                )));
            }
            for (r, row) in cpts[i].iter().enumerate() {
                if row.len() != space.cardinalities[i] {
                    return Err(Error::InvalidModel(format!(
                        "CPT row {r} of node {i} has {} entries, cardinality is {}",
                        row.len(),
                        space.cardinalities[i]
                    )));
                }
                check_probability_vector(row, || format!("CPT row {r} of node {i}"))?;
            }
        }
        let bn = Self {
            space,
            parents,
            cpts,
        };
        crate::decomposition::topological_order(&bn)?;
        Ok(bn)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn cpts(&self) -> &[Vec<Vec<f64>>] {
        &self.cpts
    }

    /// Row index of the parent configuration of `node` inside a joint assignment.
    pub fn parent_row(&self, node: usize, states: &[usize]) -> usize {
        self.parents[node]
            .iter()
            .fold(0, |acc, &j| acc * self.space.cardinalities[j] + states[j])
    }

    pub fn with_space(mut self, space: VariableSpace) -> Result<Self> {
        if space.cardinalities != self.space.cardinalities {
            return Err(Error::SpaceMismatch);
        }
        self.space = space;
        Ok(self)
    }

    /// Joint probability table.
    pub fn expand(&self) -> Result<FiniteDistribution> {
        let m = self.space.checked_state_count()?;
        let mut probs = Vec::with_capacity(m);
        let mut states = vec![0usize; self.len()];
        for _ in 0..m {
            let p = (0..self.len())
                .map(|i| self.cpts[i][self.parent_row(i, &states)][states[i]])
                .product::<f64>();
            probs.push(p);
            increment(&mut states, &self.space.cardinalities);
        }
        FiniteDistribution::new(self.space.clone(), probs)
    }
}

pub fn expand_bayesnet(bn: &BayesNet) -> Result<FiniteDistribution> {
    bn.expand()
}

/// Undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        let n = self.adj.len();
        for i in [a, b] {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
        }
        if a == b {
            return Err(Error::InvalidModel(format!("self-loop on node {a}")));
        }
        self.adj[a].insert(b);
        self.adj[b].insert(a);
        Ok(())
    }

    /// Complete graph on each listed set.
    pub fn from_cliques(n: usize, cliques: &[Vec<usize>]) -> Result<Self> {
        let mut g = Self::new(n);
        for c in cliques {
            for (k, &a) in c.iter().enumerate() {
                for &b in &c[k + 1..] {
                    g.add_edge(a, b)?;
                }
            }
        }
        Ok(g)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path edges are in range")
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::path(n);
        if n > 2 {
            g.add_edge(n - 1, 0).expect("cycle edge is in range");
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        let all: Vec<usize> = (0..n).collect();
        Self::from_cliques(n, &[all]).expect("complete graph edges are in range")
    }

    /// Each node joined to the `p` nodes before and after it.
    pub fn sequence(n: usize, p: usize) -> Self {
        let mut g = Self::new(n);
        for i in 0..n {
            for j in i + 1..n.min(i + p + 1) {
                g.add_edge(i, j).expect("sequence edges are in range");
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.range(a + 1..).map(move |&b| (a, b)))
            .collect()
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(k, &a)| set[k + 1..].iter().all(|&b| a != b && self.has_edge(a, b)))
    }

    /// Moral graph of a DAG: skeleton plus edges between co-parents.
    pub fn moral(bn: &BayesNet) -> Self {
        let mut g = Self::new(bn.len());
        for (i, pa) in bn.parents().iter().enumerate() {
            for (k, &a) in pa.iter().enumerate() {
                g.add_edge(a, i).expect("parent indices validated");
                for &b in &pa[k + 1..] {
                    g.add_edge(a, b).expect("parent indices validated");
                }
            }
        }
        g
    }
}

/// Discrete MRF: strictly positive potentials on cliques of an undirected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Mrf {
    space: VariableSpace,
    graph: Graph,
    cliques: Vec<Vec<usize>>,
    /// Row-major over the clique's member order.
    potentials: Vec<Vec<f64>>,
}

/// Joint table of an MRF together with its partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct MrfExpansion {
    pub dist: FiniteDistribution,
    pub partition: f64,
}

impl Mrf {
    pub fn new(
        space: VariableSpace,
        graph: Graph,
        cliques: Vec<Vec<usize>>,
        potentials: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if graph.len() != space.len() {
            return Err(Error::InvalidModel(format!(
                "graph has {} nodes, space has {} variables",
                graph.len(),
                space.len()
            )));
        }
        if cliques.len() != potentials.len() {
            return Err(Error::InvalidModel(format!(
                "{} cliques but {} potentials",
                cliques.len(),
                potentials.len()
            )));
        }
        for (c, (members, table)) in cliques.iter().zip(&potentials).enumerate() {
            validate_subset(members, space.len())?;
            if !graph.is_clique(members) {
                return Err(Error::InvalidModel(format!(
                    "{members:?} is not a clique of the graph"
                )));
            }
            let size: usize = members.iter().map(|&v| space.cardinalities[v]).product();
            if table.len() != size {
                return Err(Error::InvalidModel(format!(
                    "potential of clique {c} has {} entries, expected {size}",
                    table.len()
                )));
            }
            if let Some((entry, &value)) = table
                .iter()
                .enumerate()
                .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
            {
                return Err(Error::NonPositivePotential {
                    clique: c,
                    entry,
                    value,
                });
            }
        }
        Ok(Self {
            space,
            graph,
            cliques,
            potentials,
        })
    }

    /// Graph induced by the cliques themselves.
    pub fn from_cliques(
        space: VariableSpace,
        cliques: Vec<Vec<usize>>,
        potentials: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let graph = Graph::from_cliques(space.len(), &cliques)?;
        Self::new(space, graph, cliques, potentials)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn potentials(&self) -> &[Vec<f64>] {
        &self.potentials
    }

    pub fn with_space(mut self, space: VariableSpace) -> Result<Self> {
        if space.cardinalities != self.space.cardinalities {
            return Err(Error::SpaceMismatch);
        }
        self.space = space;
        Ok(self)
    }

    /// Index of a clique configuration inside a joint assignment.
    pub fn clique_row(&self, clique: usize, states: &[usize]) -> usize {
        self.cliques[clique]
            .iter()
            .fold(0, |acc, &v| acc * self.space.cardinalities[v] + states[v])
    }

    /// Same space, graph and clique list.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.space.same_as(&other.space)
            && self.graph == other.graph
            && self.cliques == other.cliques
    }

    pub fn expand(&self) -> Result<MrfExpansion> {
        let m = self.space.checked_state_count()?;
        let mut weights = Vec::with_capacity(m);
        let mut states = vec![0usize; self.space.len()];
        for _ in 0..m {
            let w = (0..self.cliques.len())
                .map(|c| self.potentials[c][self.clique_row(c, &states)])
                .product::<f64>();
            weights.push(w);
            increment(&mut states, &self.space.cardinalities);
        }
        let partition: f64 = weights.iter().sum();
        let probs = weights.into_iter().map(|w| w / partition).collect();
        Ok(MrfExpansion {
            dist: FiniteDistribution::new(self.space.clone(), probs)?,
            partition,
        })
    }
}

pub fn expand_mrf(m: &Mrf) -> Result<MrfExpansion> {
    m.expand()
}

/// Binary auto-regressive sequence of order `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArSpec {
    n: usize,
    coeffs: Vec<f64>,
    initials: Vec<f64>,
}

impl ArSpec {
    /// `coeffs[i]` weighs `X_{t-1-i}`; `initials[i] = P(X_i = 1)` for the first `p` nodes.
    pub fn new(n: usize, coeffs: Vec<f64>, initials: Vec<f64>) -> Result<Self> {
        let p = coeffs.len();
        if p == 0 || p >= n {
            return Err(Error::InvalidModel(format!(
                "AR order {p} must satisfy 0 < p < n = {n}"
            )));
        }
        if initials.len() != p {
            return Err(Error::InvalidModel(format!(
                "{} initials for order {p}",
                initials.len()
            )));
        }
        if let Some(&v) = initials.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ParameterOutOfRange {
                name: "initial",
                value: v,
                domain: "[0, 1]",
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("AR coefficients must be finite".into()));
        }
        Ok(Self {
            n,
            coeffs,
            initials,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn initials(&self) -> &[f64] {
        &self.initials
    }
}

pub fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Bayes-net of a binary AR sequence: node `t >= p` has parents `[t-1, ..., t-p]`.
pub fn autoregressive_bayesnet(spec: &ArSpec) -> Result<BayesNet> {
    let p = spec.order();
    let mut parents = Vec::with_capacity(spec.n);
    let mut cpts = Vec::with_capacity(spec.n);
    for t in 0..spec.n {
        if t < p {
            let q = spec.initials[t];
            parents.push(Vec::new());
            cpts.push(vec![vec![1.0 - q, q]]);
        } else {
            parents.push((1..=p).map(|i| t - i).collect());
            // Row-major over parents, X_{t-1} slowest.
            let rows = (0..1usize << p)
                .map(|row| {
                    let u: f64 = (0..p)
                        .map(|i| {
                            let bit = (row >> (p - 1 - i)) & 1;
                            spec.coeffs[i] * bit as f64
                        })
                        .sum();
                    let one = logistic(u);
                    vec![1.0 - one, one]
                })
                .collect();
            cpts.push(rows);
        }
    }
    BayesNet::new(VariableSpace::binary(spec.n)?, parents, cpts)
}
