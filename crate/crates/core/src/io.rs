//! JSON model files.
//!
//! ```json
//! {"type": "bayesnet", "cardinalities": [2, 2], "parents": [[], [0]],
//!  "cpts": [[[0.5, 0.5]], [[0.9, 0.1], [0.2, 0.8]]]}
//! ```
//!
//! Other types are `mrf` (`cliques`, `potentials`, optional `edges`),
//! `gaussian` (`mean`, `cov`) and `table` (`probs`). Discrete models accept
//! an optional `embedding`; indices are 0-based and joint tables are
//! row-major with variable 0 slowest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianDistribution;
use crate::model::{BayesNet, FiniteDistribution, Graph, Mrf, VariableSpace};

type Embedding = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ModelFile {
    Bayesnet {
        cardinalities: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embedding: Option<Embedding>,
        parents: Vec<Vec<usize>>,
        cpts: Vec<Vec<Vec<f64>>>,
    },
    Mrf {
        cardinalities: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embedding: Option<Embedding>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<(usize, usize)>>,
        cliques: Vec<Vec<usize>>,
        potentials: Vec<Vec<f64>>,
    },
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    Table {
        cardinalities: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embedding: Option<Embedding>,
        probs: Vec<f64>,
    },
}

/// Any model that can be read from or written to a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    BayesNet(BayesNet),
    Mrf(Mrf),
    Gaussian(GaussianDistribution),
    Table(FiniteDistribution),
}

impl Model {
    pub fn type_name(&self) -> &'static str {
        match self {
            Model::BayesNet(_) => "bayesnet",
            Model::Mrf(_) => "mrf",
            Model::Gaussian(_) => "gaussian",
            Model::Table(_) => "table",
        }
    }

    /// Explicit joint table of a discrete model.
    pub fn to_distribution(&self) -> Result<FiniteDistribution> {
        match self {
            Model::BayesNet(bn) => bn.expand(),
            Model::Mrf(m) => Ok(m.expand()?.dist),
            Model::Table(t) => Ok(t.clone()),
            Model::Gaussian(_) => Err(Error::InvalidModel("a Gaussian has no finite table".into())),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&to_file(self)).expect("model files always serialize")
    }
}

fn space(
    cardinalities: Vec<usize>,
    embedding: Option<Embedding>,
    enum_limit: Option<usize>,
) -> Result<VariableSpace> {
    let space = match embedding {
        Some(e) => VariableSpace::with_embedding(cardinalities, e)?,
        None => VariableSpace::new(cardinalities)?,
    };
    Ok(match enum_limit {
        Some(limit) => space.with_enum_limit(limit),
        None => space,
    })
}

fn explicit_embedding(s: &VariableSpace) -> Option<Embedding> {
    (!s.has_default_embedding()).then(|| s.embedding().to_vec())
}

/// Parse a model file; `enum_limit` overrides the default enumeration cap.
pub fn parse_model(text: &str, enum_limit: Option<usize>) -> Result<Model> {
    let file: ModelFile = serde_json::from_str(text)?;
    Ok(match file {
        ModelFile::Bayesnet {
            cardinalities,
            embedding,
            parents,
            cpts,
        } => Model::BayesNet(BayesNet::new(
            space(cardinalities, embedding, enum_limit)?,
            parents,
            cpts,
        )?),
        ModelFile::Mrf {
            cardinalities,
            embedding,
            edges,
            cliques,
            potentials,
        } => {
            let sp = space(cardinalities, embedding, enum_limit)?;
            let n = sp.len();
            let graph = match edges {
                Some(e) => Graph::from_edges(n, &e)?,
                None => Graph::from_cliques(n, &cliques)?,
            };
            Model::Mrf(Mrf::new(sp, graph, cliques, potentials)?)
        }
        ModelFile::Gaussian { mean, cov } => {
            Model::Gaussian(GaussianDistribution::from_rows(&mean, &cov)?)
        }
        ModelFile::Table {
            cardinalities,
            embedding,
            probs,
        } => Model::Table(FiniteDistribution::new(
            space(cardinalities, embedding, enum_limit)?,
            probs,
        )?),
    })
}

fn to_file(model: &Model) -> ModelFile {
    match model {
        Model::BayesNet(bn) => ModelFile::Bayesnet {
            cardinalities: bn.space().cardinalities().to_vec(),
            embedding: explicit_embedding(bn.space()),
            parents: bn.parents().to_vec(),
            cpts: bn.cpts().to_vec(),
        },
        Model::Mrf(m) => {
            let implied = Graph::from_cliques(m.space().len(), m.cliques()).ok();
            ModelFile::Mrf {
                cardinalities: m.space().cardinalities().to_vec(),
                embedding: explicit_embedding(m.space()),
                edges: (implied.as_ref() != Some(m.graph())).then(|| m.graph().edges()),
                cliques: m.cliques().to_vec(),
                potentials: m.potentials().to_vec(),
            }
        }
        Model::Gaussian(g) => ModelFile::Gaussian {
            mean: g.mean().iter().copied().collect(),
            cov: (0..g.dim())
                .map(|i| g.cov().row(i).iter().copied().collect())
                .collect(),
        },
        Model::Table(t) => ModelFile::Table {
            cardinalities: t.space().cardinalities().to_vec(),
            embedding: explicit_embedding(t.space()),
            probs: t.probs().to_vec(),
        },
    }
}
