use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use subadd_core::decomposition::{
    bfs_neighborhoods, bfs_order, contract, maximal_cliques, Decomposition,
};
use subadd_core::divergence::{chi2_approx_report, f_divergence, ClosePair, GeneratorKind};
use subadd_core::gaussian::{GaussianDistribution, PerturbedGaussian1D};
use subadd_core::io::{parse_model, Model};
use subadd_core::lab::{linear_coefficient, subadditivity_bound, sweep, Example, Measure, Mode};
use subadd_core::model::{BayesNet, VariableSpace};
use subadd_core::transport::{
    metric_from_space, wasserstein2_gaussian, wasserstein_finite, Certificate, TransportPlan,
};

use crate::output::{emit, json, sci, Emission};
use crate::{Cli, Command};

pub const ENUM_LIMIT_VAR: &str = "SUBADD_ENUM_LIMIT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] subadd_core::Error),
    #[error("{path}: {source}")]
    File {
        path: String,
        source: subadd_core::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Run one invocation and return its exit code.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    let started = Instant::now();
    let g = &cli.global;
    if !(g.tol.is_finite() && g.tol >= 0.0) {
        return Err(usage(format!(
            "--tol must be a finite nonnegative number, got {}",
            g.tol
        )));
    }
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("--threads: {e}")))?;
    }
    let enum_limit = match std::env::var(ENUM_LIMIT_VAR) {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
            usage(format!(
                "{ENUM_LIMIT_VAR} must be a positive integer, got `{v}`"
            ))
        })?),
        Err(_) => None,
    };
    let ctx = Ctx {
        tol: g.tol,
        seed: g.seed,
        enum_limit,
    };
    let (emission, code) = match &cli.command {
        Command::Divergence { kind, p, q } => ctx.divergence(kind, p, q)?,
        Command::Wasserstein {
            p,
            pdist,
            qdist,
            plan,
        } => ctx.wasserstein(*p, pdist, qdist, *plan)?,
        Command::W2Gaussian { pdist, qdist } => ctx.w2_gaussian(pdist, qdist)?,
        Command::Decompose {
            model,
            mode,
            contract,
        } => ctx.decompose(model, mode, contract)?,
        Command::Verify {
            example,
            kind,
            grid,
            mode,
        } => ctx.verify(example, kind.as_deref(), *grid, mode)?,
        Command::LocalApprox { eps, kind } => ctx.local_approx(eps, kind)?,
        Command::RandomCheck { cases, max_nodes } => ctx.random_check(*cases, *max_nodes)?,
    };
    emit(g, enum_limit, started, &emission)?;
    Ok(code)
}

struct Ctx {
    tol: f64,
    seed: u64,
    enum_limit: Option<usize>,
}

fn only(main: String) -> Emission {
    Emission {
        main,
        summary: None,
    }
}

impl Ctx {
    fn load(&self, path: &Path) -> Result<Model, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        parse_model(&text, self.enum_limit).map_err(|source| CliError::File {
            path: path.display().to_string(),
            source,
        })
    }

    fn load_table(&self, path: &Path) -> Result<subadd_core::model::FiniteDistribution, CliError> {
        self.load(path)?
            .to_distribution()
            .map_err(|source| CliError::File {
                path: path.display().to_string(),
                source,
            })
    }

    fn load_gaussian(&self, path: &Path) -> Result<GaussianDistribution, CliError> {
        match self.load(path)? {
            Model::Gaussian(g) => Ok(g),
            other => Err(usage(format!(
                "{}: expected a gaussian model, found {}",
                path.display(),
                other.type_name()
            ))),
        }
    }

    fn divergence(&self, kind: &str, p: &Path, q: &Path) -> Result<(Emission, u8), CliError> {
        let kind: GeneratorKind = kind.parse()?;
        let value = f_divergence(kind, &self.load_table(p)?, &self.load_table(q)?)?;
        Ok((only(json(&value)), 0))
    }

    fn wasserstein(
        &self,
        order: f64,
        p: &Path,
        q: &Path,
        with_plan: bool,
    ) -> Result<(Emission, u8), CliError> {
        #[derive(Serialize)]
        struct Out {
            p: f64,
            value: f64,
            cost: f64,
            certificate: Certificate,
            #[serde(skip_serializing_if = "Option::is_none")]
            plan: Option<TransportPlan>,
        }
        let (a, b) = (self.load_table(p)?, self.load_table(q)?);
        let metric = metric_from_space(a.space())?;
        let (value, plan) = wasserstein_finite(order, &a, &b, &metric)?;
        let out = Out {
            p: order,
            value,
            cost: plan.cost,
            certificate: plan.certificate(a.probs(), b.probs(), &metric, order),
            plan: with_plan.then_some(plan),
        };
        Ok((only(json(&out)), 0))
    }

    fn w2_gaussian(&self, p: &Path, q: &Path) -> Result<(Emission, u8), CliError> {
        let value = wasserstein2_gaussian(&self.load_gaussian(p)?, &self.load_gaussian(q)?)?;
        Ok((only(json(&serde_json::json!({ "value": value }))), 0))
    }

    fn decompose(
        &self,
        path: &Path,
        mode: &str,
        merges: &[usize],
    ) -> Result<(Emission, u8), CliError> {
        let mode: Mode = mode.parse()?;
        let model = self.load(path)?;
        let mut dec = match (&model, mode) {
            (Model::BayesNet(bn), _) => mode.decompose(bn)?,
            (Model::Mrf(m), Mode::Cliques) => maximal_cliques(m.graph()),
            (Model::Mrf(m), Mode::Bfs) => bfs_neighborhoods(m.graph(), &bfs_order(m.graph()))?,
            (Model::Mrf(_), _) => {
                return Err(usage(format!(
                    "mode {} needs a bayesnet model",
                    mode.name()
                )))
            }
            (other, _) => {
                return Err(usage(format!(
                    "{}: cannot decompose a {} model",
                    path.display(),
                    other.type_name()
                )))
            }
        };
        for &s in merges {
            dec = contract(&dec, s)?;
        }
        #[derive(Serialize)]
        struct Out<'a> {
            model: &'static str,
            mode: &'static str,
            decomposition: &'a Decomposition,
        }
        let out = Out {
            model: model.type_name(),
            mode: mode.name(),
            decomposition: &dec,
        };
        Ok((only(json(&out)), 0))
    }

    fn verify(
        &self,
        example: &str,
        kind: Option<&str>,
        n: usize,
        mode: &str,
    ) -> Result<(Emission, u8), CliError> {
        let example: Example = example.parse()?;
        let mode: Mode = mode.parse()?;
        let measure: Measure = match (kind, example) {
            (Some(k), _) => k.parse()?,
            (None, Example::Counter) => Measure::W(2.0),
            (None, _) => {
                return Err(usage(format!(
                    "--kind is required for example {}",
                    example.name()
                )))
            }
        };
        if n == 0 {
            return Err(usage("--grid must be at least 1"));
        }
        let axis = example.default_axis(n);
        let grid = sweep(example, &axis, &axis, measure, mode)?;

        let mut csv = String::from("x,y,gap\n");
        for c in &grid.cells {
            csv.push_str(&format!("{},{},{}\n", sci(c.x), sci(c.y), sci(c.gap)));
        }
        let violations = grid.violations(self.tol);
        let cells = grid.cells.len();
        // The counter-example succeeds when every cell breaks the bound.
        let (expect, code) = match example {
            Example::Counter => ("all cells violate", u8::from(violations != cells)),
            _ => ("no violations", u8::from(violations > 0)),
        };
        let summary = serde_json::json!({
            "example": example.name(),
            "kind": measure.tag(),
            "mode": (example != Example::Counter).then(|| mode.name()),
            "grid": n,
            "coefficient": grid.coefficient,
            "cells": cells,
            "min_gap": grid.min_gap(),
            "max_gap": grid.max_gap(),
            "violations": violations,
            "tol": self.tol,
            "expect": expect,
            "pass": code == 0,
        });
        Ok((
            Emission {
                main: csv,
                summary: Some(json(&summary)),
            },
            code,
        ))
    }

    fn local_approx(&self, eps: &[f64], kinds: &[String]) -> Result<(Emission, u8), CliError> {
        let kinds: Vec<GeneratorKind> = if kinds.is_empty() {
            GeneratorKind::ALL
                .into_iter()
                .filter(|&k| k != GeneratorKind::TotalVariation)
                .collect()
        } else {
            kinds.iter().map(|k| k.parse()).collect::<Result<_, _>>()?
        };
        let pairs: Vec<PerturbedGaussian1D> = eps
            .iter()
            .map(|&e| PerturbedGaussian1D::new(e))
            .collect::<Result<_, _>>()?;
        let mut csv = String::from("eps,kind,d_f,approx,diff,diff_over_eps3\n");
        for pg in &pairs {
            for &kind in &kinds {
                let r = chi2_approx_report(kind, ClosePair::Perturbed(pg))?;
                let e = pg.eps();
                let scaled = if e == 0.0 { 0.0 } else { r.diff / (e * e * e) };
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    sci(e),
                    kind.tag(),
                    sci(r.d_f),
                    sci(r.approx),
                    sci(r.diff),
                    sci(scaled)
                ));
            }
        }
        Ok((only(csv), 0))
    }

    fn random_check(&self, cases: usize, max_nodes: usize) -> Result<(Emission, u8), CliError> {
        if !(1..=6).contains(&max_nodes) {
            return Err(usage(format!(
                "--max-nodes must be in 1..=6, got {max_nodes}"
            )));
        }
        let measures = ["h2", "kl", "skl", "js", "tv", "w1", "w2"]
            .map(|m| m.parse::<Measure>().expect("fixed tag"));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut checks = 0usize;
        let mut violations = Vec::new();
        let mut min_gap = f64::INFINITY;
        for case in 0..cases {
            let (p, q) = random_pair(&mut rng, max_nodes)?;
            let (jp, jq) = (p.expand()?, q.expand()?);
            let metric = metric_from_space(jp.space())?;
            for mode in [Mode::Parents, Mode::Truncated] {
                let dec = mode.decompose(&p)?;
                for &m in &measures {
                    let c = linear_coefficient(m, Some(&metric))?;
                    let r = subadditivity_bound(m, &jp, &jq, &dec, c)?.with_tolerance(self.tol);
                    checks += 1;
                    min_gap = min_gap.min(r.gap);
                    if !r.satisfied {
                        violations.push(serde_json::json!({
                            "case": case, "measure": m.tag(), "mode": mode.name(), "gap": r.gap,
                        }));
                    }
                }
            }
        }
        let code = u8::from(!violations.is_empty());
        let out = serde_json::json!({
            "seed": self.seed,
            "cases": cases,
            "checks": checks,
            "min_gap": min_gap,
            "violations": violations,
        });
        Ok((only(json(&out)), code))
    }
}

/// Two Bayes-nets on one random DAG with independent CPTs bounded away from 0.
fn random_pair(rng: &mut ChaCha8Rng, max_nodes: usize) -> Result<(BayesNet, BayesNet), CliError> {
    let n = rng.gen_range(1..=max_nodes);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut parents = vec![Vec::new(); n];
    for (pos, &v) in order.iter().enumerate() {
        for &u in &order[..pos] {
            if parents[v].len() < 2 && rng.gen_bool(0.5) {
                parents[v].push(u);
            }
        }
    }
    let cpts = |rng: &mut ChaCha8Rng| -> Vec<Vec<Vec<f64>>> {
        parents
            .iter()
            .enumerate()
            .map(|(i, pa)| {
                let rows: usize = pa.iter().map(|&u| cards[u]).product();
                (0..rows)
                    .map(|_| {
                        let w: Vec<f64> = (0..cards[i]).map(|_| rng.gen_range(0.05..1.0)).collect();
                        let s: f64 = w.iter().sum();
                        w.into_iter().map(|x| x / s).collect()
                    })
                    .collect()
            })
            .collect()
    };
    let (a, b) = (cpts(rng), cpts(rng));
    let space = VariableSpace::new(cards)?;
    Ok((
        BayesNet::new(space.clone(), parents.clone(), a)?,
        BayesNet::new(space, parents, b)?,
    ))
}
