//! Randomized invariants of divergences, transport, models and decompositions.

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use subadd_core::decomposition::{bayes_neighborhoods, contract, topological_order, truncate};
use subadd_core::divergence::{f_divergence, GeneratorKind};
use subadd_core::gaussian::GaussianDistribution;
use subadd_core::io::{parse_model, Model};
use subadd_core::lab::{
    clique_lipschitz, contraction_comparison, mrf_skl_decomposition_check, mrf_w1_skl_check,
    perturbation_gap_report, subadditivity_bound, Measure,
};
use subadd_core::model::{BayesNet, FiniteDistribution, Mrf, VariableSpace};
use subadd_core::transport::{metric_from_space, wasserstein2_gaussian, wasserstein_finite};

use common::*;

use GeneratorKind::*;

fn pair(seed: u64, max_support: usize, zeros: bool) -> (FiniteDistribution, FiniteDistribution) {
    let mut r = rng(seed);
    let m = r.gen_range(2..=max_support);
    (
        categorical(simplex_point(&mut r, m, zeros)),
        categorical(simplex_point(&mut r, m, zeros)),
    )
}

fn value(k: GeneratorKind, p: &FiniteDistribution, q: &FiniteDistribution) -> f64 {
    f_divergence(k, p, q).unwrap().value()
}

/// Random distributions on a small space embedded in the plane.
fn planar_triple(seed: u64) -> [FiniteDistribution; 3] {
    let mut r = rng(seed);
    let m = r.gen_range(2..=7);
    let embedding = vec![(0..m)
        .map(|_| vec![r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)])
        .collect()];
    let space = VariableSpace::with_embedding(vec![m], embedding).unwrap();
    [(); 3].map(|_| FiniteDistribution::new(space.clone(), simplex_point(&mut r, m, true)).unwrap())
}

/// Relative agreement, since χ²-type values grow large on skewed pairs.
fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

/// Fixed ChaCha stream so every run draws the same seeds.
fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 128,
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn divergences_nonnegative_and_vanish_on_equal(seed in any::<u64>()) {
        let (p, q) = pair(seed, 16, true);
        for k in GeneratorKind::ALL.into_iter().chain([Alpha(0.5), Alpha(2.0), Alpha(-1.0)]) {
            prop_assert!(value(k, &p, &q) >= 0.0);
            prop_assert_eq!(value(k, &p, &p), 0.0);
        }
    }

    #[test]
    fn skl_is_sum_of_both_kls(seed in any::<u64>()) {
        let (p, q) = pair(seed, 16, false);
        let skl = value(SymmetricKl, &p, &q);
        prop_assert!(near(skl, value(Kl, &p, &q) + value(Kl, &q, &p)));
    }

    #[test]
    fn alpha_family_collapses(seed in any::<u64>()) {
        let (p, q) = pair(seed, 16, false);
        prop_assert!(near(value(Alpha(2.0), &p, &q), 0.5 * value(Chi2, &p, &q)));
        prop_assert!(near(value(Alpha(0.5), &p, &q), 4.0 * value(Hellinger2, &p, &q)));
        prop_assert!(near(value(Alpha(-1.0), &p, &q), 0.5 * value(ReverseChi2, &p, &q)));
        prop_assert_eq!(value(Alpha(1.0), &p, &q), value(Kl, &p, &q));
        prop_assert_eq!(value(Alpha(0.0), &p, &q), value(ReverseKl, &p, &q));
    }

    #[test]
    fn symmetric_divergences(seed in any::<u64>()) {
        let (p, q) = pair(seed, 16, true);
        for k in [TotalVariation, Hellinger2, JensenShannon, SymmetricKl] {
            let (a, b) = (f_divergence(k, &p, &q).unwrap(), f_divergence(k, &q, &p).unwrap());
            prop_assert!(a == b || (a.value() - b.value()).abs() < 1e-12);
        }
    }

    #[test]
    fn wasserstein_metric_axioms(seed in any::<u64>()) {
        let [a, b, c] = planar_triple(seed);
        let metric = metric_from_space(a.space()).unwrap();
        let w = |x: &FiniteDistribution, y: &FiniteDistribution, p| wasserstein_finite(p, x, y, &metric).unwrap().0;
        for p in [1.0, 2.0] {
            prop_assert_eq!(w(&a, &a, p), 0.0);
            prop_assert!((w(&a, &b, p) - w(&b, &a, p)).abs() < 1e-12);
            prop_assert!(w(&a, &c, p) <= w(&a, &b, p) + w(&b, &c, p) + 1e-8);
        }
        prop_assert!(w(&a, &b, 1.0) <= w(&a, &b, 2.0) + 1e-9);
    }

    #[test]
    fn wasserstein_tv_sandwich(seed in any::<u64>()) {
        let [a, b, _] = planar_triple(seed);
        let metric = metric_from_space(a.space()).unwrap();
        let tv = value(TotalVariation, &a, &b);
        for p in [1.0, 2.0, 3.0] {
            let (w, plan) = wasserstein_finite(p, &a, &b, &metric).unwrap();
            prop_assert!(plan.certificate(a.probs(), b.probs(), &metric, p).passes());
            let wp = w.powf(p);
            prop_assert!(metric.d_min().powf(p) * tv <= wp + 1e-12);
            prop_assert!(wp <= metric.diam().powf(p) * tv + 1e-12);
        }
    }

    #[test]
    fn gaussian_w2_permutation_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.gen_range(2..=5);
        let g = |r: &mut TestRng| {
            let b = DMatrix::from_fn(d, d, |_, _| r.gen_range(-1.0..1.0));
            let mean = DVector::from_fn(d, |_, _| r.gen_range(-2.0..2.0));
            GaussianDistribution::new(mean, &b * b.transpose() + DMatrix::identity(d, d) * 0.05).unwrap()
        };
        let (p, q) = (g(&mut r), g(&mut r));
        let mut perm: Vec<usize> = (0..d).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let base = wasserstein2_gaussian(&p, &q).unwrap();
        let moved = wasserstein2_gaussian(&p.permuted(&perm).unwrap(), &q.permuted(&perm).unwrap()).unwrap();
        prop_assert!((base - moved).abs() < 1e-10);
        // A square root of rounding-level Bures residue.
        let selfd = wasserstein2_gaussian(&p, &p).unwrap();
        prop_assert!(selfd < 1e-9, "{}", selfd);
    }

    #[test]
    fn expansion_reproduces_cpts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (bn, _) = random_bn_pair(&mut r, 5);
        let joint = bn.expand().unwrap();
        prop_assert!((joint.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let cards = bn.space().cardinalities().to_vec();
        for (i, pa) in bn.parents().iter().enumerate() {
            let mut family = pa.clone();
            family.push(i);
            let fam = joint.marginal(&family).unwrap();
            let k = cards[i];
            for (row, cpt_row) in bn.cpts()[i].iter().enumerate() {
                let slice = &fam.probs()[row * k..(row + 1) * k];
                let mass: f64 = slice.iter().sum();
                for (x, expected) in slice.iter().zip(cpt_row) {
                    prop_assert!((x / mass - expected).abs() < 1e-10);
                }
            }
        }
        let order = topological_order(&bn).unwrap();
        for (pos, &v) in order.iter().enumerate() {
            prop_assert!(bn.parents()[v].iter().all(|p| order[..pos].contains(p)));
        }
    }

    #[test]
    fn linear_subadditivity_on_random_pairs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = random_bn_pair(&mut r, 4);
        let (jp, jq) = (p.expand().unwrap(), q.expand().unwrap());
        let dec = bayes_neighborhoods(&p);
        let metric = metric_from_space(jp.space()).unwrap();
        for m in ["h2", "kl", "skl", "js", "tv", "w1", "w2"] {
            let measure: Measure = m.parse().unwrap();
            let c = subadd_core::lab::linear_coefficient(measure, Some(&metric)).unwrap();
            let full = subadditivity_bound(measure, &jp, &jq, &dec, c).unwrap();
            prop_assert!(full.satisfied, "{} gap {}", m, full.gap);
            let cut = subadditivity_bound(measure, &jp, &jq, &truncate(&p, &dec).unwrap(), c).unwrap();
            prop_assert!(cut.satisfied, "{} truncated gap {}", m, cut.gap);
            if matches!(measure, Measure::F(_)) {
                prop_assert!(cut.gap <= full.gap + 1e-12);
            }
        }
    }

    #[test]
    fn mrf_potential_scaling_is_invisible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cycle = r.gen_bool(0.5);
        let (p, q) = random_mrf_pair(&mut r, cycle);
        let base = mrf_skl_decomposition_check(&p, &q).unwrap();
        let mut pots = p.potentials().to_vec();
        pots[0].iter_mut().for_each(|v| *v *= 7.0);
        let scaled = Mrf::new(p.space().clone(), p.graph().clone(), p.cliques().to_vec(), pots).unwrap();
        let again = mrf_skl_decomposition_check(&scaled, &q).unwrap();
        prop_assert!((base.direct - again.direct).abs() < 1e-12);
        prop_assert!((base.decomposed - again.decomposed).abs() < 1e-12);
        prop_assert!(mrf_w1_skl_check(&p, &q).unwrap().satisfied);
    }

    #[test]
    fn model_files_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (bn, _) = random_bn_pair(&mut r, 4);
        let model = Model::BayesNet(bn);
        let back = parse_model(&model.to_json(), None).unwrap(); prop_assert_eq!(&back, &model, "{}", model.to_json());
        let (mrf, _) = random_mrf_pair(&mut r, true);
        let model = Model::Mrf(mrf);
        let back = parse_model(&model.to_json(), None).unwrap(); prop_assert_eq!(&back, &model, "{}", model.to_json());
    }
}

#[test]
fn constant_potential_ratio_gives_zero_lipschitz() {
    let mut r = rng(31);
    let (p, _) = random_mrf_pair(&mut r, true);
    let pots: Vec<Vec<f64>> = p
        .potentials()
        .iter()
        .map(|c| c.iter().map(|v| 3.0 * v).collect())
        .collect();
    let q = Mrf::new(
        p.space().clone(),
        p.graph().clone(),
        p.cliques().to_vec(),
        pots,
    )
    .unwrap();
    assert!(clique_lipschitz(&p, &q).unwrap().iter().all(|&e| e < 1e-12));
    let report = mrf_w1_skl_check(&p, &q).unwrap();
    assert!(report.joint.value() < 1e-12 && report.satisfied);
}

/// `Q` with random CPTs and `P` whose rows are `Q`'s tilted by `1 + ε z`.
fn close_pair(seed: u64, eps: f64) -> (BayesNet, BayesNet) {
    let mut r = rng(seed);
    let n = 4;
    let cards = vec![2, 3, 2, 2];
    let parents = vec![vec![], vec![0], vec![0, 1], vec![1, 2]];
    let q_cpts = random_cpts(&mut r, &cards, &parents, 0.2);
    let p_cpts = q_cpts
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|row| {
                    let z: Vec<f64> = row.iter().map(|_| r.gen_range(-1.0..1.0)).collect();
                    let mean: f64 = row.iter().zip(&z).map(|(q, z)| q * z).sum();
                    row.iter()
                        .zip(&z)
                        .map(|(q, z)| q * (1.0 + eps * (z - mean)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let space = VariableSpace::new(cards).unwrap();
    let _ = n;
    (
        BayesNet::new(space.clone(), parents.clone(), p_cpts).unwrap(),
        BayesNet::new(space, parents, q_cpts).unwrap(),
    )
}

#[test]
fn perturbation_gap_follows_chi2_prediction() {
    for kind in [Kl, ReverseKl, SymmetricKl, JensenShannon, Hellinger2] {
        let diffs: Vec<f64> = [0.01, 0.005, 0.0025]
            .iter()
            .map(|&eps| {
                let (p, q) = close_pair(41, eps);
                let rep = perturbation_gap_report(kind, &p, &q).unwrap();
                assert!(rep.realized_eps < 4.0 * eps);
                assert!(rep.gap >= -1e-9);
                rep.diff
            })
            .collect();
        for w in diffs.windows(2) {
            assert!(w[0] / w[1] >= 7.0, "{kind}: {diffs:?}");
        }
    }
}

#[test]
fn contraction_keeps_a_valid_bound() {
    let mut r = rng(51);
    let mut loosened = 0;
    for _ in 0..40 {
        let (p, q) = Example_pair(&mut r);
        let cmp = contraction_comparison(Measure::F(Kl), &p, &q, 1, 1.0).unwrap();
        assert_eq!(cmp.contracted.locals.len() + 1, cmp.full.locals.len());
        assert!(cmp.full.satisfied && cmp.contracted.satisfied);
        loosened += cmp.loosened as usize;
    }
    // Either outcome is allowed; the count is only recorded.
    assert!(loosened <= 40);
}

#[allow(non_snake_case)]
fn Example_pair(r: &mut TestRng) -> (BayesNet, BayesNet) {
    let x = r.gen_range(-2.0..2.0);
    let y = r.gen_range(-2.0..2.0);
    subadd_core::lab::Example::H1
        .bayesnet_pair(x, y)
        .unwrap()
        .unwrap()
}

#[test]
fn contracting_twice_is_rejected() {
    let (p, _) = subadd_core::lab::Example::H1
        .bayesnet_pair(0.5, -0.5)
        .unwrap()
        .unwrap();
    let once = contract(&bayes_neighborhoods(&p), 1).unwrap();
    assert!(contract(&once, 1).is_err());
    assert!(contract(&once, 2).is_ok());
}
