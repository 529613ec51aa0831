use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use mnm_core::corpus::{generate_candidates, ContextPolicy};
use mnm_core::eval::{map_pairs, micro_prf, PairSets};
use mnm_core::kb::IdMapping;
use mnm_core::model::{forward, position_percentage, KnowledgeMode, MnmConfig, MnmParams, ModelInput, Variant};
use mnm_core::numerics::{stable_softmax, Matrix};
use mnm_core::pipeline::{
    assign_folds, merge, read_predictions, write_predictions, PairPrediction, PredictionSet, Provenance,
};
use mnm_core::synth::random_documents;
use mnm_core::GenePair;

fn gene() -> impl Strategy<Value = String> {
    (0u8..8).prop_map(|i| format!("g{i}"))
}

fn pair() -> impl Strategy<Value = GenePair> {
    (gene(), gene())
        .prop_filter("distinct", |(a, b)| a != b)
        .prop_map(|(a, b)| GenePair::new(a, b))
}

fn pair_sets() -> impl Strategy<Value = PairSets> {
    prop::collection::btree_map((0u8..4).prop_map(|d| format!("d{d}")), prop::collection::btree_set(pair(), 0..5), 0..4)
}

fn prediction_set(provenance: Provenance) -> impl Strategy<Value = PredictionSet> {
    prop::collection::btree_map(
        (0u8..4).prop_map(|d| format!("d{d}")),
        prop::collection::btree_map(pair(), 0.5f64..1.0, 0..5),
        0..4,
    )
    .prop_map(move |docs| PredictionSet {
        docs: docs
            .into_iter()
            .map(|(d, ps)| {
                let ps = ps
                    .into_iter()
                    .map(|(p, probability)| (p, PairPrediction { probability, provenance }))
                    .collect();
                (d, ps)
            })
            .collect(),
    })
}

fn variant() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

fn knowledge() -> impl Strategy<Value = KnowledgeMode> {
    prop::sample::select(KnowledgeMode::ALL.to_vec())
}

/// A model input of `n` words in dimension `dim` with arbitrary values.
fn input(dim: usize) -> impl Strategy<Value = ModelInput> {
    (1usize..12).prop_flat_map(move |n| {
        (
            prop::collection::vec(-3.0f64..3.0, n * dim),
            prop::collection::vec(0..=n, n),
            prop::collection::vec(0..=n, n),
            prop::collection::vec(-3.0f64..3.0, 3 * dim),
        )
            .prop_map(move |(w, d1, d2, e)| ModelInput {
                words: Matrix::from_vec(n, dim, w).unwrap(),
                distances: [d1, d2],
                entities: [e[..dim].to_vec(), e[dim..2 * dim].to_vec()],
                relation: Some(e[2 * dim..].to_vec()),
            })
    })
}

fn flatten(set: &PredictionSet) -> BTreeMap<(String, GenePair), (u64, Provenance)> {
    set.docs
        .iter()
        .flat_map(|(d, ps)| {
            ps.iter()
                .map(move |(p, v)| ((d.clone(), p.clone()), (v.probability.to_bits(), v.provenance)))
        })
        .collect()
}

proptest! {
    #[test]
    fn softmax_is_a_shift_invariant_distribution(xs in prop::collection::vec(-50.0f64..50.0, 1..20), shift in -100.0f64..100.0) {
        let p = stable_softmax(&xs).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let q = stable_softmax(&shifted).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn position_percentage_is_symmetric_about_the_midpoint(n in 1usize..200, p_frac in 0.0f64..=1.0, d in 1usize..10, k_frac in 0.0f64..=1.0) {
        let p = ((n as f64) * p_frac).round() as usize;
        let k = 1 + ((d - 1) as f64 * k_frac).round() as usize;
        let a = position_percentage(p, n, k, d).unwrap();
        let b = position_percentage(n - p, n, k, d).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
        if 2 * p == n {
            prop_assert_eq!(a, 0.5);
        }
    }

    #[test]
    fn attention_weights_form_distributions(
        v in variant(),
        kmode in knowledge(),
        layers in 1usize..4,
        x in input(4),
        seed in 0u64..1000,
    ) {
        let cfg = MnmConfig { layers, dim: 4, variant: v, knowledge: kmode, seed, ..MnmConfig::default() };
        let params = MnmParams::init(&cfg).unwrap();
        let trace = forward(&params, &x).unwrap();
        prop_assert_eq!(trace.pathways.len(), cfg.pathways());
        for pathway in &trace.pathways {
            prop_assert_eq!(pathway.len(), layers);
            for layer in pathway {
                prop_assert_eq!(layer.weights.len(), x.len());
                prop_assert!((layer.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(layer.weights.iter().all(|&w| w >= 0.0));
            }
        }
        prop_assert!((trace.probabilities[0] + trace.probabilities[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn checkpoints_round_trip_exactly(v in variant(), kmode in knowledge(), layers in 1usize..4, seed in 0u64..1000) {
        let cfg = MnmConfig { layers, dim: 3, variant: v, knowledge: kmode, seed, ..MnmConfig::default() };
        let params = MnmParams::init(&cfg).unwrap();
        let mut buf = Vec::new();
        params.write_checkpoint(&mut buf).unwrap();
        let back = MnmParams::read_checkpoint(&mut buf.as_slice(), Some(&cfg)).unwrap();
        prop_assert_eq!(back, params);
    }

    #[test]
    fn gene_pairs_are_unordered(a in gene(), b in gene()) {
        let p = GenePair::new(a.clone(), b.clone());
        prop_assert_eq!(&p, &GenePair::new(b, a));
        prop_assert!(p.first() <= p.second());
    }

    #[test]
    fn merge_is_a_commutative_idempotent_union(
        a in prediction_set(Provenance::Model),
        b in prediction_set(Provenance::Rule),
        c in prediction_set(Provenance::Model),
    ) {
        let ab = merge(&a, &b);
        prop_assert_eq!(flatten(&ab), flatten(&merge(&b, &a)));
        prop_assert_eq!(flatten(&merge(&ab, &c)), flatten(&merge(&a, &merge(&b, &c))));
        prop_assert_eq!(flatten(&merge(&a, &a)), flatten(&a));
        prop_assert_eq!(flatten(&merge(&a, &PredictionSet::default())), flatten(&a));
        let keys: BTreeSet<_> = flatten(&a).into_keys().chain(flatten(&b).into_keys()).collect();
        prop_assert_eq!(flatten(&ab).into_keys().collect::<BTreeSet<_>>(), keys);
    }

    #[test]
    fn prediction_files_round_trip(a in prediction_set(Provenance::Both)) {
        let mut buf = Vec::new();
        write_predictions(&mut buf, &a).unwrap();
        let back = read_predictions(buf.as_slice()).unwrap();
        prop_assert_eq!(flatten(&back), flatten(&a));
    }

    #[test]
    fn micro_prf_is_bounded_and_perfect_on_itself(gold in pair_sets(), pred in pair_sets()) {
        let r = micro_prf(&gold, &pred);
        for v in [r.precision, r.recall, r.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let total: usize = gold.values().map(BTreeSet::len).sum();
        let same = micro_prf(&gold, &gold);
        prop_assert_eq!((same.fp, same.fn_, same.tp), (0, 0, total));
        if total > 0 {
            prop_assert_eq!(same.f1, 1.0);
        }
    }

    #[test]
    fn mapping_is_idempotent_and_never_yields_self_pairs(
        pairs in prop::collection::btree_set(pair(), 0..10),
        groups in prop::collection::vec(0u8..4, 8),
    ) {
        let mapping = IdMapping::from_pairs((0..8).map(|i| (format!("g{i}"), format!("f{}", groups[i]))));
        let (once, dropped) = map_pairs(&pairs, &mapping);
        let (twice, dropped_again) = map_pairs(&once, &mapping);
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(dropped_again, 0);
        prop_assert!(once.iter().all(|p| !p.is_self_pair()));
        prop_assert!(once.len() + dropped <= pairs.len());
    }

    #[test]
    fn folds_partition_documents(n in 2usize..60, k in 2usize..8, seed in 0u64..1000) {
        prop_assume!(n >= k);
        let ids: Vec<String> = (0..n).map(|i| format!("doc{i}")).collect();
        let folds = assign_folds(&ids, k, seed).unwrap();
        prop_assert_eq!(folds.len(), n);
        let mut sizes = vec![0usize; k];
        for &f in &folds {
            prop_assert!(f < k);
            sizes[f] += 1;
        }
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut reversed = ids.clone();
        reversed.reverse();
        let again = assign_folds(&reversed, k, seed).unwrap();
        // fold membership depends on the ids, not their order
        for (i, id) in ids.iter().enumerate() {
            let j = reversed.iter().position(|x| x == id).unwrap();
            prop_assert_eq!(folds[i], again[j]);
        }
    }

    #[test]
    fn candidates_respect_the_generation_rules(seed in 0u64..10_000, window in 0usize..6) {
        let policy = ContextPolicy { window, ..ContextPolicy::default() };
        for (doc, _) in random_documents(3, 8, seed) {
            for c in generate_candidates(&doc, &policy) {
                prop_assert!(c.p1 < c.p2);
                prop_assert!(c.sentence_distance < 3);
                prop_assert!(c.token_distance > 3 && c.token_distance < 50);
                prop_assert!(!c.pair.is_self_pair());
                prop_assert!(!c.context.is_empty());
                let positions: Vec<usize> = c.context.iter().map(|t| t.position).collect();
                prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(!positions.contains(&c.p1) && !positions.contains(&c.p2));
                prop_assert!(positions.iter().all(|&p| p + window >= c.p1 && p <= c.p2 + window));
            }
        }
    }
}
