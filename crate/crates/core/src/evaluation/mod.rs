//! Offline top-k evaluation under user×item block cross-validation.

mod metrics;
mod protocol;
mod report;

pub use metrics::{
    f_measure_at_k, lauc_at_k, mrr_at_k, ndcg_at_k, precision_at_k, recall_at_k, MetricKind,
    MetricValues,
};
pub use protocol::{
    evaluate_fold, evaluate_fold_with, EvalConfig, FoldModels, FoldReport, MetricKey, SkipCounts,
};
pub use report::{aggregate, cross_validate, FoldSummary, MetricReport, Summary};

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, HashSet};

    use proptest::prelude::*;

    use super::*;
    use crate::cf::{train_als, AlsConfig, LatentFactorModel};
    use crate::dataset::{make_folds, FoldSplit, InteractionSet};
    use crate::error::Error;
    use crate::hybrid::Algorithm;
    use crate::semantic::ItemSimilarity;

    struct Table(Vec<Vec<f64>>);

    impl ItemSimilarity for Table {
        fn item_similarity(&self, a: usize, b: usize) -> f64 {
            self.0[a][b]
        }
    }

    fn uniform_table(n: usize) -> Table {
        Table(
            (0..n)
                .map(|a| (0..n).map(|b| 1.0 / (1.0 + a.abs_diff(b) as f64)).collect())
                .collect(),
        )
    }

    // Direct enumeration versions of the six metrics.
    fn oracle(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> [Option<f64>; 6] {
        let top: Vec<bool> = ranked.iter().take(k).map(|i| relevant.contains(i)).collect();
        let hits = top.iter().filter(|&&h| h).count() as f64;
        let precision = hits / k as f64;
        let recall = (!relevant.is_empty()).then(|| hits / relevant.len() as f64);
        let f = recall.map(|r| {
            if precision == 0.0 && r == 0.0 {
                0.0
            } else {
                2.0 * precision * r / (precision + r)
            }
        });
        let mut mrr = 0.0;
        for (pos, &h) in top.iter().enumerate() {
            if h {
                mrr = 1.0 / (pos as f64 + 1.0);
                break;
            }
        }
        let mut dcg = 0.0;
        for (pos, &h) in top.iter().enumerate() {
            if h {
                dcg += 1.0 / (pos as f64 + 2.0).log2();
            }
        }
        let mut idcg = 0.0;
        for pos in 0..relevant.len().min(k) {
            idcg += 1.0 / (pos as f64 + 2.0).log2();
        }
        let ndcg = if idcg > 0.0 { dcg / idcg } else { 0.0 };

        let effective = |pos: usize| if pos < k { pos } else { usize::MAX };
        let (mut pairs, mut correct) = (0usize, 0.0);
        for (pr, r) in ranked.iter().enumerate() {
            if !relevant.contains(r) {
                continue;
            }
            for (pn, n) in ranked.iter().enumerate() {
                if relevant.contains(n) {
                    continue;
                }
                pairs += 1;
                let (er, en) = (effective(pr), effective(pn));
                correct += if er < en {
                    1.0
                } else if er == en {
                    0.5
                } else {
                    0.0
                };
            }
        }
        let lauc = (pairs > 0).then(|| correct / pairs as f64);
        [Some(precision), recall, f, Some(mrr), Some(ndcg), lauc]
    }

    fn instance() -> impl Strategy<Value = (Vec<usize>, HashSet<usize>, usize)> {
        (1usize..=50)
            .prop_flat_map(|len| {
                (
                    Just((0..len).collect::<Vec<_>>()).prop_shuffle(),
                    proptest::collection::vec(any::<bool>(), len),
                    1usize..=60,
                )
            })
            .prop_map(|(ranked, flags, k)| {
                let relevant = flags
                    .iter()
                    .enumerate()
                    .filter(|(_, &f)| f)
                    .map(|(i, _)| i)
                    .collect();
                (ranked, relevant, k)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn metrics_match_enumeration((ranked, relevant, k) in instance()) {
            let got = MetricValues::compute(&ranked, &relevant, k).unwrap();
            let want = oracle(&ranked, &relevant, k);
            for (metric, w) in MetricKind::ALL.into_iter().zip(want) {
                let g = got.get(metric);
                prop_assert_eq!(g.is_some(), w.is_some(), "{} definedness", metric);
                if let (Some(g), Some(w)) = (g, w) {
                    prop_assert!((g - w).abs() <= 1e-12, "{}: {} vs {}", metric, g, w);
                    prop_assert!((0.0..=1.0).contains(&g));
                }
            }
        }

        #[test]
        fn recall_and_mrr_grow_with_k((ranked, relevant, _k) in instance()) {
            let mut prev = MetricValues::compute(&ranked, &relevant, 1).unwrap();
            for k in 2..=ranked.len() + 2 {
                let cur = MetricValues::compute(&ranked, &relevant, k).unwrap();
                prop_assert!(cur.recall >= prev.recall);
                prop_assert!(cur.mrr >= prev.mrr);
                prev = cur;
            }
        }

        #[test]
        fn ideal_ranking_is_perfect(len in 2usize..30, n_rel in 1usize..30) {
            let n_rel = n_rel.min(len - 1);
            let ranked: Vec<usize> = (0..len).collect();
            let relevant: HashSet<usize> = (0..n_rel).collect();
            for k in 1..=len {
                let v = MetricValues::compute(&ranked, &relevant, k).unwrap();
                if k <= n_rel {
                    prop_assert_eq!(v.precision, 1.0);
                }
                if k >= n_rel {
                    prop_assert_eq!(v.recall, Some(1.0));
                    prop_assert_eq!(v.lauc, Some(1.0));
                }
                prop_assert_eq!(v.mrr, 1.0);
                prop_assert!((v.ndcg - 1.0).abs() < 1e-15);
            }
        }
    }

    fn dataset(triples: &[(&str, &str, u32)]) -> InteractionSet {
        InteractionSet::from_triples(triples.iter().copied()).unwrap()
    }

    fn hand_fold() -> FoldSplit {
        // u0 has a in training and c in test; b and d are the other candidates.
        let ds = dataset(&[("u0", "a", 1), ("u0", "c", 1), ("u1", "a", 1), ("u1", "b", 1), ("u1", "d", 1)]);
        let in_test = |r: &crate::dataset::Interaction| r.user == 0 && r.item != 0;
        FoldSplit {
            fold_id: 0,
            test_users: vec![0],
            test_items: vec![1, 2, 3],
            train: ds.filter(|r| !in_test(r)),
            test: ds.filter(in_test),
        }
    }

    #[test]
    fn single_user_fold_matches_hand_values() {
        let fold = hand_fold();
        // items in first-seen order: a=0, c=1, b=2, d=3
        let mut sims = vec![vec![0.0; 4]; 4];
        for (x, y, s) in [(0, 2, 0.9), (0, 1, 0.5), (0, 3, 0.1)] {
            sims[x][y] = s;
            sims[y][x] = s;
        }
        let table = Table(sims);
        let cfg = EvalConfig {
            algorithms: vec![Algorithm::Onto],
            k_max: 3,
            ..EvalConfig::default()
        };
        let report = evaluate_fold(&fold, &cfg, Some(&table)).unwrap();
        assert_eq!(report.evaluated_users, 1);
        // ranking: b (0.9), c (0.5), d (0.1); only c is relevant
        let get = |k, m| report.get(Algorithm::Onto, k, m).unwrap();
        assert_eq!(get(1, MetricKind::Precision), 0.0);
        assert_eq!(get(1, MetricKind::Mrr), 0.0);
        assert_eq!(get(1, MetricKind::Lauc), 0.25);
        assert_eq!(get(2, MetricKind::Precision), 0.5);
        assert_eq!(get(2, MetricKind::Recall), 1.0);
        assert!((get(2, MetricKind::FMeasure) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(get(2, MetricKind::Mrr), 0.5);
        assert!((get(2, MetricKind::Ndcg) - 1.0 / 3f64.log2()).abs() < 1e-15);
        assert_eq!(get(2, MetricKind::Lauc), 0.5);
        assert_eq!(get(3, MetricKind::Lauc), 0.5);
    }

    #[test]
    fn onto_without_similarities_is_a_config_error() {
        let cfg = EvalConfig {
            algorithms: vec![Algorithm::AlsOnto],
            ..EvalConfig::default()
        };
        assert!(matches!(evaluate_fold(&hand_fold(), &cfg, None), Err(Error::Config(_))));
    }

    fn small_als() -> AlsConfig {
        AlsConfig {
            factors: 4,
            iterations: 3,
            ..AlsConfig::default()
        }
    }

    fn dense(users: usize, items: usize) -> InteractionSet {
        let triples: Vec<(String, String, u32)> = (0..users)
            .flat_map(|u| (0..items).map(move |i| (format!("u{u}"), format!("i{i}"), 1 + ((u * i) % 3) as u32)))
            .collect();
        InteractionSet::from_triples(triples.iter().map(|(u, i, r)| (u.as_str(), i.as_str(), *r))).unwrap()
    }

    #[test]
    fn fully_rated_block_has_full_recall() {
        let ds = dense(10, 10);
        let folds = make_folds(&ds, 2, 3).unwrap();
        let cfg = EvalConfig {
            algorithms: Algorithm::ALL.to_vec(),
            als: small_als(),
            bpr: crate::cf::BprConfig {
                factors: 4,
                epochs: 2,
                ..Default::default()
            },
            k_max: 8,
            ..EvalConfig::default()
        };
        let table = uniform_table(10);
        let report = evaluate_fold(&folds[0], &cfg, Some(&table)).unwrap();
        assert_eq!(report.skipped.no_non_relevant, report.evaluated_users);
        for alg in Algorithm::ALL {
            for k in folds[0].test_items.len()..=8 {
                assert_eq!(report.get(alg, k, MetricKind::Recall), Some(1.0));
            }
            assert_eq!(report.get(alg, 1, MetricKind::Lauc), None);
        }
    }

    fn model_bytes(m: &LatentFactorModel) -> Vec<u8> {
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        buf
    }

    fn sparse(seed: u64) -> InteractionSet {
        use rand::Rng;
        let mut rng = crate::rng::derived(seed, crate::rng::Stream::Synthetic);
        let mut triples = Vec::new();
        for u in 0..30 {
            for i in 0..20 {
                if rng.gen_bool(0.3) || i == u % 20 {
                    triples.push((format!("u{u}"), format!("i{i}"), rng.gen_range(1..4)));
                }
            }
        }
        InteractionSet::from_triples(triples.iter().map(|(u, i, r)| (u.as_str(), i.as_str(), *r))).unwrap()
    }

    #[test]
    fn saved_model_reproduces_the_fold_report() {
        let ds = sparse(4);
        let fold = &make_folds(&ds, 3, 9).unwrap()[1];
        let cfg = EvalConfig {
            algorithms: vec![Algorithm::Als, Algorithm::Onto, Algorithm::AlsOnto],
            als: small_als(),
            k_max: 5,
            ..EvalConfig::default()
        };
        let table = uniform_table(20);
        let direct = evaluate_fold(fold, &cfg, Some(&table)).unwrap();

        let trained = train_als(&fold.train, &cfg.als).unwrap();
        let reloaded = LatentFactorModel::load(model_bytes(&trained).as_slice()).unwrap();
        let models = FoldModels {
            als: Some(reloaded),
            bpr: None,
        };
        let replay = evaluate_fold_with(fold, &cfg, &models, Some(&table)).unwrap();
        assert_eq!(direct, replay);
        assert!(direct.evaluated_users > 0);
    }

    #[test]
    fn training_never_sees_the_test_block() {
        let ds = sparse(5);
        let folds = make_folds(&ds, 3, 1).unwrap();
        // Same data with every test-block rating changed.
        let block: HashSet<(usize, usize)> = folds[0].test.records().iter().map(|r| (r.user, r.item)).collect();
        let triples: Vec<(String, String, u32)> = ds
            .records()
            .iter()
            .map(|r| {
                let rating = if block.contains(&(r.user, r.item)) { r.rating * 7 } else { r.rating };
                (ds.users().id(r.user).to_owned(), ds.items().id(r.item).to_owned(), rating)
            })
            .collect();
        let altered = InteractionSet::from_triples(triples.iter().map(|(u, i, r)| (u.as_str(), i.as_str(), *r))).unwrap();
        let altered_folds = make_folds(&altered, 3, 1).unwrap();
        assert_eq!(folds[0].test_users, altered_folds[0].test_users);
        let a = train_als(&folds[0].train, &small_als()).unwrap();
        let b = train_als(&altered_folds[0].train, &small_als()).unwrap();
        assert_eq!(model_bytes(&a), model_bytes(&b));
    }

    fn fragment(fold_id: usize, value: f64) -> FoldReport {
        FoldReport {
            fold_id,
            k_max: 1,
            algorithms: vec![Algorithm::Als],
            evaluated_users: 1,
            skipped: SkipCounts::default(),
            values: BTreeMap::from([((Algorithm::Als, 1, MetricKind::Precision), value)]),
        }
    }

    #[test]
    fn aggregation_examples() {
        let key = (Algorithm::Als, 1, MetricKind::Precision);
        let single = aggregate(vec![fragment(0, 0.2)]).unwrap();
        assert_eq!(single.aggregate[&key], Summary { mean: 0.2, std: 0.0, folds: 1 });

        let two = aggregate(vec![fragment(0, 0.2), fragment(1, 0.4)]).unwrap();
        assert!((two.aggregate[&key].mean - 0.3).abs() < 1e-15);
        assert!((two.aggregate[&key].std - 0.1).abs() < 1e-15);

        let values = [0.11, 0.52, 0.3, 0.97, 0.05];
        let forward = aggregate((0..5).map(|f| fragment(f, values[f])).collect()).unwrap();
        let backward = aggregate((0..5).rev().map(|f| fragment(f, values[f])).collect()).unwrap();
        assert_eq!(forward, backward);

        let mut odd = fragment(1, 0.1);
        odd.k_max = 2;
        assert!(matches!(aggregate(vec![fragment(0, 0.2), odd]), Err(Error::Validation(_))));
        assert!(aggregate(vec![]).is_err());

        let mut empty = fragment(1, 0.9);
        empty.evaluated_users = 0;
        let skipped = aggregate(vec![fragment(0, 0.2), empty]).unwrap();
        assert_eq!(skipped.aggregate[&key].folds, 1);
        assert_eq!(skipped.folds.len(), 2);
    }

    #[test]
    fn tables_have_fixed_shape_and_are_reproducible() {
        let ds = sparse(6);
        let cfg = EvalConfig {
            als: small_als(),
            bpr: crate::cf::BprConfig {
                factors: 4,
                epochs: 3,
                ..Default::default()
            },
            k_max: 20,
            ..EvalConfig::default()
        };
        let table = uniform_table(20);
        let render = || {
            let report = cross_validate(&ds, &cfg, 5, 11, Some(&table)).unwrap();
            let (mut folds, mut agg) = (Vec::new(), Vec::new());
            report.write_fold_table(&mut folds).unwrap();
            report.write_aggregate_table(&mut agg).unwrap();
            (String::from_utf8(folds).unwrap(), String::from_utf8(agg).unwrap())
        };
        let (folds, agg) = render();
        assert_eq!(folds.lines().count(), 1 + 5 * 5 * 20 * 6);
        assert_eq!(agg.lines().count(), 1 + 5 * 21 * 6);
        assert!(agg.contains("ALS_ONTO,0,mrr,,"));
        assert_eq!((folds, agg), render());
    }
}
