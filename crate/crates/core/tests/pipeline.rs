use std::collections::HashSet;
use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use semrec_core::cf::{train_als, AlsConfig};
use semrec_core::dataset::{make_folds, InteractionSet};
use semrec_core::hybrid::{rank_user, Algorithm, FusionMode};
use semrec_core::ontology::{compute_ic, parse_obo_path, IcMode, Metric, SharedIcMode};
use semrec_core::semantic::{ProfileWeighting, SimilarityCache, UserProfile};
use semrec_core::synthetic::{generate, SyntheticConfig};

const OBO: &str = "format-version: 1.2

[Term]
id: X:root

[Term]
id: X:fruit
is_a: X:root

[Term]
id: X:apple
is_a: X:fruit

[Term]
id: X:pear
is_a: X:fruit

[Term]
id: X:stone
is_a: X:root

[Term]
id: X:flint
is_a: X:stone

[Typedef]
id: part_of
";

fn ratings() -> InteractionSet {
    let triples = [
        ("ann", "X:apple", 3),
        ("ann", "X:flint", 1),
        ("bob", "X:apple", 2),
        ("bob", "X:pear", 1),
        ("cy", "X:pear", 1),
        ("cy", "X:flint", 2),
        ("dee", "X:apple", 1),
    ];
    InteractionSet::from_triples(triples).unwrap()
}

#[test]
fn gzipped_ontology_to_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.obo.gz");
    let mut gz = GzEncoder::new(std::fs::File::create(&path).unwrap(), Compression::default());
    gz.write_all(OBO.as_bytes()).unwrap();
    gz.finish().unwrap();

    let onto = compute_ic(parse_obo_path(&path).unwrap(), &IcMode::Intrinsic).unwrap();
    assert_eq!(onto.graph().len(), 6);
    let ds = ratings();
    let cache = SimilarityCache::build(ds.items(), &onto, Metric::Lin, SharedIcMode::Dishin).unwrap();
    assert_eq!(cache.num_pairs(), 3 * 4 / 2);

    // dee rated only apple: pear shares a parent, flint shares only the root.
    let dee = ds.users().index_of("dee").unwrap();
    let profile = UserProfile::from_ratings(dee, &ds.by_user()[dee], ProfileWeighting::Uniform);
    let candidates: Vec<usize> = (0..ds.num_items()).filter(|&i| !profile.contains(i)).collect();
    let ranked = rank_user(&profile, &candidates, Algorithm::Onto, FusionMode::Raw, None, Some(&cache)).unwrap();
    let ids: Vec<&str> = ranked.items().iter().map(|&i| ds.items().id(i)).collect();
    assert_eq!(ids, ["X:pear", "X:flint"]);
    assert!(ranked.entries[1].s_cb < ranked.entries[0].s_cb);
}

#[test]
fn items_unseen_in_training_fall_back_to_similarity() {
    let ds = ratings();
    let flint = ds.items().index_of("X:flint").unwrap();
    let train = ds.filter(|r| r.item != flint);
    let model = train_als(&train, &AlsConfig { factors: 2, ..AlsConfig::default() }).unwrap();
    assert!(!model.has_item(flint));

    let onto = compute_ic(semrec_core::ontology::parse_obo(OBO.as_bytes()).unwrap(), &IcMode::Intrinsic).unwrap();
    let cache = SimilarityCache::build(ds.items(), &onto, Metric::Lin, SharedIcMode::Mica).unwrap();
    let bob = ds.users().index_of("bob").unwrap();
    let profile = UserProfile::from_ratings(bob, &train.by_user()[bob], ProfileWeighting::Uniform);
    let candidates = [flint];

    let hybrid = rank_user(&profile, &candidates, Algorithm::AlsOnto, FusionMode::Raw, Some(&model), Some(&cache)).unwrap();
    let entry = &hybrid.entries[0];
    assert_eq!(entry.s_cf, None);
    assert_eq!(entry.fs, entry.s_cb);

    let pure = rank_user(&profile, &candidates, Algorithm::Als, FusionMode::Raw, Some(&model), None).unwrap();
    assert_eq!(pure.entries[0].fs, f64::MIN);
}

#[test]
fn block_folds_cover_every_rating_once() {
    let bench = generate(&SyntheticConfig { users: 40, seed: 3, ..SyntheticConfig::default() }).unwrap();
    let ds = &bench.interactions;
    let folds = make_folds(ds, 5, 8).unwrap();
    let mut seen_users = HashSet::new();
    let mut seen_items = HashSet::new();
    for fold in &folds {
        assert_eq!(fold.train.num_ratings() + fold.test.num_ratings(), ds.num_ratings());
        for r in fold.test.records() {
            assert!(fold.test_users.binary_search(&r.user).is_ok());
            assert!(fold.test_items.binary_search(&r.item).is_ok());
        }
        seen_users.extend(fold.test_users.iter().copied());
        seen_items.extend(fold.test_items.iter().copied());
    }
    assert_eq!(seen_users.len(), ds.num_users());
    assert_eq!(seen_items.len(), ds.num_items());
}
