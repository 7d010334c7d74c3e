use ndarray::{array, Array2};
use proptest::prelude::*;
use topicscope_core::bundle::{
    load_bundle, save_bundle, save_topic_names, validate_bundle, Document,
};
use topicscope_core::cache::{default_cache_path, CacheError, CacheParams, MapKind};
use topicscope_core::interpret::{topic_dominance_counts, topic_importance};
use topicscope_core::layout::{export_all, FigureOverrides, FiguresManifest, FIGURES_MANIFEST};
use topicscope_core::{Bundle, Bundle32, InterpretationCache};

fn toy(groups: bool) -> Bundle {
    let texts = [
        "Alpha beta alpha.",
        "gamma, delta",
        "beta gamma",
        "delta delta alpha",
        "",
    ];
    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let d = Document::new(format!("d{i}"), *t);
            if groups {
                d.with_group(["north", "south"][i % 2])
            } else {
                d
            }
        })
        .collect();
    let vocab = ["alpha", "beta", "gamma", "delta"]
        .map(String::from)
        .to_vec();
    let phi = array![
        [0.6, 0.3, 0.1, 0.0],
        [0.0, 0.1, 0.4, 0.5],
        [0.2, 0.2, 0.3, 0.3]
    ];
    let theta = array![
        [0.8, 0.1, 0.1],
        [0.1, 0.7, 0.2],
        [0.3, 0.3, 0.4],
        [0.0, 0.9, 0.1],
        [0.0, 0.0, 0.0]
    ];
    Bundle::new(docs, vocab, phi, theta)
}

fn fast_params() -> CacheParams<f64> {
    let mut p = CacheParams::default();
    p.umap.epochs = Some(40);
    p
}

#[test]
fn bundle_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut original = toy(true);
    save_bundle(&mut original, dir.path()).unwrap();
    let loaded: Bundle = load_bundle(dir.path()).unwrap();
    assert_eq!(loaded.phi, original.phi);
    assert_eq!(loaded.theta, original.theta);
    assert_eq!(loaded.documents, original.documents);
    assert_eq!(loaded.content_hash(), original.content_hash());
    assert!(validate_bundle(&loaded).is_ok());

    // Names are excluded from the content hash, so a rename keeps the cache valid.
    let mut renamed = loaded.clone();
    save_topic_names(&mut renamed, vec!["a".into(), "b".into(), "c".into()]).unwrap();
    let reloaded: Bundle = load_bundle(dir.path()).unwrap();
    assert_eq!(reloaded.topic_names, ["a", "b", "c"]);
    assert_eq!(reloaded.content_hash(), original.content_hash());
}

#[test]
fn cache_survives_save_and_detects_stale_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = toy(true);
    save_bundle(&mut b, dir.path()).unwrap();
    let cache = InterpretationCache::build(&b, &fast_params()).unwrap();
    assert_eq!(cache.maps.topics.len(), 3);
    assert_eq!(cache.maps.words.len(), 4);
    assert_eq!(cache.maps.documents.len(), 5);
    assert_eq!(cache.maps.get(MapKind::Groups).unwrap().len(), 2);
    assert_eq!(cache.wordclouds.len(), 3);

    let path = default_cache_path(dir.path());
    cache.save(&path).unwrap();
    assert_eq!(InterpretationCache::load_for(&path, &b).unwrap(), cache);

    b.phi[[0, 0]] = 0.7;
    save_bundle(&mut b, dir.path()).unwrap();
    match InterpretationCache::load_for(&path, &b) {
        Err(CacheError::Stale { found, .. }) => assert_eq!(found, cache.bundle_hash),
        other => panic!("expected a stale cache, got {other:?}"),
    }
}

#[test]
fn export_writes_every_listed_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut b = toy(false);
    save_bundle(&mut b, dir.path()).unwrap();
    let cache = InterpretationCache::build(&b, &fast_params()).unwrap();
    let manifest = export_all(&b, &cache, out.path(), &FigureOverrides::default()).unwrap();
    for f in &manifest.files {
        let svg = std::fs::read_to_string(out.path().join(&f.path)).unwrap();
        assert!(svg.starts_with("<?xml"), "{}", f.path);
    }
    assert!(manifest
        .skipped
        .iter()
        .any(|s| s.kind.as_str() == "group_map"));
    let on_disk: FiguresManifest =
        serde_json::from_slice(&std::fs::read(out.path().join(FIGURES_MANIFEST)).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    assert_eq!(on_disk.bundle_hash, b.content_hash());
}

#[test]
fn single_precision_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = toy(true);
    save_bundle(&mut b, dir.path()).unwrap();
    let b32: Bundle32 = load_bundle(dir.path()).unwrap();
    let mut params = CacheParams::<f32>::default();
    params.umap.epochs = Some(40);
    let cache = topicscope_core::cache::InterpretationCache::build(&b32, &params).unwrap();
    assert!(cache
        .maps
        .words
        .coords
        .iter()
        .flatten()
        .all(|v| v.is_finite()));
    let s64 = InterpretationCache::build(&b, &fast_params())
        .unwrap()
        .summary
        .importances;
    for (a, b) in cache.summary.importances.iter().zip(&s64) {
        assert!((*a as f64 - b).abs() < 1e-5);
    }
}

fn theta_strategy() -> impl Strategy<Value = (Array2<f64>, Vec<u64>)> {
    (1usize..30, 1usize..8).prop_flat_map(|(d, n)| {
        (
            proptest::collection::vec(0.0f64..1.0, d * n),
            proptest::collection::vec(0u64..200, d),
        )
            .prop_map(move |(v, l)| (Array2::from_shape_vec((d, n), v).unwrap(), l))
    })
}

proptest! {
    #[test]
    fn importance_scales_linearly((theta, lengths) in theta_strategy(), exp in -4i32..4) {
        let c = 2f64.powi(exp);
        let base = topic_importance(theta.view(), &lengths).unwrap();
        let scaled = topic_importance((&theta * c).view(), &lengths).unwrap();
        for (s, b) in scaled.iter().zip(&base) {
            prop_assert_eq!(*s, b * c);
        }
    }

    #[test]
    fn dominance_counts_cover_every_document((theta, _) in theta_strategy()) {
        let counts = topic_dominance_counts(theta.view());
        prop_assert_eq!(counts.iter().sum::<usize>(), theta.nrows());
    }
}
