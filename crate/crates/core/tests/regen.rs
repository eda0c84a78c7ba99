//! Regenerators for checked-in artifacts (golden prompt snapshots and the
//! bottle replay fixture). Ignored by default; run explicitly after a
//! deliberate template/rules change:
//!
//! ```text
//! cargo test -p vlmad --test regen -- --ignored
//! ```

mod common;

use vlmad::backend::{request_digest, FixtureRecord, FixtureStore};
use vlmad::dataset::{scan_layout, select_reference};
use vlmad::harness::PreprocessSection;
use vlmad::preprocess::preprocess_path;
use vlmad::prompt::{PromptStrategy, PromptTemplate, RuleSet};

#[test]
#[ignore = "rewrites tests/golden; run after deliberate template changes"]
fn regen_golden_bundles() {
    let template = PromptTemplate::bundled();
    let rules = RuleSet::bundled().get("bottle").expect("bundled bottle rules");
    let query = common::gradient_image(8, 8);
    let reference = common::uniform_image(200);
    std::fs::create_dir_all(common::golden_dir()).unwrap();
    for strategy in PromptStrategy::ALL {
        let bundle = template
            .build_prompt(
                strategy,
                query.clone(),
                strategy.use_class().then_some("bottle"),
                strategy.use_rules().then_some(&rules),
                strategy.use_reference().then(|| reference.clone()),
            )
            .unwrap();
        let path = common::golden_dir().join(format!("bundle_{}.json", strategy.id()));
        std::fs::write(&path, bundle.canonical_json()).unwrap();
        println!("wrote {}", path.display());
    }
}

#[test]
#[ignore = "rewrites tests/fixtures/bottle_replay.jsonl"]
fn regen_replay_fixture() {
    let dir = tempfile::tempdir().unwrap();
    vlmad::synth::write_replay_tree(dir.path()).unwrap();
    let manifest = scan_layout(dir.path()).unwrap();
    let bottle = manifest.category(vlmad::synth::REPLAY_CATEGORY).unwrap();
    assert_eq!(bottle.test_samples.len(), common::REPLAY_TEXTS.len());

    let params = PreprocessSection::default().params();
    let reference = preprocess_path(select_reference(bottle), &params).unwrap();
    let rules = RuleSet::bundled().get("bottle").unwrap();
    let template = PromptTemplate::bundled();

    let path = common::fixture_path();
    let _ = std::fs::remove_file(&path);
    let store = FixtureStore::open(&path).unwrap();
    for (sample, (text, _)) in bottle.test_samples.iter().zip(common::REPLAY_TEXTS) {
        let image = preprocess_path(&sample.path, &params).unwrap();
        let bundle = template
            .build_prompt(
                PromptStrategy::NormalityCase,
                image,
                Some("bottle"),
                Some(&rules),
                Some(reference.clone()),
            )
            .unwrap();
        store
            .insert(FixtureRecord {
                digest: request_digest(common::REPLAY_BACKEND_ID, common::REPLAY_MODEL_NAME, &bundle),
                text: text.to_string(),
                backend_id: common::REPLAY_BACKEND_ID.to_string(),
                model_name: common::REPLAY_MODEL_NAME.to_string(),
                timestamp: 1_700_000_000,
            })
            .unwrap();
    }
    assert_eq!(store.len(), 30);
    println!("wrote {}", path.display());
}
