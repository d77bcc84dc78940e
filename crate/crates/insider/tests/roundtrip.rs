//! Serialize/parse round trips must be identities and the serialized form
//! must be byte-stable.

use std::path::Path;

use insider::format::{
    change_set_from_str, change_set_to_string, component_from_str, component_to_string,
    findings_from_str, findings_to_string, safety_model_from_str, safety_model_to_string,
    system_model_from_str, system_model_to_string,
};
use insider_core::binding::{bind, check_consistency};
use insider_core::random::{evolve_system_model, random_safety_model, random_system_model};
use insider_core::samples::{pipeline_safety, pipeline_system};
use insider_core::sync::plan_sync;

fn origin() -> &'static Path {
    Path::new("roundtrip")
}

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap()
}

#[test]
fn fixtures_are_in_canonical_form() {
    let sm = system_model_from_str(&fixture("sm_ex.json"), origin()).unwrap();
    assert_eq!(system_model_to_string(&sm), fixture("sm_ex.json"));
    let sam = safety_model_from_str(&fixture("sam_ex.json"), origin()).unwrap();
    assert_eq!(safety_model_to_string(&sam), fixture("sam_ex.json"));
    let empty = safety_model_from_str(&fixture("empty_sam.json"), origin()).unwrap();
    assert_eq!(safety_model_to_string(&empty), fixture("empty_sam.json"));
}

#[test]
fn sample_models_round_trip() {
    let sm = pipeline_system();
    let text = system_model_to_string(&sm);
    let back = system_model_from_str(&text, origin()).unwrap();
    assert_eq!(back.fingerprint(), sm.fingerprint());
    assert_eq!(system_model_to_string(&back), text);

    let sam = pipeline_safety();
    let text = safety_model_to_string(&sam);
    let back = safety_model_from_str(&text, origin()).unwrap();
    assert_eq!(back.fingerprint(), sam.fingerprint());
    assert_eq!(safety_model_to_string(&back), text);
}

#[test]
fn components_round_trip() {
    for component in pipeline_safety().components() {
        let text = component_to_string(component);
        let back = component_from_str(&text, origin()).unwrap();
        assert_eq!(&back, component);
        assert_eq!(component_to_string(&back), text);
    }
}

#[test]
fn change_sets_round_trip() {
    let sm = pipeline_system();
    let empty = insider_core::safety::SafetyAnalysisModel::empty();
    let binding = bind(&sm, &empty);
    let plan = plan_sync(&sm, &empty, &binding, None, None).unwrap();
    assert_eq!(plan.ops().len(), 12);

    let text = change_set_to_string(&plan);
    let back = change_set_from_str(&text, origin()).unwrap();
    assert_eq!(back.sm_ref(), plan.sm_ref());
    assert_eq!(back.sam_ref(), plan.sam_ref());
    assert_eq!(back.ops(), plan.ops());
    assert_eq!(back.notes(), plan.notes());
    assert_eq!(change_set_to_string(&back), text);
}

#[test]
fn findings_round_trip() {
    let sm = pipeline_system();
    let empty = insider_core::safety::SafetyAnalysisModel::empty();
    let binding = bind(&sm, &empty);
    let findings = check_consistency(&sm, &empty, &binding);
    assert!(!findings.is_empty());

    let text = findings_to_string(&findings);
    let back = findings_from_str(&text, origin()).unwrap();
    assert_eq!(back, findings);
    assert_eq!(findings_to_string(&back), text);
}

#[test]
fn random_models_are_byte_stable() {
    for seed in 0..100u64 {
        let sm = random_system_model(seed, 10, 30);
        let text = system_model_to_string(&sm);
        let back = system_model_from_str(&text, origin()).unwrap();
        assert_eq!(back.fingerprint(), sm.fingerprint(), "seed {seed}");
        assert_eq!(system_model_to_string(&back), text, "seed {seed}");

        let sam = random_safety_model(&sm, seed.wrapping_add(1000), seed as usize % 4);
        let text = safety_model_to_string(&sam);
        let back = safety_model_from_str(&text, origin()).unwrap();
        assert_eq!(back.fingerprint(), sam.fingerprint(), "seed {seed}");
        assert_eq!(safety_model_to_string(&back), text, "seed {seed}");

        let (evolved, _) = evolve_system_model(&sm, seed ^ 0xabcd, 5);
        let binding = bind(&evolved, &sam);
        if let Ok(plan) = plan_sync(&evolved, &sam, &binding, None, None) {
            let text = change_set_to_string(&plan);
            let back = change_set_from_str(&text, origin()).unwrap();
            assert_eq!(change_set_to_string(&back), text, "seed {seed}");
        }

        let findings = check_consistency(&evolved, &sam, &binding);
        let text = findings_to_string(&findings);
        let back = findings_from_str(&text, origin()).unwrap();
        assert_eq!(findings_to_string(&back), text, "seed {seed}");
    }
}
