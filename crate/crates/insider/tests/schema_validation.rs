//! The shipped JSON Schemas must accept everything the tool writes and
//! reject the malformed documents the loaders reject.

use std::collections::BTreeMap;
use std::path::Path;

use insider::format;
use insider::report::{self, AnalysisReport};
use insider::s2am;
use insider_core::analysis::{flatten, minimal_cut_sets, top_event_probability};
use insider_core::binding::{bind, check_consistency};
use insider_core::QualifiedName;
use insider_core::random::{random_dag_system_model, random_safety_model, random_system_model};
use insider_core::safety::SafetyAnalysisModel;
use insider_core::samples::{pipeline_safety, pipeline_system};
use insider_core::sync::plan_sync;
use serde_json::Value;

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap()
}

fn assert_accepts(schema_name: &str, document: &str) {
    let validator = jsonschema::validator_for(&schema(schema_name)).unwrap();
    let doc: Value = serde_json::from_str(document).unwrap();
    if let Err(e) = validator.validate(&doc) {
        panic!("{schema_name} rejected a document it should accept: {e}");
    }
}

fn assert_rejects(schema_name: &str, document: &str) {
    let validator = jsonschema::validator_for(&schema(schema_name)).unwrap();
    let doc: Value = serde_json::from_str(document).unwrap();
    assert!(
        validator.validate(&doc).is_err(),
        "{schema_name} accepted a document it should reject: {document}"
    );
}

#[test]
fn schemas_are_wellformed() {
    for name in [
        "system.schema.json",
        "safety.schema.json",
        "component.schema.json",
        "changeset.schema.json",
        "findings.schema.json",
        "hints.schema.json",
        "trace.schema.json",
        "analysis.schema.json",
        "s2am.schema.json",
        "probabilities.schema.json",
    ] {
        let s = schema(name);
        if let Err(e) = jsonschema::meta::validate(&s) {
            panic!("{name} is not a valid schema: {e}");
        }
    }
}

#[test]
fn fixtures_match_their_schemas() {
    assert_accepts("system.schema.json", &fixture("sm_ex.json"));
    assert_accepts("safety.schema.json", &fixture("sam_ex.json"));
    assert_accepts("safety.schema.json", &fixture("empty_sam.json"));
    assert_accepts("probabilities.schema.json", &fixture("probs.json"));
}

#[test]
fn emitted_documents_match_their_schemas() {
    let sm = pipeline_system();
    let sam = pipeline_safety();
    let binding = bind(&sm, &sam);

    assert_accepts("system.schema.json", &format::system_model_to_string(&sm));
    assert_accepts("safety.schema.json", &format::safety_model_to_string(&sam));
    assert_accepts(
        "component.schema.json",
        &format::component_to_string(&sam.components()[0]),
    );
    assert_accepts(
        "trace.schema.json",
        &report::trace_table_json(&sm, &sam, &binding),
    );

    let empty = SafetyAnalysisModel::empty();
    let empty_binding = bind(&sm, &empty);
    let plan = plan_sync(&sm, &empty, &empty_binding, None, None).unwrap();
    assert_accepts("changeset.schema.json", &format::change_set_to_string(&plan));

    let findings = check_consistency(&sm, &empty, &empty_binding);
    assert!(!findings.is_empty());
    assert_accepts("findings.schema.json", &format::findings_to_string(&findings));

    let top = QualifiedName::parse("c3.j").unwrap();
    let tree = flatten(&sam, &top).unwrap();
    let cut_sets = minimal_cut_sets(&tree).unwrap();
    let probs: BTreeMap<QualifiedName, f64> = [("c1.a", 0.1), ("c1.x", 0.2), ("c3.z", 0.5)]
        .into_iter()
        .map(|(n, p)| (QualifiedName::parse(n).unwrap(), p))
        .collect();
    let probability = top_event_probability(&tree, &probs).unwrap();
    let analysis = AnalysisReport {
        tree,
        cut_sets: Some(cut_sets),
        probability: Some(probability),
    };
    assert_accepts("analysis.schema.json", &report::analysis_json(&analysis));
}

#[test]
fn reference_files_match_their_schema() {
    let dir = tempfile::tempdir().unwrap();
    let sm_path = dir.path().join("sm.json");
    let sam_path = dir.path().join("sam.json");
    let out = dir.path().join("project.s2am.json");
    format::save_system_model(&pipeline_system(), &sm_path).unwrap();
    format::save_safety_model(&pipeline_safety(), &sam_path).unwrap();
    s2am::write_reference(&sm_path, &sam_path, &out).unwrap();
    assert_accepts("s2am.schema.json", &std::fs::read_to_string(&out).unwrap());
}

#[test]
fn random_models_match_their_schemas() {
    for seed in 0..20u64 {
        let sm = random_system_model(seed, 8, 20);
        assert_accepts("system.schema.json", &format::system_model_to_string(&sm));
        let sam = random_safety_model(&sm, seed.wrapping_mul(31), 0);
        assert_accepts("safety.schema.json", &format::safety_model_to_string(&sam));

        let dag = random_dag_system_model(seed, 6, 14);
        let dag_sam = random_safety_model(&dag, seed ^ 0x5eed, 0);
        let binding = bind(&dag, &dag_sam);
        assert_accepts(
            "trace.schema.json",
            &report::trace_table_json(&dag, &dag_sam, &binding),
        );
        let findings = check_consistency(&dag, &dag_sam, &binding);
        assert_accepts("findings.schema.json", &format::findings_to_string(&findings));
    }
}

#[test]
fn schemas_reject_what_the_loaders_reject() {
    assert_rejects("system.schema.json", r#"{"format": "insider/9", "components": [], "ports": [], "connections": []}"#);
    assert_rejects("system.schema.json", r#"{"format": "insider/1", "components": [], "ports": [], "connections": [], "extra": 1}"#);
    assert_rejects(
        "system.schema.json",
        r#"{"format": "insider/1", "components": [{"name": "c.1"}], "ports": [], "connections": []}"#,
    );
    assert_rejects(
        "system.schema.json",
        r#"{"format": "insider/1", "components": [], "ports": [{"name": "p", "owner": "c", "direction": "inout"}], "connections": []}"#,
    );
    assert_rejects(
        "system.schema.json",
        r#"{"format": "insider/1", "components": [], "ports": [], "connections": [{"name": "k", "source": "bare", "target": "c.p"}]}"#,
    );

    let single_arg_gate = r#"{"format": "insider/1", "components": [{"name": "c", "events": [], "failure_ports": [], "definitions": {"o": {"op": "and", "args": [{"event": "w"}]}}}], "failure_connections": []}"#;
    assert_rejects("safety.schema.json", single_arg_gate);
    let bad_op = r#"{"format": "insider/1", "components": [{"name": "c", "events": [], "failure_ports": [], "definitions": {"o": {"op": "xor", "args": [{"event": "w"}, {"event": "v"}]}}}], "failure_connections": []}"#;
    assert_rejects("safety.schema.json", bad_op);
    let bad_probability = r#"{"format": "insider/1", "components": [{"name": "c", "events": [{"name": "w", "probability": 1.5}], "failure_ports": [], "definitions": {}}], "failure_connections": []}"#;
    assert_rejects("safety.schema.json", bad_probability);

    assert_rejects(
        "findings.schema.json",
        r#"{"format": "insider/1", "findings": [{"kind": "NotAKind", "subject": "x", "detail": "y"}]}"#,
    );
    assert_rejects(
        "changeset.schema.json",
        r#"{"format": "insider/1", "sm_ref": "xyz", "sam_ref": "0000000000000000", "ops": [], "notes": []}"#,
    );
    assert_rejects(
        "changeset.schema.json",
        r#"{"format": "insider/1", "sm_ref": "0000000000000000", "sam_ref": "0000000000000000", "ops": [{"kind": "explode"}], "notes": []}"#,
    );
    assert_rejects("probabilities.schema.json", r#"{"c1.a": 2.0}"#);
    assert_rejects("probabilities.schema.json", r#"{"bare": 0.5}"#);
}
