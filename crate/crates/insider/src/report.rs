//! Human-readable and JSON renderings of the read-only reports: findings,
//! the trace table and analysis results. All output is deterministic, so
//! the same inputs always produce byte-identical reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use insider_core::analysis::{CutSet, FaultTree, LeafKind};
use insider_core::binding::{Binding, Finding};
use insider_core::safety::SafetyAnalysisModel;
use insider_core::sync::ChangeSet;
use insider_core::system::SystemModel;
use serde::Serialize;

use crate::format::FORMAT;

fn counted(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("1 {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

pub fn findings_text(findings: &[Finding]) -> String {
    let mut out = String::new();
    for f in findings {
        writeln!(out, "{f}").unwrap();
    }
    writeln!(out, "{}", counted(findings.len(), "finding")).unwrap();
    out
}

pub fn change_set_text(cs: &ChangeSet) -> String {
    let mut out = String::new();
    for op in cs.ops() {
        writeln!(out, "{op}").unwrap();
    }
    for note in cs.notes() {
        writeln!(out, "note: {note}").unwrap();
    }
    writeln!(out, "{}", counted(cs.ops().len(), "operation")).unwrap();
    out
}

#[derive(Serialize)]
struct TraceFile {
    format: String,
    components: BTreeMap<String, String>,
    ports: BTreeMap<String, Vec<String>>,
    connections: BTreeMap<String, Vec<String>>,
    dangling: BTreeMap<String, String>,
}

fn trace_file(sm: &SystemModel, sam: &SafetyAnalysisModel, binding: &Binding) -> TraceFile {
    TraceFile {
        format: FORMAT.into(),
        components: binding.component_map().clone(),
        ports: binding
            .gamma_map()
            .iter()
            .map(|(port, traced)| {
                (
                    port.to_string(),
                    traced.iter().map(|t| t.to_string()).collect(),
                )
            })
            .collect(),
        connections: binding
            .connection_map(sm, sam)
            .into_iter()
            .map(|(con, carried)| (con, carried.into_iter().collect()))
            .collect(),
        dangling: binding
            .dangling_traces()
            .iter()
            .map(|(port, missing)| (port.to_string(), missing.to_string()))
            .collect(),
    }
}

/// The port, component and connection correspondences of a bound pair,
/// one line per system element.
pub fn trace_table_text(sm: &SystemModel, sam: &SafetyAnalysisModel, binding: &Binding) -> String {
    let file = trace_file(sm, sam, binding);
    let mut out = String::new();
    let join = |names: &[String]| {
        if names.is_empty() {
            "(none)".to_string()
        } else {
            names.join(", ")
        }
    };
    for (sm_name, sam_name) in &file.components {
        writeln!(out, "component {sm_name} -> {sam_name}").unwrap();
    }
    for (port, traced) in &file.ports {
        writeln!(out, "port {port} -> {}", join(traced)).unwrap();
    }
    for (con, carried) in &file.connections {
        writeln!(out, "connection {con} -> {}", join(carried)).unwrap();
    }
    for (port, missing) in &file.dangling {
        writeln!(out, "dangling {port} -> {missing}").unwrap();
    }
    out
}

pub fn trace_table_json(sm: &SystemModel, sam: &SafetyAnalysisModel, binding: &Binding) -> String {
    let mut out =
        serde_json::to_string_pretty(&trace_file(sm, sam, binding)).expect("report serializes");
    out.push('\n');
    out
}

/// Everything `analyze` computed for one top event.
pub struct AnalysisReport {
    pub tree: FaultTree,
    pub cut_sets: Option<BTreeSet<CutSet>>,
    pub probability: Option<f64>,
}

/// Cut sets in brace notation. Leaves are printed by their element name
/// alone, matching the usual fault-tree shorthand.
fn cut_sets_brief(cut_sets: &BTreeSet<CutSet>) -> String {
    cut_sets
        .iter()
        .map(|cs| {
            let inner: Vec<&str> = cs.iter().map(|l| l.element()).collect();
            format!("{{{}}}", inner.join(","))
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn leaf_kind_name(kind: LeafKind) -> &'static str {
    match kind {
        LeafKind::Event => "event",
        LeafKind::BoundaryInput => "boundary_input",
    }
}

pub fn analysis_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    writeln!(out, "top: {}", report.tree.top()).unwrap();
    writeln!(out, "tree: {}", report.tree.expr()).unwrap();
    let leaves: Vec<String> = report
        .tree
        .leaf_kinds()
        .iter()
        .map(|(leaf, kind)| format!("{leaf} ({kind})"))
        .collect();
    writeln!(out, "leaves: {}", leaves.join(", ")).unwrap();
    if let Some(cut_sets) = &report.cut_sets {
        writeln!(out, "minimal cut sets: {}", cut_sets_brief(cut_sets)).unwrap();
    }
    if let Some(p) = report.probability {
        writeln!(out, "top event probability: {p}").unwrap();
    }
    out
}

#[derive(Serialize)]
struct AnalysisFile {
    format: String,
    top: String,
    tree: String,
    leaves: Vec<LeafDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    minimal_cut_sets: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
}

#[derive(Serialize)]
struct LeafDto {
    name: String,
    kind: String,
}

pub fn analysis_json(report: &AnalysisReport) -> String {
    let file = AnalysisFile {
        format: FORMAT.into(),
        top: report.tree.top().to_string(),
        tree: report.tree.expr().to_string(),
        leaves: report
            .tree
            .leaf_kinds()
            .iter()
            .map(|(leaf, kind)| LeafDto {
                name: leaf.to_string(),
                kind: leaf_kind_name(*kind).into(),
            })
            .collect(),
        minimal_cut_sets: report.cut_sets.as_ref().map(|sets| {
            sets.iter()
                .map(|cs| cs.iter().map(|l| l.to_string()).collect())
                .collect()
        }),
        probability: report.probability,
    };
    let mut out = serde_json::to_string_pretty(&file).expect("report serializes");
    out.push('\n');
    out
}
