//! Binding of a system model to a safety analysis model, and the
//! consistency checks over the pair.
//!
//! The binding is derived entirely from the `traces_to` attributes of
//! failure ports and from component name equality; it never modifies
//! either model. Inconsistencies do not make binding fail, they surface
//! as [`Finding`]s from [`check_consistency`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::fingerprint::Fingerprint;
use crate::ident::QualifiedName;
use crate::safety::SafetyAnalysisModel;
use crate::system::SystemModel;

/// The traceability mapping between a system model and a safety model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    sm_ref: Fingerprint,
    sam_ref: Fingerprint,
    /// System port -> failure ports tracing it. Keyed by every port of the
    /// bound system model, so untraced ports map to the empty set.
    gamma: BTreeMap<QualifiedName, BTreeSet<QualifiedName>>,
    /// Failure port -> the system port it traces (only when that port
    /// exists).
    gamma_inv: BTreeMap<QualifiedName, QualifiedName>,
    /// Failure port -> the nonexistent system port its trace names.
    dangling: BTreeMap<QualifiedName, QualifiedName>,
    /// System component name -> fault-tree component name; identity on
    /// names present in both models.
    component_map: BTreeMap<String, String>,
}

/// Lookup failure in [`Binding::gamma`] / [`Binding::gamma_prime`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BindingError {
    UnknownElement(QualifiedName),
    DanglingTrace {
        port: QualifiedName,
        missing: QualifiedName,
    },
}

impl fmt::Display for BindingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BindingError::UnknownElement(q) => write!(f, "unknown element {q}"),
            BindingError::DanglingTrace { port, missing } => {
                write!(f, "failure port {port} traces unknown system port {missing}")
            }
        }
    }
}

impl core::error::Error for BindingError {}

/// Builds the traceability mapping for a model pair.
pub fn bind(sm: &SystemModel, sam: &SafetyAnalysisModel) -> Binding {
    let mut gamma: BTreeMap<QualifiedName, BTreeSet<QualifiedName>> = sm
        .ports()
        .iter()
        .map(|p| (p.qualified(), BTreeSet::new()))
        .collect();
    let mut gamma_inv = BTreeMap::new();
    let mut dangling = BTreeMap::new();
    for c in sam.components() {
        for fp in &c.failure_ports {
            let f = QualifiedName::new(&c.name, &fp.name).expect("validated model names");
            match gamma.get_mut(&fp.traces_to) {
                Some(set) => {
                    set.insert(f.clone());
                    gamma_inv.insert(f, fp.traces_to.clone());
                }
                None => {
                    dangling.insert(f, fp.traces_to.clone());
                }
            }
        }
    }
    let component_map = sm
        .components()
        .iter()
        .filter(|c| sam.component(&c.name).is_some())
        .map(|c| (c.name.clone(), c.name.clone()))
        .collect();
    Binding {
        sm_ref: sm.fingerprint(),
        sam_ref: sam.fingerprint(),
        gamma,
        gamma_inv,
        dangling,
        component_map,
    }
}

impl Binding {
    pub fn sm_ref(&self) -> Fingerprint {
        self.sm_ref
    }

    pub fn sam_ref(&self) -> Fingerprint {
        self.sam_ref
    }

    /// The failure ports tracing `port` (possibly none).
    pub fn gamma(&self, port: &QualifiedName) -> Result<&BTreeSet<QualifiedName>, BindingError> {
        self.gamma
            .get(port)
            .ok_or_else(|| BindingError::UnknownElement(port.clone()))
    }

    /// The system port traced by `failure_port`.
    pub fn gamma_prime(&self, failure_port: &QualifiedName) -> Result<&QualifiedName, BindingError> {
        if let Some(p) = self.gamma_inv.get(failure_port) {
            return Ok(p);
        }
        match self.dangling.get(failure_port) {
            Some(missing) => Err(BindingError::DanglingTrace {
                port: failure_port.clone(),
                missing: missing.clone(),
            }),
            None => Err(BindingError::UnknownElement(failure_port.clone())),
        }
    }

    /// Full port map, keyed by every system port.
    pub fn gamma_map(&self) -> &BTreeMap<QualifiedName, BTreeSet<QualifiedName>> {
        &self.gamma
    }

    /// Failure ports whose trace names a nonexistent system port.
    pub fn dangling_traces(&self) -> &BTreeMap<QualifiedName, QualifiedName> {
        &self.dangling
    }

    pub fn component_map(&self) -> &BTreeMap<String, String> {
        &self.component_map
    }

    /// System connection name -> names of the failure connections running
    /// between failure ports that trace its two endpoints.
    pub fn connection_map(
        &self,
        sm: &SystemModel,
        sam: &SafetyAnalysisModel,
    ) -> BTreeMap<String, BTreeSet<String>> {
        let mut out = BTreeMap::new();
        for con in sm.connections() {
            let sources = self.gamma.get(&con.source);
            let targets = self.gamma.get(&con.target);
            let mut matched = BTreeSet::new();
            if let (Some(sources), Some(targets)) = (sources, targets) {
                for fc in sam.failure_connections() {
                    if sources.contains(&fc.source) && targets.contains(&fc.target) {
                        matched.insert(fc.name.clone());
                    }
                }
            }
            out.insert(con.name.clone(), matched);
        }
        out
    }
}

/// The kind of a consistency finding. Declaration order is the report
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FindingKind {
    /// A system component has no fault-tree component of the same name.
    MissingSamComponent,
    /// A system port is not traced by any matching failure port of its
    /// component's fault tree.
    MissingFailurePort,
    /// A system connection has no corresponding failure connection.
    MissingFailureConnection,
    /// A fault-tree component has no system component of the same name.
    OrphanSamComponent,
    /// A failure port traces a system port of the wrong component or the
    /// wrong direction.
    OrphanFailurePort,
    /// A failure connection does not correspond to any system connection.
    OrphanFailureConnection,
    /// A failure port traces a system port that does not exist.
    DanglingTrace,
    /// Advisory: an out failure port has no definition yet.
    UndefinedOutportExpression,
    /// Advisory: the failure propagation graph has a cycle.
    CyclicPropagation,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::MissingSamComponent => "MissingSamComponent",
            FindingKind::MissingFailurePort => "MissingFailurePort",
            FindingKind::MissingFailureConnection => "MissingFailureConnection",
            FindingKind::OrphanSamComponent => "OrphanSamComponent",
            FindingKind::OrphanFailurePort => "OrphanFailurePort",
            FindingKind::OrphanFailureConnection => "OrphanFailureConnection",
            FindingKind::DanglingTrace => "DanglingTrace",
            FindingKind::UndefinedOutportExpression => "UndefinedOutportExpression",
            FindingKind::CyclicPropagation => "CyclicPropagation",
        }
    }

    pub fn parse(s: &str) -> Option<FindingKind> {
        [
            FindingKind::MissingSamComponent,
            FindingKind::MissingFailurePort,
            FindingKind::MissingFailureConnection,
            FindingKind::OrphanSamComponent,
            FindingKind::OrphanFailurePort,
            FindingKind::OrphanFailureConnection,
            FindingKind::DanglingTrace,
            FindingKind::UndefinedOutportExpression,
            FindingKind::CyclicPropagation,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }

    /// Structural findings are resolved by synchronization; advisory ones
    /// (undefined expressions, cycles) are not, they block analysis
    /// instead.
    pub fn is_structural(self) -> bool {
        !matches!(
            self,
            FindingKind::UndefinedOutportExpression | FindingKind::CyclicPropagation
        )
    }
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One consistency diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Finding {
    pub kind: FindingKind,
    pub subject: String,
    pub detail: String,
    pub related: Vec<String>,
}

impl Finding {
    fn new(kind: FindingKind, subject: impl Into<String>, detail: String) -> Self {
        Finding {
            kind,
            subject: subject.into(),
            detail,
            related: Vec::new(),
        }
    }

    fn related(mut self, related: Vec<String>) -> Self {
        self.related = related;
        self
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.kind, self.subject, self.detail)
    }
}

/// True if `sam` has a failure port that represents the system port `p`:
/// same owning component name, matching trace and matching direction.
pub(crate) fn is_represented(sam: &SafetyAnalysisModel, p: &crate::system::Port) -> bool {
    sam.component(&p.owner).is_some_and(|c| {
        c.failure_ports
            .iter()
            .any(|fp| fp.traces_to == p.qualified() && fp.direction == p.direction)
    })
}

/// Runs every consistency check over the bound pair and returns all
/// findings, ordered by kind then subject.
pub fn check_consistency(
    sm: &SystemModel,
    sam: &SafetyAnalysisModel,
    binding: &Binding,
) -> Vec<Finding> {
    let mut findings = Vec::new();

    // Every system component needs a fault-tree counterpart.
    for c in sm.components() {
        if sam.component(&c.name).is_none() {
            findings.push(Finding::new(
                FindingKind::MissingSamComponent,
                &c.name,
                format!("system component {:?} has no fault-tree component", c.name),
            ));
        }
    }

    // Every system port needs a representing failure port.
    for p in sm.ports() {
        if !is_represented(sam, p) {
            findings.push(Finding::new(
                FindingKind::MissingFailurePort,
                p.qualified().to_string(),
                format!(
                    "no failure port of component {:?} traces {} port {}",
                    p.owner,
                    p.direction,
                    p.qualified()
                ),
            ));
        }
    }

    // Every system connection needs at least one failure connection
    // running between failure ports that trace its endpoints.
    for con in sm.connections() {
        let sources = binding.gamma.get(&con.source);
        let targets = binding.gamma.get(&con.target);
        let covered = match (sources, targets) {
            (Some(sources), Some(targets)) => sam
                .failure_connections()
                .iter()
                .any(|fc| sources.contains(&fc.source) && targets.contains(&fc.target)),
            _ => false,
        };
        if !covered {
            findings.push(
                Finding::new(
                    FindingKind::MissingFailureConnection,
                    &con.name,
                    format!(
                        "system connection {:?} ({} -> {}) has no corresponding failure connection",
                        con.name, con.source, con.target
                    ),
                )
                .related(alloc::vec![con.source.to_string(), con.target.to_string()]),
            );
        }
    }

    // Reverse direction: fault-tree elements without system backing.
    for c in sam.components() {
        if sm.component(&c.name).is_none() {
            findings.push(Finding::new(
                FindingKind::OrphanSamComponent,
                &c.name,
                format!("fault-tree component {:?} has no system component", c.name),
            ));
        }
        for fp in &c.failure_ports {
            let f = QualifiedName::new(&c.name, &fp.name).expect("validated model names");
            match sm.port(&fp.traces_to) {
                None => {
                    findings.push(
                        Finding::new(
                            FindingKind::DanglingTrace,
                            f.to_string(),
                            format!(
                                "failure port {f} traces unknown system port {}",
                                fp.traces_to
                            ),
                        )
                        .related(alloc::vec![fp.traces_to.to_string()]),
                    );
                }
                Some(p) => {
                    if p.owner != c.name {
                        findings.push(
                            Finding::new(
                                FindingKind::OrphanFailurePort,
                                f.to_string(),
                                format!(
                                    "failure port {f} traces {} which belongs to component {:?}",
                                    fp.traces_to, p.owner
                                ),
                            )
                            .related(alloc::vec![fp.traces_to.to_string()]),
                        );
                    } else if p.direction != fp.direction {
                        findings.push(
                            Finding::new(
                                FindingKind::OrphanFailurePort,
                                f.to_string(),
                                format!(
                                    "{} failure port {f} traces {} port {}",
                                    fp.direction, p.direction, fp.traces_to
                                ),
                            )
                            .related(alloc::vec![fp.traces_to.to_string()]),
                        );
                    }
                }
            }
        }
    }
    for fc in sam.failure_connections() {
        let backed = match (
            binding.gamma_inv.get(&fc.source),
            binding.gamma_inv.get(&fc.target),
        ) {
            (Some(p_out), Some(p_in)) => sm
                .connections()
                .iter()
                .any(|con| &con.source == p_out && &con.target == p_in),
            _ => false,
        };
        if !backed {
            findings.push(
                Finding::new(
                    FindingKind::OrphanFailureConnection,
                    &fc.name,
                    format!(
                        "failure connection {:?} ({} -> {}) does not correspond to any system connection",
                        fc.name, fc.source, fc.target
                    ),
                )
                .related(alloc::vec![fc.source.to_string(), fc.target.to_string()]),
            );
        }
    }

    // Advisory checks.
    for c in sam.components() {
        for (out, def) in &c.definitions {
            if def.is_none() {
                findings.push(Finding::new(
                    FindingKind::UndefinedOutportExpression,
                    format!("{}.{}", c.name, out),
                    format!("out failure port {}.{} has no definition", c.name, out),
                ));
            }
        }
    }
    for cycle in sam.propagation_graph().cycles() {
        let names: Vec<String> = cycle.iter().map(|q| q.to_string()).collect();
        findings.push(
            Finding::new(
                FindingKind::CyclicPropagation,
                names[0].clone(),
                format!(
                    "failure propagation contains a cycle through {} elements: {}",
                    names.len(),
                    names.join(", ")
                ),
            )
            .related(names),
        );
    }

    findings.sort();
    findings
}
