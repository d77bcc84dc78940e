//! Synchronization of the safety model against an evolved system model.
//!
//! [`plan_sync`] computes an ordered [`ChangeSet`] that, applied by
//! [`apply_changeset`], removes fault-tree structure no longer backed by
//! the system model and creates defaults for everything the system model
//! added. Events and definitions of surviving components are never
//! touched: those belong to the safety engineer. Rename hints turn
//! would-be delete/create pairs into renames so that logic survives a
//! refactoring; a [`ComponentRepository`] seeds newly created components
//! with previously stored fault trees.
//!
//! Ops are ordered so that every intermediate model stays valid: renames,
//! then creation of components and ports, then removal of connections,
//! ports and components, and finally creation of failure connections
//! (whose in ports must have lost any stale driver first).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::binding::Binding;
use crate::fingerprint::Fingerprint;
use crate::ident::QualifiedName;
use crate::safety::{
    ExprRef, FailureConnection, FailurePort, SafetyAnalysisModel, SafetyModelError, SamComponent,
};
use crate::system::{Direction, SystemModel};

/// One structural edit of the safety model.
#[derive(Debug, Clone, PartialEq)]
pub enum ChangeOp {
    /// Retarget every failure port trace from one system port to another
    /// (the system port was renamed).
    RenamePortTrace {
        old: QualifiedName,
        new: QualifiedName,
    },
    /// Rename a fault-tree component and rewrite all references to it
    /// (the system component was renamed).
    RenameComponent { old: String, new: String },
    /// Add a whole component, either an empty shell or a repository copy.
    CreateSamComponent { component: SamComponent },
    /// Add one failure port to an existing component.
    CreateFailurePort {
        component: String,
        port: FailurePort,
    },
    CreateFailureConnection { connection: FailureConnection },
    RemoveFailureConnection { name: String },
    /// Remove one failure port. Removing an in port clears any definition
    /// of the same component that references it.
    RemoveFailurePort { port: QualifiedName },
    /// Remove a component together with its events, remaining ports and
    /// definitions.
    RemoveSamComponent { name: String },
}

impl ChangeOp {
    pub fn kind(&self) -> &'static str {
        match self {
            ChangeOp::RenamePortTrace { .. } | ChangeOp::RenameComponent { .. } => "RenameElement",
            ChangeOp::CreateSamComponent { .. } => "CreateSamComponent",
            ChangeOp::CreateFailurePort { .. } => "CreateFailurePort",
            ChangeOp::CreateFailureConnection { .. } => "CreateFailureConnection",
            ChangeOp::RemoveFailureConnection { .. } => "RemoveFailureConnection",
            ChangeOp::RemoveFailurePort { .. } => "RemoveFailurePort",
            ChangeOp::RemoveSamComponent { .. } => "RemoveSamComponent",
        }
    }

    /// The element the op is about, for reports.
    pub fn target(&self) -> String {
        match self {
            ChangeOp::RenamePortTrace { old, .. } => old.to_string(),
            ChangeOp::RenameComponent { old, .. } => old.clone(),
            ChangeOp::CreateSamComponent { component } => component.name.clone(),
            ChangeOp::CreateFailurePort { component, port } => {
                format!("{}.{}", component, port.name)
            }
            ChangeOp::CreateFailureConnection { connection } => connection.name.clone(),
            ChangeOp::RemoveFailureConnection { name } => name.clone(),
            ChangeOp::RemoveFailurePort { port } => port.to_string(),
            ChangeOp::RemoveSamComponent { name } => name.clone(),
        }
    }
}

impl fmt::Display for ChangeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChangeOp::RenamePortTrace { old, new } => {
                write!(f, "retarget traces of {old} to {new}")
            }
            ChangeOp::RenameComponent { old, new } => {
                write!(f, "rename component {old} to {new}")
            }
            ChangeOp::CreateSamComponent { component } => {
                write!(f, "create component {}", component.name)
            }
            ChangeOp::CreateFailurePort { component, port } => write!(
                f,
                "create {} failure port {}.{} tracing {}",
                port.direction, component, port.name, port.traces_to
            ),
            ChangeOp::CreateFailureConnection { connection } => write!(
                f,
                "create failure connection {} ({} -> {})",
                connection.name, connection.source, connection.target
            ),
            ChangeOp::RemoveFailureConnection { name } => {
                write!(f, "remove failure connection {name}")
            }
            ChangeOp::RemoveFailurePort { port } => write!(f, "remove failure port {port}"),
            ChangeOp::RemoveSamComponent { name } => write!(f, "remove component {name}"),
        }
    }
}

/// An ordered list of [`ChangeOp`]s pinned to the models it was computed
/// from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSet {
    sm_ref: Fingerprint,
    sam_ref: Fingerprint,
    ops: Vec<ChangeOp>,
    notes: Vec<String>,
}

impl ChangeSet {
    pub fn new(
        sm_ref: Fingerprint,
        sam_ref: Fingerprint,
        ops: Vec<ChangeOp>,
        notes: Vec<String>,
    ) -> Self {
        ChangeSet {
            sm_ref,
            sam_ref,
            ops,
            notes,
        }
    }

    pub fn sm_ref(&self) -> Fingerprint {
        self.sm_ref
    }

    pub fn sam_ref(&self) -> Fingerprint {
        self.sam_ref
    }

    pub fn ops(&self) -> &[ChangeOp] {
        &self.ops
    }

    /// Advisory notes: arbitrary pairings, cleared definitions.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Renames carried over from the system model editor, mapping old system
/// element names to new ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RenameHints {
    pub components: BTreeMap<String, String>,
    pub ports: BTreeMap<QualifiedName, QualifiedName>,
}

impl RenameHints {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty() && self.ports.is_empty()
    }

    /// Hints are only usable when the old names are really gone from the
    /// system model, the new names really exist, and no two hints collide.
    fn validate(&self, sm: &SystemModel) -> Result<(), SyncError> {
        let bad = |reason: String| Err(SyncError::InvalidHints { reason });
        let mut new_components: BTreeSet<&String> = BTreeSet::new();
        for (old, new) in &self.components {
            if old == new {
                return bad(format!("component hint {old:?} maps to itself"));
            }
            if sm.component(old).is_some() {
                return bad(format!(
                    "component hint {old:?} -> {new:?}: old name still exists in the system model"
                ));
            }
            if sm.component(new).is_none() {
                return bad(format!(
                    "component hint {old:?} -> {new:?}: new name not found in the system model"
                ));
            }
            if !new_components.insert(new) {
                return bad(format!("two component hints map to {new:?}"));
            }
        }
        let mut new_ports: BTreeSet<&QualifiedName> = BTreeSet::new();
        for (old, new) in &self.ports {
            if old == new {
                return bad(format!("port hint {old} maps to itself"));
            }
            if sm.port(old).is_some() {
                return bad(format!(
                    "port hint {old} -> {new}: old name still exists in the system model"
                ));
            }
            if sm.port(new).is_none() {
                return bad(format!(
                    "port hint {old} -> {new}: new name not found in the system model"
                ));
            }
            if !new_ports.insert(new) {
                return bad(format!("two port hints map to {new}"));
            }
        }
        Ok(())
    }
}

/// Stored per-component fault trees, reusable when a component reappears
/// in a system model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComponentRepository {
    entries: BTreeMap<String, SamComponent>,
}

/// Repository failures.
#[derive(Debug, Clone, PartialEq)]
pub enum RepoError {
    UnknownKey(String),
    InvalidKey(String),
    /// The stored component must be valid on its own.
    InvalidComponent {
        key: String,
        errors: Vec<SafetyModelError>,
    },
}

impl fmt::Display for RepoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepoError::UnknownKey(k) => write!(f, "no repository entry under key {k:?}"),
            RepoError::InvalidKey(k) => write!(f, "invalid repository key {k:?}"),
            RepoError::InvalidComponent { key, errors } => {
                write!(f, "component stored under {key:?} is invalid: ")?;
                for (i, e) in errors.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for RepoError {}

impl ComponentRepository {
    pub fn new() -> Self {
        ComponentRepository::default()
    }

    /// Stores a component under `key` (conventionally the component name,
    /// optionally suffixed `@label`). The component is validated as a
    /// standalone single-component model.
    pub fn store(&mut self, key: impl Into<String>, component: SamComponent) -> Result<(), RepoError> {
        let key = key.into();
        if key.is_empty() {
            return Err(RepoError::InvalidKey(key));
        }
        SafetyAnalysisModel::build(alloc::vec![component.clone()], Vec::new()).map_err(
            |errors| RepoError::InvalidComponent {
                key: key.clone(),
                errors,
            },
        )?;
        self.entries.insert(key, component);
        Ok(())
    }

    pub fn fetch(&self, key: &str) -> Result<&SamComponent, RepoError> {
        self.entries
            .get(key)
            .ok_or_else(|| RepoError::UnknownKey(key.to_string()))
    }

    pub fn entries(&self) -> &BTreeMap<String, SamComponent> {
        &self.entries
    }
}

/// Why a synchronization plan could not be produced.
#[derive(Debug, Clone, PartialEq)]
pub enum SyncError {
    InvalidHints { reason: String },
}

impl fmt::Display for SyncError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyncError::InvalidHints { reason } => write!(f, "invalid rename hints: {reason}"),
        }
    }
}

impl core::error::Error for SyncError {}

/// Why a change set could not be applied.
#[derive(Debug, Clone, PartialEq)]
pub enum ApplyError {
    /// The change set was computed against a different safety model.
    StaleChangeSet {
        expected: Fingerprint,
        found: Fingerprint,
    },
    InapplicableOp { index: usize, reason: String },
    /// The ops went through but the result does not validate; only
    /// possible for hand-written change sets.
    InvalidResult { errors: Vec<SafetyModelError> },
}

impl fmt::Display for ApplyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApplyError::StaleChangeSet { expected, found } => write!(
                f,
                "change set was computed for safety model {expected}, got {found}"
            ),
            ApplyError::InapplicableOp { index, reason } => {
                write!(f, "op #{index} is not applicable: {reason}")
            }
            ApplyError::InvalidResult { errors } => {
                write!(f, "applied change set leaves the model invalid: ")?;
                for (i, e) in errors.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for ApplyError {}

/// Mutable working copy of the safety model during planning.
struct Working {
    components: Vec<SamComponent>,
    connections: Vec<FailureConnection>,
}

impl Working {
    fn component(&self, name: &str) -> Option<&SamComponent> {
        self.components.iter().find(|c| c.name == name)
    }

    fn component_mut(&mut self, name: &str) -> Option<&mut SamComponent> {
        self.components.iter_mut().find(|c| c.name == name)
    }

    fn has_element(&self, component: &str, element: &str) -> bool {
        self.component(component).is_some_and(|c| {
            c.event(element).is_some() || c.failure_port(element).is_some()
        })
    }

    /// Same representation test the consistency checker uses.
    fn represents(&self, p: &crate::system::Port) -> bool {
        self.component(&p.owner).is_some_and(|c| {
            c.failure_ports
                .iter()
                .any(|fp| fp.traces_to == p.qualified() && fp.direction == p.direction)
        })
    }
}

fn qualify(component: &str, element: &str) -> QualifiedName {
    QualifiedName::new(component, element).expect("validated model names")
}

/// A fresh element name for `component`, starting from `base` and
/// appending `_2`, `_3`, … until it collides with nothing.
fn fresh_name(working: &Working, component: &str, base: &str) -> String {
    if !working.has_element(component, base) {
        return base.to_string();
    }
    let mut i = 2usize;
    loop {
        let candidate = format!("{base}_{i}");
        if !working.has_element(component, &candidate) {
            return candidate;
        }
        i += 1;
    }
}

fn fresh_connection_name(taken: &BTreeSet<String>, base: &str) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    let mut i = 2usize;
    loop {
        let candidate = format!("{base}_{i}");
        if !taken.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

/// Instantiates a stored component under a (possibly different) name,
/// retargeting its traces from the stored name to the new one.
fn instantiate(stored: &SamComponent, target: &str) -> SamComponent {
    let mut out = stored.clone();
    let old = out.name.clone();
    out.name = target.to_string();
    for p in &mut out.failure_ports {
        if p.traces_to.component() == old {
            p.traces_to = qualify(target, p.traces_to.element());
        }
    }
    out
}

/// Computes the change set that makes `sam` structurally consistent with
/// `sm`.
pub fn plan_sync(
    sm: &SystemModel,
    sam: &SafetyAnalysisModel,
    binding: &Binding,
    hints: Option<&RenameHints>,
    repo: Option<&ComponentRepository>,
) -> Result<ChangeSet, SyncError> {
    debug_assert_eq!(binding.sm_ref(), sm.fingerprint());
    debug_assert_eq!(binding.sam_ref(), sam.fingerprint());
    let _ = binding;

    let mut working = Working {
        components: sam.components().to_vec(),
        connections: sam.failure_connections().to_vec(),
    };
    let mut notes: Vec<String> = Vec::new();

    // Renames first, so everything after sees the new names. Port hints
    // retarget traces; component hints rename the fault-tree component and
    // every reference to it.
    let mut rename_ops: Vec<ChangeOp> = Vec::new();
    if let Some(hints) = hints {
        hints.validate(sm)?;
        for (old, new) in &hints.ports {
            let mut touched = false;
            for c in &mut working.components {
                for p in &mut c.failure_ports {
                    if &p.traces_to == old {
                        p.traces_to = new.clone();
                        touched = true;
                    }
                }
            }
            if touched {
                rename_ops.push(ChangeOp::RenamePortTrace {
                    old: old.clone(),
                    new: new.clone(),
                });
            }
        }
        for (old, new) in &hints.components {
            if working.component(old).is_none() {
                continue;
            }
            rename_component(&mut working, old, new);
            rename_ops.push(ChangeOp::RenameComponent {
                old: old.clone(),
                new: new.clone(),
            });
        }
    }

    // Loop 1a: a fault-tree component for every system component.
    let mut create_component_ops: Vec<ChangeOp> = Vec::new();
    for c in sm.components() {
        if working.component(&c.name).is_some() {
            continue;
        }
        let component = match repo.and_then(|r| r.fetch(&c.name).ok()) {
            Some(stored) => instantiate(stored, &c.name),
            None => SamComponent::new(&c.name),
        };
        working.components.push(component.clone());
        create_component_ops.push(ChangeOp::CreateSamComponent { component });
    }

    // Loop 1b: a failure port for every unrepresented system port.
    let mut create_port_ops: Vec<ChangeOp> = Vec::new();
    for p in sm.ports() {
        if working.represents(p) {
            continue;
        }
        let name = fresh_name(&working, &p.owner, &format!("{}_om", p.name));
        let port = FailurePort::new(&name, p.direction, p.qualified());
        let component = working
            .component_mut(&p.owner)
            .expect("component created in loop 1a");
        component.failure_ports.push(port.clone());
        if p.direction == Direction::Out {
            component.definitions.entry(name).or_insert(None);
        }
        create_port_ops.push(ChangeOp::CreateFailurePort {
            component: p.owner.clone(),
            port,
        });
    }

    // Loop 2: components without a system counterpart go away, as does
    // every failure port whose trace no longer resolves within its owner.
    let removed_components: BTreeSet<String> = working
        .components
        .iter()
        .filter(|c| sm.component(&c.name).is_none())
        .map(|c| c.name.clone())
        .collect();
    let mut removed_ports: BTreeSet<QualifiedName> = BTreeSet::new();
    for c in &working.components {
        for fp in &c.failure_ports {
            let gone = if removed_components.contains(&c.name) {
                true
            } else {
                match sm.port(&fp.traces_to) {
                    Some(p) => p.owner != c.name || p.direction != fp.direction,
                    None => true,
                }
            };
            if gone {
                removed_ports.insert(qualify(&c.name, &fp.name));
            }
        }
    }

    // Loops 4 + cascade: a connection survives only if both endpoints
    // survive and the traced port pair is a system connection.
    let mut remove_connection_ops: Vec<ChangeOp> = Vec::new();
    let mut surviving_connections: Vec<FailureConnection> = Vec::new();
    for fc in &working.connections {
        let backed = !removed_ports.contains(&fc.source)
            && !removed_ports.contains(&fc.target)
            && connection_backed(sm, &working, fc);
        if backed {
            surviving_connections.push(fc.clone());
        } else {
            remove_connection_ops.push(ChangeOp::RemoveFailureConnection {
                name: fc.name.clone(),
            });
        }
    }
    remove_connection_ops.sort_by(|a, b| a.target().cmp(&b.target()));
    working.connections = surviving_connections;

    // Definitions that reference a removed in port will be cleared by the
    // removal op; surface that, since it is the one place synchronization
    // touches failure logic.
    for c in &working.components {
        if removed_components.contains(&c.name) {
            continue;
        }
        for (out, def) in &c.definitions {
            let Some(expr) = def else { continue };
            let mut cleared_by: Vec<&str> = expr
                .references()
                .iter()
                .filter_map(|r| match r {
                    ExprRef::InPort(n) if removed_ports.contains(&qualify(&c.name, n)) => Some(*n),
                    _ => None,
                })
                .collect();
            cleared_by.dedup();
            if !cleared_by.is_empty() {
                notes.push(format!(
                    "definition of {}.{} is cleared: it references removed failure port(s) {}",
                    c.name,
                    out,
                    cleared_by.join(", ")
                ));
            }
        }
    }

    let mut remove_port_ops: Vec<ChangeOp> = removed_ports
        .iter()
        .map(|q| ChangeOp::RemoveFailurePort { port: q.clone() })
        .collect();
    remove_port_ops.sort_by(|a, b| a.target().cmp(&b.target()));
    let mut remove_component_ops: Vec<ChangeOp> = removed_components
        .iter()
        .map(|name| ChangeOp::RemoveSamComponent { name: name.clone() })
        .collect();
    remove_component_ops.sort_by(|a, b| a.target().cmp(&b.target()));

    apply_removals(&mut working, &removed_components, &removed_ports);

    // Loop 3: cover every system connection, pairing failure ports by
    // failure mode.
    let mut create_connection_ops: Vec<ChangeOp> = Vec::new();
    let mut taken: BTreeSet<String> = working
        .connections
        .iter()
        .map(|c| c.name.clone())
        .collect();
    for con in sm.connections() {
        let sources = tracing_ports(&working, &con.source);
        let targets = tracing_ports(&working, &con.target);
        let covered = working.connections.iter().any(|fc| {
            sources.iter().any(|(q, _)| q == &fc.source)
                && targets.iter().any(|(q, _)| q == &fc.target)
        });
        if covered {
            continue;
        }
        let mut pairs: Vec<(&(QualifiedName, String), &(QualifiedName, String))> = Vec::new();
        for s in &sources {
            for t in &targets {
                if s.1 == t.1 {
                    pairs.push((s, t));
                }
            }
        }
        if pairs.is_empty() {
            let (Some(s), Some(t)) = (sources.first(), targets.first()) else {
                // No tracing port on one side; the port-creation loop makes
                // this unreachable for plans computed here.
                continue;
            };
            notes.push(format!(
                "no failure modes match across {}: connected {} and {} arbitrarily",
                con.name, s.0, t.0
            ));
            pairs.push((s, t));
        }
        for (s, t) in pairs {
            let name = fresh_connection_name(&taken, &format!("{}_{}", con.name, s.1));
            taken.insert(name.clone());
            let connection = FailureConnection::new(&name, s.0.clone(), t.0.clone());
            working.connections.push(connection.clone());
            create_connection_ops.push(ChangeOp::CreateFailureConnection { connection });
        }
    }

    let mut ops = rename_ops;
    ops.extend(create_component_ops);
    ops.extend(create_port_ops);
    ops.extend(remove_connection_ops);
    ops.extend(remove_port_ops);
    ops.extend(remove_component_ops);
    ops.extend(create_connection_ops);
    if ops.is_empty() {
        notes.clear();
    }
    Ok(ChangeSet::new(
        sm.fingerprint(),
        sam.fingerprint(),
        ops,
        notes,
    ))
}

fn rename_component(working: &mut Working, old: &str, new: &str) {
    for c in &mut working.components {
        if c.name == old {
            c.name = new.to_string();
        }
        for p in &mut c.failure_ports {
            if p.traces_to.component() == old {
                p.traces_to = qualify(new, p.traces_to.element());
            }
        }
    }
    for fc in &mut working.connections {
        if fc.source.component() == old {
            fc.source = qualify(new, fc.source.element());
        }
        if fc.target.component() == old {
            fc.target = qualify(new, fc.target.element());
        }
    }
}

/// True if the traced port pair of `fc` is one of the system connections.
fn connection_backed(sm: &SystemModel, working: &Working, fc: &FailureConnection) -> bool {
    let trace_of = |q: &QualifiedName| -> Option<QualifiedName> {
        working
            .component(q.component())
            .and_then(|c| c.failure_port(q.element()))
            .map(|p| p.traces_to.clone())
    };
    let (Some(p_out), Some(p_in)) = (trace_of(&fc.source), trace_of(&fc.target)) else {
        return false;
    };
    sm.connections()
        .iter()
        .any(|con| con.source == p_out && con.target == p_in)
}

/// Failure ports of `working` tracing `port`, with their failure modes,
/// restricted to the component owning the port.
fn tracing_ports(working: &Working, port: &QualifiedName) -> Vec<(QualifiedName, String)> {
    let mut out = Vec::new();
    if let Some(c) = working.component(port.component()) {
        for fp in &c.failure_ports {
            if &fp.traces_to == port {
                out.push((qualify(&c.name, &fp.name), fp.failure_mode.clone()));
            }
        }
    }
    out.sort();
    out
}

fn apply_removals(
    working: &mut Working,
    removed_components: &BTreeSet<String>,
    removed_ports: &BTreeSet<QualifiedName>,
) {
    for c in &mut working.components {
        let name = c.name.clone();
        c.failure_ports
            .retain(|p| !removed_ports.contains(&qualify(&name, &p.name)));
        c.definitions
            .retain(|out, _| !removed_ports.contains(&qualify(&name, out)));
        for (_, def) in c.definitions.iter_mut() {
            let refers_removed = def.as_ref().is_some_and(|expr| {
                expr.references().iter().any(|r| {
                    matches!(r, ExprRef::InPort(n) if removed_ports.contains(&qualify(&name, n)))
                })
            });
            if refers_removed {
                *def = None;
            }
        }
    }
    working
        .components
        .retain(|c| !removed_components.contains(&c.name));
}

/// Applies a change set to the safety model it was computed for.
pub fn apply_changeset(
    sam: &SafetyAnalysisModel,
    change_set: &ChangeSet,
) -> Result<SafetyAnalysisModel, ApplyError> {
    let found = sam.fingerprint();
    if change_set.sam_ref() != found {
        return Err(ApplyError::StaleChangeSet {
            expected: change_set.sam_ref(),
            found,
        });
    }
    let mut working = Working {
        components: sam.components().to_vec(),
        connections: sam.failure_connections().to_vec(),
    };
    for (index, op) in change_set.ops().iter().enumerate() {
        apply_op(&mut working, op).map_err(|reason| ApplyError::InapplicableOp { index, reason })?;
    }
    SafetyAnalysisModel::build(working.components, working.connections)
        .map_err(|errors| ApplyError::InvalidResult { errors })
}

fn apply_op(working: &mut Working, op: &ChangeOp) -> Result<(), String> {
    match op {
        ChangeOp::RenamePortTrace { old, new } => {
            let mut touched = false;
            for c in &mut working.components {
                for p in &mut c.failure_ports {
                    if &p.traces_to == old {
                        p.traces_to = new.clone();
                        touched = true;
                    }
                }
            }
            if !touched {
                return Err(format!("no failure port traces {old}"));
            }
        }
        ChangeOp::RenameComponent { old, new } => {
            if working.component(old).is_none() {
                return Err(format!("no component named {old:?}"));
            }
            if working.component(new).is_some() {
                return Err(format!("component {new:?} already exists"));
            }
            rename_component(working, old, new);
        }
        ChangeOp::CreateSamComponent { component } => {
            if working.component(&component.name).is_some() {
                return Err(format!("component {:?} already exists", component.name));
            }
            working.components.push(component.clone());
        }
        ChangeOp::CreateFailurePort { component, port } => {
            if working.has_element(component, &port.name) {
                return Err(format!(
                    "component {component:?} already has an element named {:?}",
                    port.name
                ));
            }
            let c = working
                .component_mut(component)
                .ok_or_else(|| format!("no component named {component:?}"))?;
            c.failure_ports.push(port.clone());
            if port.direction == Direction::Out {
                c.definitions.entry(port.name.clone()).or_insert(None);
            }
        }
        ChangeOp::CreateFailureConnection { connection } => {
            if working.connections.iter().any(|c| c.name == connection.name) {
                return Err(format!(
                    "failure connection {:?} already exists",
                    connection.name
                ));
            }
            working.connections.push(connection.clone());
        }
        ChangeOp::RemoveFailureConnection { name } => {
            let before = working.connections.len();
            working.connections.retain(|c| &c.name != name);
            if working.connections.len() == before {
                return Err(format!("no failure connection named {name:?}"));
            }
        }
        ChangeOp::RemoveFailurePort { port } => {
            if let Some(fc) = working
                .connections
                .iter()
                .find(|c| &c.source == port || &c.target == port)
            {
                return Err(format!(
                    "failure port {port} is still used by connection {:?}",
                    fc.name
                ));
            }
            let c = working
                .component_mut(port.component())
                .ok_or_else(|| format!("no component named {:?}", port.component()))?;
            let before = c.failure_ports.len();
            c.failure_ports.retain(|p| p.name != port.element());
            if c.failure_ports.len() == before {
                return Err(format!("no failure port named {port}"));
            }
            c.definitions.remove(port.element());
            for (_, def) in c.definitions.iter_mut() {
                let refers = def.as_ref().is_some_and(|expr| {
                    expr.references()
                        .iter()
                        .any(|r| matches!(r, ExprRef::InPort(n) if *n == port.element()))
                });
                if refers {
                    *def = None;
                }
            }
        }
        ChangeOp::RemoveSamComponent { name } => {
            if let Some(fc) = working.connections.iter().find(|c| {
                c.source.component() == name.as_str() || c.target.component() == name.as_str()
            }) {
                return Err(format!(
                    "component {name:?} is still used by connection {:?}",
                    fc.name
                ));
            }
            let before = working.components.len();
            working.components.retain(|c| &c.name != name);
            if working.components.len() == before {
                return Err(format!("no component named {name:?}"));
            }
        }
    }
    Ok(())
}

/// Plans and applies in one step.
pub fn synchronize(
    sm: &SystemModel,
    sam: &SafetyAnalysisModel,
    hints: Option<&RenameHints>,
    repo: Option<&ComponentRepository>,
) -> Result<(SafetyAnalysisModel, ChangeSet), SynchronizeError> {
    let binding = crate::binding::bind(sm, sam);
    let change_set = plan_sync(sm, sam, &binding, hints, repo)?;
    let model = apply_changeset(sam, &change_set)?;
    Ok((model, change_set))
}

/// Error of the combined plan-and-apply operation.
#[derive(Debug, Clone, PartialEq)]
pub enum SynchronizeError {
    Plan(SyncError),
    Apply(ApplyError),
}

impl fmt::Display for SynchronizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynchronizeError::Plan(e) => e.fmt(f),
            SynchronizeError::Apply(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for SynchronizeError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            SynchronizeError::Plan(e) => Some(e),
            SynchronizeError::Apply(e) => Some(e),
        }
    }
}

impl From<SyncError> for SynchronizeError {
    fn from(e: SyncError) -> Self {
        SynchronizeError::Plan(e)
    }
}

impl From<ApplyError> for SynchronizeError {
    fn from(e: ApplyError) -> Self {
        SynchronizeError::Apply(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binding::{bind, check_consistency};
    use crate::safety::{BasicEvent, BooleanExpr};
    use crate::samples;
    use crate::system::{RenameEdit, SystemEdit};
    use alloc::vec;

    fn q(s: &str) -> QualifiedName {
        QualifiedName::parse(s).unwrap()
    }

    fn plan(sm: &SystemModel, sam: &SafetyAnalysisModel) -> ChangeSet {
        plan_sync(sm, sam, &bind(sm, sam), None, None).unwrap()
    }

    #[test]
    fn consistent_pair_needs_no_changes() {
        let sm = samples::pipeline_system();
        let sam = samples::pipeline_safety();
        let cs = plan(&sm, &sam);
        assert!(cs.is_empty());
        assert!(cs.notes().is_empty());
        let (out, _) = synchronize(&sm, &sam, None, None).unwrap();
        assert_eq!(out, sam);
    }

    #[test]
    fn empty_safety_model_gets_full_default_structure() {
        let sm = samples::pipeline_system();
        let sam = SafetyAnalysisModel::empty();
        let cs = plan(&sm, &sam);
        let kinds: Vec<&str> = cs.ops().iter().map(|o| o.kind()).collect();
        assert_eq!(kinds.iter().filter(|k| **k == "CreateSamComponent").count(), 3);
        assert_eq!(kinds.iter().filter(|k| **k == "CreateFailurePort").count(), 7);
        assert_eq!(
            kinds.iter().filter(|k| **k == "CreateFailureConnection").count(),
            2
        );
        assert_eq!(cs.ops().len(), 12);

        let applied = apply_changeset(&sam, &cs).unwrap();
        let port_names: Vec<String> = applied
            .components()
            .iter()
            .flat_map(|c| c.failure_ports.iter().map(|p| p.name.clone()))
            .collect();
        assert_eq!(
            port_names,
            vec!["in1_om", "out1_om", "out2_om", "in2_om", "out3_om", "in3_om", "out4_om"]
        );
        let findings = check_consistency(&sm, &applied, &bind(&sm, &applied));
        assert!(findings.iter().all(|f| !f.kind.is_structural()));
        assert!(plan(&sm, &applied).is_empty());
    }

    #[test]
    fn removed_system_component_cascades_in_order() {
        let sm = samples::pipeline_system()
            .apply_edit(&SystemEdit::RemoveComponent { name: "c3".into() })
            .unwrap();
        let sam = samples::pipeline_safety();
        let cs = plan(&sm, &sam);
        let ops: Vec<(&str, String)> = cs.ops().iter().map(|o| (o.kind(), o.target())).collect();
        assert_eq!(
            ops,
            vec![
                ("RemoveFailureConnection", "con3'".to_string()),
                ("RemoveFailurePort", "c3.g".to_string()),
                ("RemoveFailurePort", "c3.j".to_string()),
                ("RemoveSamComponent", "c3".to_string()),
            ]
        );
        let applied = apply_changeset(&sam, &cs).unwrap();
        assert!(applied.component("c3").is_none());
        assert!(applied.failure_connection("con3'").is_none());
        assert_eq!(
            applied.component("c1").unwrap().definitions,
            sam.component("c1").unwrap().definitions
        );
    }

    #[test]
    fn rename_hint_preserves_logic() {
        let sm = samples::pipeline_system()
            .apply_edit(&SystemEdit::Rename(RenameEdit::Component {
                old: "c1".into(),
                new: "cA".into(),
            }))
            .unwrap();
        let sam = samples::pipeline_safety();
        let hints = RenameHints {
            components: [("c1".to_string(), "cA".to_string())].into_iter().collect(),
            ports: BTreeMap::new(),
        };
        let (out, cs) = synchronize(&sm, &sam, Some(&hints), None).unwrap();
        assert_eq!(cs.ops().len(), 1);
        assert_eq!(cs.ops()[0].kind(), "RenameElement");
        let ca = out.component("cA").unwrap();
        assert_eq!(ca.definitions, sam.component("c1").unwrap().definitions);
        assert_eq!(ca.events, sam.component("c1").unwrap().events);
        assert_eq!(out.failure_connection("con1'").unwrap().source, q("cA.b"));
        assert!(check_consistency(&sm, &out, &bind(&sm, &out)).is_empty());
    }

    #[test]
    fn rename_without_hint_loses_logic() {
        let sm = samples::pipeline_system()
            .apply_edit(&SystemEdit::Rename(RenameEdit::Component {
                old: "c1".into(),
                new: "cA".into(),
            }))
            .unwrap();
        let sam = samples::pipeline_safety();
        let (out, cs) = synchronize(&sm, &sam, None, None).unwrap();
        assert!(out.component("c1").is_none());
        let ca = out.component("cA").unwrap();
        assert!(ca.events.is_empty());
        assert!(ca.definitions.values().all(|d| d.is_none()));
        assert!(cs
            .ops()
            .iter()
            .any(|o| o.kind() == "RemoveSamComponent" && o.target() == "c1"));
        let findings = check_consistency(&sm, &out, &bind(&sm, &out));
        assert!(findings.iter().all(|f| !f.kind.is_structural()));
    }

    #[test]
    fn port_rename_hint_retargets_traces() {
        let sm = samples::pipeline_system()
            .apply_edit(&SystemEdit::Rename(RenameEdit::Port {
                old: q("c1.in1"),
                new_name: "intake".into(),
            }))
            .unwrap();
        let sam = samples::pipeline_safety();
        let hints = RenameHints {
            components: BTreeMap::new(),
            ports: [(q("c1.in1"), q("c1.intake"))].into_iter().collect(),
        };
        let (out, cs) = synchronize(&sm, &sam, Some(&hints), None).unwrap();
        assert_eq!(cs.ops().len(), 1);
        let a = out.component("c1").unwrap().failure_port("a").unwrap();
        assert_eq!(a.traces_to, q("c1.intake"));
        assert!(check_consistency(&sm, &out, &bind(&sm, &out)).is_empty());
        let again = plan_sync(&sm, &out, &bind(&sm, &out), Some(&hints), None).unwrap();
        assert!(again.is_empty());
    }

    #[test]
    fn hints_are_validated() {
        let sm = samples::pipeline_system();
        let sam = samples::pipeline_safety();
        let hints = RenameHints {
            components: [("c1".to_string(), "cA".to_string())].into_iter().collect(),
            ports: BTreeMap::new(),
        };
        let err = plan_sync(&sm, &sam, &bind(&sm, &sam), Some(&hints), None).unwrap_err();
        assert!(matches!(err, SyncError::InvalidHints { .. }));
    }

    #[test]
    fn repository_seeds_created_components() {
        let sm = samples::pipeline_system();
        let sam_full = samples::pipeline_safety();
        let sam = SafetyAnalysisModel::build(
            sam_full
                .components()
                .iter()
                .filter(|c| c.name != "c3")
                .cloned()
                .collect(),
            sam_full
                .failure_connections()
                .iter()
                .filter(|c| c.name != "con3'")
                .cloned()
                .collect(),
        )
        .unwrap();
        let mut repo = ComponentRepository::new();
        repo.store("c3", sam_full.component("c3").unwrap().clone())
            .unwrap();
        let (out, _) = synchronize(&sm, &sam, None, Some(&repo)).unwrap();
        let c3 = out.component("c3").unwrap();
        assert_eq!(c3.events, vec![BasicEvent::new("z")]);
        assert_eq!(
            c3.definition("j").unwrap().to_string(),
            sam_full.component("c3").unwrap().definition("j").unwrap().to_string()
        );
        assert!(check_consistency(&sm, &out, &bind(&sm, &out)).is_empty());
    }

    #[test]
    fn repository_round_trip_and_unknown_key() {
        let mut repo = ComponentRepository::new();
        let stored = samples::pipeline_safety().component("c1").unwrap().clone();
        repo.store("c1@v1", stored.clone()).unwrap();
        assert_eq!(repo.fetch("c1@v1").unwrap(), &stored);
        assert!(matches!(repo.fetch("nope"), Err(RepoError::UnknownKey(_))));
        let mut junk = SamComponent::new("bad");
        junk.definitions
            .insert("ghost".into(), Some(BooleanExpr::event("nothing")));
        assert!(matches!(
            repo.store("bad", junk),
            Err(RepoError::InvalidComponent { .. })
        ));
    }

    #[test]
    fn stale_changeset_is_rejected() {
        let sm = samples::pipeline_system();
        let sam = samples::pipeline_safety();
        let cs = plan(&sm, &SafetyAnalysisModel::empty());
        assert!(matches!(
            apply_changeset(&sam, &cs),
            Err(ApplyError::StaleChangeSet { .. })
        ));
    }

    #[test]
    fn empty_changeset_is_identity() {
        let sam = samples::pipeline_safety();
        let cs = ChangeSet::new(
            samples::pipeline_system().fingerprint(),
            sam.fingerprint(),
            vec![],
            vec![],
        );
        assert_eq!(apply_changeset(&sam, &cs).unwrap(), sam);
    }

    #[test]
    fn removing_a_traced_port_clears_referencing_definitions() {
        let sm = samples::pipeline_system()
            .apply_edit(&SystemEdit::RemovePort { port: q("c1.in1") })
            .unwrap();
        let sam = samples::pipeline_safety();
        let cs = plan(&sm, &sam);
        assert!(cs
            .ops()
            .iter()
            .any(|o| o.kind() == "RemoveFailurePort" && o.target() == "c1.a"));
        assert_eq!(cs.notes().len(), 3);
        let out = apply_changeset(&sam, &cs).unwrap();
        let c1 = out.component("c1").unwrap();
        assert!(c1.definition("b").is_none());
        assert!(c1.definition("c").is_none());
        assert!(c1.definition("d").is_none());
        let findings = check_consistency(&sm, &out, &bind(&sm, &out));
        assert!(findings.iter().all(|f| !f.kind.is_structural()));
    }

    #[test]
    fn unbacked_connection_is_replaced_by_a_fresh_one() {
        let sm = samples::pipeline_system();
        let full = samples::pipeline_safety();
        let mut connections: Vec<FailureConnection> = full
            .failure_connections()
            .iter()
            .filter(|c| c.name != "con3'")
            .cloned()
            .collect();
        connections.push(FailureConnection::new("con4'", q("c2.h"), q("c3.g")));
        let sam = SafetyAnalysisModel::build(full.components().to_vec(), connections).unwrap();
        let cs = plan(&sm, &sam);
        let ops: Vec<(&str, String)> = cs.ops().iter().map(|o| (o.kind(), o.target())).collect();
        assert_eq!(
            ops,
            vec![
                ("RemoveFailureConnection", "con4'".to_string()),
                ("CreateFailureConnection", "con2_omission".to_string()),
            ]
        );
        let out = apply_changeset(&sam, &cs).unwrap();
        let created = out.failure_connection("con2_omission").unwrap();
        assert_eq!(created.source, q("c1.d"));
        assert_eq!(created.target, q("c3.g"));
        assert!(check_consistency(&sm, &out, &bind(&sm, &out)).is_empty());
    }

    #[test]
    fn mode_mismatch_falls_back_with_a_note() {
        let sm = samples::pipeline_system();
        let full = samples::pipeline_safety();
        let mut comps = full.components().to_vec();
        for c in &mut comps {
            if c.name == "c3" {
                for p in &mut c.failure_ports {
                    if p.name == "g" {
                        p.failure_mode = "value".into();
                    }
                }
            }
        }
        let connections: Vec<FailureConnection> = full
            .failure_connections()
            .iter()
            .filter(|c| c.name != "con3'")
            .cloned()
            .collect();
        let sam = SafetyAnalysisModel::build(comps, connections).unwrap();
        let cs = plan(&sm, &sam);
        assert_eq!(cs.ops().len(), 1);
        assert_eq!(cs.ops()[0].kind(), "CreateFailureConnection");
        assert_eq!(cs.notes().len(), 1);
        assert!(cs.notes()[0].contains("arbitrarily"));
    }

    #[test]
    fn created_names_avoid_collisions() {
        let sm = samples::pipeline_system();
        let mut c1 = SamComponent::new("c1");
        c1.events = vec![BasicEvent::new("in1_om")];
        let sam = SafetyAnalysisModel::build(vec![c1], vec![]).unwrap();
        let cs = plan(&sm, &sam);
        assert!(cs
            .ops()
            .iter()
            .any(|o| o.kind() == "CreateFailurePort" && o.target() == "c1.in1_om_2"));
        let out = apply_changeset(&sam, &cs).unwrap();
        assert!(check_consistency(&sm, &out, &bind(&sm, &out))
            .iter()
            .all(|f| !f.kind.is_structural()));
    }

    #[test]
    fn synchronization_is_idempotent_on_mutations() {
        let base_sm = samples::pipeline_system();
        let sam = samples::pipeline_safety();
        let mutations = vec![
            base_sm
                .apply_edit(&SystemEdit::RemoveComponent { name: "c2".into() })
                .unwrap(),
            base_sm
                .apply_edit(&SystemEdit::AddComponent { name: "c4".into() })
                .unwrap(),
            base_sm
                .apply_edit(&SystemEdit::RemovePort { port: q("c2.in2") })
                .unwrap(),
            base_sm
                .apply_edit(&SystemEdit::RemoveConnection { name: "con1".into() })
                .unwrap(),
        ];
        for sm in mutations {
            let (out, _) = synchronize(&sm, &sam, None, None).unwrap();
            let findings = check_consistency(&sm, &out, &bind(&sm, &out));
            assert!(
                findings.iter().all(|f| !f.kind.is_structural()),
                "unexpected structural findings: {findings:?}"
            );
            let again = plan(&sm, &out);
            assert!(again.is_empty(), "second plan not empty: {:?}", again.ops());
        }
    }
}
