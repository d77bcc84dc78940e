//! The safety analysis model: component fault trees.
//!
//! Each [`SamComponent`] carries basic events, directed failure ports and
//! Boolean definitions for its out failure ports. [`FailureConnection`]s
//! propagate failures between components. Like the system model, the whole
//! structure is validated at once by [`SafetyAnalysisModel::build`] and is
//! immutable afterwards.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::fingerprint::{Fingerprint, Hasher};
use crate::ident::{is_valid_identifier, QualifiedName};
use crate::system::{ConnectionEnd, Direction};

/// A basic event (cause) local to one component, with an optional
/// per-demand failure probability.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicEvent {
    pub name: String,
    pub probability: Option<f64>,
}

impl BasicEvent {
    pub fn new(name: impl Into<String>) -> Self {
        BasicEvent {
            name: name.into(),
            probability: None,
        }
    }

    pub fn with_probability(name: impl Into<String>, probability: f64) -> Self {
        BasicEvent {
            name: name.into(),
            probability: Some(probability),
        }
    }
}

/// A failure port of a component fault tree. `traces_to` names the system
/// port whose failure behaviour this port describes; `failure_mode`
/// distinguishes several failure ports tracing the same system port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailurePort {
    pub name: String,
    pub direction: Direction,
    pub traces_to: QualifiedName,
    pub failure_mode: String,
}

impl FailurePort {
    /// A failure port with the default "omission" failure mode.
    pub fn new(name: impl Into<String>, direction: Direction, traces_to: QualifiedName) -> Self {
        FailurePort {
            name: name.into(),
            direction,
            traces_to,
            failure_mode: "omission".to_string(),
        }
    }

    pub fn with_mode(mut self, failure_mode: impl Into<String>) -> Self {
        self.failure_mode = failure_mode.into();
        self
    }
}

/// A Boolean failure expression over a component's basic events and in
/// failure ports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum BooleanExpr {
    Event(String),
    InPort(String),
    And(Vec<BooleanExpr>),
    Or(Vec<BooleanExpr>),
    Not(Box<BooleanExpr>),
}

/// A reference occurring in a [`BooleanExpr`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExprRef<'a> {
    Event(&'a str),
    InPort(&'a str),
}

impl<'a> ExprRef<'a> {
    pub fn name(&self) -> &'a str {
        match self {
            ExprRef::Event(n) | ExprRef::InPort(n) => n,
        }
    }
}

impl BooleanExpr {
    pub fn event(name: impl Into<String>) -> Self {
        BooleanExpr::Event(name.into())
    }

    pub fn in_port(name: impl Into<String>) -> Self {
        BooleanExpr::InPort(name.into())
    }

    pub fn and(args: Vec<BooleanExpr>) -> Self {
        BooleanExpr::And(args)
    }

    pub fn or(args: Vec<BooleanExpr>) -> Self {
        BooleanExpr::Or(args)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(arg: BooleanExpr) -> Self {
        BooleanExpr::Not(Box::new(arg))
    }

    /// All event and in-port references, in occurrence order (duplicates
    /// kept).
    pub fn references(&self) -> Vec<ExprRef<'_>> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<ExprRef<'a>>) {
        match self {
            BooleanExpr::Event(n) => out.push(ExprRef::Event(n)),
            BooleanExpr::InPort(n) => out.push(ExprRef::InPort(n)),
            BooleanExpr::And(args) | BooleanExpr::Or(args) => {
                for a in args {
                    a.collect_refs(out);
                }
            }
            BooleanExpr::Not(a) => a.collect_refs(out),
        }
    }

    /// Evaluates under an assignment keyed by element name (component
    /// element names are unique across events and failure ports).
    pub fn eval(&self, assignment: &BTreeMap<String, bool>) -> Result<bool, EvalError> {
        match self {
            BooleanExpr::Event(n) | BooleanExpr::InPort(n) => assignment
                .get(n)
                .copied()
                .ok_or_else(|| EvalError::UnassignedReference(n.clone())),
            BooleanExpr::And(args) => {
                let mut acc = true;
                for a in args {
                    acc &= a.eval(assignment)?;
                }
                Ok(acc)
            }
            BooleanExpr::Or(args) => {
                let mut acc = false;
                for a in args {
                    acc |= a.eval(assignment)?;
                }
                Ok(acc)
            }
            BooleanExpr::Not(a) => Ok(!a.eval(assignment)?),
        }
    }

    /// True if the expression contains no negation.
    pub fn is_negation_free(&self) -> bool {
        match self {
            BooleanExpr::Event(_) | BooleanExpr::InPort(_) => true,
            BooleanExpr::And(args) | BooleanExpr::Or(args) => {
                args.iter().all(|a| a.is_negation_free())
            }
            BooleanExpr::Not(_) => false,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent_needs_parens: bool) -> fmt::Result {
        match self {
            BooleanExpr::Event(n) | BooleanExpr::InPort(n) => f.write_str(n),
            BooleanExpr::And(args) => {
                if parent_needs_parens {
                    f.write_str("(")?;
                }
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    a.fmt_prec(f, true)?;
                }
                if parent_needs_parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            BooleanExpr::Or(args) => {
                if parent_needs_parens {
                    f.write_str("(")?;
                }
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    a.fmt_prec(f, true)?;
                }
                if parent_needs_parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            BooleanExpr::Not(a) => {
                f.write_str("!")?;
                a.fmt_prec(f, true)
            }
        }
    }
}

impl fmt::Display for BooleanExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

/// Evaluation failure: a reference the assignment does not cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    UnassignedReference(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnassignedReference(n) => write!(f, "no truth value assigned to {n:?}"),
        }
    }
}

impl core::error::Error for EvalError {}

/// One component fault tree: events, failure ports and the definitions of
/// its out failure ports. Out ports without a definition are allowed; they
/// are structurally present but logically incomplete until someone fills
/// the expression in.
#[derive(Debug, Clone, PartialEq)]
pub struct SamComponent {
    pub name: String,
    pub events: Vec<BasicEvent>,
    pub failure_ports: Vec<FailurePort>,
    pub definitions: BTreeMap<String, Option<BooleanExpr>>,
}

impl SamComponent {
    pub fn new(name: impl Into<String>) -> Self {
        SamComponent {
            name: name.into(),
            events: Vec::new(),
            failure_ports: Vec::new(),
            definitions: BTreeMap::new(),
        }
    }

    pub fn event(&self, name: &str) -> Option<&BasicEvent> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn failure_port(&self, name: &str) -> Option<&FailurePort> {
        self.failure_ports.iter().find(|p| p.name == name)
    }

    pub fn in_ports(&self) -> impl Iterator<Item = &FailurePort> {
        self.failure_ports
            .iter()
            .filter(|p| p.direction == Direction::In)
    }

    pub fn out_ports(&self) -> impl Iterator<Item = &FailurePort> {
        self.failure_ports
            .iter()
            .filter(|p| p.direction == Direction::Out)
    }

    /// The definition of an out failure port, if one has been written.
    pub fn definition(&self, out_port: &str) -> Option<&BooleanExpr> {
        self.definitions.get(out_port).and_then(|d| d.as_ref())
    }
}

/// Failure propagation from one component's out failure port to another
/// component's in failure port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureConnection {
    pub name: String,
    pub source: QualifiedName,
    pub target: QualifiedName,
}

impl FailureConnection {
    pub fn new(name: impl Into<String>, source: QualifiedName, target: QualifiedName) -> Self {
        FailureConnection {
            name: name.into(),
            source,
            target,
        }
    }
}

/// What kind of safety-model element an error is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamElementKind {
    Component,
    Event,
    FailurePort,
    Connection,
}

impl fmt::Display for SamElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamElementKind::Component => "component",
            SamElementKind::Event => "event",
            SamElementKind::FailurePort => "failure port",
            SamElementKind::Connection => "failure connection",
        })
    }
}

/// A single validation violation found while building a
/// [`SafetyAnalysisModel`].
#[derive(Debug, Clone, PartialEq)]
pub enum SafetyModelError {
    InvalidIdentifier {
        kind: SamElementKind,
        name: String,
    },
    /// Element names are unique per component across events and failure
    /// ports; component and connection names are unique model-wide.
    DuplicateName {
        kind: SamElementKind,
        name: String,
    },
    /// Two failure ports of one component trace the same system port with
    /// the same failure mode.
    DuplicateTrace {
        component: String,
        traces_to: QualifiedName,
        failure_mode: String,
    },
    ProbabilityOutOfRange {
        event: String,
        value: f64,
    },
    /// A definition names an unknown out port, or an expression references
    /// an element that exists nowhere.
    UnresolvedReference {
        component: String,
        definition: String,
        reference: String,
    },
    /// A definition references an element that belongs to a different
    /// component; definitions are strictly intra-component.
    CrossComponentBeta {
        component: String,
        definition: String,
        reference: String,
        found_in: String,
    },
    /// And/Or with fewer than two operands.
    MalformedExpression {
        component: String,
        definition: String,
    },
    UnknownEndpoint {
        connection: String,
        end: ConnectionEnd,
        port: String,
    },
    DirectionViolation {
        connection: String,
        end: ConnectionEnd,
        port: String,
    },
    /// A failure connection must join two different components.
    IntraComponentConnection {
        connection: String,
        component: String,
    },
    MultipleDrivers {
        port: String,
        connections: Vec<String>,
    },
}

impl fmt::Display for SafetyModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SafetyModelError::InvalidIdentifier { kind, name } => {
                write!(f, "invalid {kind} name {name:?}")
            }
            SafetyModelError::DuplicateName { kind, name } => {
                write!(f, "duplicate {kind} name {name:?}")
            }
            SafetyModelError::DuplicateTrace {
                component,
                traces_to,
                failure_mode,
            } => write!(
                f,
                "component {component:?} has two failure ports tracing {traces_to} with mode {failure_mode:?}"
            ),
            SafetyModelError::ProbabilityOutOfRange { event, value } => {
                write!(f, "event {event:?} has probability {value} outside [0, 1]")
            }
            SafetyModelError::UnresolvedReference {
                component,
                definition,
                reference,
            } => write!(
                f,
                "definition of {component}.{definition} references unknown element {reference:?}"
            ),
            SafetyModelError::CrossComponentBeta {
                component,
                definition,
                reference,
                found_in,
            } => write!(
                f,
                "definition of {component}.{definition} references {reference:?} which belongs to component {found_in:?}"
            ),
            SafetyModelError::MalformedExpression {
                component,
                definition,
            } => write!(
                f,
                "definition of {component}.{definition} contains an and/or with fewer than two operands"
            ),
            SafetyModelError::UnknownEndpoint {
                connection,
                end,
                port,
            } => write!(
                f,
                "failure connection {connection:?} {end} references unknown failure port {port:?}"
            ),
            SafetyModelError::DirectionViolation {
                connection,
                end,
                port,
            } => {
                let expected = match end {
                    ConnectionEnd::Source => "an out failure port",
                    ConnectionEnd::Target => "an in failure port",
                };
                write!(
                    f,
                    "failure connection {connection:?} {end} {port:?} must be {expected}"
                )
            }
            SafetyModelError::IntraComponentConnection {
                connection,
                component,
            } => write!(
                f,
                "failure connection {connection:?} stays inside component {component:?}"
            ),
            SafetyModelError::MultipleDrivers { port, connections } => write!(
                f,
                "in failure port {port:?} is targeted by more than one failure connection: {connections:?}"
            ),
        }
    }
}

impl core::error::Error for SafetyModelError {}

/// The validated safety analysis model: one fault tree per component plus
/// the failure propagation between them.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyAnalysisModel {
    components: Vec<SamComponent>,
    failure_connections: Vec<FailureConnection>,
}

impl SafetyAnalysisModel {
    /// Validates raw components and connections into a model. The error
    /// case lists every violation found.
    pub fn build(
        components: Vec<SamComponent>,
        failure_connections: Vec<FailureConnection>,
    ) -> Result<SafetyAnalysisModel, Vec<SafetyModelError>> {
        let mut errors = Vec::new();

        for (i, c) in components.iter().enumerate() {
            if !is_valid_identifier(&c.name) {
                errors.push(SafetyModelError::InvalidIdentifier {
                    kind: SamElementKind::Component,
                    name: c.name.clone(),
                });
            }
            if components[..i].iter().any(|p| p.name == c.name) {
                errors.push(SafetyModelError::DuplicateName {
                    kind: SamElementKind::Component,
                    name: c.name.clone(),
                });
            }
            validate_component(c, &components, &mut errors);
        }

        validate_connections(&components, &failure_connections, &mut errors);

        if !errors.is_empty() {
            return Err(errors);
        }

        let mut model = SafetyAnalysisModel {
            components,
            failure_connections,
        };
        for c in &mut model.components {
            c.events.sort_by(|a, b| a.name.cmp(&b.name));
            c.failure_ports.sort_by(|a, b| a.name.cmp(&b.name));
            let outs: Vec<String> = c
                .failure_ports
                .iter()
                .filter(|p| p.direction == Direction::Out)
                .map(|p| p.name.clone())
                .collect();
            for out in outs {
                c.definitions.entry(out).or_insert(None);
            }
        }
        model.components.sort_by(|a, b| a.name.cmp(&b.name));
        model.failure_connections.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(model)
    }

    pub fn empty() -> SafetyAnalysisModel {
        SafetyAnalysisModel {
            components: Vec::new(),
            failure_connections: Vec::new(),
        }
    }

    pub fn components(&self) -> &[SamComponent] {
        &self.components
    }

    pub fn failure_connections(&self) -> &[FailureConnection] {
        &self.failure_connections
    }

    pub fn component(&self, name: &str) -> Option<&SamComponent> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn failure_connection(&self, name: &str) -> Option<&FailureConnection> {
        self.failure_connections.iter().find(|c| c.name == name)
    }

    /// Resolves a qualified failure port reference.
    pub fn failure_port(&self, q: &QualifiedName) -> Option<(&SamComponent, &FailurePort)> {
        let c = self.component(q.component())?;
        Some((c, c.failure_port(q.element())?))
    }

    /// Resolves a qualified basic event reference.
    pub fn event(&self, q: &QualifiedName) -> Option<(&SamComponent, &BasicEvent)> {
        let c = self.component(q.component())?;
        Some((c, c.event(q.element())?))
    }

    /// The single failure connection feeding `in_port`, if any.
    pub fn incoming_failure_connection(&self, in_port: &QualifiedName) -> Option<&FailureConnection> {
        self.failure_connections.iter().find(|c| &c.target == in_port)
    }

    /// Content identity over the canonical element order.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut h = Hasher::new();
        h.tag(b'A');
        for c in &self.components {
            h.tag(1);
            h.write_str(&c.name);
            for e in &c.events {
                h.tag(2);
                h.write_str(&e.name);
                match e.probability {
                    None => h.tag(0),
                    Some(p) => {
                        h.tag(1);
                        h.write(&p.to_bits().to_be_bytes());
                    }
                }
            }
            for p in &c.failure_ports {
                h.tag(3);
                h.write_str(&p.name);
                h.tag(match p.direction {
                    Direction::In => 0,
                    Direction::Out => 1,
                });
                h.write_str(&p.traces_to.to_string());
                h.write_str(&p.failure_mode);
            }
            for (out, def) in &c.definitions {
                h.tag(4);
                h.write_str(out);
                match def {
                    None => h.tag(0),
                    Some(expr) => {
                        h.tag(1);
                        hash_expr(&mut h, expr);
                    }
                }
            }
        }
        for con in &self.failure_connections {
            h.tag(5);
            h.write_str(&con.name);
            h.write_str(&con.source.to_string());
            h.write_str(&con.target.to_string());
        }
        h.finish()
    }

    /// The failure propagation graph over qualified events and failure
    /// ports: an edge runs from each referenced element into the defined
    /// out port, and along every failure connection.
    pub fn propagation_graph(&self) -> PropagationGraph {
        let mut nodes: BTreeSet<QualifiedName> = BTreeSet::new();
        for c in &self.components {
            for e in &c.events {
                nodes.insert(qualify(&c.name, &e.name));
            }
            for p in &c.failure_ports {
                nodes.insert(qualify(&c.name, &p.name));
            }
        }
        let mut edges: BTreeSet<(QualifiedName, QualifiedName)> = BTreeSet::new();
        for c in &self.components {
            for (out, def) in &c.definitions {
                if let Some(expr) = def {
                    let to = qualify(&c.name, out);
                    for r in expr.references() {
                        edges.insert((qualify(&c.name, r.name()), to.clone()));
                    }
                }
            }
        }
        for con in &self.failure_connections {
            edges.insert((con.source.clone(), con.target.clone()));
        }
        PropagationGraph {
            nodes: nodes.into_iter().collect(),
            edges: edges.into_iter().collect(),
        }
    }
}

fn qualify(component: &str, element: &str) -> QualifiedName {
    QualifiedName::new(component, element).expect("validated model names")
}

fn validate_component(
    c: &SamComponent,
    all: &[SamComponent],
    errors: &mut Vec<SafetyModelError>,
) {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for e in &c.events {
        if !is_valid_identifier(&e.name) {
            errors.push(SafetyModelError::InvalidIdentifier {
                kind: SamElementKind::Event,
                name: e.name.clone(),
            });
        }
        if !seen.insert(&e.name) {
            errors.push(SafetyModelError::DuplicateName {
                kind: SamElementKind::Event,
                name: format!("{}.{}", c.name, e.name),
            });
        }
        if let Some(p) = e.probability {
            if !(0.0..=1.0).contains(&p) {
                errors.push(SafetyModelError::ProbabilityOutOfRange {
                    event: format!("{}.{}", c.name, e.name),
                    value: p,
                });
            }
        }
    }
    for p in &c.failure_ports {
        if !is_valid_identifier(&p.name) {
            errors.push(SafetyModelError::InvalidIdentifier {
                kind: SamElementKind::FailurePort,
                name: p.name.clone(),
            });
        }
        if !seen.insert(&p.name) {
            errors.push(SafetyModelError::DuplicateName {
                kind: SamElementKind::FailurePort,
                name: format!("{}.{}", c.name, p.name),
            });
        }
    }
    for (i, p) in c.failure_ports.iter().enumerate() {
        if c.failure_ports[..i]
            .iter()
            .any(|q| q.traces_to == p.traces_to && q.failure_mode == p.failure_mode)
        {
            errors.push(SafetyModelError::DuplicateTrace {
                component: c.name.clone(),
                traces_to: p.traces_to.clone(),
                failure_mode: p.failure_mode.clone(),
            });
        }
    }

    for (out, def) in &c.definitions {
        let target_ok = c
            .failure_port(out)
            .map(|p| p.direction == Direction::Out)
            .unwrap_or(false);
        if !target_ok {
            errors.push(SafetyModelError::UnresolvedReference {
                component: c.name.clone(),
                definition: out.clone(),
                reference: out.clone(),
            });
        }
        let Some(expr) = def else { continue };
        if has_malformed_gate(expr) {
            errors.push(SafetyModelError::MalformedExpression {
                component: c.name.clone(),
                definition: out.clone(),
            });
        }
        for r in expr.references() {
            let local = match r {
                ExprRef::Event(n) => c.event(n).is_some(),
                ExprRef::InPort(n) => c
                    .failure_port(n)
                    .map(|p| p.direction == Direction::In)
                    .unwrap_or(false),
            };
            if local {
                continue;
            }
            let foreign = all.iter().filter(|o| o.name != c.name).find(|o| match r {
                ExprRef::Event(n) => o.event(n).is_some(),
                ExprRef::InPort(n) => o
                    .failure_port(n)
                    .map(|p| p.direction == Direction::In)
                    .unwrap_or(false),
            });
            match foreign {
                Some(o) => errors.push(SafetyModelError::CrossComponentBeta {
                    component: c.name.clone(),
                    definition: out.clone(),
                    reference: r.name().to_owned(),
                    found_in: o.name.clone(),
                }),
                None => errors.push(SafetyModelError::UnresolvedReference {
                    component: c.name.clone(),
                    definition: out.clone(),
                    reference: r.name().to_owned(),
                }),
            }
        }
    }
}

fn has_malformed_gate(expr: &BooleanExpr) -> bool {
    match expr {
        BooleanExpr::Event(_) | BooleanExpr::InPort(_) => false,
        BooleanExpr::And(args) | BooleanExpr::Or(args) => {
            args.len() < 2 || args.iter().any(has_malformed_gate)
        }
        BooleanExpr::Not(a) => has_malformed_gate(a),
    }
}

fn validate_connections(
    components: &[SamComponent],
    connections: &[FailureConnection],
    errors: &mut Vec<SafetyModelError>,
) {
    let find = |q: &QualifiedName| {
        components
            .iter()
            .find(|c| c.name == q.component())
            .and_then(|c| c.failure_port(q.element()))
    };
    for (i, con) in connections.iter().enumerate() {
        if !is_valid_identifier(&con.name) {
            errors.push(SafetyModelError::InvalidIdentifier {
                kind: SamElementKind::Connection,
                name: con.name.clone(),
            });
        }
        if connections[..i].iter().any(|c| c.name == con.name) {
            errors.push(SafetyModelError::DuplicateName {
                kind: SamElementKind::Connection,
                name: con.name.clone(),
            });
        }
        for (end, q, want) in [
            (ConnectionEnd::Source, &con.source, Direction::Out),
            (ConnectionEnd::Target, &con.target, Direction::In),
        ] {
            match find(q) {
                None => errors.push(SafetyModelError::UnknownEndpoint {
                    connection: con.name.clone(),
                    end,
                    port: q.to_string(),
                }),
                Some(p) if p.direction != want => {
                    errors.push(SafetyModelError::DirectionViolation {
                        connection: con.name.clone(),
                        end,
                        port: q.to_string(),
                    });
                }
                Some(_) => {}
            }
        }
        if con.source.component() == con.target.component() {
            errors.push(SafetyModelError::IntraComponentConnection {
                connection: con.name.clone(),
                component: con.source.component().to_string(),
            });
        }
    }
    let mut targets: Vec<(&QualifiedName, Vec<&str>)> = Vec::new();
    for con in connections {
        match targets.iter_mut().find(|(q, _)| *q == &con.target) {
            Some((_, names)) => names.push(&con.name),
            None => targets.push((&con.target, alloc::vec![con.name.as_str()])),
        }
    }
    for (q, names) in targets {
        if names.len() > 1 {
            errors.push(SafetyModelError::MultipleDrivers {
                port: q.to_string(),
                connections: names.iter().map(|n| n.to_string()).collect(),
            });
        }
    }
}

fn hash_expr(h: &mut Hasher, expr: &BooleanExpr) {
    match expr {
        BooleanExpr::Event(n) => {
            h.tag(10);
            h.write_str(n);
        }
        BooleanExpr::InPort(n) => {
            h.tag(11);
            h.write_str(n);
        }
        BooleanExpr::And(args) => {
            h.tag(12);
            h.write(&(args.len() as u64).to_be_bytes());
            for a in args {
                hash_expr(h, a);
            }
        }
        BooleanExpr::Or(args) => {
            h.tag(13);
            h.write(&(args.len() as u64).to_be_bytes());
            for a in args {
                hash_expr(h, a);
            }
        }
        BooleanExpr::Not(a) => {
            h.tag(14);
            hash_expr(h, a);
        }
    }
}

/// Directed failure propagation graph with cycle reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropagationGraph {
    nodes: Vec<QualifiedName>,
    edges: Vec<(QualifiedName, QualifiedName)>,
}

impl PropagationGraph {
    pub fn nodes(&self) -> &[QualifiedName] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(QualifiedName, QualifiedName)] {
        &self.edges
    }

    fn index_of(&self, q: &QualifiedName) -> usize {
        self.nodes.binary_search(q).expect("edge endpoints are nodes")
    }

    fn adjacency(&self, reversed: bool) -> Vec<Vec<usize>> {
        let mut adj = alloc::vec![Vec::new(); self.nodes.len()];
        for (u, v) in &self.edges {
            let (a, b) = (self.index_of(u), self.index_of(v));
            if reversed {
                adj[b].push(a);
            } else {
                adj[a].push(b);
            }
        }
        adj
    }

    /// Strongly connected components with more than one node, plus
    /// self-loops. Empty means the graph is acyclic.
    pub fn cycles(&self) -> Vec<Vec<QualifiedName>> {
        let n = self.nodes.len();
        let adj = self.adjacency(false);
        let radj = self.adjacency(true);

        // Kosaraju, iterative: order by finish time, then sweep the
        // reversed graph.
        let mut finished = Vec::with_capacity(n);
        let mut visited = alloc::vec![false; n];
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let mut stack = alloc::vec![(start, 0usize)];
            visited[start] = true;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if *next < adj[node].len() {
                    let child = adj[node][*next];
                    *next += 1;
                    if !visited[child] {
                        visited[child] = true;
                        stack.push((child, 0));
                    }
                } else {
                    finished.push(node);
                    stack.pop();
                }
            }
        }

        let mut assigned = alloc::vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &root in finished.iter().rev() {
            if assigned[root] != usize::MAX {
                continue;
            }
            let id = groups.len();
            let mut members = Vec::new();
            let mut stack = alloc::vec![root];
            assigned[root] = id;
            while let Some(node) = stack.pop() {
                members.push(node);
                for &prev in &radj[node] {
                    if assigned[prev] == usize::MAX {
                        assigned[prev] = id;
                        stack.push(prev);
                    }
                }
            }
            groups.push(members);
        }

        let has_self_loop: BTreeSet<usize> = self
            .edges
            .iter()
            .filter(|(u, v)| u == v)
            .map(|(u, _)| self.index_of(u))
            .collect();
        let mut out: Vec<Vec<QualifiedName>> = groups
            .into_iter()
            .filter(|g| g.len() > 1 || g.iter().any(|i| has_self_loop.contains(i)))
            .map(|g| {
                let mut names: Vec<QualifiedName> =
                    g.into_iter().map(|i| self.nodes[i].clone()).collect();
                names.sort();
                names
            })
            .collect();
        out.sort();
        out
    }

    pub fn is_acyclic(&self) -> bool {
        self.cycles().is_empty()
    }

    /// A topological order (smallest name first among ready nodes), or
    /// `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<QualifiedName>> {
        let n = self.nodes.len();
        let adj = self.adjacency(false);
        let mut indegree = alloc::vec![0usize; n];
        for targets in &adj {
            for &t in targets {
                indegree[t] += 1;
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            order.push(self.nodes[i].clone());
            for &t in &adj[i] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    ready.insert(t);
                }
            }
        }
        if order.len() == n {
            Some(order)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use alloc::vec;

    fn q(s: &str) -> QualifiedName {
        QualifiedName::parse(s).unwrap()
    }

    #[test]
    fn sample_model_builds_and_orders_canonically() {
        let sam = samples::pipeline_safety();
        let names: Vec<&str> = sam.components().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["c1", "c2", "c3"]);
        let c1 = sam.component("c1").unwrap();
        assert_eq!(c1.out_ports().count(), 3);
        assert_eq!(c1.in_ports().count(), 1);
        assert_eq!(
            sam.incoming_failure_connection(&q("c3.g")).unwrap().name,
            "con3'"
        );
        assert!(sam.incoming_failure_connection(&q("c1.a")).is_none());
    }

    #[test]
    fn empty_model_is_valid() {
        let sam = SafetyAnalysisModel::empty();
        assert!(sam.components().is_empty());
        assert!(sam.propagation_graph().is_acyclic());
    }

    #[test]
    fn undefined_out_port_definition_is_allowed() {
        let mut c = SamComponent::new("c1");
        c.failure_ports = vec![FailurePort::new("b", Direction::Out, q("c1.out1"))];
        let sam = SafetyAnalysisModel::build(vec![c], vec![]).unwrap();
        let c1 = sam.component("c1").unwrap();
        assert!(c1.definitions.contains_key("b"));
        assert!(c1.definition("b").is_none());
    }

    #[test]
    fn cross_component_reference_is_rejected() {
        let mut c1 = SamComponent::new("c1");
        c1.events = vec![BasicEvent::new("w")];
        let mut c2 = SamComponent::new("c2");
        c2.failure_ports = vec![FailurePort::new("h", Direction::Out, q("c2.out3"))];
        c2.definitions
            .insert("h".into(), Some(BooleanExpr::event("w")));
        let errs = SafetyAnalysisModel::build(vec![c1, c2], vec![]).unwrap_err();
        assert_eq!(
            errs,
            vec![SafetyModelError::CrossComponentBeta {
                component: "c2".into(),
                definition: "h".into(),
                reference: "w".into(),
                found_in: "c1".into(),
            }]
        );
    }

    #[test]
    fn unresolved_and_malformed_definitions_are_rejected() {
        let mut c = SamComponent::new("c1");
        c.failure_ports = vec![
            FailurePort::new("a", Direction::In, q("c1.in1")),
            FailurePort::new("b", Direction::Out, q("c1.out1")),
        ];
        c.definitions.insert(
            "b".into(),
            Some(BooleanExpr::and(vec![BooleanExpr::in_port("nope")])),
        );
        let errs = SafetyAnalysisModel::build(vec![c], vec![]).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, SafetyModelError::MalformedExpression { .. })));
        assert!(errs
            .iter()
            .any(|e| matches!(e, SafetyModelError::UnresolvedReference { .. })));
    }

    #[test]
    fn connection_rules_are_enforced() {
        let mut c1 = SamComponent::new("c1");
        c1.failure_ports = vec![
            FailurePort::new("a", Direction::In, q("c1.in1")),
            FailurePort::new("b", Direction::Out, q("c1.out1")),
        ];
        let mut c2 = SamComponent::new("c2");
        c2.failure_ports = vec![FailurePort::new("e", Direction::In, q("c2.in2"))];
        let errs = SafetyAnalysisModel::build(
            vec![c1, c2],
            vec![
                FailureConnection::new("k1", q("c1.b"), q("c1.a")),
                FailureConnection::new("k2", q("c1.a"), q("c2.e")),
                FailureConnection::new("k3", q("c1.b"), q("c2.e")),
                FailureConnection::new("k4", q("c1.b"), q("c2.ghost")),
            ],
        )
        .unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, SafetyModelError::IntraComponentConnection { .. })));
        assert!(errs.iter().any(|e| matches!(
            e,
            SafetyModelError::DirectionViolation {
                end: ConnectionEnd::Source,
                ..
            }
        )));
        assert!(errs
            .iter()
            .any(|e| matches!(e, SafetyModelError::UnknownEndpoint { .. })));
        assert!(errs
            .iter()
            .any(|e| matches!(e, SafetyModelError::MultipleDrivers { .. })));
    }

    #[test]
    fn duplicate_names_and_traces_are_rejected() {
        let mut c = SamComponent::new("c1");
        c.events = vec![BasicEvent::new("w"), BasicEvent::with_probability("w", 2.0)];
        c.failure_ports = vec![
            FailurePort::new("b", Direction::Out, q("c1.out1")),
            FailurePort::new("w", Direction::Out, q("c1.out1")),
        ];
        let errs = SafetyAnalysisModel::build(vec![c], vec![]).unwrap_err();
        assert!(errs.iter().any(|e| matches!(
            e,
            SafetyModelError::DuplicateName {
                kind: SamElementKind::Event,
                ..
            }
        )));
        assert!(errs.iter().any(|e| matches!(
            e,
            SafetyModelError::DuplicateName {
                kind: SamElementKind::FailurePort,
                ..
            }
        )));
        assert!(errs
            .iter()
            .any(|e| matches!(e, SafetyModelError::DuplicateTrace { .. })));
        assert!(errs
            .iter()
            .any(|e| matches!(e, SafetyModelError::ProbabilityOutOfRange { .. })));
    }

    #[test]
    fn eval_matches_boolean_connectives() {
        let assign = |pairs: &[(&str, bool)]| -> BTreeMap<String, bool> {
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
        };
        let band = BooleanExpr::and(vec![BooleanExpr::in_port("a"), BooleanExpr::event("w")]);
        assert_eq!(band.eval(&assign(&[("a", true), ("w", true)])), Ok(true));
        assert_eq!(band.eval(&assign(&[("a", true), ("w", false)])), Ok(false));
        let bor = BooleanExpr::or(vec![BooleanExpr::in_port("a"), BooleanExpr::event("x")]);
        assert_eq!(bor.eval(&assign(&[("a", false), ("x", false)])), Ok(false));
        assert_eq!(bor.eval(&assign(&[("a", false), ("x", true)])), Ok(true));
        let bnot = BooleanExpr::not(BooleanExpr::in_port("a"));
        assert_eq!(bnot.eval(&assign(&[("a", true)])), Ok(false));
        assert_eq!(
            BooleanExpr::event("q").eval(&assign(&[])),
            Err(EvalError::UnassignedReference("q".into()))
        );
    }

    #[test]
    fn display_renders_infix() {
        let e = BooleanExpr::or(vec![
            BooleanExpr::and(vec![BooleanExpr::in_port("a"), BooleanExpr::event("w")]),
            BooleanExpr::not(BooleanExpr::event("x")),
        ]);
        assert_eq!(e.to_string(), "(a & w) | !x");
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = samples::pipeline_safety();
        let b = samples::pipeline_safety();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let mut comps: Vec<SamComponent> = a.components().to_vec();
        comps[0].events[0].probability = Some(0.5);
        let changed =
            SafetyAnalysisModel::build(comps, a.failure_connections().to_vec()).unwrap();
        assert_ne!(a.fingerprint(), changed.fingerprint());
    }

    #[test]
    fn cycle_between_two_components_is_reported() {
        let mut c1 = SamComponent::new("c1");
        c1.failure_ports = vec![
            FailurePort::new("ain", Direction::In, q("c1.p1")),
            FailurePort::new("aout", Direction::Out, q("c1.p2")),
        ];
        c1.definitions
            .insert("aout".into(), Some(BooleanExpr::in_port("ain")));
        let mut c2 = SamComponent::new("c2");
        c2.failure_ports = vec![
            FailurePort::new("bin", Direction::In, q("c2.p1")),
            FailurePort::new("bout", Direction::Out, q("c2.p2")),
        ];
        c2.definitions
            .insert("bout".into(), Some(BooleanExpr::in_port("bin")));
        let sam = SafetyAnalysisModel::build(
            vec![c1, c2],
            vec![
                FailureConnection::new("fwd", q("c1.aout"), q("c2.bin")),
                FailureConnection::new("back", q("c2.bout"), q("c1.ain")),
            ],
        )
        .unwrap();
        let g = sam.propagation_graph();
        assert!(!g.is_acyclic());
        assert!(g.topological_order().is_none());
        let cycles = g.cycles();
        assert_eq!(cycles.len(), 1);
        assert_eq!(
            cycles[0],
            vec![q("c1.ain"), q("c1.aout"), q("c2.bin"), q("c2.bout")]
        );
    }
}
