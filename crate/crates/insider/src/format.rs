//! The on-disk JSON formats: models, change sets, findings, rename hints
//! and probability maps.
//!
//! Every artifact carries a top-level `"format": "insider/1"` marker.
//! Serialization is canonical: models are stored in their sorted order,
//! maps by key, with two-space pretty printing and a trailing newline, so
//! saving the same model twice yields byte-identical files. Failure logic
//! is stored as prefix terms, for example
//! `{"op":"and","args":[{"in":"a"},{"event":"w"}]}`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use insider_core::binding::{Finding, FindingKind};
use insider_core::safety::{
    BasicEvent, BooleanExpr, FailureConnection, FailurePort, SafetyAnalysisModel, SamComponent,
};
use insider_core::sync::{ChangeOp, ChangeSet, RenameHints};
use insider_core::system::{Component, Connection, Direction, Port, SystemModel};
use insider_core::{Fingerprint, QualifiedName};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Format marker expected in every artifact file.
pub const FORMAT: &str = "insider/1";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: {detail}", path.display())]
    Schema { path: PathBuf, detail: String },
    #[error("{}: invalid model: {}", path.display(), errors.join("; "))]
    Invalid { path: PathBuf, errors: Vec<String> },
}

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct SaveError {
    path: PathBuf,
    #[source]
    source: std::io::Error,
}

impl SaveError {
    pub(crate) fn new(path: PathBuf, source: std::io::Error) -> SaveError {
        SaveError { path, source }
    }
}

fn read_text(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.into(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), SaveError> {
    fs::write(path, text).map_err(|source| SaveError {
        path: path.into(),
        source,
    })
}

fn parse_json<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T, LoadError> {
    serde_json::from_str(text).map_err(|e| LoadError::Parse {
        path: origin.into(),
        message: e.to_string(),
    })
}

fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("artifacts serialize");
    out.push('\n');
    out
}

fn expect_format(found: &str, origin: &Path) -> Result<(), LoadError> {
    if found == FORMAT {
        Ok(())
    } else {
        Err(LoadError::Schema {
            path: origin.into(),
            detail: format!("unsupported format {found:?}, expected {FORMAT:?}"),
        })
    }
}

fn schema_err<T>(origin: &Path, detail: String) -> Result<T, LoadError> {
    Err(LoadError::Schema {
        path: origin.into(),
        detail,
    })
}

fn parse_qualified(s: &str, what: &str, origin: &Path) -> Result<QualifiedName, LoadError> {
    match QualifiedName::parse(s) {
        Ok(q) => Ok(q),
        Err(_) => schema_err(origin, format!("{what} {s:?} is not a component.element name")),
    }
}

fn parse_direction(s: &str, origin: &Path) -> Result<Direction, LoadError> {
    match Direction::parse(s) {
        Some(d) => Ok(d),
        None => schema_err(origin, format!("direction {s:?} must be \"in\" or \"out\"")),
    }
}

// ---------------------------------------------------------------------
// System model

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    format: String,
    components: Vec<ComponentDto>,
    ports: Vec<PortDto>,
    connections: Vec<ConnectionDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDto {
    name: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PortDto {
    name: String,
    owner: String,
    direction: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectionDto {
    name: String,
    source: String,
    target: String,
}

pub fn system_model_from_str(text: &str, origin: &Path) -> Result<SystemModel, LoadError> {
    let file: SystemFile = parse_json(text, origin)?;
    expect_format(&file.format, origin)?;
    let components = file
        .components
        .into_iter()
        .map(|c| Component::new(c.name))
        .collect();
    let mut ports = Vec::new();
    for p in &file.ports {
        ports.push(Port::new(
            &p.owner,
            &p.name,
            parse_direction(&p.direction, origin)?,
        ));
    }
    let mut connections = Vec::new();
    for c in &file.connections {
        connections.push(Connection::new(
            &c.name,
            parse_qualified(&c.source, "connection source", origin)?,
            parse_qualified(&c.target, "connection target", origin)?,
        ));
    }
    SystemModel::build(components, ports, connections).map_err(|errors| LoadError::Invalid {
        path: origin.into(),
        errors: errors.iter().map(|e| e.to_string()).collect(),
    })
}

pub fn system_model_to_string(sm: &SystemModel) -> String {
    to_canonical_json(&SystemFile {
        format: FORMAT.into(),
        components: sm
            .components()
            .iter()
            .map(|c| ComponentDto {
                name: c.name.clone(),
            })
            .collect(),
        ports: sm
            .ports()
            .iter()
            .map(|p| PortDto {
                name: p.name.clone(),
                owner: p.owner.clone(),
                direction: p.direction.as_str().into(),
            })
            .collect(),
        connections: sm.connections().iter().map(connection_to_dto).collect(),
    })
}

fn connection_to_dto(c: &Connection) -> ConnectionDto {
    ConnectionDto {
        name: c.name.clone(),
        source: c.source.to_string(),
        target: c.target.to_string(),
    }
}

pub fn load_system_model(path: &Path) -> Result<SystemModel, LoadError> {
    system_model_from_str(&read_text(path)?, path)
}

pub fn save_system_model(sm: &SystemModel, path: &Path) -> Result<(), SaveError> {
    write_text(path, &system_model_to_string(sm))
}

// ---------------------------------------------------------------------
// Safety model

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SafetyFile {
    format: String,
    components: Vec<SamComponentDto>,
    failure_connections: Vec<ConnectionDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamComponentDto {
    name: String,
    events: Vec<EventDto>,
    failure_ports: Vec<FailurePortDto>,
    definitions: BTreeMap<String, Option<ExprDto>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventDto {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FailurePortDto {
    name: String,
    direction: String,
    traces_to: String,
    failure_mode: String,
}

/// Failure logic as prefix terms. The variants are tried in order, so a
/// term is exactly one of `{"event": name}`, `{"in": name}`,
/// `{"op": "not", "arg": term}` or `{"op": "and"|"or", "args": [terms]}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExprDto {
    Event {
        event: String,
    },
    In {
        #[serde(rename = "in")]
        input: String,
    },
    Unary {
        op: String,
        arg: Box<ExprDto>,
    },
    Nary {
        op: String,
        args: Vec<ExprDto>,
    },
}

fn expr_to_dto(e: &BooleanExpr) -> ExprDto {
    match e {
        BooleanExpr::Event(n) => ExprDto::Event { event: n.clone() },
        BooleanExpr::InPort(n) => ExprDto::In { input: n.clone() },
        BooleanExpr::And(args) => ExprDto::Nary {
            op: "and".into(),
            args: args.iter().map(expr_to_dto).collect(),
        },
        BooleanExpr::Or(args) => ExprDto::Nary {
            op: "or".into(),
            args: args.iter().map(expr_to_dto).collect(),
        },
        BooleanExpr::Not(a) => ExprDto::Unary {
            op: "not".into(),
            arg: Box::new(expr_to_dto(a)),
        },
    }
}

fn expr_from_dto(d: &ExprDto, origin: &Path) -> Result<BooleanExpr, LoadError> {
    match d {
        ExprDto::Event { event } => Ok(BooleanExpr::event(event)),
        ExprDto::In { input } => Ok(BooleanExpr::in_port(input)),
        ExprDto::Unary { op, arg } => {
            if op != "not" {
                return schema_err(origin, format!("unknown unary operator {op:?}"));
            }
            Ok(BooleanExpr::not(expr_from_dto(arg, origin)?))
        }
        ExprDto::Nary { op, args } => {
            let parsed = args
                .iter()
                .map(|a| expr_from_dto(a, origin))
                .collect::<Result<Vec<_>, _>>()?;
            match op.as_str() {
                "and" => Ok(BooleanExpr::and(parsed)),
                "or" => Ok(BooleanExpr::or(parsed)),
                other => schema_err(origin, format!("unknown operator {other:?}")),
            }
        }
    }
}

fn sam_component_to_dto(c: &SamComponent) -> SamComponentDto {
    SamComponentDto {
        name: c.name.clone(),
        events: c
            .events
            .iter()
            .map(|e| EventDto {
                name: e.name.clone(),
                probability: e.probability,
            })
            .collect(),
        failure_ports: c
            .failure_ports
            .iter()
            .map(|p| FailurePortDto {
                name: p.name.clone(),
                direction: p.direction.as_str().into(),
                traces_to: p.traces_to.to_string(),
                failure_mode: p.failure_mode.clone(),
            })
            .collect(),
        definitions: c
            .definitions
            .iter()
            .map(|(out, def)| (out.clone(), def.as_ref().map(expr_to_dto)))
            .collect(),
    }
}

fn sam_component_from_dto(dto: &SamComponentDto, origin: &Path) -> Result<SamComponent, LoadError> {
    let mut c = SamComponent::new(&dto.name);
    for e in &dto.events {
        c.events.push(BasicEvent {
            name: e.name.clone(),
            probability: e.probability,
        });
    }
    for p in &dto.failure_ports {
        c.failure_ports.push(
            FailurePort::new(
                &p.name,
                parse_direction(&p.direction, origin)?,
                parse_qualified(&p.traces_to, "traces_to", origin)?,
            )
            .with_mode(&p.failure_mode),
        );
    }
    for (out, def) in &dto.definitions {
        let expr = match def {
            Some(d) => Some(expr_from_dto(d, origin)?),
            None => None,
        };
        c.definitions.insert(out.clone(), expr);
    }
    Ok(c)
}

pub fn safety_model_from_str(text: &str, origin: &Path) -> Result<SafetyAnalysisModel, LoadError> {
    let file: SafetyFile = parse_json(text, origin)?;
    expect_format(&file.format, origin)?;
    let mut components = Vec::new();
    for c in &file.components {
        components.push(sam_component_from_dto(c, origin)?);
    }
    let mut connections = Vec::new();
    for c in &file.failure_connections {
        connections.push(FailureConnection::new(
            &c.name,
            parse_qualified(&c.source, "failure connection source", origin)?,
            parse_qualified(&c.target, "failure connection target", origin)?,
        ));
    }
    SafetyAnalysisModel::build(components, connections).map_err(|errors| LoadError::Invalid {
        path: origin.into(),
        errors: errors.iter().map(|e| e.to_string()).collect(),
    })
}

pub fn safety_model_to_string(sam: &SafetyAnalysisModel) -> String {
    to_canonical_json(&SafetyFile {
        format: FORMAT.into(),
        components: sam.components().iter().map(sam_component_to_dto).collect(),
        failure_connections: sam
            .failure_connections()
            .iter()
            .map(|c| ConnectionDto {
                name: c.name.clone(),
                source: c.source.to_string(),
                target: c.target.to_string(),
            })
            .collect(),
    })
}

pub fn load_safety_model(path: &Path) -> Result<SafetyAnalysisModel, LoadError> {
    safety_model_from_str(&read_text(path)?, path)
}

pub fn save_safety_model(sam: &SafetyAnalysisModel, path: &Path) -> Result<(), SaveError> {
    write_text(path, &safety_model_to_string(sam))
}

// ---------------------------------------------------------------------
// Stand-alone safety components (repository entries)

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentFile {
    format: String,
    component: SamComponentDto,
}

pub fn component_from_str(text: &str, origin: &Path) -> Result<SamComponent, LoadError> {
    let file: ComponentFile = parse_json(text, origin)?;
    expect_format(&file.format, origin)?;
    sam_component_from_dto(&file.component, origin)
}

pub fn component_to_string(component: &SamComponent) -> String {
    to_canonical_json(&ComponentFile {
        format: FORMAT.into(),
        component: sam_component_to_dto(component),
    })
}

// ---------------------------------------------------------------------
// Change sets

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChangeSetFile {
    format: String,
    sm_ref: String,
    sam_ref: String,
    ops: Vec<OpDto>,
    notes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum OpDto {
    RenamePortTrace { old: String, new: String },
    RenameComponent { old: String, new: String },
    CreateComponent { component: SamComponentDto },
    CreateFailurePort { component: String, port: FailurePortDto },
    CreateFailureConnection { connection: ConnectionDto },
    RemoveFailureConnection { name: String },
    RemoveFailurePort { port: String },
    RemoveComponent { name: String },
}

fn op_to_dto(op: &ChangeOp) -> OpDto {
    match op {
        ChangeOp::RenamePortTrace { old, new } => OpDto::RenamePortTrace {
            old: old.to_string(),
            new: new.to_string(),
        },
        ChangeOp::RenameComponent { old, new } => OpDto::RenameComponent {
            old: old.clone(),
            new: new.clone(),
        },
        ChangeOp::CreateSamComponent { component } => OpDto::CreateComponent {
            component: sam_component_to_dto(component),
        },
        ChangeOp::CreateFailurePort { component, port } => OpDto::CreateFailurePort {
            component: component.clone(),
            port: FailurePortDto {
                name: port.name.clone(),
                direction: port.direction.as_str().into(),
                traces_to: port.traces_to.to_string(),
                failure_mode: port.failure_mode.clone(),
            },
        },
        ChangeOp::CreateFailureConnection { connection } => OpDto::CreateFailureConnection {
            connection: ConnectionDto {
                name: connection.name.clone(),
                source: connection.source.to_string(),
                target: connection.target.to_string(),
            },
        },
        ChangeOp::RemoveFailureConnection { name } => OpDto::RemoveFailureConnection {
            name: name.clone(),
        },
        ChangeOp::RemoveFailurePort { port } => OpDto::RemoveFailurePort {
            port: port.to_string(),
        },
        ChangeOp::RemoveSamComponent { name } => OpDto::RemoveComponent { name: name.clone() },
    }
}

fn op_from_dto(dto: &OpDto, origin: &Path) -> Result<ChangeOp, LoadError> {
    Ok(match dto {
        OpDto::RenamePortTrace { old, new } => ChangeOp::RenamePortTrace {
            old: parse_qualified(old, "renamed port", origin)?,
            new: parse_qualified(new, "renamed port", origin)?,
        },
        OpDto::RenameComponent { old, new } => ChangeOp::RenameComponent {
            old: old.clone(),
            new: new.clone(),
        },
        OpDto::CreateComponent { component } => ChangeOp::CreateSamComponent {
            component: sam_component_from_dto(component, origin)?,
        },
        OpDto::CreateFailurePort { component, port } => ChangeOp::CreateFailurePort {
            component: component.clone(),
            port: FailurePort::new(
                &port.name,
                parse_direction(&port.direction, origin)?,
                parse_qualified(&port.traces_to, "traces_to", origin)?,
            )
            .with_mode(&port.failure_mode),
        },
        OpDto::CreateFailureConnection { connection } => ChangeOp::CreateFailureConnection {
            connection: FailureConnection::new(
                &connection.name,
                parse_qualified(&connection.source, "failure connection source", origin)?,
                parse_qualified(&connection.target, "failure connection target", origin)?,
            ),
        },
        OpDto::RemoveFailureConnection { name } => ChangeOp::RemoveFailureConnection {
            name: name.clone(),
        },
        OpDto::RemoveFailurePort { port } => ChangeOp::RemoveFailurePort {
            port: parse_qualified(port, "removed port", origin)?,
        },
        OpDto::RemoveComponent { name } => ChangeOp::RemoveSamComponent { name: name.clone() },
    })
}

fn parse_fingerprint(s: &str, what: &str, origin: &Path) -> Result<Fingerprint, LoadError> {
    match Fingerprint::parse(s) {
        Some(f) => Ok(f),
        None => schema_err(origin, format!("{what} {s:?} is not a 16-digit hex fingerprint")),
    }
}

pub fn change_set_from_str(text: &str, origin: &Path) -> Result<ChangeSet, LoadError> {
    let file: ChangeSetFile = parse_json(text, origin)?;
    expect_format(&file.format, origin)?;
    let mut ops = Vec::new();
    for op in &file.ops {
        ops.push(op_from_dto(op, origin)?);
    }
    Ok(ChangeSet::new(
        parse_fingerprint(&file.sm_ref, "sm_ref", origin)?,
        parse_fingerprint(&file.sam_ref, "sam_ref", origin)?,
        ops,
        file.notes,
    ))
}

pub fn change_set_to_string(cs: &ChangeSet) -> String {
    to_canonical_json(&ChangeSetFile {
        format: FORMAT.into(),
        sm_ref: cs.sm_ref().to_string(),
        sam_ref: cs.sam_ref().to_string(),
        ops: cs.ops().iter().map(op_to_dto).collect(),
        notes: cs.notes().to_vec(),
    })
}

pub fn load_change_set(path: &Path) -> Result<ChangeSet, LoadError> {
    change_set_from_str(&read_text(path)?, path)
}

pub fn save_change_set(cs: &ChangeSet, path: &Path) -> Result<(), SaveError> {
    write_text(path, &change_set_to_string(cs))
}

// ---------------------------------------------------------------------
// Findings

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FindingsFile {
    format: String,
    findings: Vec<FindingDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FindingDto {
    kind: String,
    subject: String,
    detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    related: Vec<String>,
}

pub fn findings_from_str(text: &str, origin: &Path) -> Result<Vec<Finding>, LoadError> {
    let file: FindingsFile = parse_json(text, origin)?;
    expect_format(&file.format, origin)?;
    let mut out = Vec::new();
    for f in file.findings {
        let Some(kind) = FindingKind::parse(&f.kind) else {
            return schema_err(origin, format!("unknown finding kind {:?}", f.kind));
        };
        out.push(Finding {
            kind,
            subject: f.subject,
            detail: f.detail,
            related: f.related,
        });
    }
    Ok(out)
}

pub fn findings_to_string(findings: &[Finding]) -> String {
    to_canonical_json(&FindingsFile {
        format: FORMAT.into(),
        findings: findings
            .iter()
            .map(|f| FindingDto {
                kind: f.kind.as_str().into(),
                subject: f.subject.clone(),
                detail: f.detail.clone(),
                related: f.related.clone(),
            })
            .collect(),
    })
}

pub fn load_findings(path: &Path) -> Result<Vec<Finding>, LoadError> {
    findings_from_str(&read_text(path)?, path)
}

pub fn save_findings(findings: &[Finding], path: &Path) -> Result<(), SaveError> {
    write_text(path, &findings_to_string(findings))
}

// ---------------------------------------------------------------------
// Rename hints and probabilities

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HintsFile {
    format: String,
    #[serde(default)]
    components: BTreeMap<String, String>,
    #[serde(default)]
    ports: BTreeMap<String, String>,
}

pub fn rename_hints_from_str(text: &str, origin: &Path) -> Result<RenameHints, LoadError> {
    let file: HintsFile = parse_json(text, origin)?;
    expect_format(&file.format, origin)?;
    let mut ports = BTreeMap::new();
    for (old, new) in &file.ports {
        ports.insert(
            parse_qualified(old, "renamed port", origin)?,
            parse_qualified(new, "renamed port", origin)?,
        );
    }
    Ok(RenameHints {
        components: file.components,
        ports,
    })
}

pub fn load_rename_hints(path: &Path) -> Result<RenameHints, LoadError> {
    rename_hints_from_str(&read_text(path)?, path)
}

/// Probability files are a bare map from qualified leaf name to number.
pub fn probabilities_from_str(
    text: &str,
    origin: &Path,
) -> Result<BTreeMap<QualifiedName, f64>, LoadError> {
    let raw: BTreeMap<String, f64> = parse_json(text, origin)?;
    let mut out = BTreeMap::new();
    for (name, p) in raw {
        out.insert(parse_qualified(&name, "leaf", origin)?, p);
    }
    Ok(out)
}

pub fn load_probabilities(path: &Path) -> Result<BTreeMap<QualifiedName, f64>, LoadError> {
    probabilities_from_str(&read_text(path)?, path)
}
