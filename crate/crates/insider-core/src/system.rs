//! The system design model: components, directed ports, connections.
//!
//! A model is built from raw element lists by [`SystemModel::build`], which
//! validates everything at once and reports the complete list of
//! violations rather than the first one. A built model is immutable; the
//! edit operations in [`SystemEdit`] return a fresh, revalidated model.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::fingerprint::{Fingerprint, Hasher};
use crate::ident::{is_valid_identifier, QualifiedName};

/// Direction of a port, seen from its owning component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::In => Direction::Out,
            Direction::Out => Direction::In,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "in" => Some(Direction::In),
            "out" => Some(Direction::Out),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named component of the system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Component {
    pub name: String,
}

impl Component {
    pub fn new(name: impl Into<String>) -> Self {
        Component { name: name.into() }
    }
}

/// A directed port allocated to one component. `(owner, name)` is unique
/// across the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub owner: String,
    pub direction: Direction,
}

impl Port {
    pub fn new(owner: impl Into<String>, name: impl Into<String>, direction: Direction) -> Self {
        Port {
            name: name.into(),
            owner: owner.into(),
            direction,
        }
    }

    /// The `owner.name` address of this port.
    ///
    /// Panics if the port never went through model validation and carries
    /// names that cannot form a qualified reference.
    pub fn qualified(&self) -> QualifiedName {
        QualifiedName::new(&self.owner, &self.name).expect("port names validated at model build")
    }
}

/// A directed communication link from an out-port to an in-port of a
/// different component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    pub name: String,
    pub source: QualifiedName,
    pub target: QualifiedName,
}

impl Connection {
    pub fn new(name: impl Into<String>, source: QualifiedName, target: QualifiedName) -> Self {
        Connection {
            name: name.into(),
            source,
            target,
        }
    }
}

/// What kind of element an error is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Component,
    Port,
    Connection,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Component => "component",
            ElementKind::Port => "port",
            ElementKind::Connection => "connection",
        })
    }
}

/// Which end of a connection an error is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionEnd {
    Source,
    Target,
}

impl fmt::Display for ConnectionEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectionEnd::Source => "source",
            ConnectionEnd::Target => "target",
        })
    }
}

/// A single validation violation found while building a [`SystemModel`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemModelError {
    /// An element name is empty or contains a reserved character.
    InvalidIdentifier { kind: ElementKind, name: String },
    /// Two elements of the same kind share a name.
    DuplicateName { kind: ElementKind, name: String },
    /// A port's owner does not name a component.
    UnknownOwner { port: String, owner: String },
    /// A connection endpoint does not resolve to a port.
    UnknownEndpoint {
        connection: String,
        end: ConnectionEnd,
        port: String,
    },
    /// A connection leaves an in-port or enters an out-port.
    DirectionViolation {
        connection: String,
        end: ConnectionEnd,
        port: String,
    },
    /// A connection joins two ports of the same component.
    SelfConnection { connection: String, component: String },
    /// More than one connection targets the same in-port.
    MultipleDrivers {
        port: String,
        connections: Vec<String>,
    },
}

impl fmt::Display for SystemModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemModelError::InvalidIdentifier { kind, name } => {
                write!(f, "invalid {kind} name {name:?}")
            }
            SystemModelError::DuplicateName { kind, name } => {
                write!(f, "duplicate {kind} name {name:?}")
            }
            SystemModelError::UnknownOwner { port, owner } => {
                write!(f, "port {port:?} is owned by unknown component {owner:?}")
            }
            SystemModelError::UnknownEndpoint {
                connection,
                end,
                port,
            } => write!(
                f,
                "connection {connection:?} {end} references unknown port {port:?}"
            ),
            SystemModelError::DirectionViolation {
                connection,
                end,
                port,
            } => {
                let expected = match end {
                    ConnectionEnd::Source => "an out-port",
                    ConnectionEnd::Target => "an in-port",
                };
                write!(
                    f,
                    "connection {connection:?} {end} {port:?} must be {expected}"
                )
            }
            SystemModelError::SelfConnection {
                connection,
                component,
            } => write!(
                f,
                "connection {connection:?} joins two ports of component {component:?}"
            ),
            SystemModelError::MultipleDrivers { port, connections } => write!(
                f,
                "in-port {port:?} is targeted by more than one connection: {connections:?}"
            ),
        }
    }
}

impl core::error::Error for SystemModelError {}

/// Lookup failure for `port_owner` and friends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LookupError {
    UnknownPort(QualifiedName),
}

impl fmt::Display for LookupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LookupError::UnknownPort(q) => write!(f, "unknown port {q}"),
        }
    }
}

impl core::error::Error for LookupError {}

/// The validated system design model.
///
/// Element lists are kept in canonical order (components and connections by
/// name, ports by owner then name), so iteration, fingerprints and any
/// serialization derived from them are deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemModel {
    components: Vec<Component>,
    ports: Vec<Port>,
    connections: Vec<Connection>,
}

impl SystemModel {
    /// Validates the raw element lists and assembles a model.
    ///
    /// Validation is total: the error case carries every violation found,
    /// not just the first.
    pub fn build(
        components: Vec<Component>,
        ports: Vec<Port>,
        connections: Vec<Connection>,
    ) -> Result<SystemModel, Vec<SystemModelError>> {
        let mut errors = Vec::new();

        for c in &components {
            if !is_valid_identifier(&c.name) {
                errors.push(SystemModelError::InvalidIdentifier {
                    kind: ElementKind::Component,
                    name: c.name.clone(),
                });
            }
        }
        for (i, c) in components.iter().enumerate() {
            if components[..i].iter().any(|p| p.name == c.name) {
                errors.push(SystemModelError::DuplicateName {
                    kind: ElementKind::Component,
                    name: c.name.clone(),
                });
            }
        }

        for p in &ports {
            if !is_valid_identifier(&p.name) {
                errors.push(SystemModelError::InvalidIdentifier {
                    kind: ElementKind::Port,
                    name: p.name.clone(),
                });
            }
            if !components.iter().any(|c| c.name == p.owner) {
                errors.push(SystemModelError::UnknownOwner {
                    port: format!("{}.{}", p.owner, p.name),
                    owner: p.owner.clone(),
                });
            }
        }
        for (i, p) in ports.iter().enumerate() {
            if ports[..i]
                .iter()
                .any(|q| q.name == p.name && q.owner == p.owner)
            {
                errors.push(SystemModelError::DuplicateName {
                    kind: ElementKind::Port,
                    name: format!("{}.{}", p.owner, p.name),
                });
            }
        }

        let find_port = |q: &QualifiedName| {
            ports
                .iter()
                .find(|p| p.owner == q.component() && p.name == q.element())
        };
        for (i, con) in connections.iter().enumerate() {
            if !is_valid_identifier(&con.name) {
                errors.push(SystemModelError::InvalidIdentifier {
                    kind: ElementKind::Connection,
                    name: con.name.clone(),
                });
            }
            if connections[..i].iter().any(|c| c.name == con.name) {
                errors.push(SystemModelError::DuplicateName {
                    kind: ElementKind::Connection,
                    name: con.name.clone(),
                });
            }
            let mut endpoints_ok = true;
            for (end, q, want) in [
                (ConnectionEnd::Source, &con.source, Direction::Out),
                (ConnectionEnd::Target, &con.target, Direction::In),
            ] {
                match find_port(q) {
                    None => {
                        endpoints_ok = false;
                        errors.push(SystemModelError::UnknownEndpoint {
                            connection: con.name.clone(),
                            end,
                            port: q.to_string(),
                        });
                    }
                    Some(p) if p.direction != want => {
                        errors.push(SystemModelError::DirectionViolation {
                            connection: con.name.clone(),
                            end,
                            port: q.to_string(),
                        });
                    }
                    Some(_) => {}
                }
            }
            if endpoints_ok && con.source.component() == con.target.component() {
                errors.push(SystemModelError::SelfConnection {
                    connection: con.name.clone(),
                    component: con.source.component().to_string(),
                });
            }
        }

        // One driver per in-port.
        let mut targets: Vec<(&QualifiedName, Vec<&str>)> = Vec::new();
        for con in &connections {
            match targets.iter_mut().find(|(q, _)| *q == &con.target) {
                Some((_, names)) => names.push(&con.name),
                None => targets.push((&con.target, alloc::vec![con.name.as_str()])),
            }
        }
        for (q, names) in targets {
            if names.len() > 1 {
                errors.push(SystemModelError::MultipleDrivers {
                    port: q.to_string(),
                    connections: names.iter().map(|n| n.to_string()).collect(),
                });
            }
        }

        if !errors.is_empty() {
            return Err(errors);
        }

        let mut model = SystemModel {
            components,
            ports,
            connections,
        };
        model.components.sort_by(|a, b| a.name.cmp(&b.name));
        model
            .ports
            .sort_by(|a, b| (&a.owner, &a.name).cmp(&(&b.owner, &b.name)));
        model.connections.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(model)
    }

    pub fn empty() -> SystemModel {
        SystemModel {
            components: Vec::new(),
            ports: Vec::new(),
            connections: Vec::new(),
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn port(&self, q: &QualifiedName) -> Option<&Port> {
        self.ports
            .iter()
            .find(|p| p.owner == q.component() && p.name == q.element())
    }

    pub fn connection(&self, name: &str) -> Option<&Connection> {
        self.connections.iter().find(|c| c.name == name)
    }

    /// Ports allocated to `component`, in canonical order.
    pub fn ports_of<'a>(&'a self, component: &'a str) -> impl Iterator<Item = &'a Port> {
        self.ports.iter().filter(move |p| p.owner == component)
    }

    /// The port allocation function: the component owning `port`.
    pub fn port_owner(&self, port: &QualifiedName) -> Result<&Component, LookupError> {
        let p = self
            .port(port)
            .ok_or_else(|| LookupError::UnknownPort(port.clone()))?;
        Ok(self
            .component(&p.owner)
            .expect("validated model: every port owner exists"))
    }

    /// The single connection driving `in_port`, if any.
    pub fn incoming_connection(&self, in_port: &QualifiedName) -> Option<&Connection> {
        self.connections.iter().find(|c| &c.target == in_port)
    }

    /// Content identity over the canonical element order.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut h = Hasher::new();
        h.tag(b'S');
        for c in &self.components {
            h.tag(1);
            h.write_str(&c.name);
        }
        for p in &self.ports {
            h.tag(2);
            h.write_str(&p.owner);
            h.write_str(&p.name);
            h.tag(match p.direction {
                Direction::In => 0,
                Direction::Out => 1,
            });
        }
        for c in &self.connections {
            h.tag(3);
            h.write_str(&c.name);
            h.write_str(&c.source.to_string());
            h.write_str(&c.target.to_string());
        }
        h.finish()
    }

    /// Applies one edit, returning a new validated model.
    pub fn apply_edit(&self, edit: &SystemEdit) -> Result<SystemModel, EditError> {
        let mut components = self.components.clone();
        let mut ports = self.ports.clone();
        let mut connections = self.connections.clone();

        match edit {
            SystemEdit::AddComponent { name } => {
                if self.component(name).is_some() {
                    return Err(EditError::NameCollision {
                        kind: ElementKind::Component,
                        name: name.clone(),
                    });
                }
                components.push(Component::new(name.clone()));
            }
            SystemEdit::RemoveComponent { name } => {
                if self.component(name).is_none() {
                    return Err(EditError::UnknownTarget {
                        kind: ElementKind::Component,
                        name: name.clone(),
                    });
                }
                components.retain(|c| &c.name != name);
                ports.retain(|p| &p.owner != name);
                connections.retain(|c| {
                    c.source.component() != name && c.target.component() != name
                });
            }
            SystemEdit::AddPort { port } => {
                if self.component(&port.owner).is_none() {
                    return Err(EditError::UnknownTarget {
                        kind: ElementKind::Component,
                        name: port.owner.clone(),
                    });
                }
                if ports
                    .iter()
                    .any(|p| p.owner == port.owner && p.name == port.name)
                {
                    return Err(EditError::NameCollision {
                        kind: ElementKind::Port,
                        name: format!("{}.{}", port.owner, port.name),
                    });
                }
                ports.push(port.clone());
            }
            SystemEdit::RemovePort { port } => {
                if self.port(port).is_none() {
                    return Err(EditError::UnknownTarget {
                        kind: ElementKind::Port,
                        name: port.to_string(),
                    });
                }
                ports.retain(|p| !(p.owner == port.component() && p.name == port.element()));
                connections.retain(|c| &c.source != port && &c.target != port);
            }
            SystemEdit::AddConnection { connection } => {
                if self.connection(&connection.name).is_some() {
                    return Err(EditError::NameCollision {
                        kind: ElementKind::Connection,
                        name: connection.name.clone(),
                    });
                }
                for q in [&connection.source, &connection.target] {
                    if self.port(q).is_none() {
                        return Err(EditError::UnknownTarget {
                            kind: ElementKind::Port,
                            name: q.to_string(),
                        });
                    }
                }
                connections.push(connection.clone());
            }
            SystemEdit::RemoveConnection { name } => {
                if self.connection(name).is_none() {
                    return Err(EditError::UnknownTarget {
                        kind: ElementKind::Connection,
                        name: name.clone(),
                    });
                }
                connections.retain(|c| &c.name != name);
            }
            SystemEdit::Rename(rename) => {
                apply_rename(rename, self, &mut components, &mut ports, &mut connections)?;
            }
        }

        SystemModel::build(components, ports, connections)
            .map_err(|errors| EditError::WouldViolateInvariant { errors })
    }
}

/// Renames preserve every reference to the renamed element.
fn apply_rename(
    rename: &RenameEdit,
    current: &SystemModel,
    components: &mut [Component],
    ports: &mut Vec<Port>,
    connections: &mut [Connection],
) -> Result<(), EditError> {
    let invalid = |kind: ElementKind, name: &str| EditError::WouldViolateInvariant {
        errors: alloc::vec![SystemModelError::InvalidIdentifier {
            kind,
            name: name.into(),
        }],
    };
    match rename {
        RenameEdit::Component { old, new } => {
            if current.component(old).is_none() {
                return Err(EditError::UnknownTarget {
                    kind: ElementKind::Component,
                    name: old.clone(),
                });
            }
            if !is_valid_identifier(new) {
                return Err(invalid(ElementKind::Component, new));
            }
            if old != new && current.component(new).is_some() {
                return Err(EditError::NameCollision {
                    kind: ElementKind::Component,
                    name: new.clone(),
                });
            }
            for c in components.iter_mut() {
                if &c.name == old {
                    c.name = new.clone();
                }
            }
            for p in ports.iter_mut() {
                if &p.owner == old {
                    p.owner = new.clone();
                }
            }
            for c in connections.iter_mut() {
                if c.source.component() == old {
                    c.source = QualifiedName::new(new, c.source.element())
                        .expect("both halves validated");
                }
                if c.target.component() == old {
                    c.target = QualifiedName::new(new, c.target.element())
                        .expect("both halves validated");
                }
            }
        }
        RenameEdit::Port { old, new_name } => {
            if current.port(old).is_none() {
                return Err(EditError::UnknownTarget {
                    kind: ElementKind::Port,
                    name: old.to_string(),
                });
            }
            if !is_valid_identifier(new_name) {
                return Err(invalid(ElementKind::Port, new_name));
            }
            let renamed = QualifiedName::new(old.component(), new_name.as_str())
                .expect("both halves validated");
            if &renamed != old && current.port(&renamed).is_some() {
                return Err(EditError::NameCollision {
                    kind: ElementKind::Port,
                    name: renamed.to_string(),
                });
            }
            for p in ports.iter_mut() {
                if p.owner == old.component() && p.name == old.element() {
                    p.name = new_name.clone();
                }
            }
            for c in connections.iter_mut() {
                if &c.source == old {
                    c.source = renamed.clone();
                }
                if &c.target == old {
                    c.target = renamed.clone();
                }
            }
        }
        RenameEdit::Connection { old, new } => {
            if current.connection(old).is_none() {
                return Err(EditError::UnknownTarget {
                    kind: ElementKind::Connection,
                    name: old.clone(),
                });
            }
            if !is_valid_identifier(new) {
                return Err(invalid(ElementKind::Connection, new));
            }
            if old != new && current.connection(new).is_some() {
                return Err(EditError::NameCollision {
                    kind: ElementKind::Connection,
                    name: new.clone(),
                });
            }
            for c in connections.iter_mut() {
                if &c.name == old {
                    c.name = new.clone();
                }
            }
        }
    }
    Ok(())
}

/// One structural edit of a system model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemEdit {
    AddComponent { name: String },
    /// Removes the component together with its ports and their connections.
    RemoveComponent { name: String },
    AddPort { port: Port },
    /// Removes the port together with any connection touching it.
    RemovePort { port: QualifiedName },
    AddConnection { connection: Connection },
    RemoveConnection { name: String },
    Rename(RenameEdit),
}

/// Rename of a component, port or connection. All references follow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RenameEdit {
    Component { old: String, new: String },
    Port { old: QualifiedName, new_name: String },
    Connection { old: String, new: String },
}

/// Why an edit was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditError {
    UnknownTarget { kind: ElementKind, name: String },
    NameCollision { kind: ElementKind, name: String },
    WouldViolateInvariant { errors: Vec<SystemModelError> },
}

impl fmt::Display for EditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditError::UnknownTarget { kind, name } => {
                write!(f, "edit targets unknown {kind} {name:?}")
            }
            EditError::NameCollision { kind, name } => {
                write!(f, "edit collides with existing {kind} {name:?}")
            }
            EditError::WouldViolateInvariant { errors } => {
                write!(f, "edit would leave the model invalid: ")?;
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

impl core::error::Error for EditError {}
