//! Identifiers and qualified element names.
//!
//! Model elements are addressed by name. Names inside a component are plain
//! identifiers; across the model an element is addressed by the qualified
//! form `component.element`. The dot is reserved as the qualifier
//! separator, so identifiers themselves must not contain one.

use alloc::string::{String, ToString};
use core::fmt;

/// Returns true when `s` is usable as an element name: non-empty, free of
/// the `.` qualifier separator, and free of whitespace and control
/// characters.
pub fn is_valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c == '.' || c.is_whitespace() || c.is_control())
}

/// Error produced when constructing or parsing a [`QualifiedName`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdentError {
    /// A name part is empty or contains a reserved character.
    InvalidIdentifier(String),
    /// The string is not of the form `component.element`.
    Malformed(String),
}

impl fmt::Display for IdentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentError::InvalidIdentifier(name) => {
                write!(f, "invalid identifier {name:?}")
            }
            IdentError::Malformed(s) => {
                write!(f, "{s:?} is not a qualified name of the form component.element")
            }
        }
    }
}

impl core::error::Error for IdentError {}

/// A `component.element` reference, the unique address of a port, failure
/// port or event within a model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualifiedName {
    component: String,
    element: String,
}

impl QualifiedName {
    pub fn new(
        component: impl Into<String>,
        element: impl Into<String>,
    ) -> Result<Self, IdentError> {
        let component = component.into();
        let element = element.into();
        for part in [&component, &element] {
            if !is_valid_identifier(part) {
                return Err(IdentError::InvalidIdentifier(part.clone()));
            }
        }
        Ok(QualifiedName { component, element })
    }

    /// Parses `component.element`. Exactly one dot is allowed.
    pub fn parse(s: &str) -> Result<Self, IdentError> {
        match s.split_once('.') {
            Some((component, element)) => {
                QualifiedName::new(component, element).map_err(|_| IdentError::Malformed(s.to_string()))
            }
            None => Err(IdentError::Malformed(s.to_string())),
        }
    }

    pub fn component(&self) -> &str {
        &self.component
    }

    pub fn element(&self) -> &str {
        &self.element
    }
}

// Display is the wire syntax: `component.element`.
impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.element)
    }
}
