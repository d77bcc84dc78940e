//! Core engine for keeping component-based system design models and
//! component-fault-tree safety models connected.
//!
//! The crate models three artifacts and the machinery between them:
//!
//! - [`system`]: the system design model, made of components, directed
//!   ports and port-to-port connections.
//! - [`safety`]: the safety analysis model, per-component fault trees
//!   (basic events, failure ports, Boolean failure logic) joined by
//!   failure-propagation connections.
//! - [`binding`]: the reference model linking the two through trace
//!   attributes, plus the consistency checks that report any gap between
//!   them as structured findings.
//! - [`sync`]: the synchronizer, which computes and applies an ordered
//!   change set that makes the safety model structurally consistent with
//!   an evolving system model, with rename handling and a component
//!   repository for reusing stored failure logic.
//! - [`analysis`]: flattens a failure outport into a classical fault
//!   tree and runs minimal-cut-set and top-event-probability analysis.
//!
//! All model values are immutable after construction; every edit returns a
//! new model. The crate is `no_std` (with `alloc`) and has no runtime
//! dependencies; file formats and the command-line front end live in the
//! companion `insider` crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod binding;
mod fingerprint;
mod ident;
pub mod random;
pub mod safety;
pub mod samples;
pub mod sync;
pub mod system;

pub use fingerprint::Fingerprint;
pub use ident::{IdentError, QualifiedName};
