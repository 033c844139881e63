//! Critique orchestration engine for UI design documents.
//!
//! A document is parsed into [`model::DesignDocument`], checked by the
//! [`analyzers`], critiqued by a panel of role experts ([`perspectives`]),
//! synthesized into a prioritized agenda ([`coordinator`]) and fixed through
//! reversible patches ([`remediation`]). [`harness`] scores detection against
//! seeded corpora.

pub mod analyzers;
pub mod color;
pub mod coordinator;
pub mod harness;
pub mod model;
pub mod perspectives;
pub mod remediation;
pub mod role;

pub use color::Color;
pub use model::{
    parse_document, serialize_document, DesignContext, DesignDocument, DesignNode, NodeKind,
};
pub use role::{Role, Severity};
