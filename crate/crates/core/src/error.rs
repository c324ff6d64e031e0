use std::fmt;

use crate::expr::{NodeKind, Shape};

/// Errors surfaced to users of the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("length error: expected {expected} values, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("index error: {index} out of range for extent {extent}")]
    Index { index: usize, extent: usize },

    #[error("conformance error in {kind} at {path}: {detail}")]
    Conformance {
        kind: NodeKind,
        path: NodePath,
        detail: String,
    },

    #[error("matrix is singular: zero pivot in column {column}")]
    Singular { column: usize },
}

impl Error {
    pub(crate) fn conformance(kind: NodeKind, detail: impl Into<String>) -> Self {
        Error::Conformance {
            kind,
            path: NodePath::root(),
            detail: detail.into(),
        }
    }

    pub(crate) fn shapes(kind: NodeKind, lhs: Shape, rhs: Shape) -> Self {
        Self::conformance(kind, format!("non-conforming shapes {lhs} and {rhs}"))
    }

    /// Prefix the path of a conformance error with the child index it was found under.
    pub(crate) fn under(self, child: usize) -> Self {
        match self {
            Error::Conformance { kind, path, detail } => Error::Conformance {
                kind,
                path: path.prepend(child),
                detail,
            },
            other => other,
        }
    }
}

/// Location of a node inside an expression tree, as child indices from the root.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    fn prepend(mut self, child: usize) -> Self {
        self.0.insert(0, child);
        self
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for c in &self.0 {
            write!(f, "/{c}")?;
        }
        Ok(())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
