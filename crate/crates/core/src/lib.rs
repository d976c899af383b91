//! Trace reasoning over user-defined trace types.
//!
//! The crate takes a specification written in a small relational-logic
//! language (trace-location signatures, binary trace types, and facts that
//! give the types their semantics) together with a trace model (typed
//! locations inside project artifacts plus manually assigned traces), and
//! computes:
//!
//! * the least fixpoint of the specification's inference rules: the
//!   inferred traces, each with a derivation;
//! * every violation of the specification's denial-style constraints over
//!   the combined closure; and
//! * for each violation, a subset-minimal set of given traces that is
//!   responsible for it.
//!
//! The pipeline is `dsl` (parse + desugar) → `typecheck` (hierarchy and
//! model checks) → `engine` (fixpoint, consistency, diagnosis) → `report`
//! (text/JSON/DOT rendering). Everything operates on immutable values and
//! produces canonically ordered, deterministic output.

pub mod dsl;
pub mod engine;
pub mod model;
pub mod report;
pub mod span;
pub mod typecheck;

use thiserror::Error;

pub use dsl::ast::{LocationKind, SpecAst};
pub use dsl::core::CoreSpec;
pub use dsl::{desugar, parse_spec};
pub use engine::{analyze, AnalysisResult};
pub use model::{parse_model, serialize_model, Fact, ModelFormat, TraceModel};
pub use report::{render_report, RenderFormat, RenderOptions};
pub use span::SourceSpan;
pub use typecheck::{build_hierarchy, TypeHierarchy};

/// A lexical or syntactic problem, anchored to the input text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
}

impl ParseError {
    pub fn new(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseError {
            message: message.into(),
            span,
        }
    }
}

/// A problem found while lowering a parsed specification to core form.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{span}: unknown relation `{name}`")]
    UnknownRelation { name: String, span: SourceSpan },
    #[error("{span}: unknown signature `{name}`")]
    UnknownSig { name: String, span: SourceSpan },
    #[error("{span}: non-Horn head: {detail}")]
    NonHornHead { detail: String, span: SourceSpan },
    #[error("{span}: negated atoms are not allowed in bodies")]
    NegatedBodyAtom { span: SourceSpan },
    #[error("{span}: unbound variable `{name}`")]
    UnboundVariable { name: String, span: SourceSpan },
}

impl SpecError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            SpecError::UnknownRelation { span, .. }
            | SpecError::UnknownSig { span, .. }
            | SpecError::NonHornHead { span, .. }
            | SpecError::NegatedBodyAtom { span }
            | SpecError::UnboundVariable { span, .. } => span,
        }
    }
}
