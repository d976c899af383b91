//! Executable core form of a specification: relation signatures, inference
//! rules with positive conjunctive bodies, and denial-style constraints.

use crate::dsl::ast::{LocationKind, TypedVar};
use crate::span::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreSpec {
    /// Raw signature list, in declaration order; the type hierarchy is
    /// built from this by the typecheck module.
    pub sigs: Vec<SigInfo>,
    /// Relation signatures derived from signature fields, in declaration
    /// order. Duplicates survive until hierarchy construction.
    pub relations: Vec<RelationSig>,
    pub rules: Vec<Rule>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigInfo {
    pub name: String,
    pub parent: Option<String>,
    pub is_abstract: bool,
    pub location: Option<LocationKind>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSig {
    pub name: String,
    pub domain: String,
    pub range: String,
    pub span: SourceSpan,
}

/// A positive body atom. Negation is not representable here; the desugarer
/// rejects it before construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BodyAtom {
    Membership {
        src: String,
        dst: String,
        relation: String,
    },
    TypeTest {
        var: String,
        sig: String,
    },
}

/// Head of an inference rule: derive `src -> dst in relation`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeriveHead {
    pub src: String,
    pub dst: String,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub vars: Vec<TypedVar>,
    pub body: Vec<BodyAtom>,
    pub head: DeriveHead,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintHead {
    /// Violated when the body matches and the named tuple is present.
    Forbid {
        src: String,
        dst: String,
        relation: String,
    },
    /// Violated when the body matches with two distinct locations.
    MustEqual { left: String, right: String },
    /// Violated whenever the body matches.
    Deny,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub id: String,
    pub vars: Vec<TypedVar>,
    pub body: Vec<BodyAtom>,
    pub head: ConstraintHead,
    pub span: SourceSpan,
}

impl CoreSpec {
    pub fn relation(&self, name: &str) -> Option<&RelationSig> {
        self.relations.iter().find(|r| r.name == name)
    }
}
