//! Signature hierarchy, model type-checking, and trace-type suggestions.
//!
//! The hierarchy is a single-inheritance forest. A location of type `T`
//! participates wherever an ancestor of `T` is expected (subtype
//! polymorphism); abstract signatures type relations but never locations.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::dsl::ast::LocationKind;
use crate::dsl::core::CoreSpec;
use crate::model::TraceModel;
use crate::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeErrorKind {
    UnknownSig,
    CycleInHierarchy,
    DuplicateName,
    AbstractInstantiation,
    DomainMismatch,
    RangeMismatch,
    PayloadSchemaMismatch,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TypeErrorKind::UnknownSig => "UnknownSig",
            TypeErrorKind::CycleInHierarchy => "CycleInHierarchy",
            TypeErrorKind::DuplicateName => "DuplicateName",
            TypeErrorKind::AbstractInstantiation => "AbstractInstantiation",
            TypeErrorKind::DomainMismatch => "DomainMismatch",
            TypeErrorKind::RangeMismatch => "RangeMismatch",
            TypeErrorKind::PayloadSchemaMismatch => "PayloadSchemaMismatch",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}: {subject}: {detail}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    /// The identifier the error is about (a sig, relation or location id).
    pub subject: String,
    pub detail: String,
    pub span: Option<SourceSpan>,
}

impl TypeError {
    fn new(kind: TypeErrorKind, subject: impl Into<String>, detail: impl Into<String>) -> Self {
        TypeError {
            kind,
            subject: subject.into(),
            detail: detail.into(),
            span: None,
        }
    }

    fn with_span(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SigEntry {
    parent: Option<String>,
    is_abstract: bool,
    location: Option<LocationKind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInfo {
    pub domain: String,
    pub range: String,
}

/// The signature forest plus relation signatures of a specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeHierarchy {
    sigs: BTreeMap<String, SigEntry>,
    relations: BTreeMap<String, RelationInfo>,
}

/// Build the hierarchy from a desugared specification, checking for
/// duplicate names, unknown parents and field targets, and parent cycles.
pub fn build_hierarchy(core: &CoreSpec) -> Result<TypeHierarchy, Vec<TypeError>> {
    let mut errors = Vec::new();
    let mut sigs: BTreeMap<String, SigEntry> = BTreeMap::new();

    for sig in &core.sigs {
        if sigs.contains_key(&sig.name) {
            errors.push(
                TypeError::new(
                    TypeErrorKind::DuplicateName,
                    &sig.name,
                    "signature declared more than once",
                )
                .with_span(sig.span.clone()),
            );
            continue;
        }
        sigs.insert(
            sig.name.clone(),
            SigEntry {
                parent: sig.parent.clone(),
                is_abstract: sig.is_abstract,
                location: sig.location,
            },
        );
    }

    for sig in &core.sigs {
        if let Some(parent) = &sig.parent {
            if !sigs.contains_key(parent) {
                errors.push(
                    TypeError::new(
                        TypeErrorKind::UnknownSig,
                        parent,
                        format!("parent of `{}` is not declared", sig.name),
                    )
                    .with_span(sig.span.clone()),
                );
            }
        }
    }

    // Parent cycles. Walk each chain; report a cycle once, at the sig with
    // the smallest name on it so the output is stable.
    let mut reported: Vec<String> = Vec::new();
    for name in sigs.keys() {
        let mut seen = vec![name.clone()];
        let mut current = name;
        while let Some(parent) = sigs.get(current).and_then(|e| e.parent.as_ref()) {
            if !sigs.contains_key(parent) {
                break;
            }
            if seen.contains(parent) {
                let mut cycle = seen.clone();
                cycle.sort();
                let representative = cycle[0].clone();
                if !reported.contains(&representative) {
                    reported.push(representative.clone());
                    errors.push(TypeError::new(
                        TypeErrorKind::CycleInHierarchy,
                        representative,
                        format!("inheritance cycle through {}", seen.join(" -> ")),
                    ));
                }
                break;
            }
            seen.push(parent.clone());
            current = seen.last().unwrap();
        }
    }

    let mut relations: BTreeMap<String, RelationInfo> = BTreeMap::new();
    for rel in &core.relations {
        if relations.contains_key(&rel.name) {
            errors.push(
                TypeError::new(
                    TypeErrorKind::DuplicateName,
                    &rel.name,
                    "relation declared more than once",
                )
                .with_span(rel.span.clone()),
            );
            continue;
        }
        if !sigs.contains_key(&rel.range) {
            errors.push(
                TypeError::new(
                    TypeErrorKind::UnknownSig,
                    &rel.range,
                    format!("field target of `{}` is not declared", rel.name),
                )
                .with_span(rel.span.clone()),
            );
        }
        relations.insert(
            rel.name.clone(),
            RelationInfo {
                domain: rel.domain.clone(),
                range: rel.range.clone(),
            },
        );
    }

    if errors.is_empty() {
        Ok(TypeHierarchy { sigs, relations })
    } else {
        Err(errors)
    }
}

impl TypeHierarchy {
    pub fn has_sig(&self, name: &str) -> bool {
        self.sigs.contains_key(name)
    }

    pub fn sig_names(&self) -> impl Iterator<Item = &str> {
        self.sigs.keys().map(|s| s.as_str())
    }

    pub fn sig_count(&self) -> usize {
        self.sigs.len()
    }

    pub fn is_abstract(&self, name: &str) -> bool {
        self.sigs.get(name).map(|e| e.is_abstract).unwrap_or(false)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationInfo> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &RelationInfo)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Reflexive-transitive ancestry test.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> Result<bool, TypeError> {
        for name in [sub, sup] {
            if !self.sigs.contains_key(name) {
                return Err(TypeError::new(
                    TypeErrorKind::UnknownSig,
                    name,
                    "signature is not declared",
                ));
            }
        }
        let mut current = sub;
        loop {
            if current == sup {
                return Ok(true);
            }
            match self.sigs.get(current).and_then(|e| e.parent.as_deref()) {
                Some(parent) => current = parent,
                None => return Ok(false),
            }
        }
    }

    /// The location kind governing `sig`: its own annotation or the nearest
    /// annotated ancestor's.
    pub fn location_kind(&self, sig: &str) -> Option<LocationKind> {
        let mut current = sig;
        loop {
            let entry = self.sigs.get(current)?;
            if let Some(kind) = entry.location {
                return Some(kind);
            }
            current = entry.parent.as_deref()?;
        }
    }
}

/// Which end of a relation a location would occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Type-check a trace model. An empty result means well-typed.
pub fn check_model(model: &TraceModel, h: &TypeHierarchy) -> Vec<TypeError> {
    let mut errors = Vec::new();

    for location in &model.locations {
        if !h.has_sig(&location.sig_type) {
            errors.push(TypeError::new(
                TypeErrorKind::UnknownSig,
                &location.sig_type,
                format!("location `{}` has an undeclared type", location.id),
            ));
            continue;
        }
        if h.is_abstract(&location.sig_type) {
            errors.push(TypeError::new(
                TypeErrorKind::AbstractInstantiation,
                &location.id,
                format!(
                    "`{}` is abstract and cannot have locations",
                    location.sig_type
                ),
            ));
        }
        if let Some(kind) = h.location_kind(&location.sig_type) {
            let payload = &location.payload;
            let problem = match kind {
                LocationKind::Text => {
                    if payload.element.is_some() {
                        Some("text locations take `resource` with optional `offset`/`length`")
                    } else {
                        None
                    }
                }
                LocationKind::Code => {
                    if payload.offset.is_none()
                        || payload.length.is_none()
                        || payload.element.is_some()
                    {
                        Some("code locations require `resource`, `offset` and `length`")
                    } else {
                        None
                    }
                }
                LocationKind::Model => {
                    if payload.element.is_none()
                        || payload.offset.is_some()
                        || payload.length.is_some()
                    {
                        Some("model locations require `resource` and `element`")
                    } else {
                        None
                    }
                }
            };
            if let Some(problem) = problem {
                errors.push(TypeError::new(
                    TypeErrorKind::PayloadSchemaMismatch,
                    &location.id,
                    format!("payload does not fit kind `{kind}`: {problem}"),
                ));
            }
        }
    }

    for tuple in &model.tuples {
        let Some(relation) = h.relation(&tuple.relation) else {
            errors.push(TypeError::new(
                TypeErrorKind::UnknownSig,
                &tuple.relation,
                format!("trace {} uses an undeclared relation", tuple.fact()),
            ));
            continue;
        };
        let Some(source) = model.location(&tuple.source) else {
            errors.push(TypeError::new(
                TypeErrorKind::UnknownSig,
                &tuple.source,
                format!("trace {} references a missing location", tuple.fact()),
            ));
            continue;
        };
        let Some(target) = model.location(&tuple.target) else {
            errors.push(TypeError::new(
                TypeErrorKind::UnknownSig,
                &tuple.target,
                format!("trace {} references a missing location", tuple.fact()),
            ));
            continue;
        };
        if !h.has_sig(&source.sig_type) || !h.has_sig(&target.sig_type) {
            // Already reported above for the location itself.
            continue;
        }
        if !h.is_subtype(&source.sig_type, &relation.domain).unwrap_or(false) {
            errors.push(TypeError::new(
                TypeErrorKind::DomainMismatch,
                &tuple.relation,
                format!(
                    "source `{}` of {} has type `{}`, which is not a subtype of `{}`",
                    tuple.source,
                    tuple.fact(),
                    source.sig_type,
                    relation.domain
                ),
            ));
        }
        if !h.is_subtype(&target.sig_type, &relation.range).unwrap_or(false) {
            errors.push(TypeError::new(
                TypeErrorKind::RangeMismatch,
                &tuple.relation,
                format!(
                    "target `{}` of {} has type `{}`, which is not a subtype of `{}`",
                    tuple.target,
                    tuple.fact(),
                    target.sig_type,
                    relation.range
                ),
            ));
        }
    }

    errors
}

/// Relations a location can participate in on the given side, ordered
/// lexicographically.
pub fn suggest_trace_types(
    model: &TraceModel,
    h: &TypeHierarchy,
    loc: &str,
    side: Side,
) -> Result<Vec<String>, TypeError> {
    let location = model.location(loc).ok_or_else(|| {
        TypeError::new(TypeErrorKind::UnknownSig, loc, "unknown location id")
    })?;
    let mut out = Vec::new();
    for (name, info) in h.relations() {
        let expected = match side {
            Side::Source => &info.domain,
            Side::Target => &info.range,
        };
        if h.is_subtype(&location.sig_type, expected)? {
            out.push(name.to_string());
        }
    }
    Ok(out)
}

/// Locations that can serve as the target of `relation` from `loc`,
/// ordered lexicographically and excluding `loc` itself.
pub fn suggest_targets(
    model: &TraceModel,
    h: &TypeHierarchy,
    loc: &str,
    relation: &str,
) -> Result<Vec<String>, TypeError> {
    let location = model.location(loc).ok_or_else(|| {
        TypeError::new(TypeErrorKind::UnknownSig, loc, "unknown location id")
    })?;
    let info = h.relation(relation).ok_or_else(|| {
        TypeError::new(TypeErrorKind::UnknownSig, relation, "unknown relation")
    })?;
    if !h.is_subtype(&location.sig_type, &info.domain)? {
        return Err(TypeError::new(
            TypeErrorKind::DomainMismatch,
            loc,
            format!(
                "type `{}` cannot source `{relation}` (domain `{}`)",
                location.sig_type, info.domain
            ),
        ));
    }
    let mut out: Vec<String> = model
        .locations
        .iter()
        .filter(|l| l.id != loc)
        .filter(|l| h.is_subtype(&l.sig_type, &info.range).unwrap_or(false))
        .map(|l| l.id.clone())
        .collect();
    out.sort();
    Ok(out)
}
