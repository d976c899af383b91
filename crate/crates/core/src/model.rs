//! Trace models: typed trace-locations with artifact payloads, and trace
//! tuples with provenance.
//!
//! Models are plain immutable values. Two interchange formats exist: a
//! line-oriented native form (`.trace`) and a canonical JSON form; both
//! round-trip. Serialization is canonical (locations sorted by id, tuples
//! by relation, source, target), so identical models print identically.
//!
//! Payload fields are opaque metadata to the reasoner: offsets are never
//! dereferenced against real files. The payload *kind* is derived from
//! which fields are present (`element` ⇒ model, `offset`+`length` ⇒ code,
//! otherwise text); whether the fields fit the location's declared
//! signature is the typecheck module's business.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::ast::LocationKind;
use crate::dsl::lexer::{lex, TokenKind};
use crate::dsl::parser::Parser;
use crate::span::SourceSpan;
use crate::ParseError;

/// How a trace tuple entered the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Assigned,
    Inferred,
    Accepted,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Assigned => "assigned",
            Provenance::Inferred => "inferred",
            Provenance::Accepted => "accepted",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "assigned" => Some(Provenance::Assigned),
            "inferred" => Some(Provenance::Inferred),
            "accepted" => Some(Provenance::Accepted),
            _ => None,
        }
    }
}

/// Artifact coordinates of a trace-location.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Payload {
    pub resource: String,
    pub offset: Option<u64>,
    pub length: Option<u64>,
    pub element: Option<String>,
}

impl Payload {
    /// Structural payload kind, derived from the populated fields.
    pub fn kind(&self) -> LocationKind {
        if self.element.is_some() {
            LocationKind::Model
        } else if self.offset.is_some() && self.length.is_some() {
            LocationKind::Code
        } else {
            LocationKind::Text
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub id: String,
    pub sig_type: String,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceTuple {
    pub relation: String,
    pub source: String,
    pub target: String,
    pub provenance: Provenance,
}

impl TraceTuple {
    pub fn new(
        relation: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        provenance: Provenance,
    ) -> Self {
        TraceTuple {
            relation: relation.into(),
            source: source.into(),
            target: target.into(),
            provenance,
        }
    }

    pub fn fact(&self) -> Fact {
        Fact {
            relation: self.relation.clone(),
            source: self.source.clone(),
            target: self.target.clone(),
        }
    }
}

/// A bare ground tuple `relation(source -> target)` without provenance.
/// Ordering is the canonical (relation, source, target) order used
/// throughout the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fact {
    pub relation: String,
    pub source: String,
    pub target: String,
}

impl Fact {
    pub fn new(
        relation: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        Fact {
            relation: relation.into(),
            source: source.into(),
            target: target.into(),
        }
    }
}

impl std::fmt::Display for Fact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} -> {})", self.relation, self.source, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceModel {
    pub name: String,
    pub locations: Vec<Location>,
    pub tuples: Vec<TraceTuple>,
}

impl TraceModel {
    pub fn location(&self, id: &str) -> Option<&Location> {
        self.locations.iter().find(|l| l.id == id)
    }

    pub fn has_tuple(&self, relation: &str, source: &str, target: &str) -> bool {
        self.tuples
            .iter()
            .any(|t| t.relation == relation && t.source == source && t.target == target)
    }

    /// A copy with locations sorted by id and tuples sorted canonically.
    pub fn canonicalized(&self) -> TraceModel {
        let mut out = self.clone();
        out.locations.sort_by(|a, b| a.id.cmp(&b.id));
        out.tuples
            .sort_by(|a, b| a.fact().cmp(&b.fact()).then(a.provenance.cmp(&b.provenance)));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Native,
    Json,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parse the native `.trace` form.
pub fn parse_model(text: &str) -> Result<TraceModel, Vec<ParseError>> {
    parse_model_named(text, "<model>")
}

/// Parse the native form with a file name for diagnostics.
pub fn parse_model_named(text: &str, file_name: &str) -> Result<TraceModel, Vec<ParseError>> {
    let (tokens, mut errors) = lex(text, file_name);
    let mut parser = Parser {
        tokens,
        pos: 0,
        file: file_name.to_string(),
        errors: Vec::new(),
    };
    let model = parse_model_tokens(&mut parser);
    errors.append(&mut parser.errors);
    match model {
        Some(model) if errors.is_empty() => {
            validate_model(&model, &mut errors, file_name);
            if errors.is_empty() {
                Ok(model)
            } else {
                Err(errors)
            }
        }
        _ => {
            if errors.is_empty() {
                errors.push(ParseError::new(
                    "empty model file",
                    SourceSpan::new(file_name, 1, 1, 0),
                ));
            }
            Err(errors)
        }
    }
}

fn parse_model_tokens(p: &mut Parser) -> Option<TraceModel> {
    p.expect_keyword("model")?;
    let name = p.expect_ident("model name")?;
    let mut model = TraceModel {
        name,
        ..TraceModel::default()
    };
    while !p.at_end() {
        match p.peek_ident() {
            Some("location") => {
                p.advance();
                let id = p.expect_ident("location id")?;
                p.expect_token(TokenKind::Colon, "`:`")?;
                let sig_type = p.expect_ident("signature name")?;
                p.expect_token(TokenKind::LBrace, "`{`")?;
                let mut payload = Payload::default();
                let mut saw_resource = false;
                loop {
                    if p.eat_token(&TokenKind::RBrace) {
                        break;
                    }
                    let key_span = p.current_span();
                    let key = p.expect_ident("payload field")?;
                    p.expect_token(TokenKind::Equals, "`=`")?;
                    match key.as_str() {
                        "resource" => {
                            payload.resource = expect_string(p)?;
                            saw_resource = true;
                        }
                        "offset" => payload.offset = Some(expect_int(p)?),
                        "length" => payload.length = Some(expect_int(p)?),
                        "element" => payload.element = Some(expect_string(p)?),
                        other => {
                            p.error(format!("unknown payload field `{other}`"), key_span);
                            return None;
                        }
                    }
                    p.eat_token(&TokenKind::Comma);
                }
                if !saw_resource {
                    let span = p.prev_span();
                    p.error(format!("location `{id}` is missing `resource`"), span);
                    return None;
                }
                model.locations.push(Location {
                    id,
                    sig_type,
                    payload,
                });
            }
            Some("trace") => {
                p.advance();
                let relation = p.expect_ident("relation name")?;
                p.expect_token(TokenKind::LParen, "`(`")?;
                let source = p.expect_ident("source location id")?;
                p.expect_token(TokenKind::Arrow, "`->`")?;
                let target = p.expect_ident("target location id")?;
                p.expect_token(TokenKind::RParen, "`)`")?;
                let mut provenance = Provenance::Assigned;
                if p.eat_token(&TokenKind::LBrace) {
                    p.expect_keyword("provenance")?;
                    p.expect_token(TokenKind::Equals, "`=`")?;
                    let span = p.current_span();
                    let word = p.expect_ident("provenance value")?;
                    match Provenance::parse(&word) {
                        Some(v) => provenance = v,
                        None => {
                            p.error(
                                format!(
                                    "unknown provenance `{word}` (expected `assigned`, \
                                     `inferred` or `accepted`)"
                                ),
                                span,
                            );
                            return None;
                        }
                    }
                    p.expect_token(TokenKind::RBrace, "`}`")?;
                }
                model.tuples.push(TraceTuple {
                    relation,
                    source,
                    target,
                    provenance,
                });
            }
            _ => {
                let span = p.current_span();
                p.error(
                    format!("expected `location` or `trace`, found {}", p.describe_current()),
                    span,
                );
                return None;
            }
        }
    }
    Some(model)
}

fn expect_string(p: &mut Parser) -> Option<String> {
    match p.peek() {
        Some(TokenKind::Str(s)) => {
            let s = s.clone();
            p.advance();
            Some(s)
        }
        _ => {
            let span = p.current_span();
            p.error(
                format!("expected string literal, found {}", p.describe_current()),
                span,
            );
            None
        }
    }
}

fn expect_int(p: &mut Parser) -> Option<u64> {
    match p.peek() {
        Some(TokenKind::Int(n)) => {
            let n = *n;
            p.advance();
            Some(n)
        }
        _ => {
            let span = p.current_span();
            p.error(
                format!("expected integer, found {}", p.describe_current()),
                span,
            );
            None
        }
    }
}

fn validate_model(model: &TraceModel, errors: &mut Vec<ParseError>, file: &str) {
    let span = SourceSpan::new(file, 1, 1, 0);
    let mut seen_ids = BTreeSet::new();
    for location in &model.locations {
        if !seen_ids.insert(location.id.as_str()) {
            errors.push(ParseError::new(
                format!("duplicate location id `{}`", location.id),
                span.clone(),
            ));
        }
    }
    let mut seen_tuples = BTreeSet::new();
    for tuple in &model.tuples {
        if !seen_tuples.insert((
            tuple.relation.as_str(),
            tuple.source.as_str(),
            tuple.target.as_str(),
        )) {
            errors.push(ParseError::new(
                format!("duplicate trace {}", tuple.fact()),
                span.clone(),
            ));
        }
        for endpoint in [&tuple.source, &tuple.target] {
            if !seen_ids.contains(endpoint.as_str()) {
                errors.push(ParseError::new(
                    format!("trace {} references unknown location `{endpoint}`", tuple.fact()),
                    span.clone(),
                ));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// JSON form
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct JsonModel {
    name: String,
    locations: Vec<JsonLocation>,
    tuples: Vec<JsonTuple>,
}

#[derive(Serialize, Deserialize)]
struct JsonLocation {
    id: String,
    #[serde(rename = "type")]
    sig_type: String,
    kind: String,
    resource: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    offset: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    element: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonTuple {
    relation: String,
    source: String,
    target: String,
    provenance: Provenance,
}

/// Parse the canonical JSON form.
pub fn parse_model_json(text: &str) -> Result<TraceModel, Vec<ParseError>> {
    let parsed: JsonModel = serde_json::from_str(text).map_err(|e| {
        vec![ParseError::new(
            format!("invalid model JSON: {e}"),
            SourceSpan::new("<json>", e.line().max(1) as u32, e.column().max(1) as u32, 0),
        )]
    })?;
    let mut errors = Vec::new();
    let mut model = TraceModel {
        name: parsed.name,
        ..TraceModel::default()
    };
    for loc in parsed.locations {
        let payload = Payload {
            resource: loc.resource,
            offset: loc.offset,
            length: loc.length,
            element: loc.element,
        };
        if loc.kind != payload.kind().as_str() {
            errors.push(ParseError::new(
                format!(
                    "location `{}` declares kind `{}` but its fields imply `{}`",
                    loc.id,
                    loc.kind,
                    payload.kind()
                ),
                SourceSpan::new("<json>", 1, 1, 0),
            ));
        }
        model.locations.push(Location {
            id: loc.id,
            sig_type: loc.sig_type,
            payload,
        });
    }
    for tuple in parsed.tuples {
        model.tuples.push(TraceTuple {
            relation: tuple.relation,
            source: tuple.source,
            target: tuple.target,
            provenance: tuple.provenance,
        });
    }
    validate_model(&model, &mut errors, "<json>");
    if errors.is_empty() {
        Ok(model)
    } else {
        Err(errors)
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Render a model canonically in the requested format.
pub fn serialize_model(model: &TraceModel, format: ModelFormat) -> String {
    let canonical = model.canonicalized();
    match format {
        ModelFormat::Native => serialize_native(&canonical),
        ModelFormat::Json => serialize_json(&canonical),
    }
}

fn serialize_native(model: &TraceModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", model.name);
    if !model.locations.is_empty() {
        let _ = writeln!(out);
        for location in &model.locations {
            let mut fields = vec![format!("resource = {}", quote(&location.payload.resource))];
            if let Some(offset) = location.payload.offset {
                fields.push(format!("offset = {offset}"));
            }
            if let Some(length) = location.payload.length {
                fields.push(format!("length = {length}"));
            }
            if let Some(element) = &location.payload.element {
                fields.push(format!("element = {}", quote(element)));
            }
            let _ = writeln!(
                out,
                "location {} : {} {{ {} }}",
                location.id,
                location.sig_type,
                fields.join(", ")
            );
        }
    }
    if !model.tuples.is_empty() {
        let _ = writeln!(out);
        for tuple in &model.tuples {
            let _ = write!(
                out,
                "trace {} ({} -> {})",
                tuple.relation, tuple.source, tuple.target
            );
            if tuple.provenance != Provenance::Assigned {
                let _ = write!(out, " {{ provenance = {} }}", tuple.provenance.as_str());
            }
            let _ = writeln!(out);
        }
    }
    out
}

fn serialize_json(model: &TraceModel) -> String {
    let json = JsonModel {
        name: model.name.clone(),
        locations: model
            .locations
            .iter()
            .map(|l| JsonLocation {
                id: l.id.clone(),
                sig_type: l.sig_type.clone(),
                kind: l.payload.kind().as_str().to_string(),
                resource: l.payload.resource.clone(),
                offset: l.payload.offset,
                length: l.payload.length,
                element: l.payload.element.clone(),
            })
            .collect(),
        tuples: model
            .tuples
            .iter()
            .map(|t| JsonTuple {
                relation: t.relation.clone(),
                source: t.source.clone(),
                target: t.target.clone(),
                provenance: t.provenance,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&json).expect("model serializes");
    text.push('\n');
    text
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

// ---------------------------------------------------------------------------
// Edits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelEdit {
    AddLocation(Location),
    RemoveLocation { id: String },
    RetypeLocation { id: String, new_type: String },
    AddTrace(TraceTuple),
    RemoveTrace { relation: String, source: String, target: String },
    RetypeTrace {
        relation: String,
        source: String,
        target: String,
        new_relation: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown trace {0}")]
    UnknownTrace(Fact),
    #[error("duplicate location id `{0}`")]
    DuplicateLocation(String),
    #[error("trace {0} already present")]
    DuplicateTrace(Fact),
    #[error("trace {0} is not in the inferred set")]
    NotInferred(Fact),
}

/// Apply one edit, returning the edited copy. The input is untouched;
/// removing a location also removes every incident trace.
pub fn apply_edit(model: &TraceModel, edit: &ModelEdit) -> Result<TraceModel, EditError> {
    let mut out = model.clone();
    match edit {
        ModelEdit::AddLocation(location) => {
            if out.location(&location.id).is_some() {
                return Err(EditError::DuplicateLocation(location.id.clone()));
            }
            out.locations.push(location.clone());
        }
        ModelEdit::RemoveLocation { id } => {
            if out.location(id).is_none() {
                return Err(EditError::UnknownLocation(id.clone()));
            }
            out.locations.retain(|l| &l.id != id);
            out.tuples.retain(|t| &t.source != id && &t.target != id);
        }
        ModelEdit::RetypeLocation { id, new_type } => {
            let location = out
                .locations
                .iter_mut()
                .find(|l| &l.id == id)
                .ok_or_else(|| EditError::UnknownLocation(id.clone()))?;
            location.sig_type = new_type.clone();
        }
        ModelEdit::AddTrace(tuple) => {
            for endpoint in [&tuple.source, &tuple.target] {
                if out.location(endpoint).is_none() {
                    return Err(EditError::UnknownLocation(endpoint.clone()));
                }
            }
            if out.has_tuple(&tuple.relation, &tuple.source, &tuple.target) {
                return Err(EditError::DuplicateTrace(tuple.fact()));
            }
            out.tuples.push(tuple.clone());
        }
        ModelEdit::RemoveTrace {
            relation,
            source,
            target,
        } => {
            if !out.has_tuple(relation, source, target) {
                return Err(EditError::UnknownTrace(Fact::new(
                    relation.clone(),
                    source.clone(),
                    target.clone(),
                )));
            }
            out.tuples
                .retain(|t| !(t.relation == *relation && t.source == *source && t.target == *target));
        }
        ModelEdit::RetypeTrace {
            relation,
            source,
            target,
            new_relation,
        } => {
            if !out.has_tuple(relation, source, target) {
                return Err(EditError::UnknownTrace(Fact::new(
                    relation.clone(),
                    source.clone(),
                    target.clone(),
                )));
            }
            if new_relation != relation && out.has_tuple(new_relation, source, target) {
                return Err(EditError::DuplicateTrace(Fact::new(
                    new_relation.clone(),
                    source.clone(),
                    target.clone(),
                )));
            }
            for tuple in &mut out.tuples {
                if tuple.relation == *relation && tuple.source == *source && tuple.target == *target
                {
                    tuple.relation = new_relation.clone();
                }
            }
        }
    }
    Ok(out)
}

/// Append chosen inferred tuples to the model with `accepted` provenance.
/// Every tuple must come from `inferred` and must not already be present.
pub fn accept_inferred(
    model: &TraceModel,
    inferred: &BTreeSet<Fact>,
    picks: &[Fact],
) -> Result<TraceModel, EditError> {
    let mut out = model.clone();
    for fact in picks {
        if !inferred.contains(fact) {
            return Err(EditError::NotInferred(fact.clone()));
        }
        if out.has_tuple(&fact.relation, &fact.source, &fact.target) {
            return Err(EditError::DuplicateTrace(fact.clone()));
        }
        out.tuples.push(TraceTuple {
            relation: fact.relation.clone(),
            source: fact.source.clone(),
            target: fact.target.clone(),
            provenance: Provenance::Accepted,
        });
    }
    Ok(out)
}
