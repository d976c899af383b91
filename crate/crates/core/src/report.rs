//! Rendering of analysis results as text, JSON, and DOT.
//!
//! Rendering is pure and canonical: the same result and options always
//! produce the same bytes. The DOT form draws solid edges for given
//! traces, dashed edges for inferred ones, and red for anything
//! participating in a violation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{slice_location, AnalysisResult, DerivationGraph, Violation};
use crate::model::{Fact, Provenance, TraceModel, TraceTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Json,
    Dot,
}

impl RenderFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "text" => Some(RenderFormat::Text),
            "json" => Some(RenderFormat::Json),
            "dot" => Some(RenderFormat::Dot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub format: RenderFormat,
    pub include_derivations: bool,
    /// Restrict the report to tuples incident to this location (plus their
    /// premise trees).
    pub slice_location: Option<String>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            format: RenderFormat::Text,
            include_derivations: false,
            slice_location: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("result does not match the model: {0}")]
    StaleResult(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
}

/// Render `result` (produced from `model`) in the requested format.
pub fn render_report(
    result: &AnalysisResult,
    model: &TraceModel,
    opts: &RenderOptions,
) -> Result<String, ReportError> {
    check_freshness(result, model)?;
    let view = build_view(result, model, opts)?;
    Ok(match opts.format {
        RenderFormat::Text => render_text(&view, opts),
        RenderFormat::Json => render_json(&view),
        RenderFormat::Dot => render_dot(&view, model),
    })
}

fn check_freshness(result: &AnalysisResult, model: &TraceModel) -> Result<(), ReportError> {
    for tuple in &result.inferred {
        for endpoint in [&tuple.source, &tuple.target] {
            if model.location(endpoint).is_none() {
                return Err(ReportError::StaleResult(format!(
                    "inferred trace {} references a location missing from the model",
                    tuple.fact()
                )));
            }
        }
    }
    for diagnosis in &result.diagnoses {
        for tuple in &diagnosis.support {
            if !model.has_tuple(&tuple.relation, &tuple.source, &tuple.target) {
                return Err(ReportError::StaleResult(format!(
                    "diagnosis support {} is not a tuple of the model",
                    tuple.fact()
                )));
            }
        }
    }
    Ok(())
}

/// What actually gets rendered: either the whole result or one location's
/// slice of it.
struct ReportView<'a> {
    given: Vec<TraceTuple>,
    inferred: Vec<TraceTuple>,
    violations: Vec<Violation>,
    diagnoses: Vec<crate::engine::Diagnosis>,
    derivations: &'a DerivationGraph,
    /// Derivation-tree facts pulled in by a slice but not incident to it.
    context: Vec<TraceTuple>,
    /// Every given tuple of the model, slice or not; derivation chains and
    /// violation markers classify premises against this set.
    all_given: BTreeSet<Fact>,
}

fn build_view<'a>(
    result: &'a AnalysisResult,
    model: &TraceModel,
    opts: &RenderOptions,
) -> Result<ReportView<'a>, ReportError> {
    let mut given: Vec<TraceTuple> = model.tuples.clone();
    given.sort_by_key(|t| t.fact());
    let all_given: BTreeSet<Fact> = model.tuples.iter().map(|t| t.fact()).collect();

    match &opts.slice_location {
        None => Ok(ReportView {
            given,
            inferred: result.inferred.clone(),
            violations: result.violations.clone(),
            diagnoses: result.diagnoses.clone(),
            derivations: &result.derivations,
            context: Vec::new(),
            all_given,
        }),
        Some(loc) => {
            let slice = slice_location(result, model, loc).map_err(|_| {
                ReportError::UnknownLocation(loc.clone())
            })?;
            let incident: BTreeSet<Fact> = slice.tuples.iter().map(|t| t.fact()).collect();
            let touches = |v: &Violation| {
                v.binding.iter().any(|(_, l)| l == loc)
                    || v.involved
                        .iter()
                        .any(|f| f.source == *loc || f.target == *loc)
            };
            let violations: Vec<Violation> = result
                .violations
                .iter()
                .filter(|v| touches(v))
                .cloned()
                .collect();
            let diagnoses = result
                .diagnoses
                .iter()
                .filter(|d| touches(&d.violation))
                .cloned()
                .collect();

            // Facts appearing in the premise trees but not incident to the
            // location itself; rendered as context.
            let mut context_facts: BTreeSet<Fact> = BTreeSet::new();
            for derivation in slice.derivations.iter() {
                context_facts.insert(derivation.conclusion.clone());
                context_facts.extend(derivation.premises.iter().cloned());
            }
            let context: Vec<TraceTuple> = context_facts
                .into_iter()
                .filter(|f| !incident.contains(f))
                .map(|f| as_tuple(&f, model))
                .collect();

            Ok(ReportView {
                given: given
                    .into_iter()
                    .filter(|t| incident.contains(&t.fact()))
                    .collect(),
                inferred: slice
                    .tuples
                    .iter()
                    .filter(|t| t.provenance == Provenance::Inferred)
                    .cloned()
                    .collect(),
                violations,
                diagnoses,
                derivations: &result.derivations,
                context,
                all_given,
            })
        }
    }
}

/// Resolve a bare fact to a tuple with the provenance the closure gives it.
fn as_tuple(fact: &Fact, model: &TraceModel) -> TraceTuple {
    let provenance = model
        .tuples
        .iter()
        .find(|t| {
            t.relation == fact.relation && t.source == fact.source && t.target == fact.target
        })
        .map(|t| t.provenance)
        .unwrap_or(Provenance::Inferred);
    TraceTuple::new(&fact.relation, &fact.source, &fact.target, provenance)
}

// ---------------------------------------------------------------------------
// Text
// ---------------------------------------------------------------------------

fn render_text(view: &ReportView, opts: &RenderOptions) -> String {
    let mut out = String::new();
    let given_set = &view.all_given;

    let _ = writeln!(out, "assigned ({}):", view.given.len());
    for tuple in &view.given {
        let mark = match tuple.provenance {
            Provenance::Accepted => " [accepted]",
            _ => "",
        };
        let _ = writeln!(out, "  {}{mark}", tuple.fact());
    }

    let _ = writeln!(out, "\ninferred ({}):", view.inferred.len());
    for tuple in &view.inferred {
        let _ = writeln!(out, "  {}", tuple.fact());
        if opts.include_derivations {
            let mut visited = BTreeSet::new();
            write_chain(&mut out, &tuple.fact(), view.derivations, given_set, 2, &mut visited);
        }
    }

    if !view.context.is_empty() {
        let _ = writeln!(out, "\ncontext ({}):", view.context.len());
        for tuple in &view.context {
            let _ = writeln!(out, "  {} [{}]", tuple.fact(), tuple.provenance.as_str());
        }
    }

    let _ = writeln!(out, "\nviolations ({}):", view.violations.len());
    for (index, violation) in view.violations.iter().enumerate() {
        let _ = writeln!(
            out,
            "  [{}] constraint {} at ({})",
            index + 1,
            violation.constraint_id,
            format_binding(&violation.binding)
        );
        for fact in &violation.involved {
            let kind = if given_set.contains(fact) { "given" } else { "inferred" };
            let _ = writeln!(out, "      involves {fact} [{kind}]");
        }
    }

    let _ = writeln!(out, "\ndiagnoses ({}):", view.diagnoses.len());
    for (index, diagnosis) in view.diagnoses.iter().enumerate() {
        let _ = writeln!(
            out,
            "  [{}] constraint {} at ({})",
            index + 1,
            diagnosis.violation.constraint_id,
            format_binding(&diagnosis.violation.binding)
        );
        let _ = writeln!(
            out,
            "      caused by {} given trace(s); removing any one of them resolves it:",
            diagnosis.support.len()
        );
        for tuple in &diagnosis.support {
            let _ = writeln!(out, "        {}", tuple.fact());
        }
    }

    out
}

fn format_binding(binding: &[(String, String)]) -> String {
    binding
        .iter()
        .map(|(var, loc)| format!("{var} = {loc}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Print the derivation of `fact`, then expand each inferred premise once.
/// `visited` keeps shared subtrees from being expanded twice.
fn write_chain(
    out: &mut String,
    fact: &Fact,
    derivations: &DerivationGraph,
    given: &BTreeSet<Fact>,
    depth: usize,
    visited: &mut BTreeSet<Fact>,
) {
    let Some(derivation) = derivations.get(fact) else {
        return;
    };
    let indent = "  ".repeat(depth);
    let premises = derivation
        .premises
        .iter()
        .map(|p| {
            let kind = if given.contains(p) { "given" } else { "inferred" };
            format!("{p} [{kind}]")
        })
        .collect::<Vec<_>>()
        .join(", ");
    let _ = writeln!(out, "{indent}via {}: {premises}", derivation.rule_id);
    for premise in &derivation.premises {
        if !given.contains(premise) && visited.insert(premise.clone()) {
            write_chain(out, premise, derivations, given, depth + 1, visited);
        }
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct JsonReport {
    stats: JsonStats,
    assigned: Vec<JsonTuple>,
    inferred: Vec<JsonInferred>,
    violations: Vec<JsonViolation>,
    diagnoses: Vec<JsonDiagnosis>,
}

#[derive(Serialize)]
struct JsonStats {
    assigned: usize,
    inferred: usize,
    violations: usize,
}

#[derive(Serialize)]
struct JsonTuple {
    relation: String,
    source: String,
    target: String,
    provenance: String,
}

#[derive(Serialize)]
struct JsonInferred {
    relation: String,
    source: String,
    target: String,
    provenance: String,
    derivation: JsonDerivation,
}

#[derive(Serialize)]
struct JsonDerivation {
    #[serde(rename = "ruleId")]
    rule_id: String,
    premises: Vec<Fact>,
}

#[derive(Serialize)]
struct JsonViolation {
    #[serde(rename = "constraintId")]
    constraint_id: String,
    binding: BTreeMap<String, String>,
    involved: Vec<Fact>,
}

#[derive(Serialize)]
struct JsonDiagnosis {
    violation: JsonViolation,
    support: Vec<Fact>,
}

fn render_json(view: &ReportView) -> String {
    let violation_json = |v: &Violation| JsonViolation {
        constraint_id: v.constraint_id.clone(),
        binding: v.binding.iter().cloned().collect(),
        involved: v.involved.clone(),
    };
    let tuple_json = |t: &TraceTuple| JsonTuple {
        relation: t.relation.clone(),
        source: t.source.clone(),
        target: t.target.clone(),
        provenance: t.provenance.as_str().to_string(),
    };

    let report = JsonReport {
        stats: JsonStats {
            assigned: view.given.len(),
            inferred: view.inferred.len(),
            violations: view.violations.len(),
        },
        assigned: view.given.iter().map(tuple_json).collect(),
        inferred: view
            .inferred
            .iter()
            .map(|t| {
                let fact = t.fact();
                let derivation = view.derivations.get(&fact);
                JsonInferred {
                    relation: t.relation.clone(),
                    source: t.source.clone(),
                    target: t.target.clone(),
                    provenance: t.provenance.as_str().to_string(),
                    derivation: JsonDerivation {
                        rule_id: derivation.map(|d| d.rule_id.clone()).unwrap_or_default(),
                        premises: derivation.map(|d| d.premises.clone()).unwrap_or_default(),
                    },
                }
            })
            .collect(),
        violations: view.violations.iter().map(violation_json).collect(),
        diagnoses: view
            .diagnoses
            .iter()
            .map(|d| JsonDiagnosis {
                violation: violation_json(&d.violation),
                support: d.support.iter().map(|t| t.fact()).collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// DOT
// ---------------------------------------------------------------------------

fn render_dot(view: &ReportView, model: &TraceModel) -> String {
    let red: BTreeSet<Fact> = view
        .violations
        .iter()
        .flat_map(|v| v.involved.iter().cloned())
        .collect();

    // Everything drawn: given + inferred (+ slice context), canonical order.
    let mut edges: Vec<&TraceTuple> = Vec::new();
    edges.extend(view.given.iter());
    edges.extend(view.inferred.iter());
    edges.extend(view.context.iter());
    edges.sort_by_key(|t| t.fact());
    edges.dedup_by(|a, b| a.fact() == b.fact());

    // Nodes: all model locations for a full report; for a slice, just the
    // endpoints of the drawn edges.
    let full_report = view.given.len() == model.tuples.len();
    let mut nodes: Vec<(String, String)> = if full_report {
        model
            .locations
            .iter()
            .map(|l| (l.id.clone(), l.sig_type.clone()))
            .collect()
    } else {
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        for edge in &edges {
            ids.insert(&edge.source);
            ids.insert(&edge.target);
        }
        ids.iter()
            .map(|id| {
                let sig = model
                    .location(id)
                    .map(|l| l.sig_type.clone())
                    .unwrap_or_default();
                ((*id).to_string(), sig)
            })
            .collect()
    };
    nodes.sort();

    let style_class = |t: &TraceTuple| match t.provenance {
        Provenance::Inferred => "dashed",
        Provenance::Assigned | Provenance::Accepted => "solid",
    };

    let edge_set: BTreeSet<(Fact, &str, bool)> = edges
        .iter()
        .map(|t| (t.fact(), style_class(t), red.contains(&t.fact())))
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote_id(&model.name));
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  node [shape=box, style=rounded];");
    for (id, sig) in &nodes {
        let _ = writeln!(
            out,
            "  {} [label={}, tooltip={}];",
            quote_id(id),
            quote_id(id),
            quote_id(sig)
        );
    }
    for tuple in &edges {
        let fact = tuple.fact();
        let style = style_class(tuple);
        let is_red = red.contains(&fact);
        // A pair of opposite tuples of the same relation and style collapses
        // to a single dir=both edge; the lexicographically smaller source
        // carries it.
        let reverse = (
            Fact::new(&fact.relation, &fact.target, &fact.source),
            style,
            is_red,
        );
        let collapse = fact.source != fact.target && edge_set.contains(&reverse);
        if collapse && fact.source > fact.target {
            continue;
        }
        let mut attrs = vec![format!("label={}", quote_id(&fact.relation))];
        attrs.push(format!("style={style}"));
        if is_red {
            attrs.push("color=red".to_string());
        }
        if collapse {
            attrs.push("dir=both".to_string());
        }
        let _ = writeln!(
            out,
            "  {} -> {} [{}];",
            quote_id(&fact.source),
            quote_id(&fact.target),
            attrs.join(", ")
        );
    }
    let _ = writeln!(out, "}}");
    out
}

fn quote_id(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' {
            out.push_str("\\\"");
        } else {
            out.push(c);
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{desugar, parse_spec};
    use crate::engine::analyze;
    use crate::model::parse_model;
    use crate::typecheck::build_hierarchy;

    fn analyzed() -> (AnalysisResult, TraceModel) {
        let spec = "sig Item { needs: set Item, fights: set Item }\n\
             fact T { transitive[needs] }\n\
             fact Ex { excludes[needs, fights] }\n";
        let core = desugar(&parse_spec(spec, "t").unwrap()).unwrap();
        let h = build_hierarchy(&core).unwrap();
        let model = parse_model(
            "model demo\n\
             location a : Item { resource = \"f\" }\n\
             location b : Item { resource = \"f\" }\n\
             location c : Item { resource = \"f\" }\n\
             trace needs (a -> b)\ntrace needs (b -> c)\ntrace fights (a -> c)\n",
        )
        .unwrap();
        let result = analyze(&model, &core, &h).unwrap();
        (result, model)
    }

    #[test]
    fn text_report_lists_all_sections() {
        let (result, model) = analyzed();
        let opts = RenderOptions {
            include_derivations: true,
            ..RenderOptions::default()
        };
        let text = render_report(&result, &model, &opts).unwrap();
        assert!(text.contains("assigned (3):"));
        assert!(text.contains("inferred (1):"));
        assert!(text.contains("violations (1):"));
        assert!(text.contains("diagnoses (1):"));
        assert!(text.contains("via T#0: needs (a -> b) [given], needs (b -> c) [given]"));
    }

    #[test]
    fn json_report_has_schema_keys_and_parses() {
        let (result, model) = analyzed();
        let opts = RenderOptions {
            format: RenderFormat::Json,
            ..RenderOptions::default()
        };
        let text = render_report(&result, &model, &opts).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["stats", "assigned", "inferred", "violations", "diagnoses"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert_eq!(value["inferred"][0]["derivation"]["ruleId"], "T#0");
        assert_eq!(value["violations"][0]["constraintId"], "Ex#0");
    }

    #[test]
    fn dot_marks_violating_edges_red_and_inferred_dashed() {
        let (result, model) = analyzed();
        let opts = RenderOptions {
            format: RenderFormat::Dot,
            ..RenderOptions::default()
        };
        let text = render_report(&result, &model, &opts).unwrap();
        assert!(text.contains("\"a\" -> \"c\" [label=\"needs\", style=dashed, color=red];"));
        assert!(text.contains("\"a\" -> \"c\" [label=\"fights\", style=solid, color=red];"));
        assert!(text.contains("\"a\" -> \"b\" [label=\"needs\", style=solid];"));
        assert!(text.contains("tooltip=\"Item\""));
    }

    #[test]
    fn opposite_same_style_edges_collapse_to_dir_both() {
        let spec = "sig Item { fights: set Item }\n";
        let core = desugar(&parse_spec(spec, "t").unwrap()).unwrap();
        let h = build_hierarchy(&core).unwrap();
        let model = parse_model(
            "model m\n\
             location a : Item { resource = \"f\" }\n\
             location b : Item { resource = \"f\" }\n\
             trace fights (a -> b)\ntrace fights (b -> a)\n",
        )
        .unwrap();
        let result = analyze(&model, &core, &h).unwrap();
        let dot = render_report(
            &result,
            &model,
            &RenderOptions {
                format: RenderFormat::Dot,
                ..RenderOptions::default()
            },
        )
        .unwrap();
        assert!(dot.contains("\"a\" -> \"b\" [label=\"fights\", style=solid, dir=both];"));
        assert!(!dot.contains("\"b\" -> \"a\""));
    }

    #[test]
    fn rendering_is_deterministic() {
        let (result, model) = analyzed();
        for format in [RenderFormat::Text, RenderFormat::Json, RenderFormat::Dot] {
            let opts = RenderOptions {
                format,
                include_derivations: true,
                slice_location: None,
            };
            let first = render_report(&result, &model, &opts).unwrap();
            let second = render_report(&result, &model, &opts).unwrap();
            assert_eq!(first, second);
        }
    }

    #[test]
    fn stale_pair_is_rejected() {
        let (result, _model) = analyzed();
        let other = parse_model("model other\n").unwrap();
        let err = render_report(&result, &other, &RenderOptions::default()).unwrap_err();
        assert!(matches!(err, ReportError::StaleResult(_)));
    }

    #[test]
    fn slice_restricts_sections() {
        let (result, model) = analyzed();
        let opts = RenderOptions {
            slice_location: Some("b".to_string()),
            ..RenderOptions::default()
        };
        let text = render_report(&result, &model, &opts).unwrap();
        assert!(text.contains("assigned (2):"));
        assert!(!text.contains("fights (a -> c)"));

        let missing = RenderOptions {
            slice_location: Some("zz".to_string()),
            ..RenderOptions::default()
        };
        assert!(matches!(
            render_report(&result, &model, &missing),
            Err(ReportError::UnknownLocation(_))
        ));
    }
}
