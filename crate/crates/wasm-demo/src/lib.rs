//! Browser bindings for interactive trace analysis.
//!
//! Three operations back the demo page: `analyze_report` renders the full
//! analysis in any report format, `graph_json` hands the closure to the
//! canvas renderer as plain JSON, and `suggest_json` drives the trace
//! assignment helpers. Everything is a pure function of the two input
//! texts, so the page needs no state beyond its text areas.

use wasm_bindgen::prelude::*;

use tracereason::dsl::{desugar, parse_spec};
use tracereason::engine::{analyze, AnalysisResult, EngineError};
use tracereason::model::{parse_model_named, TraceModel};
use tracereason::report::{render_report, RenderFormat, RenderOptions};
use tracereason::typecheck::{
    build_hierarchy, suggest_targets, suggest_trace_types, Side, TypeHierarchy,
};
use tracereason::CoreSpec;

const EXAMPLE_SPEC: &str = include_str!("../../../fixtures/ecas.tarski");
const EXAMPLE_MODEL: &str = include_str!("../../../fixtures/ecas.trace");

fn load(
    spec_text: &str,
    model_text: &str,
) -> Result<(TraceModel, CoreSpec, TypeHierarchy), String> {
    let join = |errors: Vec<String>| errors.join("\n");
    let ast = parse_spec(spec_text, "spec.tarski")
        .map_err(|e| join(e.iter().map(|e| e.to_string()).collect()))?;
    let core = desugar(&ast).map_err(|e| join(e.iter().map(|e| e.to_string()).collect()))?;
    let hierarchy =
        build_hierarchy(&core).map_err(|e| join(e.iter().map(|e| e.to_string()).collect()))?;
    let model = parse_model_named(model_text, "model.trace")
        .map_err(|e| join(e.iter().map(|e| e.to_string()).collect()))?;
    Ok((model, core, hierarchy))
}

fn run_analysis(
    spec_text: &str,
    model_text: &str,
) -> Result<(AnalysisResult, TraceModel), String> {
    let (model, core, hierarchy) = load(spec_text, model_text)?;
    let result = analyze(&model, &core, &hierarchy).map_err(|e| match e {
        EngineError::IllTyped(errors) => errors
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join("\n"),
        other => other.to_string(),
    })?;
    Ok((result, model))
}

fn report(
    spec_text: &str,
    model_text: &str,
    format: &str,
    include_derivations: bool,
) -> Result<String, String> {
    let format = RenderFormat::parse(format).ok_or_else(|| {
        format!("unknown format `{format}` (expected text, json or dot)")
    })?;
    let (result, model) = run_analysis(spec_text, model_text)?;
    render_report(
        &result,
        &model,
        &RenderOptions {
            format,
            include_derivations,
            slice_location: None,
        },
    )
    .map_err(|e| e.to_string())
}

fn graph(spec_text: &str, model_text: &str) -> Result<String, String> {
    let (result, model) = run_analysis(spec_text, model_text)?;
    let red: std::collections::BTreeSet<_> = result
        .violations
        .iter()
        .flat_map(|v| v.involved.iter().cloned())
        .collect();

    let nodes: Vec<serde_json::Value> = model
        .locations
        .iter()
        .map(|l| serde_json::json!({ "id": l.id, "type": l.sig_type }))
        .collect();
    let edges: Vec<serde_json::Value> = model
        .tuples
        .iter()
        .chain(result.inferred.iter())
        .map(|t| {
            serde_json::json!({
                "relation": t.relation,
                "source": t.source,
                "target": t.target,
                "provenance": t.provenance.as_str(),
                "violating": red.contains(&t.fact()),
            })
        })
        .collect();
    let diagnoses: Vec<serde_json::Value> = result
        .diagnoses
        .iter()
        .map(|d| {
            serde_json::json!({
                "constraintId": d.violation.constraint_id,
                "binding": d.violation.binding.iter().cloned()
                    .collect::<std::collections::BTreeMap<_, _>>(),
                "support": d.support.iter().map(|t| t.fact().to_string())
                    .collect::<Vec<_>>(),
            })
        })
        .collect();

    let value = serde_json::json!({
        "name": model.name,
        "nodes": nodes,
        "edges": edges,
        "diagnoses": diagnoses,
        "stats": {
            "assigned": result.stats.assigned,
            "inferred": result.stats.inferred,
            "violations": result.stats.violations,
        },
        "warnings": result.warnings.iter()
            .map(|w| format!("rule {} skipped {}", w.rule_id, w.fact))
            .collect::<Vec<_>>(),
    });
    serde_json::to_string(&value).map_err(|e| e.to_string())
}

fn suggestions(
    spec_text: &str,
    model_text: &str,
    location: &str,
    side_or_relation: &str,
) -> Result<String, String> {
    let (model, _, hierarchy) = load(spec_text, model_text)?;
    let names = match side_or_relation {
        "source" => suggest_trace_types(&model, &hierarchy, location, Side::Source),
        "target" => suggest_trace_types(&model, &hierarchy, location, Side::Target),
        relation => suggest_targets(&model, &hierarchy, location, relation),
    }
    .map_err(|e| e.to_string())?;
    serde_json::to_string(&names).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// Exported surface
// ---------------------------------------------------------------------------

/// Full analysis report in `text`, `json` or `dot` form.
#[wasm_bindgen]
pub fn analyze_report(
    spec_text: &str,
    model_text: &str,
    format: &str,
    include_derivations: bool,
) -> Result<String, JsValue> {
    report(spec_text, model_text, format, include_derivations).map_err(into_js)
}

/// Closure graph as JSON: nodes, styled edges, diagnoses, stats.
#[wasm_bindgen]
pub fn graph_json(spec_text: &str, model_text: &str) -> Result<String, JsValue> {
    graph(spec_text, model_text).map_err(into_js)
}

/// Suggestions as a JSON array. `mode` is `source`/`target` for trace-type
/// suggestions from the given location, or a relation name for target
/// suggestions.
#[wasm_bindgen]
pub fn suggest_json(
    spec_text: &str,
    model_text: &str,
    location: &str,
    mode: &str,
) -> Result<String, JsValue> {
    suggestions(spec_text, model_text, location, mode).map_err(into_js)
}

#[wasm_bindgen]
pub fn example_spec() -> String {
    EXAMPLE_SPEC.to_string()
}

#[wasm_bindgen]
pub fn example_model() -> String {
    EXAMPLE_MODEL.to_string()
}

fn into_js(message: String) -> JsValue {
    JsValue::from_str(&message)
}
