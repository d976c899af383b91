//! Command-line front end for trace analysis.
//!
//! Exit codes: 0 = success and no violations; 1 = the analysis ran and
//! found at least one violation (any command that analyzes: check, infer,
//! explain, export, accept); 2 = usage, I/O, parse, or type errors. The
//! CLI never exits 0 when a violation was found. Reports go to stdout
//! exactly as rendered; diagnostics and warnings go to stderr.

use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tracereason::dsl::{desugar, parse_spec};
use tracereason::engine::{analyze, AnalysisResult, EngineError};
use tracereason::model::{
    accept_inferred, parse_model_json, parse_model_named, serialize_model, Fact, ModelFormat,
    TraceModel,
};
use tracereason::report::{render_report, RenderFormat, RenderOptions};
use tracereason::typecheck::{
    build_hierarchy, check_model, suggest_targets, suggest_trace_types, Side, TypeHierarchy,
};
use tracereason::CoreSpec;

#[derive(Parser)]
#[command(
    name = "tracereason",
    version,
    about = "Define trace types with formal semantics, then infer, check and explain traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Inputs {
    /// Specification file (.tarski)
    #[arg(long)]
    spec: PathBuf,
    /// Trace model file (.trace native form, or .json)
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Report format
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Attach derivation chains to inferred traces (text format)
    #[arg(long)]
    include_derivations: bool,
    /// Restrict the report to tuples incident to this location
    #[arg(long)]
    slice: Option<String>,
    /// Write the report to a file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Dot,
}

impl From<FormatArg> for RenderFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Text => RenderFormat::Text,
            FormatArg::Json => RenderFormat::Json,
            FormatArg::Dot => RenderFormat::Dot,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Source,
    Target,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a specification, optionally with a model
    Validate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Infer traces, check consistency, and report everything
    Check {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Infer traces; `--accept-all` writes the merged model to `--output`
    Infer {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        render: RenderArgs,
        /// Accept every inferred trace into the model
        #[arg(long)]
        accept_all: bool,
    },
    /// Explain each violation as a minimal set of given traces
    Explain {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Suggest trace types or target locations
    Suggest {
        #[command(subcommand)]
        what: SuggestCommand,
    },
    /// Accept chosen inferred traces into the model
    Accept {
        #[command(flatten)]
        inputs: Inputs,
        /// Accept every inferred trace
        #[arg(long)]
        accept_all: bool,
        /// Tuples to accept, written relation:source:target
        tuples: Vec<String>,
        /// Where to write the merged model (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render the analysis report; exit code ignores violations
    Export {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        render: RenderArgs,
    },
}

#[derive(Subcommand)]
enum SuggestCommand {
    /// Relations a location can participate in on the given side
    Types {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        location: String,
        #[arg(long, value_enum)]
        side: SideArg,
    },
    /// Locations that can serve as the target of a relation
    Targets {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        location: String,
        #[arg(long)]
        relation: String,
    },
}

/// Messages bound for stderr, ending the process with exit code 2.
struct Failure(Vec<String>);

impl Failure {
    fn new(message: impl Into<String>) -> Self {
        Failure(vec![message.into()])
    }

    fn many(messages: Vec<String>) -> Self {
        Failure(messages)
    }
}

impl<T: std::fmt::Display> From<T> for Failure {
    fn from(value: T) -> Self {
        Failure::new(value.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            let prefix = error_prefix();
            for line in failure.0 {
                eprintln!("{prefix} {line}");
            }
            ExitCode::from(2)
        }
    }
}

fn color_enabled() -> bool {
    match std::env::var("TRACEREASON_COLOR").as_deref() {
        Ok("never") => false,
        _ => std::io::stderr().is_terminal(),
    }
}

fn error_prefix() -> String {
    if color_enabled() {
        "\x1b[31merror:\x1b[0m".to_string()
    } else {
        "error:".to_string()
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Validate { spec, model } => validate(&spec, model.as_deref()),
        Command::Check { inputs, render } => {
            let (result, model) = analyzed(&inputs)?;
            emit_report(&result, &model, &render)?;
            Ok(violation_exit(&result))
        }
        Command::Infer {
            inputs,
            render,
            accept_all,
        } => infer_command(&inputs, &render, accept_all),
        Command::Explain { inputs } => explain(&inputs),
        Command::Suggest { what } => suggest(what),
        Command::Accept {
            inputs,
            accept_all,
            tuples,
            output,
        } => accept(&inputs, accept_all, &tuples, output.as_deref()),
        Command::Export { inputs, render } => {
            let (result, model) = analyzed(&inputs)?;
            emit_report(&result, &model, &render)?;
            Ok(violation_exit(&result))
        }
    }
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(format!("cannot read `{}`: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<(CoreSpec, TypeHierarchy), Failure> {
    let text = read_file(path)?;
    let file_name = path.display().to_string();
    let ast = parse_spec(&text, &file_name)
        .map_err(|errors| Failure::many(errors.iter().map(|e| e.to_string()).collect()))?;
    let core = desugar(&ast)
        .map_err(|errors| Failure::many(errors.iter().map(|e| e.to_string()).collect()))?;
    let hierarchy = build_hierarchy(&core)
        .map_err(|errors| Failure::many(errors.iter().map(|e| e.to_string()).collect()))?;
    Ok((core, hierarchy))
}

fn load_model(path: &Path) -> Result<TraceModel, Failure> {
    let text = read_file(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        parse_model_json(&text)
    } else {
        parse_model_named(&text, &path.display().to_string())
    };
    parsed.map_err(|errors| Failure::many(errors.iter().map(|e| e.to_string()).collect()))
}

fn analyzed(inputs: &Inputs) -> Result<(AnalysisResult, TraceModel), Failure> {
    let (core, hierarchy) = load_spec(&inputs.spec)?;
    let model = load_model(&inputs.model)?;
    let result = analyze(&model, &core, &hierarchy).map_err(|e| match e {
        EngineError::IllTyped(errors) => {
            Failure::many(errors.iter().map(|t| t.to_string()).collect())
        }
        other => Failure::new(other.to_string()),
    })?;
    for warning in &result.warnings {
        eprintln!(
            "warning: rule {} skipped {}: {}",
            warning.rule_id, warning.fact, warning.detail
        );
    }
    Ok((result, model))
}

fn violation_exit(result: &AnalysisResult) -> u8 {
    if result.violations.is_empty() {
        0
    } else {
        1
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn validate(spec_path: &Path, model_path: Option<&Path>) -> Result<u8, Failure> {
    let (core, hierarchy) = load_spec(spec_path)?;
    println!(
        "spec {}: {} sigs, {} relations, {} rules, {} constraints",
        spec_path.display(),
        core.sigs.len(),
        core.relations.len(),
        core.rules.len(),
        core.constraints.len()
    );
    if let Some(model_path) = model_path {
        let model = load_model(model_path)?;
        let errors = check_model(&model, &hierarchy);
        if !errors.is_empty() {
            return Err(Failure::many(errors.iter().map(|e| e.to_string()).collect()));
        }
        println!(
            "model {}: {} locations, {} traces, well-typed",
            model_path.display(),
            model.locations.len(),
            model.tuples.len()
        );
    }
    Ok(0)
}

fn emit_report(
    result: &AnalysisResult,
    model: &TraceModel,
    render: &RenderArgs,
) -> Result<(), Failure> {
    let opts = RenderOptions {
        format: render.format.into(),
        include_derivations: render.include_derivations,
        slice_location: render.slice.clone(),
    };
    let report = render_report(result, model, &opts)?;
    match &render.output {
        Some(path) => fs::write(path, report)
            .map_err(|e| Failure::new(format!("cannot write `{}`: {e}", path.display())))?,
        None => print!("{report}"),
    }
    Ok(())
}

fn infer_command(inputs: &Inputs, render: &RenderArgs, accept_all: bool) -> Result<u8, Failure> {
    if accept_all && render.output.is_none() {
        return Err(Failure::new("--accept-all needs --output for the merged model"));
    }
    let (result, model) = analyzed(inputs)?;
    if accept_all {
        let inferred = result.inferred_facts();
        let picks: Vec<Fact> = inferred.iter().cloned().collect();
        let merged = accept_inferred(&model, &inferred, &picks).map_err(Failure::from)?;
        let output = render.output.as_ref().expect("checked above");
        write_model(&merged, output)?;
        let report_args = RenderArgs {
            format: render.format,
            include_derivations: render.include_derivations,
            slice: render.slice.clone(),
            output: None,
        };
        emit_report(&result, &model, &report_args)?;
    } else {
        emit_report(&result, &model, render)?;
    }
    Ok(violation_exit(&result))
}

fn explain(inputs: &Inputs) -> Result<u8, Failure> {
    let (result, _) = analyzed(inputs)?;
    if result.diagnoses.is_empty() {
        println!("no violations");
        return Ok(0);
    }
    for (index, diagnosis) in result.diagnoses.iter().enumerate() {
        if index > 0 {
            println!();
        }
        let binding = diagnosis
            .violation
            .binding
            .iter()
            .map(|(var, loc)| format!("{var} = {loc}"))
            .collect::<Vec<_>>()
            .join(", ");
        println!(
            "violation {} of {}: constraint {} at ({binding})",
            index + 1,
            result.diagnoses.len(),
            diagnosis.violation.constraint_id
        );
        for fact in &diagnosis.violation.involved {
            println!("  involves {fact}");
        }
        println!(
            "  caused by {} given trace(s); removing any one of them resolves it:",
            diagnosis.support.len()
        );
        for tuple in &diagnosis.support {
            println!("    {}", tuple.fact());
        }
    }
    Ok(1)
}

fn suggest(what: SuggestCommand) -> Result<u8, Failure> {
    match what {
        SuggestCommand::Types {
            inputs,
            location,
            side,
        } => {
            let (_, hierarchy) = load_spec(&inputs.spec)?;
            let model = load_model(&inputs.model)?;
            let side = match side {
                SideArg::Source => Side::Source,
                SideArg::Target => Side::Target,
            };
            for relation in suggest_trace_types(&model, &hierarchy, &location, side)? {
                println!("{relation}");
            }
        }
        SuggestCommand::Targets {
            inputs,
            location,
            relation,
        } => {
            let (_, hierarchy) = load_spec(&inputs.spec)?;
            let model = load_model(&inputs.model)?;
            for id in suggest_targets(&model, &hierarchy, &location, &relation)? {
                println!("{id}");
            }
        }
    }
    Ok(0)
}

fn accept(
    inputs: &Inputs,
    accept_all: bool,
    tuples: &[String],
    output: Option<&Path>,
) -> Result<u8, Failure> {
    if !accept_all && tuples.is_empty() {
        return Err(Failure::new(
            "nothing to accept: pass relation:source:target tuples or --accept-all",
        ));
    }
    let (result, model) = analyzed(inputs)?;
    let inferred = result.inferred_facts();
    let picks: Vec<Fact> = if accept_all {
        inferred.iter().cloned().collect()
    } else {
        tuples
            .iter()
            .map(|raw| parse_tuple_arg(raw))
            .collect::<Result<_, _>>()?
    };
    let merged = accept_inferred(&model, &inferred, &picks).map_err(Failure::from)?;
    match output {
        Some(path) => write_model(&merged, path)?,
        None => print!("{}", serialize_model(&merged, ModelFormat::Native)),
    }
    Ok(violation_exit(&result))
}

fn parse_tuple_arg(raw: &str) -> Result<Fact, Failure> {
    let parts: Vec<&str> = raw.split(':').collect();
    match parts.as_slice() {
        [relation, source, target] if !relation.is_empty() => {
            Ok(Fact::new(*relation, *source, *target))
        }
        _ => Err(Failure::new(format!(
            "malformed tuple `{raw}` (expected relation:source:target)"
        ))),
    }
}

fn write_model(model: &TraceModel, path: &Path) -> Result<(), Failure> {
    let format = if path.extension().is_some_and(|e| e == "json") {
        ModelFormat::Json
    } else {
        ModelFormat::Native
    };
    fs::write(path, serialize_model(model, format))
        .map_err(|e| Failure::new(format!("cannot write `{}`: {e}", path.display())))
}
