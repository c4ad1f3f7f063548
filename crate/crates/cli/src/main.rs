//! `treesql` — validate, flatten, and query collections of tree-structured
//! records from the command line.
//!
//! Three subcommands cover the pipeline:
//!
//! * `validate` checks schema well-formedness, record shape, and the
//!   declared identity/reference constraints, and warns about out-of-range
//!   references and reference cycles,
//! * `flatten` emits the flattened relation (all leaves, a query's plain
//!   leaves, or a query's leaves including reference joins),
//! * `query` evaluates a query and prints the result, or its plan with
//!   `--explain`.
//!
//! Results go to standard output; diagnostics and warnings go to standard
//! error. The exit status is 0 on success, 1 when the inputs violate the
//! schema or its constraints, and 2 on usage, I/O, or query-syntax errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use treesql_core::{
    bind_query, check_constraints, classify_reference, detect_reference_cycles, evaluate, explain,
    flatten_full, flatten_with_constraints, parse_instance, parse_query, parse_schema,
    validate_instance, validate_schema, BoundQuery, FlattenedRelation, QueryError, RefClass,
    TreeInstance, TreeSchema,
};

#[derive(Parser)]
#[command(name = "treesql", version, about = "Validate, flatten, and query tree-structured records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a schema, and optionally a data file, against all constraints.
    Validate(ValidateArgs),
    /// Print the flattened relation for a data file.
    Flatten(FlattenArgs),
    /// Evaluate a query over a data file.
    Query(QueryArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Schema file (JSON).
    #[arg(long)]
    schema: PathBuf,
    /// Data file (JSON) to validate against the schema.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct FlattenArgs {
    /// Schema file (JSON).
    #[arg(long)]
    schema: PathBuf,
    /// Data file (JSON).
    #[arg(long)]
    data: PathBuf,
    /// Which leaves to flatten: every leaf, or the ones a query touches.
    #[arg(long, value_enum, default_value_t = Kind::Full)]
    kind: Kind,
    /// Query whose leaf set drives `--kind relative|constraints`.
    #[arg(long)]
    query: Option<String>,
    /// Read the query from a file instead.
    #[arg(long, conflicts_with = "query")]
    query_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Flatten even when records violate declared constraints.
    #[arg(long)]
    skip_constraint_check: bool,
}

#[derive(Args)]
struct QueryArgs {
    /// Schema file (JSON).
    #[arg(long)]
    schema: PathBuf,
    /// Data file (JSON).
    #[arg(long)]
    data: PathBuf,
    /// Query text.
    #[arg(long)]
    query: Option<String>,
    /// Read the query from a file instead.
    #[arg(long, conflicts_with = "query")]
    query_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Evaluate even when records violate declared constraints.
    #[arg(long)]
    skip_constraint_check: bool,
    /// Print the evaluation plan instead of running the query.
    #[arg(long)]
    explain: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Every leaf of the schema, in document order.
    Full,
    /// The query's leaves; paths through references are rejected.
    Relative,
    /// The query's leaves, joining reference paths to their range groups.
    Constraints,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A failure routed to an exit status: semantic violations exit 1,
/// usage/parse/IO problems exit 2.
enum Failure {
    Semantic(String),
    Usage(String),
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Semantic(message)) => {
            eprintln!("{message}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Flatten(args) => cmd_flatten(args),
        Command::Query(args) => cmd_query(args),
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let schema = load_schema(&args.schema)?;
    warn_schema(&schema);
    let Some(data) = &args.data else {
        eprintln!("ok: schema {} is well-formed", schema.table_name());
        return Ok(());
    };
    let instance = load_instance(&schema, data)?;
    enforce_constraints(&schema, &instance)?;
    eprintln!(
        "ok: {} record(s) valid, all constraints satisfied",
        instance.records.len()
    );
    Ok(())
}

fn cmd_flatten(args: FlattenArgs) -> Result<(), Failure> {
    let schema = load_schema(&args.schema)?;
    let instance = load_instance(&schema, &args.data)?;
    if !args.skip_constraint_check {
        enforce_constraints(&schema, &instance)?;
    }
    let relation = match args.kind {
        Kind::Full => {
            if args.query.is_some() || args.query_file.is_some() {
                eprintln!("note: --query is ignored when --kind is full");
            }
            flatten_full(&schema, &instance)
        }
        Kind::Relative => {
            let text = require_query(
                &args.query,
                &args.query_file,
                "--kind relative flattens the query's leaf set; provide --query or --query-file",
            )?;
            let bound = bind(&schema, &text)?;
            if !bound.leaf_set.referenced.is_empty() {
                return Err(Failure::Usage(
                    "the query reaches leaves through references; use --kind constraints".into(),
                ));
            }
            flatten_with_constraints(&schema, &instance, &bound.leaf_set)
        }
        Kind::Constraints => {
            let text = require_query(
                &args.query,
                &args.query_file,
                "--kind constraints flattens the query's leaf set; provide --query or --query-file",
            )?;
            let bound = bind(&schema, &text)?;
            flatten_with_constraints(&schema, &instance, &bound.leaf_set)
        }
    };
    emit(&relation, args.format);
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<(), Failure> {
    let schema = load_schema(&args.schema)?;
    let text = require_query(
        &args.query,
        &args.query_file,
        "provide a query with --query or --query-file",
    )?;
    let bound = bind(&schema, &text)?;
    if args.explain {
        print!("{}", explain(&schema, &bound));
        return Ok(());
    }
    let instance = load_instance(&schema, &args.data)?;
    if !args.skip_constraint_check {
        enforce_constraints(&schema, &instance)?;
    }
    let relation = evaluate(&schema, &bound, &instance).map_err(query_failure)?;
    emit(&relation, args.format);
    Ok(())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_schema(path: &Path) -> Result<TreeSchema, Failure> {
    let text = read_file(path)?;
    let schema =
        parse_schema(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let problems = validate_schema(&schema);
    if problems.is_empty() {
        return Ok(schema);
    }
    let report: Vec<String> = problems
        .iter()
        .map(|p| format!("schema: {}", p.describe(&schema)))
        .collect();
    Err(Failure::Semantic(report.join("\n")))
}

fn load_instance(schema: &TreeSchema, path: &Path) -> Result<TreeInstance, Failure> {
    let text = read_file(path)?;
    parse_instance(schema, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Prints non-fatal analysis warnings: out-of-range references (which can
/// multiply rows when flattened) and reference cycles.
fn warn_schema(schema: &TreeSchema) {
    for reference in &schema.constraints.references {
        if matches!(classify_reference(schema, reference), RefClass::OutOfRange) {
            eprintln!(
                "warning: reference {} -> {} is out of range: one referrer value can match \
                 identifiers in several scopes and multiply flattened rows",
                schema.short_path(reference.referrer),
                schema.short_path(reference.referent),
            );
        }
    }
    for cycle in detect_reference_cycles(schema) {
        let hops: Vec<String> = cycle
            .iter()
            .map(|r| {
                format!(
                    "{} -> {}",
                    schema.short_path(r.referrer),
                    schema.short_path(r.referent)
                )
            })
            .collect();
        eprintln!("warning: reference cycle: {}", hops.join(", "));
    }
}

/// Structural validation first; constraints only once every record has the
/// shape the schema prescribes.
fn enforce_constraints(schema: &TreeSchema, instance: &TreeInstance) -> Result<(), Failure> {
    let mut report: Vec<String> = validate_instance(schema, instance)
        .into_iter()
        .map(|(record, diagnostic)| format!("record {record}: {diagnostic}"))
        .collect();
    if report.is_empty() {
        report.extend(
            check_constraints(schema, instance)
                .iter()
                .map(|v| v.describe(schema, instance)),
        );
    }
    if report.is_empty() {
        Ok(())
    } else {
        Err(Failure::Semantic(report.join("\n")))
    }
}

fn require_query(
    query: &Option<String>,
    file: &Option<PathBuf>,
    missing: &str,
) -> Result<String, Failure> {
    match (query, file) {
        (Some(text), None) => Ok(text.clone()),
        (None, Some(path)) => read_file(path),
        (None, None) => Err(Failure::Usage(missing.into())),
        (Some(_), Some(_)) => unreachable!("clap rejects --query together with --query-file"),
    }
}

fn bind(schema: &TreeSchema, text: &str) -> Result<BoundQuery, Failure> {
    let query = parse_query(text).map_err(query_failure)?;
    bind_query(schema, &query).map_err(query_failure)
}

/// Parse and bind problems are usage errors; only evaluation-time failures
/// (such as aggregate overflow) count against the data.
fn query_failure(err: QueryError) -> Failure {
    match err {
        QueryError::Eval(message) => Failure::Semantic(message),
        other => Failure::Usage(other.to_string()),
    }
}

fn emit(relation: &FlattenedRelation, format: Format) {
    match format {
        Format::Csv => print!("{}", relation.to_csv()),
        Format::Json => {
            let value = relation.to_json();
            let text = serde_json::to_string_pretty(&value).expect("relation serializes");
            println!("{text}");
        }
    }
}
