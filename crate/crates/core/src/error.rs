//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while parsing or resolving a tree-schema.
#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema node {path:?}: {message}")]
    Node { path: String, message: String },
    #[error("duplicate sibling label {label:?} under {path:?}")]
    DuplicateSiblingLabel { path: String, label: String },
    #[error("unknown primitive type {name:?} at {path:?}")]
    UnknownPrimitiveType { name: String, path: String },
    #[error("unknown repetition {name:?} at {path:?}")]
    UnknownRepetition { name: String, path: String },
    #[error("constraint path {path:?} does not name a schema node")]
    ConstraintPath { path: String },
    #[error("identifier {path:?} appears in more than one identity constraint")]
    DuplicateIdentity { path: String },
    #[error("reference target {path:?} is not a declared identifier")]
    ReferentNotIdentifier { path: String },
}

/// Errors raised while resolving a query path against a schema.
#[derive(Debug, Error)]
pub enum PathError {
    #[error("path {path:?} does not resolve to any leaf or reference")]
    Unresolved { path: String },
    #[error("path {path:?} is ambiguous: matches {candidates:?}")]
    Ambiguous {
        path: String,
        candidates: Vec<String>,
    },
}

/// Errors raised while parsing record data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("data JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("record {record}: {message}")]
    Record { record: usize, message: String },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
}

/// Errors raised while parsing, binding, or evaluating a query.
#[derive(Debug, Error)]
pub enum QueryError {
    #[error("query syntax at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("query refers to table {found:?} but the schema defines {expected:?}")]
    UnknownTable { expected: String, found: String },
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("{0}")]
    Bind(String),
    #[error("{0}")]
    Eval(String),
}

/// Errors raised by the random instance generator.
#[derive(Debug, Error)]
pub enum GenError {
    #[error("cannot assign {needed} distinct identifier values of type {ty} at {path:?}")]
    IdentifierDomainExhausted {
        needed: usize,
        ty: String,
        path: String,
    },
    #[error("required referrer {path:?} has no identifier instance in scope")]
    UnsatisfiableReference { path: String },
}

/// Errors raised by the brute-force reference evaluator.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("assignment space {size} exceeds budget {budget}")]
    BudgetExceeded { size: u128, budget: u128 },
}
