//! The DAX-subset measure language: lexer, parser, printer, catalog and
//! evaluator.

mod ast;
mod catalog;
mod eval;
mod lexer;
mod parser;
mod printer;

pub use ast::{AggFunc, BinOp, CompareOp, Condition, MeasureExpr};
pub use catalog::{CatalogEntry, MeasureCatalog, BUILTIN_MEASURES};
pub use eval::{evaluate, Evaluator, Grouping, NO_GROUP};
pub use parser::parse;
pub use printer::print;

use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {position}: expected {}, found {found}", expected.join(" or "))]
    Syntax { position: usize, expected: Vec<String>, found: String },

    #[error("unknown function {name} at {position}")]
    UnknownFunction { name: String, position: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unknown measure [{0}]")]
    UnknownMeasure(String),

    #[error("measure [{0}] is already defined")]
    DuplicateMeasure(String),

    #[error("measure reference cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),

    #[error("{func} over an empty selection has no value")]
    EmptyAggregation { func: &'static str },

    #[error("{func} needs a numeric column, {column} is not")]
    TypeMismatch { func: &'static str, column: String },

    #[error(transparent)]
    Model(#[from] ModelError),
}
