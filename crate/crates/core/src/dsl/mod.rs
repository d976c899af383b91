//! The specification language front end: lexer, parser, syntax tree, and
//! desugaring into the executable core form.

pub mod ast;
pub mod core;
pub mod desugar;
pub(crate) mod lexer;
pub mod parser;

pub use ast::SpecAst;
pub use core::CoreSpec;
pub use desugar::desugar;
pub use parser::parse_spec;
