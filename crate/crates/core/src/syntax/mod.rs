//! Parsing and printing of expressions.

mod parser;
mod printer;

pub use parser::{parse_expr, parse_expr_with, ParseError, ParseOptions, Vars};
pub use printer::{print_latex, print_text};
