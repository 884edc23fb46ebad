use std::io::Read;

use hamflow::expr::Expr;
use hamflow::syntax::parse_expr;

use crate::report::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Arg,
    File,
    Stdin,
}

#[derive(Clone, Debug)]
pub struct SourceText {
    pub raw: String,
    pub origin: Origin,
}

impl SourceText {
    /// `-` reads stdin, `@path` reads a file, anything else is the text itself.
    pub fn resolve(arg: &str) -> Result<Self, Failure> {
        if arg == "-" {
            let mut raw = String::new();
            std::io::stdin().read_to_string(&mut raw).map_err(|e| Failure::usage(format!("reading stdin: {e}")))?;
            return Ok(SourceText { raw, origin: Origin::Stdin });
        }
        if let Some(path) = arg.strip_prefix('@') {
            let raw = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("reading {path}: {e}")))?;
            return Ok(SourceText { raw, origin: Origin::File });
        }
        Ok(SourceText { raw: arg.to_string(), origin: Origin::Arg })
    }

    pub fn parse(&self) -> Result<Expr, Failure> {
        let text = self.raw.trim_end_matches(['\n', '\r']);
        parse_expr(text).map_err(|e| {
            let place = match self.origin {
                Origin::Arg => "argument",
                Origin::File => "file",
                Origin::Stdin => "stdin",
            };
            Failure::usage(format!("parse error in {place} at {e}"))
        })
    }
}
