//! Text format for interferometer layouts (`.icl`).
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! mode   LABEL ROLE            # ROLE: loop-co loop-counter alice bob discard source
//! input  LABEL {LABEL}
//! bs     LABEL LABEL [inverse]
//! phase  LABEL NUMBER
//! sagnac (NUMBER | phi)
//! route  LABEL LABEL LABEL     # input, through, discard
//! preset (core4 | full12)
//! ```

use std::fmt;

use thiserror::Error;

mod ast;
mod compile;
mod parser;

pub use ast::{CircuitAst, ElementKind, Label, SagnacArg, SourceSpan, Statement};
pub use compile::compile;
pub use parser::parse;

/// Bundled layout of the bare loop.
pub const CORE4_ICL: &str = include_str!("../../circuits/core4.icl");
/// Bundled layout with routing towards Alice, Bob and the discard ports.
pub const FULL12_ICL: &str = include_str!("../../circuits/full12.icl");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LangErrorKind {
    Syntax,
    Undeclared,
    Compile,
}

impl fmt::Display for LangErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LangErrorKind::Syntax => "syntax error",
            LangErrorKind::Undeclared => "undeclared mode",
            LangErrorKind::Compile => "compile error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{span}: {kind}: {message}")]
pub struct LangError {
    pub kind: LangErrorKind,
    pub span: SourceSpan,
    pub message: String,
}

impl LangError {
    pub fn new(kind: LangErrorKind, span: SourceSpan, message: String) -> Self {
        Self {
            kind,
            span,
            message,
        }
    }

    /// Multi-line diagnostic with the offending line and a caret underline.
    pub fn render(&self, source: &str, path: &str) -> String {
        let line = source
            .lines()
            .nth(self.span.line as usize - 1)
            .unwrap_or("");
        let gutter = self.span.line.to_string();
        let pad = " ".repeat(gutter.len());
        let lead: String = line
            .chars()
            .take(self.span.column as usize - 1)
            .map(|c| if c == '\t' { '\t' } else { ' ' })
            .collect();
        format!(
            "error: {}: {}\n{pad}--> {path}:{}:{}\n{pad} |\n{gutter} | {line}\n{pad} | {lead}{}\n",
            self.kind,
            self.message,
            self.span.line,
            self.span.column,
            "^".repeat(self.span.length as usize),
        )
    }
}

/// Parses and compiles in one step.
pub fn load<T: crate::Real>(
    source: &str,
) -> Result<
    (
        std::sync::Arc<crate::ModeRegistry>,
        crate::optics::Circuit<T>,
    ),
    LangError,
> {
    compile(&parse(source)?)
}
