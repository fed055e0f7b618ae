//! Scenario authoring language: lexer, parser, validator, compiler and
//! canonical renderer.

mod ast;
mod compile;
mod diag;
mod lexer;
mod parser;
mod render;
mod validate;

pub use ast::*;
pub use compile::{
    compile, doc_digest, AidlinePayload, AssetEntry, AssetIndex, CompileError, ProgramAction,
    QuizChoice, RuntimeProgram, Task,
};
pub use diag::{has_errors, Diagnostic, Severity, Span};
pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use parser::{parse_scenario, DEFAULT_CLEARANCE_M, DEFAULT_SWEEP_M, DEFAULT_TOOL_ACTIVE_S};
pub use render::render;
pub use validate::validate;

/// Parses, validates and compiles in one step. On failure returns every
/// diagnostic collected so far; on success returns the program together with
/// any warnings.
pub fn load_program(source: &str) -> Result<(RuntimeProgram, Vec<Diagnostic>), Vec<Diagnostic>> {
    let doc = parse_scenario(source)?;
    let diags = validate(&doc);
    if has_errors(&diags) {
        return Err(diags);
    }
    let program = compile(&doc).map_err(|CompileError::Invalid(d)| d)?;
    Ok((program, diags))
}
