//! Source locations and user-facing diagnostics.
//!
//! Diagnostics render as `file:line:col: code: message` on standard error,
//! one per line.

use std::fmt;

/// 1-based line/column position in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Stable diagnostic codes, used in output and matched by tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagCode {
    UnboundParameter,
    SyntaxError,
    UnsupportedConstruct,
    MalformedPragma,
    DuplicateBinding,
    UndeclaredVariable,
    DuplicateDeclaration,
    DeclarationAfterStatement,
    UnboundVariable,
    TargetOutOfFabric,
    OffsetOverlap,
    StorageOverflow,
    SliceOutOfBounds,
    NonConstantBound,
    LoopCountNonPositive,
    BadCount,
    ShapeMismatch,
    NotAnOutput,
    SramSymbolicAccess,
    MultiCellBranch,
    InvalidCount,
    ParseError,
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// One diagnostic message anchored to a source location.
#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub loc: Loc,
    pub code: DiagCode,
    pub message: String,
}

impl Diagnostic {
    pub fn new(loc: Loc, code: DiagCode, message: impl Into<String>) -> Self {
        Diagnostic {
            loc,
            code,
            message: message.into(),
        }
    }

    /// Render with the file name prefix used on stderr.
    pub fn render(&self, file: &str) -> String {
        format!("{}:{}: {}: {}", file, self.loc, self.code, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.loc, self.code, self.message)
    }
}
