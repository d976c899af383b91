//! Source positions for diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A contiguous region of an input file, addressed by 1-based line and
/// column. `length` counts characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, line: u32, column: u32, length: u32) -> Self {
        debug_assert!(line >= 1 && column >= 1);
        SourceSpan {
            file: file.into(),
            line,
            column,
            length,
        }
    }

    /// A placeholder span for nodes that were built programmatically rather
    /// than parsed. Keeps the line/column ≥ 1 invariant.
    pub fn synthetic() -> Self {
        SourceSpan {
            file: String::new(),
            line: 1,
            column: 1,
            length: 0,
        }
    }
}

impl Default for SourceSpan {
    fn default() -> Self {
        SourceSpan::synthetic()
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.file.is_empty() {
            write!(f, "{}:{}", self.line, self.column)
        } else {
            write!(f, "{}:{}:{}", self.file, self.line, self.column)
        }
    }
}
