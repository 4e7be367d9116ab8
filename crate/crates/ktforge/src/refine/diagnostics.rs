//! Parsing of compiler and test-runner output into structured diagnostics.
//!
//! Recognizes the standard `path:line: error: message` compiler line format
//! (with its indented `symbol:` continuation) and test-runner failure
//! blocks (test header line, then the exception/assertion message).
//! Unrecognized lines are ignored.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticKind {
    Compile,
    Runtime,
    Assertion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub file: String,
    pub line: Option<u32>,
    /// Simple name of the unresolved symbol for compile errors, when the
    /// compiler reported one.
    pub symbol: Option<String>,
    pub message: String,
}

fn compile_line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?P<file>[^\s:]+\.java):(?P<line>\d+):\s*(?:error|warning):\s*(?P<msg>.*)$")
            .expect("compile line regex")
    })
}

fn symbol_line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*symbol:\s*(?:class|variable|method)\s+(?P<sym>[A-Za-z_$][\w$]*)")
            .expect("symbol line regex")
    })
}

fn test_failure_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^(?P<test>[A-Za-z_$][\w$]*)\((?P<class>[\w.$]+)\)\s+Time elapsed:.*<<<\s*(?P<kind>FAILURE|ERROR)!",
        )
        .expect("test failure regex")
    })
}

/// Parse raw build/test tool output into diagnostics.
pub fn parse_diagnostics(raw: &str) -> Vec<Diagnostic> {
    let lines: Vec<&str> = raw.lines().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if let Some(caps) = compile_line_re().captures(line) {
            let mut diag = Diagnostic {
                kind: DiagnosticKind::Compile,
                file: caps["file"].to_string(),
                line: caps["line"].parse().ok(),
                symbol: None,
                message: caps["msg"].trim().to_string(),
            };
            // scan the indented continuation block for a symbol line
            let mut j = i + 1;
            while j < lines.len()
                && (lines[j].starts_with(' ') || lines[j].starts_with('\t'))
                && !compile_line_re().is_match(lines[j])
            {
                if let Some(sym) = symbol_line_re().captures(lines[j]) {
                    diag.symbol = Some(sym["sym"].to_string());
                }
                j += 1;
            }
            out.push(diag);
            i = j;
            continue;
        }
        if let Some(caps) = test_failure_re().captures(line) {
            let kind = if &caps["kind"] == "FAILURE" {
                DiagnosticKind::Assertion
            } else {
                DiagnosticKind::Runtime
            };
            // the next non-empty line carries the exception message
            let mut message = String::new();
            let mut j = i + 1;
            while j < lines.len() {
                let t = lines[j].trim();
                if !t.is_empty() {
                    message = t.to_string();
                    break;
                }
                j += 1;
            }
            out.push(Diagnostic {
                kind,
                file: caps["class"].to_string(),
                line: None,
                symbol: Some(caps["test"].to_string()),
                message,
            });
        }
        i += 1;
    }
    out
}
