//! Test class integration: merge the generated framework and test methods
//! into one coherent class.
//!
//! Three rules, applied member by member:
//!   - lifecycle methods of the same kind merge bodies, appending incoming
//!     statements not already present (whitespace-collapsed text equality);
//!   - same-name methods of the same category keep the longer body
//!     (characters after whitespace collapse; exact tie keeps the existing);
//!   - everything else is appended directly.
//!
//! Output is re-serialized with stable formatting (4-space indent, one
//! blank line between members) so integration is idempotent and goldens
//! stay byte-exact.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::frontend::model::{Span, Stmt};
use crate::frontend::parser::parse_source;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LifecycleKind {
    BeforeAll,
    BeforeEach,
    AfterEach,
    AfterAll,
}

impl LifecycleKind {
    pub const ALL: [LifecycleKind; 4] = [
        LifecycleKind::BeforeAll,
        LifecycleKind::BeforeEach,
        LifecycleKind::AfterEach,
        LifecycleKind::AfterAll,
    ];

    fn from_annotation(name: &str) -> Option<Self> {
        match name {
            "BeforeAll" | "BeforeClass" => Some(LifecycleKind::BeforeAll),
            "BeforeEach" | "Before" => Some(LifecycleKind::BeforeEach),
            "AfterEach" | "After" => Some(LifecycleKind::AfterEach),
            "AfterAll" | "AfterClass" => Some(LifecycleKind::AfterAll),
            _ => None,
        }
    }
}

impl fmt::Display for LifecycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LifecycleKind::BeforeAll => "before-all",
            LifecycleKind::BeforeEach => "before-each",
            LifecycleKind::AfterEach => "after-each",
            LifecycleKind::AfterAll => "after-all",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemberCategory {
    Field,
    Lifecycle(LifecycleKind),
    Test,
    Helper,
}

/// One class member in serializable form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberDecl {
    pub name: String,
    pub category: MemberCategory,
    pub annotations: Vec<String>,
    /// Modifiers through parameter list (and throws); the full declaration
    /// for fields.
    pub header: String,
    /// Inner body text between the braces, None for fields.
    pub body: Option<String>,
}

impl MemberDecl {
    /// Body length in characters after whitespace collapse, the dedup
    /// proxy for implementation richness.
    pub fn body_weight(&self) -> usize {
        self.body.as_deref().map(|b| collapse(b).len()).unwrap_or(0)
    }
}

/// A parsed test class, members grouped for integration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTestClass {
    pub package: Option<String>,
    /// Import paths as written (`static` prefix kept), duplicates removed,
    /// original order preserved.
    pub imports: Vec<String>,
    pub class_annotations: Vec<String>,
    /// e.g. `public class AccountTest`.
    pub class_header: String,
    pub members: Vec<MemberDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationDiagnostic {
    pub snippet_excerpt: String,
    pub message: String,
}

/// What happened to every input member, for accounting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationReport {
    pub appended: usize,
    pub merged_lifecycle: usize,
    pub deduped: usize,
    pub diagnostics: Vec<IntegrationDiagnostic>,
}

#[derive(Debug, thiserror::Error)]
pub enum IntegrateError {
    #[error("framework does not parse as a class: {0}")]
    BadFramework(String),
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn annotation_name(raw: &str) -> &str {
    let raw = raw.trim_start_matches('@');
    let end = raw.find(|c: char| !c.is_alphanumeric() && c != '_' && c != '.').unwrap_or(raw.len());
    let name = &raw[..end];
    name.rsplit('.').next().unwrap_or(name)
}

fn categorize(annotations: &[String]) -> MemberCategory {
    for a in annotations {
        let name = annotation_name(a);
        if let Some(kind) = LifecycleKind::from_annotation(name) {
            return MemberCategory::Lifecycle(kind);
        }
        if matches!(name, "Test" | "ParameterizedTest" | "RepeatedTest" | "TestFactory") {
            return MemberCategory::Test;
        }
    }
    MemberCategory::Helper
}

/// Parse a complete test class source into its member structure.
pub fn parse_test_class(source: &str) -> Result<ParsedTestClass, IntegrateError> {
    let parsed = parse_source(Path::new("TestClass.java"), source)
        .map_err(|e| IntegrateError::BadFramework(e.message))?;
    let Some(class) = parsed.classes.first() else {
        return Err(IntegrateError::BadFramework("no class declaration found".into()));
    };
    let mut out = ParsedTestClass {
        package: if parsed.package.is_empty() { None } else { Some(parsed.package.clone()) },
        imports: Vec::new(),
        class_annotations: class.annotations.clone(),
        class_header: class.declaration_text.clone(),
        members: Vec::new(),
    };
    for imp in &parsed.imports {
        let mut line = String::new();
        if imp.is_static {
            line.push_str("static ");
        }
        line.push_str(&imp.path);
        if imp.wildcard {
            line.push_str(".*");
        }
        if !out.imports.contains(&line) {
            out.imports.push(line);
        }
    }

    // fields first, in source order, keyed by span so multi-declarator
    // declarations render once
    let mut seen_spans: Vec<Span> = Vec::new();
    for field in &class.fields {
        if seen_spans.contains(&field.decl_span) {
            continue;
        }
        seen_spans.push(field.decl_span);
        out.members.push(MemberDecl {
            name: field.name.clone(),
            category: MemberCategory::Field,
            annotations: Vec::new(),
            header: reindent_inline(field.decl_span.slice(source)),
            body: None,
        });
    }

    let mut callables: Vec<_> = parsed
        .callables
        .iter()
        .filter(|c| c.id.class_qname() == class.qualified_name)
        .collect();
    callables.sort_by_key(|c| c.decl_span.start);
    for decl in callables {
        let body = decl.body_span.map(|span| inner_body(span.slice(source)));
        out.members.push(MemberDecl {
            name: decl.name.clone(),
            category: categorize(&decl.annotations),
            annotations: decl.annotations.clone(),
            header: collapse(decl.header_span.slice(source)),
            body,
        });
    }
    Ok(out)
}

/// Parse a snippet that may be a bare member list or a whole class.
/// Returns the members plus any import lines the snippet carried.
pub fn parse_member_snippet(snippet: &str) -> Result<(Vec<MemberDecl>, Vec<String>), String> {
    let trimmed = snippet.trim();
    if trimmed.is_empty() {
        return Err("empty snippet".into());
    }
    // whole-class snippet?
    if parse_source(Path::new("Snippet.java"), snippet)
        .map(|p| !p.classes.is_empty())
        .unwrap_or(false)
    {
        let class = parse_test_class(snippet).map_err(|e| e.to_string())?;
        return Ok((class.members, class.imports));
    }
    // wrap bare members, hoisting any leading import lines out of the class
    let mut imports = String::new();
    let mut rest = Vec::new();
    for line in snippet.lines() {
        if line.trim_start().starts_with("import ") && rest.is_empty() {
            imports.push_str(line);
            imports.push('\n');
        } else {
            rest.push(line);
        }
    }
    let wrapped = format!("{}class SnippetWrapper {{\n{}\n}}", imports, rest.join("\n"));
    let class = parse_test_class(&wrapped).map_err(|e| e.to_string())?;
    if class.members.is_empty() {
        return Err("snippet contains no members".into());
    }
    Ok((class.members, class.imports))
}

/// Split a body's inner text into statement texts for merge comparison.
/// Falls back to the whole body as one unit when statement parsing fails.
pub fn body_statements(body_inner: &str) -> Vec<String> {
    let wrapped = format!("class W {{ void m() {{\n{}\n}} }}", body_inner);
    match parse_source(Path::new("W.java"), &wrapped) {
        Ok(parsed) => {
            let Some(decl) = parsed.callables.first() else {
                return vec![body_inner.trim().to_string()];
            };
            let Some(block) = &decl.body else {
                return vec![body_inner.trim().to_string()];
            };
            block
                .stmts
                .iter()
                .map(|s| stmt_text(s, &wrapped))
                .collect()
        }
        Err(_) => vec![body_inner.trim().to_string()],
    }
}

fn stmt_text(stmt: &Stmt, source: &str) -> String {
    stmt.span().slice(source).trim().to_string()
}

/// Merge an incoming lifecycle body into an existing one: statements of the
/// incoming body not present in the existing one (whitespace-collapsed
/// comparison) are appended in their original order.
pub fn merge_lifecycle(existing_body: &str, incoming_body: &str) -> String {
    let existing = body_statements(existing_body);
    let incoming = body_statements(incoming_body);
    let have: Vec<String> = existing.iter().map(|s| collapse(s)).collect();
    let mut merged = existing.clone();
    for stmt in incoming {
        if !have.contains(&collapse(&stmt)) {
            merged.push(stmt);
        }
    }
    merged.join("\n")
}

/// Keep the version with the longer whitespace-collapsed body; exact tie
/// keeps the existing member.
pub fn dedup_method(existing: MemberDecl, incoming: MemberDecl) -> MemberDecl {
    if incoming.body_weight() > existing.body_weight() {
        incoming
    } else {
        existing
    }
}

/// Integrate generated members into a framework class and re-serialize.
pub fn integrate(
    framework_source: &str,
    method_snippets: &[String],
) -> Result<(String, IntegrationReport), IntegrateError> {
    let mut class = parse_test_class(framework_source)?;
    let mut report = IntegrationReport::default();

    for snippet in method_snippets {
        let (members, imports) = match parse_member_snippet(snippet) {
            Ok(parts) => parts,
            Err(message) => {
                report.diagnostics.push(IntegrationDiagnostic {
                    snippet_excerpt: collapse(snippet).chars().take(80).collect(),
                    message,
                });
                continue;
            }
        };
        for imp in imports {
            if !class.imports.contains(&imp) {
                class.imports.push(imp);
            }
        }
        for member in members {
            insert_member(&mut class, member, &mut report);
        }
    }
    Ok((render_class(&class), report))
}

fn insert_member(class: &mut ParsedTestClass, incoming: MemberDecl, report: &mut IntegrationReport) {
    match incoming.category {
        MemberCategory::Lifecycle(kind) => {
            if let Some(existing) = class
                .members
                .iter_mut()
                .find(|m| m.category == MemberCategory::Lifecycle(kind))
            {
                let merged = merge_lifecycle(
                    existing.body.as_deref().unwrap_or(""),
                    incoming.body.as_deref().unwrap_or(""),
                );
                existing.body = Some(merged);
                report.merged_lifecycle += 1;
            } else {
                class.members.push(incoming);
                report.appended += 1;
            }
        }
        MemberCategory::Field => {
            if class
                .members
                .iter()
                .any(|m| m.category == MemberCategory::Field && m.name == incoming.name)
            {
                report.deduped += 1;
            } else {
                class.members.push(incoming);
                report.appended += 1;
            }
        }
        MemberCategory::Test | MemberCategory::Helper => {
            let pos = class
                .members
                .iter()
                .position(|m| m.category == incoming.category && m.name == incoming.name);
            match pos {
                Some(i) => {
                    let existing = class.members[i].clone();
                    class.members[i] = dedup_method(existing, incoming);
                    report.deduped += 1;
                }
                None => {
                    class.members.push(incoming);
                    report.appended += 1;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Stable serialization
// ---------------------------------------------------------------------------

fn reindent_inline(text: &str) -> String {
    collapse(text)
}

/// Inner text of a braced body, original lines kept.
fn inner_body(with_braces: &str) -> String {
    let t = with_braces.trim();
    let t = t.strip_prefix('{').unwrap_or(t);
    let t = t.strip_suffix('}').unwrap_or(t);
    t.trim_matches('\n').to_string()
}

/// Re-indent body lines to `indent` spaces, preserving relative nesting.
fn reindent_body(body: &str, indent: usize) -> Vec<String> {
    let lines: Vec<&str> = body.lines().collect();
    let significant: Vec<&str> = lines
        .iter()
        .copied()
        .skip_while(|l| l.trim().is_empty())
        .collect();
    let significant: Vec<&str> = significant
        .iter()
        .rev()
        .copied()
        .skip_while(|l| l.trim().is_empty())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let min_indent = significant
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let pad = " ".repeat(indent);
    significant
        .iter()
        .map(|l| {
            if l.trim().is_empty() {
                String::new()
            } else {
                format!("{}{}", pad, &l[min_indent.min(l.len() - l.trim_start().len())..])
            }
        })
        .collect()
}

/// Serialize one member with stable formatting, unindented at class level.
pub fn render_member(member: &MemberDecl) -> String {
    let mut out = String::new();
    if member.category == MemberCategory::Field {
        out.push_str(&member.header);
        out.push('\n');
        return out;
    }
    for a in &member.annotations {
        out.push_str(a);
        out.push('\n');
    }
    out.push_str(&member.header);
    match &member.body {
        Some(body) if !body.trim().is_empty() => {
            out.push_str(" {\n");
            for line in reindent_body(body, 4) {
                out.push_str(&line);
                out.push('\n');
            }
            out.push_str("}\n");
        }
        Some(_) => out.push_str(" {\n}\n"),
        None => out.push_str(";\n"),
    }
    out
}

/// Serialize a parsed test class with stable formatting.
pub fn render_class(class: &ParsedTestClass) -> String {
    let mut out = String::new();
    if let Some(pkg) = &class.package {
        out.push_str(&format!("package {};\n\n", pkg));
    }
    if !class.imports.is_empty() {
        for imp in &class.imports {
            out.push_str(&format!("import {};\n", imp));
        }
        out.push('\n');
    }
    for a in &class.class_annotations {
        out.push_str(a);
        out.push('\n');
    }
    out.push_str(&class.class_header);
    out.push_str(" {\n");

    let ordered = ordered_members(class);
    for member in ordered {
        out.push('\n');
        match member.category {
            MemberCategory::Field => {
                out.push_str("    ");
                out.push_str(&member.header);
                out.push('\n');
            }
            _ => {
                for a in &member.annotations {
                    out.push_str("    ");
                    out.push_str(a);
                    out.push('\n');
                }
                out.push_str("    ");
                out.push_str(&member.header);
                match &member.body {
                    Some(body) if !body.trim().is_empty() => {
                        out.push_str(" {\n");
                        for line in reindent_body(body, 8) {
                            out.push_str(&line);
                            out.push('\n');
                        }
                        out.push_str("    }\n");
                    }
                    Some(_) => {
                        out.push_str(" {\n    }\n");
                    }
                    None => out.push_str(";\n"),
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Fields, lifecycle methods in fixed kind order, tests, then helpers;
/// insertion order within each group.
fn ordered_members(class: &ParsedTestClass) -> Vec<&MemberDecl> {
    let mut out: Vec<&MemberDecl> = Vec::new();
    out.extend(class.members.iter().filter(|m| m.category == MemberCategory::Field));
    for kind in LifecycleKind::ALL {
        out.extend(
            class.members.iter().filter(|m| m.category == MemberCategory::Lifecycle(kind)),
        );
    }
    out.extend(class.members.iter().filter(|m| m.category == MemberCategory::Test));
    out.extend(class.members.iter().filter(|m| m.category == MemberCategory::Helper));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRAMEWORK: &str = r#"package com.acme;

import org.junit.jupiter.api.BeforeEach;
import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.assertEquals;

public class AccountTest {

    private Account account;

    @BeforeEach
    void setUp() {
        account = new Account("alice");
    }

    @Test
    void placeholder() {
    }
}
"#;

    #[test]
    fn framework_members_classified() {
        let class = parse_test_class(FRAMEWORK).unwrap();
        assert_eq!(class.package.as_deref(), Some("com.acme"));
        assert_eq!(class.imports.len(), 3);
        let cats: Vec<MemberCategory> = class.members.iter().map(|m| m.category).collect();
        assert!(cats.contains(&MemberCategory::Field));
        assert!(cats.contains(&MemberCategory::Lifecycle(LifecycleKind::BeforeEach)));
        assert!(cats.contains(&MemberCategory::Test));
    }

    #[test]
    fn merge_appends_only_missing_statements() {
        let merged = merge_lifecycle("a();\nb();", "b();\nc();");
        let stmts: Vec<&str> = merged.lines().collect();
        assert_eq!(stmts, vec!["a();", "b();", "c();"]);
    }

    #[test]
    fn merge_is_idempotent_for_subsets() {
        let merged = merge_lifecycle("a();\nb();", "b();");
        assert_eq!(merged, "a();\nb();");
        let merged2 = merge_lifecycle("", "x();");
        assert_eq!(merged2, "x();");
    }

    #[test]
    fn merge_compares_whitespace_collapsed() {
        let merged = merge_lifecycle("account  =  new Account( \"a\" );", "account = new Account( \"a\" );");
        assert_eq!(body_statements(&merged).len(), 1);
    }

    fn member(name: &str, body: &str) -> MemberDecl {
        MemberDecl {
            name: name.into(),
            category: MemberCategory::Test,
            annotations: vec!["@Test".into()],
            header: format!("void {}()", name),
            body: Some(body.into()),
        }
    }

    #[test]
    fn dedup_keeps_longer_body() {
        let short = member("t", "a();");
        let long = member("t", "a();\nassertEquals(1, 1);\nassertEquals(2, 2);");
        let kept = dedup_method(short.clone(), long.clone());
        assert_eq!(kept.body, long.body);
        // and in the other direction the existing longer one survives
        let kept2 = dedup_method(long.clone(), short);
        assert_eq!(kept2.body, long.body);
    }

    #[test]
    fn dedup_tie_keeps_existing() {
        let a = member("t", "same();");
        let mut b = member("t", "same();");
        b.header = "public void t()".into(); // differs outside the body
        let kept = dedup_method(a.clone(), b);
        assert_eq!(kept.header, a.header);
    }

    #[test]
    fn placeholder_loses_to_full_body() {
        let placeholder = member("t", "");
        let full = member("t", "assertEquals(1, account.getBalance());");
        assert_eq!(dedup_method(placeholder, full.clone()).body, full.body);
    }

    #[test]
    fn integrate_appends_distinct_methods() {
        let methods = vec![
            "@Test\nvoid depositIncreasesBalance() {\n    account.deposit(5);\n    assertEquals(5, account.getBalance());\n}".to_string(),
            "@Test\nvoid withdrawReducesBalance() {\n    account.deposit(5);\n    account.withdraw(2);\n    assertEquals(3, account.getBalance());\n}".to_string(),
            "@Test\nvoid freezeBlocksDeposit() {\n    account.freeze();\n}".to_string(),
        ];
        let (out, report) = integrate(FRAMEWORK, &methods).unwrap();
        assert_eq!(report.appended, 3);
        assert_eq!(report.diagnostics.len(), 0);
        assert!(out.contains("private Account account;"));
        assert!(out.contains("depositIncreasesBalance"));
        assert!(out.contains("withdrawReducesBalance"));
        assert!(out.contains("freezeBlocksDeposit"));
        assert!(out.contains("placeholder"));
    }

    #[test]
    fn integrate_same_name_keeps_longer() {
        let methods = vec![
            "@Test\nvoid testGetBoundary() {\n    one();\n}".to_string(),
            "@Test\nvoid testGetBoundary() {\n    one();\n    two();\n    three();\n}".to_string(),
        ];
        let (out, report) = integrate(FRAMEWORK, &methods).unwrap();
        assert_eq!(report.appended, 1);
        assert_eq!(report.deduped, 1);
        assert!(out.contains("three();"));
        assert_eq!(out.matches("void testGetBoundary()").count(), 1);
    }

    #[test]
    fn integrate_merges_incoming_setup() {
        let methods = vec![
            "@BeforeEach\nvoid setUp() {\n    account = new Account(\"alice\");\n    account.deposit(10);\n}".to_string(),
        ];
        let (out, report) = integrate(FRAMEWORK, &methods).unwrap();
        assert_eq!(report.merged_lifecycle, 1);
        assert!(out.contains("account = new Account(\"alice\");"));
        assert!(out.contains("account.deposit(10);"));
        assert_eq!(out.matches("void setUp()").count(), 1);
    }

    #[test]
    fn integrate_twice_is_byte_identical() {
        let methods = vec![
            "@Test\nvoid a() {\n    assertEquals(1, 1);\n}".to_string(),
            "@BeforeEach\nvoid setUp() {\n    account.deposit(1);\n}".to_string(),
        ];
        let (once, _) = integrate(FRAMEWORK, &methods).unwrap();
        let (twice, _) = integrate(&once, &methods).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn unparseable_member_is_skipped_with_diagnostic() {
        let methods = vec!["@Test\nvoid broken() { if (".to_string()];
        let (out, report) = integrate(FRAMEWORK, &methods).unwrap();
        assert_eq!(report.diagnostics.len(), 1);
        assert!(!out.contains("broken"));
    }

    #[test]
    fn imports_from_snippets_are_unioned() {
        let methods = vec![
            "import java.util.List;\n@Test\nvoid usesList() {\n    List<String> xs = null;\n}".to_string(),
            "import java.util.List;\n@Test\nvoid alsoUsesList() {\n    List<String> xs = null;\n}".to_string(),
        ];
        let (out, _) = integrate(FRAMEWORK, &methods).unwrap();
        assert_eq!(out.matches("import java.util.List;").count(), 1);
    }
}
