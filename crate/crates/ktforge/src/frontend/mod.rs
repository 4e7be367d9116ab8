//! Subject frontend: parses source files with Java syntax into the
//! normalized code model consumed by all downstream analysis.
//!
//! File parsing runs in parallel; each source unit is independent and the
//! results are merged into ordered maps under a single writer, so the
//! resulting model is deterministic regardless of enumeration order.

pub mod lexer;
pub mod model;
pub mod parser;

use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

pub use model::{
    base_type_name, digest_text, Block, CallableDecl, CallableId, CallableKind, ClassRecord,
    CodeModel, Expr, FieldDecl, FrontendDiagnostic, ImportDecl, Param, SourceUnit, Span, Stmt,
    TypeKind, Visibility,
};
pub use parser::{parse_source, strip_doc_markup, ParsedFile, ParseError};

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("project root not found: {0}")]
    RootMissing(PathBuf),
    #[error("no source files matched under {0}")]
    NoSources(PathBuf),
    #[error("invalid glob pattern `{pattern}`: {message}")]
    BadGlob { pattern: String, message: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// File selection for `parse_project`. Empty `includes` means `**/*.java`.
#[derive(Debug, Clone, Default)]
pub struct FileSelection {
    pub includes: Vec<String>,
    pub excludes: Vec<String>,
}

fn build_globset(patterns: &[String]) -> Result<GlobSet, FrontendError> {
    let mut builder = GlobSetBuilder::new();
    for p in patterns {
        let glob = Glob::new(p).map_err(|e| FrontendError::BadGlob {
            pattern: p.clone(),
            message: e.to_string(),
        })?;
        builder.add(glob);
    }
    builder.build().map_err(|e| FrontendError::BadGlob {
        pattern: patterns.join(","),
        message: e.to_string(),
    })
}

/// Enumerate source files under `root` matching the selection, sorted.
pub fn discover_sources(
    root: &Path,
    selection: &FileSelection,
) -> Result<Vec<PathBuf>, FrontendError> {
    if !root.exists() {
        return Err(FrontendError::RootMissing(root.to_path_buf()));
    }
    let includes = if selection.includes.is_empty() {
        build_globset(&["**/*.java".to_string()])?
    } else {
        build_globset(&selection.includes)?
    };
    let excludes = build_globset(&selection.excludes)?;

    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| FrontendError::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        if includes.is_match(rel) && !excludes.is_match(rel) {
            files.push(entry.path().to_path_buf());
        }
    }
    files.sort();
    Ok(files)
}

/// Parse every matching file under `root` into a [`CodeModel`].
///
/// Single-file syntax errors are recorded as diagnostics and the file is
/// skipped; only a missing root or an empty match set is fatal.
pub fn parse_project(root: &Path, selection: &FileSelection) -> Result<CodeModel, FrontendError> {
    let files = discover_sources(root, selection)?;
    if files.is_empty() {
        return Err(FrontendError::NoSources(root.to_path_buf()));
    }

    let mut texts = Vec::with_capacity(files.len());
    for path in &files {
        let text = std::fs::read_to_string(path).map_err(|e| FrontendError::Io {
            path: path.clone(),
            source: e,
        })?;
        // Model paths relative to the root so the index is relocatable.
        let rel = path.strip_prefix(root).unwrap_or(path).to_path_buf();
        texts.push((rel, text));
    }
    Ok(parse_units(texts))
}

/// Parse a set of already-loaded `(path, text)` units into a model.
pub fn parse_units(units: Vec<(PathBuf, String)>) -> CodeModel {
    let parsed: Vec<_> = units
        .into_par_iter()
        .map(|(path, text)| {
            let result = parse_source(&path, &text);
            (path, text, result)
        })
        .collect();

    let mut model = CodeModel::default();
    for (path, text, result) in parsed {
        match result {
            Ok(file) => {
                model.imports.insert(path.clone(), file.imports);
                for class in file.classes {
                    model.classes.insert(class.qualified_name.clone(), class);
                }
                for callable in file.callables {
                    model.callables.insert(callable.id.clone(), callable);
                }
                model.units.insert(path.clone(), SourceUnit::new(path, text));
            }
            Err(e) => {
                model.diagnostics.push(FrontendDiagnostic {
                    path,
                    message: e.message,
                    offset: Some(e.offset),
                });
            }
        }
    }
    model.diagnostics.sort_by(|a, b| a.path.cmp(&b.path));
    model
}

/// Doc text of a class, stripped of delimiter markup, if one was attached.
pub fn extract_class_doc(record: &ClassRecord) -> Option<&str> {
    record.doc_comment.as_deref()
}

/// Doc text of a callable, stripped of delimiter markup, if one was attached.
pub fn extract_doc(decl: &CallableDecl) -> Option<&str> {
    decl.doc_comment.as_deref()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, rel: &str, text: &str) {
        let path = dir.join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, text).unwrap();
    }

    #[test]
    fn one_file_one_class_two_methods() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "src/A.java",
            "package p;\npublic class A { void m1() {} void m2() {} }",
        );
        let model = parse_project(dir.path(), &FileSelection::default()).unwrap();
        assert_eq!(model.classes.len(), 1);
        assert_eq!(model.callables.len(), 2);
        assert!(model.diagnostics.is_empty());
    }

    #[test]
    fn bad_file_yields_diagnostic_not_failure() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "Good.java", "public class Good { void ok() {} }");
        write(dir.path(), "Bad.java", "public class Bad { void m() { ");
        let model = parse_project(dir.path(), &FileSelection::default()).unwrap();
        assert_eq!(model.classes.len(), 1);
        assert_eq!(model.diagnostics.len(), 1);
        assert_eq!(model.diagnostics[0].path, PathBuf::from("Bad.java"));
    }

    #[test]
    fn missing_root_is_fatal() {
        let r = parse_project(Path::new("/nonexistent/xyz"), &FileSelection::default());
        assert!(matches!(r, Err(FrontendError::RootMissing(_))));
    }

    #[test]
    fn no_matches_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "note.txt", "not java");
        let r = parse_project(dir.path(), &FileSelection::default());
        assert!(matches!(r, Err(FrontendError::NoSources(_))));
    }

    #[test]
    fn excludes_filter_files() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "src/A.java", "public class A {}");
        write(dir.path(), "gen/B.java", "public class B {}");
        let sel = FileSelection {
            includes: vec![],
            excludes: vec!["gen/**".to_string()],
        };
        let model = parse_project(dir.path(), &sel).unwrap();
        assert_eq!(model.classes.len(), 1);
        assert!(model.classes.contains_key("A"));
    }

    #[test]
    fn reparse_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "A.java",
            "package p;\npublic class A { /** doc */ int f; void m(int x) { f = x; } }",
        );
        write(dir.path(), "B.java", "package p;\npublic class B { void n() {} }");
        let m1 = parse_project(dir.path(), &FileSelection::default()).unwrap();
        let m2 = parse_project(dir.path(), &FileSelection::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&m1).unwrap(),
            serde_json::to_string(&m2).unwrap()
        );
    }

    #[test]
    fn body_spans_lie_within_unit_bounds() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "A.java",
            "package p;\npublic class A { int m() { return 1; } void n() { m(); } }",
        );
        let model = parse_project(dir.path(), &FileSelection::default()).unwrap();
        for decl in model.callables.values() {
            if let Some(span) = decl.body_span {
                let text = model.unit_text(&decl.source_unit).unwrap();
                assert!(span.end <= text.len());
                assert!(span.start < span.end);
                assert!(span.slice(text).starts_with('{'));
                assert!(span.slice(text).ends_with('}'));
            }
        }
    }
}
