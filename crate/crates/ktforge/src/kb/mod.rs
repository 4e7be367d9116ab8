//! Function-level knowledge base: one indexed, persistent knowledge unit per
//! method or constructor, incrementally updatable by file digest.

pub mod extract;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::model::{digest_text, CallableId, CodeModel, Visibility};
use crate::frontend::parse_units;

pub use extract::{CallSiteInfo, DepInfo, FieldKey, Resolver};

pub const INDEX_FORMAT_VERSION: u32 = 1;

/// One method or constructor with its signature, documentation, and
/// dependency sets; the atom of the project index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeUnit {
    pub callable_id: CallableId,
    pub signature_text: String,
    pub doc_comment: Option<String>,
    pub invoked_methods: BTreeSet<CallableId>,
    pub unresolved_calls: BTreeSet<String>,
    pub accessed_fields: BTreeSet<FieldKey>,
    pub containing_class: String,
    pub visibility: Visibility,
    pub content_digest: String,
}

impl KnowledgeUnit {
    /// Digest over every other field; changes iff any field changes.
    fn compute_digest(&self) -> String {
        let mut blob = String::new();
        blob.push_str(self.callable_id.as_str());
        blob.push('\n');
        blob.push_str(&self.signature_text);
        blob.push('\n');
        if let Some(doc) = &self.doc_comment {
            blob.push_str(doc);
        }
        blob.push('\n');
        for m in &self.invoked_methods {
            blob.push_str(m.as_str());
            blob.push(';');
        }
        blob.push('\n');
        for u in &self.unresolved_calls {
            blob.push_str(u);
            blob.push(';');
        }
        blob.push('\n');
        for f in &self.accessed_fields {
            blob.push_str(&f.class);
            blob.push('#');
            blob.push_str(&f.field);
            blob.push(';');
        }
        blob.push('\n');
        blob.push_str(&self.containing_class);
        blob.push('\n');
        blob.push_str(&format!("{:?}", self.visibility));
        digest_text(&blob)
    }
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot index an empty code model")]
    EmptyModel,
    #[error("index io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed index file {path} at line {line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("unsupported index format version {0}")]
    FormatVersion(u32),
}

/// The project's function-level knowledge base.
///
/// Holds the code model it was built from so downstream passes (call graph,
/// CFG, prompt assembly) can read bodies and spans without re-parsing.
#[derive(Debug, Clone)]
pub struct FunctionIndex {
    pub model: CodeModel,
    pub units: BTreeMap<CallableId, KnowledgeUnit>,
    pub deps: BTreeMap<CallableId, DepInfo>,
    pub simple_name_index: BTreeMap<String, BTreeSet<String>>,
    pub file_digests: BTreeMap<PathBuf, String>,
}

impl FunctionIndex {
    pub fn unit(&self, id: &CallableId) -> Option<&KnowledgeUnit> {
        self.units.get(id)
    }

    /// Qualified names of project classes with this simple name.
    pub fn lookup_simple_class(&self, name: &str) -> BTreeSet<String> {
        self.simple_name_index.get(name).cloned().unwrap_or_default()
    }
}

/// Build the knowledge base from a parsed code model.
pub fn build_index(model: CodeModel) -> Result<FunctionIndex, IndexError> {
    if model.is_empty() {
        return Err(IndexError::EmptyModel);
    }
    let resolver = Resolver::new(&model);

    let dep_list: Vec<(CallableId, DepInfo)> = model
        .callables
        .par_iter()
        .map(|(id, decl)| (id.clone(), extract::extract_deps(&model, &resolver, decl)))
        .collect();

    let mut deps = BTreeMap::new();
    let mut units = BTreeMap::new();
    for (id, dep) in dep_list {
        let decl = &model.callables[&id];
        let mut unit = KnowledgeUnit {
            callable_id: id.clone(),
            signature_text: decl.signature_text.clone(),
            doc_comment: decl.doc_comment.clone(),
            invoked_methods: dep.resolved_calls.iter().map(|c| c.callee.clone()).collect(),
            unresolved_calls: dep.unresolved_calls.clone(),
            accessed_fields: dep.accessed_fields.clone(),
            containing_class: id.class_qname().to_string(),
            visibility: decl.visibility,
            content_digest: String::new(),
        };
        unit.content_digest = unit.compute_digest();
        units.insert(id.clone(), unit);
        deps.insert(id, dep);
    }

    let mut simple_name_index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (qname, class) in &model.classes {
        simple_name_index
            .entry(class.simple_name().to_string())
            .or_default()
            .insert(qname.clone());
    }

    let file_digests = model
        .units
        .iter()
        .map(|(p, u)| (p.clone(), u.content_digest.clone()))
        .collect();

    Ok(FunctionIndex { model, units, deps, simple_name_index, file_digests })
}

/// A set of file edits against the model an index was built from.
#[derive(Debug, Clone, Default)]
pub struct ModelDelta {
    /// New or changed file contents, keyed by model-relative path.
    pub updated: BTreeMap<PathBuf, String>,
    /// Files removed from the project.
    pub removed: BTreeSet<PathBuf>,
}

/// Incrementally update an index.
///
/// Parse results of files whose digest is unchanged are reused; changed and
/// added files are re-parsed; removed files drop their entities. Dependency
/// resolution is re-derived over the merged model, so the result equals
/// `build_index` on the full new model, field by field.
pub fn update_index(index: &FunctionIndex, delta: &ModelDelta) -> Result<FunctionIndex, IndexError> {
    let mut to_parse: Vec<(PathBuf, String)> = Vec::new();
    for (path, text) in &delta.updated {
        if delta.removed.contains(path) {
            continue;
        }
        let unchanged = index
            .file_digests
            .get(path)
            .map(|d| *d == digest_text(text))
            .unwrap_or(false);
        if !unchanged {
            to_parse.push((path.clone(), text.clone()));
        }
    }

    let mut merged = index.model.clone();
    let dirty: BTreeSet<PathBuf> = to_parse
        .iter()
        .map(|(p, _)| p.clone())
        .chain(delta.removed.iter().cloned())
        .collect();

    // Drop all entities owned by dirty files.
    merged.units.retain(|p, _| !dirty.contains(p));
    merged.imports.retain(|p, _| !dirty.contains(p));
    merged.classes.retain(|_, c| !dirty.contains(&c.source_unit));
    merged.callables.retain(|_, c| !dirty.contains(&c.source_unit));
    merged.diagnostics.retain(|d| !dirty.contains(&d.path));

    // Re-parse changed/added files and splice the results in.
    if !to_parse.is_empty() {
        let fresh = parse_units(to_parse);
        merged.units.extend(fresh.units);
        merged.imports.extend(fresh.imports);
        merged.classes.extend(fresh.classes);
        merged.callables.extend(fresh.callables);
        merged.diagnostics.extend(fresh.diagnostics);
        merged.diagnostics.sort_by(|a, b| a.path.cmp(&b.path));
    }

    build_index(merged)
}

// ---------------------------------------------------------------------------
// Persistence: line-delimited JSON, one unit per line, sorted by callable id.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    format_version: u32,
}

/// Serialize the unit table to the persisted line-delimited format.
pub fn render_index(index: &FunctionIndex) -> String {
    let mut out = String::new();
    out.push_str(
        &serde_json::to_string(&IndexHeader { format_version: INDEX_FORMAT_VERSION }).unwrap(),
    );
    out.push('\n');
    for unit in index.units.values() {
        out.push_str(&serde_json::to_string(unit).unwrap());
        out.push('\n');
    }
    out
}

pub fn save_index(index: &FunctionIndex, path: &Path) -> Result<(), IndexError> {
    let mut file = std::fs::File::create(path).map_err(|e| IndexError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    file.write_all(render_index(index).as_bytes()).map_err(|e| IndexError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Load just the persisted unit table (no code model attached).
pub fn load_units(path: &Path) -> Result<BTreeMap<CallableId, KnowledgeUnit>, IndexError> {
    let file = std::fs::File::open(path).map_err(|e| IndexError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut units = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IndexError::Io { path: path.to_path_buf(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            let header: IndexHeader =
                serde_json::from_str(&line).map_err(|e| IndexError::Malformed {
                    path: path.to_path_buf(),
                    line: 1,
                    message: e.to_string(),
                })?;
            if header.format_version != INDEX_FORMAT_VERSION {
                return Err(IndexError::FormatVersion(header.format_version));
            }
            continue;
        }
        let unit: KnowledgeUnit =
            serde_json::from_str(&line).map_err(|e| IndexError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        units.insert(unit.callable_id.clone(), unit);
    }
    Ok(units)
}
