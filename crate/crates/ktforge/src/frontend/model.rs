//! Frontend-agnostic code model: source units, class records, callables.
//!
//! The model is produced by the Java-syntax parser and consumed by the
//! knowledge base, the usage miner, and prompt assembly. It is immutable
//! once built and safe to share read-only across pipeline tasks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Byte-offset range into a source unit's text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Public,
    Protected,
    Package,
    Private,
}

impl Visibility {
    /// Callables reachable from outside the package, used as chain entries.
    pub fn externally_accessible(&self) -> bool {
        matches!(self, Visibility::Public | Visibility::Protected)
    }

    /// Source keyword; empty for package visibility.
    pub fn keyword(&self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::Protected => "protected",
            Visibility::Package => "",
            Visibility::Private => "private",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallableKind {
    Method,
    Constructor,
}

/// Stable identifier for a method or constructor:
/// `<qualified class>#<name>(<param type texts>)`.
///
/// Constructors use the simple class name as `<name>`. Ordered parameter
/// type texts disambiguate overloads.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CallableId(pub String);

impl CallableId {
    pub fn new(class_qname: &str, name: &str, param_types: &[String]) -> Self {
        CallableId(format!("{}#{}({})", class_qname, name, param_types.join(",")))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Qualified name of the class that declares this callable.
    pub fn class_qname(&self) -> &str {
        self.0.split('#').next().unwrap_or(&self.0)
    }

    /// Member name without class or parameter list.
    pub fn member_name(&self) -> &str {
        let rest = self.0.split('#').nth(1).unwrap_or("");
        rest.split('(').next().unwrap_or(rest)
    }
}

impl fmt::Display for CallableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One parsed source file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceUnit {
    pub path: PathBuf,
    pub text: String,
    pub content_digest: String,
}

impl SourceUnit {
    pub fn new(path: PathBuf, text: String) -> Self {
        let content_digest = digest_text(&text);
        SourceUnit { path, text, content_digest }
    }
}

/// Hex-encoded SHA-256 of a text, the digest used throughout the model.
pub fn digest_text(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub declared_type: String,
    pub visibility: Visibility,
    pub is_static: bool,
    pub doc_comment: Option<String>,
    /// Raw declaration span (annotations through semicolon). Declarators of
    /// one multi-variable declaration share the same span.
    pub decl_span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub type_text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CallableDecl {
    pub id: CallableId,
    pub kind: CallableKind,
    pub name: String,
    pub parameters: Vec<Param>,
    pub return_type: String,
    pub doc_comment: Option<String>,
    pub visibility: Visibility,
    pub is_static: bool,
    pub annotations: Vec<String>,
    /// Byte span of the body block, braces included. Absent for
    /// abstract/interface methods.
    pub body_span: Option<Span>,
    pub source_unit: PathBuf,
    /// Parsed body statements; carried in memory only.
    #[serde(skip)]
    pub body: Option<Block>,
    /// Full declaration span including doc comment gap exclusions
    /// (annotations + signature + body).
    pub decl_span: Span,
    /// Signature text as written, e.g. `public long deposit(long amount)`.
    pub signature_text: String,
    /// Modifiers through parameter list and throws clause, annotations
    /// excluded; what a serializer prints before the body.
    pub header_span: Span,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRecord {
    pub qualified_name: String,
    pub package: String,
    pub kind: TypeKind,
    pub doc_comment: Option<String>,
    pub fields: Vec<FieldDecl>,
    pub constructors: Vec<CallableId>,
    pub methods: Vec<CallableId>,
    pub source_unit: PathBuf,
    pub visibility: Visibility,
    /// Header line as written, e.g. `public class Account`.
    pub declaration_text: String,
    pub annotations: Vec<String>,
}

impl ClassRecord {
    pub fn simple_name(&self) -> &str {
        self.qualified_name.rsplit('.').next().unwrap_or(&self.qualified_name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }
}

/// Import declaration of one source unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportDecl {
    /// Dotted path without the trailing `.*` for wildcards.
    pub path: String,
    pub wildcard: bool,
    pub is_static: bool,
}

impl ImportDecl {
    pub fn simple_name(&self) -> Option<&str> {
        if self.wildcard {
            None
        } else {
            self.path.rsplit('.').next()
        }
    }
}

/// Non-fatal parse failure for a single file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontendDiagnostic {
    pub path: PathBuf,
    pub message: String,
    pub offset: Option<usize>,
}

/// The complete parsed view of a subject project.
///
/// All maps are ordered so the model is deterministic regardless of file
/// enumeration order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CodeModel {
    pub units: BTreeMap<PathBuf, SourceUnit>,
    pub classes: BTreeMap<String, ClassRecord>,
    pub callables: BTreeMap<CallableId, CallableDecl>,
    pub imports: BTreeMap<PathBuf, Vec<ImportDecl>>,
    pub diagnostics: Vec<FrontendDiagnostic>,
}

impl CodeModel {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn unit_text(&self, path: &Path) -> Option<&str> {
        self.units.get(path).map(|u| u.text.as_str())
    }

    pub fn callable(&self, id: &CallableId) -> Option<&CallableDecl> {
        self.callables.get(id)
    }

    pub fn class_of(&self, id: &CallableId) -> Option<&ClassRecord> {
        self.classes.get(id.class_qname())
    }

    /// Source text of a callable's body, braces included.
    pub fn body_text(&self, id: &CallableId) -> Option<&str> {
        let decl = self.callables.get(id)?;
        let span = decl.body_span?;
        self.unit_text(&decl.source_unit).map(|t| span.slice(t))
    }

    /// Full declaration text of a callable (signature + body).
    pub fn decl_text(&self, id: &CallableId) -> Option<&str> {
        let decl = self.callables.get(id)?;
        self.unit_text(&decl.source_unit).map(|t| decl.decl_span.slice(t))
    }
}

// ---------------------------------------------------------------------------
// Body AST
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

impl Default for Span {
    fn default() -> Self {
        Span { start: 0, end: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Declarator {
    pub name: String,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwitchCase {
    /// Case label expression text; `None` for `default`.
    pub label: Option<Expr>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatchClause {
    pub param_type: String,
    pub param_name: String,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Stmt {
    Block(Block),
    LocalVar {
        decl_type: String,
        declarators: Vec<Declarator>,
        span: Span,
    },
    ExprStmt {
        expr: Expr,
        span: Span,
    },
    If {
        cond: Expr,
        cond_span: Span,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
        span: Span,
    },
    While {
        cond: Expr,
        cond_span: Span,
        body: Box<Stmt>,
        span: Span,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        cond_span: Option<Span>,
        update: Vec<Expr>,
        body: Box<Stmt>,
        span: Span,
    },
    ForEach {
        var_type: String,
        var_name: String,
        iterable: Expr,
        header_span: Span,
        body: Box<Stmt>,
        span: Span,
    },
    Switch {
        scrutinee: Expr,
        scrutinee_span: Span,
        cases: Vec<SwitchCase>,
        span: Span,
    },
    Return {
        value: Option<Expr>,
        span: Span,
    },
    Throw {
        value: Expr,
        span: Span,
    },
    Try {
        body: Block,
        catches: Vec<CatchClause>,
        finally: Option<Block>,
        span: Span,
    },
    Break {
        span: Span,
    },
    Continue {
        span: Span,
    },
    /// Unrecognized construct consumed as balanced raw text.
    Raw {
        span: Span,
    },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Block(b) => b.span,
            Stmt::LocalVar { span, .. }
            | Stmt::ExprStmt { span, .. }
            | Stmt::If { span, .. }
            | Stmt::While { span, .. }
            | Stmt::For { span, .. }
            | Stmt::ForEach { span, .. }
            | Stmt::Switch { span, .. }
            | Stmt::Return { span, .. }
            | Stmt::Throw { span, .. }
            | Stmt::Try { span, .. }
            | Stmt::Break { span }
            | Stmt::Continue { span }
            | Stmt::Raw { span } => *span,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Expr {
    Literal {
        span: Span,
    },
    Name {
        name: String,
        span: Span,
    },
    This {
        span: Span,
    },
    FieldAccess {
        target: Box<Expr>,
        name: String,
        span: Span,
    },
    MethodCall {
        receiver: Option<Box<Expr>>,
        name: String,
        args: Vec<Expr>,
        span: Span,
    },
    New {
        type_text: String,
        args: Vec<Expr>,
        span: Span,
    },
    Unary {
        op: String,
        operand: Box<Expr>,
        span: Span,
    },
    Binary {
        op: String,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        span: Span,
    },
    Assign {
        target: Box<Expr>,
        op: String,
        value: Box<Expr>,
        span: Span,
    },
    InstanceOf {
        value: Box<Expr>,
        type_text: String,
        span: Span,
    },
    Cast {
        type_text: String,
        value: Box<Expr>,
        span: Span,
    },
    Index {
        target: Box<Expr>,
        index: Box<Expr>,
        span: Span,
    },
    Ternary {
        cond: Box<Expr>,
        then_value: Box<Expr>,
        else_value: Box<Expr>,
        span: Span,
    },
    ArrayInit {
        elements: Vec<Expr>,
        span: Span,
    },
    /// Anything the expression grammar does not cover (lambdas, method refs).
    Raw {
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Literal { span }
            | Expr::Name { span, .. }
            | Expr::This { span }
            | Expr::FieldAccess { span, .. }
            | Expr::MethodCall { span, .. }
            | Expr::New { span, .. }
            | Expr::Unary { span, .. }
            | Expr::Binary { span, .. }
            | Expr::Assign { span, .. }
            | Expr::InstanceOf { span, .. }
            | Expr::Cast { span, .. }
            | Expr::Index { span, .. }
            | Expr::Ternary { span, .. }
            | Expr::ArrayInit { span, .. }
            | Expr::Raw { span } => *span,
        }
    }

    /// Visit this expression and all sub-expressions, pre-order.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Expr)) {
        visit(self);
        match self {
            Expr::Literal { .. } | Expr::Name { .. } | Expr::This { .. } | Expr::Raw { .. } => {}
            Expr::FieldAccess { target, .. } => target.walk(visit),
            Expr::MethodCall { receiver, args, .. } => {
                if let Some(r) = receiver {
                    r.walk(visit);
                }
                for a in args {
                    a.walk(visit);
                }
            }
            Expr::New { args, .. } => {
                for a in args {
                    a.walk(visit);
                }
            }
            Expr::Unary { operand, .. } => operand.walk(visit),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.walk(visit);
                rhs.walk(visit);
            }
            Expr::Assign { target, value, .. } => {
                target.walk(visit);
                value.walk(visit);
            }
            Expr::InstanceOf { value, .. } => value.walk(visit),
            Expr::Cast { value, .. } => value.walk(visit),
            Expr::Index { target, index, .. } => {
                target.walk(visit);
                index.walk(visit);
            }
            Expr::Ternary { cond, then_value, else_value, .. } => {
                cond.walk(visit);
                then_value.walk(visit);
                else_value.walk(visit);
            }
            Expr::ArrayInit { elements, .. } => {
                for e in elements {
                    e.walk(visit);
                }
            }
        }
    }
}

/// Strip generics, array markers, and package qualifiers from a type text,
/// leaving the simple base name: `java.util.Map<String, Foo>[]` -> `Map`.
pub fn base_type_name(type_text: &str) -> &str {
    let no_generic = match type_text.find('<') {
        Some(i) => &type_text[..i],
        None => type_text,
    };
    let no_array = no_generic.trim_end_matches(|c| c == '[' || c == ']' || c == ' ');
    no_array.rsplit('.').next().unwrap_or(no_array).trim()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn callable_id_parts() {
        let id = CallableId::new("com.acme.Account", "deposit", &["long".into()]);
        assert_eq!(id.as_str(), "com.acme.Account#deposit(long)");
        assert_eq!(id.class_qname(), "com.acme.Account");
        assert_eq!(id.member_name(), "deposit");
    }

    #[test]
    fn digest_is_deterministic() {
        assert_eq!(digest_text("abc"), digest_text("abc"));
        assert_ne!(digest_text("abc"), digest_text("abd"));
    }

    #[test]
    fn base_type_names() {
        assert_eq!(base_type_name("Map<String, List<Foo>>"), "Map");
        assert_eq!(base_type_name("int[]"), "int");
        assert_eq!(base_type_name("java.util.List<Foo>"), "List");
        assert_eq!(base_type_name("Account"), "Account");
    }
}
