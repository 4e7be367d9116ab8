//! Syntactic dependency extraction: invoked methods and accessed fields per
//! callable, with name-based resolution against the project's class table.
//!
//! Resolution is best-effort. Receiver types are inferred from parameters,
//! local declarations, and field types; calls through receivers that cannot
//! be resolved to an in-project class are kept as raw text in a separate
//! unresolved set, never dropped.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::frontend::model::{
    base_type_name, CallableDecl, CallableId, ClassRecord, CodeModel, Expr, Span, Stmt,
};

/// `(declaring class, field name)` so same-named fields never collide.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldKey {
    pub class: String,
    pub field: String,
}

/// One resolved call site inside a callable body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSiteInfo {
    pub callee: CallableId,
    pub span: Span,
}

/// Dependency extraction result for one callable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepInfo {
    /// Resolved call sites in source order.
    pub resolved_calls: Vec<CallSiteInfo>,
    /// Raw text of calls whose target is not an in-project callable.
    pub unresolved_calls: std::collections::BTreeSet<String>,
    /// Fields read or written, keyed by declaring class.
    pub accessed_fields: std::collections::BTreeSet<FieldKey>,
}

/// Name-based type and member resolution over the project class table.
pub struct Resolver<'m> {
    model: &'m CodeModel,
    simple_names: BTreeMap<String, Vec<String>>,
}

impl<'m> Resolver<'m> {
    pub fn new(model: &'m CodeModel) -> Self {
        let mut simple_names: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for qname in model.classes.keys() {
            let simple = qname.rsplit('.').next().unwrap_or(qname);
            simple_names.entry(simple.to_string()).or_default().push(qname.clone());
        }
        Resolver { model, simple_names }
    }

    /// Resolve a type name as written in `file` (package `pkg`, enclosing
    /// class `enclosing`) to a project class.
    pub fn resolve_type(
        &self,
        file: &Path,
        pkg: &str,
        enclosing: &str,
        name: &str,
    ) -> Option<&'m ClassRecord> {
        // fully qualified
        if name.contains('.') {
            if let Some(c) = self.model.classes.get(name) {
                return Some(c);
            }
        }
        let simple = base_type_name(name);
        // nested sibling or self: Enclosing.Simple, then walking outwards
        let mut scope = enclosing.to_string();
        loop {
            let candidate = format!("{}.{}", scope, simple);
            if let Some(c) = self.model.classes.get(&candidate) {
                return Some(c);
            }
            if scope.rsplit('.').next() == Some(simple) {
                if let Some(c) = self.model.classes.get(&scope) {
                    return Some(c);
                }
            }
            match scope.rfind('.') {
                Some(i) => scope.truncate(i),
                None => break,
            }
        }
        // single-type import
        if let Some(imports) = self.model.imports.get(file) {
            for imp in imports {
                if !imp.is_static && imp.simple_name() == Some(simple) {
                    if let Some(c) = self.model.classes.get(&imp.path) {
                        return Some(c);
                    }
                }
            }
        }
        // same package
        if !pkg.is_empty() {
            if let Some(c) = self.model.classes.get(&format!("{}.{}", pkg, simple)) {
                return Some(c);
            }
        } else if let Some(c) = self.model.classes.get(simple) {
            return Some(c);
        }
        // wildcard imports
        if let Some(imports) = self.model.imports.get(file) {
            for imp in imports {
                if imp.wildcard {
                    if let Some(c) = self.model.classes.get(&format!("{}.{}", imp.path, simple)) {
                        return Some(c);
                    }
                }
            }
        }
        // unique simple name across the project
        match self.simple_names.get(simple) {
            Some(qnames) if qnames.len() == 1 => self.model.classes.get(&qnames[0]),
            _ => None,
        }
    }

    /// Method of `class` matching name and arity. Among same-arity overloads
    /// the lexicographically first id wins, keeping extraction deterministic.
    pub fn resolve_method(
        &self,
        class: &ClassRecord,
        name: &str,
        arity: usize,
    ) -> Option<&'m CallableDecl> {
        class
            .methods
            .iter()
            .filter_map(|id| self.model.callables.get(id))
            .filter(|c| c.name == name && c.parameters.len() == arity)
            .min_by(|a, b| a.id.cmp(&b.id))
    }

    pub fn resolve_constructor(
        &self,
        class: &ClassRecord,
        arity: usize,
    ) -> Option<&'m CallableDecl> {
        class
            .constructors
            .iter()
            .filter_map(|id| self.model.callables.get(id))
            .filter(|c| c.parameters.len() == arity)
            .min_by(|a, b| a.id.cmp(&b.id))
    }
}

/// Local variable typing environment for one callable body: parameters,
/// local declarations, enhanced-for variables, and catch parameters.
/// The first declaration of a name wins.
pub fn local_type_env(decl: &CallableDecl) -> BTreeMap<String, String> {
    let mut env = BTreeMap::new();
    for p in &decl.parameters {
        env.entry(p.name.clone()).or_insert_with(|| p.type_text.clone());
    }
    if let Some(body) = &decl.body {
        collect_locals(&body.stmts, &mut env);
    }
    env
}

fn collect_locals(stmts: &[Stmt], env: &mut BTreeMap<String, String>) {
    for stmt in stmts {
        match stmt {
            Stmt::Block(b) => collect_locals(&b.stmts, env),
            Stmt::LocalVar { decl_type, declarators, .. } => {
                for d in declarators {
                    env.entry(d.name.clone()).or_insert_with(|| decl_type.clone());
                }
            }
            Stmt::If { then_branch, else_branch, .. } => {
                collect_locals(std::slice::from_ref(then_branch), env);
                if let Some(e) = else_branch {
                    collect_locals(std::slice::from_ref(e), env);
                }
            }
            Stmt::While { body, .. } => collect_locals(std::slice::from_ref(body), env),
            Stmt::For { init, body, .. } => {
                if let Some(i) = init {
                    collect_locals(std::slice::from_ref(i), env);
                }
                collect_locals(std::slice::from_ref(body), env);
            }
            Stmt::ForEach { var_type, var_name, body, .. } => {
                env.entry(var_name.clone()).or_insert_with(|| var_type.clone());
                collect_locals(std::slice::from_ref(body), env);
            }
            Stmt::Switch { cases, .. } => {
                for c in cases {
                    collect_locals(&c.body, env);
                }
            }
            Stmt::Try { body, catches, finally, .. } => {
                collect_locals(&body.stmts, env);
                for c in catches {
                    env.entry(c.param_name.clone()).or_insert_with(|| c.param_type.clone());
                    collect_locals(&c.body.stmts, env);
                }
                if let Some(f) = finally {
                    collect_locals(&f.stmts, env);
                }
            }
            _ => {}
        }
    }
}

/// Extract dependency info for one callable.
pub fn extract_deps(model: &CodeModel, resolver: &Resolver<'_>, decl: &CallableDecl) -> DepInfo {
    let mut out = DepInfo::default();
    let Some(body) = &decl.body else { return out };
    let Some(class) = model.classes.get(decl.id.class_qname()) else { return out };
    let text = model.unit_text(&decl.source_unit).unwrap_or("");
    let env = local_type_env(decl);
    let mut cx = ExtractCx { model, resolver, decl, class, text, env, out: &mut out };
    walk_stmts(&body.stmts, &mut |expr| cx.visit_expr(expr));
    out.resolved_calls.sort_by_key(|c| c.span.start);
    out
}

/// Visit every expression in a statement tree, pre-order.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], visit: &mut dyn FnMut(&'a Expr)) {
    for stmt in stmts {
        walk_stmt(stmt, visit);
    }
}

pub fn walk_stmt<'a>(stmt: &'a Stmt, visit: &mut dyn FnMut(&'a Expr)) {
    match stmt {
        Stmt::Block(b) => walk_stmts(&b.stmts, visit),
        Stmt::LocalVar { declarators, .. } => {
            for d in declarators {
                if let Some(init) = &d.init {
                    init.walk(visit);
                }
            }
        }
        Stmt::ExprStmt { expr, .. } => expr.walk(visit),
        Stmt::If { cond, then_branch, else_branch, .. } => {
            cond.walk(visit);
            walk_stmt(then_branch, visit);
            if let Some(e) = else_branch {
                walk_stmt(e, visit);
            }
        }
        Stmt::While { cond, body, .. } => {
            cond.walk(visit);
            walk_stmt(body, visit);
        }
        Stmt::For { init, cond, update, body, .. } => {
            if let Some(i) = init {
                walk_stmt(i, visit);
            }
            if let Some(c) = cond {
                c.walk(visit);
            }
            for u in update {
                u.walk(visit);
            }
            walk_stmt(body, visit);
        }
        Stmt::ForEach { iterable, body, .. } => {
            iterable.walk(visit);
            walk_stmt(body, visit);
        }
        Stmt::Switch { scrutinee, cases, .. } => {
            scrutinee.walk(visit);
            for c in cases {
                walk_stmts(&c.body, visit);
            }
        }
        Stmt::Return { value, .. } => {
            if let Some(v) = value {
                v.walk(visit);
            }
        }
        Stmt::Throw { value, .. } => value.walk(visit),
        Stmt::Try { body, catches, finally, .. } => {
            walk_stmts(&body.stmts, visit);
            for c in catches {
                walk_stmts(&c.body.stmts, visit);
            }
            if let Some(f) = finally {
                walk_stmts(&f.stmts, visit);
            }
        }
        Stmt::Break { .. } | Stmt::Continue { .. } | Stmt::Raw { .. } => {}
    }
}

struct ExtractCx<'a, 'm> {
    model: &'m CodeModel,
    resolver: &'a Resolver<'m>,
    decl: &'m CallableDecl,
    class: &'m ClassRecord,
    text: &'m str,
    env: BTreeMap<String, String>,
    out: &'a mut DepInfo,
}

impl<'a, 'm> ExtractCx<'a, 'm> {
    fn visit_expr(&mut self, expr: &Expr) {
        match expr {
            Expr::MethodCall { receiver, name, args, span } => {
                self.visit_call(receiver.as_deref(), name, args.len(), *span);
            }
            Expr::New { type_text, args, span } => {
                self.visit_new(type_text, args.len(), *span);
            }
            Expr::Name { name, .. } => {
                self.visit_name(name);
            }
            Expr::FieldAccess { target, name, .. } => {
                self.visit_field_access(target, name);
            }
            _ => {}
        }
    }

    fn file(&self) -> &Path {
        &self.decl.source_unit
    }

    fn raw_text(&self, span: Span) -> String {
        let s = span.slice(self.text);
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }

    fn add_resolved(&mut self, callee: &CallableDecl, span: Span) {
        self.out.resolved_calls.push(CallSiteInfo { callee: callee.id.clone(), span });
    }

    fn add_unresolved(&mut self, raw: String) {
        self.out.unresolved_calls.insert(raw);
    }

    fn receiver_class(&self, receiver: &Expr) -> Option<&'m ClassRecord> {
        match receiver {
            Expr::This { .. } => self.model.classes.get(self.decl.id.class_qname()),
            Expr::Name { name, .. } => {
                if let Some(type_text) = self.env.get(name) {
                    return self.resolve_type_name(type_text);
                }
                if let Some(field) = self.class.field(name) {
                    let t = field.declared_type.clone();
                    return self.resolve_type_name(&t);
                }
                // static access via class name
                self.resolve_type_name(name)
            }
            Expr::FieldAccess { target, name, .. } => {
                // `this.f` -> type of field f; `a.b.C` -> qualified class
                if matches!(target.as_ref(), Expr::This { .. }) {
                    if let Some(field) = self.class.field(name) {
                        let t = field.declared_type.clone();
                        return self.resolve_type_name(&t);
                    }
                    return None;
                }
                let raw = self.raw_text(receiver.span()).replace(' ', "");
                if raw.contains('.') {
                    if let Some(c) = self.model.classes.get(&raw) {
                        return Some(c);
                    }
                }
                // field of a receiver class: `obj.field.m()`
                if let Some(owner) = self.receiver_class(target) {
                    if let Some(field) = owner.field(name) {
                        let t = field.declared_type.clone();
                        return self.resolve_type_name(&t);
                    }
                }
                None
            }
            Expr::Cast { type_text, .. } => self.resolve_type_name(type_text),
            Expr::MethodCall { .. } => {
                // one-level chaining through a resolved call's return type
                let resolved = self.resolve_call_quiet(receiver)?;
                let ret = resolved.return_type.clone();
                self.resolve_type_name(&ret)
            }
            _ => None,
        }
    }

    fn resolve_type_name(&self, type_text: &str) -> Option<&'m ClassRecord> {
        if type_text.contains("[]") {
            return None;
        }
        self.resolver.resolve_type(
            self.file(),
            &self.class.package,
            self.decl.id.class_qname(),
            type_text,
        )
    }

    /// Resolve a call expression without recording anything.
    fn resolve_call_quiet(&self, expr: &Expr) -> Option<&'m CallableDecl> {
        let Expr::MethodCall { receiver, name, args, .. } = expr else { return None };
        match receiver {
            None => self.resolver.resolve_method(self.class, name, args.len()),
            Some(r) => {
                let class = self.receiver_class(r)?;
                self.resolver.resolve_method(class, name, args.len())
            }
        }
    }

    fn visit_call(&mut self, receiver: Option<&Expr>, name: &str, arity: usize, span: Span) {
        match receiver {
            None => {
                if name == "this" {
                    if let Some(ctor) = self.resolver.resolve_constructor(self.class, arity) {
                        self.add_resolved(ctor, span);
                    } else {
                        self.add_unresolved("this".to_string());
                    }
                    return;
                }
                if name == "super" {
                    self.add_unresolved("super".to_string());
                    return;
                }
                if let Some(m) = self.resolver.resolve_method(self.class, name, arity) {
                    self.add_resolved(m, span);
                } else {
                    self.add_unresolved(name.to_string());
                }
            }
            Some(r) => {
                if let Some(class) = self.receiver_class(r) {
                    if let Some(m) = self.resolver.resolve_method(class, name, arity) {
                        self.add_resolved(m, span);
                        return;
                    }
                }
                let recv_text = self.raw_text(r.span());
                self.add_unresolved(format!("{}.{}", recv_text, name));
            }
        }
    }

    fn visit_new(&mut self, type_text: &str, arity: usize, span: Span) {
        if type_text.contains("[]") {
            return; // array creation, not a constructor call
        }
        if let Some(class) = self.resolve_type_name(type_text) {
            if let Some(ctor) = self.resolver.resolve_constructor(class, arity) {
                self.add_resolved(ctor, span);
                return;
            }
        }
        self.add_unresolved(format!("new {}", base_type_name(type_text)));
    }

    /// A bare name that is not a local and names a field of the containing
    /// class is a field access.
    fn visit_name(&mut self, name: &str) {
        if self.env.contains_key(name) {
            return;
        }
        if self.class.field(name).is_some() {
            self.out.accessed_fields.insert(FieldKey {
                class: self.class.qualified_name.clone(),
                field: name.to_string(),
            });
        }
    }

    fn visit_field_access(&mut self, target: &Expr, name: &str) {
        let owner = match target {
            Expr::This { .. } => self.model.classes.get(self.decl.id.class_qname()),
            _ => self.receiver_class(target),
        };
        if let Some(owner) = owner {
            if owner.field(name).is_some() {
                self.out.accessed_fields.insert(FieldKey {
                    class: owner.qualified_name.clone(),
                    field: name.to_string(),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_units;
    use std::path::PathBuf;

    fn model_of(files: &[(&str, &str)]) -> CodeModel {
        parse_units(
            files
                .iter()
                .map(|(p, t)| (PathBuf::from(p), t.to_string()))
                .collect(),
        )
    }

    fn deps(model: &CodeModel, id: &str) -> DepInfo {
        let resolver = Resolver::new(model);
        let decl = model.callables.get(&CallableId(id.to_string())).expect("callable");
        extract_deps(model, &resolver, decl)
    }

    #[test]
    fn same_class_call_and_this_field() {
        let m = model_of(&[(
            "A.java",
            r#"
            package p;
            public class A {
                private long balance;
                void validateAccount() { }
                void updateBalance() {
                    validateAccount();
                    balance = balance + 1;
                }
            }
            "#,
        )]);
        let d = deps(&m, "p.A#updateBalance()");
        assert_eq!(d.resolved_calls.len(), 1);
        assert_eq!(d.resolved_calls[0].callee.as_str(), "p.A#validateAccount()");
        assert!(d
            .accessed_fields
            .contains(&FieldKey { class: "p.A".into(), field: "balance".into() }));
    }

    #[test]
    fn empty_body_has_empty_deps() {
        let m = model_of(&[("A.java", "public class A { void empty() { } }")]);
        let d = deps(&m, "A#empty()");
        assert!(d.resolved_calls.is_empty());
        assert!(d.unresolved_calls.is_empty());
        assert!(d.accessed_fields.is_empty());
    }

    #[test]
    fn receiver_type_from_parameter() {
        let m = model_of(&[
            ("A.java", "package p;\npublic class A { public long get() { return 1L; } }"),
            (
                "B.java",
                "package p;\npublic class B { long use(A a) { return a.get(); } }",
            ),
        ]);
        let d = deps(&m, "p.B#use(A)");
        assert_eq!(d.resolved_calls[0].callee.as_str(), "p.A#get()");
    }

    #[test]
    fn external_receiver_goes_to_unresolved() {
        let m = model_of(&[(
            "A.java",
            "public class A { int len(String s) { return s.length(); } }",
        )]);
        let d = deps(&m, "A#len(String)");
        assert!(d.resolved_calls.is_empty());
        assert!(d.unresolved_calls.contains("s.length"));
    }

    #[test]
    fn constructor_resolution_by_arity() {
        let m = model_of(&[(
            "A.java",
            r#"
            package p;
            public class A {
                public A(int x) { }
                public A(int x, int y) { }
                static A make() { return new A(1, 2); }
            }
            "#,
        )]);
        let d = deps(&m, "p.A#make()");
        assert_eq!(d.resolved_calls[0].callee.as_str(), "p.A#A(int,int)");
    }

    #[test]
    fn static_field_access_through_class_name() {
        let m = model_of(&[
            (
                "A.java",
                "package p;\npublic class A { public static final long MAX = 5L; }",
            ),
            (
                "B.java",
                "package p;\npublic class B { long f() { return A.MAX; } }",
            ),
        ]);
        let d = deps(&m, "p.B#f()");
        assert!(d
            .accessed_fields
            .contains(&FieldKey { class: "p.A".into(), field: "MAX".into() }));
    }

    #[test]
    fn locals_shadow_fields() {
        let m = model_of(&[(
            "A.java",
            r#"
            public class A {
                int value;
                int m() {
                    int value = 3;
                    return value;
                }
                int n() { return value; }
            }
            "#,
        )]);
        let d_m = deps(&m, "A#m()");
        assert!(d_m.accessed_fields.is_empty());
        let d_n = deps(&m, "A#n()");
        assert_eq!(d_n.accessed_fields.len(), 1);
    }

    #[test]
    fn ambiguous_simple_name_without_import_is_unresolved() {
        let m = model_of(&[
            ("p1/Parser.java", "package p1;\npublic class Parser { public void run() {} }"),
            ("p2/Parser.java", "package p2;\npublic class Parser { public void run() {} }"),
            (
                "q/User.java",
                "package q;\npublic class User { void m(Parser p) { p.run(); } }",
            ),
        ]);
        let d = deps(&m, "q.User#m(Parser)");
        assert!(d.resolved_calls.is_empty());
        assert!(d.unresolved_calls.contains("p.run"));
    }

    #[test]
    fn import_disambiguates_simple_name() {
        let m = model_of(&[
            ("p1/Parser.java", "package p1;\npublic class Parser { public void run() {} }"),
            ("p2/Parser.java", "package p2;\npublic class Parser { public void run() {} }"),
            (
                "q/User.java",
                "package q;\nimport p2.Parser;\npublic class User { void m(Parser p) { p.run(); } }",
            ),
        ]);
        let d = deps(&m, "q.User#m(Parser)");
        assert_eq!(d.resolved_calls[0].callee.as_str(), "p2.Parser#run()");
    }
}
