//! Recursive-descent parser for Java-syntax source files.
//!
//! Produces the frontend-agnostic code model: flattened class records,
//! callable declarations with parsed bodies, and doc comments attached by
//! immediate adjacency. Constructs outside the supported statement grammar
//! degrade to `Stmt::Raw` with balanced-token consumption, so analysis
//! keeps going instead of failing the file.

use std::path::{Path, PathBuf};

use super::lexer::{lex, DocComment, Token, TokenKind};
use super::model::{
    Block, CallableDecl, CallableId, CallableKind, CatchClause, ClassRecord, Declarator, Expr,
    FieldDecl, ImportDecl, Param, Span, Stmt, SwitchCase, TypeKind, Visibility,
};

#[derive(Debug)]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

impl ParseError {
    fn new(message: impl Into<String>, offset: usize) -> Self {
        ParseError { message: message.into(), offset }
    }
}

/// Result of parsing one source file.
#[derive(Debug, Default)]
pub struct ParsedFile {
    pub package: String,
    pub imports: Vec<ImportDecl>,
    pub classes: Vec<ClassRecord>,
    pub callables: Vec<CallableDecl>,
}

pub fn parse_source(path: &Path, text: &str) -> Result<ParsedFile, ParseError> {
    let lexed = lex(text).map_err(|e| ParseError::new(e.message, e.offset))?;
    let mut parser = Parser {
        text,
        path: path.to_path_buf(),
        tokens: lexed.tokens,
        docs: lexed.doc_comments,
        pos: 0,
        out: ParsedFile::default(),
    };
    parser.parse_file()?;
    Ok(parser.out)
}

/// Strip `/** */` delimiters and leading asterisks from a doc block.
pub fn strip_doc_markup(raw: &str) -> String {
    let inner = raw
        .trim_start_matches("/**")
        .trim_end_matches("*/")
        .trim_matches(|c: char| c.is_whitespace());
    let lines: Vec<String> = inner
        .lines()
        .map(|l| {
            let l = l.trim_start();
            let l = l.strip_prefix('*').unwrap_or(l);
            l.trim().to_string()
        })
        .collect();
    lines.join("\n").trim().to_string()
}

struct Modifiers {
    visibility: Visibility,
    is_static: bool,
    is_abstract: bool,
    /// Span start of the first modifier keyword, when any was written.
    first_modifier_offset: Option<usize>,
}

struct Parser<'a> {
    text: &'a str,
    path: PathBuf,
    tokens: Vec<Token>,
    docs: Vec<DocComment>,
    pos: usize,
    out: ParsedFile,
}

impl<'a> Parser<'a> {
    // -- token helpers ------------------------------------------------------

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn peek_text(&self) -> &str {
        self.peek().map(|t| t.text.as_str()).unwrap_or("")
    }

    fn at(&self, text: &str) -> bool {
        self.peek_text() == text
    }

    fn at_any(&self, texts: &[&str]) -> bool {
        texts.contains(&self.peek_text())
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> Result<Token, ParseError> {
        if self.at(text) {
            Ok(self.bump())
        } else {
            Err(self.err_here(format!("expected `{}`, found `{}`", text, self.peek_text())))
        }
    }

    fn offset(&self) -> usize {
        self.peek().map(|t| t.span.start).unwrap_or(self.text.len())
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].span.end
        }
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(message, self.offset())
    }

    fn slice(&self, span: Span) -> &'a str {
        span.slice(self.text)
    }

    fn collapsed_slice(&self, start: usize, end: usize) -> String {
        collapse_ws(&self.text[start..end])
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    // -- doc attachment -----------------------------------------------------

    /// Doc block whose end is separated from `decl_start` by whitespace only.
    fn doc_before(&self, decl_start: usize) -> Option<String> {
        let doc = self
            .docs
            .iter()
            .rev()
            .find(|d| d.span.end <= decl_start)?;
        let gap = &self.text[doc.span.end..decl_start];
        if gap.chars().all(|c| c.is_whitespace()) {
            Some(strip_doc_markup(&doc.text))
        } else {
            None
        }
    }

    // -- file level ---------------------------------------------------------

    fn parse_file(&mut self) -> Result<(), ParseError> {
        if self.at("package") {
            self.bump();
            let start = self.offset();
            while !self.at(";") && !self.at_eof() {
                self.bump();
            }
            self.out.package = self.collapsed_slice(start, self.prev_end()).replace(' ', "");
            self.expect(";")?;
        }
        while self.at("import") {
            self.bump();
            let is_static = self.eat("static");
            let start = self.offset();
            let mut wildcard = false;
            while !self.at(";") && !self.at_eof() {
                if self.at("*") {
                    wildcard = true;
                }
                self.bump();
            }
            let mut raw = self.collapsed_slice(start, self.prev_end()).replace(' ', "");
            if wildcard {
                raw = raw.trim_end_matches(".*").to_string();
            }
            self.out.imports.push(ImportDecl { path: raw, wildcard, is_static });
            self.expect(";")?;
        }
        while !self.at_eof() {
            if self.eat(";") {
                continue;
            }
            self.parse_type_decl(None)?;
        }
        Ok(())
    }

    fn skip_annotations(&mut self, collected: Option<&mut Vec<String>>) {
        let mut sink = Vec::new();
        let out = collected.unwrap_or(&mut sink);
        while self.at("@") {
            let start = self.offset();
            self.bump();
            // dotted annotation name
            while matches!(self.peek().map(|t| t.kind), Some(TokenKind::Ident | TokenKind::Keyword))
            {
                self.bump();
                if !self.eat(".") {
                    break;
                }
            }
            if self.at("(") {
                self.skip_balanced("(", ")");
            }
            out.push(self.collapsed_slice(start, self.prev_end()));
        }
    }

    fn skip_balanced(&mut self, open: &str, close: &str) {
        if !self.at(open) {
            return;
        }
        let mut depth = 0usize;
        while !self.at_eof() {
            if self.at(open) {
                depth += 1;
            } else if self.at(close) {
                depth -= 1;
                self.bump();
                if depth == 0 {
                    return;
                }
                continue;
            }
            self.bump();
        }
    }

    /// Skip a balanced generic argument list starting at `<`. Handles `>>`
    /// and `>>>` closing multiple levels at once.
    fn skip_generics(&mut self) {
        if !self.at("<") {
            return;
        }
        let mut depth = 0isize;
        while !self.at_eof() {
            match self.peek_text() {
                "<" => depth += 1,
                ">" => depth -= 1,
                ">>" => depth -= 2,
                ">>>" => depth -= 3,
                _ => {}
            }
            self.bump();
            if depth <= 0 {
                return;
            }
        }
    }

    fn parse_modifiers(&mut self, annotations: &mut Vec<String>) -> Modifiers {
        let mut m = Modifiers {
            visibility: Visibility::Package,
            is_static: false,
            is_abstract: false,
            first_modifier_offset: None,
        };
        loop {
            self.skip_annotations(Some(annotations));
            match self.peek_text() {
                "public" => m.visibility = Visibility::Public,
                "protected" => m.visibility = Visibility::Protected,
                "private" => m.visibility = Visibility::Private,
                "static" => m.is_static = true,
                "abstract" => m.is_abstract = true,
                "final" | "synchronized" | "native" | "strictfp" | "transient" | "volatile"
                | "default" => {}
                _ => break,
            }
            let tok = self.bump();
            m.first_modifier_offset.get_or_insert(tok.span.start);
        }
        m
    }

    /// A type reference: primitive or dotted identifier chain with optional
    /// generics and array suffixes. Returns whitespace-collapsed source text.
    fn parse_type_text(&mut self) -> Result<String, ParseError> {
        let start = self.offset();
        match self.peek_text() {
            "void" | "int" | "long" | "short" | "byte" | "char" | "boolean" | "float"
            | "double" => {
                self.bump();
            }
            _ => {
                if self.peek().map(|t| t.kind) != Some(TokenKind::Ident) {
                    return Err(self.err_here(format!(
                        "expected type, found `{}`",
                        self.peek_text()
                    )));
                }
                self.bump();
                while self.at(".") && self.peek_at(1).map(|t| t.kind) == Some(TokenKind::Ident) {
                    self.bump();
                    self.bump();
                }
                if self.at("<") {
                    self.skip_generics();
                }
            }
        }
        loop {
            if self.at("[") && self.peek_at(1).map(|t| t.text.as_str()) == Some("]") {
                self.bump();
                self.bump();
            } else if self.at("...") {
                self.bump();
            } else {
                break;
            }
        }
        Ok(self.collapsed_slice(start, self.prev_end()))
    }

    fn looks_like_type(&self) -> bool {
        matches!(
            self.peek_text(),
            "void" | "int" | "long" | "short" | "byte" | "char" | "boolean" | "float" | "double"
        ) || self.peek().map(|t| t.kind) == Some(TokenKind::Ident)
    }

    // -- type declarations --------------------------------------------------

    fn parse_type_decl(&mut self, enclosing: Option<&str>) -> Result<(), ParseError> {
        let decl_start = self.offset();
        let mut annotations = Vec::new();
        let mods = self.parse_modifiers(&mut annotations);
        let vis = mods.visibility;
        let kind = match self.peek_text() {
            "class" => TypeKind::Class,
            "interface" => TypeKind::Interface,
            "enum" => TypeKind::Enum,
            other => {
                return Err(self.err_here(format!("expected type declaration, found `{}`", other)))
            }
        };
        let header_start = mods.first_modifier_offset.unwrap_or_else(|| self.offset());
        self.bump();
        let name_tok = self.bump();
        if name_tok.kind != TokenKind::Ident {
            return Err(ParseError::new("expected type name", name_tok.span.start));
        }
        let simple_name = name_tok.text.clone();
        if self.at("<") {
            self.skip_generics();
        }
        // extends / implements clauses, kept only in the header text
        while !self.at("{") && !self.at_eof() {
            if self.at("<") {
                self.skip_generics();
            } else {
                self.bump();
            }
        }
        let header_end = self.prev_end();
        let declaration_text = self.collapsed_slice(header_start, header_end);

        let qualified_name = match enclosing {
            Some(outer) => format!("{}.{}", outer, simple_name),
            None if self.out.package.is_empty() => simple_name.clone(),
            None => format!("{}.{}", self.out.package, simple_name),
        };

        let doc_comment = self.doc_before(decl_start);

        let mut record = ClassRecord {
            qualified_name: qualified_name.clone(),
            package: self.out.package.clone(),
            kind,
            doc_comment,
            fields: Vec::new(),
            constructors: Vec::new(),
            methods: Vec::new(),
            source_unit: self.path.clone(),
            visibility: vis,
            declaration_text,
            annotations,
        };

        self.expect("{")?;
        if kind == TypeKind::Enum {
            self.parse_enum_constants(&mut record)?;
        }
        while !self.at("}") && !self.at_eof() {
            if self.eat(";") {
                continue;
            }
            self.parse_member(&mut record, &simple_name, &qualified_name)?;
        }
        self.expect("}")?;
        self.out.classes.push(record);
        Ok(())
    }

    fn parse_enum_constants(&mut self, record: &mut ClassRecord) -> Result<(), ParseError> {
        // Constant list runs until `;` or the closing brace.
        loop {
            self.skip_annotations(None);
            if self.at("}") || self.at(";") {
                break;
            }
            let tok = self.bump();
            if tok.kind != TokenKind::Ident {
                return Err(ParseError::new("expected enum constant", tok.span.start));
            }
            record.fields.push(FieldDecl {
                name: tok.text.clone(),
                declared_type: record.qualified_name.rsplit('.').next().unwrap().to_string(),
                visibility: Visibility::Public,
                is_static: true,
                doc_comment: None,
                decl_span: tok.span,
            });
            if self.at("(") {
                self.skip_balanced("(", ")");
            }
            if self.at("{") {
                self.skip_balanced("{", "}");
            }
            if !self.eat(",") {
                break;
            }
        }
        self.eat(";");
        Ok(())
    }

    fn parse_member(
        &mut self,
        record: &mut ClassRecord,
        simple_name: &str,
        qualified_name: &str,
    ) -> Result<(), ParseError> {
        let decl_start = self.offset();
        let mut annotations = Vec::new();
        let mods = self.parse_modifiers(&mut annotations);
        let (vis, is_static, is_abstract) = (mods.visibility, mods.is_static, mods.is_abstract);
        let header_start = mods.first_modifier_offset.unwrap_or_else(|| self.offset());

        // nested type
        if self.at_any(&["class", "interface", "enum"]) {
            // Re-parse from here as a type declaration; modifiers already
            // consumed, so pass visibility through a small detour: nested
            // decls re-read no modifiers and default to package visibility,
            // so patch afterwards.
            let before = self.out.classes.len();
            self.parse_nested_type(qualified_name, vis)?;
            debug_assert!(self.out.classes.len() > before);
            return Ok(());
        }

        // initializer block
        if self.at("{") {
            self.skip_balanced("{", "}");
            return Ok(());
        }

        // generic method type parameters
        if self.at("<") {
            self.skip_generics();
        }

        let doc_comment = self.doc_before(decl_start);

        // constructor?
        if self.peek_text() == simple_name
            && self.peek_at(1).map(|t| t.text.as_str()) == Some("(")
        {
            let name_tok = self.bump();
            let sig_end_probe = name_tok.span.end;
            let params = self.parse_params()?;
            let sig_end = self.prev_end().max(sig_end_probe);
            self.skip_throws();
            let header_end = self.prev_end();
            let (body, body_span) = self.parse_callable_body(is_abstract)?;
            let decl_end = self.prev_end();
            let param_types: Vec<String> = params.iter().map(|p| p.type_text.clone()).collect();
            let id = CallableId::new(qualified_name, simple_name, &param_types);
            record.constructors.push(id.clone());
            self.out.callables.push(CallableDecl {
                id,
                kind: CallableKind::Constructor,
                name: simple_name.to_string(),
                parameters: params,
                return_type: qualified_name.to_string(),
                doc_comment,
                visibility: vis,
                is_static: false,
                annotations,
                body_span,
                source_unit: self.path.clone(),
                body,
                decl_span: Span::new(decl_start, decl_end),
                signature_text: self.collapsed_slice(header_start, sig_end),
                header_span: Span::new(header_start, header_end),
            });
            return Ok(());
        }

        // field or method: parse the type first
        let decl_type = self.parse_type_text()?;
        let name_tok = self.bump();
        if name_tok.kind != TokenKind::Ident {
            return Err(ParseError::new(
                format!("expected member name, found `{}`", name_tok.text),
                name_tok.span.start,
            ));
        }

        if self.at("(") {
            // method
            let params = self.parse_params()?;
            let sig_end = self.prev_end();
            // trailing array markers on return type (rare `int foo()[]`)
            while self.at("[") {
                self.bump();
                self.expect("]")?;
            }
            self.skip_throws();
            let header_end = self.prev_end();
            let no_body = is_abstract
                || (record.kind == TypeKind::Interface && self.at(";"));
            let (body, body_span) = self.parse_callable_body(no_body)?;
            let decl_end = self.prev_end();
            let param_types: Vec<String> = params.iter().map(|p| p.type_text.clone()).collect();
            let id = CallableId::new(qualified_name, &name_tok.text, &param_types);
            record.methods.push(id.clone());
            self.out.callables.push(CallableDecl {
                id,
                kind: CallableKind::Method,
                name: name_tok.text.clone(),
                parameters: params,
                return_type: decl_type,
                doc_comment,
                visibility: vis,
                is_static,
                annotations,
                body_span,
                source_unit: self.path.clone(),
                body,
                decl_span: Span::new(decl_start, decl_end),
                signature_text: self.collapsed_slice(header_start, sig_end),
                header_span: Span::new(header_start, header_end),
            });
            return Ok(());
        }

        // field declarator list
        let mut first = true;
        let mut name = name_tok.text.clone();
        let field_start = record.fields.len();
        loop {
            let mut field_type = decl_type.clone();
            while self.at("[") {
                self.bump();
                self.expect("]")?;
                field_type.push_str("[]");
            }
            if self.eat("=") {
                // consume initializer expression (balanced, up to , or ;)
                self.consume_initializer()?;
            }
            record.fields.push(FieldDecl {
                name: name.clone(),
                declared_type: field_type,
                visibility: vis,
                is_static,
                doc_comment: if first { doc_comment.clone() } else { None },
                decl_span: Span::new(decl_start, decl_start),
            });
            first = false;
            if self.eat(",") {
                let tok = self.bump();
                if tok.kind != TokenKind::Ident {
                    return Err(ParseError::new("expected field name", tok.span.start));
                }
                name = tok.text;
                continue;
            }
            break;
        }
        let end = self.expect(";")?.span.end;
        for field in &mut record.fields[field_start..] {
            field.decl_span = Span::new(decl_start, end);
        }
        Ok(())
    }

    fn parse_nested_type(
        &mut self,
        enclosing: &str,
        vis: Visibility,
    ) -> Result<(), ParseError> {
        let before = self.out.classes.len();
        self.parse_type_decl_from_keyword(enclosing)?;
        if let Some(rec) = self.out.classes.get_mut(before) {
            rec.visibility = vis;
        }
        Ok(())
    }

    /// Like `parse_type_decl` but assumes modifiers were already consumed and
    /// the cursor sits on `class`/`interface`/`enum`.
    fn parse_type_decl_from_keyword(&mut self, enclosing: &str) -> Result<(), ParseError> {
        // Delegate by temporarily rewinding nothing: parse_type_decl reads
        // modifiers again, which is a no-op here.
        self.parse_type_decl(Some(enclosing))
    }

    fn parse_params(&mut self) -> Result<Vec<Param>, ParseError> {
        self.expect("(")?;
        let mut params = Vec::new();
        if self.eat(")") {
            return Ok(params);
        }
        loop {
            self.skip_annotations(None);
            self.eat("final");
            self.skip_annotations(None);
            let mut type_text = self.parse_type_text()?;
            let name_tok = self.bump();
            if name_tok.kind != TokenKind::Ident {
                return Err(ParseError::new(
                    format!("expected parameter name, found `{}`", name_tok.text),
                    name_tok.span.start,
                ));
            }
            while self.at("[") {
                self.bump();
                self.expect("]")?;
                type_text.push_str("[]");
            }
            params.push(Param { name: name_tok.text, type_text });
            if self.eat(",") {
                continue;
            }
            self.expect(")")?;
            break;
        }
        Ok(params)
    }

    fn skip_throws(&mut self) {
        if self.eat("throws") {
            while !self.at("{") && !self.at(";") && !self.at_eof() {
                self.bump();
            }
        }
    }

    fn parse_callable_body(
        &mut self,
        expect_none: bool,
    ) -> Result<(Option<Block>, Option<Span>), ParseError> {
        if expect_none || self.at(";") {
            self.expect(";")?;
            return Ok((None, None));
        }
        let block = self.parse_block()?;
        let span = block.span;
        Ok((Some(block), Some(span)))
    }

    fn consume_initializer(&mut self) -> Result<(), ParseError> {
        let mut depth = 0usize;
        while !self.at_eof() {
            match self.peek_text() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    if depth == 0 {
                        return Ok(());
                    }
                    depth -= 1;
                }
                "," | ";" if depth == 0 => return Ok(()),
                _ => {}
            }
            self.bump();
        }
        Err(self.err_here("unterminated initializer"))
    }

    // -- statements ---------------------------------------------------------

    fn parse_block(&mut self) -> Result<Block, ParseError> {
        let open = self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.at("}") && !self.at_eof() {
            stmts.push(self.parse_stmt_or_raw());
        }
        let close = self.expect("}")?;
        Ok(Block { stmts, span: Span::new(open.span.start, close.span.end) })
    }

    /// Parse a statement; on failure, recover by consuming a balanced raw
    /// statement so one odd construct does not fail the file.
    fn parse_stmt_or_raw(&mut self) -> Stmt {
        let checkpoint = self.pos;
        match self.parse_stmt() {
            Ok(s) => s,
            Err(_) => {
                self.pos = checkpoint;
                self.consume_raw_stmt()
            }
        }
    }

    fn consume_raw_stmt(&mut self) -> Stmt {
        let start = self.offset();
        let mut depth = 0usize;
        while !self.at_eof() {
            match self.peek_text() {
                "{" | "(" | "[" => {
                    depth += 1;
                    self.bump();
                }
                "}" | ")" | "]" => {
                    if depth == 0 {
                        break; // let the enclosing block close
                    }
                    depth -= 1;
                    let tok = self.bump();
                    if depth == 0 && tok.text == "}" {
                        break; // a statement-level block ended
                    }
                }
                ";" if depth == 0 => {
                    self.bump();
                    break;
                }
                _ => {
                    self.bump();
                }
            }
        }
        Stmt::Raw { span: Span::new(start, self.prev_end().max(start)) }
    }

    fn parse_stmt(&mut self) -> Result<Stmt, ParseError> {
        match self.peek_text() {
            "{" => Ok(Stmt::Block(self.parse_block()?)),
            "if" => self.parse_if(),
            "while" => self.parse_while(),
            "for" => self.parse_for(),
            "switch" => self.parse_switch(),
            "return" => {
                let kw = self.bump();
                let value = if self.at(";") { None } else { Some(self.parse_expr()?) };
                let end = self.expect(";")?.span.end;
                Ok(Stmt::Return { value, span: Span::new(kw.span.start, end) })
            }
            "throw" => {
                let kw = self.bump();
                let value = self.parse_expr()?;
                let end = self.expect(";")?.span.end;
                Ok(Stmt::Throw { value, span: Span::new(kw.span.start, end) })
            }
            "try" => self.parse_try(),
            "break" => {
                let kw = self.bump();
                if !self.at(";") {
                    self.bump(); // label
                }
                let end = self.expect(";")?.span.end;
                Ok(Stmt::Break { span: Span::new(kw.span.start, end) })
            }
            "continue" => {
                let kw = self.bump();
                if !self.at(";") {
                    self.bump();
                }
                let end = self.expect(";")?.span.end;
                Ok(Stmt::Continue { span: Span::new(kw.span.start, end) })
            }
            ";" => {
                let tok = self.bump();
                Ok(Stmt::Raw { span: tok.span })
            }
            _ => self.parse_local_or_expr_stmt(),
        }
    }

    fn parse_if(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump();
        self.expect("(")?;
        let cond_start = self.offset();
        let cond = self.parse_expr()?;
        let cond_end = self.prev_end();
        self.expect(")")?;
        let then_branch = Box::new(self.parse_stmt_or_raw());
        let mut else_branch = None;
        let mut end = then_branch.span().end;
        if self.eat("else") {
            let e = self.parse_stmt_or_raw();
            end = e.span().end;
            else_branch = Some(Box::new(e));
        }
        Ok(Stmt::If {
            cond,
            cond_span: Span::new(cond_start, cond_end),
            then_branch,
            else_branch,
            span: Span::new(kw.span.start, end),
        })
    }

    fn parse_while(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump();
        self.expect("(")?;
        let cond_start = self.offset();
        let cond = self.parse_expr()?;
        let cond_end = self.prev_end();
        self.expect(")")?;
        let body = Box::new(self.parse_stmt_or_raw());
        let end = body.span().end;
        Ok(Stmt::While {
            cond,
            cond_span: Span::new(cond_start, cond_end),
            body,
            span: Span::new(kw.span.start, end),
        })
    }

    fn parse_for(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump();
        self.expect("(")?;
        // enhanced-for if a `:` appears at depth 0 before the first `;`
        let mut probe = self.pos;
        let mut depth = 0usize;
        let mut is_foreach = false;
        while let Some(t) = self.tokens.get(probe) {
            match t.text.as_str() {
                "(" | "[" | "<" => depth += 1,
                ")" | "]" | ">" => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                ";" if depth == 0 => break,
                ":" if depth == 0 => {
                    is_foreach = true;
                    break;
                }
                _ => {}
            }
            probe += 1;
        }
        if is_foreach {
            let header_start = self.offset();
            self.eat("final");
            let var_type = self.parse_type_text()?;
            let name_tok = self.bump();
            self.expect(":")?;
            let iterable = self.parse_expr()?;
            let header_end = self.prev_end();
            self.expect(")")?;
            let body = Box::new(self.parse_stmt_or_raw());
            let end = body.span().end;
            return Ok(Stmt::ForEach {
                var_type,
                var_name: name_tok.text,
                iterable,
                header_span: Span::new(header_start, header_end),
                body,
                span: Span::new(kw.span.start, end),
            });
        }
        let init = if self.at(";") {
            self.bump();
            None
        } else {
            let s = self.parse_local_or_expr_stmt()?;
            Some(Box::new(s))
        };
        let (cond, cond_span) = if self.at(";") {
            (None, None)
        } else {
            let start = self.offset();
            let c = self.parse_expr()?;
            (Some(c), Some(Span::new(start, self.prev_end())))
        };
        self.expect(";")?;
        let mut update = Vec::new();
        if !self.at(")") {
            loop {
                update.push(self.parse_expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let body = Box::new(self.parse_stmt_or_raw());
        let end = body.span().end;
        Ok(Stmt::For {
            init,
            cond,
            cond_span,
            update,
            body,
            span: Span::new(kw.span.start, end),
        })
    }

    fn parse_switch(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump();
        self.expect("(")?;
        let scrut_start = self.offset();
        let scrutinee = self.parse_expr()?;
        let scrut_end = self.prev_end();
        self.expect(")")?;
        self.expect("{")?;
        let mut cases = Vec::new();
        while !self.at("}") && !self.at_eof() {
            let case_start = self.offset();
            let label = if self.eat("case") {
                let e = self.parse_expr()?;
                Some(e)
            } else if self.eat("default") {
                None
            } else {
                return Err(self.err_here("expected `case` or `default`"));
            };
            self.expect(":")?;
            let mut body = Vec::new();
            while !self.at_any(&["case", "default", "}"]) && !self.at_eof() {
                body.push(self.parse_stmt_or_raw());
            }
            cases.push(SwitchCase {
                label,
                body,
                span: Span::new(case_start, self.prev_end()),
            });
        }
        let close = self.expect("}")?;
        Ok(Stmt::Switch {
            scrutinee,
            scrutinee_span: Span::new(scrut_start, scrut_end),
            cases,
            span: Span::new(kw.span.start, close.span.end),
        })
    }

    fn parse_try(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump();
        if self.at("(") {
            // try-with-resources header; resources are not modeled
            self.skip_balanced("(", ")");
        }
        let body = self.parse_block()?;
        let mut catches = Vec::new();
        let mut finally = None;
        let mut end = body.span.end;
        while self.at("catch") {
            let c_start = self.bump().span.start;
            self.expect("(")?;
            self.eat("final");
            let mut param_type = self.parse_type_text()?;
            while self.eat("|") {
                let t = self.parse_type_text()?;
                param_type.push_str(" | ");
                param_type.push_str(&t);
            }
            let name_tok = self.bump();
            self.expect(")")?;
            let cbody = self.parse_block()?;
            end = cbody.span.end;
            catches.push(CatchClause {
                param_type,
                param_name: name_tok.text,
                span: Span::new(c_start, end),
                body: cbody,
            });
        }
        if self.eat("finally") {
            let f = self.parse_block()?;
            end = f.span.end;
            finally = Some(f);
        }
        Ok(Stmt::Try {
            body,
            catches,
            finally,
            span: Span::new(kw.span.start, end),
        })
    }

    /// Local variable declaration or expression statement (also used for the
    /// classic-for initializer, which shares the grammar).
    fn parse_local_or_expr_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.offset();
        if self.looks_like_local_var() {
            self.eat("final");
            let decl_type = self.parse_type_text()?;
            let mut declarators = Vec::new();
            loop {
                let name_tok = self.bump();
                if name_tok.kind != TokenKind::Ident {
                    return Err(ParseError::new("expected variable name", name_tok.span.start));
                }
                while self.at("[") {
                    self.bump();
                    self.expect("]")?;
                }
                let init = if self.eat("=") {
                    Some(if self.at("{") {
                        self.parse_array_init()?
                    } else {
                        self.parse_expr()?
                    })
                } else {
                    None
                };
                declarators.push(Declarator { name: name_tok.text, init });
                if !self.eat(",") {
                    break;
                }
            }
            let end = self.expect(";")?.span.end;
            return Ok(Stmt::LocalVar {
                decl_type,
                declarators,
                span: Span::new(start, end),
            });
        }
        let expr = self.parse_expr()?;
        let end = self.expect(";")?.span.end;
        Ok(Stmt::ExprStmt { expr, span: Span::new(start, end) })
    }

    /// Lookahead: `[final] Type Ident [`=`|`,`|`;`|`[`]` means a declaration.
    fn looks_like_local_var(&self) -> bool {
        let mut probe = self.pos;
        if self.tokens.get(probe).map(|t| t.text.as_str()) == Some("final") {
            probe += 1;
        }
        let Some(first) = self.tokens.get(probe) else { return false };
        let primitive = matches!(
            first.text.as_str(),
            "int" | "long" | "short" | "byte" | "char" | "boolean" | "float" | "double"
        );
        if !primitive && first.kind != TokenKind::Ident {
            return false;
        }
        probe += 1;
        // dotted name
        loop {
            match (
                self.tokens.get(probe).map(|t| t.text.as_str()),
                self.tokens.get(probe + 1).map(|t| t.kind),
            ) {
                (Some("."), Some(TokenKind::Ident)) if !primitive => probe += 2,
                _ => break,
            }
        }
        // generics
        if !primitive && self.tokens.get(probe).map(|t| t.text.as_str()) == Some("<") {
            let mut depth = 0isize;
            while let Some(t) = self.tokens.get(probe) {
                match t.text.as_str() {
                    "<" => depth += 1,
                    ">" => depth -= 1,
                    ">>" => depth -= 2,
                    ">>>" => depth -= 3,
                    ";" | ")" | "{" => return false,
                    _ => {}
                }
                probe += 1;
                if depth <= 0 {
                    break;
                }
            }
        }
        // array suffix
        while self.tokens.get(probe).map(|t| t.text.as_str()) == Some("[")
            && self.tokens.get(probe + 1).map(|t| t.text.as_str()) == Some("]")
        {
            probe += 2;
        }
        let Some(name) = self.tokens.get(probe) else { return false };
        if name.kind != TokenKind::Ident {
            return false;
        }
        matches!(
            self.tokens.get(probe + 1).map(|t| t.text.as_str()),
            Some("=") | Some(";") | Some(",") | Some("[") | Some(":")
        )
    }

    fn parse_array_init(&mut self) -> Result<Expr, ParseError> {
        let open = self.expect("{")?;
        let mut elements = Vec::new();
        while !self.at("}") && !self.at_eof() {
            if self.at("{") {
                elements.push(self.parse_array_init()?);
            } else {
                elements.push(self.parse_expr()?);
            }
            if !self.eat(",") {
                break;
            }
        }
        let close = self.expect("}")?;
        Ok(Expr::ArrayInit {
            elements,
            span: Span::new(open.span.start, close.span.end),
        })
    }

    // -- expressions --------------------------------------------------------

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.parse_assignment()
    }

    fn parse_assignment(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_ternary()?;
        const ASSIGN_OPS: &[&str] =
            &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];
        if ASSIGN_OPS.contains(&self.peek_text()) {
            let op = self.bump().text;
            let value = self.parse_assignment()?;
            let span = Span::new(lhs.span().start, value.span().end);
            return Ok(Expr::Assign { target: Box::new(lhs), op, value: Box::new(value), span });
        }
        Ok(lhs)
    }

    fn parse_ternary(&mut self) -> Result<Expr, ParseError> {
        let cond = self.parse_binary(0)?;
        if self.eat("?") {
            let then_value = self.parse_expr()?;
            self.expect(":")?;
            let else_value = self.parse_expr()?;
            let span = Span::new(cond.span().start, else_value.span().end);
            return Ok(Expr::Ternary {
                cond: Box::new(cond),
                then_value: Box::new(then_value),
                else_value: Box::new(else_value),
                span,
            });
        }
        Ok(cond)
    }

    fn binary_precedence(op: &str) -> Option<u8> {
        Some(match op {
            "||" => 1,
            "&&" => 2,
            "|" => 3,
            "^" => 4,
            "&" => 5,
            "==" | "!=" => 6,
            "<" | ">" | "<=" | ">=" | "instanceof" => 7,
            "<<" | ">>" | ">>>" => 8,
            "+" | "-" => 9,
            "*" | "/" | "%" => 10,
            _ => return None,
        })
    }

    fn parse_binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op_text = self.peek_text().to_string();
            let Some(prec) = Self::binary_precedence(&op_text) else { break };
            if prec < min_prec {
                break;
            }
            self.bump();
            if op_text == "instanceof" {
                let type_text = self.parse_type_text()?;
                let span = Span::new(lhs.span().start, self.prev_end());
                lhs = Expr::InstanceOf { value: Box::new(lhs), type_text, span };
                continue;
            }
            let rhs = self.parse_binary(prec + 1)?;
            let span = Span::new(lhs.span().start, rhs.span().end);
            lhs = Expr::Binary { op: op_text, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_text() {
            "!" | "~" | "+" | "-" | "++" | "--" => {
                let op_tok = self.bump();
                let operand = self.parse_unary()?;
                let span = Span::new(op_tok.span.start, operand.span().end);
                return Ok(Expr::Unary { op: op_tok.text, operand: Box::new(operand), span });
            }
            "(" => {
                if let Some(type_text) = self.try_cast() {
                    let operand = self.parse_unary()?;
                    let span = Span::new(type_text.1.start, operand.span().end);
                    return Ok(Expr::Cast {
                        type_text: type_text.0,
                        value: Box::new(operand),
                        span,
                    });
                }
            }
            _ => {}
        }
        self.parse_postfix()
    }

    /// Attempt to consume `( Type )` as a cast. Returns the type text and the
    /// opening paren span on success, or leaves the cursor untouched.
    fn try_cast(&mut self) -> Option<(String, Span)> {
        let checkpoint = self.pos;
        let open = self.bump(); // `(`
        let primitive = matches!(
            self.peek_text(),
            "int" | "long" | "short" | "byte" | "char" | "boolean" | "float" | "double"
        );
        let type_text = match self.parse_type_text() {
            Ok(t) => t,
            Err(_) => {
                self.pos = checkpoint;
                return None;
            }
        };
        if !self.at(")") {
            self.pos = checkpoint;
            return None;
        }
        self.bump();
        let next_starts_operand = match self.peek() {
            Some(t) => {
                matches!(t.kind, TokenKind::Ident | TokenKind::Number | TokenKind::Str | TokenKind::Char)
                    || matches!(t.text.as_str(), "(" | "!" | "~" | "this" | "new" | "super")
            }
            None => false,
        };
        if primitive || next_starts_operand {
            Some((type_text, open.span))
        } else {
            self.pos = checkpoint;
            None
        }
    }

    fn parse_postfix(&mut self) -> Result<Expr, ParseError> {
        let mut expr = self.parse_primary()?;
        loop {
            match self.peek_text() {
                "." => {
                    let next = self.peek_at(1).map(|t| t.text.clone()).unwrap_or_default();
                    if next == "<" {
                        // explicit generic method call: consume and retry
                        self.bump();
                        self.skip_generics();
                        continue;
                    }
                    self.bump();
                    let name_tok = self.bump();
                    let name = name_tok.text;
                    if self.at("(") {
                        let args = self.parse_args()?;
                        let span = Span::new(expr.span().start, self.prev_end());
                        expr = Expr::MethodCall {
                            receiver: Some(Box::new(expr)),
                            name,
                            args,
                            span,
                        };
                    } else {
                        let span = Span::new(expr.span().start, name_tok.span.end);
                        expr = Expr::FieldAccess { target: Box::new(expr), name, span };
                    }
                }
                "::" => {
                    // method reference: record as raw
                    self.bump();
                    let end_tok = self.bump();
                    let span = Span::new(expr.span().start, end_tok.span.end);
                    expr = Expr::Raw { span };
                }
                "[" => {
                    self.bump();
                    let index = self.parse_expr()?;
                    let close = self.expect("]")?;
                    let span = Span::new(expr.span().start, close.span.end);
                    expr = Expr::Index { target: Box::new(expr), index: Box::new(index), span };
                }
                "++" | "--" => {
                    let op_tok = self.bump();
                    let span = Span::new(expr.span().start, op_tok.span.end);
                    expr = Expr::Unary { op: op_tok.text, operand: Box::new(expr), span };
                }
                _ => break,
            }
        }
        Ok(expr)
    }

    fn parse_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect("(")?;
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            args.push(self.parse_expr()?);
            if self.eat(",") {
                continue;
            }
            self.expect(")")?;
            break;
        }
        Ok(args)
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.err_here("unexpected end of input")),
        };
        match tok.kind {
            TokenKind::Number | TokenKind::Str | TokenKind::Char => {
                self.bump();
                return Ok(Expr::Literal { span: tok.span });
            }
            _ => {}
        }
        match tok.text.as_str() {
            "true" | "false" | "null" => {
                self.bump();
                Ok(Expr::Literal { span: tok.span })
            }
            "this" => {
                self.bump();
                if self.at("(") {
                    // this(...) constructor delegation
                    let args = self.parse_args()?;
                    let span = Span::new(tok.span.start, self.prev_end());
                    return Ok(Expr::MethodCall { receiver: None, name: "this".into(), args, span });
                }
                Ok(Expr::This { span: tok.span })
            }
            "super" => {
                self.bump();
                if self.at("(") {
                    let args = self.parse_args()?;
                    let span = Span::new(tok.span.start, self.prev_end());
                    return Ok(Expr::MethodCall {
                        receiver: None,
                        name: "super".into(),
                        args,
                        span,
                    });
                }
                Ok(Expr::This { span: tok.span })
            }
            "new" => {
                self.bump();
                let type_text = self.parse_type_text()?;
                if self.at("(") {
                    let args = self.parse_args()?;
                    let mut span = Span::new(tok.span.start, self.prev_end());
                    // anonymous class body
                    if self.at("{") {
                        self.skip_balanced("{", "}");
                        span.end = self.prev_end();
                    }
                    return Ok(Expr::New { type_text, args, span });
                }
                if self.at("[") {
                    // array creation: new T[expr] or new T[]{...}
                    let mut args = Vec::new();
                    while self.eat("[") {
                        if !self.at("]") {
                            args.push(self.parse_expr()?);
                        }
                        self.expect("]")?;
                    }
                    if self.at("{") {
                        let init = self.parse_array_init()?;
                        args.push(init);
                    }
                    let span = Span::new(tok.span.start, self.prev_end());
                    return Ok(Expr::New { type_text: format!("{}[]", type_text), args, span });
                }
                let span = Span::new(tok.span.start, self.prev_end());
                Ok(Expr::New { type_text, args: Vec::new(), span })
            }
            "(" => {
                // lambda with parameter list?
                if let Some(arrow_pos) = self.paren_lambda_lookahead() {
                    return Ok(self.consume_lambda(arrow_pos));
                }
                self.bump();
                let inner = self.parse_expr()?;
                self.expect(")")?;
                Ok(inner)
            }
            _ if tok.kind == TokenKind::Ident => {
                // identifier lambda: `x -> ...`
                if self.peek_at(1).map(|t| t.text.as_str()) == Some("->") {
                    return Ok(self.consume_lambda(self.pos + 1));
                }
                self.bump();
                if self.at("(") {
                    let args = self.parse_args()?;
                    let span = Span::new(tok.span.start, self.prev_end());
                    return Ok(Expr::MethodCall { receiver: None, name: tok.text, args, span });
                }
                Ok(Expr::Name { name: tok.text, span: tok.span })
            }
            other => Err(ParseError::new(
                format!("unexpected token `{}` in expression", other),
                tok.span.start,
            )),
        }
    }

    /// If the cursor sits on `(` and the matching `)` is followed by `->`,
    /// return the arrow's token index.
    fn paren_lambda_lookahead(&self) -> Option<usize> {
        let mut probe = self.pos;
        let mut depth = 0usize;
        while let Some(t) = self.tokens.get(probe) {
            match t.text.as_str() {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth == 0 {
                        return if self.tokens.get(probe + 1).map(|t| t.text.as_str())
                            == Some("->")
                        {
                            Some(probe + 1)
                        } else {
                            None
                        };
                    }
                }
                ";" => return None,
                _ => {}
            }
            probe += 1;
        }
        None
    }

    /// Consume a lambda expression (params, arrow, body) as a raw node.
    fn consume_lambda(&mut self, arrow_pos: usize) -> Expr {
        let start = self.offset();
        while self.pos <= arrow_pos {
            self.bump();
        }
        if self.at("{") {
            self.skip_balanced("{", "}");
        } else {
            // expression body: best-effort parse, contents discarded
            let _ = self.parse_assignment();
        }
        Expr::Raw { span: Span::new(start, self.prev_end()) }
    }
}

fn collapse_ws(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_ws = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !last_ws && !out.is_empty() {
                out.push(' ');
            }
            last_ws = true;
        } else {
            out.push(c);
            last_ws = false;
        }
    }
    out.trim_end().to_string()
}
