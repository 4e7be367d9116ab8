//! Tokenizer for Java-syntax source text.
//!
//! Keeps byte spans for every token and collects doc comment blocks
//! (`/** ... */`) separately so the parser can attach them by adjacency.

use super::model::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Keyword,
    Number,
    Str,
    Char,
    Punct,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct DocComment {
    pub text: String,
    pub span: Span,
}

#[derive(Debug)]
pub struct LexError {
    pub message: String,
    pub offset: usize,
}

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while", "true", "false", "null",
];

pub fn is_keyword(text: &str) -> bool {
    KEYWORDS.contains(&text)
}

/// Multi-character operators, longest first so greedy matching works.
const PUNCTS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "==", "!=", "<=", ">=", "&&", "||", "++",
    "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
];

pub struct Lexed {
    pub tokens: Vec<Token>,
    pub doc_comments: Vec<DocComment>,
}

pub fn lex(text: &str) -> Result<Lexed, LexError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut doc_comments = Vec::new();
    let mut i = 0;

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        // Comments.
        if c == b'/' && i + 1 < bytes.len() {
            match bytes[i + 1] {
                b'/' => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                    continue;
                }
                b'*' => {
                    let start = i;
                    let is_doc = i + 2 < bytes.len() && bytes[i + 2] == b'*'
                        // `/**/` is an empty block comment, not a doc block
                        && !(i + 3 < bytes.len() && bytes[i + 3] == b'/');
                    i += 2;
                    let mut closed = false;
                    while i + 1 < bytes.len() {
                        if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                            i += 2;
                            closed = true;
                            break;
                        }
                        i += 1;
                    }
                    if !closed {
                        return Err(LexError {
                            message: "unterminated block comment".into(),
                            offset: start,
                        });
                    }
                    if is_doc {
                        doc_comments.push(DocComment {
                            text: text[start..i].to_string(),
                            span: Span::new(start, i),
                        });
                    }
                    continue;
                }
                _ => {}
            }
        }
        // String literal.
        if c == b'"' {
            let start = i;
            i += 1;
            loop {
                if i >= bytes.len() {
                    return Err(LexError {
                        message: "unterminated string literal".into(),
                        offset: start,
                    });
                }
                match bytes[i] {
                    b'\\' => i += 2,
                    b'"' => {
                        i += 1;
                        break;
                    }
                    _ => i += 1,
                }
            }
            tokens.push(Token {
                kind: TokenKind::Str,
                text: text[start..i].to_string(),
                span: Span::new(start, i),
            });
            continue;
        }
        // Char literal.
        if c == b'\'' {
            let start = i;
            i += 1;
            loop {
                if i >= bytes.len() {
                    return Err(LexError {
                        message: "unterminated char literal".into(),
                        offset: start,
                    });
                }
                match bytes[i] {
                    b'\\' => i += 2,
                    b'\'' => {
                        i += 1;
                        break;
                    }
                    _ => i += 1,
                }
            }
            tokens.push(Token {
                kind: TokenKind::Char,
                text: text[start..i].to_string(),
                span: Span::new(start, i),
            });
            continue;
        }
        // Number literal.
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.' || bytes[i] == b'_')
            {
                // Avoid swallowing `..` or a trailing method call like `1.toString`.
                if bytes[i] == b'.' && (i + 1 >= bytes.len() || !bytes[i + 1].is_ascii_digit()) {
                    break;
                }
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                text: text[start..i].to_string(),
                span: Span::new(start, i),
            });
            continue;
        }
        // Identifier or keyword.
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' || c >= 0x80 {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric()
                    || bytes[i] == b'_'
                    || bytes[i] == b'$'
                    || bytes[i] >= 0x80)
            {
                i += 1;
            }
            let word = &text[start..i];
            tokens.push(Token {
                kind: if is_keyword(word) { TokenKind::Keyword } else { TokenKind::Ident },
                text: word.to_string(),
                span: Span::new(start, i),
            });
            continue;
        }
        // Multi-char punctuation.
        let rest = &text[i..];
        if let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            tokens.push(Token {
                kind: TokenKind::Punct,
                text: (*p).to_string(),
                span: Span::new(i, i + p.len()),
            });
            i += p.len();
            continue;
        }
        // Single-char punctuation.
        if c.is_ascii_punctuation() {
            tokens.push(Token {
                kind: TokenKind::Punct,
                text: (c as char).to_string(),
                span: Span::new(i, i + 1),
            });
            i += 1;
            continue;
        }
        return Err(LexError {
            message: format!("unexpected character {:?}", c as char),
            offset: i,
        });
    }

    Ok(Lexed { tokens, doc_comments })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_simple_method() {
        let lexed = lex("public int add(int a, int b) { return a + b; }").unwrap();
        let texts: Vec<&str> = lexed.tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "public", "int", "add", "(", "int", "a", ",", "int", "b", ")", "{", "return",
                "a", "+", "b", ";", "}"
            ]
        );
    }

    #[test]
    fn collects_doc_comments_only() {
        let src = "/** doc */\n// line\n/* block */\nclass A {}";
        let lexed = lex(src).unwrap();
        assert_eq!(lexed.doc_comments.len(), 1);
        assert_eq!(lexed.doc_comments[0].text, "/** doc */");
    }

    #[test]
    fn string_with_escapes() {
        let lexed = lex(r#"String s = "a\"b";"#).unwrap();
        assert_eq!(lexed.tokens[3].text, r#""a\"b""#);
    }

    #[test]
    fn unterminated_comment_is_error() {
        assert!(lex("int a; /* never closed").is_err());
    }

    #[test]
    fn empty_block_comment_is_not_doc() {
        let lexed = lex("/**/ class A {}").unwrap();
        assert!(lexed.doc_comments.is_empty());
    }
}
