use super::{ParseError, SourceSpan};
use crate::ir::OPERATOR_CHARS;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Lowercase-initial (or `_`) identifier.
    VarId(String),
    /// Uppercase-initial identifier.
    ConId(String),
    /// `Mod.Sub.name`: module segments plus final name of either case.
    Qualified(String, String),
    /// `(op)` or `Mod.(op)`; the module is empty when unqualified.
    OpName(String, String),
    /// A bare operator symbol, only meaningful in fixity declarations.
    OpSym(String),
    Str(String),
    Int(u64),
    Keyword(&'static str),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::VarId(s) | Tok::ConId(s) => format!("identifier `{s}`"),
            Tok::Qualified(m, n) => format!("name `{m}.{n}`"),
            Tok::OpName(m, n) if m.is_empty() => format!("operator `({n})`"),
            Tok::OpName(m, n) => format!("operator `{m}.({n})`"),
            Tok::OpSym(s) => format!("operator `{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Int(n) => format!("number {n}"),
            Tok::Keyword(k) => format!("keyword `{k}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

const KEYWORDS: &[&str] = &[
    "module", "imports", "data", "case", "fcase", "of", "free", "in", "or", "external", "private",
    "infixl", "infixr", "infix",
];

const RESERVED_OPS: &[&str] = &["=", "|", "->", "::"];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn is_op_char(c: char) -> bool {
    OPERATOR_CHARS.contains(c)
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut lx = Lexer {
        chars: &chars,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let (line, column) = (lx.line, lx.col);
        let start = lx.pos;
        let tok = match lx.peek(0) {
            None => {
                out.push(Token {
                    tok: Tok::Eof,
                    span: SourceSpan {
                        line,
                        column,
                        length: 0,
                    },
                });
                return Ok(out);
            }
            Some(c) => lx.token(c)?,
        };
        out.push(Token {
            tok,
            span: SourceSpan {
                line,
                column,
                length: lx.pos - start,
            },
        });
    }
}

struct Lexer<'a> {
    chars: &'a [char],
    pos: usize,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            span: SourceSpan {
                line: self.line,
                column: self.col,
                length: 1,
            },
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == '#' {
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|&c| is_ident_char(c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    /// `(`, operator characters, `)` with no spaces in between.
    fn op_in_parens_len(&self, at: usize) -> Option<usize> {
        if self.chars.get(at) != Some(&'(') {
            return None;
        }
        let mut n = 0;
        while self.chars.get(at + 1 + n).is_some_and(|&c| is_op_char(c)) {
            n += 1;
        }
        (n > 0 && self.chars.get(at + 1 + n) == Some(&')')).then_some(n)
    }

    fn take_op_in_parens(&mut self, n: usize) -> String {
        self.bump();
        let s: String = (0..n).filter_map(|_| self.bump()).collect();
        self.bump();
        s
    }

    fn token(&mut self, c: char) -> Result<Tok, ParseError> {
        if is_ident_start(c) {
            let first = self.ident();
            let mut segments = vec![first];
            // Qualified chain: Seg.Seg.name, only directly adjacent dots.
            loop {
                if self.peek(0) != Some('.') {
                    break;
                }
                if self.peek(1).is_some_and(is_ident_start) {
                    self.bump();
                    segments.push(self.ident());
                } else if let Some(n) = self.op_in_parens_len(self.pos + 1) {
                    self.bump();
                    let op = self.take_op_in_parens(n);
                    return Ok(Tok::OpName(segments.join("."), op));
                } else {
                    break;
                }
            }
            if segments.len() == 1 {
                let s = segments.pop().unwrap_or_default();
                if let Some(k) = KEYWORDS.iter().find(|k| **k == s) {
                    return Ok(Tok::Keyword(k));
                }
                return Ok(if s.starts_with(|c: char| c.is_ascii_uppercase()) {
                    Tok::ConId(s)
                } else {
                    Tok::VarId(s)
                });
            }
            let name = segments.pop().unwrap_or_default();
            return Ok(Tok::Qualified(segments.join("."), name));
        }
        if c.is_ascii_digit() {
            let mut n: u64 = 0;
            while let Some(d) = self.peek(0).and_then(|c| c.to_digit(10)) {
                n = n.saturating_mul(10).saturating_add(u64::from(d));
                self.bump();
            }
            return Ok(Tok::Int(n));
        }
        if c == '"' {
            self.bump();
            let mut s = String::new();
            loop {
                match self.bump() {
                    None | Some('\n') => {
                        return Err(self.error("unterminated string literal", &["`\"`"]))
                    }
                    Some('"') => break,
                    Some('\\') => match self.bump() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some(e @ ('"' | '\\')) => s.push(e),
                        _ => return Err(self.error("invalid escape in string literal", &[])),
                    },
                    Some(ch) => s.push(ch),
                }
            }
            return Ok(Tok::Str(s));
        }
        if c == '(' {
            if let Some(n) = self.op_in_parens_len(self.pos) {
                let op = self.take_op_in_parens(n);
                return Ok(Tok::OpName(String::new(), op));
            }
        }
        for p in ["(", ")", "{", "}", ",", ";"] {
            if p.starts_with(c) {
                self.bump();
                return Ok(Tok::Punct(p));
            }
        }
        if is_op_char(c) {
            let mut s = String::new();
            while let Some(c) = self.peek(0).filter(|&c| is_op_char(c)) {
                s.push(c);
                self.bump();
            }
            if let Some(p) = RESERVED_OPS.iter().find(|p| **p == s) {
                return Ok(Tok::Punct(p));
            }
            return Ok(Tok::OpSym(s));
        }
        Err(self.error(format!("unexpected character {c:?}"), &[]))
    }
}
