//! S-expression reader with source positions.

use std::fmt;
use std::ops::Range;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SexpKind {
    /// Symbol, keyword, numeral, or `#b`/`#x` literal.
    Atom(String),
    /// String literal contents (without quotes).
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sexp {
    pub kind: SexpKind,
    pub pos: Pos,
    /// Byte range in the source document.
    pub span: Range<usize>,
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match &self.kind {
            SexpKind::List(items) => Some(items),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

struct Reader<'a> {
    src: &'a str,
    bytes: &'a [u8],
    at: usize,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.at).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.at += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else if (c & 0xC0) != 0x80 {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.bump();
            } else if c == b';' {
                while let Some(c) = self.bump() {
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn err(&self, pos: Pos, message: impl Into<String>) -> LexError {
        LexError {
            pos,
            message: message.into(),
        }
    }

    fn read(&mut self) -> Result<Sexp, LexError> {
        self.skip_trivia();
        let pos = self.pos();
        let start = self.at;
        match self.peek() {
            None => Err(self.err(pos, "unexpected end of input")),
            Some(b'(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => return Err(self.err(pos, "unclosed parenthesis")),
                        Some(b')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
                Ok(Sexp {
                    kind: SexpKind::List(items),
                    pos,
                    span: start..self.at,
                })
            }
            Some(b')') => Err(self.err(pos, "unexpected `)`")),
            Some(b'"') => {
                self.bump();
                loop {
                    match self.bump() {
                        None => return Err(self.err(pos, "unterminated string literal")),
                        // SMT-LIB escapes a quote by doubling it.
                        Some(b'"') if self.peek() == Some(b'"') => {
                            self.bump();
                        }
                        Some(b'"') => break,
                        Some(_) => {}
                    }
                }
                let s = self.src[start + 1..self.at - 1].replace("\"\"", "\"");
                Ok(Sexp {
                    kind: SexpKind::Str(s),
                    pos,
                    span: start..self.at,
                })
            }
            Some(b'|') => {
                self.bump();
                loop {
                    match self.bump() {
                        None => return Err(self.err(pos, "unterminated quoted symbol")),
                        Some(b'|') => break,
                        Some(_) => {}
                    }
                }
                Ok(Sexp {
                    kind: SexpKind::Atom(self.src[start + 1..self.at - 1].to_string()),
                    pos,
                    span: start..self.at,
                })
            }
            Some(_) => {
                while let Some(c) = self.peek() {
                    if c.is_ascii_whitespace() || matches!(c, b'(' | b')' | b';' | b'"' | b'|') {
                        break;
                    }
                    self.bump();
                }
                let text = &self.src[start..self.at];
                if let Some(bad) = text.chars().find(|c| c.is_control() || !c.is_ascii()) {
                    return Err(self.err(pos, format!("invalid character {bad:?} in symbol")));
                }
                Ok(Sexp {
                    kind: SexpKind::Atom(text.to_string()),
                    pos,
                    span: start..self.at,
                })
            }
        }
    }
}

/// Reads every top-level S-expression in `src`.
pub fn read_all(src: &str) -> Result<Vec<Sexp>, LexError> {
    let mut r = Reader {
        src,
        bytes: src.as_bytes(),
        at: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}
