use std::fmt;

use super::diag::{Diagnostic, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Scenario,
    Asset,
    Lesson,
    Stage,
    Action,
    Insert,
    Remove,
    Tool,
    Use,
    Quiz,
}

impl Keyword {
    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Scenario => "scenario",
            Keyword::Asset => "asset",
            Keyword::Lesson => "lesson",
            Keyword::Stage => "stage",
            Keyword::Action => "action",
            Keyword::Insert => "insert",
            Keyword::Remove => "remove",
            Keyword::Tool => "tool",
            Keyword::Use => "use",
            Keyword::Quiz => "quiz",
        }
    }

    fn lookup(s: &str) -> Option<Keyword> {
        Some(match s {
            "scenario" => Keyword::Scenario,
            "asset" => Keyword::Asset,
            "lesson" => Keyword::Lesson,
            "stage" => Keyword::Stage,
            "action" => Keyword::Action,
            "insert" => Keyword::Insert,
            "remove" => Keyword::Remove,
            "tool" => Keyword::Tool,
            "use" => Keyword::Use,
            "quiz" => Keyword::Quiz,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Str(String),
    Number(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Eq,
    Comma,
    Slash,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "'{}'", k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier '{s}'"),
            TokenKind::Str(_) => f.write_str("string"),
            TokenKind::Number(_) => f.write_str("number"),
            TokenKind::LBrace => f.write_str("'{'"),
            TokenKind::RBrace => f.write_str("'}'"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
            TokenKind::LBracket => f.write_str("'['"),
            TokenKind::RBracket => f.write_str("']'"),
            TokenKind::Eq => f.write_str("'='"),
            TokenKind::Comma => f.write_str("','"),
            TokenKind::Slash => f.write_str("'/'"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, u32, u32) {
        (self.offset, self.line, self.column)
    }

    fn span_from(&self, mark: (usize, u32, u32)) -> Span {
        let len = self.src[mark.0..self.offset].chars().count() as u32;
        Span::new(mark.0, mark.1, mark.2, len)
    }
}

/// Lexes the whole input, returning tokens (always terminated by `Eof`) and
/// any lexical diagnostics. Offending characters are skipped.
pub(crate) fn lex(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        src,
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        let mark = cur.mark();
        let single = |k: TokenKind, cur: &mut Cursor<'_>| {
            cur.bump();
            Token {
                kind: k,
                span: cur.span_from(mark),
            }
        };
        let tok = match c {
            ' ' | '\t' | '\r' | '\n' | '\u{feff}' => {
                cur.bump();
                continue;
            }
            '#' => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
                continue;
            }
            '{' => single(TokenKind::LBrace, &mut cur),
            '}' => single(TokenKind::RBrace, &mut cur),
            '(' => single(TokenKind::LParen, &mut cur),
            ')' => single(TokenKind::RParen, &mut cur),
            '[' => single(TokenKind::LBracket, &mut cur),
            ']' => single(TokenKind::RBracket, &mut cur),
            '=' => single(TokenKind::Eq, &mut cur),
            ',' => single(TokenKind::Comma, &mut cur),
            '/' => single(TokenKind::Slash, &mut cur),
            '"' => match lex_string(&mut cur, mark) {
                Ok(t) => t,
                Err(d) => {
                    diags.push(d);
                    continue;
                }
            },
            c if c.is_ascii_digit()
                || (c == '-' && cur.peek2().is_some_and(|d| d.is_ascii_digit())) =>
            {
                lex_number(&mut cur, mark)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while cur
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    cur.bump();
                }
                let text = &src[mark.0..cur.offset];
                let kind = match Keyword::lookup(text) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Ident(text.to_string()),
                };
                Token {
                    kind,
                    span: cur.span_from(mark),
                }
            }
            other => {
                cur.bump();
                diags.push(Diagnostic::error(
                    cur.span_from(mark),
                    format!("illegal character '{}'", other.escape_default()),
                ));
                continue;
            }
        };
        tokens.push(tok);
    }
    let end = cur.mark();
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: Span::new(end.0, end.1, end.2, 0),
    });
    (tokens, diags)
}

fn lex_string(cur: &mut Cursor<'_>, mark: (usize, u32, u32)) -> Result<Token, Diagnostic> {
    cur.bump();
    let mut value = String::new();
    loop {
        match cur.peek() {
            None | Some('\n') | Some('\r') => {
                return Err(Diagnostic::error(
                    cur.span_from(mark),
                    "unterminated string",
                ));
            }
            Some('"') => {
                cur.bump();
                break;
            }
            Some('\\') => {
                let esc_mark = cur.mark();
                cur.bump();
                match cur.bump() {
                    Some('"') => value.push('"'),
                    Some('\\') => value.push('\\'),
                    Some('n') => value.push('\n'),
                    Some('t') => value.push('\t'),
                    other => {
                        // Consume the rest of the string so lexing resumes after it.
                        while let Some(c) = cur.peek() {
                            if c == '"' || c == '\n' {
                                break;
                            }
                            cur.bump();
                        }
                        if cur.peek() == Some('"') {
                            cur.bump();
                        }
                        let shown = other.map(|c| c.to_string()).unwrap_or_default();
                        let mut span = cur.span_from(esc_mark);
                        span.length = 1 + shown.chars().count() as u32;
                        return Err(Diagnostic::error(
                            span,
                            format!("unknown escape '\\{shown}'"),
                        ));
                    }
                }
            }
            Some(c) => {
                cur.bump();
                value.push(c);
            }
        }
    }
    Ok(Token {
        kind: TokenKind::Str(value),
        span: cur.span_from(mark),
    })
}

fn lex_number(cur: &mut Cursor<'_>, mark: (usize, u32, u32)) -> Token {
    if cur.peek() == Some('-') {
        cur.bump();
    }
    let digits = |cur: &mut Cursor<'_>| {
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    };
    digits(cur);
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        digits(cur);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let after = cur.peek2();
        let signed = matches!(after, Some('+' | '-'));
        let rest = &cur.src[cur.offset + 1..];
        let exp_digit = if signed {
            rest[1..].starts_with(|c: char| c.is_ascii_digit())
        } else {
            rest.starts_with(|c: char| c.is_ascii_digit())
        };
        if exp_digit {
            cur.bump();
            if signed {
                cur.bump();
            }
            digits(cur);
        }
    }
    let text = &cur.src[mark.0..cur.offset];
    // The accepted shape is always valid for f64's parser.
    let value: f64 = text.parse().unwrap_or(f64::NAN);
    Token {
        kind: TokenKind::Number(value),
        span: cur.span_from(mark),
    }
}

/// Tokenizes scenario source. The returned list ends with an `Eof` token.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let (tokens, diags) = lex(src);
    if diags.is_empty() {
        Ok(tokens)
    } else {
        Err(diags)
    }
}
