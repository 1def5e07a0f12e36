use std::sync::Arc;

use thiserror::Error;

use super::{Name, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Symbol(String),
    Var(String),
    Wildcard,
    LParen,
    RParen,
    Comma,
    Colon,
    Arrow,
    Eof,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Symbol(s) => format!("`{s}`"),
            TokenKind::Var(v) => format!("variable `{v}`"),
            TokenKind::Wildcard => "`_`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Arrow => "`=>`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

/// Tokenizer shared by the term and ruleset grammars. `#` starts a comment
/// that runs to the end of the line.
pub(crate) struct Lexer;

impl Lexer {
    pub fn tokenize(text: &str, first_line: usize) -> Result<Vec<Token>, ParseError> {
        let mut tokens = Vec::new();
        let mut line = first_line;
        let mut col = 1;
        let mut chars = text.chars().peekable();
        while let Some(&c) = chars.peek() {
            let (tl, tc) = (line, col);
            let single = |kind| Token {
                kind,
                line: tl,
                column: tc,
            };
            match c {
                '\n' => {
                    chars.next();
                    line += 1;
                    col = 1;
                }
                c if c.is_whitespace() => {
                    chars.next();
                    col += 1;
                }
                '#' => {
                    while chars.peek().is_some_and(|&c| c != '\n') {
                        chars.next();
                    }
                }
                '(' | ')' | ',' | ':' => {
                    chars.next();
                    col += 1;
                    tokens.push(single(match c {
                        '(' => TokenKind::LParen,
                        ')' => TokenKind::RParen,
                        ',' => TokenKind::Comma,
                        _ => TokenKind::Colon,
                    }));
                }
                '=' => {
                    chars.next();
                    if chars.peek() == Some(&'>') {
                        chars.next();
                        col += 2;
                        tokens.push(single(TokenKind::Arrow));
                    } else {
                        return Err(ParseError::at(tl, tc, "expected `=>`"));
                    }
                }
                '?' => {
                    chars.next();
                    col += 1;
                    let ident = take_ident(&mut chars, &mut col);
                    if !ident.starts_with(|c: char| c.is_ascii_alphabetic()) {
                        return Err(ParseError::at(tl, tc, "`?` must be followed by a letter"));
                    }
                    tokens.push(single(TokenKind::Var(ident)));
                }
                '_' => {
                    let ident = take_ident(&mut chars, &mut col);
                    if ident != "_" {
                        return Err(ParseError::at(
                            tl,
                            tc,
                            format!("invalid identifier `{ident}`"),
                        ));
                    }
                    tokens.push(single(TokenKind::Wildcard));
                }
                c if c.is_ascii_alphabetic() => {
                    let ident = take_ident(&mut chars, &mut col);
                    let kind = if c.is_ascii_uppercase() {
                        TokenKind::Var(ident)
                    } else {
                        TokenKind::Symbol(ident)
                    };
                    tokens.push(single(kind));
                }
                other => {
                    return Err(ParseError::at(
                        tl,
                        tc,
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        }
        tokens.push(Token {
            kind: TokenKind::Eof,
            line,
            column: col,
        });
        Ok(tokens)
    }
}

fn take_ident(chars: &mut std::iter::Peekable<std::str::Chars<'_>>, col: &mut usize) -> String {
    let mut s = String::new();
    while let Some(&c) = chars.peek() {
        if c.is_ascii_alphanumeric() || c == '_' {
            s.push(c);
            chars.next();
            *col += 1;
        } else {
            break;
        }
    }
    s
}

/// Recursive-descent parser over a token stream.
pub(crate) struct TermParser<'t> {
    tokens: &'t [Token],
    pos: usize,
    fresh: &'t mut usize,
}

impl<'t> TermParser<'t> {
    pub fn new(tokens: &'t [Token], fresh: &'t mut usize) -> Self {
        TermParser {
            tokens,
            pos: 0,
            fresh,
        }
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    pub fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::at(
            t.line,
            t.column,
            format!("expected {expected}, found {}", t.kind.describe()),
        )
    }

    pub fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<Token, ParseError> {
        if self.peek().kind == kind {
            Ok(self.bump())
        } else {
            Err(self.unexpected(expected))
        }
    }

    pub fn term(&mut self) -> Result<Term, ParseError> {
        let tok = self.bump();
        match tok.kind {
            TokenKind::Var(v) => Ok(Term::Var(Name::new(&v))),
            TokenKind::Wildcard => {
                let name = format!("_{}", *self.fresh);
                *self.fresh += 1;
                Ok(Term::Var(Name::new(&name)))
            }
            TokenKind::Symbol(f) => {
                if self.peek().kind != TokenKind::LParen {
                    return Ok(Term::App(Name::new(&f), Arc::from(Vec::new())));
                }
                let open = self.bump();
                let mut args = vec![self.term()?];
                loop {
                    match self.peek().kind {
                        TokenKind::Comma => {
                            self.bump();
                            args.push(self.term()?);
                        }
                        TokenKind::RParen => {
                            self.bump();
                            break;
                        }
                        TokenKind::Eof => {
                            return Err(ParseError::at(
                                open.line,
                                open.column,
                                "unbalanced parentheses: `(` is never closed",
                            ))
                        }
                        _ => return Err(self.unexpected("`,` or `)`")),
                    }
                }
                Ok(Term::App(Name::new(&f), Arc::from(args)))
            }
            TokenKind::RParen => Err(ParseError::at(
                tok.line,
                tok.column,
                "unbalanced parentheses: unexpected `)`",
            )),
            TokenKind::Eof => Err(ParseError::at(tok.line, tok.column, "expected a term")),
            other => Err(ParseError::at(
                tok.line,
                tok.column,
                format!("expected a term, found {}", other.describe()),
            )),
        }
    }
}

/// Parses one term from UTF-8 text. Whitespace between tokens is ignored.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let tokens = Lexer::tokenize(text, 1)?;
    if tokens.len() == 1 {
        return Err(ParseError::at(1, 1, "empty input"));
    }
    let mut fresh = 0;
    let mut p = TermParser::new(&tokens, &mut fresh);
    let t = p.term()?;
    match p.peek().kind {
        TokenKind::Eof => Ok(t),
        TokenKind::RParen => {
            let tok = p.peek();
            Err(ParseError::at(
                tok.line,
                tok.column,
                "unbalanced parentheses: unexpected `)`",
            ))
        }
        _ => Err(p.unexpected("end of input")),
    }
}
