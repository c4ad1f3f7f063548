//! Hand-rolled Tree-SQL parser.
//!
//! Keywords are case-insensitive; identifiers are case-sensitive. String
//! literals use single quotes with `''` as the escape. Aggregate names are
//! contextual: `sum` is a keyword only when followed by `(` in the select
//! list, so leaves may be named `Sum`. Errors carry the byte offset of the
//! offending token.

use super::{AggFunc, CompareOp, Condition, Literal, Operand, Query, SelectItem};
use crate::error::QueryError;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Number(String),
    Str(String),
    Comma,
    Dot,
    Star,
    LParen,
    RParen,
    Semicolon,
    Op(CompareOp),
    Minus,
    End,
}

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { text, bytes: text.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(usize, Token), QueryError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.bytes.len() {
            return Ok((start, Token::End));
        }
        let b = self.bytes[self.pos];
        let simple = |lexer: &mut Self, token| {
            lexer.pos += 1;
            Ok((start, token))
        };
        match b {
            b',' => simple(self, Token::Comma),
            b'.' => simple(self, Token::Dot),
            b'*' => simple(self, Token::Star),
            b'(' => simple(self, Token::LParen),
            b')' => simple(self, Token::RParen),
            b';' => simple(self, Token::Semicolon),
            b'-' => simple(self, Token::Minus),
            b'=' => simple(self, Token::Op(CompareOp::Eq)),
            b'<' => {
                self.pos += 1;
                match self.bytes.get(self.pos) {
                    Some(b'>') => {
                        self.pos += 1;
                        Ok((start, Token::Op(CompareOp::Ne)))
                    }
                    Some(b'=') => {
                        self.pos += 1;
                        Ok((start, Token::Op(CompareOp::Le)))
                    }
                    _ => Ok((start, Token::Op(CompareOp::Lt))),
                }
            }
            b'>' => {
                self.pos += 1;
                if self.bytes.get(self.pos) == Some(&b'=') {
                    self.pos += 1;
                    Ok((start, Token::Op(CompareOp::Ge)))
                } else {
                    Ok((start, Token::Op(CompareOp::Gt)))
                }
            }
            b'!' if self.bytes.get(self.pos + 1) == Some(&b'=') => {
                self.pos += 2;
                Ok((start, Token::Op(CompareOp::Ne)))
            }
            b'\'' => {
                self.pos += 1;
                let mut out = String::new();
                loop {
                    match self.bytes.get(self.pos) {
                        None => {
                            return Err(QueryError::Syntax {
                                offset: start,
                                message: "unterminated string literal".to_string(),
                            })
                        }
                        Some(b'\'') if self.bytes.get(self.pos + 1) == Some(&b'\'') => {
                            out.push('\'');
                            self.pos += 2;
                        }
                        Some(b'\'') => {
                            self.pos += 1;
                            return Ok((start, Token::Str(out)));
                        }
                        Some(_) => {
                            // Multi-byte characters pass through untouched.
                            let ch = self.text[self.pos..].chars().next().expect("in bounds");
                            out.push(ch);
                            self.pos += ch.len_utf8();
                        }
                    }
                }
            }
            b'0'..=b'9' => {
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
                {
                    // A dot is part of the number only when a digit follows;
                    // otherwise it separates path segments.
                    if self.bytes[self.pos] == b'.'
                        && !self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit)
                    {
                        break;
                    }
                    self.pos += 1;
                }
                Ok((start, Token::Number(self.text[start..self.pos].to_string())))
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Ok((start, Token::Ident(self.text[start..self.pos].to_string())))
            }
            _ => Err(QueryError::Syntax {
                offset: start,
                message: format!("unexpected character {:?}", self.text[start..].chars().next().unwrap()),
            }),
        }
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, QueryError> {
        Err(QueryError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn keyword(&self) -> Option<String> {
        match self.peek() {
            Token::Ident(word) => Some(word.to_ascii_uppercase()),
            _ => None,
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<(), QueryError> {
        if self.keyword().as_deref() == Some(word) {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected {word}"))
        }
    }

    fn ident(&mut self) -> Result<String, QueryError> {
        match self.peek() {
            Token::Ident(_) => match self.advance() {
                Token::Ident(word) => Ok(word),
                _ => unreachable!(),
            },
            _ => self.error("expected an identifier"),
        }
    }

    /// Dotted path: `Ident ('.' Ident)*`.
    fn path(&mut self) -> Result<String, QueryError> {
        let mut path = self.ident()?;
        while self.peek() == &Token::Dot {
            self.advance();
            path.push('.');
            path.push_str(&self.ident()?);
        }
        Ok(path)
    }

    fn select_item(&mut self) -> Result<SelectItem, QueryError> {
        let agg = self.keyword().and_then(|word| match word.as_str() {
            "SUM" => Some(AggFunc::Sum),
            "COUNT" => Some(AggFunc::Count),
            "MIN" => Some(AggFunc::Min),
            "MAX" => Some(AggFunc::Max),
            "AVG" => Some(AggFunc::Avg),
            _ => None,
        });
        if let Some(func) = agg {
            if self.tokens.get(self.pos + 1).map(|t| &t.1) == Some(&Token::LParen) {
                self.advance();
                self.advance();
                if func == AggFunc::Count && self.peek() == &Token::Star {
                    self.advance();
                    if self.advance() != Token::RParen {
                        return self.error("expected )");
                    }
                    return Ok(SelectItem::CountStar);
                }
                let path = self.path()?;
                if self.advance() != Token::RParen {
                    return self.error("expected )");
                }
                return Ok(SelectItem::Aggregate { func, path });
            }
        }
        Ok(SelectItem::Path(self.path()?))
    }

    fn literal(&mut self) -> Result<Literal, QueryError> {
        let negative = if self.peek() == &Token::Minus {
            self.advance();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Token::Number(text) => {
                self.advance();
                if text.contains('.') {
                    let value: f64 = text
                        .parse()
                        .map_err(|_| QueryError::Syntax {
                            offset: self.offset(),
                            message: format!("invalid number {text:?}"),
                        })?;
                    Ok(Literal::Float(if negative { -value } else { value }))
                } else {
                    let value: i64 = text
                        .parse()
                        .map_err(|_| QueryError::Syntax {
                            offset: self.offset(),
                            message: format!("invalid number {text:?}"),
                        })?;
                    Ok(Literal::Integer(if negative { -value } else { value }))
                }
            }
            Token::Str(text) if !negative => {
                self.advance();
                Ok(Literal::String(text))
            }
            Token::Ident(_) if !negative => {
                match self.keyword().as_deref() {
                    Some("TRUE") => {
                        self.advance();
                        Ok(Literal::Boolean(true))
                    }
                    Some("FALSE") => {
                        self.advance();
                        Ok(Literal::Boolean(false))
                    }
                    _ => self.error("expected a literal"),
                }
            }
            _ => self.error("expected a literal"),
        }
    }

    fn operand(&mut self) -> Result<Operand, QueryError> {
        match self.peek() {
            Token::Ident(_) => match self.keyword().as_deref() {
                Some("TRUE") | Some("FALSE") => Ok(Operand::Literal(self.literal()?)),
                _ => Ok(Operand::Path(self.path()?)),
            },
            _ => Ok(Operand::Literal(self.literal()?)),
        }
    }

    fn condition(&mut self) -> Result<Condition, QueryError> {
        let mut left = self.and_condition()?;
        while self.keyword().as_deref() == Some("OR") {
            self.advance();
            let right = self.and_condition()?;
            left = Condition::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_condition(&mut self) -> Result<Condition, QueryError> {
        let mut left = self.not_condition()?;
        while self.keyword().as_deref() == Some("AND") {
            self.advance();
            let right = self.not_condition()?;
            left = Condition::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn not_condition(&mut self) -> Result<Condition, QueryError> {
        if self.keyword().as_deref() == Some("NOT") {
            self.advance();
            return Ok(Condition::Not(Box::new(self.not_condition()?)));
        }
        if self.peek() == &Token::LParen {
            self.advance();
            let inner = self.condition()?;
            if self.advance() != Token::RParen {
                return self.error("expected )");
            }
            return Ok(inner);
        }
        let left = self.operand()?;
        let op = match self.peek() {
            Token::Op(op) => {
                let op = *op;
                self.advance();
                op
            }
            _ => return self.error("expected a comparison operator"),
        };
        let right = self.operand()?;
        Ok(Condition::Atom { left, op, right })
    }
}

/// Parses a Tree-SQL query string.
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    loop {
        let (offset, token) = lexer.next()?;
        let end = token == Token::End;
        tokens.push((offset, token));
        if end {
            break;
        }
    }
    let mut p = Parser { tokens, pos: 0 };

    p.expect_keyword("SELECT")?;
    let mut select = vec![p.select_item()?];
    while p.peek() == &Token::Comma {
        p.advance();
        select.push(p.select_item()?);
    }

    p.expect_keyword("FROM")?;
    let table = p.ident()?;

    let condition = if p.keyword().as_deref() == Some("WHERE") {
        p.advance();
        Some(p.condition()?)
    } else {
        None
    };

    let mut group_by = Vec::new();
    if p.keyword().as_deref() == Some("GROUP") {
        p.advance();
        p.expect_keyword("BY")?;
        group_by.push(p.path()?);
        while p.peek() == &Token::Comma {
            p.advance();
            group_by.push(p.path()?);
        }
    }

    if p.peek() == &Token::Semicolon {
        p.advance();
    }
    if p.peek() != &Token::End {
        return p.error("unexpected trailing input");
    }

    Ok(Query { select, table, condition, group_by })
}
