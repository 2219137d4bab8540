//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-'? primary
//! primary := number | '[' name ']' | func '(' args ')' | '(' expr ')'
//! column  := ident | ident '[' ident ']'
//! cond    := column ('=' | '<' | '<=' | '>' | '>=') literal
//!          | column IN '{' literal (',' literal)* '}'
//! ```
//!
//! Aggregates take one column; `DIVIDE` takes exactly three expressions;
//! `CALCULATE` takes an expression followed by zero or more conditions.

use super::ast::{AggFunc, BinOp, CompareOp, Condition, MeasureExpr};
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::model::ColumnRef;
use crate::value::Value;

pub fn parse(src: &str) -> Result<MeasureExpr, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::Syntax {
            position: t.start,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ParseError> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            self.error(&[what])
        }
    }

    fn expr(&mut self) -> Result<MeasureExpr, ParseError> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(left),
            };
            self.next();
            let right = self.term()?;
            left = MeasureExpr::binary(op, left, right);
        }
    }

    fn term(&mut self) -> Result<MeasureExpr, ParseError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(left),
            };
            self.next();
            let right = self.unary()?;
            left = MeasureExpr::binary(op, left, right);
        }
    }

    fn unary(&mut self) -> Result<MeasureExpr, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.next();
            return Ok(MeasureExpr::Neg(Box::new(self.primary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<MeasureExpr, ParseError> {
        const EXPECTED: &[&str] = &["number", "[measure]", "function call", "'('"];
        match self.peek().tok.clone() {
            Tok::Number(n) => {
                self.next();
                Ok(MeasureExpr::Number(n))
            }
            Tok::Bracket(name) => {
                self.next();
                Ok(MeasureExpr::MeasureRef(name))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.peek().start;
                if self.tokens.get(self.pos + 1).map(|t| &t.tok) != Some(&Tok::LParen) {
                    return self.error(EXPECTED);
                }
                self.next();
                self.next();
                self.call(&name, at)
            }
            _ => self.error(EXPECTED),
        }
    }

    fn call(&mut self, name: &str, at: usize) -> Result<MeasureExpr, ParseError> {
        let upper = name.to_ascii_uppercase();
        let e = if let Some(func) = AggFunc::from_name(&upper) {
            let column = self.column()?;
            MeasureExpr::Agg { func, column }
        } else if upper == "DIVIDE" {
            let n = self.expr()?;
            self.expect(Tok::Comma, "','")?;
            let d = self.expr()?;
            self.expect(Tok::Comma, "',' (DIVIDE needs an explicit alternate)")?;
            let alt = self.expr()?;
            MeasureExpr::divide(n, d, alt)
        } else if upper == "CALCULATE" {
            let inner = self.expr()?;
            let mut conditions = Vec::new();
            while self.peek().tok == Tok::Comma {
                self.next();
                conditions.push(self.condition()?);
            }
            MeasureExpr::Calculate { inner: Box::new(inner), conditions }
        } else {
            return Err(ParseError::UnknownFunction { name: name.to_string(), position: at });
        };
        self.expect(Tok::RParen, "')'")?;
        Ok(e)
    }

    fn column(&mut self) -> Result<ColumnRef, ParseError> {
        let Tok::Ident(first) = self.peek().tok.clone() else {
            return self.error(&["column"]);
        };
        let end = self.peek().end;
        self.next();
        match (&self.peek().tok, self.peek().start == end) {
            (Tok::Bracket(col), true) => {
                let col = col.clone();
                if !is_ident(&col) {
                    return self.error(&["column name without spaces"]);
                }
                self.next();
                Ok(ColumnRef::qualified(first, col))
            }
            _ => Ok(ColumnRef::bare(first)),
        }
    }

    fn literal(&mut self) -> Result<Value, ParseError> {
        match self.peek().tok.clone() {
            Tok::Number(n) => {
                self.next();
                Ok(Value::Number(n))
            }
            Tok::Minus => {
                self.next();
                match self.peek().tok {
                    Tok::Number(n) => {
                        self.next();
                        Ok(Value::Number(-n))
                    }
                    _ => self.error(&["number"]),
                }
            }
            Tok::Str(s) => {
                self.next();
                Ok(Value::Text(s))
            }
            _ => self.error(&["number", "string"]),
        }
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        let column = self.column()?;
        let op = match &self.peek().tok {
            Tok::Eq => CompareOp::Eq,
            Tok::Lt => CompareOp::Lt,
            Tok::Le => CompareOp::Le,
            Tok::Gt => CompareOp::Gt,
            Tok::Ge => CompareOp::Ge,
            Tok::Ident(k) if k.eq_ignore_ascii_case("IN") => CompareOp::In,
            _ => return self.error(&["'='", "'<'", "'<='", "'>'", "'>='", "IN"]),
        };
        self.next();
        let values = if op == CompareOp::In {
            self.expect(Tok::LBrace, "'{'")?;
            let mut vs = vec![self.literal()?];
            while self.peek().tok == Tok::Comma {
                self.next();
                vs.push(self.literal()?);
            }
            self.expect(Tok::RBrace, "'}'")?;
            vs
        } else {
            vec![self.literal()?]
        };
        Ok(Condition { column, op, values })
    }
}
