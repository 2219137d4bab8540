//! Canonical printing with minimal parentheses. `parse(print(e)) == e` for
//! every expression whose number literals are non-negative (a negative
//! literal prints as, and re-parses to, a negation).

use std::fmt::Write as _;

use super::ast::{CompareOp, Condition, MeasureExpr};
use crate::value::Value;

const UNARY: u8 = 3;
const ATOM: u8 = 4;

pub fn print(e: &MeasureExpr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn precedence(e: &MeasureExpr) -> u8 {
    match e {
        MeasureExpr::Binary { op, .. } => op.precedence(),
        MeasureExpr::Neg(_) => UNARY,
        MeasureExpr::Number(n) if n.is_sign_negative() => UNARY,
        _ => ATOM,
    }
}

fn write_wrapped(out: &mut String, e: &MeasureExpr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &MeasureExpr) {
    match e {
        MeasureExpr::Number(n) => write!(out, "{n}").unwrap(),
        MeasureExpr::Agg { func, column } => write!(out, "{}({column})", func.name()).unwrap(),
        MeasureExpr::MeasureRef(name) => write!(out, "[{name}]").unwrap(),
        MeasureExpr::Divide { numerator, denominator, alternate } => {
            out.push_str("DIVIDE(");
            write_expr(out, numerator);
            out.push_str(", ");
            write_expr(out, denominator);
            out.push_str(", ");
            write_expr(out, alternate);
            out.push(')');
        }
        MeasureExpr::Binary { op, left, right } => {
            let p = op.precedence();
            write_wrapped(out, left, precedence(left) < p);
            write!(out, " {} ", op.symbol()).unwrap();
            write_wrapped(out, right, precedence(right) <= p);
        }
        MeasureExpr::Neg(inner) => {
            out.push('-');
            write_wrapped(out, inner, precedence(inner) < ATOM);
        }
        MeasureExpr::Calculate { inner, conditions } => {
            out.push_str("CALCULATE(");
            write_expr(out, inner);
            for c in conditions {
                out.push_str(", ");
                write_condition(out, c);
            }
            out.push(')');
        }
    }
}

fn write_condition(out: &mut String, c: &Condition) {
    write!(out, "{} {} ", c.column, c.op.symbol()).unwrap();
    if c.op == CompareOp::In {
        out.push('{');
        for (i, v) in c.values.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_literal(out, v);
        }
        out.push('}');
    } else if let Some(v) = c.values.first() {
        write_literal(out, v);
    }
}

fn write_literal(out: &mut String, v: &Value) {
    match v {
        Value::Number(n) => write!(out, "{n}").unwrap(),
        Value::Text(s) => write!(out, "\"{}\"", s.replace('"', "\"\"")).unwrap(),
        Value::Null => out.push_str("\"\""),
    }
}
