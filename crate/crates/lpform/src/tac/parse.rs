//! Text syntax for three-address code.
//!
//! ```text
//! func gcd(a, b) {
//! entry:
//!   goto header
//! header:
//!   if b != 0 then body else tail
//! body:
//!   t = b
//!   b = a mod t
//!   a = t
//!   goto header
//! tail:
//!   return a
//! }
//! ```
//!
//! Whitespace is insignificant; comments run from `#` to end of line.

use std::fmt;

use thiserror::Error;

use super::{validate_tac, BlockExit, Primval, TacBlock, TacFunction, TacPrim, TacProgram};
use crate::ops::{ArithOp, CmpOp};

#[derive(Debug, Clone, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{}`", s),
            Tok::Int(n) => write!(f, "`{}`", n),
            Tok::Punct(p) => write!(f, "`{}`", p),
        }
    }
}

pub(crate) struct Lexer {
    pub toks: Vec<(Tok, usize, usize)>,
    pub pos: usize,
    end: (usize, usize),
}

const PUNCTS: &[&str] = &[
    "<=", ">=", "==", "!=", "<-", "(", ")", "{", "}", ",", ";", ":", "=", "<", ">", "+", "-", "*",
    "/", "&", ".",
];

pub(crate) fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

impl Lexer {
    pub fn new(text: &str) -> Result<Lexer, ParseError> {
        let mut toks = Vec::new();
        let mut line = 1usize;
        let mut col = 1usize;
        let mut chars = text.chars().peekable();
        while let Some(&c) = chars.peek() {
            if c == '\n' {
                chars.next();
                line += 1;
                col = 1;
                continue;
            }
            if c.is_whitespace() {
                chars.next();
                col += 1;
                continue;
            }
            if c == '#' {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            let (tline, tcol) = (line, col);
            if c.is_ascii_digit() {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let n = s.parse::<i64>().map_err(|_| ParseError {
                    line: tline,
                    col: tcol,
                    msg: format!("integer literal `{}` out of range", s),
                })?;
                toks.push((Tok::Int(n), tline, tcol));
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if ident_char(c) {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(s), tline, tcol));
                continue;
            }
            let rest: String = chars.clone().take(2).collect();
            let mut matched = None;
            for p in PUNCTS {
                if rest.starts_with(p) {
                    matched = Some(*p);
                    break;
                }
            }
            match matched {
                Some(p) => {
                    for _ in 0..p.chars().count() {
                        chars.next();
                        col += 1;
                    }
                    toks.push((Tok::Punct(p), tline, tcol));
                }
                None => {
                    return Err(ParseError {
                        line: tline,
                        col: tcol,
                        msg: format!("unexpected character `{}`", c),
                    })
                }
            }
        }
        Ok(Lexer {
            toks,
            pos: 0,
            end: (line, col),
        })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    pub fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _, _)| t)
    }

    pub fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or(self.end)
    }

    pub fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }

    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn expect_punct(&mut self, p: &'static str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Punct(q)) if *q == p => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected `{}`, found {}", p, t))),
            None => Err(self.err(format!("expected `{}`, found end of input", p))),
        }
    }

    pub fn eat_punct(&mut self, p: &'static str) -> bool {
        if let Some(Tok::Punct(q)) = self.peek() {
            if *q == p {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    pub fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => Err(self.err(format!("expected identifier, found {}", t))),
            None => Err(self.err("expected identifier, found end of input")),
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected `{}`, found {}", kw, t))),
            None => Err(self.err(format!("expected `{}`, found end of input", kw))),
        }
    }

    pub fn parse_cmp(&mut self) -> Result<CmpOp, ParseError> {
        match self.peek() {
            Some(Tok::Punct(p)) => match CmpOp::from_symbol(p) {
                Some(c) => {
                    self.pos += 1;
                    Ok(c)
                }
                None => Err(self.err(format!("expected comparison operator, found `{}`", p))),
            },
            other => Err(self.err(format!(
                "expected comparison operator, found {}",
                other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into())
            ))),
        }
    }
}

pub(crate) fn parse_primval(lex: &mut Lexer) -> Result<Primval, ParseError> {
    match lex.peek() {
        Some(Tok::Ident(_)) => Ok(Primval::Var(lex.expect_ident()?)),
        Some(Tok::Int(n)) => {
            let n = *n;
            lex.pos += 1;
            Ok(Primval::Const(n))
        }
        Some(Tok::Punct("-")) => {
            lex.pos += 1;
            match lex.next() {
                Some(Tok::Int(n)) => Ok(Primval::Const(n.wrapping_neg())),
                _ => Err(lex.err("expected integer after `-`")),
            }
        }
        other => Err(lex.err(format!(
            "expected value, found {}",
            other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into())
        ))),
    }
}

pub fn parse_tac(text: &str) -> Result<TacProgram, ParseError> {
    let mut lex = Lexer::new(text)?;
    let mut functions = Vec::new();
    while lex.peek().is_some() {
        functions.push(parse_func(&mut lex)?);
    }
    let p = TacProgram { functions };
    let errs = validate_tac(&p);
    if let Some(e) = errs.into_iter().next() {
        let (line, col) = lex.here();
        return Err(ParseError { line, col, msg: e });
    }
    Ok(p)
}

fn parse_func(lex: &mut Lexer) -> Result<TacFunction, ParseError> {
    lex.expect_keyword("func")?;
    let name = lex.expect_ident()?;
    lex.expect_punct("(")?;
    let mut params = Vec::new();
    if !lex.eat_punct(")") {
        loop {
            params.push(lex.expect_ident()?);
            if lex.eat_punct(")") {
                break;
            }
            lex.expect_punct(",")?;
        }
    }
    lex.expect_punct("{")?;
    let mut blocks = Vec::new();
    while !lex.eat_punct("}") {
        blocks.push(parse_block(lex)?);
    }
    Ok(TacFunction {
        name,
        params,
        blocks,
    })
}

fn parse_block(lex: &mut Lexer) -> Result<TacBlock, ParseError> {
    let id = lex.expect_ident()?;
    lex.expect_punct(":")?;
    let mut prims = Vec::new();
    loop {
        match lex.peek() {
            Some(Tok::Ident(s)) if s == "return" => {
                lex.pos += 1;
                let v = parse_primval(lex)?;
                return Ok(TacBlock {
                    id,
                    prims,
                    exit: BlockExit::Return(v),
                });
            }
            Some(Tok::Ident(s)) if s == "goto" => {
                lex.pos += 1;
                let t = lex.expect_ident()?;
                return Ok(TacBlock {
                    id,
                    prims,
                    exit: BlockExit::Goto(t),
                });
            }
            Some(Tok::Ident(s)) if s == "if" => {
                lex.pos += 1;
                let lhs = parse_primval(lex)?;
                let cmp = lex.parse_cmp()?;
                let rhs = parse_primval(lex)?;
                lex.expect_keyword("then")?;
                let then_block = lex.expect_ident()?;
                lex.expect_keyword("else")?;
                let else_block = lex.expect_ident()?;
                return Ok(TacBlock {
                    id,
                    prims,
                    exit: BlockExit::If {
                        cmp,
                        lhs,
                        rhs,
                        then_block,
                        else_block,
                    },
                });
            }
            Some(Tok::Ident(s)) if s == "call" => {
                lex.pos += 1;
                let (callee, args) = parse_call_tail(lex)?;
                prims.push(TacPrim::Call {
                    dst: None,
                    callee,
                    args,
                });
            }
            Some(Tok::Ident(_)) => {
                prims.push(parse_assignment(lex)?);
            }
            other => {
                return Err(lex.err(format!(
                    "expected statement or block exit, found {}",
                    other
                        .map(|t| t.to_string())
                        .unwrap_or_else(|| "end of input".into())
                )))
            }
        }
    }
}

fn parse_call_tail(lex: &mut Lexer) -> Result<(String, Vec<Primval>), ParseError> {
    let callee = lex.expect_ident()?;
    lex.expect_punct("(")?;
    let mut args = Vec::new();
    if !lex.eat_punct(")") {
        loop {
            args.push(parse_primval(lex)?);
            if lex.eat_punct(")") {
                break;
            }
            lex.expect_punct(",")?;
        }
    }
    Ok((callee, args))
}

fn parse_assignment(lex: &mut Lexer) -> Result<TacPrim, ParseError> {
    let dst = lex.expect_ident()?;
    lex.expect_punct("=")?;
    // `dst = call f(...)`
    if let Some(Tok::Ident(s)) = lex.peek() {
        if s == "call" {
            lex.pos += 1;
            let (callee, args) = parse_call_tail(lex)?;
            return Ok(TacPrim::Call {
                dst: Some(dst),
                callee,
                args,
            });
        }
    }
    // Unary negation: `dst = - v` (a `- <int>` is folded into a constant).
    if let Some(Tok::Punct("-")) = lex.peek() {
        if let Some(Tok::Ident(_)) = lex.peek2() {
            lex.pos += 1;
            let v = parse_primval(lex)?;
            return Ok(TacPrim::BinOp {
                dst,
                op: ArithOp::Neg,
                lhs: v,
                rhs: Primval::Const(0),
            });
        }
    }
    let lhs = parse_primval(lex)?;
    let op = match lex.peek() {
        Some(Tok::Punct("+")) => Some(ArithOp::Add),
        Some(Tok::Punct("-")) => Some(ArithOp::Sub),
        Some(Tok::Punct("*")) => Some(ArithOp::Mul),
        Some(Tok::Punct("/")) => Some(ArithOp::Div),
        Some(Tok::Ident(s)) if s == "mod" => Some(ArithOp::Mod),
        _ => None,
    };
    match op {
        Some(op) => {
            lex.pos += 1;
            let rhs = parse_primval(lex)?;
            Ok(TacPrim::BinOp { dst, op, lhs, rhs })
        }
        None => Ok(TacPrim::Assign { dst, src: lhs }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_error_has_position() {
        let err = parse_tac("func f( { b0: return 1 }").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.col > 1);
    }

    #[test]
    fn duplicate_function_rejected() {
        let err =
            parse_tac("func f() { b0: return 1 } func f() { b0: return 2 }").unwrap_err();
        assert!(err.msg.contains("duplicate function"));
    }

    #[test]
    fn calls_with_and_without_result() {
        let p = parse_tac(
            "func g(x) { b0: return x }
             func f(x) { b0: y = call g(x)
                             call g(7)
                             return y }",
        )
        .unwrap();
        let f = p.function("f").unwrap();
        assert_eq!(f.blocks[0].prims.len(), 2);
        assert!(matches!(
            f.blocks[0].prims[0],
            TacPrim::Call { dst: Some(_), .. }
        ));
        assert!(matches!(f.blocks[0].prims[1], TacPrim::Call { dst: None, .. }));
    }

    #[test]
    fn negative_constants_and_negation() {
        let p = parse_tac("func f(x) { b0: y = - x\n z = -3\n return z }").unwrap();
        let f = p.function("f").unwrap();
        assert!(matches!(
            &f.blocks[0].prims[0],
            TacPrim::BinOp {
                op: ArithOp::Neg,
                ..
            }
        ));
        assert_eq!(
            f.blocks[0].prims[1],
            TacPrim::Assign {
                dst: "z".into(),
                src: Primval::Const(-3)
            }
        );
    }
}
