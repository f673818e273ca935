//! Text syntax for LP form, one clause per statement:
//!
//! ```text
//! pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
//! pub gcd(a, b; ret) <- b == 0 & ret = a.
//! ```
//!
//! Heads are `name(ins; outs)`; goals are primitives or calls
//! `name(ins; outs)`, copies `out = in`, and guards `a CMP b` (equality
//! guards use `==` to keep them distinct from copies). Clauses of a
//! procedure must be adjacent; `pub` marks an exported procedure.

use std::collections::BTreeSet;

use super::{refactor, Clause, ClauseItem, Goal, Guard, LpProc, LpProgram, PrimOp, Val};
use crate::ops::ArithOp;
use crate::tac::ParseError;
use crate::tac::parse::{parse_primval, Lexer, Tok};
use crate::tac::Primval;

/// Parsed clause list before refactoring into body trees.
pub struct RawLp {
    pub clauses: Vec<Clause>,
    pub public: BTreeSet<String>,
}

pub fn parse_lp_clauses(text: &str) -> Result<RawLp, ParseError> {
    let mut lex = Lexer::new(text)?;
    let mut clauses = Vec::new();
    let mut public = BTreeSet::new();
    while lex.peek().is_some() {
        let is_pub = matches!(lex.peek(), Some(Tok::Ident(s)) if s == "pub");
        if is_pub {
            lex.next();
        }
        let clause = parse_clause(&mut lex)?;
        if is_pub {
            public.insert(clause.name.clone());
        }
        clauses.push(clause);
    }
    Ok(RawLp { clauses, public })
}

/// Parses, validates, and refactors LP text into a program. Clause sets
/// that violate the well-formedness rules (including guard
/// complementarity) are rejected.
pub fn parse_lp(text: &str) -> Result<LpProgram, ParseError> {
    let raw = parse_lp_clauses(text)?;
    let diags = super::validate_clauses(&raw.clauses);
    if let Some(d) = diags.first() {
        return Err(ParseError {
            line: 0,
            col: 0,
            msg: d.to_string(),
        });
    }
    Ok(build_program(raw).expect("validated clause set refactors"))
}

/// Groups adjacent clauses and refactors each group into a body tree.
pub(crate) fn build_program(raw: RawLp) -> Result<LpProgram, String> {
    let mut program = LpProgram::default();
    let mut i = 0;
    while i < raw.clauses.len() {
        let name = raw.clauses[i].name.clone();
        let mut j = i;
        while j < raw.clauses.len() && raw.clauses[j].name == name {
            j += 1;
        }
        let group = &raw.clauses[i..j];
        let body = refactor(group)?;
        program.insert(LpProc {
            name: name.clone(),
            in_params: group[0].in_params.clone(),
            out_params: group[0].out_params.clone(),
            body,
            public: raw.public.contains(&name),
        });
        i = j;
    }
    Ok(program)
}

fn to_val(p: Primval) -> Val {
    match p {
        Primval::Var(v) => Val::Var(v),
        Primval::Const(c) => Val::Const(c),
    }
}

fn parse_clause(lex: &mut Lexer) -> Result<Clause, ParseError> {
    let name = lex.expect_ident()?;
    let (in_params, out_params) = parse_head_params(lex)?;
    lex.expect_punct("<-")?;
    let mut items = Vec::new();
    if let Some(Tok::Ident(s)) = lex.peek() {
        if s == "true" {
            lex.next();
            lex.expect_punct(".")?;
            return Ok(Clause {
                name,
                in_params,
                out_params,
                items,
            });
        }
    }
    loop {
        items.push(parse_goal(lex)?);
        if lex.eat_punct(".") {
            break;
        }
        lex.expect_punct("&")?;
    }
    Ok(Clause {
        name,
        in_params,
        out_params,
        items,
    })
}

fn parse_head_params(lex: &mut Lexer) -> Result<(Vec<String>, Vec<String>), ParseError> {
    lex.expect_punct("(")?;
    let mut ins = Vec::new();
    while !lex.eat_punct(";") {
        ins.push(lex.expect_ident()?);
        if !matches!(lex.peek(), Some(Tok::Punct(";"))) {
            lex.expect_punct(",")?;
        }
    }
    let mut outs = Vec::new();
    while !lex.eat_punct(")") {
        outs.push(lex.expect_ident()?);
        if !matches!(lex.peek(), Some(Tok::Punct(")"))) {
            lex.expect_punct(",")?;
        }
    }
    Ok((ins, outs))
}

fn parse_goal(lex: &mut Lexer) -> Result<ClauseItem, ParseError> {
    // A goal starting with a constant can only be a guard.
    if matches!(lex.peek(), Some(Tok::Int(_)) | Some(Tok::Punct("-"))) {
        let lhs = to_val(parse_primval(lex)?);
        let cmp = lex.parse_cmp()?;
        let rhs = to_val(parse_primval(lex)?);
        return Ok(ClauseItem::Guard(Guard { cmp, lhs, rhs }));
    }
    let name = lex.expect_ident()?;
    match lex.peek() {
        // `name(ins; outs)`: primitive or call.
        Some(Tok::Punct("(")) => {
            lex.next();
            let mut ins = Vec::new();
            while !lex.eat_punct(";") {
                ins.push(to_val(parse_primval(lex)?));
                if !matches!(lex.peek(), Some(Tok::Punct(";"))) {
                    lex.expect_punct(",")?;
                }
            }
            let mut outs = Vec::new();
            while !lex.eat_punct(")") {
                outs.push(lex.expect_ident()?);
                if !matches!(lex.peek(), Some(Tok::Punct(")"))) {
                    lex.expect_punct(",")?;
                }
            }
            match ArithOp::from_name(&name) {
                Some(op) => Ok(ClauseItem::Goal(Goal::Prim {
                    op: PrimOp::Arith(op),
                    ins,
                    outs,
                })),
                None => Ok(ClauseItem::Goal(Goal::Call {
                    callee: name,
                    ins,
                    outs,
                })),
            }
        }
        // `out = in`: copy.
        Some(Tok::Punct("=")) => {
            lex.next();
            let src = to_val(parse_primval(lex)?);
            Ok(ClauseItem::Goal(Goal::copy(src, name)))
        }
        // `a CMP b`: guard.
        _ => {
            let cmp = lex.parse_cmp()?;
            let rhs = to_val(parse_primval(lex)?);
            Ok(ClauseItem::Guard(Guard {
                cmp,
                lhs: Val::Var(name),
                rhs,
            }))
        }
    }
}
