//! Three-address code front end: AST, text syntax, structural validation,
//! control-flow graphs, and a reference interpreter.
//!
//! A program is a list of functions; each function is a list of basic
//! blocks; each block is a run of primitive statements ending in exactly
//! one exit (return, conditional branch, or goto). Values are signed
//! 64-bit integers.

mod interp;
pub(crate) mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ops::{ArithOp, CmpOp};

pub use interp::{interp_tac, interp_tac_with};
pub use parse::{parse_tac, ParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TacProgram {
    pub functions: Vec<TacFunction>,
}

impl TacProgram {
    pub fn function(&self, name: &str) -> Option<&TacFunction> {
        self.functions.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TacFunction {
    pub name: String,
    pub params: Vec<String>,
    /// The first block is the entry block.
    pub blocks: Vec<TacBlock>,
}

impl TacFunction {
    pub fn block(&self, id: &str) -> Option<&TacBlock> {
        self.blocks.iter().find(|b| b.id == id)
    }

    /// All variables of the function: parameters first, then remaining
    /// variables in first-occurrence order over blocks in program order.
    /// This is the `vars(B0..Bn)` ordering the translator relies on.
    pub fn vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        {
            let mut push = |v: &str| {
                if !out.iter().any(|x| x == v) {
                    out.push(v.to_string());
                }
            };
            for p in &self.params {
                push(p);
            }
            for b in &self.blocks {
                for prim in &b.prims {
                    match prim {
                        TacPrim::Assign { dst, src } => {
                            if let Primval::Var(v) = src {
                                push(v);
                            }
                            push(dst);
                        }
                        TacPrim::BinOp { dst, lhs, rhs, .. } => {
                            for v in [lhs, rhs] {
                                if let Primval::Var(v) = v {
                                    push(v);
                                }
                            }
                            push(dst);
                        }
                        TacPrim::Call { dst, args, .. } => {
                            for a in args {
                                if let Primval::Var(v) = a {
                                    push(v);
                                }
                            }
                            if let Some(d) = dst {
                                push(d);
                            }
                        }
                    }
                }
                match &b.exit {
                    BlockExit::Return(v) => {
                        if let Primval::Var(v) = v {
                            push(v);
                        }
                    }
                    BlockExit::If { lhs, rhs, .. } => {
                        for v in [lhs, rhs] {
                            if let Primval::Var(v) = v {
                                push(v);
                            }
                        }
                    }
                    BlockExit::Goto(_) => {}
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TacBlock {
    pub id: String,
    pub prims: Vec<TacPrim>,
    pub exit: BlockExit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TacPrim {
    Assign {
        dst: String,
        src: Primval,
    },
    BinOp {
        dst: String,
        op: ArithOp,
        lhs: Primval,
        /// Ignored when `op` is unary.
        rhs: Primval,
    },
    /// `dst = call f(args)` or a bare `call f(args)`.
    Call {
        dst: Option<String>,
        callee: String,
        args: Vec<Primval>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockExit {
    Return(Primval),
    If {
        cmp: CmpOp,
        lhs: Primval,
        rhs: Primval,
        then_block: String,
        else_block: String,
    },
    Goto(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Primval {
    Var(String),
    Const(i64),
}

impl fmt::Display for Primval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primval::Var(v) => f.write_str(v),
            Primval::Const(c) => write!(f, "{}", c),
        }
    }
}

/// Structural validation: unique function and block names, every jump and
/// call target resolves. Returns the program-order list of problems.
pub fn validate_tac(p: &TacProgram) -> Vec<String> {
    let mut errs = Vec::new();
    let mut fnames = BTreeSet::new();
    for f in &p.functions {
        if !fnames.insert(f.name.as_str()) {
            errs.push(format!("duplicate function `{}`", f.name));
        }
    }
    for f in &p.functions {
        let mut blocks = BTreeSet::new();
        for b in &f.blocks {
            if !blocks.insert(b.id.as_str()) {
                errs.push(format!("duplicate block `{}` in `{}`", b.id, f.name));
            }
        }
        if f.blocks.is_empty() {
            errs.push(format!("function `{}` has no blocks", f.name));
        }
        let check_target = |id: &str, errs: &mut Vec<String>| {
            if !blocks.contains(id) {
                errs.push(format!("undefined block `{}` in `{}`", id, f.name));
            }
        };
        for b in &f.blocks {
            match &b.exit {
                BlockExit::Goto(t) => check_target(t, &mut errs),
                BlockExit::If {
                    then_block,
                    else_block,
                    ..
                } => {
                    check_target(then_block, &mut errs);
                    check_target(else_block, &mut errs);
                }
                BlockExit::Return(_) => {}
            }
            for prim in &b.prims {
                if let TacPrim::Call { callee, .. } = prim {
                    if !fnames.contains(callee.as_str()) {
                        errs.push(format!("undefined function `{}` called in `{}`", callee, f.name));
                    }
                }
            }
        }
    }
    errs
}

/// Control-flow graph of one function: successor edges between block ids.
/// The entry node is the function's first block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub entry: String,
    pub succs: BTreeMap<String, Vec<String>>,
}

pub fn build_cfg(f: &TacFunction) -> Cfg {
    let mut succs = BTreeMap::new();
    for b in &f.blocks {
        let targets = match &b.exit {
            BlockExit::Return(_) => vec![],
            BlockExit::Goto(t) => vec![t.clone()],
            BlockExit::If {
                then_block,
                else_block,
                ..
            } => vec![then_block.clone(), else_block.clone()],
        };
        succs.insert(b.id.clone(), targets);
    }
    Cfg {
        entry: f.blocks[0].id.clone(),
        succs,
    }
}

pub fn print_tac(p: &TacProgram) -> String {
    let mut s = String::new();
    for f in &p.functions {
        s.push_str(&format!("func {}({}) {{\n", f.name, f.params.join(", ")));
        for b in &f.blocks {
            s.push_str(&format!("{}:\n", b.id));
            for prim in &b.prims {
                match prim {
                    TacPrim::Assign { dst, src } => s.push_str(&format!("  {} = {}\n", dst, src)),
                    TacPrim::BinOp { dst, op, lhs, rhs } => {
                        if op.arity() == 1 {
                            s.push_str(&format!("  {} = - {}\n", dst, lhs));
                        } else {
                            s.push_str(&format!("  {} = {} {} {}\n", dst, lhs, op.symbol(), rhs));
                        }
                    }
                    TacPrim::Call { dst, callee, args } => {
                        let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                        match dst {
                            Some(d) => s.push_str(&format!(
                                "  {} = call {}({})\n",
                                d,
                                callee,
                                args.join(", ")
                            )),
                            None => s.push_str(&format!("  call {}({})\n", callee, args.join(", "))),
                        }
                    }
                }
            }
            match &b.exit {
                BlockExit::Return(v) => s.push_str(&format!("  return {}\n", v)),
                BlockExit::Goto(t) => s.push_str(&format!("  goto {}\n", t)),
                BlockExit::If {
                    cmp,
                    lhs,
                    rhs,
                    then_block,
                    else_block,
                } => s.push_str(&format!(
                    "  if {} {} {} then {} else {}\n",
                    lhs,
                    cmp.symbol(),
                    rhs,
                    then_block,
                    else_block
                )),
            }
        }
        s.push_str("}\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const GCD_TAC: &str = "\
# Euclid's algorithm, pre-lowered to basic blocks.
func gcd(a, b) {
entry:
  goto header
header:
  if b != 0 then body else tail
body:
  t = b
  b = a mod t
  a = t
  goto header
tail:
  return a
}
";

    #[test]
    fn gcd_parses() {
        let p = parse_tac(GCD_TAC).unwrap();
        assert_eq!(p.functions.len(), 1);
        let f = &p.functions[0];
        assert_eq!(f.name, "gcd");
        assert_eq!(f.blocks.len(), 4);
        assert_eq!(f.vars(), vec!["a", "b", "t"]);
        assert!(validate_tac(&p).is_empty());
    }

    #[test]
    fn identity_parses() {
        let p = parse_tac("func f(x) { b0: return x }").unwrap();
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.functions[0].blocks.len(), 1);
        assert_eq!(
            p.functions[0].blocks[0].exit,
            BlockExit::Return(Primval::Var("x".into()))
        );
    }

    #[test]
    fn undefined_block_rejected() {
        let err = parse_tac("func f() { b0: goto b9 }").unwrap_err();
        assert!(err.to_string().contains("b9"), "{err}");
    }

    #[test]
    fn gcd_cfg_edges() {
        let p = parse_tac(GCD_TAC).unwrap();
        let cfg = build_cfg(&p.functions[0]);
        assert_eq!(cfg.entry, "entry");
        assert_eq!(cfg.succs["entry"], vec!["header"]);
        assert_eq!(cfg.succs["header"], vec!["body", "tail"]);
        assert_eq!(cfg.succs["body"], vec!["header"]);
        assert!(cfg.succs["tail"].is_empty());
    }

    #[test]
    fn single_block_cfg() {
        let p = parse_tac("func f(x) { b0: return x }").unwrap();
        let cfg = build_cfg(&p.functions[0]);
        assert_eq!(cfg.succs.len(), 1);
        assert!(cfg.succs["b0"].is_empty());
    }

    #[test]
    fn branching_cfg() {
        let p = parse_tac(
            "func p(x) {
entry: if x < 0 then left else right
left: y = - x
      z = x
      goto tail
right: y = x
       z = - x
       goto tail
tail: t = z - 1
      u = y mod t
      return u
}",
        )
        .unwrap();
        let cfg = build_cfg(&p.functions[0]);
        assert_eq!(cfg.succs["entry"], vec!["left", "right"]);
        assert_eq!(cfg.succs["left"], vec!["tail"]);
        assert_eq!(cfg.succs["right"], vec!["tail"]);
    }

    #[test]
    fn print_parse_round_trip() {
        let p = parse_tac(GCD_TAC).unwrap();
        let q = parse_tac(&print_tac(&p)).unwrap();
        assert_eq!(p, q);
    }
}
