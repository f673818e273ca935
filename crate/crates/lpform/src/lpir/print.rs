//! Pretty-printer for LP form. Round-trips with the parser; output is
//! deterministic so golden tests can compare bytes.

use std::fmt::Write;

use super::{flatten, Clause, ClauseItem, Goal, Guard, LpProgram, PrimOp, Val};
use crate::ops::CmpOp;

pub fn print_lp(p: &LpProgram) -> String {
    let mut s = String::new();
    for proc in p.procs.values() {
        for clause in flatten(proc) {
            write_clause(&mut s, &clause, proc.public);
        }
    }
    s
}

fn write_clause(s: &mut String, c: &Clause, public: bool) {
    if public {
        s.push_str("pub ");
    }
    write!(
        s,
        "{}({}; {}) <- ",
        c.name,
        c.in_params.join(", "),
        c.out_params.join(", ")
    )
    .unwrap();
    if c.items.is_empty() {
        s.push_str("true");
    } else {
        let goals: Vec<String> = c.items.iter().map(item_str).collect();
        s.push_str(&goals.join(" & "));
    }
    s.push_str(".\n");
}

fn item_str(item: &ClauseItem) -> String {
    match item {
        ClauseItem::Guard(g) => guard_str(g),
        ClauseItem::Goal(g) => goal_str(g),
    }
}

pub(crate) fn guard_str(g: &Guard) -> String {
    // Equality guards print as `==` so they cannot be read back as copies.
    let sym = match g.cmp {
        CmpOp::Eq => "==",
        c => c.symbol(),
    };
    format!("{} {} {}", val_str(&g.lhs), sym, val_str(&g.rhs))
}

pub(crate) fn goal_str(g: &Goal) -> String {
    match g {
        Goal::Prim {
            op: PrimOp::Copy,
            ins,
            outs,
        } => format!("{} = {}", outs[0], val_str(&ins[0])),
        Goal::Prim {
            op: PrimOp::Arith(op),
            ins,
            outs,
        } => format!(
            "{}({}; {})",
            op.name(),
            ins.iter().map(val_str).collect::<Vec<_>>().join(", "),
            outs.join(", ")
        ),
        Goal::Call { callee, ins, outs } => format!(
            "{}({}; {})",
            callee,
            ins.iter().map(val_str).collect::<Vec<_>>().join(", "),
            outs.join(", ")
        ),
    }
}

pub(crate) fn val_str(v: &Val) -> String {
    match v {
        Val::Var(x) => x.clone(),
        Val::Const(c) => c.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpir::parse_lp;

    #[test]
    fn print_parse_print_is_fixpoint() {
        let text = "\
pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
pub gcd(a, b; ret) <- b == 0 & ret = a.
p1(y, z; u) <- sub(z, 1; t) & mod(y, t; u).
";
        let once = print_lp(&parse_lp(text).unwrap());
        let twice = print_lp(&parse_lp(&once).unwrap());
        assert_eq!(once, twice);
        assert_eq!(once, text);
    }

    #[test]
    fn empty_program_prints_empty() {
        assert_eq!(print_lp(&LpProgram::default()), "");
    }
}
