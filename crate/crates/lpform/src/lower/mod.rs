//! Lowering LP form to a flat pseudo-assembly.
//!
//! Each procedure becomes straight-line code: forks compile to a
//! conditional branch to the then-block with the else-block falling
//! through. A leaf whose final call returns exactly the procedure's
//! outputs compiles to a tail call that reuses the current frame, so
//! tail-recursive procedures run in constant stack space.

mod interp;

use std::collections::BTreeMap;
use std::fmt::Write;

use indexmap::IndexMap;

use crate::lpir::{BodyTree, Goal, Guard, LpProgram, PrimOp, Val};

pub use interp::{interp_asm, interp_asm_with, AsmStats};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AsmProgram {
    pub procs: IndexMap<String, AsmProc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsmProc {
    pub name: String,
    pub in_params: Vec<String>,
    pub out_params: Vec<String>,
    pub code: Vec<Instr>,
    /// Branch targets, as indices into `code`.
    pub labels: BTreeMap<String, usize>,
    pub public: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    Prim {
        op: PrimOp,
        ins: Vec<Val>,
        out: String,
    },
    Call {
        callee: String,
        ins: Vec<Val>,
        outs: Vec<String>,
    },
    /// Reuses the current frame; the callee's outputs become this
    /// frame's return values.
    TailCall {
        callee: String,
        ins: Vec<Val>,
    },
    /// Branch to `target` when the guard holds, else fall through.
    Br {
        guard: Guard,
        target: String,
    },
    Ret,
}

pub fn lower(p: &LpProgram) -> AsmProgram {
    let mut out = AsmProgram::default();
    for pr in p.procs.values() {
        let mut proc = AsmProc {
            name: pr.name.clone(),
            in_params: pr.in_params.clone(),
            out_params: pr.out_params.clone(),
            code: Vec::new(),
            labels: BTreeMap::new(),
            public: pr.public,
        };
        let mut next_label = 0;
        emit(&pr.body, &pr.out_params, &mut proc, &mut next_label);
        out.procs.insert(pr.name.clone(), proc);
    }
    out
}

fn emit(node: &BodyTree, out_params: &[String], proc: &mut AsmProc, next_label: &mut usize) {
    let last = node.goals.len().checked_sub(1);
    for (i, g) in node.goals.iter().enumerate() {
        match g {
            Goal::Call { callee, ins, outs }
                if Some(i) == last && node.fork.is_none() && outs == out_params =>
            {
                proc.code.push(Instr::TailCall {
                    callee: callee.clone(),
                    ins: ins.clone(),
                });
                return;
            }
            Goal::Call { callee, ins, outs } => proc.code.push(Instr::Call {
                callee: callee.clone(),
                ins: ins.clone(),
                outs: outs.clone(),
            }),
            Goal::Prim { op, ins, outs } => proc.code.push(Instr::Prim {
                op: *op,
                ins: ins.clone(),
                out: outs[0].clone(),
            }),
        }
    }
    match &node.fork {
        None => proc.code.push(Instr::Ret),
        Some(f) => {
            let label = format!("L{}", *next_label);
            *next_label += 1;
            proc.code.push(Instr::Br {
                guard: f.guard.clone(),
                target: label.clone(),
            });
            emit(&f.else_branch, out_params, proc, next_label);
            proc.labels.insert(label, proc.code.len());
            emit(&f.then_branch, out_params, proc, next_label);
        }
    }
}

pub fn print_asm(p: &AsmProgram) -> String {
    let mut s = String::new();
    for proc in p.procs.values() {
        writeln!(
            s,
            "{}proc {}({}; {}):",
            if proc.public { "pub " } else { "" },
            proc.name,
            proc.in_params.join(", "),
            proc.out_params.join(", ")
        )
        .unwrap();
        let mut by_index: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for (l, i) in &proc.labels {
            by_index.entry(*i).or_default().push(l);
        }
        for (i, instr) in proc.code.iter().enumerate() {
            for l in by_index.get(&i).into_iter().flatten() {
                writeln!(s, "{l}:").unwrap();
            }
            writeln!(s, "  {}", instr_str(instr)).unwrap();
        }
    }
    s
}

fn instr_str(instr: &Instr) -> String {
    use crate::lpir::print::{goal_str, guard_str};
    match instr {
        Instr::Prim { op, ins, out } => goal_str(&Goal::Prim {
            op: *op,
            ins: ins.clone(),
            outs: vec![out.clone()],
        }),
        Instr::Call { callee, ins, outs } => goal_str(&Goal::Call {
            callee: callee.clone(),
            ins: ins.clone(),
            outs: outs.clone(),
        }),
        Instr::TailCall { callee, ins } => format!(
            "tail {}({})",
            callee,
            ins.iter()
                .map(|v| match v {
                    Val::Var(x) => x.clone(),
                    Val::Const(c) => c.to_string(),
                })
                .collect::<Vec<_>>()
                .join(", ")
        ),
        Instr::Br { guard, target } => format!("br {}, {}", guard_str(guard), target),
        Instr::Ret => "ret".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpir::parse_lp;

    const FIG9: &str = "\
pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
pub gcd(a, b; ret) <- b == 0 & ret = a.
";

    #[test]
    fn self_call_in_tail_position_becomes_tail_call() {
        let asm = lower(&parse_lp(FIG9).unwrap());
        let gcd = &asm.procs["gcd"];
        assert!(gcd
            .code
            .iter()
            .any(|i| matches!(i, Instr::TailCall { callee, .. } if callee == "gcd")));
        assert!(!gcd.code.iter().any(|i| matches!(i, Instr::Call { .. })));
    }

    #[test]
    fn call_with_reordered_outputs_is_not_a_tail_call() {
        let p = parse_lp(
            "pub swap(x, y; a, b) <- a = y & b = x.
             pub f(x, y; a, b) <- swap(x, y; b, a).",
        )
        .unwrap();
        let asm = lower(&p);
        assert!(asm.procs["f"]
            .code
            .iter()
            .any(|i| matches!(i, Instr::Call { .. })));
    }

    #[test]
    fn layout_puts_else_on_the_fall_through_path() {
        let asm = lower(&parse_lp(FIG9).unwrap());
        let gcd = &asm.procs["gcd"];
        assert!(matches!(&gcd.code[0], Instr::Br { .. }));
        // Fall-through: ret = a; ret. Then-block behind the label.
        assert!(matches!(&gcd.code[1], Instr::Prim { op: PrimOp::Copy, .. }));
        assert_eq!(gcd.labels["L0"], 3);
    }

    #[test]
    fn printed_form_is_stable() {
        let asm = lower(&parse_lp(FIG9).unwrap());
        assert_eq!(
            print_asm(&asm),
            "pub proc gcd(a, b; ret):\n  \
             br b != 0, L0\n  \
             ret = a\n  \
             ret\nL0:\n  \
             mod(a, b; b0)\n  \
             tail gcd(b, b0)\n"
        );
    }
}
