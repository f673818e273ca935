//! Reference interpreter for the pseudo-assembly, with an explicit frame
//! stack so the stack-depth behaviour of tail calls is observable.

use std::collections::HashMap;

use super::{AsmProgram, Instr};
use crate::fault::{Fault, Limits};
use crate::lpir::{Guard, PrimOp, Val};

#[derive(Debug, Clone, Copy, Default)]
pub struct AsmStats {
    pub max_depth: usize,
    pub steps: u64,
}

struct Frame {
    proc: String,
    pc: usize,
    env: HashMap<String, i64>,
    /// Caller slots receiving this frame's outputs.
    ret_dsts: Vec<String>,
}

pub fn interp_asm(p: &AsmProgram, proc: &str, ins: &[i64]) -> Result<Vec<i64>, Fault> {
    interp_asm_with(p, proc, ins, &Limits::default()).map(|(v, _)| v)
}

pub fn interp_asm_with(
    p: &AsmProgram,
    proc: &str,
    ins: &[i64],
    limits: &Limits,
) -> Result<(Vec<i64>, AsmStats), Fault> {
    let args: Vec<Option<i64>> = ins.iter().map(|v| Some(*v)).collect();
    let mut stack = vec![make_frame(p, proc, &args, vec![])?];
    let mut stats = AsmStats {
        max_depth: 1,
        steps: 0,
    };
    loop {
        stats.steps += 1;
        if stats.steps > limits.step_budget {
            return Err(Fault::StepBudgetExceeded);
        }
        let proc_name = stack.last().unwrap().proc.clone();
        let pr = &p.procs[&proc_name];
        let instr = pr.code[stack.last().unwrap().pc].clone();
        let frame = stack.last_mut().unwrap();
        match &instr {
            Instr::Prim { op, ins, out } => {
                let a = eval(&frame.env, &ins[0])?;
                let v = match op {
                    PrimOp::Copy => a,
                    PrimOp::Arith(op) if op.arity() == 1 => op.eval1(a),
                    PrimOp::Arith(op) => op.eval2(a, eval(&frame.env, &ins[1])?)?,
                };
                frame.env.insert(out.clone(), v);
                frame.pc += 1;
            }
            Instr::Br { guard, target } => {
                frame.pc = if eval_guard(&frame.env, guard)? {
                    pr.labels[target]
                } else {
                    frame.pc + 1
                };
            }
            Instr::Call { callee, ins, outs } => {
                let args = eval_args(&frame.env, ins);
                if stack.len() >= limits.max_depth {
                    return Err(Fault::StackDepthExceeded);
                }
                let new = make_frame(p, callee, &args, outs.clone())?;
                stack.push(new);
                stats.max_depth = stats.max_depth.max(stack.len());
            }
            Instr::TailCall { callee, ins } => {
                let args = eval_args(&frame.env, ins);
                let ret_dsts = std::mem::take(&mut frame.ret_dsts);
                *frame = make_frame(p, callee, &args, ret_dsts)?;
            }
            Instr::Ret => {
                let results: Vec<Option<i64>> = pr
                    .out_params
                    .iter()
                    .map(|o| frame.env.get(o).copied())
                    .collect();
                let done = stack.pop().unwrap();
                match stack.last_mut() {
                    None => {
                        let outs = results
                            .into_iter()
                            .map(|v| v.ok_or_else(|| Fault::UnassignedVar("<output>".into())))
                            .collect::<Result<Vec<i64>, Fault>>()?;
                        return Ok((outs, stats));
                    }
                    Some(caller) => {
                        for (dst, v) in done.ret_dsts.iter().zip(results) {
                            if let Some(v) = v {
                                caller.env.insert(dst.clone(), v);
                            }
                        }
                        caller.pc += 1;
                    }
                }
            }
        }
    }
}

fn make_frame(
    p: &AsmProgram,
    proc: &str,
    args: &[Option<i64>],
    ret_dsts: Vec<String>,
) -> Result<Frame, Fault> {
    let pr = p
        .procs
        .get(proc)
        .ok_or_else(|| Fault::UnknownProc(proc.to_string()))?;
    if pr.in_params.len() != args.len() {
        return Err(Fault::ArityMismatch(proc.to_string()));
    }
    let mut env = HashMap::new();
    for (param, v) in pr.in_params.iter().zip(args) {
        if let Some(v) = v {
            env.insert(param.clone(), *v);
        }
    }
    Ok(Frame {
        proc: proc.to_string(),
        pc: 0,
        env,
        ret_dsts,
    })
}

fn eval_args(env: &HashMap<String, i64>, ins: &[Val]) -> Vec<Option<i64>> {
    ins.iter()
        .map(|v| match v {
            Val::Const(c) => Some(*c),
            Val::Var(x) => env.get(x).copied(),
        })
        .collect()
}

fn eval(env: &HashMap<String, i64>, v: &Val) -> Result<i64, Fault> {
    match v {
        Val::Const(c) => Ok(*c),
        Val::Var(x) => env
            .get(x)
            .copied()
            .ok_or_else(|| Fault::UnassignedVar(x.clone())),
    }
}

fn eval_guard(env: &HashMap<String, i64>, g: &Guard) -> Result<bool, Fault> {
    Ok(g.cmp.eval(eval(env, &g.lhs)?, eval(env, &g.rhs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::lower;
    use crate::lpir::{interp_lp, parse_lp};

    const FIG9: &str = "\
pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
pub gcd(a, b; ret) <- b == 0 & ret = a.
";

    #[test]
    fn agrees_with_lp_interpreter() {
        let p = parse_lp(FIG9).unwrap();
        let asm = lower(&p);
        for a in -8..=8 {
            for b in -8..=8 {
                assert_eq!(
                    interp_asm(&asm, "gcd", &[a, b]).unwrap(),
                    interp_lp(&p, "gcd", &[a, b]).unwrap(),
                    "a={a} b={b}"
                );
            }
        }
    }

    #[test]
    fn tail_recursion_runs_at_constant_depth() {
        let asm = lower(&parse_lp(FIG9).unwrap());
        let (out, stats) = interp_asm_with(&asm, "gcd", &[1071, 462], &Limits::default()).unwrap();
        assert_eq!(out, vec![21]);
        assert_eq!(stats.max_depth, 1);
    }

    #[test]
    fn non_tail_recursion_grows_the_stack() {
        // fact is not tail-recursive: the multiply happens after the call.
        let p = parse_lp(
            "pub fact(n; r) <- n > 0 & sub(n, 1; m) & fact(m; s) & mul(n, s; r).
             pub fact(n; r) <- n <= 0 & r = 1.",
        )
        .unwrap();
        let asm = lower(&p);
        let (out, stats) = interp_asm_with(&asm, "fact", &[5], &Limits::default()).unwrap();
        assert_eq!(out, vec![120]);
        assert_eq!(stats.max_depth, 6);
    }

    #[test]
    fn depth_limit_faults() {
        let p = parse_lp(
            "pub fact(n; r) <- n > 0 & sub(n, 1; m) & fact(m; s) & mul(n, s; r).
             pub fact(n; r) <- n <= 0 & r = 1.",
        )
        .unwrap();
        let asm = lower(&p);
        let limits = Limits {
            max_depth: 4,
            ..Limits::default()
        };
        assert!(matches!(
            interp_asm_with(&asm, "fact", &[10], &limits),
            Err(Fault::StackDepthExceeded)
        ));
    }

    #[test]
    fn faults_match_the_source_program() {
        let p = parse_lp("pub f(x, y; r) <- div(x, y; r).").unwrap();
        let asm = lower(&p);
        assert!(matches!(
            interp_asm(&asm, "f", &[1, 0]),
            Err(Fault::DivisionByZero)
        ));
    }
}
