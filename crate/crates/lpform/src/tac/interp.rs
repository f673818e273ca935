//! Reference interpreter for three-address code. This is the semantic
//! oracle the rest of the pipeline is checked against.

use std::collections::HashMap;

use super::{BlockExit, Primval, TacFunction, TacPrim, TacProgram};
use crate::fault::{Fault, Limits};

/// Runs `fname` on `args` and returns the value of the first executed
/// `return`. Deterministic; arithmetic wraps; comparisons are signed.
pub fn interp_tac(p: &TacProgram, fname: &str, args: &[i64]) -> Result<i64, Fault> {
    interp_tac_with(p, fname, args, &Limits::default())
}

pub fn interp_tac_with(
    p: &TacProgram,
    fname: &str,
    args: &[i64],
    limits: &Limits,
) -> Result<i64, Fault> {
    let mut steps = 0u64;
    call(p, fname, args, limits, &mut steps, 0)
}

fn call(
    p: &TacProgram,
    fname: &str,
    args: &[i64],
    limits: &Limits,
    steps: &mut u64,
    depth: usize,
) -> Result<i64, Fault> {
    if depth >= limits.max_depth {
        return Err(Fault::StackDepthExceeded);
    }
    let f = p
        .function(fname)
        .ok_or_else(|| Fault::UnknownProc(fname.to_string()))?;
    if f.params.len() != args.len() {
        return Err(Fault::ArityMismatch(fname.to_string()));
    }
    let mut env: HashMap<&str, i64> = HashMap::new();
    for (p, a) in f.params.iter().zip(args) {
        env.insert(p, *a);
    }
    let mut block = &f.blocks[0];
    loop {
        for prim in &block.prims {
            step(steps, limits)?;
            match prim {
                TacPrim::Assign { dst, src } => {
                    let v = eval(&env, src)?;
                    env.insert(dst, v);
                }
                TacPrim::BinOp { dst, op, lhs, rhs } => {
                    let a = eval(&env, lhs)?;
                    let v = if op.arity() == 1 {
                        op.eval1(a)
                    } else {
                        op.eval2(a, eval(&env, rhs)?)?
                    };
                    env.insert(dst, v);
                }
                TacPrim::Call { dst, callee, args } => {
                    let mut vals = Vec::with_capacity(args.len());
                    for a in args {
                        vals.push(eval(&env, a)?);
                    }
                    let r = call(p, callee, &vals, limits, steps, depth + 1)?;
                    if let Some(d) = dst {
                        env.insert(d, r);
                    }
                }
            }
        }
        step(steps, limits)?;
        match &block.exit {
            BlockExit::Return(v) => return eval(&env, v),
            BlockExit::Goto(t) => block = lookup_block(f, t),
            BlockExit::If {
                cmp,
                lhs,
                rhs,
                then_block,
                else_block,
            } => {
                let a = eval(&env, lhs)?;
                let b = eval(&env, rhs)?;
                let t = if cmp.eval(a, b) { then_block } else { else_block };
                block = lookup_block(f, t);
            }
        }
    }
}

fn lookup_block<'a>(f: &'a TacFunction, id: &str) -> &'a super::TacBlock {
    // Target existence is a validation invariant.
    f.block(id).expect("jump target exists in validated program")
}

fn step(steps: &mut u64, limits: &Limits) -> Result<(), Fault> {
    *steps += 1;
    if *steps > limits.step_budget {
        Err(Fault::StepBudgetExceeded)
    } else {
        Ok(())
    }
}

fn eval(env: &HashMap<&str, i64>, v: &Primval) -> Result<i64, Fault> {
    match v {
        Primval::Const(c) => Ok(*c),
        Primval::Var(x) => env
            .get(x.as_str())
            .copied()
            .ok_or_else(|| Fault::UnassignedVar(x.clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tac::parse_tac;

    const GCD: &str = "\
func gcd(a, b) {
entry: goto header
header: if b != 0 then body else tail
body: t = b
      b = a mod t
      a = t
      goto header
tail: return a
}";

    fn euclid(mut a: i64, mut b: i64) -> i64 {
        while b != 0 {
            let t = b;
            b = a % t;
            a = t;
        }
        a
    }

    #[test]
    fn gcd_values() {
        let p = parse_tac(GCD).unwrap();
        assert_eq!(interp_tac(&p, "gcd", &[12, 8]).unwrap(), 4);
        assert_eq!(interp_tac(&p, "gcd", &[7, 0]).unwrap(), 7);
        assert_eq!(interp_tac(&p, "gcd", &[5, 0]).unwrap(), 5);
        assert_eq!(interp_tac(&p, "gcd", &[0, 5]).unwrap(), 5);
        // Cross-check against an independent gcd routine.
        for a in -8..=8 {
            for b in -8..=8 {
                assert_eq!(interp_tac(&p, "gcd", &[a, b]).unwrap(), euclid(a, b));
            }
        }
    }

    #[test]
    fn deterministic() {
        let p = parse_tac(GCD).unwrap();
        assert_eq!(
            interp_tac(&p, "gcd", &[48, 36]),
            interp_tac(&p, "gcd", &[48, 36])
        );
    }

    #[test]
    fn division_by_zero_faults() {
        let p = parse_tac("func f(x) { b0: y = x / 0\n return y }").unwrap();
        assert_eq!(interp_tac(&p, "f", &[1]), Err(Fault::DivisionByZero));
    }

    #[test]
    fn unassigned_variable_faults() {
        let p = parse_tac("func f() { b0: return q }").unwrap();
        assert_eq!(
            interp_tac(&p, "f", &[]),
            Err(Fault::UnassignedVar("q".into()))
        );
    }

    #[test]
    fn nontermination_exceeds_budget() {
        let p = parse_tac("func f() { b0: goto b0 }").unwrap();
        let limits = Limits {
            step_budget: 1000,
            ..Limits::default()
        };
        assert_eq!(
            interp_tac_with(&p, "f", &[], &limits),
            Err(Fault::StepBudgetExceeded)
        );
    }

    #[test]
    fn wrapping_arithmetic() {
        let p = parse_tac("func f(x) { b0: y = x + 1\n return y }").unwrap();
        assert_eq!(interp_tac(&p, "f", &[i64::MAX]).unwrap(), i64::MIN);
    }
}
