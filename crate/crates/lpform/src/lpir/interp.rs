//! Reference interpreter for LP form.
//!
//! Execution walks the body tree left to right, taking the then branch
//! when the fork guard holds. Variables may be unbound; an unbound
//! variable passed as a call input stays unbound in the callee (the
//! translator threads every function variable through every block
//! procedure), but reading an unbound variable in a primitive or guard
//! is a fault.

use std::collections::HashMap;

use super::{flatten, BodyTree, ClauseItem, Goal, GoalLoc, Guard, LpProgram, PrimOp, Val};
use crate::fault::{Fault, Limits};

type Env = HashMap<String, i64>;

pub fn interp_lp(p: &LpProgram, proc: &str, ins: &[i64]) -> Result<Vec<i64>, Fault> {
    interp_lp_with(p, proc, ins, &Limits::default())
}

pub fn interp_lp_with(
    p: &LpProgram,
    proc: &str,
    ins: &[i64],
    limits: &Limits,
) -> Result<Vec<i64>, Fault> {
    let mut steps = 0u64;
    let inputs: Vec<Option<i64>> = ins.iter().map(|v| Some(*v)).collect();
    let outs = call(p, proc, &inputs, limits, &mut steps, 0, &mut |_, _| {})?;
    outs.into_iter()
        .map(|v| v.ok_or_else(|| Fault::UnassignedVar("<output>".into())))
        .collect()
}

/// Like `interp_lp`, but invokes `observe` with the environment in force
/// just before each goal runs. Used as the concrete side of the interval
/// soundness check.
pub fn interp_lp_observed(
    p: &LpProgram,
    proc: &str,
    ins: &[i64],
    limits: &Limits,
    observe: &mut dyn FnMut(&GoalLoc, &Env),
) -> Result<Vec<Option<i64>>, Fault> {
    let mut steps = 0u64;
    let inputs: Vec<Option<i64>> = ins.iter().map(|v| Some(*v)).collect();
    call(p, proc, &inputs, limits, &mut steps, 0, observe)
}

fn call(
    p: &LpProgram,
    proc: &str,
    ins: &[Option<i64>],
    limits: &Limits,
    steps: &mut u64,
    depth: usize,
    observe: &mut dyn FnMut(&GoalLoc, &Env),
) -> Result<Vec<Option<i64>>, Fault> {
    if depth >= limits.max_depth {
        return Err(Fault::StackDepthExceeded);
    }
    let pr = p
        .proc(proc)
        .ok_or_else(|| Fault::UnknownProc(proc.to_string()))?;
    if pr.in_params.len() != ins.len() {
        return Err(Fault::ArityMismatch(proc.to_string()));
    }
    let mut env: Env = HashMap::new();
    for (param, v) in pr.in_params.iter().zip(ins) {
        if let Some(v) = v {
            env.insert(param.clone(), *v);
        }
    }
    let mut node: &BodyTree = &pr.body;
    let mut path = Vec::new();
    loop {
        for (index, goal) in node.goals.iter().enumerate() {
            let loc = GoalLoc {
                proc: proc.to_string(),
                path: path.clone(),
                index,
            };
            observe(&loc, &env);
            exec_goal(p, goal, &mut env, limits, steps, depth, observe)?;
        }
        match &node.fork {
            None => break,
            Some(f) => {
                step(steps, limits)?;
                let taken = eval_guard(&f.guard, &env)?;
                path.push(!taken);
                node = if taken { &f.then_branch } else { &f.else_branch };
            }
        }
    }
    Ok(pr
        .out_params
        .iter()
        .map(|o| env.get(o).copied())
        .collect())
}

fn exec_goal(
    p: &LpProgram,
    goal: &Goal,
    env: &mut Env,
    limits: &Limits,
    steps: &mut u64,
    depth: usize,
    observe: &mut dyn FnMut(&GoalLoc, &Env),
) -> Result<(), Fault> {
    step(steps, limits)?;
    match goal {
        Goal::Prim { op, ins, outs } => {
            let a = eval(env, &ins[0])?;
            let v = match op {
                PrimOp::Copy => a,
                PrimOp::Arith(op) if op.arity() == 1 => op.eval1(a),
                PrimOp::Arith(op) => op.eval2(a, eval(env, &ins[1])?)?,
            };
            env.insert(outs[0].clone(), v);
        }
        Goal::Call { callee, ins, outs } => {
            let mut args = Vec::with_capacity(ins.len());
            for v in ins {
                args.push(match v {
                    Val::Const(c) => Some(*c),
                    Val::Var(x) => env.get(x).copied(),
                });
            }
            let results = call(p, callee, &args, limits, steps, depth + 1, observe)?;
            for (o, r) in outs.iter().zip(results) {
                if let Some(r) = r {
                    env.insert(o.clone(), r);
                }
            }
        }
    }
    Ok(())
}

fn eval_guard(g: &Guard, env: &Env) -> Result<bool, Fault> {
    Ok(g.cmp.eval(eval(env, &g.lhs)?, eval(env, &g.rhs)?))
}

fn eval(env: &Env, v: &Val) -> Result<i64, Fault> {
    match v {
        Val::Const(c) => Ok(*c),
        Val::Var(x) => env
            .get(x)
            .copied()
            .ok_or_else(|| Fault::UnassignedVar(x.clone())),
    }
}

fn step(steps: &mut u64, limits: &Limits) -> Result<(), Fault> {
    *steps += 1;
    if *steps > limits.step_budget {
        Err(Fault::StepBudgetExceeded)
    } else {
        Ok(())
    }
}

/// Counts how many flattened clauses of `proc` apply to the given inputs:
/// a clause applies when every guard on it holds, executing the prefix
/// goals to bind guard operands. Returns `Err` when evaluation faults
/// (in which case clause selection is moot for that input). Used to test
/// the determinism property: for valid procedures the count is exactly 1.
pub fn clause_selection_count(
    p: &LpProgram,
    proc: &str,
    ins: &[i64],
    limits: &Limits,
) -> Result<usize, Fault> {
    let pr = p
        .proc(proc)
        .ok_or_else(|| Fault::UnknownProc(proc.to_string()))?;
    let mut applies = 0usize;
    for clause in flatten(pr) {
        let mut env: Env = HashMap::new();
        for (param, v) in pr.in_params.iter().zip(ins) {
            env.insert(param.clone(), *v);
        }
        let mut steps = 0u64;
        let mut ok = true;
        for item in &clause.items {
            match item {
                ClauseItem::Guard(g) => {
                    if !eval_guard(g, &env)? {
                        ok = false;
                        break;
                    }
                }
                ClauseItem::Goal(goal) => {
                    exec_goal(p, goal, &mut env, limits, &mut steps, 0, &mut |_, _| {})?;
                }
            }
        }
        if ok {
            applies += 1;
        }
    }
    Ok(applies)
}
