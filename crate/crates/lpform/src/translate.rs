//! Translation from three-address code to LP form.
//!
//! Each function becomes one public wrapper procedure plus one
//! procedure per basic block; every block procedure takes all the
//! function's variables plus the state variable `st` as inputs and
//! produces the return variable `ret` and the final state as outputs.
//! Conditional exits generate an auxiliary two-clause procedure whose
//! clauses carry the test and its complement. A renaming substitution
//! keeps every variable singly assigned within a clause.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lpir::{BodyTree, Fork, Goal, Guard, LpProc, LpProgram, PrimOp, Val};
use crate::tac::{BlockExit, Primval, TacFunction, TacPrim, TacProgram};

pub const STATE_VAR: &str = "st";
pub const RET_VAR: &str = "ret";

#[derive(Debug, Clone, Error)]
pub enum TranslateError {
    #[error("function `{0}` uses reserved variable name `{1}`")]
    ReservedName(String, String),
}

/// Single-assignment renaming: maps source variable names to their
/// current renamed version. Identity for unmapped names.
#[derive(Debug, Clone, Default)]
pub struct Subst {
    map: BTreeMap<String, String>,
}

impl Subst {
    pub fn apply(&self, v: &str) -> String {
        self.map.get(v).cloned().unwrap_or_else(|| v.to_string())
    }

    pub fn apply_val(&self, v: &Primval) -> Val {
        match v {
            Primval::Var(x) => Val::Var(self.apply(x)),
            Primval::Const(c) => Val::Const(*c),
        }
    }

    pub fn bind(&mut self, v: &str, to: String) {
        self.map.insert(v.to_string(), to);
    }
}

/// Issues fresh variable names (`base` + numeric suffix) that never
/// collide with source names or earlier fresh names.
#[derive(Debug, Clone)]
pub struct NameSupply {
    used: BTreeSet<String>,
    counters: BTreeMap<String, usize>,
}

impl NameSupply {
    pub fn new(reserved: impl IntoIterator<Item = String>) -> NameSupply {
        NameSupply {
            used: reserved.into_iter().collect(),
            counters: BTreeMap::new(),
        }
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let counter = self.counters.entry(base.to_string()).or_insert(0);
        loop {
            let candidate = format!("{}{}", base, *counter);
            *counter += 1;
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
    }
}

pub fn translate_program(p: &TacProgram) -> Result<LpProgram, TranslateError> {
    let mut out = LpProgram::default();
    for f in &p.functions {
        translate_function(f, &mut out)?;
    }
    Ok(out)
}

struct FuncCtx<'a> {
    func: &'a TacFunction,
    /// All function variables, parameters first, in first-occurrence order.
    vars: Vec<String>,
    nu_count: usize,
}

impl FuncCtx<'_> {
    /// `(v̄, st)` as call arguments under a substitution. Variables not
    /// yet assigned are passed free.
    fn var_args(&self, theta: &Subst) -> Vec<Val> {
        let mut args: Vec<Val> = self
            .vars
            .iter()
            .map(|v| Val::Var(theta.apply(v)))
            .collect();
        args.push(Val::Var(theta.apply(STATE_VAR)));
        args
    }

    fn block_proc_name(&self, block: &str) -> String {
        format!("{}_{}", self.func.name, block)
    }

    fn fresh_nu_name(&mut self) -> String {
        self.nu_count += 1;
        if self.nu_count == 1 {
            format!("{}_ν", self.func.name)
        } else {
            format!("{}_ν{}", self.func.name, self.nu_count)
        }
    }

    fn head_ins(&self) -> Vec<String> {
        let mut ins = self.vars.clone();
        ins.push(STATE_VAR.to_string());
        ins
    }
}

fn translate_function(f: &TacFunction, out: &mut LpProgram) -> Result<(), TranslateError> {
    let vars = f.vars();
    for v in &vars {
        if v == STATE_VAR || v == RET_VAR {
            return Err(TranslateError::ReservedName(f.name.clone(), v.clone()));
        }
    }
    let mut ctx = FuncCtx {
        func: f,
        vars,
        nu_count: 0,
    };

    // Wrapper: f(p̄, st; ret, st') <- f_B0(v̄, st; ret, st').
    {
        let mut supply = base_supply(&ctx);
        let st_out = supply.fresh(STATE_VAR);
        let theta = Subst::default();
        let mut in_params = f.params.clone();
        in_params.push(STATE_VAR.to_string());
        out.insert(LpProc {
            name: f.name.clone(),
            in_params,
            out_params: vec![RET_VAR.to_string(), st_out.clone()],
            body: BodyTree::leaf(vec![Goal::Call {
                callee: ctx.block_proc_name(&f.blocks[0].id),
                ins: ctx.var_args(&theta),
                outs: vec![RET_VAR.to_string(), st_out],
            }]),
            public: true,
        });
    }

    for block in &f.blocks {
        let mut supply = base_supply(&ctx);
        let mut theta = Subst::default();
        let mut goals = Vec::new();
        for prim in &block.prims {
            translate_prim(prim, &mut theta, &mut supply, &mut goals);
        }
        let mut aux = Vec::new();
        let st_out = translate_exit(&block.exit, &mut ctx, &theta, &mut supply, &mut goals, &mut aux);
        out.insert(LpProc {
            name: ctx.block_proc_name(&block.id),
            in_params: ctx.head_ins(),
            out_params: vec![RET_VAR.to_string(), st_out],
            body: BodyTree::leaf(goals),
            public: false,
        });
        for p in aux {
            out.insert(p);
        }
    }
    Ok(())
}

fn base_supply(ctx: &FuncCtx) -> NameSupply {
    let mut reserved: Vec<String> = ctx.vars.clone();
    reserved.push(STATE_VAR.to_string());
    reserved.push(RET_VAR.to_string());
    NameSupply::new(reserved)
}

/// Translates one primitive statement, appending its goal and updating
/// the substitution.
pub fn translate_prim(prim: &TacPrim, theta: &mut Subst, supply: &mut NameSupply, goals: &mut Vec<Goal>) {
    match prim {
        // v = r  ⇒  v' = rθ
        TacPrim::Assign { dst, src } => {
            let src = theta.apply_val(src);
            let fresh = supply.fresh(dst);
            goals.push(Goal::copy(src, fresh.clone()));
            theta.bind(dst, fresh);
        }
        // v = a ⊙ b  ⇒  ⊙(āθ; v')
        TacPrim::BinOp { dst, op, lhs, rhs } => {
            let mut ins = vec![theta.apply_val(lhs)];
            if op.arity() == 2 {
                ins.push(theta.apply_val(rhs));
            }
            let fresh = supply.fresh(dst);
            goals.push(Goal::Prim {
                op: PrimOp::Arith(*op),
                ins,
                outs: vec![fresh.clone()],
            });
            theta.bind(dst, fresh);
        }
        // v = g(ā)  ⇒  g(āθ, st; v', st')
        TacPrim::Call { dst, callee, args } => {
            let mut ins: Vec<Val> = args.iter().map(|a| theta.apply_val(a)).collect();
            ins.push(Val::Var(theta.apply(STATE_VAR)));
            let result = supply.fresh(dst.as_deref().unwrap_or("v"));
            let st_next = supply.fresh(STATE_VAR);
            goals.push(Goal::Call {
                callee: callee.clone(),
                ins,
                outs: vec![result.clone(), st_next.clone()],
            });
            if let Some(d) = dst {
                theta.bind(d, result);
            }
            theta.bind(STATE_VAR, st_next);
        }
    }
}

/// Translates the block exit, returning the name of the block's output
/// state parameter.
fn translate_exit(
    exit: &BlockExit,
    ctx: &mut FuncCtx,
    theta: &Subst,
    supply: &mut NameSupply,
    goals: &mut Vec<Goal>,
    aux: &mut Vec<LpProc>,
) -> String {
    match exit {
        // return v  ⇒  ret = vθ (and forward the state)
        BlockExit::Return(v) => {
            goals.push(Goal::copy(theta.apply_val(v), RET_VAR));
            let st_out = supply.fresh(STATE_VAR);
            goals.push(Goal::copy(Val::Var(theta.apply(STATE_VAR)), st_out.clone()));
            st_out
        }
        // goto B  ⇒  tail call f_B(v̄θ, stθ; ret, st')
        BlockExit::Goto(target) => {
            let st_out = supply.fresh(STATE_VAR);
            goals.push(Goal::Call {
                callee: ctx.block_proc_name(target),
                ins: ctx.var_args(theta),
                outs: vec![RET_VAR.to_string(), st_out.clone()],
            });
            st_out
        }
        // if (a ⊲ b) Bt Bf  ⇒  call ν(v̄θ, stθ; ret, st') plus the
        // two-clause ν procedure carrying the guard and its complement.
        BlockExit::If {
            cmp,
            lhs,
            rhs,
            then_block,
            else_block,
        } => {
            let nu_name = ctx.fresh_nu_name();
            let st_out = supply.fresh(STATE_VAR);
            goals.push(Goal::Call {
                callee: nu_name.clone(),
                ins: ctx.var_args(theta),
                outs: vec![RET_VAR.to_string(), st_out.clone()],
            });

            // Inside ν the variables are its own parameters, unrenamed.
            let mut nu_supply = base_supply(ctx);
            let nu_st_out = nu_supply.fresh(STATE_VAR);
            let plain = Subst::default();
            let branch_call = |target: &str, ctx: &FuncCtx| Goal::Call {
                callee: ctx.block_proc_name(target),
                ins: ctx.var_args(&plain),
                outs: vec![RET_VAR.to_string(), nu_st_out.clone()],
            };
            let guard = Guard {
                cmp: *cmp,
                lhs: plain.apply_val(lhs),
                rhs: plain.apply_val(rhs),
            };
            aux.push(LpProc {
                name: nu_name,
                in_params: ctx.head_ins(),
                out_params: vec![RET_VAR.to_string(), nu_st_out.clone()],
                body: BodyTree {
                    goals: vec![],
                    fork: Some(Box::new(Fork {
                        guard,
                        then_branch: BodyTree::leaf(vec![branch_call(then_block, ctx)]),
                        else_branch: BodyTree::leaf(vec![branch_call(else_block, ctx)]),
                    })),
                },
                public: false,
            });
            st_out
        }
    }
}
