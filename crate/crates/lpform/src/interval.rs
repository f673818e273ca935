//! Forward interval analysis over LP form.
//!
//! Values are abstracted as intervals with infinite endpoints; guards
//! refine both fork branches; procedure summaries are
//! context-insensitive, joining the argument intervals of every call
//! site. Termination on recursive programs comes from widening after a
//! few ascending iterations, followed by one narrowing pass. Arithmetic
//! is exact on mathematical integers: endpoints leaving the machine
//! range become infinite, so the results describe executions that do
//! not overflow.

use std::collections::BTreeMap;

use crate::lpir::{BodyTree, Goal, GoalLoc, Guard, LpProgram, PrimOp, Val};
use crate::ops::{ArithOp, CmpOp};

const WIDEN_AFTER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExtInt {
    NegInf,
    Int(i64),
    PosInf,
}

impl ExtInt {
    fn clamp(v: i128) -> ExtInt {
        if v < i64::MIN as i128 {
            ExtInt::NegInf
        } else if v > i64::MAX as i128 {
            ExtInt::PosInf
        } else {
            ExtInt::Int(v as i64)
        }
    }

    fn add(self, d: i128) -> ExtInt {
        match self {
            ExtInt::Int(v) => ExtInt::clamp(v as i128 + d),
            inf => inf,
        }
    }

    fn neg(self) -> ExtInt {
        match self {
            ExtInt::NegInf => ExtInt::PosInf,
            ExtInt::PosInf => ExtInt::NegInf,
            ExtInt::Int(v) => ExtInt::clamp(-(v as i128)),
        }
    }

    fn abs_hi(self, other: ExtInt) -> ExtInt {
        // max(|self|, |other|) for an interval's endpoints.
        match (self, other) {
            (ExtInt::NegInf, _) | (_, ExtInt::PosInf) => ExtInt::PosInf,
            (ExtInt::Int(a), ExtInt::Int(b)) => ExtInt::Int(a.unsigned_abs().max(b.unsigned_abs()).min(i64::MAX as u64) as i64),
            _ => unreachable!("lo > hi"),
        }
    }
}

impl std::fmt::Display for ExtInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtInt::NegInf => write!(f, "-inf"),
            ExtInt::PosInf => write!(f, "+inf"),
            ExtInt::Int(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    Empty,
    Range(ExtInt, ExtInt),
}

use Interval::{Empty, Range};

impl Interval {
    pub const TOP: Interval = Range(ExtInt::NegInf, ExtInt::PosInf);

    pub fn constant(c: i64) -> Interval {
        Range(ExtInt::Int(c), ExtInt::Int(c))
    }

    pub fn of(lo: i64, hi: i64) -> Interval {
        Range(ExtInt::Int(lo), ExtInt::Int(hi))
    }

    fn range(lo: ExtInt, hi: ExtInt) -> Interval {
        if lo > hi {
            Empty
        } else {
            Range(lo, hi)
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        match self {
            Empty => false,
            Range(lo, hi) => *lo <= ExtInt::Int(v) && ExtInt::Int(v) <= *hi,
        }
    }

    pub fn join(self, other: Interval) -> Interval {
        match (self, other) {
            (Empty, x) | (x, Empty) => x,
            (Range(a, b), Range(c, d)) => Range(a.min(c), b.max(d)),
        }
    }

    pub fn meet(self, other: Interval) -> Interval {
        match (self, other) {
            (Empty, _) | (_, Empty) => Empty,
            (Range(a, b), Range(c, d)) => Interval::range(a.max(c), b.min(d)),
        }
    }

    /// Unstable bounds jump to infinity.
    pub fn widen(self, next: Interval) -> Interval {
        match (self, next) {
            (Empty, x) => x,
            (x, Empty) => x,
            (Range(a, b), Range(c, d)) => Range(
                if c < a { ExtInt::NegInf } else { a },
                if d > b { ExtInt::PosInf } else { b },
            ),
        }
    }

    pub fn excludes_zero(&self) -> bool {
        match self {
            Empty => true,
            Range(lo, hi) => *lo > ExtInt::Int(0) || *hi < ExtInt::Int(0),
        }
    }

    fn endpoints(self) -> Option<(ExtInt, ExtInt)> {
        match self {
            Empty => None,
            Range(lo, hi) => Some((lo, hi)),
        }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Empty => write!(f, "empty"),
            Range(lo, hi) => write!(f, "[{lo},{hi}]"),
        }
    }
}

fn finite(e: ExtInt) -> Option<i128> {
    match e {
        ExtInt::Int(v) => Some(v as i128),
        _ => None,
    }
}

pub fn transfer(op: ArithOp, args: &[Interval]) -> Interval {
    if args.iter().any(|a| *a == Empty) {
        return Empty;
    }
    let (alo, ahi) = args[0].endpoints().unwrap();
    match op {
        ArithOp::Neg => Range(ahi.neg(), alo.neg()),
        ArithOp::Add | ArithOp::Sub | ArithOp::Mul => {
            let (blo, bhi) = args[1].endpoints().unwrap();
            match op {
                ArithOp::Add => Interval::range(ext_add(alo, blo), ext_add(ahi, bhi)),
                ArithOp::Sub => Interval::range(ext_add(alo, bhi.neg()), ext_add(ahi, blo.neg())),
                ArithOp::Mul => {
                    let products = [
                        ext_mul(alo, blo),
                        ext_mul(alo, bhi),
                        ext_mul(ahi, blo),
                        ext_mul(ahi, bhi),
                    ];
                    Interval::range(
                        products.iter().copied().min().unwrap(),
                        products.iter().copied().max().unwrap(),
                    )
                }
                _ => unreachable!(),
            }
        }
        ArithOp::Div => div_transfer(args[0], args[1]),
        ArithOp::Mod => {
            // r has the sign of the dividend and |r| < |divisor|.
            let (blo, bhi) = args[1].endpoints().unwrap();
            if args[1] == Interval::constant(0) {
                return Empty;
            }
            let m = blo.abs_hi(bhi).add(-1);
            Interval::range(
                m.neg().max(alo.min(ExtInt::Int(0))),
                m.min(ahi.max(ExtInt::Int(0))),
            )
        }
    }
}

fn ext_add(a: ExtInt, b: ExtInt) -> ExtInt {
    match (a, b) {
        (ExtInt::Int(x), ExtInt::Int(y)) => ExtInt::clamp(x as i128 + y as i128),
        (ExtInt::NegInf, _) | (_, ExtInt::NegInf) => ExtInt::NegInf,
        _ => ExtInt::PosInf,
    }
}

fn ext_mul(a: ExtInt, b: ExtInt) -> ExtInt {
    match (finite(a), finite(b)) {
        (Some(x), Some(y)) => ExtInt::clamp(x * y),
        (Some(0), _) | (_, Some(0)) => ExtInt::Int(0),
        _ => {
            let neg = matches!(a, ExtInt::NegInf) as i32
                + matches!(b, ExtInt::NegInf) as i32
                + matches!(a, ExtInt::Int(v) if v < 0) as i32
                + matches!(b, ExtInt::Int(v) if v < 0) as i32;
            if neg % 2 == 0 {
                ExtInt::PosInf
            } else {
                ExtInt::NegInf
            }
        }
    }
}

fn div_transfer(a: Interval, b: Interval) -> Interval {
    // Split the divisor into its strictly negative and positive parts;
    // division by zero cannot produce a value.
    let (blo, bhi) = b.endpoints().unwrap();
    let mut out = Empty;
    for part in [
        Interval::range(blo, bhi.min(ExtInt::Int(-1))),
        Interval::range(blo.max(ExtInt::Int(1)), bhi),
    ] {
        let Some((plo, phi)) = part.endpoints() else { continue };
        let (alo, ahi) = a.endpoints().unwrap();
        let all_finite = [alo, ahi, plo, phi].iter().all(|e| finite(*e).is_some());
        let q = if all_finite {
            let cands: Vec<i128> = [alo, ahi]
                .iter()
                .flat_map(|x| [plo, phi].map(|y| finite(*x).unwrap() / finite(y).unwrap()))
                .collect();
            Interval::range(
                ExtInt::clamp(*cands.iter().min().unwrap()),
                ExtInt::clamp(*cands.iter().max().unwrap()),
            )
        } else {
            // |a / b| <= |a| for |b| >= 1.
            let m = alo.abs_hi(ahi);
            Range(m.neg(), m)
        };
        out = out.join(q);
    }
    out
}

pub type IntervalEnv = BTreeMap<String, Interval>;

#[derive(Debug, Clone, Default)]
pub struct Analysis {
    /// Joined input intervals per procedure (indexed like `in_params`).
    /// Procedures never called and not public are absent.
    pub proc_inputs: BTreeMap<String, Vec<Interval>>,
    /// Output intervals per procedure.
    pub proc_outputs: BTreeMap<String, Vec<Interval>>,
    /// Environment in force just before each goal.
    pub goal_envs: BTreeMap<GoalLoc, IntervalEnv>,
}

pub fn analyze_intervals(p: &LpProgram) -> Analysis {
    analyze_intervals_from(p, &default_seeds(p))
}

/// Default entry assumptions: every public procedure, unconstrained.
pub fn default_seeds(p: &LpProgram) -> BTreeMap<String, Vec<Interval>> {
    p.procs
        .values()
        .filter(|pr| pr.public)
        .map(|pr| (pr.name.clone(), vec![Interval::TOP; pr.in_params.len()]))
        .collect()
}

pub fn analyze_intervals_from(
    p: &LpProgram,
    seeds: &BTreeMap<String, Vec<Interval>>,
) -> Analysis {
    let mut a = Analysis::default();
    a.proc_inputs = seeds.clone();
    let mut joins: BTreeMap<String, usize> = BTreeMap::new();
    let mut out_joins: BTreeMap<String, usize> = BTreeMap::new();
    // Ascending phase with widening on both inputs and outputs.
    loop {
        let mut pending: Vec<(String, Vec<Interval>)> = Vec::new();
        let mut changed = false;
        for pr in p.procs.values() {
            let Some(ins) = a.proc_inputs.get(&pr.name).cloned() else { continue };
            let outs = analyze_proc(pr, &ins, &mut a, &mut pending, false);
            let next: Vec<Interval> = match a.proc_outputs.get(&pr.name) {
                Some(old) => {
                    let c = out_joins.entry(pr.name.clone()).or_insert(0);
                    *c += 1;
                    old.iter()
                        .zip(&outs)
                        .map(|(o, n)| {
                            if *c > WIDEN_AFTER {
                                o.widen(o.join(*n))
                            } else {
                                o.join(*n)
                            }
                        })
                        .collect()
                }
                None => outs,
            };
            if a.proc_outputs.get(&pr.name) != Some(&next) {
                a.proc_outputs.insert(pr.name.clone(), next);
                changed = true;
            }
        }
        for (callee, args) in pending {
            let widen = {
                let c = joins.entry(callee.clone()).or_insert(0);
                *c += 1;
                *c > WIDEN_AFTER
            };
            let entry = a
                .proc_inputs
                .entry(callee.clone())
                .or_insert_with(|| vec![Empty; args.len()]);
            let mut new = false;
            for (cur, arg) in entry.iter_mut().zip(args) {
                let next = if widen {
                    cur.widen(cur.join(arg))
                } else {
                    cur.join(arg)
                };
                if next != *cur {
                    *cur = next;
                    new = true;
                }
            }
            changed |= new;
        }
        if !changed {
            break;
        }
    }
    // One narrowing pass: recompute call-site inputs exactly from the
    // stabilized state, then a final pass records per-goal environments.
    let mut pending: Vec<(String, Vec<Interval>)> = Vec::new();
    for pr in p.procs.values() {
        let Some(ins) = a.proc_inputs.get(&pr.name).cloned() else { continue };
        analyze_proc(pr, &ins, &mut a, &mut pending, false);
    }
    let mut exact: BTreeMap<String, Vec<Interval>> = seeds.clone();
    for (callee, args) in pending {
        let entry = exact
            .entry(callee.clone())
            .or_insert_with(|| vec![Empty; args.len()]);
        for (cur, arg) in entry.iter_mut().zip(args) {
            *cur = cur.join(arg);
        }
    }
    for (name, ins) in exact {
        let old = a.proc_inputs.get(&name).cloned();
        let narrowed = match old {
            Some(old) => old.iter().zip(&ins).map(|(o, n)| o.meet(*n)).collect(),
            None => ins,
        };
        a.proc_inputs.insert(name, narrowed);
    }
    let mut pending = Vec::new();
    for pr in p.procs.values() {
        let Some(ins) = a.proc_inputs.get(&pr.name).cloned() else { continue };
        let outs = analyze_proc(pr, &ins, &mut a, &mut pending, true);
        a.proc_outputs.insert(pr.name.clone(), outs);
    }
    a
}

/// Abstract execution of one procedure body. Returns the joined output
/// intervals over all leaves; call-site argument intervals are pushed to
/// `pending`.
fn analyze_proc(
    pr: &crate::lpir::LpProc,
    ins: &[Interval],
    a: &mut Analysis,
    pending: &mut Vec<(String, Vec<Interval>)>,
    record: bool,
) -> Vec<Interval> {
    let mut env: IntervalEnv = BTreeMap::new();
    for (param, iv) in pr.in_params.iter().zip(ins) {
        env.insert(param.clone(), *iv);
    }
    let mut outs = vec![Empty; pr.out_params.len()];
    analyze_node(pr, &pr.body, env, &mut Vec::new(), a, pending, record, &mut outs);
    outs
}

#[allow(clippy::too_many_arguments)]
fn analyze_node(
    pr: &crate::lpir::LpProc,
    node: &BodyTree,
    mut env: IntervalEnv,
    path: &mut Vec<bool>,
    a: &mut Analysis,
    pending: &mut Vec<(String, Vec<Interval>)>,
    record: bool,
    outs: &mut Vec<Interval>,
) {
    let mut reachable = true;
    for (index, goal) in node.goals.iter().enumerate() {
        if record {
            a.goal_envs.insert(
                GoalLoc {
                    proc: pr.name.clone(),
                    path: path.clone(),
                    index,
                },
                env.clone(),
            );
        }
        match goal {
            Goal::Prim { op, ins, outs: o } => {
                let args: Vec<Interval> = ins.iter().map(|v| eval(&env, v)).collect();
                let r = match op {
                    PrimOp::Copy => args[0],
                    PrimOp::Arith(op) => transfer(*op, &args),
                };
                if r == Empty {
                    reachable = false;
                }
                env.insert(o[0].clone(), r);
            }
            Goal::Call {
                callee,
                ins,
                outs: o,
            } => {
                let args: Vec<Interval> = ins.iter().map(|v| eval(&env, v)).collect();
                pending.push((callee.clone(), args));
                let summary = a.proc_outputs.get(callee);
                for (i, out_var) in o.iter().enumerate() {
                    // An unanalyzed callee has not returned yet on any
                    // path; TOP is the safe default once it has.
                    let iv = match summary {
                        Some(s) => s.get(i).copied().unwrap_or(Interval::TOP),
                        None => Empty,
                    };
                    if iv == Empty {
                        reachable = false;
                    }
                    env.insert(out_var.clone(), iv);
                }
            }
        }
    }
    if !reachable {
        return;
    }
    match &node.fork {
        None => {
            for (slot, param) in outs.iter_mut().zip(&pr.out_params) {
                *slot = slot.join(env.get(param).copied().unwrap_or(Interval::TOP));
            }
        }
        Some(f) => {
            if let Some(env_t) = refine(&env, &f.guard) {
                path.push(false);
                analyze_node(pr, &f.then_branch, env_t, path, a, pending, record, outs);
                path.pop();
            }
            if let Some(env_e) = refine(&env, &f.guard.complement()) {
                path.push(true);
                analyze_node(pr, &f.else_branch, env_e, path, a, pending, record, outs);
                path.pop();
            }
        }
    }
}

fn eval(env: &IntervalEnv, v: &Val) -> Interval {
    match v {
        Val::Const(c) => Interval::constant(*c),
        // Free variables are unconstrained.
        Val::Var(x) => env.get(x).copied().unwrap_or(Interval::TOP),
    }
}

/// Environment restricted to states satisfying the guard; `None` when no
/// state can (the branch is unreachable).
pub fn refine(env: &IntervalEnv, g: &Guard) -> Option<IntervalEnv> {
    let l = eval(env, &g.lhs);
    let r = eval(env, &g.rhs);
    let (l2, r2) = refine_pair(g.cmp, l, r);
    if l2 == Empty || r2 == Empty {
        return None;
    }
    let mut env = env.clone();
    if let Val::Var(x) = &g.lhs {
        env.insert(x.clone(), l2);
    }
    if let Val::Var(x) = &g.rhs {
        env.insert(x.clone(), r2);
    }
    Some(env)
}

fn refine_pair(cmp: CmpOp, l: Interval, r: Interval) -> (Interval, Interval) {
    let (Some((llo, lhi)), Some((rlo, rhi))) = (l.endpoints(), r.endpoints()) else {
        return (Empty, Empty);
    };
    match cmp {
        CmpOp::Lt => (
            l.meet(Interval::range(ExtInt::NegInf, rhi.add(-1))),
            r.meet(Interval::range(llo.add(1), ExtInt::PosInf)),
        ),
        CmpOp::Le => (
            l.meet(Interval::range(ExtInt::NegInf, rhi)),
            r.meet(Interval::range(llo, ExtInt::PosInf)),
        ),
        CmpOp::Gt => {
            let (r2, l2) = refine_pair(CmpOp::Lt, r, l);
            (l2, r2)
        }
        CmpOp::Ge => {
            let (r2, l2) = refine_pair(CmpOp::Le, r, l);
            (l2, r2)
        }
        CmpOp::Eq => (l.meet(r), l.meet(r)),
        CmpOp::Ne => (ne_refine(l, rlo, rhi), ne_refine(r, llo, lhi)),
    }
}

/// `x != other`: only singleton exclusions at an endpoint shrink x.
fn ne_refine(x: Interval, olo: ExtInt, ohi: ExtInt) -> Interval {
    if olo != ohi {
        return x;
    }
    match x {
        Range(lo, hi) if lo == olo && hi == ohi => Empty,
        Range(lo, hi) if lo == olo => Interval::range(lo.add(1), hi),
        Range(lo, hi) if hi == ohi => Interval::range(lo, hi.add(-1)),
        x => x,
    }
}

/// Division and modulo goals whose divisor interval may include zero,
/// with the offending interval.
pub fn check_div_safety(p: &LpProgram, a: &Analysis) -> Vec<(GoalLoc, Interval)> {
    let mut unsafe_sites = Vec::new();
    for pr in p.procs.values() {
        collect_unsafe(&pr.body, &pr.name, &mut Vec::new(), a, &mut unsafe_sites);
    }
    unsafe_sites
}

fn collect_unsafe(
    node: &BodyTree,
    proc: &str,
    path: &mut Vec<bool>,
    a: &Analysis,
    out: &mut Vec<(GoalLoc, Interval)>,
) {
    for (index, goal) in node.goals.iter().enumerate() {
        if let Goal::Prim {
            op: PrimOp::Arith(ArithOp::Div | ArithOp::Mod),
            ins,
            ..
        } = goal
        {
            let loc = GoalLoc {
                proc: proc.to_string(),
                path: path.clone(),
                index,
            };
            // A goal with no recorded environment was proven unreachable.
            let divisor = a
                .goal_envs
                .get(&loc)
                .map(|env| eval(env, &ins[1]))
                .unwrap_or(Empty);
            if !divisor.excludes_zero() {
                out.push((loc, divisor));
            }
        }
    }
    if let Some(f) = &node.fork {
        path.push(false);
        collect_unsafe(&f.then_branch, proc, path, a, out);
        path.pop();
        path.push(true);
        collect_unsafe(&f.else_branch, proc, path, a, out);
        path.pop();
    }
}
