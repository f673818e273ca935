//! Program simplification: copy propagation, guard-aware inlining,
//! dead-code elimination, and merging of procedures that have become
//! identical copies of each other (typically a public wrapper and its
//! loop header). Rounds repeat while the program strictly shrinks.

use std::collections::{BTreeMap, BTreeSet};

use crate::lpir::{BodyTree, Fork, Goal, LpProc, LpProgram, PrimOp, Val};
use crate::neededness::mark_and_prune;
use crate::translate::NameSupply;

#[derive(Debug, Clone)]
pub struct InlinePolicy {
    /// Callees with at most this many goals are inlined at every call
    /// site. Kept small so shared multi-goal procedures survive as
    /// procedures instead of being duplicated.
    pub max_body_goals: usize,
    /// Callees with exactly one call site are inlined regardless of size.
    pub inline_single_call_site: bool,
    pub max_rounds: usize,
}

impl Default for InlinePolicy {
    fn default() -> InlinePolicy {
        InlinePolicy {
            max_body_goals: 1,
            inline_single_call_site: true,
            max_rounds: 10,
        }
    }
}

pub fn simplify(p: &LpProgram) -> LpProgram {
    simplify_with(p, &InlinePolicy::default())
}

pub fn simplify_with(p: &LpProgram, policy: &InlinePolicy) -> LpProgram {
    let mut cur = p.clone();
    let mut measure = (usize::MAX, usize::MAX);
    for _ in 0..policy.max_rounds {
        let mut next = copy_prop(&cur);
        next = inline(&next, policy);
        next = mark_and_prune(&next);
        next = merge_equivalent(&next);
        let m = (
            next.procs.len(),
            next.procs.values().map(|p| p.body.goal_count()).sum(),
        );
        if m >= measure {
            break;
        }
        measure = m;
        cur = next;
    }
    cur
}

/// Forward copy propagation. `v = r` goals with a non-output target are
/// folded into later uses and dropped; copies onto an output parameter
/// are instead eliminated by renaming the defining goal when that is the
/// variable's only other occurrence.
pub fn copy_prop(p: &LpProgram) -> LpProgram {
    let mut out = LpProgram::default();
    for pr in p.procs.values() {
        let outs: BTreeSet<&str> = pr.out_params.iter().map(String::as_str).collect();
        let mut body = prop_node(&pr.body, &BTreeMap::new(), &outs);
        let mut counts = BTreeMap::new();
        occurrence_counts(&body, &mut counts);
        elim_output_copies(&mut body, &outs, &counts);
        out.insert(LpProc {
            body,
            ..pr.clone()
        });
    }
    out
}

fn prop_node(node: &BodyTree, env: &BTreeMap<String, Val>, outs: &BTreeSet<&str>) -> BodyTree {
    let mut env = env.clone();
    let subst = |v: &Val, env: &BTreeMap<String, Val>| match v {
        Val::Var(x) => env.get(x).cloned().unwrap_or_else(|| v.clone()),
        Val::Const(_) => v.clone(),
    };
    let mut goals = Vec::new();
    for g in &node.goals {
        match g {
            Goal::Prim {
                op: PrimOp::Copy,
                ins,
                outs: douts,
            } if !outs.contains(douts[0].as_str()) => {
                let src = subst(&ins[0], &env);
                env.insert(douts[0].clone(), src);
            }
            Goal::Prim { op, ins, outs: o } => goals.push(Goal::Prim {
                op: *op,
                ins: ins.iter().map(|v| subst(v, &env)).collect(),
                outs: o.clone(),
            }),
            Goal::Call {
                callee,
                ins,
                outs: o,
            } => goals.push(Goal::Call {
                callee: callee.clone(),
                ins: ins.iter().map(|v| subst(v, &env)).collect(),
                outs: o.clone(),
            }),
        }
    }
    let fork = node.fork.as_ref().map(|f| {
        Box::new(Fork {
            guard: crate::lpir::Guard {
                cmp: f.guard.cmp,
                lhs: subst(&f.guard.lhs, &env),
                rhs: subst(&f.guard.rhs, &env),
            },
            then_branch: prop_node(&f.then_branch, &env, outs),
            else_branch: prop_node(&f.else_branch, &env, outs),
        })
    });
    BodyTree { goals, fork }
}

fn occurrence_counts(node: &BodyTree, counts: &mut BTreeMap<String, usize>) {
    let mut bump = |v: &str| *counts.entry(v.to_string()).or_insert(0) += 1;
    for g in &node.goals {
        for v in g.in_vars() {
            bump(v);
        }
        for o in g.outs() {
            bump(o);
        }
    }
    if let Some(f) = &node.fork {
        for v in f.guard.vars() {
            bump(v);
        }
        occurrence_counts(&f.then_branch, counts);
        occurrence_counts(&f.else_branch, counts);
    }
}

/// Rewrites `g(..; v) & out = v` into `g(..; out)` when `v` occurs
/// nowhere else, per node.
fn elim_output_copies(node: &mut BodyTree, outs: &BTreeSet<&str>, counts: &BTreeMap<String, usize>) {
    let mut i = 0;
    while i < node.goals.len() {
        let replace = match &node.goals[i] {
            Goal::Prim {
                op: PrimOp::Copy,
                ins,
                outs: douts,
            } if outs.contains(douts[0].as_str()) => match &ins[0] {
                Val::Var(v) if counts.get(v) == Some(&2) => node.goals[..i]
                    .iter()
                    .position(|g| g.outs().contains(v))
                    .map(|j| (j, v.clone(), douts[0].clone())),
                _ => None,
            },
            _ => None,
        };
        match replace {
            Some((j, v, dst)) => {
                for o in match &mut node.goals[j] {
                    Goal::Prim { outs, .. } | Goal::Call { outs, .. } => outs,
                } {
                    if *o == v {
                        *o = dst.clone();
                    }
                }
                node.goals.remove(i);
            }
            None => i += 1,
        }
    }
    if let Some(f) = &mut node.fork {
        elim_output_copies(&mut f.then_branch, outs, counts);
        elim_output_copies(&mut f.else_branch, outs, counts);
    }
}

/// Guard-aware inlining. A call in the middle of a body is replaced by
/// the callee's body tree; the caller's remaining goals and fork are
/// appended to every leaf of the inlined tree. A procedure is never
/// expanded twice along one chain, so mutual recursion bottoms out as an
/// ordinary call.
pub fn inline(p: &LpProgram, policy: &InlinePolicy) -> LpProgram {
    let mut sites: BTreeMap<&str, usize> = BTreeMap::new();
    for pr in p.procs.values() {
        count_sites(&pr.body, &mut sites);
    }
    let eligible = |callee: &str| -> bool {
        let Some(c) = p.proc(callee) else { return false };
        (policy.inline_single_call_site && sites.get(callee) == Some(&1))
            || c.body.goal_count() <= policy.max_body_goals
    };

    let mut out = LpProgram::default();
    for pr in p.procs.values() {
        let mut used = BTreeSet::new();
        collect_vars(&pr.body, &mut used);
        used.extend(pr.in_params.iter().cloned());
        used.extend(pr.out_params.iter().cloned());
        let mut chain = vec![pr.name.clone()];
        let body = inline_node(pr.body.clone(), p, &eligible, &mut chain, &mut used);
        out.insert(LpProc {
            body,
            ..pr.clone()
        });
    }
    out
}

fn count_sites<'a>(node: &'a BodyTree, sites: &mut BTreeMap<&'a str, usize>) {
    for g in &node.goals {
        if let Goal::Call { callee, .. } = g {
            *sites.entry(callee).or_insert(0) += 1;
        }
    }
    if let Some(f) = &node.fork {
        count_sites(&f.then_branch, sites);
        count_sites(&f.else_branch, sites);
    }
}

fn collect_vars(node: &BodyTree, used: &mut BTreeSet<String>) {
    for g in &node.goals {
        used.extend(g.in_vars().map(String::from));
        used.extend(g.outs().iter().cloned());
    }
    if let Some(f) = &node.fork {
        used.extend(f.guard.vars().iter().map(|v| v.to_string()));
        collect_vars(&f.then_branch, used);
        collect_vars(&f.else_branch, used);
    }
}

fn inline_node(
    node: BodyTree,
    p: &LpProgram,
    eligible: &dyn Fn(&str) -> bool,
    chain: &mut Vec<String>,
    used: &mut BTreeSet<String>,
) -> BodyTree {
    let mut done = Vec::new();
    let mut rest = node.goals.into_iter();
    while let Some(g) = rest.next() {
        let expand = matches!(
            &g,
            Goal::Call { callee, .. } if eligible(callee) && !chain.contains(callee)
        );
        if !expand {
            done.push(g);
            continue;
        }
        let Goal::Call { callee, ins, outs } = g else { unreachable!() };
        // The continuation is expanded once, then grafted onto every
        // leaf of the inlined body; neither part is rescanned.
        let cont = inline_node(
            BodyTree {
                goals: rest.collect(),
                fork: node.fork,
            },
            p,
            eligible,
            chain,
            used,
        );
        let mut inlined = instantiate(p.proc(&callee).unwrap(), &ins, &outs, used);
        chain.push(callee);
        inlined = inline_node(inlined, p, eligible, chain, used);
        chain.pop();
        append_to_leaves(&mut inlined, &cont);
        done.extend(inlined.goals);
        return BodyTree {
            goals: done,
            fork: inlined.fork,
        };
    }
    let fork = node.fork.map(|f| {
        Box::new(Fork {
            guard: f.guard,
            then_branch: inline_node(f.then_branch, p, eligible, chain, used),
            else_branch: inline_node(f.else_branch, p, eligible, chain, used),
        })
    });
    BodyTree { goals: done, fork }
}

/// The callee body with parameters replaced by the call's arguments and
/// internal variables renamed away from the caller's.
fn instantiate(callee: &LpProc, ins: &[Val], outs: &[String], used: &mut BTreeSet<String>) -> BodyTree {
    let mut vals: BTreeMap<String, Val> = BTreeMap::new();
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    for (param, arg) in callee.in_params.iter().zip(ins) {
        vals.insert(param.clone(), arg.clone());
    }
    for (param, dst) in callee.out_params.iter().zip(outs) {
        names.insert(param.clone(), dst.clone());
        vals.insert(param.clone(), Val::var(dst.clone()));
    }
    let mut internal = BTreeSet::new();
    collect_vars(&callee.body, &mut internal);
    let mut supply = NameSupply::new(used.iter().cloned());
    for v in internal {
        if vals.contains_key(&v) {
            continue;
        }
        let fresh = if used.contains(&v) {
            supply.fresh(&v)
        } else {
            supply.reserve(&v);
            v.clone()
        };
        used.insert(fresh.clone());
        names.insert(v.clone(), fresh.clone());
        vals.insert(v, Val::var(fresh));
    }
    rename_body(&callee.body, &vals, &names)
}

fn rename_body(
    node: &BodyTree,
    vals: &BTreeMap<String, Val>,
    names: &BTreeMap<String, String>,
) -> BodyTree {
    let rv = |v: &Val| match v {
        Val::Var(x) => vals.get(x.as_str()).cloned().unwrap_or_else(|| v.clone()),
        Val::Const(_) => v.clone(),
    };
    let rn = |o: &String| names.get(o.as_str()).cloned().unwrap_or_else(|| o.clone());
    let goals = node
        .goals
        .iter()
        .map(|g| match g {
            Goal::Prim { op, ins, outs } => Goal::Prim {
                op: *op,
                ins: ins.iter().map(rv).collect(),
                outs: outs.iter().map(rn).collect(),
            },
            Goal::Call { callee, ins, outs } => Goal::Call {
                callee: callee.clone(),
                ins: ins.iter().map(rv).collect(),
                outs: outs.iter().map(rn).collect(),
            },
        })
        .collect();
    let fork = node.fork.as_ref().map(|f| {
        Box::new(Fork {
            guard: crate::lpir::Guard {
                cmp: f.guard.cmp,
                lhs: rv(&f.guard.lhs),
                rhs: rv(&f.guard.rhs),
            },
            then_branch: rename_body(&f.then_branch, vals, names),
            else_branch: rename_body(&f.else_branch, vals, names),
        })
    });
    BodyTree { goals, fork }
}

fn append_to_leaves(node: &mut BodyTree, cont: &BodyTree) {
    match &mut node.fork {
        Some(f) => {
            append_to_leaves(&mut f.then_branch, cont);
            append_to_leaves(&mut f.else_branch, cont);
        }
        None => {
            node.goals.extend(cont.goals.iter().cloned());
            node.fork = cont.fork.clone();
        }
    }
}

/// Merges `q` into `f` when both have the same parameter lists and their
/// bodies coincide after redirecting calls to `q` onto `f` — the shape a
/// wrapper and its loop header reach once everything between them has
/// been inlined. All calls to `q` are then retargeted to `f`.
pub fn merge_equivalent(p: &LpProgram) -> LpProgram {
    let mut renames: BTreeMap<String, String> = BTreeMap::new();
    let names: Vec<String> = p.procs.keys().cloned().collect();
    for f in &names {
        for q in &names {
            if f == q || renames.contains_key(f) || renames.contains_key(q) {
                continue;
            }
            let (pf, pq) = (p.proc(f).unwrap(), p.proc(q).unwrap());
            if pq.public
                || pf.in_params != pq.in_params
                || pf.out_params != pq.out_params
            {
                continue;
            }
            if retarget_node(&pf.body, q, f) == retarget_node(&pq.body, q, f) {
                renames.insert(q.clone(), f.clone());
            }
        }
    }
    let mut out = LpProgram::default();
    for pr in p.procs.values() {
        if renames.contains_key(&pr.name) {
            continue;
        }
        let mut body = pr.body.clone();
        for (q, f) in &renames {
            body = retarget_node(&body, q, f);
        }
        out.insert(LpProc {
            body,
            ..pr.clone()
        });
    }
    out
}


fn retarget_node(node: &BodyTree, from: &str, to: &str) -> BodyTree {
    let goals = node
        .goals
        .iter()
        .map(|g| match g {
            Goal::Call { callee, ins, outs } if callee == from => Goal::Call {
                callee: to.to_string(),
                ins: ins.clone(),
                outs: outs.clone(),
            },
            g => g.clone(),
        })
        .collect();
    let fork = node.fork.as_ref().map(|f| {
        Box::new(Fork {
            guard: f.guard.clone(),
            then_branch: retarget_node(&f.then_branch, from, to),
            else_branch: retarget_node(&f.else_branch, from, to),
        })
    });
    BodyTree { goals, fork }
}
