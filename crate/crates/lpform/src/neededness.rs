//! Interprocedural neededness analysis and dead-code elimination.
//!
//! Phase 1 computes, per procedure, which inputs each output depends on,
//! as a set of implications `out ⇒ in`. A primitive's output depends on
//! all its inputs; a call instantiates the callee's summary; every
//! variable defined under a fork additionally depends on the guard's
//! operands. Recursive procedures are solved by a least-fixpoint
//! iteration per call-graph SCC, callees first.
//!
//! Phase 2 seeds the non-state output parameters of public procedures as
//! needed, walks bodies backward discarding goals none of whose outputs
//! are needed, collapses forks whose pruned branches coincide, prunes
//! unneeded parameters (rewriting call sites), and deletes procedures no
//! longer reachable from a public one.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::graph::DiGraph;

use crate::lpir::{BodyTree, Fork, Goal, LpProc, LpProgram, Val};
use crate::ops::is_state_var;

/// Dependency pairs `(out, in)`: the first variable's value depends on
/// the second's.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NeedFormula {
    pub pairs: BTreeSet<(String, String)>,
}

impl NeedFormula {
    pub fn add(&mut self, out: &str, input: &str) {
        self.pairs.insert((out.to_string(), input.to_string()));
    }

    pub fn union(&mut self, other: NeedFormula) {
        self.pairs.extend(other.pairs);
    }

    /// Transitive closure of the dependency relation.
    pub fn close(&mut self) {
        loop {
            let mut new = Vec::new();
            for (a, b) in &self.pairs {
                for (c, d) in &self.pairs {
                    if b == c && !self.pairs.contains(&(a.clone(), d.clone())) {
                        new.push((a.clone(), d.clone()));
                    }
                }
            }
            if new.is_empty() {
                break;
            }
            self.pairs.extend(new);
        }
    }

    /// Existential projection onto the procedure interface: closes the
    /// relation, then keeps only out-parameter ⇒ in-parameter pairs,
    /// as index pairs.
    pub fn project(mut self, in_params: &[String], out_params: &[String]) -> Summary {
        self.close();
        let mut pairs = BTreeSet::new();
        for (o, i) in &self.pairs {
            if let (Some(oi), Some(ii)) = (
                out_params.iter().position(|p| p == o),
                in_params.iter().position(|p| p == i),
            ) {
                pairs.insert((oi, ii));
            }
        }
        pairs
    }
}

/// Per-procedure dependency summary: `(out index, in index)` pairs.
pub type Summary = BTreeSet<(usize, usize)>;

pub fn proc_summaries(p: &LpProgram) -> BTreeMap<String, Summary> {
    let mut summaries: BTreeMap<String, Summary> = BTreeMap::new();
    for scc in call_graph_sccs(p) {
        // Least fixpoint from the empty summary, so recursion is solved
        // precisely rather than assumed fully dependent.
        loop {
            let mut changed = false;
            for name in &scc {
                let pr = p.proc(name).unwrap();
                let mut f = NeedFormula::default();
                body_formula(&pr.body, p, &summaries, &mut f);
                let s = f.project(&pr.in_params, &pr.out_params);
                if summaries.get(name) != Some(&s) {
                    summaries.insert(name.clone(), s);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    summaries
}

/// SCCs of the call graph, callees before callers.
fn call_graph_sccs(p: &LpProgram) -> Vec<Vec<String>> {
    let mut graph = DiGraph::<&str, ()>::new();
    let mut index = BTreeMap::new();
    for name in p.procs.keys() {
        index.insert(name.as_str(), graph.add_node(name.as_str()));
    }
    for pr in p.procs.values() {
        for callee in callees(&pr.body) {
            if let Some(&to) = index.get(callee) {
                graph.add_edge(index[pr.name.as_str()], to, ());
            }
        }
    }
    petgraph::algo::tarjan_scc(&graph)
        .into_iter()
        .map(|scc| scc.into_iter().map(|n| graph[n].to_string()).collect())
        .collect()
}

fn callees(node: &BodyTree) -> Vec<&str> {
    let mut out = Vec::new();
    collect_callees(node, &mut out);
    out
}

fn collect_callees<'a>(node: &'a BodyTree, out: &mut Vec<&'a str>) {
    for g in &node.goals {
        if let Goal::Call { callee, .. } = g {
            out.push(callee);
        }
    }
    if let Some(f) = &node.fork {
        collect_callees(&f.then_branch, out);
        collect_callees(&f.else_branch, out);
    }
}

fn body_formula(
    node: &BodyTree,
    p: &LpProgram,
    summaries: &BTreeMap<String, Summary>,
    f: &mut NeedFormula,
) {
    for g in &node.goals {
        match g {
            Goal::Prim { ins, outs, .. } => {
                for o in outs {
                    for i in ins.iter().filter_map(Val::as_var) {
                        f.add(o, i);
                    }
                }
            }
            Goal::Call { callee, ins, outs } => {
                if let Some(s) = summaries.get(callee) {
                    for (oi, ii) in s {
                        if let Some(i) = ins[*ii].as_var() {
                            f.add(&outs[*oi], i);
                        }
                    }
                }
            }
        }
    }
    if let Some(fork) = &node.fork {
        // Choosing a branch depends on the guard, so everything the fork
        // defines does too.
        let mut defined = Vec::new();
        collect_defs(&fork.then_branch, &mut defined);
        collect_defs(&fork.else_branch, &mut defined);
        for v in &defined {
            for g in fork.guard.vars() {
                f.add(v, g);
            }
        }
        body_formula(&fork.then_branch, p, summaries, f);
        body_formula(&fork.else_branch, p, summaries, f);
    }
}

fn collect_defs<'a>(node: &'a BodyTree, out: &mut Vec<&'a str>) {
    for g in &node.goals {
        out.extend(g.outs().iter().map(String::as_str));
    }
    if let Some(f) = &node.fork {
        collect_defs(&f.then_branch, out);
        collect_defs(&f.else_branch, out);
    }
}

/// Which output parameters of each procedure are needed, and which input
/// parameters feed them (derived from the phase-1 summaries).
struct NeedState {
    summaries: BTreeMap<String, Summary>,
    needed_outs: BTreeMap<String, BTreeSet<usize>>,
}

impl NeedState {
    fn needed_ins(&self, p: &LpProgram, proc: &str) -> BTreeSet<usize> {
        let pr = p.proc(proc).unwrap();
        let mut ins: BTreeSet<usize> = self.summaries[proc]
            .iter()
            .filter(|(o, _)| self.needed_outs[proc].contains(o))
            .map(|(_, i)| *i)
            .collect();
        if pr.public {
            // A public procedure's non-state inputs are its external
            // interface and stay even when unused.
            for (i, name) in pr.in_params.iter().enumerate() {
                if !is_state_var(name) {
                    ins.insert(i);
                }
            }
        }
        ins
    }
}

pub fn mark_and_prune(p: &LpProgram) -> LpProgram {
    let summaries = proc_summaries(p);
    let mut state = NeedState {
        summaries,
        needed_outs: p
            .procs
            .values()
            .map(|pr| {
                let seed: BTreeSet<usize> = if pr.public {
                    pr.out_params
                        .iter()
                        .enumerate()
                        .filter(|(_, o)| !is_state_var(o))
                        .map(|(i, _)| i)
                        .collect()
                } else {
                    BTreeSet::new()
                };
                (pr.name.clone(), seed)
            })
            .collect(),
    };

    // Propagate needed outputs through call sites to a fixpoint.
    loop {
        let mut pending: Vec<(String, BTreeSet<usize>)> = Vec::new();
        for pr in p.procs.values() {
            let needed_end = needed_out_vars(pr, &state);
            walk(&pr.body, &needed_end, p, &state, &mut |callee, outs| {
                pending.push((callee.to_string(), outs));
            });
        }
        let mut changed = false;
        for (callee, outs) in pending {
            let entry = state.needed_outs.entry(callee).or_default();
            for o in outs {
                changed |= entry.insert(o);
            }
        }
        if !changed {
            break;
        }
    }

    // Rebuild every procedure with dead goals, parameters and forks
    // removed, then drop procedures unreachable from a public one.
    let mut out = LpProgram::default();
    for pr in p.procs.values() {
        let needed_end = needed_out_vars(pr, &state);
        let (body, needed_entry) = prune_node(&pr.body, &needed_end, p, &state);
        let kept_ins = state.needed_ins(p, &pr.name);
        let in_params: Vec<String> = pr
            .in_params
            .iter()
            .enumerate()
            .filter(|(i, name)| kept_ins.contains(i) || needed_entry.contains(*name))
            .map(|(_, name)| name.clone())
            .collect();
        let out_params: Vec<String> = pr
            .out_params
            .iter()
            .enumerate()
            .filter(|(i, _)| state.needed_outs[&pr.name].contains(i))
            .map(|(_, name)| name.clone())
            .collect();
        out.insert(LpProc {
            name: pr.name.clone(),
            in_params,
            out_params,
            body,
            public: pr.public,
        });
    }
    drop_unreachable(&mut out);
    out
}

fn needed_out_vars(pr: &LpProc, state: &NeedState) -> BTreeSet<String> {
    state.needed_outs[&pr.name]
        .iter()
        .map(|i| pr.out_params[*i].clone())
        .collect()
}

/// Backward walk over one body computing the needed-variable set at
/// entry, reporting the needed output positions of every kept call.
fn walk(
    node: &BodyTree,
    needed_end: &BTreeSet<String>,
    p: &LpProgram,
    state: &NeedState,
    report: &mut impl FnMut(&str, BTreeSet<usize>),
) -> BTreeSet<String> {
    let mut needed = match &node.fork {
        None => needed_end.clone(),
        Some(f) => {
            let mut n = walk(&f.then_branch, needed_end, p, state, report);
            n.extend(walk(&f.else_branch, needed_end, p, state, report));
            // Conservative: treat the guard as live whenever the fork
            // survives; the rebuild pass drops it when the pruned
            // branches coincide.
            for v in f.guard.vars() {
                n.insert(v.to_string());
            }
            n
        }
    };
    for goal in node.goals.iter().rev() {
        match goal {
            Goal::Prim { ins, outs, .. } => {
                if outs.iter().any(|o| needed.contains(o)) {
                    for o in outs {
                        needed.remove(o);
                    }
                    needed.extend(ins.iter().filter_map(Val::as_var).map(String::from));
                }
            }
            Goal::Call { callee, ins, outs } => {
                let wanted: BTreeSet<usize> = outs
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| needed.contains(*o))
                    .map(|(i, _)| i)
                    .collect();
                if !wanted.is_empty() {
                    report(callee, wanted);
                    for o in outs {
                        needed.remove(o);
                    }
                    // The callee's kept inputs must stay defined at every
                    // site, even ones this site's outputs don't need.
                    for i in state.needed_ins(p, callee) {
                        if let Some(v) = ins[i].as_var() {
                            needed.insert(v.to_string());
                        }
                    }
                }
            }
        }
    }
    needed
}

/// Rebuild pass: same traversal as `walk`, but producing the pruned tree.
fn prune_node(
    node: &BodyTree,
    needed_end: &BTreeSet<String>,
    p: &LpProgram,
    state: &NeedState,
) -> (BodyTree, BTreeSet<String>) {
    let (tail, mut needed) = match &node.fork {
        None => (BodyTree::default(), needed_end.clone()),
        Some(f) => {
            let (then_t, then_n) = prune_node(&f.then_branch, needed_end, p, state);
            let (else_t, else_n) = prune_node(&f.else_branch, needed_end, p, state);
            if then_t == else_t {
                // The guard no longer influences anything observable.
                (then_t, then_n)
            } else {
                let mut n = then_n;
                n.extend(else_n);
                for v in f.guard.vars() {
                    n.insert(v.to_string());
                }
                let tree = BodyTree {
                    goals: vec![],
                    fork: Some(Box::new(Fork {
                        guard: f.guard.clone(),
                        then_branch: then_t,
                        else_branch: else_t,
                    })),
                };
                (tree, n)
            }
        }
    };
    let mut kept = Vec::new();
    for goal in node.goals.iter().rev() {
        match goal {
            Goal::Prim { ins, outs, .. } => {
                if outs.iter().any(|o| needed.contains(o)) {
                    for o in outs {
                        needed.remove(o);
                    }
                    needed.extend(ins.iter().filter_map(Val::as_var).map(String::from));
                    kept.push(goal.clone());
                }
            }
            Goal::Call { callee, ins, outs } => {
                if outs.iter().any(|o| needed.contains(o)) {
                    for o in outs {
                        needed.remove(o);
                    }
                    let kept_ins = state.needed_ins(p, callee);
                    for i in &kept_ins {
                        if let Some(v) = ins[*i].as_var() {
                            needed.insert(v.to_string());
                        }
                    }
                    kept.push(Goal::Call {
                        callee: callee.clone(),
                        ins: ins
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| kept_ins.contains(i))
                            .map(|(_, v)| v.clone())
                            .collect(),
                        outs: outs
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| state.needed_outs[callee].contains(i))
                            .map(|(_, o)| o.clone())
                            .collect(),
                    });
                }
            }
        }
    }
    kept.reverse();
    kept.extend(tail.goals);
    (
        BodyTree {
            goals: kept,
            fork: tail.fork,
        },
        needed,
    )
}

fn drop_unreachable(p: &mut LpProgram) {
    let mut reachable: BTreeSet<String> = BTreeSet::new();
    let mut stack: Vec<String> = p
        .procs
        .values()
        .filter(|pr| pr.public)
        .map(|pr| pr.name.clone())
        .collect();
    while let Some(name) = stack.pop() {
        if !reachable.insert(name.clone()) {
            continue;
        }
        if let Some(pr) = p.proc(&name) {
            for c in callees(&pr.body) {
                if !reachable.contains(c) {
                    stack.push(c.to_string());
                }
            }
        }
    }
    p.procs.retain(|name, _| reachable.contains(name));
}
