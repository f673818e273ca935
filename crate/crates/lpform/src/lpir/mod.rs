//! The LP-form intermediate representation: deterministic, single-moded
//! logic programs. A procedure's canonical representation is a
//! tree-factored body: a shared goal prefix, optionally followed by a
//! guard fork with two sub-bodies. The else branch runs exactly when the
//! guard's complement holds, so clause complementarity holds by
//! construction. Flat clause lists are a derived view.

mod interp;
pub(crate) mod parse;
pub(crate) mod print;
mod validate;

use indexmap::IndexMap;

use crate::ops::{ArithOp, CmpOp};

pub use interp::{clause_selection_count, interp_lp, interp_lp_observed, interp_lp_with};
pub use parse::{parse_lp, parse_lp_clauses, RawLp};
pub use print::print_lp;
pub use validate::{validate_clauses, validate_lp, Diagnostic, Rule};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LpProgram {
    pub procs: IndexMap<String, LpProc>,
}

impl LpProgram {
    pub fn insert(&mut self, p: LpProc) {
        self.procs.insert(p.name.clone(), p);
    }

    pub fn proc(&self, name: &str) -> Option<&LpProc> {
        self.procs.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProc {
    pub name: String,
    pub in_params: Vec<String>,
    pub out_params: Vec<String>,
    pub body: BodyTree,
    /// Exported procedures seed the neededness analysis and are never
    /// deleted by simplification.
    pub public: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BodyTree {
    pub goals: Vec<Goal>,
    pub fork: Option<Box<Fork>>,
}

impl BodyTree {
    pub fn leaf(goals: Vec<Goal>) -> BodyTree {
        BodyTree { goals, fork: None }
    }

    /// Total number of goals in the tree (guards not counted).
    pub fn goal_count(&self) -> usize {
        self.goals.len()
            + self
                .fork
                .as_ref()
                .map(|f| f.then_branch.goal_count() + f.else_branch.goal_count())
                .unwrap_or(0)
    }

    pub fn fork_count(&self) -> usize {
        match &self.fork {
            None => 0,
            Some(f) => 1 + f.then_branch.fork_count() + f.else_branch.fork_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fork {
    pub guard: Guard,
    pub then_branch: BodyTree,
    pub else_branch: BodyTree,
}

/// A comparison goal. It appears only at a fork; the else branch is
/// governed by its complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub cmp: CmpOp,
    pub lhs: Val,
    pub rhs: Val,
}

impl Guard {
    pub fn complement(&self) -> Guard {
        Guard {
            cmp: self.cmp.complement(),
            lhs: self.lhs.clone(),
            rhs: self.rhs.clone(),
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut v = Vec::new();
        for side in [&self.lhs, &self.rhs] {
            if let Val::Var(x) = side {
                v.push(x.as_str());
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimOp {
    Arith(ArithOp),
    /// Identity: one input, one output. Materializes the `v' = r`
    /// renaming goals of the translation.
    Copy,
}

impl PrimOp {
    pub fn in_arity(self) -> usize {
        match self {
            PrimOp::Arith(op) => op.arity(),
            PrimOp::Copy => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    Prim {
        op: PrimOp,
        ins: Vec<Val>,
        outs: Vec<String>,
    },
    Call {
        callee: String,
        ins: Vec<Val>,
        outs: Vec<String>,
    },
}

impl Goal {
    pub fn ins(&self) -> &[Val] {
        match self {
            Goal::Prim { ins, .. } | Goal::Call { ins, .. } => ins,
        }
    }

    pub fn outs(&self) -> &[String] {
        match self {
            Goal::Prim { outs, .. } | Goal::Call { outs, .. } => outs,
        }
    }

    pub fn in_vars(&self) -> impl Iterator<Item = &str> {
        self.ins().iter().filter_map(|v| match v {
            Val::Var(x) => Some(x.as_str()),
            Val::Const(_) => None,
        })
    }

    pub fn copy(src: Val, dst: impl Into<String>) -> Goal {
        Goal::Prim {
            op: PrimOp::Copy,
            ins: vec![src],
            outs: vec![dst.into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Val {
    Var(String),
    Const(i64),
}

impl Val {
    pub fn var(name: impl Into<String>) -> Val {
        Val::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Val::Var(x) => Some(x),
            Val::Const(_) => None,
        }
    }
}

/// Flattened view of one root-to-leaf path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub name: String,
    pub in_params: Vec<String>,
    pub out_params: Vec<String>,
    pub items: Vec<ClauseItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseItem {
    Guard(Guard),
    Goal(Goal),
}

/// One clause per root-to-leaf path, then-branch before else-branch.
pub fn flatten(p: &LpProc) -> Vec<Clause> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    flatten_into(p, &p.body, &mut prefix, &mut out);
    out
}

fn flatten_into(p: &LpProc, node: &BodyTree, prefix: &mut Vec<ClauseItem>, out: &mut Vec<Clause>) {
    let mark = prefix.len();
    for g in &node.goals {
        prefix.push(ClauseItem::Goal(g.clone()));
    }
    match &node.fork {
        None => out.push(Clause {
            name: p.name.clone(),
            in_params: p.in_params.clone(),
            out_params: p.out_params.clone(),
            items: prefix.clone(),
        }),
        Some(f) => {
            prefix.push(ClauseItem::Guard(f.guard.clone()));
            flatten_into(p, &f.then_branch, prefix, out);
            prefix.pop();
            prefix.push(ClauseItem::Guard(f.guard.complement()));
            flatten_into(p, &f.else_branch, prefix, out);
            prefix.pop();
        }
    }
    prefix.truncate(mark);
}

/// Rebuilds the body tree from a clause list. Fails when the clauses are
/// not identical up to complementary guards.
pub fn refactor(clauses: &[Clause]) -> Result<BodyTree, String> {
    let paths: Vec<&[ClauseItem]> = clauses.iter().map(|c| c.items.as_slice()).collect();
    refactor_paths(&paths)
}

fn refactor_paths(paths: &[&[ClauseItem]]) -> Result<BodyTree, String> {
    assert!(!paths.is_empty());
    if paths.len() == 1 {
        let mut goals = Vec::new();
        for item in paths[0] {
            match item {
                ClauseItem::Goal(g) => goals.push(g.clone()),
                ClauseItem::Guard(_) => {
                    return Err("guard has no clause with the complementary guard".into())
                }
            }
        }
        return Ok(BodyTree::leaf(goals));
    }
    // Common goal prefix.
    let mut goals = Vec::new();
    let mut idx = 0;
    loop {
        let first = paths[0].get(idx);
        let all_same_goal = match first {
            Some(ClauseItem::Goal(g)) => paths[1..]
                .iter()
                .all(|p| p.get(idx) == Some(&ClauseItem::Goal(g.clone()))),
            _ => false,
        };
        if all_same_goal {
            if let Some(ClauseItem::Goal(g)) = first {
                goals.push(g.clone());
            }
            idx += 1;
        } else {
            break;
        }
    }
    // Every path must now carry a guard, and the guards must split into
    // one complementary pair.
    let guard = match paths[0].get(idx) {
        Some(ClauseItem::Guard(g)) => g.clone(),
        _ => return Err("clauses diverge without complementary guards".into()),
    };
    let comp = guard.complement();
    let mut then_paths = Vec::new();
    let mut else_paths = Vec::new();
    for p in paths {
        match p.get(idx) {
            Some(ClauseItem::Guard(g)) if *g == guard => then_paths.push(&p[idx + 1..]),
            Some(ClauseItem::Guard(g)) if *g == comp => else_paths.push(&p[idx + 1..]),
            Some(ClauseItem::Guard(_)) => {
                return Err("guards of sibling clauses are not complementary".into())
            }
            _ => return Err("clauses diverge without complementary guards".into()),
        }
    }
    if then_paths.is_empty() || else_paths.is_empty() {
        return Err("guard has no clause with the complementary guard".into());
    }
    let then_branch = refactor_paths(&then_paths)?;
    let else_branch = refactor_paths(&else_paths)?;
    Ok(BodyTree {
        goals,
        fork: Some(Box::new(Fork {
            guard,
            then_branch,
            else_branch,
        })),
    })
}

/// Location of one goal in a body tree: the fork directions taken from
/// the root (false = then, true = else) plus the index in the node's
/// goal list. Used by the interval analysis and the instrumented
/// interpreter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GoalLoc {
    pub proc: String,
    pub path: Vec<bool>,
    pub index: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpir::parse::parse_lp;

    pub(crate) const FIG9: &str = "\
pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
pub gcd(a, b; ret) <- b == 0 & ret = a.
";

    #[test]
    fn fig9_flattens_to_two_clauses() {
        let p = parse_lp(FIG9).unwrap();
        let clauses = flatten(p.proc("gcd").unwrap());
        assert_eq!(clauses.len(), 2);
        assert!(matches!(
            &clauses[0].items[0],
            ClauseItem::Guard(Guard { cmp: CmpOp::Ne, .. })
        ));
        assert!(matches!(
            &clauses[1].items[0],
            ClauseItem::Guard(Guard { cmp: CmpOp::Eq, .. })
        ));
    }

    #[test]
    fn fork_free_body_is_one_clause() {
        let p = parse_lp("f(x; y) <- y = x.").unwrap();
        let clauses = flatten(p.proc("f").unwrap());
        assert_eq!(clauses.len(), 1);
        assert_eq!(clauses[0].items.len(), 1);
    }

    #[test]
    fn flatten_refactor_round_trip() {
        let p = parse_lp(FIG9).unwrap();
        let gcd = p.proc("gcd").unwrap();
        let rebuilt = refactor(&flatten(gcd)).unwrap();
        assert_eq!(rebuilt, gcd.body);
    }

    #[test]
    fn nested_forks_round_trip() {
        let text = "\
f(x; r) <- x < 0 & r = 0.
f(x; r) <- x >= 0 & x > 10 & r = 2.
f(x; r) <- x >= 0 & x <= 10 & r = 1.
";
        let p = parse_lp(text).unwrap();
        let f = p.proc("f").unwrap();
        assert_eq!(f.body.fork_count(), 2);
        assert_eq!(refactor(&flatten(f)).unwrap(), f.body);
    }

    #[test]
    fn non_complementary_guards_rejected() {
        let text = "\
f(x; r) <- x != 0 & r = 1.
f(x; r) <- x > 0 & r = 2.
";
        assert!(parse_lp(text).is_err());
    }
}
