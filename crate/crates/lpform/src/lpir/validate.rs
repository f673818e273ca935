//! Well-formedness rules for LP form: moded arguments, identical heads
//! per procedure, complementary guards, single assignment, outputs
//! defined on every path, resolvable calls.
//!
//! Checks run over the flat clause view so that ill-formed clause sets
//! (which the tree representation cannot express) are still diagnosable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{flatten, refactor, Clause, ClauseItem, Goal, LpProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    IdenticalHeads,
    ComplementaryGuards,
    SingleAssignment,
    UnassignedUse,
    OutputUndefined,
    ModedParams,
    PrimArity,
    DuplicateProc,
    UnknownCallee,
    CallArity,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::IdenticalHeads => "identical-heads",
            Rule::ComplementaryGuards => "complementary-guards",
            Rule::SingleAssignment => "single-assignment",
            Rule::UnassignedUse => "unassigned-use",
            Rule::OutputUndefined => "output-undefined",
            Rule::ModedParams => "moded-params",
            Rule::PrimArity => "prim-arity",
            Rule::DuplicateProc => "duplicate-proc",
            Rule::UnknownCallee => "unknown-callee",
            Rule::CallArity => "call-arity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub proc: String,
    /// Clause index within the procedure, when the problem is clause-local.
    pub clause: Option<usize>,
    pub rule: Rule,
    pub msg: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.clause {
            Some(i) => write!(f, "{} clause {}: [{}] {}", self.proc, i + 1, self.rule.name(), self.msg),
            None => write!(f, "{}: [{}] {}", self.proc, self.rule.name(), self.msg),
        }
    }
}

/// Validates a flat clause list (clauses of a procedure must be adjacent).
pub fn validate_clauses(clauses: &[Clause]) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    // Group adjacent clauses by procedure name.
    let mut groups: Vec<(&str, Vec<&Clause>)> = Vec::new();
    for c in clauses {
        match groups.last_mut() {
            Some((name, g)) if *name == c.name => g.push(c),
            _ => groups.push((&c.name, vec![c])),
        }
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for (name, _) in &groups {
        if !seen.insert(name) {
            diags.push(Diagnostic {
                proc: name.to_string(),
                clause: None,
                rule: Rule::DuplicateProc,
                msg: "clauses of a procedure must be adjacent; name defined twice".into(),
            });
        }
    }
    let arities: BTreeMap<&str, (usize, usize)> = groups
        .iter()
        .map(|(name, g)| (*name, (g[0].in_params.len(), g[0].out_params.len())))
        .collect();
    for (name, group) in &groups {
        validate_group(name, group, &arities, &mut diags);
    }
    diags
}

fn validate_group(
    name: &str,
    group: &[&Clause],
    arities: &BTreeMap<&str, (usize, usize)>,
    diags: &mut Vec<Diagnostic>,
) {
    let head = group[0];
    for (i, c) in group.iter().enumerate().skip(1) {
        if c.in_params != head.in_params || c.out_params != head.out_params {
            diags.push(Diagnostic {
                proc: name.to_string(),
                clause: Some(i),
                rule: Rule::IdenticalHeads,
                msg: "all clause heads for a procedure must be identical".into(),
            });
        }
    }
    let mut param_seen = BTreeSet::new();
    for p in head.in_params.iter().chain(&head.out_params) {
        if !param_seen.insert(p.as_str()) {
            diags.push(Diagnostic {
                proc: name.to_string(),
                clause: None,
                rule: Rule::ModedParams,
                msg: format!("parameter `{}` appears more than once in the head", p),
            });
        }
    }
    for (i, c) in group.iter().enumerate() {
        validate_clause(name, i, c, head, arities, diags);
    }
    // Complementarity: the clause set must factor into a guard tree.
    let owned: Vec<Clause> = group.iter().map(|c| (*c).clone()).collect();
    if let Err(e) = refactor(&owned) {
        diags.push(Diagnostic {
            proc: name.to_string(),
            clause: None,
            rule: Rule::ComplementaryGuards,
            msg: e,
        });
    }
}

fn validate_clause(
    name: &str,
    idx: usize,
    c: &Clause,
    head: &Clause,
    arities: &BTreeMap<&str, (usize, usize)>,
    diags: &mut Vec<Diagnostic>,
) {
    let mut assigned: BTreeSet<&str> = head.in_params.iter().map(|s| s.as_str()).collect();
    let push = |rule, msg: String, diags: &mut Vec<Diagnostic>| {
        diags.push(Diagnostic {
            proc: name.to_string(),
            clause: Some(idx),
            rule,
            msg,
        })
    };
    for item in &c.items {
        match item {
            ClauseItem::Guard(g) => {
                for v in g.vars() {
                    if !assigned.contains(v) {
                        push(
                            Rule::UnassignedUse,
                            format!("guard reads unassigned variable `{}`", v),
                            diags,
                        );
                    }
                }
            }
            ClauseItem::Goal(goal) => {
                if let Goal::Prim { op, ins, outs } = goal {
                    if ins.len() != op.in_arity() || outs.len() != 1 {
                        push(
                            Rule::PrimArity,
                            format!("primitive has wrong argument count: {:?}", op),
                            diags,
                        );
                    }
                    // Primitive inputs must be ground at execution.
                    for v in goal.in_vars() {
                        if !assigned.contains(v) {
                            push(
                                Rule::UnassignedUse,
                                format!("primitive reads unassigned variable `{}`", v),
                                diags,
                            );
                        }
                    }
                }
                if let Goal::Call { callee, ins, outs } = goal {
                    match arities.get(callee.as_str()) {
                        None => push(
                            Rule::UnknownCallee,
                            format!("call to undefined procedure `{}`", callee),
                            diags,
                        ),
                        Some((ni, no)) => {
                            if ins.len() != *ni || outs.len() != *no {
                                push(
                                    Rule::CallArity,
                                    format!("call to `{}` has wrong arity", callee),
                                    diags,
                                );
                            }
                        }
                    }
                    // Call inputs may be free: the simple-minded translation
                    // threads every function variable through every block
                    // procedure, bound or not. Reading a free variable in a
                    // primitive or guard is still an error.
                }
                for out in goal.outs() {
                    if !assigned.insert(out) {
                        push(
                            Rule::SingleAssignment,
                            format!("variable `{}` assigned more than once", out),
                            diags,
                        );
                    }
                }
            }
        }
    }
    for out in &c.out_params {
        if !assigned.contains(out.as_str()) {
            push(
                Rule::OutputUndefined,
                format!("output parameter `{}` is not assigned on this path", out),
                diags,
            );
        }
    }
}

/// Validates a whole program through the flat clause view.
pub fn validate_lp(p: &LpProgram) -> Vec<Diagnostic> {
    let mut clauses = Vec::new();
    for proc in p.procs.values() {
        clauses.extend(flatten(proc));
    }
    validate_clauses(&clauses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpir::parse_lp;
    use crate::lpir::parse::parse_lp_clauses;

    fn diags_of(text: &str) -> Vec<Diagnostic> {
        let raw = parse_lp_clauses(text).unwrap();
        validate_clauses(&raw.clauses)
    }

    #[test]
    fn fig9_is_valid() {
        let text = "\
pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
pub gcd(a, b; ret) <- b == 0 & ret = a.
";
        assert!(diags_of(text).is_empty());
        let p = parse_lp(text).unwrap();
        assert!(validate_lp(&p).is_empty());
    }

    #[test]
    fn non_complementary_guards_diagnosed() {
        let d = diags_of(
            "f(b; r) <- b != 0 & r = 1.
             f(b; r) <- b > 0 & r = 2.",
        );
        assert!(d.iter().any(|d| d.rule == Rule::ComplementaryGuards), "{d:?}");
    }

    #[test]
    fn double_assignment_diagnosed() {
        let d = diags_of("f(a; r) <- add(a, 1; b0) & add(a, 2; b0) & r = b0.");
        assert!(d.iter().any(|d| d.rule == Rule::SingleAssignment), "{d:?}");
    }

    #[test]
    fn unassigned_prim_use_diagnosed() {
        let d = diags_of("f(a; r) <- add(a, q; r).");
        assert!(d.iter().any(|d| d.rule == Rule::UnassignedUse), "{d:?}");
    }

    #[test]
    fn output_undefined_diagnosed() {
        let d = diags_of("f(a; r, s) <- r = a.");
        assert!(d.iter().any(|d| d.rule == Rule::OutputUndefined), "{d:?}");
    }

    #[test]
    fn desynchronized_heads_diagnosed() {
        let d = diags_of(
            "f(a; r) <- a != 0 & r = 1.
             f(b; r) <- b == 0 & r = 0.",
        );
        assert!(d.iter().any(|d| d.rule == Rule::IdenticalHeads), "{d:?}");
    }

    #[test]
    fn free_call_inputs_allowed() {
        // The translator threads unassigned variables through calls.
        let d = diags_of(
            "f(a; r) <- g(a, t; r).
             g(x, y; r) <- r = x.",
        );
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn unknown_callee_diagnosed() {
        let d = diags_of("f(a; r) <- h(a; r).");
        assert!(d.iter().any(|d| d.rule == Rule::UnknownCallee), "{d:?}");
    }
}
