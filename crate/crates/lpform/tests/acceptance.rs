//! Acceptance gate: one test per criterion, each printing a PASS/FAIL
//! line (visible with `--nocapture`, and in the failure output).

use std::collections::BTreeSet;
use std::mem::discriminant;

use lpform::fault::{Fault, Limits};
use lpform::interval::{analyze_intervals, check_div_safety, ExtInt, Interval};
use lpform::lower::{interp_asm, interp_asm_with, lower};
use lpform::lpir::{
    clause_selection_count, flatten, interp_lp_with, parse_lp, parse_lp_clauses, print_lp,
    validate_clauses, validate_lp, GoalLoc, LpProgram,
};
use lpform::neededness::proc_summaries;
use lpform::ops::{is_state_var, CmpOp};
use lpform::simplify::simplify;
use lpform::tac::{interp_tac_with, parse_tac, TacProgram};
use lpform::translate::translate_program;

const TAC_FIXTURES: &[&str] = &[
    "gcd.tac",
    "fig4.tac",
    "abs.tac",
    "max3.tac",
    "sumloop.tac",
    "countdown.tac",
    "deadcode.tac",
    "multifun.tac",
    "evenodd.tac",
    "arith.tac",
];

fn fixture(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn tac_fixture(name: &str) -> TacProgram {
    parse_tac(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// All fixture programs in LP form: every translated TAC fixture plus
/// the hand-written LP fixtures.
fn lp_fixtures() -> Vec<(String, LpProgram)> {
    let mut out: Vec<(String, LpProgram)> = TAC_FIXTURES
        .iter()
        .map(|f| (f.to_string(), translate_program(&tac_fixture(f)).unwrap()))
        .collect();
    for f in ["fig9.lp", "fig11.lp"] {
        out.push((f.to_string(), parse_lp(&fixture(f)).unwrap()));
    }
    out
}

/// Deterministic input vectors: the full grid when small enough, else a
/// fixed-seed sample of `cap` vectors.
fn vectors(arity: usize, lo: i64, hi: i64, cap: usize) -> Vec<Vec<i64>> {
    let width = (hi - lo + 1) as u64;
    let total = width.checked_pow(arity as u32);
    match total {
        Some(t) if (t as usize) <= cap => {
            let mut out = vec![vec![]];
            for _ in 0..arity {
                out = out
                    .into_iter()
                    .flat_map(|v: Vec<i64>| {
                        (lo..=hi).map(move |x| {
                            let mut v = v.clone();
                            v.push(x);
                            v
                        })
                    })
                    .collect();
            }
            out
        }
        _ => {
            let mut state = 0x9e3779b97f4a7c15u64;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 33
            };
            (0..cap)
                .map(|_| (0..arity).map(|_| lo + (next() % width) as i64).collect())
                .collect()
        }
    }
}

fn verdict(n: usize, what: &str, ok: bool) {
    println!(
        "criterion {n} ({what}): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} ({what}) failed");
}

#[test]
fn criterion_1_golden_translation() {
    let lp = translate_program(&tac_fixture("gcd.tac")).unwrap();
    let names: Vec<&str> = lp.procs.keys().map(String::as_str).collect();
    let mut ok = names == ["gcd", "gcd_entry", "gcd_header", "gcd_ν", "gcd_body", "gcd_tail"];
    ok &= validate_lp(&lp).is_empty();
    let nu = lp.proc("gcd_ν").unwrap();
    let clauses = flatten(nu);
    ok &= clauses.len() == 2;
    let guards: Vec<CmpOp> = clauses
        .iter()
        .filter_map(|c| match c.items.first() {
            Some(lpform::lpir::ClauseItem::Guard(g)) => Some(g.cmp),
            _ => None,
        })
        .collect();
    ok &= guards == [CmpOp::Ne, CmpOp::Eq];
    verdict(1, "golden translation of gcd", ok);
}

#[test]
fn criterion_2_golden_simplification() {
    let lp = translate_program(&tac_fixture("gcd.tac")).unwrap();
    let s = simplify(&lp);
    let ok = print_lp(&s) == fixture("fig9.lp") && validate_lp(&s).is_empty();
    verdict(2, "simplification reaches the two-clause gcd", ok);
}

#[test]
fn criterion_3_interval_reproduction() {
    let p = parse_lp(&fixture("fig11.lp")).unwrap();
    let a = analyze_intervals(&p);
    let env = |proc: &str, path: &[bool], index: usize| {
        a.goal_envs
            .get(&GoalLoc {
                proc: proc.to_string(),
                path: path.to_vec(),
                index,
            })
            .unwrap()
    };
    let r = |lo, hi| Interval::Range(lo, hi);
    let (ninf, pinf) = (ExtInt::NegInf, ExtInt::PosInf);
    let i = ExtInt::Int;
    // Environments just before the p1 call in each clause of p.
    let c1 = env("p", &[false], 2);
    let c2 = env("p", &[true], 2);
    let mut ok = c1["x"] == r(ninf, i(-1)) && c1["y"] == r(i(1), pinf) && c1["z"] == r(ninf, i(-1));
    ok &= c2["x"] == r(i(0), pinf) && c2["y"] == r(i(0), pinf) && c2["z"] == r(ninf, i(0));
    ok &= a.proc_inputs["p1"] == vec![r(i(0), pinf), r(ninf, i(0))];
    ok &= env("p1", &[], 1)["t"] == r(ninf, i(-1));
    ok &= check_div_safety(&p, &a).is_empty();
    verdict(3, "§-by-§ interval bounds on the branching fixture", ok);
}

#[test]
fn criterion_4_neededness_soundness() {
    let limits = Limits {
        step_budget: 200_000,
        ..Limits::default()
    };
    let mut proc_count = 0;
    let mut ok = true;
    for (file, p) in lp_fixtures() {
        let summaries = proc_summaries(&p);
        for pr in p.procs.values() {
            proc_count += 1;
            let arity = pr.in_params.len();
            let closure: BTreeSet<(usize, usize)> = summaries[&pr.name].clone();
            for v in vectors(arity, -4, 4, 600) {
                let base = match interp_lp_with(&p, &pr.name, &v, &limits) {
                    Ok(o) => o,
                    Err(_) => continue,
                };
                for i in 0..arity {
                    let mut v2 = v.clone();
                    v2[i] = if v2[i] == 4 { -4 } else { v2[i] + 1 };
                    let Ok(alt) = interp_lp_with(&p, &pr.name, &v2, &limits) else {
                        continue;
                    };
                    for (o, (x, y)) in base.iter().zip(&alt).enumerate() {
                        if x != y && !closure.contains(&(o, i)) {
                            eprintln!(
                                "{file}: {}: missing dependency {}=>{} (inputs {v:?} vs {v2:?})",
                                pr.name, pr.out_params[o], pr.in_params[i]
                            );
                            ok = false;
                        }
                    }
                }
            }
        }
    }
    ok &= proc_count >= 20;
    verdict(4, "brute-forced neededness dependencies", ok);
}

fn key(r: &Result<i64, Fault>) -> Result<i64, std::mem::Discriminant<Fault>> {
    match r {
        Ok(v) => Ok(*v),
        Err(f) => Err(discriminant(f)),
    }
}

/// Runs a public procedure of an LP program, filling state inputs with 0
/// and returning the first non-state output.
fn run_lp(p: &LpProgram, f: &str, args: &[i64], limits: &Limits) -> Result<i64, Fault> {
    let pr = p.proc(f).unwrap();
    let mut ins = Vec::new();
    let mut it = args.iter();
    for param in &pr.in_params {
        ins.push(if is_state_var(param) {
            0
        } else {
            *it.next().unwrap()
        });
    }
    let outs = interp_lp_with(p, f, &ins, limits)?;
    let pos = pr.out_params.iter().position(|o| !is_state_var(o)).unwrap();
    Ok(outs[pos])
}

#[test]
fn criterion_5_oracle_equivalence() {
    let limits = Limits::default();
    let mut ok = true;
    for file in TAC_FIXTURES {
        let tac = tac_fixture(file);
        let lp = translate_program(&tac).unwrap();
        let s = simplify(&lp);
        let asm = lower(&s);
        for func in &tac.functions {
            for v in vectors(func.params.len(), -8, 8, 10_000) {
                let t = key(&interp_tac_with(&tac, &func.name, &v, &limits));
                let r1 = key(&run_lp(&lp, &func.name, &v, &limits));
                let r2 = key(&run_lp(&s, &func.name, &v, &limits));
                let r3 = key(&{
                    let pr = s.proc(&func.name).unwrap();
                    let ins: Vec<i64> = pr
                        .in_params
                        .iter()
                        .zip(v.iter().copied().map(Some).chain(std::iter::repeat(None)))
                        .map(|(p, a)| if is_state_var(p) { 0 } else { a.unwrap() })
                        .collect();
                    interp_asm(&asm, &func.name, &ins).map(|o| o[0])
                });
                if !(t == r1 && t == r2 && t == r3) {
                    eprintln!("{file}: {}({v:?}): tac={t:?} lp={r1:?} simplified={r2:?} asm={r3:?}", func.name);
                    ok = false;
                }
            }
        }
    }
    verdict(5, "oracle equivalence across all stages", ok);
}

#[test]
fn criterion_6_determinism() {
    let limits = Limits {
        step_budget: 200_000,
        ..Limits::default()
    };
    let mut ok = true;
    for (file, p) in lp_fixtures() {
        for pr in p.procs.values() {
            for v in vectors(pr.in_params.len(), -8, 8, 500) {
                match clause_selection_count(&p, &pr.name, &v, &limits) {
                    Ok(n) if n != 1 => {
                        eprintln!("{file}: {}({v:?}): {n} clauses apply", pr.name);
                        ok = false;
                    }
                    _ => {}
                }
            }
        }
    }
    verdict(6, "exactly one clause applies per input", ok);
}

#[test]
fn criterion_7_last_call_optimisation() {
    let asm = lower(&simplify(&translate_program(&tac_fixture("gcd.tac")).unwrap()));
    let limits = Limits::default();
    let mut ok = true;
    for a in 0..=64 {
        for b in 0..=64 {
            let (_, stats) = interp_asm_with(&asm, "gcd", &[a, b], &limits).unwrap();
            ok &= stats.max_depth == 1;
        }
    }
    verdict(7, "lowered gcd runs at constant stack depth", ok);
}

#[test]
fn criterion_8_validator_mutation_suite() {
    // Each mutant is a small corruption of a valid program; the
    // validator must reject it citing the expected rule.
    let mutants: &[(&str, &str)] = &[
        // Flipped or non-complementary guards.
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
             pub gcd(a, b; ret) <- b > 0 & ret = a.",
            "complementary-guards",
        ),
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
             pub gcd(a, b; ret) <- b != 0 & ret = a.",
            "complementary-guards",
        ),
        // Duplicate assignments.
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & b0 = 1 & gcd(b, b0; ret).
             pub gcd(a, b; ret) <- b == 0 & ret = a.",
            "single-assignment",
        ),
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
             pub gcd(a, b; ret) <- b == 0 & a = 5 & ret = a.",
            "single-assignment",
        ),
        // Dropped output definitions.
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
             pub gcd(a, b; ret) <- b == 0 & t = a.",
            "output-undefined",
        ),
        (
            "f(x; r) <- x < 0 & r = 1.
             f(x; r) <- x >= 0 & t = 1.",
            "output-undefined",
        ),
        // Desynchronized clause heads.
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
             pub gcd(a, c; ret) <- b == 0 & ret = a.",
            "identical-heads",
        ),
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
             pub gcd(a, b; res) <- b == 0 & res = a.",
            "identical-heads",
        ),
        // Reads of never-assigned variables.
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
             pub gcd(a, b; ret) <- b == 0 & ret = q.",
            "unassigned-use",
        ),
        (
            "f(x; r) <- y < 0 & r = 1.
             f(x; r) <- y >= 0 & r = 2.",
            "unassigned-use",
        ),
        // Arity violations.
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a; b0) & gcd(b, b0; ret).
             pub gcd(a, b; ret) <- b == 0 & ret = a.",
            "prim-arity",
        ),
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b0; ret).
             pub gcd(a, b; ret) <- b == 0 & ret = a.",
            "call-arity",
        ),
        // Unknown callee.
        (
            "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gdc(b, b0; ret).
             pub gcd(a, b; ret) <- b == 0 & ret = a.",
            "unknown-callee",
        ),
        // Repeated parameter names.
        (
            "pub gcd(a, a; ret) <- a != 0 & ret = a.
             pub gcd(a, a; ret) <- a == 0 & ret = 1.",
            "moded-params",
        ),
        // Non-adjacent clause groups for the same procedure.
        (
            "f(x; r) <- r = x.
             g(x; r) <- r = x.
             f(x; r) <- r = x.",
            "duplicate-proc",
        ),
    ];
    let mut ok = mutants.len() >= 12;
    for (text, rule) in mutants {
        let raw = parse_lp_clauses(text).unwrap();
        let diags = validate_clauses(&raw.clauses);
        if !diags.iter().any(|d| d.rule.name() == *rule) {
            eprintln!("mutant not killed by `{rule}`: got {diags:?}\n{text}");
            ok = false;
        }
    }
    verdict(8, "validator mutation suite", ok);
}
