//! Command-line driver for the LP-form pipeline.

use std::collections::BTreeMap;
use std::io::Read;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lpform::fault::Limits;
use lpform::interval::{
    analyze_intervals_from, check_div_safety, default_seeds, Analysis, ExtInt, Interval,
};
use lpform::lower::{interp_asm_with, lower, print_asm};
use lpform::lpir::{interp_lp_with, parse_lp, print_lp, LpProgram};
use lpform::neededness::proc_summaries;
use lpform::ops::is_state_var;
use lpform::simplify::{simplify_with, InlinePolicy};
use lpform::tac::{interp_tac_with, parse_tac, print_tac};
use lpform::translate::translate_program;

#[derive(Parser)]
#[command(name = "lpform", version, about = "Three-address code to LP-form compiler pipeline")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Translate a three-address-code file to LP form.
    Translate(Input),
    /// Check an LP-form file; prints diagnostics and exits 1 if invalid.
    Validate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        json: bool,
    },
    /// Simplify an LP-form (or translated TAC) program.
    Simplify {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        max_rounds: Option<usize>,
        #[arg(long)]
        max_inline_goals: Option<usize>,
    },
    /// Run the neededness or interval analysis and print a report.
    Analyze {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        neededness: bool,
        #[arg(long)]
        intervals: bool,
        /// Restrict interval entry points to this procedure.
        #[arg(long)]
        entry: Option<String>,
        /// Input assumption for the entry procedure, e.g. `x=-inf..inf`.
        #[arg(long)]
        assume: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Lower to pseudo-assembly and print it.
    Lower(Input),
    /// Execute a program at a chosen stage and print the outputs.
    Run {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        entry: String,
        /// Comma-separated integer arguments.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        args: Vec<i64>,
        #[arg(long, value_enum)]
        stage: Option<Stage>,
        #[arg(long)]
        json: bool,
    },
    /// Print every stage of the pipeline for a TAC file.
    Pipeline(Input),
}

#[derive(Args)]
struct Input {
    /// Input file, or `-` for standard input.
    file: String,
    /// Treat the input as three-address code regardless of extension.
    #[arg(long)]
    tac: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    Tac,
    Lp,
    LpSimplified,
    Asm,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn limits() -> Limits {
    let mut l = Limits::default();
    if let Ok(v) = std::env::var("LPFORM_STEP_BUDGET") {
        if let Ok(n) = v.parse() {
            l.step_budget = n;
        }
    }
    l
}

fn read_input(input: &Input) -> Result<String> {
    if input.file == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(&input.file).with_context(|| format!("reading {}", input.file))
    }
}

fn is_tac(input: &Input) -> bool {
    input.tac || input.file.ends_with(".tac")
}

/// Loads the input as an LP program, translating first when it is TAC.
fn load_lp(input: &Input) -> Result<LpProgram> {
    let text = read_input(input)?;
    if is_tac(input) {
        let tac = parse_tac(&text).map_err(|e| anyhow!("{}: {e}", input.file))?;
        Ok(translate_program(&tac)?)
    } else {
        parse_lp(&text).map_err(|e| anyhow!("{}: {e}", input.file))
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Translate(input) => {
            let text = read_input(&input)?;
            let tac = parse_tac(&text).map_err(|e| anyhow!("{}: {e}", input.file))?;
            print!("{}", print_lp(&translate_program(&tac)?));
        }
        Cmd::Validate { input, json } => {
            let text = read_input(&input)?;
            if is_tac(&input) {
                bail!("validate expects LP form");
            }
            let raw = lpform::lpir::parse_lp_clauses(&text)
                .map_err(|e| anyhow!("{}: {e}", input.file))?;
            let diags = lpform::lpir::validate_clauses(&raw.clauses);
            for d in &diags {
                if json {
                    println!(
                        "{}",
                        serde_json::json!({
                            "proc": d.proc,
                            "clause": d.clause,
                            "rule": d.rule.name(),
                            "message": d.msg,
                        })
                    );
                } else {
                    eprintln!("{d}");
                }
            }
            if !diags.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Simplify {
            input,
            max_rounds,
            max_inline_goals,
        } => {
            let lp = load_lp(&input)?;
            let mut policy = InlinePolicy::default();
            if let Some(n) = max_rounds {
                policy.max_rounds = n;
            }
            if let Some(n) = max_inline_goals {
                policy.max_body_goals = n;
            }
            print!("{}", print_lp(&simplify_with(&lp, &policy)));
        }
        Cmd::Analyze {
            input,
            neededness,
            intervals,
            entry,
            assume,
            json,
        } => {
            if !neededness && !intervals {
                bail!("analyze requires --neededness or --intervals");
            }
            let lp = load_lp(&input)?;
            if neededness {
                report_neededness(&lp, json);
            }
            if intervals {
                let seeds = interval_seeds(&lp, entry.as_deref(), &assume)?;
                let a = analyze_intervals_from(&lp, &seeds);
                report_intervals(&lp, &a, json);
            }
        }
        Cmd::Lower(input) => {
            let lp = load_lp(&input)?;
            print!("{}", print_asm(&lower(&lp)));
        }
        Cmd::Run {
            input,
            entry,
            args,
            stage,
            json,
        } => {
            let outs = run_stage(&input, &entry, &args, stage)?;
            if json {
                println!("{}", serde_json::json!({ "entry": entry, "outputs": outs }));
            } else {
                println!(
                    "{}",
                    outs.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
                );
            }
        }
        Cmd::Pipeline(input) => {
            let text = read_input(&input)?;
            let tac = parse_tac(&text).map_err(|e| anyhow!("{}: {e}", input.file))?;
            let lp = translate_program(&tac)?;
            let simplified = simplify_with(&lp, &InlinePolicy::default());
            let asm = lower(&simplified);
            print!("== tac ==\n{}", print_tac(&tac));
            print!("== lp ==\n{}", print_lp(&lp));
            print!("== lp-simplified ==\n{}", print_lp(&simplified));
            print!("== asm ==\n{}", print_asm(&asm));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_stage(input: &Input, entry: &str, args: &[i64], stage: Option<Stage>) -> Result<Vec<i64>> {
    let stage = stage.unwrap_or(if is_tac(input) { Stage::Tac } else { Stage::Lp });
    let limits = limits();
    if stage == Stage::Tac {
        let text = read_input(input)?;
        let tac = parse_tac(&text).map_err(|e| anyhow!("{}: {e}", input.file))?;
        return Ok(vec![interp_tac_with(&tac, entry, args, &limits)?]);
    }
    let lp = load_lp(input)?;
    let lp = match stage {
        Stage::Lp => lp,
        _ => simplify_with(&lp, &InlinePolicy::default()),
    };
    let pr = lp
        .proc(entry)
        .ok_or_else(|| anyhow!("no procedure named {entry}"))?;
    // Positional arguments fill the non-state inputs; any state input
    // starts at 0. State outputs are not printed.
    let mut ins = Vec::new();
    let mut it = args.iter();
    for p in &pr.in_params {
        if is_state_var(p) {
            ins.push(0);
        } else {
            ins.push(
                *it.next()
                    .ok_or_else(|| anyhow!("{entry} expects {} arguments", pr.in_params.len()))?,
            );
        }
    }
    if it.next().is_some() {
        bail!("too many arguments for {entry}");
    }
    let keep: Vec<bool> = pr.out_params.iter().map(|o| !is_state_var(o)).collect();
    let outs = match stage {
        Stage::Asm => interp_asm_with(&lower(&lp), entry, &ins, &limits)?.0,
        _ => interp_lp_with(&lp, entry, &ins, &limits)?,
    };
    Ok(outs
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(v, _)| v)
        .collect())
}

fn report_neededness(lp: &LpProgram, json: bool) {
    let summaries = proc_summaries(lp);
    for (name, pairs) in summaries {
        let pr = lp.proc(&name).unwrap();
        let deps: Vec<String> = pairs
            .iter()
            .map(|(o, i)| format!("{}=>{}", pr.out_params[*o], pr.in_params[*i]))
            .collect();
        if json {
            println!(
                "{}",
                serde_json::json!({ "proc": name, "deps": deps })
            );
        } else {
            println!("{}: {}", name, deps.join(", "));
        }
    }
}

fn interval_seeds(
    lp: &LpProgram,
    entry: Option<&str>,
    assume: &[String],
) -> Result<BTreeMap<String, Vec<Interval>>> {
    let Some(entry) = entry else {
        if !assume.is_empty() {
            bail!("--assume requires --entry");
        }
        return Ok(default_seeds(lp));
    };
    let pr = lp
        .proc(entry)
        .ok_or_else(|| anyhow!("no procedure named {entry}"))?;
    let mut ivs = vec![Interval::TOP; pr.in_params.len()];
    for a in assume {
        let (var, range) = a
            .split_once('=')
            .ok_or_else(|| anyhow!("bad --assume `{a}`, expected v=lo..hi"))?;
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| anyhow!("bad --assume `{a}`, expected v=lo..hi"))?;
        let idx = pr
            .in_params
            .iter()
            .position(|p| p == var)
            .ok_or_else(|| anyhow!("{entry} has no input `{var}`"))?;
        ivs[idx] = Interval::Range(parse_bound(lo, true)?, parse_bound(hi, false)?);
    }
    Ok(BTreeMap::from([(entry.to_string(), ivs)]))
}

fn parse_bound(s: &str, low: bool) -> Result<ExtInt> {
    match s {
        "-inf" => Ok(ExtInt::NegInf),
        "inf" | "+inf" => Ok(ExtInt::PosInf),
        _ => s
            .parse()
            .map(ExtInt::Int)
            .map_err(|_| anyhow!("bad bound `{s}`{}", if low { " (lower)" } else { " (upper)" })),
    }
}

fn report_intervals(lp: &LpProgram, a: &Analysis, json: bool) {
    // Per procedure: input intervals, then every local variable joined
    // over the recorded goal environments.
    for pr in lp.procs.values() {
        let Some(ins) = a.proc_inputs.get(&pr.name) else { continue };
        let mut vars: BTreeMap<&str, Interval> = pr
            .in_params
            .iter()
            .zip(ins)
            .map(|(p, iv)| (p.as_str(), *iv))
            .collect();
        for (loc, env) in &a.goal_envs {
            if loc.proc != pr.name {
                continue;
            }
            for (v, iv) in env {
                vars.entry(v)
                    .and_modify(|cur| *cur = cur.join(*iv))
                    .or_insert(*iv);
            }
        }
        for (v, iv) in vars {
            if json {
                println!(
                    "{}",
                    serde_json::json!({ "proc": pr.name, "var": v, "interval": iv.to_string() })
                );
            } else {
                println!("{}: {} in {}", pr.name, v, display_interval(iv));
            }
        }
    }
    let unsafe_sites = check_div_safety(lp, a);
    for pr in lp.procs.values() {
        for (loc, op) in div_sites(lp, &pr.name) {
            let bad = unsafe_sites.iter().find(|(l, _)| *l == loc);
            let verdict = match bad {
                None => "safe".to_string(),
                Some((_, iv)) => format!("unsafe, divisor in {}", display_interval(*iv)),
            };
            if json {
                println!(
                    "{}",
                    serde_json::json!({ "proc": loc.proc, "op": op, "verdict": verdict })
                );
            } else {
                println!("{}: {}: {}", loc.proc, op, verdict);
            }
        }
    }
}

fn display_interval(iv: Interval) -> String {
    iv.to_string()
}

/// All division/modulo goal locations in a procedure, in layout order.
fn div_sites(lp: &LpProgram, proc: &str) -> Vec<(lpform::lpir::GoalLoc, &'static str)> {
    use lpform::lpir::{BodyTree, Goal, GoalLoc, PrimOp};
    use lpform::ops::ArithOp;
    fn walk(
        node: &BodyTree,
        proc: &str,
        path: &mut Vec<bool>,
        out: &mut Vec<(GoalLoc, &'static str)>,
    ) {
        for (index, g) in node.goals.iter().enumerate() {
            if let Goal::Prim {
                op: PrimOp::Arith(op @ (ArithOp::Div | ArithOp::Mod)),
                ..
            } = g
            {
                out.push((
                    GoalLoc {
                        proc: proc.to_string(),
                        path: path.clone(),
                        index,
                    },
                    if *op == ArithOp::Div { "div" } else { "mod" },
                ));
            }
        }
        if let Some(f) = &node.fork {
            path.push(false);
            walk(&f.then_branch, proc, path, out);
            path.pop();
            path.push(true);
            walk(&f.else_branch, proc, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    if let Some(pr) = lp.proc(proc) {
        walk(&pr.body, proc, &mut Vec::new(), &mut out);
    }
    out
}
