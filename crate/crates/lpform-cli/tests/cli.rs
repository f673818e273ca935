//! End-to-end tests of the command-line interface.

use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../lpform/fixtures")
        .join(name);
    p.to_str().unwrap().to_string()
}

fn lpform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpform"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn translate_prints_block_procedures() {
    let out = lpform(&["translate", &fixture("gcd.tac")]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("pub gcd(a, b, st; ret, st0)"));
    assert!(text.contains("gcd_ν(a, b, t, st; ret, st0) <- b != 0"));
}

#[test]
fn validate_accepts_valid_and_rejects_invalid() {
    let out = lpform(&["validate", &fixture("fig9.lp")]);
    assert!(out.status.success());
    assert!(out.stderr.is_empty());

    let dir = std::env::temp_dir().join("lpform-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.lp");
    std::fs::write(
        &bad,
        "f(x; r) <- x < 0 & r = 1.\nf(x; r) <- x > 0 & r = 2.\n",
    )
    .unwrap();
    let out = lpform(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("complementary-guards"), "{err}");
}

#[test]
fn run_agrees_across_stages() {
    for stage in ["tac", "lp", "lp-simplified", "asm"] {
        let out = lpform(&[
            "run",
            &fixture("gcd.tac"),
            "--entry",
            "gcd",
            "--args",
            "12,8",
            "--stage",
            stage,
        ]);
        assert!(out.status.success(), "stage {stage}");
        assert_eq!(stdout(&out).trim(), "4", "stage {stage}");
    }
}

#[test]
fn run_accepts_negative_arguments() {
    let out = lpform(&[
        "run",
        &fixture("fig4.tac"),
        "--entry",
        "p",
        "--args",
        "-3",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "3");
}

#[test]
fn simplify_produces_the_two_clause_gcd() {
    let out = lpform(&["simplify", &fixture("gcd.tac")]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "pub gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).\n\
         pub gcd(a, b; ret) <- b == 0 & ret = a.\n"
    );
}

#[test]
fn analyze_neededness_report() {
    let out = lpform(&["analyze", &fixture("fig9.lp"), "--neededness"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "gcd: ret=>a, ret=>b");
}

#[test]
fn analyze_intervals_report() {
    let out = lpform(&[
        "analyze",
        &fixture("fig11.lp"),
        "--intervals",
        "--entry",
        "p",
        "--assume",
        "x=-inf..inf",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("t in [-inf,-1]"), "{text}");
    assert!(text.contains("mod: safe"), "{text}");
}

#[test]
fn analyze_intervals_flags_unsafe_division() {
    let dir = std::env::temp_dir().join("lpform-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("unsafe.lp");
    std::fs::write(&f, "pub f(x, y; r) <- div(x, y; r).\n").unwrap();
    let out = lpform(&["analyze", f.to_str().unwrap(), "--intervals"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("div: unsafe"), "{}", stdout(&out));
}

#[test]
fn pipeline_is_byte_stable() {
    let a = lpform(&["pipeline", &fixture("fig4.tac")]);
    let b = lpform(&["pipeline", &fixture("fig4.tac")]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    for section in ["== tac ==", "== lp ==", "== lp-simplified ==", "== asm =="] {
        assert!(stdout(&a).contains(section));
    }
}

#[test]
fn reads_standard_input() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lpform"))
        .args(["validate", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"f(x; r) <- r = x.\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
}

#[test]
fn usage_errors_exit_2() {
    let out = lpform(&["analyze"]);
    assert_eq!(out.status.code(), Some(2));
    let out = lpform(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_entry_exits_1() {
    let out = lpform(&[
        "run",
        &fixture("gcd.tac"),
        "--entry",
        "nope",
        "--args",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn step_budget_env_var_applies() {
    let out = Command::new(env!("CARGO_BIN_EXE_lpform"))
        .args([
            "run",
            &fixture("sumloop.tac"),
            "--entry",
            "sum",
            "--args",
            "1000",
        ])
        .env("LPFORM_STEP_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("step budget"), "{err}");
}

#[test]
fn json_output_is_line_oriented() {
    let out = lpform(&["analyze", &fixture("fig9.lp"), "--neededness", "--json"]);
    assert!(out.status.success());
    for line in stdout(&out).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("proc").is_some());
    }
}
