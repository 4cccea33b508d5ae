use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cfrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfrd")).args(args).output().expect("run cfrd")
}

fn ok(args: &[&str]) -> String {
    let out = cfrd(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Value printed on the `name <value>` line of a command's output.
fn field(stdout: &str, name: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(name)?.trim().parse().ok())
        .unwrap_or_else(|| panic!("no {name} in {stdout}"))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn last_row(csv: &str) -> Vec<f64> {
    let line = csv.lines().rfind(|l| !l.starts_with('#')).unwrap();
    line.split(',').map(|c| c.parse().unwrap()).collect()
}

#[test]
fn solve_rps_is_near_uniform() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["solve", "--game", "rps", "--iters", "10000", "--out", path(dir.path())]);
    let strategy = fs::read_to_string(dir.path().join("strategy.txt")).unwrap();
    assert_eq!(strategy.lines().count(), 2);
    for line in strategy.lines() {
        for field in line.split_whitespace().skip(2) {
            let p: f64 = field.split_once('=').unwrap().1.parse().unwrap();
            assert!((p - 1.0 / 3.0).abs() < 0.01, "{line}");
        }
    }
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,exploitability_chips,elapsed_seconds\n"));
    assert_eq!(last_row(&trace)[0], 10000.0);
}

#[test]
fn solve_kuhn_reports_game_value() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["solve", "--game", "kuhn", "--iters", "200000", "--out", path(dir.path())]);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let value: f64 = trace
        .lines()
        .find_map(|l| l.strip_prefix("# value_player1 "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((value + 1.0 / 18.0).abs() < 1e-3);
}

#[test]
fn solve_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        ok(&["--seed", "5", "solve", "--game", "kuhn", "--iters", "3000", "--out", path(dir.path())]);
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("strategy.txt")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn trivial_partition_cfrd_matches_solve() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&["solve", "--game", "kuhn", "--iters", "500", "--out", path(a.path())]);
    ok(&["cfrd", "--game", "kuhn", "--frontier", "none", "--trunk-iters", "500", "--out", path(b.path())]);
    assert_eq!(
        fs::read(a.path().join("strategy.txt")).unwrap(),
        fs::read(b.path().join("strategy.txt")).unwrap()
    );
}

#[test]
fn cfrd_is_independent_of_workers() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let common = ["--trunk-iters", "200", "--subgame-iters", "50", "--recovery-iters", "500", "--eval-every", "100"];
    let mut outputs = Vec::new();
    for (dir, workers) in [(&a, "1"), (&b, "2")] {
        let mut args = vec!["--workers", workers, "cfrd", "--game", "kuhn", "--out", path(dir.path())];
        args.extend(common);
        outputs.push(ok(&args));
    }
    for file in ["strategy.txt", "trunk.txt", "cfvs.txt"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    assert!(field(&outputs[0], "trunk_entries") < field(&outputs[0], "vanilla_entries"));
    let trace = fs::read_to_string(a.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,subgame_iters,exploitability_chips,elapsed_seconds\n"));
    assert_eq!(trace.lines().count(), 3);
}

#[test]
fn recover_rps_from_saved_files() {
    let dir = tempfile::tempdir().unwrap();
    let solved = dir.path().join("solved");
    let recovered = dir.path().join("recovered");
    ok(&["solve", "--game", "rps", "--method", "lp", "--out", path(&solved)]);
    let strategy = solved.join("strategy.txt");
    let cfvs = dir.path().join("cfvs.txt");
    fs::write(&cfvs, "1 p1:R 0\n1 p1:P 0\n1 p1:S 0\n2 p2 0\n").unwrap();
    let validate = ok(&["validate", "--game", "rps", "--strategy", path(&strategy), "--cfvs", path(&cfvs)]);
    assert!(validate.contains("cfvs ok"), "{validate}");
    let out = ok(&[
        "recover",
        "--game",
        "rps",
        "--strategy",
        path(&strategy),
        "--cfvs",
        path(&cfvs),
        "--recovery-iters",
        "20000",
        "--out",
        path(&recovered),
    ]);
    assert!(field(&out, "safe_exploitability") <= 1e-2);
    let csv = fs::read_to_string(recovered.join("recovery.csv")).unwrap();
    assert!(csv.starts_with("iterations,safe_expl,unsafe_expl\n"));
    assert!(last_row(&csv)[1] <= 1e-2);
    let exploit = ok(&["exploit", "--game", "rps", "--strategy", path(&recovered.join("strategy.txt"))]);
    assert!(field(&exploit, "exploitability") <= 1e-2);
}

#[test]
fn resolve_abstract_writes_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["resolve-abstract", "--game", "leduc", "--recovery-iters", "64", "--out", path(dir.path())]);
    assert!((field(&out, "original_exploitability") - 0.382).abs() < 0.05);
    let csv = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert!(csv.starts_with("iterations,safe_expl,unsafe_expl,safe_vs_orig,unsafe_vs_orig\n"));
    assert_eq!(last_row(&csv)[0], 64.0);
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert_eq!(cfrd(&["solve", "--game", "chess", "--out", out]).status.code(), Some(2));
    assert_eq!(cfrd(&["solve", "--game", "kuhn", "--iters", "0", "--out", out]).status.code(), Some(2));
    assert_eq!(cfrd(&["cfrd", "--game", "kuhn", "--recovery-iters", "0", "--out", out]).status.code(), Some(2));
    assert_eq!(cfrd(&["exploit", "--game", "kuhn", "--strategy", "/nonexistent/strategy.txt"]).status.code(), Some(2));
    assert_eq!(cfrd(&["resolve-abstract", "--game", "kuhn", "--out", out]).status.code(), Some(2));
}

#[test]
fn invalid_strategy_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 p1 R=0.5 P=0.5 S=0.5\n").unwrap();
    assert_eq!(cfrd(&["exploit", "--game", "rps", "--strategy", path(&bad)]).status.code(), Some(3));
    fs::write(&bad, "1 nowhere x=1\n").unwrap();
    assert_eq!(cfrd(&["validate", "--game", "rps", "--strategy", path(&bad)]).status.code(), Some(3));
}
