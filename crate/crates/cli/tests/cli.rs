use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use streamcover::io::{load_instance, LoadOptions};
use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_streamcover"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(key)).unwrap_or_else(|| panic!("no '{key}' in:\n{text}")).trim()
}

fn gen_planted(path: &Path, seed: &str) {
    let o = run(&["--seed", seed, "gen", "planted", "--n", "64", "--m", "20", "--opt", "4", "-o", path.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
}

#[test]
fn generated_planted_instance_loads() {
    let dir = tempdir().unwrap();
    let p = dir.path().join("p.ssc");
    gen_planted(&p, "5");
    let sys = load_instance(&p, LoadOptions::default()).unwrap();
    assert_eq!((sys.n(), sys.m()), (64, 20));
    assert!(sys.is_feasible());

    let b = dir.path().join("p.bin");
    let o = run(&["--seed", "5", "gen", "planted", "--n", "64", "--m", "20", "--binary", "-o", b.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(load_instance(&b, LoadOptions::default()).unwrap(), sys);
}

#[test]
fn half_delta_uses_four_passes() {
    let dir = tempdir().unwrap();
    let p = dir.path().join("p.ssc");
    gen_planted(&p, "1");
    let o = run(&["--seed", "1", "solve", p.to_str().unwrap(), "--delta", "0.5", "--oracle"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert_eq!(field(&out, "passes:"), "4");
    assert_eq!(field(&out, "valid:"), "true");
    let ratio: f64 = field(&out, "ratio:").parse().unwrap();
    assert!(ratio >= 1.0);

    let o = run(&["--seed", "1", "solve", p.to_str().unwrap(), "--delta", "1/3"]);
    assert_eq!(field(&stdout(&o), "passes:"), "6");
}

#[test]
fn exit_codes() {
    let dir = tempdir().unwrap();
    let inf = dir.path().join("inf.ssc");
    fs::write(&inf, "n=3 m=1\n0: 0 1\n").unwrap();
    assert_eq!(run(&["solve", inf.to_str().unwrap()]).status.code(), Some(2));

    let bad = dir.path().join("bad.ssc");
    fs::write(&bad, "garbage\n").unwrap();
    assert_eq!(run(&["solve", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["solve", "/nonexistent.ssc"]).status.code(), Some(1));
    assert_eq!(run(&["solve", bad.to_str().unwrap(), "--delta", "2"]).status.code(), Some(1));
    assert_eq!(run(&["--ci", "solve", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

fn bench_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn bench_grid() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = run(&[
        "--seed", "7", "--ci", "--jobs", "2", "bench", "--gen", "planted", "--count", "10", "--n", "48", "--m", "16",
        "--deltas", "1,1/2,1/3", "--offline", "exact,greedy", "-o", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "instance,n,m,algorithm,delta,size,opt,ratio,passes,peak_space_units,wall_ms,seed"
    );
    let rows = bench_rows(&text);
    assert_eq!(rows.len(), 60);
    let mut passes: Vec<&str> = rows.iter().map(|r| r[8].as_str()).collect();
    passes.sort();
    passes.dedup();
    assert_eq!(passes, ["2", "4", "6"]);
    assert!(rows.iter().all(|r| r[10] == "-" && r[11] == "7"));

    // exact rows never lose to the greedy row of the same instance and delta
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][3], "iter-exact");
        assert_eq!(pair[1][3], "iter-greedy");
        let e: f64 = pair[0][7].parse().unwrap();
        let g: f64 = pair[1][7].parse().unwrap();
        assert!(e <= g, "{pair:?}");
    }
}

#[test]
fn bench_empty_dir_prints_header_only() {
    let dir = tempdir().unwrap();
    let o = run(&["bench", "--dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn bench_over_dir_with_geo() {
    let dir = tempdir().unwrap();
    gen_planted(&dir.path().join("a.ssc"), "3");
    let g = dir.path().join("b.geo");
    let o = run(&["--seed", "3", "gen", "discs", "--n", "40", "--m", "6", "--opt", "2", "-o", g.to_str().unwrap()]);
    assert!(o.status.success());
    let o = run(&["--seed", "3", "bench", "--dir", dir.path().to_str().unwrap(), "--deltas", "1/2", "--offline", "exact"]);
    let rows = bench_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "a.ssc");
    assert_eq!(rows[1][3], "geom-exact");
    assert_eq!(rows[1][6], "2");
    assert_eq!(rows[1][8], "7");
}

#[test]
fn ci_runs_are_byte_identical() {
    let dir = tempdir().unwrap();
    let p = dir.path().join("p.ssc");
    gen_planted(&p, "9");
    let args = ["--seed", "11", "--ci", "solve", p.to_str().unwrap(), "--delta", "1/3", "--offline", "greedy"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let q = dir.path().join("q.ssc");
    gen_planted(&q, "9");
    assert_eq!(fs::read(&p).unwrap(), fs::read(&q).unwrap());
}

#[test]
fn reduce_verify_and_export() {
    let dir = tempdir().unwrap();
    let isc = dir.path().join("c.isc");
    let ssc = dir.path().join("g.ssc");
    let o = run(&[
        "--seed", "4", "reduce", "--n", "2", "--p", "1", "--verify", "--save-isc", isc.to_str().unwrap(), "--export",
        ssc.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert_eq!(field(&out, "equivalence:"), "PASS");
    let lb: usize = field(&out, "lower bound:").parse().unwrap();
    let opt: usize = field(&out, "opt:").parse().unwrap();
    let expected = if field(&out, "chase intersects:") == "true" { lb } else { lb + 1 };
    assert_eq!(opt, expected);

    let sys = load_instance(&ssc, LoadOptions::default()).unwrap();
    let names = fs::read_to_string(ssc.with_extension("names")).unwrap();
    assert_eq!(names.lines().count() as u32, sys.n() + sys.m());

    let o = run(&["reduce", "--input", isc.to_str().unwrap(), "--verify"]);
    assert_eq!(field(&stdout(&o), "opt:"), opt.to_string());
}

#[test]
fn recover_csv() {
    let o = run(&["--seed", "2", "recover", "--n", "32", "--m", "4", "--c1", "1", "--trials", "3"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "trial,success,queries_used,recovered");
    assert_eq!(lines.len(), 4);
}

#[test]
fn check_sample_and_oracle() {
    let dir = tempdir().unwrap();
    let p = dir.path().join("p.ssc");
    gen_planted(&p, "2");
    let o = run(&["--seed", "2", "check-sample", p.to_str().unwrap(), "--p", "0.1", "--eps", "0.5", "--q", "0.1"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(field(&stdout(&o), "failures:"), "0");

    let o = run(&["oracle", p.to_str().unwrap()]);
    assert_eq!(field(&stdout(&o), "opt:"), "4");

    let o = run(&["--format", "json", "oracle", p.to_str().unwrap()]);
    assert!(stdout(&o).contains("\"opt\": 4"));
}
