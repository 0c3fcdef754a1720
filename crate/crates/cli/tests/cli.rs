use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn headroom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_headroom"))
        .args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .env_remove("HEADROOM_THREADS")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TOY: &str = "benchmark,timestep,policy,ipc\nb,0,p,1\nb,0,q,1.2\nb,1,p,2\nb,1,q,1.5\n";

#[test]
fn usage_errors_exit_1() {
    let out = headroom(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(headroom(&["analyze", "--bogus"]).status.code(), Some(1));
    assert_eq!(headroom(&[]).status.code(), Some(1));
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(headroom(&["--help"]).status.code(), Some(0));
    assert_eq!(headroom(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_cell_exits_1_naming_cell() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    fs::write(
        &m,
        "benchmark,timestep,policy,ipc\nb,0,p,1\nb,0,q,1\nb,1,p,1\n",
    )
    .unwrap();
    let out = headroom(&[
        "analyze",
        "--matrix",
        p(&m),
        "--out",
        p(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(b, 1, q)"));
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = headroom(&[
        "analyze",
        "--matrix",
        "/nonexistent/m.csv",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    fs::write(&m, TOY).unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = headroom(&["analyze", "--matrix", p(&m), "--out", p(&blocker.join("r"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_and_report_toy_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    fs::write(&m, TOY).unwrap();
    let r = dir.path().join("r");
    assert!(headroom(&["analyze", "--matrix", p(&m), "--out", p(&r)])
        .status
        .success());
    let buckets = fs::read_to_string(r.join("buckets.csv")).unwrap();
    let total: usize = buckets
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("p,"))
        .map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 2);
    let summary = fs::read_to_string(r.join("summary.csv")).unwrap();
    assert!(summary.contains("q,2,1.35,"), "{summary}");

    let json = headroom(&["report", "--in", p(&r), "--format", "json"]);
    assert!(json.status.success());
    assert_eq!(json.stdout, fs::read(r.join("bundle.json")).unwrap());

    let csv = headroom(&[
        "report",
        "--in",
        p(&r),
        "--format",
        "csv",
        "--precision",
        "full",
    ]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.contains("# duels.csv"));

    let again = dir.path().join("again");
    assert!(headroom(&[
        "report",
        "--in",
        p(&r),
        "--format",
        "csv",
        "--out",
        p(&again)
    ])
    .status
    .success());
    for f in [
        "summary.csv",
        "buckets.csv",
        "duels.csv",
        "bundle.json",
        "metadata.json",
    ] {
        assert_eq!(
            fs::read(r.join(f)).unwrap(),
            fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn timestamp_comes_from_source_date_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    fs::write(&m, TOY).unwrap();
    let r = dir.path().join("r");
    let out = Command::new(env!("CARGO_BIN_EXE_headroom"))
        .args(["analyze", "--matrix", p(&m), "--out", p(&r)])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert!(out.status.success());
    let meta = fs::read_to_string(r.join("metadata.json")).unwrap();
    assert!(meta.contains("\"timestamp\": \"1700000000\""), "{meta}");
}

#[test]
fn gen_then_run_from_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("tiny.toml");
    fs::write(
        &spec,
        "seed = 3\n[[phases]]\nlength = 3000\nload_fraction = 0.5\npattern = { kind = \"stride\", step = 64, region_base = 0 }\n",
    )
    .unwrap();
    let traces = dir.path().join("traces");
    assert!(headroom(&["gen", "--spec", p(&spec), "--out", p(&traces)])
        .status
        .success());
    assert!(traces.join("tiny.trace").exists());

    let plan = dir.path().join("plan.toml");
    fs::write(
        &plan,
        "chunk_len = 1000\n[policies]\nl1d = [\"none\", \"next_line\"]\nl1i = [\"i_next_line\"]\nl2 = [\"lru\"]\n[[benchmarks]]\nid = \"tiny\"\ntrace = \"traces/tiny.trace\"\n",
    )
    .unwrap();
    let m = dir.path().join("m.csv");
    let out = headroom(&["run", "--plan", p(&plan), "--out", p(&m)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(fs::read_to_string(&m).unwrap().lines().count(), 1 + 3 * 2);

    let bias = headroom(&[
        "bias",
        "--trace",
        p(&traces.join("tiny.trace")),
        "--policy",
        "none/i_next_line/lru",
        "--lengths",
        "500,1000",
    ]);
    assert!(bias.status.success());
    assert_eq!(String::from_utf8(bias.stdout).unwrap().lines().count(), 3);
}

#[test]
fn bad_threads_env_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.toml");
    fs::write(
        &plan,
        "chunk_len = 100\n[policies]\nids = [\"none/i_next_line/lru\"]\n[[benchmarks]]\nid = \"s\"\n[benchmarks.synthetic]\nseed = 1\n[[benchmarks.synthetic.phases]]\nlength = 200\nload_fraction = 0.5\npattern = { kind = \"stride\", step = 64, region_base = 0 }\n",
    )
    .unwrap();
    let m = dir.path().join("m.csv");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_headroom"))
            .args(["run", "--plan", p(&plan), "--out", p(&m)])
            .env("HEADROOM_THREADS", threads)
            .output()
            .unwrap()
    };
    let out = run("many");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("HEADROOM_THREADS"));
    assert!(run("2").status.success());
}

#[test]
fn bad_policy_exits_1() {
    let out = headroom(&[
        "bias",
        "--trace",
        "x.trace",
        "--policy",
        "warp/drive",
        "--lengths",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
