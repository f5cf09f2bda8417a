use std::path::Path;
use std::process::{Command, Output};

fn tsvsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsvsim"))
        .args(args)
        .env("TSVSIM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn classify_table_fixtures() {
    let out = tsvsim(&["classify", "--pattern", "000010000:111101111"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "class=39 coefficient=20.0");

    let out = tsvsim(&["classify", "--pattern", "000000000:111111111"]);
    assert_eq!(stdout(&out).trim(), "class=0 coefficient=0.0");
}

#[test]
fn classify_rejects_malformed_patterns() {
    for bad in [
        "00001000:111101111",
        "000010000-111101111",
        "00001000x:111101111",
    ] {
        let out = tsvsim(&["classify", "--pattern", bad]);
        assert_eq!(out.status.code(), Some(1), "{bad}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(tsvsim(&["frobnicate"]).status.code(), Some(1));
    let out = tsvsim(&["simulate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(
        tsvsim(&["simulate", "--gen", "uniform", "--st", "40"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn missing_trace_file_exits_one() {
    let out = tsvsim(&["simulate", "--trace", "/nonexistent/trace.txt"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn degenerate_threshold_matches_uncoded() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    let coded = dir.path().join("coded.json");
    let plain = dir.path().join("plain.json");
    let gen = [
        "gen", "--kind", "uniform", "--seed", "3", "--words", "2000", "--width", "40",
    ];
    assert!(tsvsim(&[&gen[..], &["--out", p(&trace)]].concat())
        .status
        .success());

    let run = |codec: &str, st: &str, out: &Path| {
        let o = tsvsim(&[
            "simulate",
            "--codec",
            codec,
            "--st",
            st,
            "--trace",
            p(&trace),
            "--json",
            p(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run("3dcam", "39", &coded);
    run("uncoded", "20", &plain);
    let (a, b) = (json(&coded), json(&plain));
    assert_eq!(a["mean_bus_delay"], b["mean_bus_delay"]);
    assert_eq!(a["max_bus_delay"], b["max_bus_delay"]);
    assert_eq!(a["class_histogram"], b["class_histogram"]);
    assert_eq!(a["retention_rate"], 0.0);
    assert_eq!(a["control_transitions"], 0);
}

#[test]
fn simulate_writes_stable_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let csv = dir.path().join("h.csv");
    let args = [
        "simulate", "--gen", "uniform", "--seed", "11", "--words", "3000", "--width", "64",
    ];
    let o = tsvsim(&[&args[..], &["--json", p(&first), "--csv", p(&csv)]].concat());
    assert!(o.status.success());
    assert!(stdout(&o).contains("normalized_delay="));
    assert!(tsvsim(&[&args[..], &["--json", p(&second)]].concat())
        .status
        .success());
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap()
    );

    let report = json(&first);
    assert_eq!(report["class_histogram"].as_array().unwrap().len(), 40);
    assert_eq!(report["tsv_overhead_percent"], 30.303);
    assert_eq!(report["config"]["rows"], 3);
    assert_eq!(report["config"]["cols"], 22);
    assert!(report["normalized_delay"].as_f64().unwrap() < 1.0);

    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "class,count_before,count_after");
    assert_eq!(lines.len(), 41);
    let totals = lines[1..].iter().fold((0u64, 0u64), |(b, a), line| {
        let f: Vec<u64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        (b + f[1], a + f[2])
    });
    assert_eq!(totals.0, totals.1);
}

#[test]
fn simulate_prints_json_without_output_path() {
    let o = tsvsim(&[
        "simulate", "--codec", "uncoded", "--gen", "counter", "--words", "50", "--width", "16",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["cycles"], 50);
    assert_eq!(v["retention_rate"], 0.0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# baseline run\ngen = uniform\nseed = 5\nwords = 500\nwidth = 32\ncodec = uncoded\n",
    )
    .unwrap();
    let out = dir.path().join("r.json");
    let o = tsvsim(&[
        "simulate",
        "--config",
        p(&cfg),
        "--codec",
        "3dcam",
        "--st",
        "10",
        "--json",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["config"]["codec"], "3dcam");
    assert_eq!(v["config"]["st"], 10);
    assert_eq!(v["cycles"], 500);
}

#[test]
fn bad_config_key_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "gen = uniform\ncolour = blue\n").unwrap();
    let o = tsvsim(&["simulate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains('2'));
}

#[test]
fn sweep_writes_forty_rows() {
    let o = tsvsim(&[
        "sweep", "--st", "0:39", "--gen", "uniform", "--seed", "7", "--words", "10000", "--width",
        "66",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "st,mean_bus_delay,max_bus_delay,normalized_delay,retention_rate"
    );
    assert_eq!(lines.len(), 41);
    assert!(lines[40].starts_with("39,"));
    assert!(lines[40].ends_with(",1.0000,0.0000"));
}

#[test]
fn gen_formats_round_trip_through_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let text = dir.path().join("t.txt");
    let bin = dir.path().join("t.bin");
    let base = [
        "gen", "--kind", "flip:0.3", "--seed", "9", "--words", "400", "--width", "20",
    ];
    assert!(tsvsim(&[&base[..], &["--out", p(&text)]].concat())
        .status
        .success());
    assert!(
        tsvsim(&[&base[..], &["--format", "binary", "--out", p(&bin)]].concat())
            .status
            .success()
    );
    assert_eq!(std::fs::metadata(&bin).unwrap().len(), 400 * 3);

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(tsvsim(&["simulate", "--trace", p(&text), "--json", p(&a)])
        .status
        .success());
    let o = tsvsim(&[
        "simulate",
        "--trace",
        p(&bin),
        "--trace-format",
        "binary",
        "--width",
        "20",
        "--json",
        p(&b),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (a, b) = (json(&a), json(&b));
    assert_eq!(a["mean_bus_delay"], b["mean_bus_delay"]);
    assert_eq!(a["class_histogram"], b["class_histogram"]);
}

#[test]
fn truncated_binary_trace_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("t.bin");
    std::fs::write(&bin, [0u8, 1, 2, 3, 4]).unwrap();
    let o = tsvsim(&[
        "simulate",
        "--trace",
        p(&bin),
        "--trace-format",
        "binary",
        "--width",
        "16",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn text_parse_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.txt");
    std::fs::write(&t, "width=8\n# comment\n0F\nG1\n").unwrap();
    let o = tsvsim(&["simulate", "--trace", p(&t)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains('4'));
}

#[test]
fn report_compares_two_runs() {
    let dir = tempfile::tempdir().unwrap();
    let before = dir.path().join("before.json");
    let after = dir.path().join("after.json");
    let csv = dir.path().join("cmp.csv");
    let args = [
        "simulate", "--gen", "uniform", "--seed", "2", "--words", "1000", "--width", "64",
    ];
    assert!(
        tsvsim(&[&args[..], &["--codec", "uncoded", "--json", p(&before)]].concat())
            .status
            .success()
    );
    assert!(tsvsim(&[&args[..], &["--json", p(&after)]].concat())
        .status
        .success());
    let o = tsvsim(&[
        "report",
        "--before",
        p(&before),
        "--after",
        p(&after),
        "--csv",
        p(&csv),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 41);
    let before = json(&before)["class_histogram"].clone();
    let row5: Vec<&str> = text.lines().nth(6).unwrap().split(',').collect();
    assert_eq!(row5[0], "5");
    assert_eq!(row5[1], before[5].to_string());
}

#[test]
fn oracle_summary() {
    let o = tsvsim(&["oracle", "--st", "20"]);
    let text = stdout(&o);
    assert!(text.contains("19683"), "{text}");
    assert_eq!(o.status.code(), Some(0));

    let o = tsvsim(&["oracle", "--verify-all", "--st", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
