use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edpcgrl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    p(&path).to_string()
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

const SMALL: &str =
    "seed = 5\nn_subjects = 6\nnoise_sigma = 0.5\n\n[experiment]\nrepetitions = 2\n";

#[test]
fn search_writes_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = run(&["simulate", "search", "--config", &cfg, "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    // 4 agents x 3 categories x 3 initial states
    assert_eq!(data_lines(&out.join("search_results.csv")).len(), 1 + 36);
    assert_eq!(data_lines(&out.join("population.csv")).len(), 1 + 6);
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 5"));
    assert!(manifest.contains("search_results.csv"));
}

#[test]
fn session_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = run(&[
            "simulate",
            "session",
            "--config",
            &cfg,
            "--out",
            p(dir),
            "--export-qtables",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in [
        "traces/trace_subject_000.csv",
        "traces/trace_subject_005.csv",
        "qtables/qtable_subject_003.csv",
        "manifest.toml",
    ] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn missing_seed_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_subjects = 3\n");
    let out = tmp.path().join("out");
    let o = run(&["simulate", "search", "--config", &cfg, "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seed = 1\nsubjects = 3\n");
    let o = run(&["simulate", "search", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_session_reports_every_subject() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let sim = tmp.path().join("sim");
    let o = run(&["simulate", "session", "--config", &cfg, "--out", p(&sim)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = tmp.path().join("report");
    let o = run(&[
        "analyze",
        "session",
        "--traces",
        p(&sim.join("traces")),
        "--out",
        p(&report),
        "--config",
        &cfg,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_lines(&report.join("session_report.csv"));
    assert_eq!(rows.len(), 1 + 6);
    assert!(rows[0].starts_with("subject,order,rl_low_mean"));
    let tests = data_lines(&report.join("session_tests.csv"));
    assert!(tests.len() > 1);
}

#[test]
fn truncated_trace_fails_analysis() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let sim = tmp.path().join("sim");
    assert!(
        run(&["simulate", "session", "--config", &cfg, "--out", p(&sim)])
            .status
            .success()
    );
    let trace = sim.join("traces/trace_subject_002.csv");
    let text = std::fs::read_to_string(&trace).unwrap();
    let keep: Vec<&str> = text.lines().take(10).collect();
    std::fs::write(&trace, keep.join("\n") + "\n").unwrap();
    let o = run(&[
        "analyze",
        "session",
        "--traces",
        p(&sim.join("traces")),
        "--out",
        p(&tmp.path().join("report")),
        "--config",
        &cfg,
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

fn ppg_csv(seconds: f64, fs: f64) -> String {
    let mut s = String::from("t_s,value\n");
    for i in 0..(seconds * fs) as usize {
        let t = i as f64 / fs;
        let phase = (t - 0.3).rem_euclid(1.0);
        let d = phase.min(1.0 - phase);
        writeln!(s, "{t},{}", 1.5 + (-(d / 0.07).powi(2) / 2.0).exp()).unwrap();
    }
    s
}

#[test]
fn ppg_recording_yields_seven_windows() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("ppg.csv");
    std::fs::write(&input, ppg_csv(420.0, 64.0)).unwrap();
    let out = tmp.path().join("hrv.csv");
    let o = run(&["process", "ppg", "--in", p(&input), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_lines(&out);
    assert_eq!(rows.len(), 1 + 7);
    let mean_nn: f64 = rows[1].split(',').nth(4).unwrap().parse().unwrap();
    assert!((mean_nn - 1000.0).abs() < 5.0);
}

#[test]
fn eda_features_per_segment() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = String::from("t_s,value\n");
    for i in 0..(180 * 10) {
        let t = i as f64 / 10.0;
        let v = 3.0 + 0.5 * (-((t - 90.0) / 2.0).powi(2) / 2.0).exp();
        writeln!(s, "{t},{v}").unwrap();
    }
    let input = tmp.path().join("eda.csv");
    std::fs::write(&input, s).unwrap();
    let out = tmp.path().join("eda_features.csv");
    let o = run(&[
        "process",
        "eda",
        "--in",
        p(&input),
        "--relax-window",
        "0:30",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_lines(&out);
    assert_eq!(rows.len(), 1 + 3);
    let peaks: Vec<usize> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(peaks, vec![0, 1, 0]);

    let o = run(&["process", "eda", "--in", p(&input)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_signal_files_are_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("empty.csv", "", "schema error"),
        ("header.csv", "time,value\n0,1\n1,1\n", "schema error"),
        (
            "jitter.csv",
            "t_s,value\n0,1\n1,1\n2.5,1\n3,1\n",
            "sampling error",
        ),
        ("bad.csv", "t_s,value\n0,1\n1,abc\n", "line 3"),
    ];
    for (name, body, needle) in cases {
        let path = tmp.path().join(name);
        std::fs::write(&path, body).unwrap();
        let o = run(&["process", "ppg", "--in", p(&path)]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
}

fn spiders_csv() -> String {
    let mut s = String::from("loc,aom,close,large,hair,color\n");
    let centers = [[0.0, 0.0], [10.0, 0.0], [5.0, 8.66]];
    for (c, center) in centers.iter().enumerate() {
        for i in 0..12 {
            let jitter = |k: usize| ((i * 7 + k * 3 + c) % 5) as f64 * 0.1 - 0.2;
            writeln!(
                s,
                "{},{},{},{},{},{}",
                center[0] + jitter(0),
                center[1] + jitter(1),
                jitter(2),
                jitter(3),
                jitter(4),
                jitter(5)
            )
            .unwrap();
        }
    }
    s
}

#[test]
fn cluster_picks_elbow_or_fixed_k() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("spiders.csv");
    std::fs::write(&input, spiders_csv()).unwrap();

    let auto = tmp.path().join("auto");
    let o = run(&["cluster", "spiders", "--in", p(&input), "--out", p(&auto)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_lines(&auto.join("centers.csv")).len(), 1 + 3);
    assert_eq!(data_lines(&auto.join("elbow.csv")).len(), 1 + 8);
    assert_eq!(data_lines(&auto.join("assignments.csv")).len(), 1 + 36);

    let fixed = tmp.path().join("fixed");
    let o = run(&[
        "cluster",
        "spiders",
        "--in",
        p(&input),
        "--k",
        "5",
        "--out",
        p(&fixed),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_lines(&fixed.join("centers.csv")).len(), 1 + 5);
    assert!(!fixed.join("elbow.csv").exists());
}
