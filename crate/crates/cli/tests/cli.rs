use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hamming-boot"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn exponent_table_output() {
    let o = bin(&["exponents", "--d", "3", "--theta", "2..4"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "d,theta,lower,upper,upper_source\n3,2,5/2,5/2,line-threshold\n3,3,2/1,2/1,line-threshold\n3,4,7/4,7/4,line-threshold\n"
    );
}

#[test]
fn two_dimensional_limit_at_one() {
    let o = bin(&["limits", "--mode", "2d", "--theta", "3", "--a", "1"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(line.starts_with("3,1.0000000000000000,0.63212055882"), "{line}");
}

#[test]
fn figure_series_has_four_columns() {
    let o = bin(&["exponents", "--d", "3", "--theta", "3..6", "--mode", "figure", "--alpha", "1.2..2:0.1"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,alpha,bound_type,value"));
    let mut kinds = std::collections::BTreeSet::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 4, "{line}");
        cells[0].parse::<usize>().unwrap();
        cells[3].parse::<f64>().unwrap();
        kinds.insert(cells[2].to_string());
    }
    assert_eq!(kinds.into_iter().collect::<Vec<_>>(), ["beta", "lower", "upper"]);
}

#[test]
fn oracle_reports_a_verdict() {
    let o = bin(&["oracle", "--d", "2", "--n", "3", "--theta", "2", "--p", "0.2", "--replicas", "20000"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("2,3,2,0.20000000000000001,spanned,0.400214528"));
    assert!(stderr(&o).contains("oracle: pass"));
}

#[test]
fn exit_codes() {
    // too large to enumerate
    assert_eq!(bin(&["oracle", "--d", "2", "--n", "5", "--theta", "2", "--p", "0.2"], &[]).status.code(), Some(2));
    // domain error
    assert_eq!(bin(&["limits", "--mode", "2d", "--theta", "2", "--a", "1"], &[]).status.code(), Some(1));
    assert_eq!(bin(&["simulate", "--d", "2", "--n", "5", "--theta", "2", "--p", "1.5"], &[]).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"], &[]).status.code(), Some(1));
    assert_eq!(bin(&["--help"], &[]).status.code(), Some(0));
    assert_eq!(bin(&["--version"], &[]).status.code(), Some(0));
    let o = bin(&["exponents", "--d", "3", "--theta", "2", "--output", "/nonexistent/dir/out.csv"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/dir/out.csv"));
}

#[test]
fn malformed_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "format = \"csv\"\n\n[task.limits]\nmode = \"2d\"\ntheta = 3\na = [1.0]\nbogus = 1\n").unwrap();
    let o = bin(&["run", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bogus") && err.contains("line 7"), "{err}");
}

#[test]
fn run_config_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("limits.json");
    std::fs::write(&path, r#"{"task": {"limits": {"mode": "3d", "a": [0.5, 1.0, 2.0]}}}"#).unwrap();
    let from_file = bin(&["run", path.to_str().unwrap()], &[]);
    let from_flags = bin(&["limits", "--mode", "3d", "--a", "0.5,1,2"], &[]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let args = [
        "simulate", "--d", "3", "--n", "20", "--theta", "3", "--a", "2", "--alpha", "2", "--events",
        "spanned,good,above_threshold,open_line", "--replicas", "300", "--seed", "11",
    ];
    let one = bin(&args, &[("HAMMING_BOOT_THREADS", "1")]);
    let four = bin(&args, &[("HAMMING_BOOT_THREADS", "4")]);
    let again = bin(&args, &[("HAMMING_BOOT_THREADS", "4")]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(four.stdout, again.stdout);
    let rows = hamming_boot::io::parse_result_csv(&stdout(&one)).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].alpha.as_ref().unwrap().to_string(), "2/1");
}

#[test]
fn sweep_writes_every_grid_point_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = bin(
        &[
            "sweep", "--d", "2", "--theta", "2", "--n", "10..30:10", "--a", "0.5,1", "--alpha", "3/2", "--replicas",
            "50", "--output", out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.ends_with('\n'));
    let rows = hamming_boot::io::parse_result_csv(&text).unwrap();
    let points: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.a.unwrap())).collect();
    assert_eq!(points, [(10, 0.5), (10, 1.0), (20, 0.5), (20, 1.0), (30, 0.5), (30, 1.0)]);
}

#[test]
fn json_output_mirrors_the_csv_columns() {
    let o = bin(&["simulate", "--d", "2", "--n", "8", "--theta", "2", "--p", "0.05", "--replicas", "40", "--format", "json"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let keys: Vec<&String> = v[0].as_object().unwrap().keys().collect();
    assert_eq!(keys, hamming_boot::io::RESULT_COLUMNS);
}

#[test]
fn detect_on_a_configuration_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    // an isolated pair on an axis-2 line
    std::fs::write(&path, r#"{"d": 3, "n": 9, "theta": 2, "open": [[1, 1, 1], [1, 2, 1]]}"#).unwrap();
    let o = bin(&["detect", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for expected in ["open,2\n", "line_empty_2,1\n", "open_line,true\n", "spanned,false\n"] {
        assert!(text.contains(expected), "missing {expected:?} in\n{text}");
    }
    let missing = bin(&["detect", Path::new("/nonexistent.json").to_str().unwrap()], &[]);
    assert_eq!(missing.status.code(), Some(2));
}
