//! End-to-end tests of the `welander` binary: report content, CSV shape,
//! exit codes, config handling, and byte-level determinism.

use std::process::{Command, Output};

use serde_json::Value;

/// Reference parameter flags used throughout (cycle regime).
const REFERENCE: &[&str] = &[
    "--alpha",
    "0.8",
    "--beta",
    "0.5",
    "--epsilon",
    "-0.01",
    "--k0",
    "0",
    "--k1",
    "1",
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_welander"))
        .args(args)
        .env_remove("WELANDER_LOG")
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_welander"))
        .args(args)
        .env(key, val)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_error(out: &Output, code: i32) -> Value {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON error object");
    assert!(v["error"]["message"].is_string());
    v["error"].clone()
}

fn csv_lines(out: &Output) -> Vec<String> {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.ends_with('\n'));
    text.lines().map(str::to_string).collect()
}

fn num(v: &Value) -> f64 {
    v.as_f64()
        .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
        .expect("numeric field")
}

#[test]
fn analyze_reference_report() {
    let out = run(&[&["analyze"], REFERENCE].concat());
    let v = stdout_json(&out);
    assert_eq!(v["regime"], "unique_stable_cycle");
    assert!((num(&v["thresholds"]["alpha_l"]) - 1.01).abs() < 1e-14);
    assert!((num(&v["thresholds"]["alpha_r"]) - (2.0 / 3.0 + 0.02)).abs() < 1e-14);
    assert!((num(&v["thresholds"]["eps_star"]) + 1.0 / 3.0).abs() < 1e-14);
    for side in ["left", "right"] {
        assert_eq!(v["canonical"]["equilibria"][side]["kind"], "virtual");
    }
    let folds = v["canonical"]["folds"].as_array().unwrap();
    assert_eq!(folds.len(), 2);
    for f in folds {
        assert_eq!(f["visibility"], "invisible");
    }
    // one escaping interval spanning [0, 0.01]
    let intervals = v["canonical"]["sigma_partition"]["intervals"]
        .as_array()
        .unwrap();
    let escaping: Vec<&Value> = intervals
        .iter()
        .filter(|iv| iv["class"] == "escaping")
        .collect();
    assert_eq!(escaping.len(), 1);
    assert!(num(&escaping[0]["lo"]).abs() < 1e-14);
    assert!((num(&escaping[0]["hi"]) - 0.01).abs() < 1e-14);
}

#[test]
fn analyze_degenerate_beta() {
    let out = run(&[
        "analyze",
        "--alpha",
        "0.8",
        "--beta",
        "1",
        "--epsilon",
        "-0.01",
        "--k0",
        "0",
        "--k1",
        "1",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["regime"], "degenerate_no_cycle");
    assert!(v["canonical"].is_null());
    // eigenvalues are still reported from the original frame
    assert!(v["zones"]["left"]["eigenvalues"].is_array());
}

#[test]
fn analyze_real_equilibrium_regime() {
    let out = run(&[
        "analyze",
        "--alpha",
        "2",
        "--beta",
        "0.5",
        "--epsilon",
        "-0.01",
        "--k0",
        "0",
        "--k1",
        "1",
    ]);
    assert_eq!(stdout_json(&out)["regime"], "real_equilibrium_no_cycle");
}

#[test]
fn analyze_rejects_invalid_parameters() {
    let out = run(&[
        "analyze",
        "--alpha",
        "0.8",
        "--beta",
        "-1",
        "--epsilon",
        "0",
        "--k0",
        "0",
        "--k1",
        "1",
    ]);
    let err = stderr_error(&out, 2);
    assert_eq!(err["kind"], "invalid_input");
    assert!(err["message"].as_str().unwrap().contains("beta"));
}

#[test]
fn cycle_reference_report() {
    let out = run(&[&["cycle"], REFERENCE].concat());
    let v = stdout_json(&out);
    assert_eq!(v["status"], "cycle");
    let c = &v["cycle"];
    let mult = num(&c["multiplier"]);
    assert!(mult > 0.0 && mult < 1.0);
    assert!(num(&c["area_residual"]).abs() < 1e-8);
    assert!(num(&c["y_upper"]) > 0.0 && num(&c["y_lower"]) < 0.0);
    assert!((num(&c["period"]) - num(&c["t_left"]) - num(&c["t_right"])).abs() < 1e-14);
}

#[test]
fn cycle_reports_no_cycle_at_zero_epsilon() {
    let out = run(&[
        "cycle",
        "--alpha",
        "0.8",
        "--beta",
        "0.5",
        "--epsilon",
        "0",
        "--k0",
        "0",
        "--k1",
        "1",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["status"], "no_cycle");
    assert_eq!(v["reason"], "epsilon_nonnegative");
    assert!(v["cycle"].is_null());
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let args = [&["cycle"], REFERENCE].concat();
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let args = [
        &["trajectory"],
        REFERENCE,
        &["--x0", "0", "--y0", "0.2", "--horizon", "5"],
    ]
    .concat();
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn cycle_polyline_closes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("poly.csv");
    let out = run(&[
        &["cycle"],
        REFERENCE,
        &["--polyline", path.to_str().unwrap()],
    ]
    .concat());
    let v = stdout_json(&out);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y");
    assert!(lines.len() > 50);
    let first: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    let last: Vec<f64> = lines
        .last()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    let y_upper = num(&v["cycle"]["y_upper"]);
    assert_eq!(first[0], 0.0);
    assert!((first[2] - y_upper).abs() < 1e-14 && first[1].abs() < 1e-14);
    assert!((last[0] - num(&v["cycle"]["period"])).abs() < 1e-14);
    assert!((last[2] - y_upper).abs() < 1e-14);
}

#[test]
fn scan_tabulates_the_dichotomy() {
    let out = run(&[
        &["scan"],
        REFERENCE,
        &[
            "--eps-from",
            "-0.05",
            "--eps-to",
            "0.05",
            "--eps-step",
            "0.01",
        ],
    ]
    .concat());
    let lines = csv_lines(&out);
    assert_eq!(
        lines[0],
        "epsilon,has_cycle,y_upper,y_lower,period,multiplier"
    );
    assert_eq!(lines.len(), 12); // header + 11 grid points
    let mut amplitudes = Vec::new();
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        let eps: f64 = fields[0].parse().unwrap();
        if eps < 0.0 {
            assert_eq!(fields[1], "true");
            amplitudes.push(fields[2].parse::<f64>().unwrap());
        } else {
            assert_eq!(fields[1], "false");
            assert_eq!(&fields[2..], ["", "", "", ""]);
        }
    }
    // cycle amplitude shrinks as epsilon rises toward zero
    assert_eq!(amplitudes.len(), 5);
    for w in amplitudes.windows(2) {
        assert!(w[1] < w[0], "amplitudes not decreasing: {amplitudes:?}");
    }
}

#[test]
fn scan_single_point_grid() {
    let out = run(&[
        &["scan"],
        REFERENCE,
        &[
            "--eps-from",
            "-0.01",
            "--eps-to",
            "-0.01",
            "--eps-step",
            "0.01",
        ],
    ]
    .concat());
    assert_eq!(csv_lines(&out).len(), 2);
}

#[test]
fn scan_rejects_malformed_grids() {
    for bad in [
        vec![
            "--eps-from",
            "-0.01",
            "--eps-to",
            "0.01",
            "--eps-step",
            "-0.01",
        ],
        vec![
            "--eps-from",
            "0.02",
            "--eps-to",
            "-0.02",
            "--eps-step",
            "0.01",
        ],
        vec!["--eps-from", "-0.01", "--eps-step", "0.01"],
    ] {
        let out = run(&[&["scan"], REFERENCE, &bad].concat());
        assert_eq!(out.status.code(), Some(2), "grid {bad:?} accepted");
    }
}

#[test]
fn trajectory_emits_samples_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = run(&[
        &["trajectory"],
        REFERENCE,
        &[
            "--x0",
            "0",
            "--y0",
            "0.2",
            "--horizon",
            "10",
            "--dt-sample",
            "0.1",
            "--out",
            path.to_str().unwrap(),
        ],
    ]
    .concat());
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y,segment_kind,segment_index");
    // zone tags match the sign of x on every sample
    let mut kinds = Vec::new();
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        let x: f64 = fields[1].parse().unwrap();
        match fields[3] {
            "left" => assert!(x <= 0.0, "left sample with x = {x}"),
            "right" => assert!(x >= 0.0, "right sample with x = {x}"),
            other => panic!("unexpected kind {other}"),
        }
        if kinds.last().map(String::as_str) != Some(fields[3]) {
            kinds.push(fields[3].to_string());
        }
    }
    // after the transient the kinds alternate left/right around the cycle
    assert!(kinds.len() >= 4, "kinds: {kinds:?}");
    for w in kinds.windows(2) {
        assert_ne!(w[0], w[1]);
    }
    // the companion events file sits next to the CSV
    let events: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("traj.events.json")).unwrap(),
    )
    .unwrap();
    let kinds: Vec<&str> = events["events"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["kind"].as_str().unwrap())
        .collect();
    assert!(kinds.contains(&"cross_sigma"));
    assert_eq!(*kinds.last().unwrap(), "time_limit");
}

#[test]
fn trajectory_with_positive_epsilon_slides() {
    let out = run(&[
        "trajectory",
        "--alpha",
        "0.8",
        "--beta",
        "0.5",
        "--epsilon",
        "0.01",
        "--k0",
        "0",
        "--k1",
        "1",
        "--x0",
        "0.3",
        "--y0",
        "0.5",
        "--horizon",
        "10",
    ]);
    let lines = csv_lines(&out);
    assert!(
        lines.iter().any(|l| l.contains(",sliding,")),
        "no sliding segment in output"
    );
}

#[test]
fn trajectory_rejects_escaping_start() {
    // (0, 0.72) sits inside the escaping segment of the original frame
    let out = run(&[&["trajectory"], REFERENCE, &["--x0", "0", "--y0", "0.72"]].concat());
    let err = stderr_error(&out, 2);
    assert_eq!(err["kind"], "escaping_start");
    assert!(err["message"]
        .as_str()
        .unwrap()
        .contains("escaping segment"));
}

#[test]
fn trajectory_smooth_model_runs() {
    let out = run(&[
        &["trajectory"],
        REFERENCE,
        &[
            "--x0",
            "0.05",
            "--y0",
            "0.4",
            "--horizon",
            "5",
            "--dt-sample",
            "0.1",
            "--smooth",
            "0.002",
        ],
    ]
    .concat());
    let lines = csv_lines(&out);
    assert!(lines.len() > 20);
    // smoothing must be positive
    let out = run(&[
        &["trajectory"],
        REFERENCE,
        &["--x0", "0", "--y0", "0.2", "--smooth", "-1"],
    ]
    .concat());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn portrait_concatenates_starts() {
    let out = run(&[
        &["portrait"],
        REFERENCE,
        &[
            "--x0",
            "-0.1",
            "0.1",
            "--y0",
            "0.2",
            "--horizon",
            "2",
            "--dt-sample",
            "0.5",
        ],
    ]
    .concat());
    let lines = csv_lines(&out);
    assert_eq!(lines[0], "start_id,t,x,y,segment_kind,segment_index");
    let ids: std::collections::BTreeSet<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ids.into_iter().collect::<Vec<_>>(), ["0", "1"]);
}

#[test]
fn config_file_supplies_parameters_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"alpha": 0.8, "beta": 0.5, "epsilon": 0.01, "k0": 0.0, "k1": 1.0}"#,
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let v = stdout_json(&run(&["cycle", "--config", cfg]));
    assert_eq!(v["status"], "no_cycle");
    // the epsilon flag overrides the file and lands in the cycle regime
    let v = stdout_json(&run(&["cycle", "--config", cfg, "--epsilon", "-0.01"]));
    assert_eq!(v["status"], "cycle");
    // unknown config keys are rejected
    std::fs::write(&path, r#"{"alpha": 0.8, "betta": 0.5}"#).unwrap();
    assert_eq!(run(&["cycle", "--config", cfg]).status.code(), Some(2));
}

#[test]
fn format_must_match_the_command() {
    let out = run(&[&["analyze"], REFERENCE, &["--format", "csv"]].concat());
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        &["scan"],
        REFERENCE,
        &[
            "--eps-from",
            "-0.01",
            "--eps-to",
            "0.0",
            "--eps-step",
            "0.01",
            "--format",
            "json",
        ],
    ]
    .concat());
    assert_eq!(out.status.code(), Some(2));
    // the native format is accepted explicitly
    let out = run(&[&["analyze"], REFERENCE, &["--format", "json"]].concat());
    assert!(out.status.success());
}

#[test]
fn log_env_is_validated() {
    let args = [&["analyze"], REFERENCE].concat();
    assert!(run_env(&args, "WELANDER_LOG", "debug").status.success());
    assert!(run_env(&args, "WELANDER_LOG", "quiet").status.success());
    assert_eq!(
        run_env(&args, "WELANDER_LOG", "verbose").status.code(),
        Some(2)
    );
}

#[test]
fn numbers_carry_17_significant_digits() {
    let out = run(&[
        &["scan"],
        REFERENCE,
        &[
            "--eps-from",
            "-0.01",
            "--eps-to",
            "-0.01",
            "--eps-step",
            "0.01",
        ],
    ]
    .concat());
    let lines = csv_lines(&out);
    for field in lines[1].split(',') {
        if field.is_empty() || field == "true" || field == "false" {
            continue;
        }
        let (mantissa, exponent) = field.split_once('e').expect("scientific notation");
        let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
        assert_eq!(digits.len(), 17, "field {field}");
        assert!(
            exponent.starts_with('+') || exponent.starts_with('-'),
            "field {field}"
        );
    }
}
