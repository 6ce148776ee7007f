use std::process::{Command, Output};

fn cptorus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cptorus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn assert_usage_error(out: &Output) {
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(out);
    assert_eq!(err.trim_end().lines().count(), 1, "diagnostic: {err:?}");
    assert!(out.stdout.is_empty());
}

#[test]
fn quotient_halves_once() {
    let out = cptorus(&["quotient", "--point", "3,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "1.5,0 k=1\n");

    let out = cptorus(&["quotient", "--point", "-0.25,0.25"]);
    assert_eq!(stdout(&out), "-1,1 k=-2\n");
}

#[test]
fn quotient_json() {
    let out = cptorus(&["quotient", "--point", "3,0", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["u"], 1.5);
    assert_eq!(v["k"], 1);
}

#[test]
fn classify_record() {
    let out = cptorus(&["classify", "--ic", "1,1,1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let get = |name: &str| &row[headers.iter().position(|h| h == name).unwrap()];
    assert_eq!(get("impulse").parse::<f64>().unwrap(), 2.0);
    assert_eq!(get("analytic"), "complete");
    assert_eq!(get("numeric"), "complete");
    assert_eq!(get("agree"), "true");
}

#[test]
fn classify_json_carries_evidence() {
    let out = cptorus(&[
        "classify", "--ic", "1,0,1,0", "--t-end", "2", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["analytic"]["decision"], "complete");
    assert!(v["analytic"]["impulse"].is_null());
    let times = v["numeric"]["evidence"]["forward"]["exceptional_times"]
        .as_array()
        .unwrap();
    assert_eq!(times.len(), 1);
    assert!((times[0].as_f64().unwrap() - 1.0).abs() < 0.05);
}

fn parse_trace(text: &str) -> (Vec<Vec<f64>>, Vec<(String, String)>) {
    let (body, footer): (Vec<&str>, Vec<&str>) = text.lines().partition(|l| !l.starts_with('#'));
    let body = body.join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t_re", "t_im", "u_re", "u_im", "v_re", "v_im", "du_re", "du_im", "dv_re", "dv_im"]
    );
    let rows = rdr
        .records()
        .map(|r| {
            r.unwrap()
                .iter()
                .map(|f| f.parse::<f64>().unwrap())
                .collect()
        })
        .collect();
    let meta = footer
        .iter()
        .map(|l| {
            let (k, v) = l.trim_start_matches("# ").split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect();
    (rows, meta)
}

#[test]
fn trace_through_the_pole() {
    let out = cptorus(&["trace", "--ic", "1,0,1,0", "--t-end", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let (rows, meta) = parse_trace(&stdout(&out));
    let last = rows.last().unwrap();
    assert_eq!(last[0], 2.0);
    assert!((last[2] + 1.0).abs() <= 1e-8);
    let meta: std::collections::HashMap<_, _> = meta.into_iter().collect();
    assert_eq!(meta["A"], "0");
    assert_eq!(meta["P"], "none");
    assert_eq!(meta["status"], "reached_end");
    let t: f64 = meta["exceptional_times"].parse().unwrap();
    assert!((t - 1.0).abs() < 0.05);
    // The detour leaves the real axis.
    assert!(rows.iter().any(|r| r[1] != 0.0));
}

#[test]
fn trace_lower_detour_matches_upper() {
    let run = |side: &str| {
        let out = cptorus(&[
            "trace",
            "--ic",
            "1,0,1,0",
            "--t-end",
            "2",
            "--orientation",
            side,
        ]);
        let (rows, _) = parse_trace(&stdout(&out));
        rows.last().unwrap().clone()
    };
    let (up, down) = (run("upper"), run("lower"));
    for (a, b) in up.iter().zip(&down) {
        assert!((a - b).abs() <= 1e-7);
    }
}

#[test]
fn trace_json_mirrors_csv() {
    let csv_out = cptorus(&["trace", "--ic", "1,1,2,0", "--t-end", "1.2"]);
    let json_out = cptorus(&[
        "trace", "--ic", "1,1,2,0", "--t-end", "1.2", "--format", "json",
    ]);
    let (rows, _) = parse_trace(&stdout(&csv_out));
    let v: serde_json::Value = serde_json::from_slice(&json_out.stdout).unwrap();
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples.len(), rows.len());
    let cols = [
        "t_re", "t_im", "u_re", "u_im", "v_re", "v_im", "du_re", "du_im", "dv_re", "dv_im",
    ];
    for (s, r) in samples.iter().zip(&rows) {
        for (i, col) in cols.iter().enumerate() {
            assert_eq!(s[col].as_f64().unwrap().to_bits(), r[i].to_bits());
        }
    }
    assert_eq!(v["meta"]["a"], 0.0);
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        &["trace", "--ic", "0.5,-1,1.5,0.7", "--t-end", "3"][..],
        &[
            "classify",
            "--ic",
            "1,1,1,-1.5",
            "--t-end",
            "4",
            "--format",
            "json",
        ][..],
        &[
            "sweep",
            "--ic",
            "1,1,1,1",
            "--grid",
            "y=-1:1.5:6",
            "--t-end",
            "3",
        ][..],
    ] {
        let a = cptorus(args);
        let b = cptorus(args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let out = cptorus(&[
        "trace",
        "--ic",
        "1,0,1,0",
        "--t-end",
        "0.5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let direct = cptorus(&["trace", "--ic", "1,0,1,0", "--t-end", "0.5"]);
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn sweep_rows_in_grid_order() {
    let out = cptorus(&[
        "sweep", "--ic", "1,1,1,0", "--grid", "y=-1:1:3", "--grid", "x=1:2:2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let ys: Vec<(String, String)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[3].to_string(), r[4].to_string())
        })
        .collect();
    let pairs: Vec<(&str, &str)> = ys.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    assert_eq!(
        pairs,
        [
            ("1", "-1"),
            ("2", "-1"),
            ("1", "0"),
            ("2", "0"),
            ("1", "1"),
            ("2", "1")
        ]
    );
}

#[test]
fn sweep_validate_passes_when_rows_agree() {
    let out = cptorus(&[
        "sweep",
        "--ic",
        "1,0,1,1",
        "--grid",
        "x=0.8:1.2:3",
        "--t-end",
        "3",
        "--validate",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("disagree=0"));
}

#[test]
fn sweep_validate_flags_disagreement() {
    // Negative impulse: the impulse criterion says incomplete, the
    // continuation reaches the horizon on both sides.
    let out = cptorus(&["sweep", "--ic", "1,1,1,-1.5", "--t-end", "5", "--validate"]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("disagree=1"), "{text}");
    assert!(text.contains("# disagreements=0"));
}

#[test]
fn null_form_lists_poles() {
    let out = cptorus(&["null-form", "--ic", "1,0,1,0", "--t-end", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().nth(1), Some("poles: 1"));

    let out = cptorus(&[
        "null-form",
        "--ic",
        "1,1,2,0",
        "--format",
        "json",
        "--t-end",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["descriptor"]["kind"], "tangent");
    let poles = v["poles"].as_array().unwrap();
    assert_eq!(poles.len(), 1);
    assert!((poles[0].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_one() {
    assert_usage_error(&cptorus(&["trace", "--ic", "1,2,3"]));
    assert_usage_error(&cptorus(&["trace", "--ic", "1,x,0,1"]));
    assert_usage_error(&cptorus(&["trace", "--ic", "0,0,1,1"]));
    assert_usage_error(&cptorus(&["classify", "--ic", "1,1,0,0"]));
    assert_usage_error(&cptorus(&["sweep", "--grid", "alpha=1:2"]));
    assert_usage_error(&cptorus(&["sweep", "--grid", "gamma=1:2:3"]));
    assert_usage_error(&cptorus(&["sweep", "--grid", "y=1:2:3"]));
    assert_usage_error(&cptorus(&["sweep", "--ic", "1,1,1,1", "--grid", "y=1:2:0"]));
    assert_usage_error(&cptorus(&["null-form", "--ic", "1,1,1,1"]));
    assert_usage_error(&cptorus(&[
        "trace",
        "--ic",
        "1,0,1,0",
        "--detour-radius",
        "1.5",
    ]));
    assert_usage_error(&cptorus(&["trace", "--ic", "1,0,1,0", "--order", "0"]));
    assert_usage_error(&cptorus(&["quotient", "--point", "0,0"]));
    assert_usage_error(&cptorus(&["frobnicate"]));
    assert_usage_error(&cptorus(&["trace"]));
}

#[test]
fn help_exits_zero() {
    let out = cptorus(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("sweep"));
}
