use std::collections::HashMap;
use std::io::Write;
use std::process::{Command, Output};

fn qdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdc")).args(args).env_remove("QDC_THREADS").output().expect("spawn qdc")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "qdc failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(stdout(&qdc(args)).trim()).unwrap()
}

fn csv_rows(text: &str) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

#[test]
fn noiseless_ghz_is_three_bits() {
    let v = json(&["capacity", "--state", "gghz:n=3,x=0.70711", "--senders", "2", "--receivers", "1", "--channel", "dephasing:alpha=0,p=0"]);
    assert!((v["capacity_bits"].as_f64().unwrap() - 3.0).abs() < 1e-8);
    assert_eq!(v["dense_codeable"], true);
    assert_eq!(v["tool_version"], concat!("qdc ", env!("CARGO_PKG_VERSION")));
}

#[test]
fn bell_just_past_threshold() {
    let v = json(&["capacity", "--state", "bell", "--senders", "1", "--receivers", "1", "--channel", "depolarizing:alpha=0,p=0.19"]);
    assert_eq!(v["dense_codeable"], false);
}

#[test]
fn two_receiver_bound_ignores_alpha() {
    let v = json(&[
        "capacity", "--state", "gghz:n=4,x=0.70711", "--senders", "2", "--receivers", "2", "--split", "1", "--channel",
        "dephasing:alpha=0.9,p=0.4", "--no-optimize",
    ]);
    assert!((v["capacity_bits"].as_f64().unwrap() - 3.0).abs() < 1e-8);
    assert_eq!(v["split"], 1);
}

#[test]
fn csv_header_order() {
    let out = stdout(&qdc(&["capacity", "--state", "bell", "--channel", "dephasing:p=0.1", "--no-optimize", "--format", "csv"]));
    let header = out.lines().next().unwrap();
    let fixed = "state,state_params,n_senders,receivers,split,channel,alpha,p,epsilon,draw_policy,optimized,capacity_bits,\
                 classical_bound,dense_codeable,std_error,realizations,master_seed,opt_seed,tool_version";
    assert!(header.starts_with(fixed), "{header}");
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn csv_round_trip_reproduces_capacity() {
    let out = stdout(&qdc(&[
        "sweep", "--state", "gghz:n=3,x=0.6", "--channel", "dephasing:alpha=0.7", "--axis", "p", "--from", "0", "--to", "0.5",
        "--steps", "7", "--no-optimize",
    ]));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 7);
    for row in rows {
        let state = format!("{}:{}", row["state"], row["state_params"]);
        let channel = format!("{}:alpha={},p={},eps={},draw={}", row["channel"], row["alpha"], row["p"], row["epsilon"], row["draw_policy"]);
        let again = stdout(&qdc(&[
            "capacity", "--state", &state, "--senders", &row["n_senders"], "--receivers", &row["receivers"], "--channel", &channel,
            "--no-optimize", "--format", "csv",
        ]));
        let again = csv_rows(&again);
        assert_eq!(again[0]["capacity_bits"], row["capacity_bits"]);
        let a: f64 = again[0]["capacity_bits"].parse().unwrap();
        let b: f64 = row["capacity_bits"].parse().unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let quench = [
        "quench", "--state", "gghz:n=3,x=0.70711", "--senders", "2", "--channel", "depolarizing:alpha=0.3,p=0.05,eps=0.5",
        "--realizations", "600", "--seed", "7", "--format", "csv",
    ];
    let sweep = [
        "sweep", "--state", "w:n=3", "--channel", "dephasing:alpha=0.5", "--from", "0", "--to", "0.5", "--steps", "9", "--opt-evals",
        "300",
    ];
    for args in [&quench[..], &sweep[..]] {
        let one = stdout(&qdc(&[&["--threads", "1"], args].concat()));
        for k in ["2", "3", "8"] {
            assert_eq!(stdout(&qdc(&[&["--threads", k], args].concat())), one, "threads={k}");
        }
    }
}

#[test]
fn quench_is_seed_reproducible() {
    let args = |seed: &'static str| {
        vec![
            "quench", "--state", "gghz:n=3,x=0.70711", "--senders", "2", "--channel", "depolarizing:alpha=0.3,p=0.05,eps=0.5",
            "--realizations", "400", "--seed", seed,
        ]
    };
    let a = json(&args("7"));
    assert_eq!(a, json(&args("7")));
    assert_ne!(a["capacity_bits"], json(&args("8"))["capacity_bits"]);
    assert_eq!(a["realizations"], 400);
    assert_eq!(a["master_seed"], 7);
    assert!(a["std_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_two() {
    let cases: [&[&str]; 6] = [
        &["capacity", "--state", "nonsense", "--channel", "dephasing"],
        &["capacity", "--state", "bell", "--channel", "dephasing:p=0.9"],
        &["capacity", "--state", "bell", "--channel", "dephasing", "--receivers", "3"],
        &["capacity", "--state", "gghz:n=3,x=0.7", "--senders", "3", "--channel", "dephasing"],
        &["quench", "--state", "bell", "--channel", "dephasing:p=0.1"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(qdc(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn validate_passes() {
    let o = qdc(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 failed"));
    let j = stdout(&qdc(&["validate", "--format", "json"]));
    for line in j.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["pass"], true);
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# defaults\nstate = bell\nchannel = depolarizing:alpha=0,p=0.1\nno_optimize = true\nrealizations = 10").unwrap();
    let path = f.path().to_str().unwrap();
    let from_file = json(&["capacity", "--config", path]);
    assert_eq!(from_file["p"], 0.1);
    assert_eq!(from_file["optimized"], false);
    let overridden = json(&["capacity", "--config", path, "--channel", "depolarizing:alpha=0,p=0.3"]);
    assert_eq!(overridden["p"], 0.3);
    assert_eq!(overridden["dense_codeable"], false);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.csv");
    let o = qdc(&["capacity", "--state", "bell", "--channel", "dephasing:p=0.2", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let rows = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(rows[0]["state"], "bell");
}

#[test]
fn critical_reports_strengths() {
    let v = json(&["critical", "--state", "gghz:n=3,x=0.70711", "--senders", "2", "--channel", "dephasing:alpha=0.5", "--no-optimize"]);
    let pc = v["p_c"].as_f64().unwrap();
    let pa = v["p_a"].as_f64().unwrap();
    assert!(pc > 0.3 && pc < pa);
    assert!(v["bracket_resolution"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn table_two_has_thirty_rows() {
    let out = stdout(&qdc(&["table", "--which", "II", "--no-optimize"]));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 30);
    for col in ["reference", "computed", "abs_diff", "tolerance", "pass"] {
        assert!(rows[0].contains_key(col), "{col}");
    }
    assert!(rows.iter().all(|r| r["tolerance"] == "0.01"));
}
