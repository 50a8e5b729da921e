use biruin_cli::{run, Outcome, USAGE_EXIT};
use serde_json::Value;

fn call(args: &[&str]) -> Outcome {
    let mut argv = vec!["biruin"];
    argv.extend_from_slice(args);
    run(argv)
}

fn json(args: &[&str]) -> Value {
    let o = call(args);
    assert_eq!(o.code, 0, "{args:?}: {}", o.stderr);
    serde_json::from_str(&o.stdout).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn brm1_reference_value() {
    let v = json(&["brm1", "--c", "1", "--u", "1", "--T", "1"]);
    assert!((v["value"].as_f64().unwrap() - 0.0904178).abs() < 5e-8);
    assert_eq!(v["command"], "brm1");
    assert!(v["seed"].is_null());
    let inf = json(&["brm1", "--c", "1", "--u", "1", "--T", "inf"]);
    assert!((inf["value"].as_f64().unwrap() - (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn brm2_examples() {
    let v = json(&["brm2", "bounds", "--u", "0", "--v", "0"]);
    let b = v["bounds"].as_array().unwrap();
    assert!((b[0].as_f64().unwrap() - 0.25).abs() < 1e-15);
    assert!((b[1].as_f64().unwrap() - 1.0).abs() < 1e-15);
    let v = json(&["brm2", "ruintime-cdf", "--x", "0"]);
    assert_eq!(v["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn records_keep_key_order_and_full_precision() {
    let o = call(&["brm1", "--c", "0.3", "--u", "0.7"]);
    let keys = [
        "command",
        "params",
        "value",
        "stderr",
        "ci",
        "bounds",
        "method",
        "seed",
        "tool_version",
        "elapsed_ms",
    ];
    let pos: Vec<usize> = keys
        .iter()
        .map(|k| o.stdout.find(&format!("\"{k}\"")).unwrap())
        .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    let again = json(&["brm1", "--c", "0.3", "--u", "0.7"]);
    assert_eq!(v["value"].as_f64(), again["value"].as_f64());
}

#[test]
fn json_and_csv_carry_the_same_value() {
    let args = ["mc", "psi1d", "--c", "1", "--u", "1", "--paths", "2000", "--seed", "4"];
    let j = json(&args);
    let mut with_csv = args.to_vec();
    with_csv.extend(["--format", "csv"]);
    let o = call(&with_csv);
    assert_eq!(o.code, 0);
    let (h, rows) = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][column(&h, "value")].parse().unwrap();
    assert_eq!(Some(v), j["value"].as_f64());
    assert_eq!(rows[0][column(&h, "seed")], "4");
}

#[test]
fn echoed_parameters_replay_the_estimate() {
    let first = json(&[
        "mc", "psi2d", "--u", "1", "--rho", "0.3", "--paths", "3000", "--seed", "9",
    ]);
    let mut argv: Vec<String> = first["command"]
        .as_str()
        .unwrap()
        .split(' ')
        .map(String::from)
        .collect();
    for (k, v) in first["params"].as_object().unwrap() {
        argv.push(format!("--{k}"));
        argv.push(match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        });
    }
    argv.extend(["--seed".into(), first["seed"].to_string()]);
    let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
    let again = json(&refs);
    assert_eq!(first["value"].as_f64(), again["value"].as_f64());
    assert_eq!(first["stderr"].as_f64(), again["stderr"].as_f64());
}

#[test]
fn single_point_sweep_equals_a_single_run() {
    let single = json(&["brm2", "crude", "--u", "2", "--rho", "0.1"]);
    let o = call(&["sweep", "--grid", "u=2", "brm2", "crude", "--rho", "0.1"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (h, rows) = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][column(&h, "value")].parse().unwrap();
    assert_eq!(Some(v), single["value"].as_f64());
    assert_eq!(rows[0][column(&h, "error")], "");
}

#[test]
fn asymptotic_sweep_in_capital_is_decreasing() {
    let o = call(&[
        "sweep",
        "--grid",
        "u=2,3,4,6,8",
        "brm2",
        "asym",
        "--a",
        "0.5",
        "--rho",
        "0.5",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (h, rows) = csv_rows(&o.stdout);
    let vals: Vec<f64> = rows.iter().map(|r| r[column(&h, "value")].parse().unwrap()).collect();
    assert_eq!(vals.len(), 5);
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
}

#[test]
fn constant_sweep_in_horizon_is_nondecreasing() {
    let o = call(&[
        "sweep",
        "--grid",
        "T=0.5,1,2",
        "constant",
        "--paths",
        "2000",
        "--steps",
        "64",
        "--seed",
        "2",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (h, rows) = csv_rows(&o.stdout);
    let vals: Vec<f64> = rows.iter().map(|r| r[column(&h, "value")].parse().unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{vals:?}");
}

#[test]
fn sweep_grid_order_and_error_rows() {
    let o = call(&["sweep", "--grid", "c=1,2", "--grid", "u=0.5,-1", "brm1"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (h, rows) = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 4);
    let (ci, ui, ei) = (column(&h, "c"), column(&h, "u"), column(&h, "error"));
    let cs: Vec<f64> = rows.iter().map(|r| r[ci].parse().unwrap()).collect();
    let us: Vec<f64> = rows.iter().map(|r| r[ui].parse().unwrap()).collect();
    assert_eq!(cs, [1.0, 1.0, 2.0, 2.0]);
    assert_eq!(us, [0.5, -1.0, 0.5, -1.0]);
    assert!(rows[0][ei].is_empty());
    assert!(!rows[1][ei].is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(call(&["brm1", "--c", "1", "--u", "-1"]).code, 1);
    assert_eq!(call(&["brm2", "asym", "--a", "1", "--rho", "0", "--u", "3"]).code, 1);
    let usage = call(&["brm1", "--bogus"]);
    assert_eq!(usage.code, USAGE_EXIT);
    assert!(usage.stderr.contains("Usage"));
    assert_eq!(call(&[]).code, USAGE_EXIT);
    assert_eq!(call(&["--help"]).code, 0);
    let degenerate = call(&["mc", "psi2d", "--u", "1", "--is", "40,40", "--paths", "2000"]);
    assert_eq!(degenerate.code, 2, "{}", degenerate.stderr);
}

#[test]
fn output_file_receives_the_record() {
    let dir = std::env::temp_dir().join(format!("biruin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.json");
    let p = path.to_str().unwrap();
    let o = call(&["brm1", "--c", "1", "--u", "1", "--out", p]);
    assert_eq!(o.code, 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), o.stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn levy_quadrature_matches_simulation() {
    let exact = json(&[
        "levy", "--model", "gamma", "--c1", "1.5", "--c2", "0.5", "--x", "0.5", "--y", "1",
    ]);
    let mc = json(&[
        "mc", "levy", "--model", "gamma", "--c1", "1.5", "--c2", "0.5", "--x", "0.5", "--y", "1", "--paths", "100000",
        "--steps", "1024", "--seed", "3",
    ]);
    let (e, m, s) = (
        exact["value"].as_f64().unwrap(),
        mc["value"].as_f64().unwrap(),
        mc["stderr"].as_f64().unwrap(),
    );
    assert!((e - m).abs() < 3.5 * s, "{e} vs {m} +- {s}");
}
