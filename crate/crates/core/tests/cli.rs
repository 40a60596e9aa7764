use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use symind::bessel::zero_sequence;

fn symind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symind")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn harmonic_morse_index() {
    let o = symind(&["morse", "--problem", "harmonic", "--omega", "10", "--interval", "0", "1", "--bc", "dirichlet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&o);
    assert_eq!(r["command"], "morse");
    assert_eq!(r["verdict"]["kind"], "finite");
    assert_eq!(r["verdict"]["value"], 3);
    assert_eq!(r["crossings"].as_array().unwrap().len(), 3);
    assert_eq!(r["provenance"]["toolkit"], "symind");
}

#[test]
fn reports_are_deterministic() {
    let args = ["morse", "--problem", "harmonic", "--omega", "10", "--interval", "0", "1"];
    let a = symind(&args);
    let b = symind(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn threshold_coupling_exits_undetermined() {
    let o = symind(&["bessel", "--q", "-0.25"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(report(&o)["verdict"]["kind"], "undetermined");

    let o = symind(&["nbody", "--bbar", "[[-0.25]]"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn errors_exit_one_with_a_code() {
    let o = symind(&["catalog", "describe", "nosuch"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[sturm::UnknownCatalogEntry]"), "{}", stderr(&o));

    let o = symind(&["morse", "--problem", "harmonic", "--omega", "2", "--interval", "1", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error["), "{}", stderr(&o));
}

#[test]
fn catalog_lists_the_builtins() {
    let o = symind(&["catalog", "list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["free", "harmonic", "bessel", "mathieu", "nbody-asymptotic"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "missing {name}");
    }
    let o = symind(&["catalog", "describe", "bessel"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for formula in ["t^(1/2) cos(r ln t)", "t^(1/2) ln t", "(t^(1/2−r) + t^(1/2+r))/2", "[y1, y2] = −1"] {
        assert!(text.contains(formula), "missing {formula}");
    }
}

#[test]
fn bessel_window_csv_matches_the_zero_sequence() {
    let csv = scratch("bessel_window.csv");
    let q = -10.1196;
    let o = symind(&["bessel", "--q", "-10.1196", "--window", "0.018", "1", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(report(&o)["verdict"]["kind"], "infinite");

    let mut reader = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "multiplicity", "analytic"]);
    let mut points: Vec<f64> = reader.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    points.sort_by(|a, b| b.total_cmp(a));
    let zeros = zero_sequence(q, (0.018, 1.0)).unwrap();
    assert_eq!(points.len(), zeros.len());
    for (p, z) in points.iter().zip(&zeros) {
        assert!((p - z).abs() < 1e-6 * z, "{p} vs {z}");
    }
    for k in 1..=3 {
        let e = (-(k as f64)).exp();
        assert!(points.iter().any(|p| (p - e).abs() < 1e-3 * e), "e^-{k} missing");
    }
}

#[test]
fn run_config_matches_the_direct_invocation() {
    let report_path = scratch("run_report.json");
    let config = scratch("run.json");
    let body = serde_json::json!({
        "command": "morse",
        "problem": "harmonic",
        "bc": "dirichlet",
        "params": {"omega": 10, "interval": [0, 1]},
        "output": {"report": report_path},
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let o = symind(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "morse: 3");
    let from_file: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let direct = report(&symind(&["morse", "--problem", "harmonic", "--omega", "10", "--interval", "0", "1"]));
    assert_eq!(from_file["verdict"], direct["verdict"]);
    assert_eq!(from_file["crossings"], direct["crossings"]);
}

#[test]
fn run_config_rejects_unknown_fields() {
    let config = scratch("bad_run.json");
    std::fs::write(&config, r#"{"command": "morse", "problme": "harmonic"}"#).unwrap();
    let o = symind(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error["), "{}", stderr(&o));
}

#[test]
fn schema_is_valid_json() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/run_config.schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let props = schema["properties"].as_object().expect("schema lists properties");
    for key in ["command", "problem", "bc", "params", "numeric", "output"] {
        assert!(props.contains_key(key), "schema lacks {key}");
    }
}
