use assert_cmd::Command;
use serde_json::Value;
use tcue_cli::{distance, exact_cdf, sweep_csv, SWEEP_COLUMNS};
use tcue_core::distances::Metric;
use tcue_core::exact_law::Law;
use tcue_core::scaling::{derive_constants, EnsembleParams};

fn tcue(args: &[&str]) -> (i32, String) {
    let out = Command::cargo_bin("tcue").unwrap().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.push("--json");
    let (code, text) = tcue(&full);
    assert_eq!(code, 0, "{args:?}");
    serde_json::from_str(&text).unwrap()
}

#[test]
fn exact_cdf_matches_library() {
    let cli = json(&["exact-cdf", "--n", "500", "--p", "250", "--x", "0"]);
    let lib = exact_cdf(EnsembleParams::new(500, 250).unwrap(), Law::W, 0.0).unwrap();
    assert_eq!(cli, serde_json::to_value(&lib).unwrap());
}

#[test]
fn exact_cdf_support_edges() {
    let cuts = derive_constants(&EnsembleParams::new(100, 50).unwrap())
        .unwrap()
        .cut_points();
    let at = |x: f64| {
        let x = format!("{x}");
        json(&["exact-cdf", "--n", "100", "--p", "50", "--x", &x, "--law", "W"])["cdf"]
            .as_f64()
            .unwrap()
    };
    assert_eq!(at(cuts.y2), 1.0);
    assert_eq!(at(cuts.y0), 0.0);
}

#[test]
fn distance_matches_library_and_repeats() {
    let args = ["distance", "--n", "1000", "--p", "500", "--metric", "ks"];
    let first = json(&args);
    assert_eq!(first, json(&args));
    let lib = distance(EnsembleParams::new(1000, 500).unwrap(), Metric::KS, Law::W).unwrap();
    assert_eq!(first, serde_json::to_value(lib).unwrap());
    assert!(lib.value > 0.0 && lib.value < 1.0);
    let c = derive_constants(&EnsembleParams::new(1000, 500).unwrap()).unwrap();
    let refined = lib.value * 2.0 * std::f64::consts::E * c.log_s_n / (c.ell2 * c.ell2);
    assert!((lib.ratio_refined / refined - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_is_thread_independent() {
    let args = |t: &'static str| {
        [
            "--threads",
            t,
            "sweep",
            "--n",
            "1000,10000",
            "--ratio",
            "0.3,0.5",
            "--metric",
            "ks,w1",
        ]
    };
    let (c1, one) = tcue(&args("1"));
    let (c8, eight) = tcue(&args("8"));
    assert_eq!((c1, c8), (0, 0));
    assert_eq!(one, eight);
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines[0], SWEEP_COLUMNS.join(","));
    assert_eq!(lines.len(), 1 + 2 * 2 * 2 + 1);
    assert!(lines.last().unwrap().starts_with("# sha256 "));
    // rows ordered by (n, c, metric)
    let np: Vec<(&str, &str)> = lines[1..9]
        .iter()
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap(), f.next().unwrap())
        })
        .collect();
    assert_eq!(np[0], ("1000", "300"));
    assert_eq!(np[3], ("1000", "500"));
    assert_eq!(np[7], ("10000", "5000"));
    let metrics: Vec<&str> = lines[1..9].iter().map(|l| l.split(',').nth(10).unwrap()).collect();
    assert_eq!(metrics, ["ks", "w1"].repeat(4));
}

#[test]
fn sweep_json_rows_are_finite() {
    let (_, text) = tcue(&["sweep", "--n", "1000", "--metric", "w1"]);
    let rows = serde_json::from_value::<Vec<Value>>(json(&["sweep", "--n", "1000", "--metric", "w1"])["rows"].clone())
        .unwrap();
    assert_eq!(rows.len(), 1);
    let ratio = rows[0]["ratio_refined"].as_f64().unwrap();
    assert!(ratio.is_finite() && ratio > 0.0);
    assert!(text.ends_with('\n'));
    assert_eq!(sweep_csv(&[]).lines().count(), 2);
}

#[test]
fn invalid_arguments_exit_2() {
    assert_eq!(tcue(&["sweep", "--n", ""]).0, 2);
    assert_eq!(tcue(&["exact-cdf", "--n", "10", "--p", "10", "--x", "0"]).0, 2);
    assert_eq!(tcue(&["sweep", "--n", "10", "--ratio", "0.01"]).0, 2);
    assert_eq!(tcue(&["sample", "--n", "600", "--p", "10", "--mode", "haar"]).0, 2);
}

#[test]
fn validate_verdicts() {
    assert_eq!(tcue(&["validate", "L2_2"]).0, 0);
    let (code, text) = tcue(&["validate", "L2_4", "--j", "0", "--x", "1", "--force"]);
    assert_eq!(code, 0);
    assert!(text.contains("verdict: pass"));
    assert_eq!(tcue(&["validate", "L2_4", "--j", "0", "--x", "1"]).0, 2);
    assert_eq!(tcue(&["validate", "CRU", "--samples", "20000"]).0, 0);
}

#[test]
fn sample_is_thread_independent() {
    let args = |t: &'static str| {
        [
            "--threads",
            t,
            "sample",
            "--n",
            "24",
            "--p",
            "10",
            "--samples",
            "300",
            "--mode",
            "haar",
            "--seed",
            "9",
        ]
    };
    let (c1, one) = tcue(&args("1"));
    let (c8, eight) = tcue(&args("8"));
    assert_eq!((c1, c8), (0, 0));
    assert_eq!(one, eight);
    assert_eq!(one.lines().count(), 301);
}
