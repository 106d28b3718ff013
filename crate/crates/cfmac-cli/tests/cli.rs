//! End-to-end checks of the binary: subcommand wiring, exit codes,
//! manifest sidecars, and CSV determinism under a fixed seed.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cfmac")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cfmac_cli_{tag}"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_bemac(path: &Path) {
    let mut transition = vec![0.0; 12];
    for (x1, x2) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        transition[(x1 * 2 + x2) * 3 + x1 + x2] = 1.0;
    }
    let file = serde_json::json!({
        "k": 2,
        "input_sizes": [2, 2],
        "output_size": 3,
        "transition": transition,
    });
    std::fs::write(path, serde_json::to_string(&file).unwrap()).unwrap();
}

#[test]
fn validate_accepts_good_and_rejects_bad_channels() {
    let dir = tmp_dir("validate");
    let good = dir.join("bemac.json");
    write_bemac(&good);
    let out = run(&["validate", good.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"k":1,"input_sizes":[2],"output_size":2,"transition":[0.6,0.3,0.5,0.5]}"#)
        .unwrap();
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sums to"));
}

#[test]
fn gain_curve_has_increasing_slope_ratio_and_a_manifest() {
    let dir = tmp_dir("gain");
    let out_path = dir.join("gain.csv");
    let out = run(&[
        "gain",
        "--channel",
        "bemac",
        "--c-in",
        "1,1",
        "--h",
        "1e-2,1e-3,1e-4",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "h,lambda_star,r_sum_bits,gain_bits,slope_ratio");
    let ratios: Vec<f64> =
        lines.map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2]);

    let manifest = std::fs::read_to_string(dir.join("gain.csv.manifest.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(parsed["subcommand"], "gain");
    assert_eq!(parsed["seed"], 0);
    assert!(parsed["tool_version"].is_string());
}

#[test]
fn gaussian2_emits_figure_columns() {
    let dir = tmp_dir("g2");
    let out_path = dir.join("fig2.csv");
    let out = run(&[
        "gaussian2",
        "--gamma1",
        "100",
        "--gamma2",
        "100",
        "--grid",
        "0:0.01:0.005",
        "--param-grid",
        "50",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "c_out,full_gain_bits,forwarding_gain_bits,sqrt_term_bits");
    assert_eq!(lines.len(), 4); // header + {0, 0.005, 0.01}
    let last: Vec<f64> = lines[3].split(',').map(|v| v.parse().unwrap()).collect();
    assert!(last[1] > last[2], "full gain should beat forwarding");

    // resolution below the documented floor is a config error
    let out = run(&[
        "gaussian2",
        "--grid",
        "0:0.01:0.005",
        "--param-grid",
        "10",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn covering_runs_are_byte_identical_and_budget_errors_exit_2() {
    let dir = tmp_dir("covering");
    let config = dir.join("cov.json");
    std::fs::write(
        &config,
        serde_json::to_string(&serde_json::json!({
            "distribution": {"axis_sizes": [1, 2, 2, 1], "mass": [0.5, 0.0, 0.0, 0.5]},
            "n": 12,
            "delta": 0.05,
            "rates": [[0.3, 0.3], [0.6, 0.6]],
            "trials": 100,
            "seed": 7,
        }))
        .unwrap(),
    )
    .unwrap();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for out_path in [&a, &b] {
        let out = run(&["covering", "--config", config.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let big = dir.join("big.json");
    std::fs::write(
        &big,
        serde_json::to_string(&serde_json::json!({
            "distribution": {"axis_sizes": [1, 2, 2, 1], "mass": [0.5, 0.0, 0.0, 0.5]},
            "n": 400,
            "delta": 0.05,
            "rates": [[0.65, 0.65]],
            "trials": 1,
            "seed": 0,
        }))
        .unwrap(),
    )
    .unwrap();
    let out = run(&["covering", "--config", big.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn codec_reports_class_histogram_columns() {
    let dir = tmp_dir("codec");
    let config = dir.join("codec.json");
    std::fs::write(
        &config,
        serde_json::to_string(&serde_json::json!({
            "channel": "bemac",
            "rates": [0.6, 0.6],
            "n_values": [12],
            "trials": 150,
            "seed": 3,
        }))
        .unwrap(),
    )
    .unwrap();
    let out_path = dir.join("codec.csv");
    let out = run(&["codec", "--config", config.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,sum_rate,p_hat,wilson_lo,wilson_hi,cost,enc_typ,dec_typ,wrong,wrong_detail");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "12");
    let p_hat: f64 = fields[2].parse().unwrap();
    let class_total: usize =
        fields[5..9].iter().map(|v| v.parse::<usize>().unwrap()).sum();
    assert!((p_hat - class_total as f64 / 150.0).abs() < 1e-12);
}

#[test]
fn unknown_flags_fail_loudly() {
    let out = run(&["gain", "--channel", "bemac", "--definitely-not-a-flag", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--definitely-not-a-flag"));
}
