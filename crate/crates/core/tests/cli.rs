use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimo-dos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn solve_prints_positive_threshold() {
    let out = run(&["solve", "--snr-db", "20"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let x: f64 = text
        .split_whitespace()
        .find_map(|t| t.strip_prefix("x_max="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(x.is_finite() && x > 0.0, "{text}");
}

#[test]
fn self_test_reports_lambert_w() {
    let out = run(&["solve", "--self-test"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("x_max=1.745528"), "{text}");
}

#[test]
fn exit_codes_distinguish_failures() {
    assert_eq!(run(&["solve", "--delta", "0"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--protocol", "tdma"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--target-ps", "0.9"]).status.code(), Some(2));
    assert_eq!(
        run(&["solve", "--out", "/nonexistent-dir/x.json"]).status.code(),
        Some(4)
    );
    let verify = run(&["verify", "--snr-db", "10", "--samples", "50"]);
    assert_eq!(verify.status.code(), Some(5));
}

#[test]
fn config_file_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# scenario\nsnr_db = 10\ndelta = -1\n").unwrap();
    let out = run(&["solve", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("delta"), "{err}");

    std::fs::write(&cfg, "snr_db = 10\nspeed = 3\n").unwrap();
    let err = String::from_utf8(run(&["solve", "--config", path_str(&cfg)]).stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("speed"), "{err}");
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "protocol = sg_csit\nsnr_db = 10\ndelta = -1\n").unwrap();
    let out = run(&["solve", "--config", path_str(&cfg), "--delta", "0.1"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("sg_csit snr_db=10 "));
}

#[test]
fn invalid_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run(&["sweep-snr", "--delta", "0", "--out", path_str(&out_path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_path.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn threshold_sweep_rows_and_peak() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep-threshold",
        "--snr-db",
        "10",
        "--renewals",
        "20000",
        "--out",
        path_str(&out_path),
    ]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&std::fs::read_to_string(&out_path).unwrap());
    assert_eq!(
        header,
        [
            "protocol",
            "snr_db",
            "threshold_nats",
            "throughput_nats",
            "ci95",
            "x_max"
        ]
    );
    assert_eq!(rows.len(), 31);
    let num = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    let step = num(&rows[1], 2) - num(&rows[0], 2);
    let peak = rows.iter().max_by(|a, b| num(a, 3).total_cmp(&num(b, 3))).unwrap();
    assert!((num(peak, 2) - num(peak, 5)).abs() <= step * 1.000001);
    // opportunism beats always transmitting
    assert!(num(&rows[0], 3) < num(peak, 3));

    let grid = run(&[
        "sweep-threshold",
        "--snr-db",
        "10",
        "--renewals",
        "1000",
        "--thresholds",
        "0:6:0.5",
    ]);
    let (_, rows) = parse_csv(&String::from_utf8(grid.stdout).unwrap());
    assert_eq!(rows.len(), 13);
}

#[test]
fn snr_sweep_table() {
    let out = run(&[
        "sweep-snr",
        "--protocol",
        "all",
        "--snr-db",
        "0:20:10",
        "--renewals",
        "20000",
    ]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(
        header,
        [
            "protocol",
            "snr_db",
            "x_max",
            "sim_throughput",
            "ci95",
            "ratio_vs_sg_csit"
        ]
    );
    assert_eq!(rows.len(), 9);
    for protocol in ["tg_csit", "tg_csir", "sg_csit"] {
        let xs: Vec<f64> = rows
            .iter()
            .filter(|r| r[0] == protocol)
            .map(|r| r[2].parse().unwrap())
            .collect();
        assert!(xs.windows(2).all(|w| w[1] >= w[0]), "{protocol}: {xs:?}");
    }
    for r in &rows {
        let (x, sim, ci): (f64, f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!((x - sim).abs() <= 2.5 * ci, "{r:?}");
    }
}

#[test]
fn dump_dist_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sl.csv");
    let out = run(&[
        "dump-dist",
        "--which",
        "sl_csit",
        "--snr-db",
        "10",
        "--out",
        path_str(&out_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_csv(&std::fs::read_to_string(&out_path).unwrap());
    assert_eq!(header, ["rate_nats", "cdf"]);
    let cdf: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(cdf.windows(2).all(|w| w[1] >= w[0]));
    assert!(*cdf.last().unwrap() >= 1.0 - 1e-6);
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("sl.json")).unwrap()).unwrap();
    assert!(meta["tail_mass"].as_f64().unwrap() <= 1e-6);
    assert_eq!(meta["grid_points"].as_u64().unwrap() as usize, rows.len());

    assert_eq!(run(&["dump-dist"]).status.code(), Some(2));
}

#[test]
fn floats_use_nine_significant_digits() {
    let out = run(&[
        "sweep-snr",
        "--protocol",
        "sg_csit",
        "--snr-db",
        "20",
        "--renewals",
        "500",
    ]);
    let (_, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let digits = rows[0][2].chars().filter(|c| c.is_ascii_digit()).count();
    assert!(digits <= 9, "{}", rows[0][2]);
}
