use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracbam_cli::config::{self, ConfigError};
use fracbam_cli::kernel_spec::parse_kernel;
use fracbam_cli::manifest::RunManifest;
use proptest::prelude::*;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn fracbam(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracbam"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(dir: &Path, file: &str) -> std::collections::HashMap<String, String> {
    fs::read_to_string(dir.join(file))
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn num(map: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    map[key].parse().unwrap()
}

fn summary_rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("summary.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn example1_run_writes_certificate_and_four_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(&["run", s(&config_path("example1.cfg")), "--out", s(tmp.path())], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x1,x2,y1,y2\n"));
    assert_eq!(traj.lines().count(), 502);
    let cert = report(tmp.path(), "certificate.txt");
    assert!((num(&cert, "neutral_gate") - 0.02).abs() < 0.005);
    assert_eq!(cert["verdict"], "bounded-certified");
    let eq = report(tmp.path(), "equilibrium.txt");
    let last: Vec<f64> = traj.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    for (i, name) in ["x1", "x2", "y1", "y2"].iter().enumerate() {
        assert!((last[i + 1] - num(&eq, name)).abs() < 0.01, "{name}");
    }
}

#[test]
fn example2_reports_both_thresholds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(&["run", s(&config_path("example2.cfg")), "--out", s(tmp.path())], &[]);
    assert_eq!(out.status.code(), Some(0));
    let cert = report(tmp.path(), "certificate.txt");
    assert!((num(&cert, "c_threshold") - 0.0002).abs() < 5e-5);
    assert!(num(&cert, "omega_budget_unbounded") > 0.0);
    assert_eq!(cert["verdict"], "uncertified");
}

#[test]
fn require_certified_exits_4_but_keeps_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(
        &["run", s(&config_path("example2.cfg")), "--out", s(tmp.path()), "--require-certified"],
        &[],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(tmp.path().join("certificate.txt").exists());
    let ok = fracbam(
        &["run", s(&config_path("example1.cfg")), "--out", s(&tmp.path().join("b")), "--require-certified"],
        &[],
    );
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn halanay_gate_failure_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(
        &["run", s(&config_path("halanay.cfg")), "--out", s(tmp.path()), "--require-certified"],
        &[("FRACBAM__HALANAY__C", "0.05")],
    );
    assert_eq!(out.status.code(), Some(4));
    let rep = report(tmp.path(), "halanay.txt");
    assert_eq!(rep["flag.gate"], "false");
}

#[test]
fn overrides_from_flags_and_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(
        &["run", s(&config_path("example1.cfg")), "--out", s(tmp.path()), "--t-end", "1", "--step", "0.01"],
        &[("FRACBAM__NETWORK__C", "0.002")],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 102);
    let snapshot = fs::read_to_string(tmp.path().join("config.toml")).unwrap();
    assert!(snapshot.contains("c = 0.002"), "{snapshot}");
}

#[test]
fn validation_errors_exit_2_with_field_names() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config_path("example1.cfg")).unwrap();
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, text.replace("delta = 0.9", "delta = 1.5\ncolour = 3")).unwrap();
    let out = fracbam(&["run", s(&bad)], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("network.delta") && err.contains("network.colour"), "{err}");

    let out = fracbam(&["run", s(&tmp.path().join("missing.cfg"))], &[]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(&bad, "mode = \"certify\"\n[network\n").unwrap();
    assert_eq!(fracbam(&["run", s(&bad)], &[]).status.code(), Some(2));
}

#[test]
fn verify_catches_edits() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    fracbam(&["run", s(&config_path("halanay.cfg")), "--out", s(&dir)], &[]);
    assert_eq!(fracbam(&["verify", s(&dir)], &[]).status.code(), Some(0));
    let path = dir.join("halanay.txt");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push('\n');
    fs::write(&path, text).unwrap();
    let out = fracbam(&["verify", s(&dir)], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("halanay.txt"));
}

#[test]
fn sync_run_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(&["run", s(&config_path("example1_sync.cfg")), "--out", s(tmp.path())], &[]);
    assert_eq!(out.status.code(), Some(0));
    let err = fs::read_to_string(tmp.path().join("error.csv")).unwrap();
    assert!(err.starts_with("t,e_1,e_2,ebar_1,ebar_2\n"));
    let sum = report(tmp.path(), "sync.txt");
    assert!(num(&sum, "error_final") < 0.05 * num(&sum, "error_initial"));
    assert!(num(&sum, "neutral_gate") < num(&sum, "neutral_gate_ungained"));
}

#[test]
fn delta_sweep_gives_four_certified_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(
        &[
            "sweep",
            s(&config_path("example1.cfg")),
            "--param",
            "delta",
            "--values",
            "0.6,0.7,0.8,0.9",
            "--out",
            s(tmp.path()),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = summary_rows(tmp.path());
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[2], "ok");
        assert_eq!(row[4], "bounded-certified", "delta = {}", row[1]);
        assert!(row[6].parse::<f64>().unwrap().is_finite());
        let cfg = fs::read_to_string(tmp.path().join(format!("run_{i}/config.toml"))).unwrap();
        assert!(cfg.contains(&format!("delta = 0.{}", 6 + i)), "{cfg}");
    }
    assert_eq!(fracbam(&["verify", s(tmp.path())], &[]).status.code(), Some(0));
}

#[test]
fn empty_sweep_is_an_empty_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(
        &["sweep", s(&config_path("example1.cfg")), "--param", "c", "--values", "", "--out", s(tmp.path())],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(summary_rows(tmp.path()).is_empty());
}

#[test]
fn c_sweep_crosses_the_gate_at_the_predicted_value() {
    // xi / (a* F [1 + Gamma(1.9) Gamma(0.1)]) from the reference constants
    let c_star = 0.0045733;
    let values = [0.0001, 0.99 * c_star, 1.01 * c_star, 0.5];
    let list: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(
        &[
            "sweep",
            s(&config_path("example1.cfg")),
            "--param",
            "c",
            "--values",
            &list.join(","),
            "--out",
            s(tmp.path()),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = summary_rows(tmp.path());
    let gate: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(gate[1] < 1.0 && gate[2] > 1.0, "{gate:?}");
    assert_eq!(rows[0][4], "bounded-certified");
    assert!(rows[2..].iter().all(|r| r[4] == "uncertified"));
    let flags = fs::read_to_string(tmp.path().join("run_1/certificate.txt")).unwrap();
    assert!(flags.contains("flag.neutral_gate_below_one=true"));
    let flags = fs::read_to_string(tmp.path().join("run_2/certificate.txt")).unwrap();
    assert!(flags.contains("flag.neutral_gate_below_one=false"));
}

#[test]
fn failed_sweep_members_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracbam(
        &["sweep", s(&config_path("example1.cfg")), "--param", "delta", "--values", "0.9,1.7", "--out", s(tmp.path())],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = summary_rows(tmp.path());
    assert_eq!(rows[0][2], "ok");
    assert!(rows[1][2].starts_with("error"), "{:?}", rows[1]);
    assert_eq!(rows[1][3], "2");
}

#[test]
fn bundled_configs_load() {
    for name in ["example1.cfg", "example2.cfg", "example1_sync.cfg", "halanay.cfg"] {
        config::load(&config_path(name), std::iter::empty(), &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn csv_kernels_resolve_next_to_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("k.csv"), "t,k\n0,1\n0.5,0.5\n1,0.25\n").unwrap();
    let text = fs::read_to_string(config_path("example1.cfg"))
        .unwrap()
        .replace("k = \"exp(5)\"", "k = \"csv(k.csv; tail=1.4)\"");
    let path = tmp.path().join("cfg.toml");
    fs::write(&path, text).unwrap();
    let cfg = config::load(&path, std::iter::empty(), &[]).unwrap();
    let k = cfg.network.unwrap().k.get(0, 0, 0).clone();
    assert!((k.eval(0.25) - 0.75).abs() < 1e-15);
    fs::remove_file(tmp.path().join("k.csv")).unwrap();
    assert!(matches!(config::load(&path, std::iter::empty(), &[]), Err(ConfigError::Invalid(_))));
}

proptest! {
    #[test]
    fn kernel_specs_never_panic(spec in "\\PC{0,40}") {
        let _ = parse_kernel(&spec, None);
    }

    #[test]
    fn manifests_never_panic(text in "\\PC{0,200}") {
        let _ = RunManifest::parse(&text);
    }

    #[test]
    fn exponential_specs_roundtrip(rate in 0.01f64..100.0, weight in 0.0f64..10.0) {
        let k = parse_kernel(&format!("exp({rate}, {weight})"), None).unwrap();
        prop_assert_eq!(k, fracbam::kernels::Kernel::exponential(rate, weight).unwrap());
    }
}

/// The checked-in fuzz seeds are valid inputs for their targets.
#[test]
fn fuzz_seeds_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let seeds = |target: &str| -> Vec<String> {
        let mut out: Vec<String> = fs::read_dir(root.join(target))
            .unwrap()
            .map(|e| fs::read_to_string(e.unwrap().path()).unwrap())
            .collect();
        out.sort();
        assert!(!out.is_empty(), "{target}");
        out
    };
    for text in seeds("config_parse") {
        let table = config::parse_table(&text).unwrap();
        config::from_table(table, Path::new(".")).unwrap();
    }
    for text in seeds("kernel_spec_parse") {
        parse_kernel(&text, None).unwrap();
    }
    for text in seeds("manifest_parse") {
        RunManifest::parse(&text).unwrap();
    }
    for text in seeds("trajectory_csv_parse") {
        fracbam::trajectory::Trajectory::from_csv(&text).unwrap();
    }
}
