use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

const SMALL: &str = r#"
scenario = "iceberg"
rho_grid = [0.0]
boundary_rho_grid = [-0.2, -0.1, 0.0, 0.1, 0.2]
fee_grid = [0.0, 0.1]
margin_grid = [0.0, 0.1]

[market]
horizon = 30.0

[sim]
horizon = 30.0
n_paths = 100
"#;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_internex")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn run_in(command: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn only_file(dir: &Path, suffix: &str) -> PathBuf {
    let mut found: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    assert_eq!(found.len(), 1, "{dir:?} {suffix}");
    found.pop().unwrap()
}

/// Data rows of a CSV written by the CLI, after the comment and header lines.
fn rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# config_hash="), "{comment}");
    assert!(comment.contains("units:"), "{comment}");
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

#[test]
fn corrupted_and_unstable_configs_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write_config(dir.path(), "rho_grid = [0.0,\n");
    let (code, err) = run_in("solve", &bad, &out, &[]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("config"), "{err}");

    let unstable = write_config(dir.path(), "[solver]\ndt = 10.0\n");
    let (code, err) = run_in("solve", &unstable, &out, &[]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("unstable"), "{err}");
    assert!(!out.exists());
}

#[test]
fn blow_up_exits_with_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rho_grid = [0.0]\n[solver]\ndt = 5.0\n");
    let (code, err) = run_in("solve", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn clamped_simulation_exits_with_invalid_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}initial_q = 40\n"));
    let out = dir.path().join("out");
    let (code, err) = run_in("sweep", &cfg, &out, &[]);
    assert_eq!(code, 4, "{err}");
    let csv = only_file(&out.join("sweep/iceberg/+0.000"), ".csv");
    let (_, data) = rows(&csv);
    assert!(data.iter().all(|r| r.last().unwrap() == "0"));
}

#[test]
fn solve_is_idempotent_and_records_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run_in("solve", &cfg, &a, &[]).0, 0);
    assert_eq!(run_in("solve", &cfg, &b, &["--threads", "1"]).0, 0);
    let leaf = Path::new("solve/iceberg/+0.000");
    for ext in [".bin", ".csv", ".json"] {
        let fa = only_file(&a.join(leaf), ext);
        let fb = only_file(&b.join(leaf), ext);
        assert_eq!(fs::read(&fa).unwrap(), fs::read(fb).unwrap(), "{ext}");
    }
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(only_file(&a.join(leaf), ".json")).unwrap()).unwrap();
    assert!(meta["relative_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    let (header, data) = rows(&only_file(&a.join(leaf), ".csv"));
    assert_eq!(header, "t_level,t_seconds,q,l,h");
    assert_eq!(data.len(), 61 * 2);
}

#[test]
fn seed_flag_changes_only_simulated_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run_in("sweep", &cfg, &a, &["--seed", "1"]).0, 0);
    assert_eq!(run_in("sweep", &cfg, &b, &["--seed", "2"]).0, 0);
    let fa = only_file(&a.join("sweep/iceberg/+0.000"), ".csv");
    let fb = only_file(&b.join("sweep/iceberg/+0.000"), ".csv");
    assert_ne!(fa.file_name(), fb.file_name());
    assert_ne!(fs::read(fa).unwrap(), fs::read(fb).unwrap());
}

#[test]
fn sweep_dataset_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    assert_eq!(run_in("sweep", &cfg, &out, &[]).0, 0);
    let (header, data) = rows(&only_file(&out.join("sweep/iceberg/+0.000"), ".csv"));
    let col = |name: &str| header.split(',').position(|h| h == name).unwrap();
    assert_eq!(data.len(), 4);
    let fee0 = data.iter().find(|r| r[0] == "fee" && r[1] == "0").unwrap();
    let margin0 = data.iter().find(|r| r[0] == "margin" && r[1] == "0").unwrap();
    // fee = margin = 0 is the same naive strategy
    for name in ["naive_pnl_mean", "naive_volume_rate"] {
        assert_eq!(fee0[col(name)], margin0[col(name)]);
    }
    for r in &data {
        assert!(r[col("optimal_volume_rate")].parse::<f64>().unwrap() >= 0.0);
        assert_eq!(r[col("reference_pnl_mean")], fee0[col("reference_pnl_mean")]);
    }
}

#[test]
fn figures_boundary_is_nonincreasing_in_offset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    assert_eq!(run_in("figures", &cfg, &out, &[]).0, 0);
    for scenario in ["iceberg", "twap"] {
        let (header, data) = rows(&only_file(&out.join(format!("figures/{scenario}/boundary")), ".csv"));
        assert_eq!(header, "rho_tilde,l,boundary_q");
        assert_eq!(data.len(), 5);
        let q: Vec<i64> = data.iter().map(|r| r[2].parse().unwrap_or(i64::MIN)).collect();
        assert!(q.windows(2).all(|w| w[1] <= w[0]), "{scenario}: {q:?}");
    }
    let (header, data) = rows(&only_file(&out.join("figures/full_amount/+0.000"), ".csv"));
    assert_eq!(header, "q,l,size,bid_depth,ask_depth,execute");
    assert_eq!(data.len(), 61 * 11 * 3);
    assert!(out.join("figures/as_reference/none").is_dir());
}

#[test]
fn tables_have_scenario_by_offset_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("rho_grid = [0.0]", "rho_grid = [-0.2, 0.0, 0.2]"));
    let out = dir.path().join("out");
    assert_eq!(run_in("tables", &cfg, &out, &[]).0, 0);
    let leaf = out.join("tables/all/grid");
    let (header, data) = rows(&only_file(&leaf, ".pnl.csv"));
    assert_eq!(header.split(',').count(), 2 + 3 * 2 + 1);
    let labels: Vec<(String, String)> = data.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    let want: Vec<(String, String)> = ["iceberg", "twap", "full_amount"]
        .iter()
        .flat_map(|s| ["optimal", "naive"].map(|k| (s.to_string(), k.to_string())))
        .collect();
    assert_eq!(labels, want);
    let (header, data) = rows(&only_file(&leaf, ".fill_time.csv"));
    assert!(header.contains("first_fill_mean[rho=-0.200]"));
    let fa = data.iter().find(|r| r[0] == "full_amount" && r[1] == "optimal").unwrap();
    for k in 0..3 {
        assert_eq!(fa[2 + 4 * k], "0");
    }
    only_file(&leaf, ".summary.json");
}
