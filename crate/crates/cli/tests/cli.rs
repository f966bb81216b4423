use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn grm_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grm-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_RUN: &str = "mode = \"independent\"\nk_values = [2, 3, 5]\nsigma_values = [0.5]\nitems_values = [1]\nsample_sizes = [100]\nreplications = 20\n";

#[test]
fn run_curves_chart_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_RUN);
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();

    let run = grm_sim(&[
        "run",
        "--config",
        &config,
        "--out",
        out_s,
        "--keep-replications",
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let summaries = fs::read_to_string(out.join("cell_summaries.csv")).unwrap();
    assert_eq!(summaries.lines().count(), 4);
    assert!(out.join("resolved-config.toml").exists());
    assert_eq!(
        fs::read_to_string(out.join("replications.csv"))
            .unwrap()
            .lines()
            .count(),
        61
    );

    let curves = grm_sim(&["curves", "--out", out_s]);
    assert!(
        curves.status.success(),
        "{}",
        String::from_utf8_lossy(&curves.stderr)
    );
    let stdout = String::from_utf8_lossy(&curves.stdout);
    assert!(stdout.contains("best K="), "{stdout}");
    for m in ["spearman", "slope_se", "bias"] {
        assert!(out.join(format!("curves_{m}.csv")).exists());
        assert!(out.join(format!("optimum_{m}.csv")).exists());
    }

    let chart = grm_sim(&["chart", "--out", out_s]);
    assert!(
        chart.status.success(),
        "{}",
        String::from_utf8_lossy(&chart.stderr)
    );
    assert!(out.join("independent_spearman.svg").exists());
    assert!(out.join("independent_spearman_delta.svg").exists());
}

#[test]
fn seed_override_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_RUN);
    let read = |name: &str, seed: &str, workers: &str| {
        let out = tmp.path().join(name);
        let r = grm_sim(&[
            "run",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--workers",
            workers,
        ]);
        assert!(r.status.success());
        fs::read(out.join("cell_summaries.csv")).unwrap()
    };
    let a = read("a", "5", "1");
    let b = read("b", "5", "3");
    let c = read("c", "6", "1");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn quick_mode_uses_fifty_replications() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_RUN);
    let out = tmp.path().join("q");
    let r = grm_sim(&[
        "run",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--quick",
    ]);
    assert!(r.status.success());
    let text = fs::read_to_string(out.join("cell_summaries.csv")).unwrap();
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').nth(4), Some("50"));
    }
}

#[test]
fn validate_reports_cell_count() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "mode = \"dependency\"\nprofile = \"medium\"\n");
    let r = grm_sim(&["validate", "--config", &config]);
    assert!(r.status.success());
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("dependency mode, 114 cells"), "{stdout}");
}

#[test]
fn invalid_config_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "mode = \"independent\"\nsigma_values = [0.5, -1.0]\n",
    );
    let r = grm_sim(&["validate", "--config", &config]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("sigma_values"));

    let config = write_config(tmp.path(), "mode = \"independent\"\nbogus = 1\n");
    assert_eq!(
        grm_sim(&["run", "--config", &config]).status.code(),
        Some(2)
    );
}

#[test]
fn io_failures_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("nothing-here");
    let r = grm_sim(&["curves", "--out", empty.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));

    let config = write_config(tmp.path(), SMALL_RUN);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let r = grm_sim(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));

    let missing = tmp.path().join("missing.toml");
    let r = grm_sim(&["validate", "--config", missing.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
}
