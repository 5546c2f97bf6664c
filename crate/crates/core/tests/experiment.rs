use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use fedgdve::experiment::{run_experiment, ExperimentConfig, CSV_HEADER};
use fedgdve::numerics::Rng;

/// Two taste blocks over 30 items, 40 users with 8 to 14 edges each.
fn write_edge_list(dir: &Path) -> PathBuf {
    let mut rng = Rng::new(99);
    let mut out = String::from("# user item\n");
    for u in 0..40 {
        let base = if u % 2 == 0 { 0 } else { 15 };
        let n = 8 + rng.below(7);
        let mut items: Vec<usize> = (0..15).collect();
        rng.shuffle(&mut items);
        for &i in items.iter().take(n) {
            out.push_str(&format!("u{u} i{}\n", base + i));
        }
    }
    let path = dir.join("edges.txt");
    fs::write(&path, out).unwrap();
    path
}

fn small_config(dir: &Path, method: &str) -> String {
    format!(
        r#"dataset = "{}"
format = "edge_list"
method = "{method}"
clients = 3
global_frac = 0.4
dim = 4
layers = 2
batch_size = 64
gdve_batch_users = 8
pretrain_epochs = 1
gdve_max_batches = 2
epochs_per_round = 1
rounds = 2
eval_k = 10
record_timing = false
output_dir = "{}"
"#,
        write_edge_list(dir).display(),
        dir.join("runs").display()
    )
}

fn config(dir: &Path, method: &str, overrides: &[String]) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&small_config(dir, method), overrides).unwrap()
}

#[test]
fn seed_repetition_gives_identical_csv() {
    for method in ["fedgdve", "fedngcf", "centralized_ngcf"] {
        let tmp = tempfile::tempdir().unwrap();
        let a = config(tmp.path(), method, &[]);
        let a = ExperimentConfig {
            output_dir: tmp.path().join("a"),
            ..a
        };
        let b = ExperimentConfig {
            output_dir: tmp.path().join("b"),
            ..a.clone()
        };
        run_experiment(&a).unwrap();
        run_experiment(&b).unwrap();
        let read = |c: &ExperimentConfig| fs::read(c.output_dir.join(c.run_id()).join("metrics.csv")).unwrap();
        let csv = read(&a);
        assert_eq!(csv, read(&b), "{method}");
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        assert!(text.lines().any(|l| l.contains(",summary,recall@10,")), "{method}");
    }
}

#[test]
fn manifest_reproduces_the_placement() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "fedngcf", &[]);
    run_experiment(&cfg).unwrap();
    let dir = cfg.output_dir.join(cfg.run_id());
    let replay = ExperimentConfig {
        manifest: Some(dir.join("partition.txt")),
        output_dir: tmp.path().join("replay"),
        ..cfg.clone()
    };
    run_experiment(&replay).unwrap();
    let rdir = replay.output_dir.join(replay.run_id());
    assert_eq!(
        fs::read(dir.join("partition.txt")).unwrap(),
        fs::read(rdir.join("partition.txt")).unwrap()
    );
    assert_eq!(
        fs::read(dir.join("metrics.csv")).unwrap(),
        fs::read(rdir.join("metrics.csv")).unwrap()
    );
}

fn cli() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fedgdve"));
    c.env("RUST_LOG", "warn").env_remove("FEDGDVE_OUTPUT_DIR");
    c
}

#[test]
fn cli_run_partition_and_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.toml");
    fs::write(&cfg_path, small_config(tmp.path(), "fedgdve")).unwrap();
    let out_dir = tmp.path().join("cli-out");

    let run = cli()
        .arg("--workers")
        .arg("1")
        .arg("run")
        .arg(&cfg_path)
        .args(["--set", "rounds=1"])
        .env("FEDGDVE_OUTPUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let run_dir = out_dir.join("fedgdve-k3-uniform-s0");
    for f in ["metrics.csv", "partition.txt", "run.json", "model.json"] {
        assert!(run_dir.join(f).exists(), "missing {f}");
    }
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(run_dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["rounds"], 1);
    assert_eq!(meta["config"]["clients"], 3);

    let manifest = tmp.path().join("m.txt");
    let part = cli().arg("partition").arg(&cfg_path).arg("-o").arg(&manifest).output().unwrap();
    assert!(part.status.success());
    assert_eq!(fs::read(&manifest).unwrap(), fs::read(run_dir.join("partition.txt")).unwrap());
    assert!(String::from_utf8_lossy(&part.stderr).contains("AMI"));

    let eval = cli()
        .arg("eval")
        .arg(run_dir.join("model.json"))
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    assert!(String::from_utf8_lossy(&eval.stdout).contains("over 3 clients"));
}

#[test]
fn cli_rejects_bad_config_with_key_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.toml");
    fs::write(&cfg_path, small_config(tmp.path(), "fedgdve")).unwrap();
    let out = cli().arg("run").arg(&cfg_path).args(["--set", "global_frac=1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("global_frac"));

    let out = cli().arg("run").arg(tmp.path().join("missing.toml")).output().unwrap();
    assert!(!out.status.success());
}
