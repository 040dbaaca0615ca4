use std::path::Path;
use std::process::{Command, Output};

fn pifnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pifnet")).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        format!(
            "out_dir = \"{}\"\n[data]\nsource = \"synthetic\"\n[data.synthetic]\nn = 500\n[svr]\nmax_train_rows = 200\n[shap]\nmax_samples = 32\n[model]\nhidden = 6\n[train]\nmax_epoch = 2\n",
            dir.join("run").display()
        ),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn stages_run_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    for stage in ["preprocess", "select-features", "train", "evaluate"] {
        let out = pifnet(&[stage, "--config", &cfg]);
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = pifnet(&["evaluate", "--config", &cfg]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("pifnet") && table.contains("persistence"));
    assert!(dir.path().join("run/metrics.csv").exists());
}

#[test]
fn overrides_land_in_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let other = dir.path().join("elsewhere");
    let out = pifnet(&["preprocess", "--config", &cfg, "--seed", "17", "--out-dir", other.to_str().unwrap()]);
    assert!(out.status.success());
    let resolved = std::fs::read_to_string(other.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 17"));
    assert!(!dir.path().join("run").exists());
}

#[test]
fn failures_emit_one_json_line_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = pifnet(&["train", "--config", &cfg]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(line["error"], "config");
    assert!(line["message"].as_str().unwrap().contains("preprocess"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[lof]\nk = \"ten\"\n").unwrap();
    let out = pifnet(&["preprocess", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let line: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(line["error"], "config");

    let out = pifnet(&["preprocess", "--config", "/nonexistent/run.toml"]);
    let line: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(line["error"], "io");
}
