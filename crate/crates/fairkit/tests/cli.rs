//! End-to-end CLI tests: synth -> audit on the generated CSV -> report
//! re-render, plus exit-code contracts.

use std::path::Path;
use std::process::Command;

fn fairkit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairkit"))
}

const SPEC: &str = r#"
n = 400
n_numeric = 2
proxy_strength = 0.5
noise_scale = 0.8
seed = 5

[[groups]]
label = "A"
proportion = 0.5
prevalence = 0.30

[[groups]]
label = "B"
proportion = 0.5
prevalence = 0.15
"#;

fn experiment_config(data_dir: &Path) -> String {
    format!(
        r#"
seed = 2
k_outer = 3
k_inner = 2
protected = ["group"]

[data]
csv = "{csv}"
schema = "{schema}"

[model]
kind = "logistic"
l2 = [0.001]

[[mitigation]]
method = "RW"
"#,
        csv = data_dir.join("cohort.csv").display(),
        schema = data_dir.join("schema.toml").display(),
    )
}

#[test]
fn synth_then_audit_then_rerender() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.toml");
    std::fs::write(&spec_path, SPEC).unwrap();

    let data_dir = dir.path().join("data");
    let status = fairkit()
        .args(["synth", "--config"])
        .arg(&spec_path)
        .arg("--out")
        .arg(&data_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(data_dir.join("cohort.csv").exists());
    assert!(data_dir.join("schema.toml").exists());

    let config_path = dir.path().join("experiment.toml");
    std::fs::write(&config_path, experiment_config(&data_dir)).unwrap();
    let audit_dir = dir.path().join("audit");
    let status = fairkit()
        .args(["audit", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&audit_dir)
        .args(["--format", "both", "--fixed-clock"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(audit_dir.join("report.json").exists());
    assert!(audit_dir.join("cells.csv").exists());
    assert!(audit_dir.join("groups.csv").exists());
    // Audit ignores the configured mitigation: base-only figures.
    assert!(audit_dir.join("figures/forest_group_BASE.svg").exists());
    assert!(audit_dir.join("figures/scatter_group.svg").exists());
    let report = std::fs::read_to_string(audit_dir.join("report.json")).unwrap();
    assert!(report.contains("\"BASE\""));
    assert!(!report.contains("\"RW\""));

    let mitigate_dir = dir.path().join("mitigate");
    let status = fairkit()
        .args(["mitigate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&mitigate_dir)
        .args(["--fixed-clock"])
        .status()
        .unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(mitigate_dir.join("report.json")).unwrap();
    assert!(report.contains("\"RW\""));

    let rerender_dir = dir.path().join("rerender");
    let status = fairkit()
        .args(["report", "--input"])
        .arg(mitigate_dir.join("report.json"))
        .arg("--out")
        .arg(&rerender_dir)
        .args(["--format", "csv"])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(mitigate_dir.join("figures/scatter_group.svg")).unwrap(),
        std::fs::read(rerender_dir.join("figures/scatter_group.svg")).unwrap(),
    );
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.toml");
    std::fs::write(&spec_path, SPEC).unwrap();
    let out1 = dir.path().join("s1");
    let out2 = dir.path().join("s2");
    for (out, seed) in [(&out1, "5"), (&out2, "99")] {
        let status = fairkit()
            .args(["synth", "--config"])
            .arg(&spec_path)
            .arg("--out")
            .arg(out)
            .args(["--seed", seed])
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_ne!(
        std::fs::read(out1.join("cohort.csv")).unwrap(),
        std::fs::read(out2.join("cohort.csv")).unwrap(),
    );
}

#[test]
fn usage_error_exits_1() {
    let status = fairkit().arg("frobnicate").status().unwrap();
    assert_eq!(status.code(), Some(1));
    let status = fairkit().args(["mitigate", "--config"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn data_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let status = fairkit()
        .args(["mitigate", "--config", "/nonexistent/config.toml", "--out"])
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Valid TOML but invalid settings is also a data error.
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nk_outer = 1\nprotected = [\"group\"]\n[data.synthetic]\nn = 200\nn_numeric = 1\nproxy_strength = 0.5\nnoise_scale = 0.8\nseed = 1\n[[data.synthetic.groups]]\nlabel = \"A\"\nproportion = 0.5\nprevalence = 0.2\n[[data.synthetic.groups]]\nlabel = \"B\"\nproportion = 0.5\nprevalence = 0.2\n").unwrap();
    let status = fairkit()
        .args(["mitigate", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out2"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let status = fairkit().arg("--help").status().unwrap();
    assert_eq!(status.code(), Some(0));
}
