use std::path::Path;
use std::process::{Command, Output};

fn stressline(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stressline"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_then_pipeline_writes_toolpath() {
    let dir = tempfile::tempdir().unwrap();
    let g = stressline(&["generate", "bar", "--cell", "0.5", "--out", "part"], dir.path());
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    for f in ["part.node", "part.ele", "config.toml"] {
        assert!(dir.path().join("part").join(f).is_file(), "{f}");
    }
    // Coarser layers keep the run short.
    let cfg = dir.path().join("part/config.toml");
    let text = std::fs::read_to_string(&cfg).unwrap();
    std::fs::write(&cfg, format!("layer_height = 0.25\n{text}")).unwrap();

    let p = stressline(
        &[
            "--jobs",
            "1",
            "pipeline",
            "--config",
            "part/config.toml",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(p.status.code(), Some(0), "{}", String::from_utf8_lossy(&p.stderr));
    let out = stdout(&p);
    assert!(out.contains("trajectory alignment"), "{out}");
    for f in ["toolpath.txt", "metrics.json", "summary.json", "stress.csv"] {
        assert!(dir.path().join("run").join(f).is_file(), "{f}");
    }
}

#[test]
fn fea_stage_stops_early() {
    let dir = tempfile::tempdir().unwrap();
    assert!(stressline(&["generate", "bar", "--out", "part"], dir.path())
        .status
        .success());
    let p = stressline(&["fea", "--config", "part/config.toml", "--out", "run"], dir.path());
    assert_eq!(p.status.code(), Some(0), "{}", String::from_utf8_lossy(&p.stderr));
    assert!(dir.path().join("run/stress.csv").is_file());
    assert!(!dir.path().join("run/toolpath.txt").exists());
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "layer_height = -1\n").unwrap();
    let p = stressline(&["pipeline", "--config", "bad.toml"], dir.path());
    assert_eq!(p.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&p.stderr).contains("layer_height"));
}

#[test]
fn missing_config_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = stressline(&["pipeline", "--config", "absent.toml"], dir.path());
    assert_ne!(p.status.code(), Some(0));
}

#[test]
fn usage_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(stressline(&["pipeline"], dir.path()).status.code(), Some(2));
    assert_eq!(
        stressline(&["--jobs", "0", "fea", "--config", "x.toml"], dir.path())
            .status
            .code(),
        Some(2)
    );
}
