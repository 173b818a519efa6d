use std::path::Path;
use std::process::{Command, Output};

fn meshless(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshless"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .unwrap()
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let out = meshless(&["fill-demo", "--dim", "2", "--seed", "4"], &first);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = first.join("manifest.toml");
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("seed = 4"));

    let second = tmp.path().join("second");
    let out = meshless(&["fill-demo", "--config", manifest.to_str().unwrap()], &second);
    assert!(out.status.success());
    for name in ["fill_nodes.csv", "fill_nodes.normals.csv", "manifest.toml"] {
        assert_eq!(
            std::fs::read(first.join(name)).unwrap(),
            std::fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn bad_configuration_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    std::fs::write(
        &config,
        "experiment = \"heat2d\"\ndim = 2\nseed = 1\n[engine]\nstencl_size = 12\n",
    )
    .unwrap();
    let out = meshless(&["heat2d", "--config", config.to_str().unwrap()], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("engine.stencl_size"));

    // a config for another experiment
    std::fs::write(&config, "experiment = \"heat2d\"\ndim = 2\nseed = 1\n").unwrap();
    let out = meshless(
        &["fill-demo", "--config", config.to_str().unwrap()],
        &tmp.path().join("o"),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = meshless(&["fill-demo", "--dim", "4"], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("unstable.toml");
    std::fs::write(
        &config,
        "experiment = \"heat2d\"\ndim = 2\nseed = 1\n[geometry]\nh = 0.1\n[run]\ndt_factor = 50.0\nend_time = 200.0\n",
    )
    .unwrap();
    let out = meshless(&["heat2d", "--config", config.to_str().unwrap()], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
