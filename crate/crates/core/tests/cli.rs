use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn zevca(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zevca"));
    cmd.args(args).env_remove("ZEVCA_OUT");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
experiment = "eigen"
n_list = [2]

[potential]
kind = "harmonic"
mass = 1.0
omega = 1.0

[gaussian]
alpha0 = 0.8
xc = 1.0

[integration]
dt = 0.01
t_final = 2.0
record_stride = 20

[oracle]
xmin = -10.0
xmax = 10.0
npoints = 256
dt = 0.01
record_stride = 20
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn runs_config_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("out");
    let o = zevca(&["run", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["eigen_N2.csv", "oracle_eigen.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &SMALL.replace("alpha0 = 0.8", "alpha0 = -0.8"));
    let o = zevca(&["run", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("alpha0") && err.contains("line 11"), "{err}");

    let cfg = write_config(dir.path(), "typo.toml", &SMALL.replace("xc = 1.0", "xc = 1.0\ncentre = 2.0"));
    let o = zevca(&["run", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("centre"));

    let o = zevca(&["run", "--preset", "nope"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = zevca(&["run", "/nonexistent/zevca.toml"], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_dir_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let from_cfg = dir.path().join("from_cfg");
    let text = format!("output_dir = {:?}\n{SMALL}", from_cfg.to_str().unwrap());
    let cfg = write_config(dir.path(), "c.toml", &text);

    let o = zevca(&["run", &cfg], &[]);
    assert!(o.status.success());
    assert!(from_cfg.join("summary.json").exists());

    let from_env = dir.path().join("from_env");
    let o = zevca(&["run", &cfg], &[("ZEVCA_OUT", &from_env)]);
    assert!(o.status.success());
    assert!(from_env.join("summary.json").exists());

    let from_flag = dir.path().join("from_flag");
    let o = zevca(&["run", &cfg, "--out", from_flag.to_str().unwrap()], &[("ZEVCA_OUT", &from_env)]);
    assert!(o.status.success());
    assert!(from_flag.join("summary.json").exists());
}

#[test]
fn n_list_override_and_deterministic_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = zevca(
            &["run", &cfg, "--n-list", "2,4", "--seedless-deterministic", "--out", d.to_str().unwrap()],
            &[],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert!(a.join("eigen_N4.csv").exists());
    for f in ["eigen_N2.csv", "eigen_N4.csv", "oracle_eigen.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // Summaries differ only in the echoed output directory.
    let strip = |d: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(d.join("summary.json")).unwrap()).unwrap();
        v["config"]["output_dir"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
    let summary = fs::read_to_string(a.join("summary.json")).unwrap();
    assert!(!summary.contains("wall_seconds"));
}

#[test]
fn blow_up_on_every_order_exits_3() {
    // Imaginary time on top of a barrier: S_2 follows a tangent and diverges.
    let text = r#"
experiment = "eigen"
n_list = [2]

[potential]
kind = "polynomial"
coeffs = [0.0, 0.0, -1.0, 0.0, 0.1]

[gaussian]
alpha0 = 0.5
xc = 0.0

[integration]
dt = 0.01
t_final = 10.0

[oracle]
xmin = -10.0
xmax = 10.0
npoints = 256
dt = 0.01
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dw.toml", text);
    let out = dir.path().join("out");
    let o = zevca(&["run", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    // Partial series and the summary are still written.
    assert!(out.join("eigen_N2.csv").exists() && out.join("summary.json").exists());
}

#[test]
fn breached_oracle_box_exits_4() {
    let text = SMALL
        .replace("experiment = \"eigen\"", "experiment = \"tunnel\"")
        .replace("kind = \"harmonic\"\nmass = 1.0\nomega = 1.0", "kind = \"polynomial\"\ncoeffs = []")
        .replace("xc = 1.0", "xc = 0.0\npc = 4.0")
        .replace("t_final = 2.0", "t_final = 4.0")
        .replace("dt = 0.01\nrecord_stride = 20\n", "dt = 1e-3\nrecord_stride = 20\n");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "free.toml", &text);
    let o = zevca(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("edge"));
}

#[test]
fn lists_presets() {
    let o = zevca(&["presets"], &[]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for p in ["eckart_e20", "eckart_p0", "quartic", "morse_h2"] {
        assert!(text.contains(p));
    }
}
