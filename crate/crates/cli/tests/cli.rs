use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = "\
la = 1
bo = 0.2
theta_s_expr = 3*pi/4
v0_theta = 3*pi/4
h = 0.3
dt = 0.1
";

fn droplet(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_droplet"));
    cmd.args(args).env_remove("DROPLET_OUT");
    if let Some(o) = out {
        cmd.env("DROPLET_OUT", o);
    }
    cmd.output().unwrap()
}

/// BASE with the keys set in `extra` replaced or appended.
fn write_config(dir: &Path, name: &str, extra: &str) -> String {
    let key = |l: &str| l.split('=').next().unwrap().trim().to_string();
    let overridden: Vec<String> = extra.lines().map(key).collect();
    let mut text: String = BASE.lines().filter(|l| !overridden.contains(&key(l))).map(|l| format!("{l}\n")).collect();
    text.push_str(extra);
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn zero_final_time_writes_initial_snapshot_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = write_config(tmp.path(), "c.cfg", &format!("t_final = 0\noutput_dir = {}\n", out.display()));
    let o = droplet(&["run", &cfg], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&out), ["config.txt", "energies.csv", "interface_0.csv", "snapshot_0.vtk", "summary.json"]);
    let energies = std::fs::read_to_string(out.join("energies.csv")).unwrap();
    assert_eq!(energies.lines().count(), 3);
    assert!(energies.starts_with("# droplet energies v1\nt,E_k,"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps"], 0);
    assert_eq!(summary["failure"], serde_json::Value::Null);
}

#[test]
fn unknown_key_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "t_final = 1\ngravity = 9.81\n");
    let o = droplet(&["run", &cfg], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 8") && err.contains("`gravity`"), "{err}");
    assert_eq!(droplet(&["run", "/nonexistent.cfg"], None).status.code(), Some(2));
}

#[test]
fn step_failure_exits_with_code_1_and_keeps_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("f.cfg");
    std::fs::write(&cfg, "la = 10000\nbo = 5\ntheta_s_expr = 0.5\nv0_theta = 2.8\nh = 0.3\ndt = 2\nt_final = 4\n").unwrap();
    let out = tmp.path().join("fail");
    let o = droplet(&["run", cfg.to_str().unwrap()], Some(&out));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step failed"));
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("step failed"));
    assert!(out.join("energies.csv").exists());
}

#[test]
fn runs_are_deterministic_and_honour_output_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "t_final = 1\nsnapshot_every = 4\noutput_dir = ignored\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(droplet(&["run", &cfg], Some(&a)).status.code(), Some(0));
    assert_eq!(droplet(&["run", &cfg], Some(&b)).status.code(), Some(0));
    assert!(!Path::new("ignored").exists());
    let names = files(&a);
    assert!(names.contains(&"interface_4.csv".to_string()) && names.contains(&"interface_10.csv".to_string()));
    for name in names {
        if name.ends_with(".csv") || name.ends_with(".vtk") {
            assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name}");
        }
    }
}

#[test]
fn sweep_runs_each_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "t_final = 0.2\n");
    let o = droplet(&["sweep", &cfg, "--key", "bo", "--values", "0.2,0.8"], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for d in ["bo_0.2", "bo_0.8"] {
        let text = std::fs::read_to_string(tmp.path().join(d).join("config.txt")).unwrap();
        assert!(text.contains(&format!("bo = {}", &d[3..])));
    }
    let o = droplet(&["sweep", &cfg, "--key", "nope", "--values", "1"], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn audit_scl_passes_for_default_seed() {
    let o = droplet(&["audit-scl"], None);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.trim_end().ends_with("PASS"));
}

#[test]
fn validate_yl_with_infinite_threshold_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "t_final = 0.5\nyl_threshold = inf\n");
    let o = droplet(&["validate-yl", &cfg], Some(tmp.path()));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("PASS yl_distance"));
    let profile = std::fs::read_to_string(tmp.path().join("yl_profile.csv")).unwrap();
    assert!(profile.starts_with("# droplet yl_profile v1\nx,y\n"));

    let cfg = write_config(tmp.path(), "d.cfg", "t_final = 0.5\ntheta_s_expr = 2 + 0.1*x\n");
    assert_eq!(droplet(&["validate-yl", &cfg], Some(tmp.path())).status.code(), Some(2));
}

#[test]
fn coarse_mesh_is_further_from_the_analytic_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let mut dist = Vec::new();
    for h in ["0.4", "0.1"] {
        let cfg = write_config(tmp.path(), &format!("{h}.cfg"), &format!("t_final = 16\nh = {h}\n"));
        let out = tmp.path().join(h);
        let o = droplet(&["validate-yl", &cfg], Some(&out));
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
        let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        dist.push(summary["yl_distance"].as_f64().unwrap());
    }
    assert!(dist[0] > dist[1], "{dist:?}");
}
