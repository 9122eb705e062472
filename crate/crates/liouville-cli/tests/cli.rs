use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("liouville-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(args: &[&str]) -> std::process::Output {
    bin().args(args).output().unwrap()
}

#[test]
fn list_json_is_sorted_and_complete() {
    let o = run(&["list", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for n in ["gmc-moments", "lqft-kpz", "reroot-test", "ising-scaling", "zeta-fit"] {
        assert!(names.contains(&n), "{n}");
    }
}

#[test]
fn identical_runs_write_identical_files() {
    let (a, b) = (tmp("det-a"), tmp("det-b"));
    for d in [&a, &b] {
        let o = run(&["run", "--experiment", "sphere-gff", "--grid", "256", "--seed", "9", "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["data.csv", "results.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn exit_codes() {
    let d = tmp("codes");
    let out = d.to_str().unwrap();
    assert_eq!(run(&["run", "--experiment", "no-such", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["run", "--experiment", "gmc-build", "--set", "gama=1", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = run(&["run", "--experiment", "lqft-corr", "--gamma", "2.5", "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2.5"));
    assert_eq!(run(&["run", "--experiment", "ising-exact", "--set", "points=[[0,0],[1,0],[2,0]]", "--out", out]).status.code(), Some(3));
}

#[test]
fn flags_override_config_file() {
    let d = tmp("cfg");
    std::fs::create_dir_all(&d).unwrap();
    let cfg = d.join("run.toml");
    std::fs::write(&cfg, "seed = 4\n[lqft]\ngrid_resolution = 128\nmc_samples = 50\n").unwrap();
    let out = d.join("out");
    let o = run(&["run", "--experiment", "lqft-corr", "--config", cfg.to_str().unwrap(), "--samples", "60", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(r["config"]["lqft.mc_samples"], 60);
    assert_eq!(r["config"]["lqft.grid_resolution"], 128);
    assert_eq!(r["config"]["seed"], 4);
}

#[test]
fn unit_volume_output_ignores_mu() {
    let mut files = vec![];
    for mu in ["0.5", "3"] {
        let d = tmp(&format!("mu{mu}"));
        let o = run(&["run", "--experiment", "lqft-measure", "--grid", "128", "--samples", "40", "--mu", mu, "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(std::fs::read(d.join("data.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn json_data_format() {
    let d = tmp("json");
    let o = run(&["run", "--experiment", "ising-exact", "--format", "json", "--set", "points=[[0,0],[1,0],[0,1],[1,1]]", "--out", d.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("data.json")).unwrap()).unwrap();
    assert_eq!(v["columns"][1], "correlation");
    assert!(v["rows"][0][1].as_f64().unwrap() > 0.0);
}
