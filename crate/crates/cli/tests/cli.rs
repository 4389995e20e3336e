use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rtstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtstat")).args(args).output().expect("binary runs")
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn read_summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn bundled_examples_validate() {
    let mut n = 0;
    for entry in fs::read_dir(example("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = rtstat(&["validate", path.to_str().unwrap()]);
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            n += 1;
        }
    }
    assert_eq!(n, 9);
}

#[test]
fn validate_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"rts\"\nseed = 7\nmap = \"doubling\"\nlevel = 8\n");
    let out = rtstat(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("ok\n"));
    let echo: serde_json::Value = serde_json::from_str(&text[3..]).unwrap();
    assert_eq!(echo["config"]["N"], 100000);
    assert_eq!(echo["config"]["target"], "cylinder");
    assert_eq!(echo["config"]["ks_max"], 0.05);
}

#[test]
fn missing_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"tower\"\nmap = \"tent(2)\"\n");
    let out = rtstat(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`seed`"));
}

#[test]
fn zero_delta_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"density\"\nseed = 1\nmap = \"logistic(4)\"\nY = [0.3, 0.4]\ndelta = 0\n");
    let out = rtstat(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`delta`"));
}

#[test]
fn parse_errors_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"tower\"\nseed = \n");
    let out = rtstat(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn gallery_lists_families() {
    let out = rtstat(&["gallery"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["doubling", "tent", "logistic", "skewlinear", "cubic"] {
        assert!(text.contains(name));
    }
}

#[test]
fn full_branch_tower_has_one_node() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"tower\"\nseed = 1\nmap = \"tent(2)\"\nmax_level = 10\n");
    let out = rtstat(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_summary(dir.path());
    assert_eq!(s["results"]["domains"], 1);
    assert_eq!(s["results"]["edges"], 2);
    let dot = fs::read_to_string(dir.path().join("tower.dot")).unwrap();
    assert_eq!(dot.matches("->").count(), 2);
}

#[test]
fn doubling_rts_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = rtstat(&["run", example("rts.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.code().is_some_and(|c| c < 2), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_summary(dir.path());
    assert!(dir.path().join("rts.csv").exists());
    assert!(s.get("wall_clock_seconds").is_some());
    let ks = s["results"]["ks"].as_f64().unwrap();
    assert!(ks < 0.02, "ks = {ks} at center {}", s["results"]["center"]);
}

#[test]
fn kac_example_is_within_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = rtstat(&["run", example("kac.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let p = read_summary(dir.path())["results"]["product"].as_f64().unwrap();
    assert!((0.98..=1.02).contains(&p), "{p}");
}

#[test]
fn missed_threshold_warns() {
    let dir = tempfile::tempdir().unwrap();
    // the level-6 cylinder at 0 returns with probability 1/2 at the first step
    let cfg = write_config(dir.path(), "kind = \"rts\"\nseed = 1\nmap = \"doubling\"\ncenter = 0\nlevel = 6\nN = 2000\n");
    let out = rtstat(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(read_summary(dir.path())["status"], "warn");
}

#[test]
fn module_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // σ = 0 for the doubling map
    let cfg = write_config(dir.path(), "kind = \"fluct\"\nseed = 1\nmap = \"doubling\"\nn = 8\nN = 200\n");
    let out = rtstat(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coboundary"));
}

#[test]
fn strict_runs_are_byte_identical_across_thread_counts() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let cfg = example("ow.toml");
    for (d, threads) in dirs.iter().zip(["1", "1", "3"]) {
        let out = rtstat(&[
            "run",
            cfg.to_str().unwrap(),
            "--strict-repro",
            "--threads",
            threads,
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(out.status.code().is_some_and(|c| c < 2), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["ow.csv", "summary.json"] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        assert_eq!(a, fs::read(dirs[1].path().join(name)).unwrap(), "{name}");
        assert_eq!(a, fs::read(dirs[2].path().join(name)).unwrap(), "{name}");
    }
}
