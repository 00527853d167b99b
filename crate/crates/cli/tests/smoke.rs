use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_axtnn"));
    c.env("RUST_LOG", "warn");
    c
}

/// 50 rows, 4 features; class is whether the first two features outweigh
/// the last two.
fn toy_dataset(dir: &Path) -> PathBuf {
    let mut s = String::from("a,b,c,d,label\n");
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % 1000) as f64 / 1000.0
    };
    for _ in 0..50 {
        let v: Vec<f64> = (0..4).map(|_| next()).collect();
        let label = (v[0] + v[1] > v[2] + v[3]) as u8;
        s.push_str(&format!("{:.3},{:.3},{:.3},{:.3},{label}\n", v[0], v[1], v[2], v[3]));
    }
    let p = dir.join("toy.csv");
    std::fs::write(&p, s).unwrap();
    p
}

fn toy_config(dir: &Path, out: &str) -> PathBuf {
    toy_dataset(dir);
    let cfg = format!(
        r#"dataset = "toy.csv"
label = "label"
ks = [1, 2]
hidden = [2, 3]
out = "{out}"
seed = 7

[library]
restarts = 1
tau_points = 2

[library.cgp]
max_iterations = 200

[nsga]
population = 8
generations = 4

[variation]
trials = 10
"#
    );
    let p = dir.join(format!("{out}.toml"));
    std::fs::write(&p, cfg).unwrap();
    p
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(cfg: &Path, args: &[&str]) -> std::process::Output {
    let out = bin().arg("--config").arg(cfg).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn full_pipeline_emits_artifacts() {
    let dir = scratch("smoke_full");
    let cfg = toy_config(&dir, "run");
    for stage in ["train", "gen-exact", "build-library", "optimize", "variation", "report"] {
        run(&cfg, &[stage]);
    }
    let root = dir.join("run");
    for f in [
        "run_config.json",
        "models/k1.json",
        "models/k2.train.json",
        "exact/k1.gnl",
        "exact/k2.json",
        "library/manifest.json",
        "library/build_log.json",
        "fronts/k1.csv",
        "fronts/k2.json",
        "fronts/system.csv",
        "fronts/system.json",
        "fronts/system.svg",
        "variation/k1-exact.csv",
        "variation/k2-exact.json",
        "variation/variation.svg",
        "report.json",
        "report.csv",
        "report.md",
    ] {
        assert!(root.join(f).is_file(), "missing {f}");
    }
    let md = std::fs::read_to_string(root.join("report.md")).unwrap();
    assert!(md.contains("k1-exact") && md.contains("k2-exact"));

    // a front design can be analyzed for variation
    let system: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(root.join("fronts/system.json")).unwrap()).unwrap();
    let id = system[0]["id"].as_str().unwrap().to_string();
    run(&cfg, &["variation", "--point", &id]);
    assert!(root.join(format!("variation/{id}.json")).is_file());
}

#[test]
fn reruns_are_idempotent_and_deterministic() {
    let dir = scratch("smoke_det");
    let a = toy_config(&dir, "a");
    let b = toy_config(&dir, "b");
    run(&a, &["run"]);
    let snapshot = |root: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in std::fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else if p.file_name().unwrap() != "run_config.json" {
                    files.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
                }
            }
        }
        files.sort();
        files
    };
    let same = |x: &[(String, Vec<u8>)], y: &[(String, Vec<u8>)]| {
        let names = |v: &[(String, Vec<u8>)]| v.iter().map(|f| f.0.clone()).collect::<Vec<_>>();
        assert_eq!(names(x), names(y));
        let differing: Vec<&str> = x.iter().zip(y).filter(|(p, q)| p.1 != q.1).map(|(p, _)| p.0.as_str()).collect();
        assert!(differing.is_empty(), "differing files: {differing:?}");
    };
    let first = snapshot(&dir.join("a"));
    // second run without --force touches nothing
    run(&a, &["run"]);
    same(&first, &snapshot(&dir.join("a")));
    // an independent run with the same seed produces the same bytes
    run(&b, &["run"]);
    same(&first, &snapshot(&dir.join("b")));
}

#[test]
fn exact_only_report_has_single_row() {
    let dir = scratch("smoke_exact");
    let cfg = toy_config(&dir, "run");
    run(&cfg, &["--ks", "1", "train"]);
    run(&cfg, &["--ks", "1", "gen-exact"]);
    let out = run(&cfg, &["--ks", "1", "report"]);
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("run/report.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert_eq!(rows[0]["accuracy_loss"].as_f64().unwrap(), 0.0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("k1-exact"));
}

#[test]
fn missing_artifacts_name_the_command() {
    let dir = scratch("smoke_missing");
    let cfg = toy_config(&dir, "run");
    let out = bin().arg("--config").arg(&cfg).arg("gen-exact").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("axtnn train"));

    run(&cfg, &["train"]);
    let out = bin().arg("--config").arg(&cfg).arg("optimize").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("axtnn build-library"));
}

#[test]
fn optimize_refuses_uncovered_key() {
    let dir = scratch("smoke_cover");
    let cfg = toy_config(&dir, "run");
    run(&cfg, &["--ks", "1", "run"]);
    // models for k=2 need keys the k=1 library lacks
    run(&cfg, &["--ks", "2", "train"]);
    let out = bin().arg("--config").arg(&cfg).args(["--ks", "2", "optimize"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("library has no components for"), "{err}");
}

#[test]
fn bad_config_is_rejected() {
    let dir = scratch("smoke_bad");
    toy_dataset(&dir);
    let p = dir.join("bad.toml");
    std::fs::write(&p, "dataset = \"toy.csv\"\nks = [5]\n").unwrap();
    let out = bin().arg("--config").arg(&p).arg("train").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ks must be"));
}
