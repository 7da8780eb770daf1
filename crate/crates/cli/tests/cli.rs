use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const RECT: &str = r#"
[scenario]
kind = "rectilinear"
duration_s = 2.0
sample_rate_hz = 100.0
speed_mps = 1.0
direction = [1.0, 0.0, 0.0]

[object]
position_m = [3.0, 4.0, 0.0]
"#;

const SWAY: &str = r#"
seed = 11

[scenario]
kind = "sway3d"
duration_s = 10.0
amplitude_m = [0.06, 0.04, 0.03]
frequency_hz = [0.3, 0.7, 1.1]
phase_rad = [0.0, 0.5, 1.0]

[object]
position_m = [0.1, 0.8, -0.05]
"#;

const SWAY_B: &str = r#"
[scenario]
kind = "sway3d"
duration_s = 10.0
amplitude_m = [0.08, 0.02, 0.05]
frequency_hz = [0.5, 0.2, 0.9]
phase_rad = [1.0, 0.0, 2.0]

[object]
position_m = [0.1, 0.8, -0.05]
"#;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_global-array"))
            .current_dir(self.dir.path())
            .env_remove("GLOBAL_ARRAY_OUT_DIR")
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn accurate(report: &serde_json::Value, eq: &str) -> f64 {
    report["equations"][eq]["accurate_fraction"]
        .as_f64()
        .unwrap()
}

#[test]
fn generate_writes_closed_interval_track() {
    let sb = Sandbox::new();
    sb.file("rect.toml", RECT);
    sb.ok(&["--out", "a", "generate", "--config", "rect.toml"]);
    let text = fs::read_to_string(sb.path("a/track.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,px,py,pz,vx,vy,vz,ax,ay,az");
    // 2 s at 100 Hz over the closed interval [0, 2].
    assert_eq!(lines.len() - 1, 201);
    let last: Vec<f64> = lines[201].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[0], 2.0);
    assert!((last[1] - 2.0).abs() < 1e-12);
    assert_eq!(&last[4..7], &[1.0, 0.0, 0.0]);
}

#[test]
fn generate_is_deterministic() {
    let sb = Sandbox::new();
    let noisy = SWAY.replace(
        "duration_s = 10.0",
        "duration_s = 2.0\nnoise_sigma_m = 0.001",
    );
    sb.file("sway.toml", &noisy);
    sb.ok(&["--out", "a", "generate", "--config", "sway.toml"]);
    sb.ok(&["--out", "b", "generate", "--config", "sway.toml"]);
    assert_eq!(
        fs::read(sb.path("a/track.csv")).unwrap(),
        fs::read(sb.path("b/track.csv")).unwrap()
    );
}

#[test]
fn malformed_config_names_the_key() {
    let sb = Sandbox::new();
    sb.file("bad.toml", &RECT.replace("speed_mps", "speed_kph"));
    let out = sb.run(&["generate", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("speed_kph"));

    sb.file(
        "wrong_kind.toml",
        &RECT.replace(
            "speed_mps = 1.0",
            "speed_mps = 1.0\namplitude_m = [0.1, 0.1, 0.1]",
        ),
    );
    let out = sb.run(&["generate", "--config", "wrong_kind.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("amplitude_m"));

    let out = sb.run(&["generate", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let out = sb.run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_sway_and_rectilinear() {
    let sb = Sandbox::new();
    sb.file("sway.toml", SWAY);
    sb.file("rect.toml", RECT);
    sb.ok(&["--out", "sway", "analyze", "--config", "sway.toml"]);
    let report = json(&sb.path("sway/accuracy.json"));
    assert_eq!(accurate(&report, "eq3"), 1.0);
    assert!(accurate(&report, "eq1") < 0.2);
    let table = fs::read_to_string(sb.path("sway/estimates.csv")).unwrap();
    assert!(table
        .starts_with("t,px,py,pz,speed_v,alpha,q_norm,d_truth,d_eq1,d_eq2,d_eq3,d_eq5,valid_eq1"));
    assert_eq!(table.lines().count(), 1002);
    assert!(sb.path("sway/reach.json").exists());

    sb.ok(&["--out", "rect", "analyze", "--config", "rect.toml"]);
    let five = json(&sb.path("rect/accuracy.json"));
    assert_eq!(accurate(&five, "eq1"), 1.0);
    sb.ok(&[
        "--out",
        "rect0",
        "analyze",
        "--config",
        "rect.toml",
        "--tolerance",
        "0",
    ]);
    let zero = json(&sb.path("rect0/accuracy.json"));
    for eq in ["eq1", "eq2", "eq3", "eq5"] {
        assert!(accurate(&zero, eq) <= accurate(&five, eq));
    }
}

#[test]
fn csv_round_trip_matches_in_memory_pipeline() {
    let sb = Sandbox::new();
    sb.file("sway.toml", SWAY);
    sb.ok(&["--out", "direct", "analyze", "--config", "sway.toml"]);
    sb.ok(&["--out", "gen", "generate", "--config", "sway.toml"]);
    sb.ok(&[
        "--out",
        "via",
        "analyze",
        "--config",
        "sway.toml",
        "--track",
        "gen/track.csv",
    ]);
    let a = fs::read_to_string(sb.path("direct/estimates.csv")).unwrap();
    let b = fs::read_to_string(sb.path("via/estimates.csv")).unwrap();
    for (ra, rb) in a.lines().zip(b.lines()).skip(1) {
        for (ca, cb) in ra.split(',').zip(rb.split(',')) {
            match (ca.parse::<f64>(), cb.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}"),
                _ => assert_eq!(ca, cb),
            }
        }
    }
    assert_eq!(
        json(&sb.path("direct/accuracy.json"))["equations"],
        json(&sb.path("via/accuracy.json"))["equations"]
    );
}

#[test]
fn detect_verdicts() {
    let sb = Sandbox::new();
    sb.file("sway.toml", SWAY);
    sb.file("other.toml", SWAY_B);
    let verdict = |dir: &str| json(&sb.path(&format!("{dir}/detection.json")))["verdict"].clone();

    let out = sb.ok(&[
        "--out",
        "pb",
        "detect",
        "--config",
        "sway.toml",
        "--playback",
    ]);
    assert!(out.contains("simulated"));
    assert_eq!(verdict("pb"), "simulated");

    sb.ok(&[
        "--out",
        "hold",
        "detect",
        "--config",
        "sway.toml",
        "--playback",
        "--hold",
        "-0.5,0,0",
    ]);
    assert_eq!(verdict("hold"), "simulated");

    sb.ok(&["--out", "live", "detect", "--config", "sway.toml"]);
    assert_eq!(verdict("live"), "live");

    sb.ok(&[
        "--out",
        "mix",
        "detect",
        "--optics-from",
        "sway.toml",
        "--inertial-from",
        "other.toml",
    ]);
    assert_eq!(verdict("mix"), "simulated");
}

#[test]
fn runtime_errors_exit_two() {
    let sb = Sandbox::new();
    sb.file("sway.toml", SWAY);
    sb.file("rect.toml", RECT);
    let out = sb.run(&[
        "detect",
        "--optics-from",
        "sway.toml",
        "--inertial-from",
        "rect.toml",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn slope_examples() {
    let sb = Sandbox::new();
    let first_slope = |dir: &str| -> f64 {
        let text = fs::read_to_string(sb.path(&format!("{dir}/slope.csv"))).unwrap();
        let row = text.lines().nth(1).unwrap();
        row.split(',').nth(1).unwrap().parse().unwrap()
    };
    sb.ok(&["--out", "level", "slope", "--acceleration", "0,0,0"]);
    assert_eq!(first_slope("level"), 0.0);
    sb.ok(&[
        "--out",
        "ramp",
        "slope",
        "--acceleration",
        "0,0,0",
        "--tilt-deg",
        "10",
    ]);
    assert!((first_slope("ramp") - 0.17453292519943295).abs() < 1e-9);
    sb.ok(&[
        "--out",
        "acc",
        "slope",
        "--acceleration",
        "2,0,0",
        "--gravity",
        "0,0,-9.81",
    ]);
    assert!((first_slope("acc") - 2f64.atan2(9.81)).abs() < 1e-6);
    sb.ok(&[
        "--out",
        "n",
        "slope",
        "--acceleration",
        "0,0,0",
        "--normal",
        "0,0,2",
    ]);
    assert_eq!(first_slope("n"), 0.0);
}

#[test]
fn env_var_sets_default_output_dir() {
    let sb = Sandbox::new();
    sb.file("rect.toml", RECT);
    let out = Command::new(env!("CARGO_BIN_EXE_global-array"))
        .current_dir(sb.dir.path())
        .env("GLOBAL_ARRAY_OUT_DIR", "from_env")
        .args(["generate", "--config", "rect.toml"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(sb.path("from_env/track.csv").exists());
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn demo_is_reproducible_and_passes() {
    let sb = Sandbox::new();
    let table = sb.ok(&["--out", "d1", "demo", "--seed", "5"]);
    sb.ok(&["--out", "d2", "demo", "--seed", "5"]);
    assert!(!table.contains("FAIL"), "{table}");
    let (a, b) = (tree(&sb.path("d1")), tree(&sb.path("d2")));
    assert!(a.len() > 50);
    assert_eq!(a, b);
}

#[test]
fn custom_samples_config_reads_a_track() {
    let sb = Sandbox::new();
    sb.file("rect.toml", RECT);
    sb.ok(&["--out", "gen", "generate", "--config", "rect.toml"]);
    sb.file(
        "custom.toml",
        "[scenario]\nkind = \"custom_samples\"\nsamples_csv = \"gen/track.csv\"\n\n[object]\nposition_m = [3.0, 4.0, 0.0]\n",
    );
    sb.ok(&["--out", "c", "analyze", "--config", "custom.toml"]);
    let report = json(&sb.path("c/accuracy.json"));
    assert_eq!(report["n_samples"], 201);
    assert_eq!(accurate(&report, "eq3"), 1.0);

    sb.file(
        "bad_custom.toml",
        "[scenario]\nkind = \"custom_samples\"\nsamples_csv = \"gen/track.csv\"\nduration_s = 1.0\n\n[object]\nposition_m = [3.0, 4.0, 0.0]\n",
    );
    let out = sb.run(&["analyze", "--config", "bad_custom.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duration_s"));
}
