use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn desk() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/desk")
}

fn hpdro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpdro"))
        .args(args)
        .env("HPDRO_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Copy of the desk manifest in `dir` with absolute input paths, after
/// `edit` has rewritten the text.
fn manifest_copy(dir: &Path, edit: impl FnOnce(String) -> String) -> PathBuf {
    let d = desk().canonicalize().unwrap();
    let text = std::fs::read_to_string(d.join("manifest.toml")).unwrap();
    let text = text
        .replace("\"../houses.toml\"", &format!("{:?}", d.join("../houses.toml")))
        .replace("\"forecast.csv\"", &format!("{:?}", d.join("forecast.csv")))
        .replace("\"price.csv\"", &format!("{:?}", d.join("price.csv")))
        .replace("\"errors.csv\"", &format!("{:?}", d.join("errors.csv")));
    let path = dir.join("manifest.toml");
    std::fs::write(&path, edit(text)).unwrap();
    path
}

#[test]
fn help_lists_every_stage() {
    let out = hpdro(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "fit",
        "build",
        "solve",
        "simulate",
        "montecarlo",
        "report",
        "pipeline",
        "sweep",
    ] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn missing_manifest_is_a_config_error() {
    let out = hpdro(&["fit", "--manifest", "/nonexistent/manifest.toml"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn unknown_manifest_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_copy(dir.path(), |t| {
        t.replace("slot_hours = 0.5", "slot_hours = 0.5\nslot_hour = 0.5")
    });
    let out = hpdro(&["fit", "--manifest", m.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("slot_hour"), "{}", stderr(&out));
}

#[test]
fn short_forecast_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(desk().join("forecast.csv")).unwrap();
    let short: Vec<&str> = text.lines().take(30).collect();
    std::fs::write(dir.path().join("short.csv"), short.join("\n") + "\n").unwrap();
    let short_path = format!("{:?}", dir.path().join("short.csv"));
    let m = manifest_copy(dir.path(), |t| {
        let d = desk().canonicalize().unwrap();
        t.replace(&format!("{:?}", d.join("forecast.csv")), &short_path)
    });
    let out = hpdro(&["pipeline", "--manifest", m.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("short.csv"), "{}", stderr(&out));
}

#[test]
fn overloaded_transformer_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_copy(dir.path(), |t| {
        t.replace("trans_capacity_kw = 60.0", "trans_capacity_kw = 5.0")
    });
    let out = hpdro(&[
        "pipeline",
        "--manifest",
        m.to_str().unwrap(),
        "--variant",
        "deterministic",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn zero_time_limit_leaves_no_incumbent() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_copy(dir.path(), |t| t);
    let out = hpdro(&[
        "pipeline",
        "--manifest",
        m.to_str().unwrap(),
        "--time-limit",
        "0",
        "--trials",
        "5",
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn stages_run_one_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_copy(dir.path(), |t| t);
    let m = m.to_str().unwrap();
    let common = ["--manifest", m, "--variant", "ga-dro", "--trials", "10"];
    let run = |stage: &str, extra: &[&str]| {
        let mut args = vec![stage];
        args.extend_from_slice(&common);
        args.extend_from_slice(extra);
        let out = hpdro(&args);
        assert_eq!(code(&out), 0, "{stage}: {}", stderr(&out));
        out
    };
    let early = hpdro(&["build", "--manifest", m, "--variant", "ga-dro", "--trials", "10"]);
    assert_eq!(code(&early), 2, "build before fit");
    run("fit", &[]);
    let mps = dir.path().join("model.mps");
    run("build", &["--export-mps", mps.to_str().unwrap()]);
    assert!(std::fs::read_to_string(&mps).unwrap().contains("ENDATA"));
    run("solve", &[]);
    run("simulate", &[]);
    run("montecarlo", &["--sequential"]);
    let report = run("report", &[]);
    assert!(String::from_utf8_lossy(&report.stdout).contains("ga-dro"));
    for f in [
        "margins.json",
        "schedule.csv",
        "profile.csv",
        "report_trials.csv",
        "report_summary.csv",
        "report.txt",
    ] {
        assert!(dir.path().join("out").join(f).is_file(), "{f} missing");
    }

    let other = hpdro(&["montecarlo", "--manifest", m, "--variant", "ga-dro", "--trials", "11"]);
    assert_eq!(code(&other), 2, "artifacts of another manifest must be rejected");
}

#[test]
fn separate_processes_write_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_copy(dir.path(), |t| t);
    let m = m.to_str().unwrap();
    let names = [
        "schedule.csv",
        "report_trials.csv",
        "report_summary.csv",
        "baseline_summary.csv",
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out_dir = dir.path().join("out");
        let _ = std::fs::remove_dir_all(&out_dir);
        let out = hpdro(&["pipeline", "--manifest", m, "--trials", "20"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        runs.push(names.map(|f| std::fs::read(out_dir.join(f)).unwrap()));
    }
    for (i, f) in names.iter().enumerate() {
        assert_eq!(runs[0][i], runs[1][i], "{f} differs between runs");
    }
}
