//! Integration tests against the `spooky` binary and the library-level
//! command layer: exit codes, config handling, artifacts.

use std::path::Path;
use std::process::Command;

fn spooky() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spooky"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn bell_prints_tsirelson_value() {
    let out = spooky()
        .args(["bell", "--visibility", "1.0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2.82843"), "{text}");
}

#[test]
fn before_before_threshold_value() {
    let out = spooky()
        .args(["before-before", "--delta-t-ps", "5", "--separation-km", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("44.9378"), "{text}");
}

#[test]
fn preset_geneva_spooky_speed_lab_row() {
    let out = spooky()
        .args(["preset", "geneva", "spooky-speed"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("6.67128e6"), "{text}");
    assert!(text.contains("cmb"), "{text}");
}

#[test]
fn malformed_config_exits_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ini");
    std::fs::write(&path, "[source]\nvisibility = 1.2\nbogus = 3\n").unwrap();
    let out = spooky()
        .args(["--config", path.to_str().unwrap(), "qkd"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("visibility"), "{err}");
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn missing_config_file_exits_1() {
    let out = spooky()
        .args(["--config", "/nonexistent/spooky.ini", "qkd"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn strict_maps_insecure_to_exit_3() {
    let out = spooky()
        .args(["--strict", "qkd", "--visibility", "0.6", "--gates", "20000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    // Without --strict the same run reports success.
    let relaxed = spooky()
        .args(["qkd", "--visibility", "0.6", "--gates", "20000"])
        .output()
        .unwrap();
    assert_eq!(relaxed.status.code(), Some(0));
}

#[test]
fn seed_precedence_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.ini");
    std::fs::write(&cfg, "[run]\nseed = 5\n").unwrap();
    let run = |extra: &[&str], env_seed: Option<&str>| {
        let mut cmd = spooky();
        cmd.args(["--config", cfg.to_str().unwrap()]);
        cmd.args(extra);
        cmd.args(["qkd", "--gates", "5000"]);
        cmd.env_remove("SPOOKY_SEED");
        if let Some(s) = env_seed {
            cmd.env("SPOOKY_SEED", s);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    assert!(run(&[], None).contains("seed 5"));
    assert!(run(&[], Some("9")).contains("seed 9"));
    assert!(run(&["--seed", "13"], Some("9")).contains("seed 13"));
}

#[test]
fn transcript_format_and_gate_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.tsv");
    let out = spooky()
        .args(["qkd", "--gates", "200", "--transcript", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = read(&path);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 200);
    for (i, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 6, "line {i}: {line}");
        assert_eq!(fields[0], i.to_string());
        assert!(matches!(fields[1], "K" | "C"));
        assert!(matches!(fields[2], "K" | "C"));
        assert!(matches!(fields[3], "0" | "1" | "-"));
        assert!(matches!(fields[4], "0" | "1" | "-"));
        assert_eq!(fields[5].len(), 2);
        // A missing bit must match a missing click and vice versa.
        assert_eq!(fields[3] == "-", &fields[5][0..1] == "0");
        assert_eq!(fields[4] == "-", &fields[5][1..2] == "0");
    }
}

#[test]
fn bell_sweep_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = spooky()
        .args(["--out", path.to_str().unwrap(), "bell", "--sweep", "0.5:1.0:6"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = read(&path);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "V,S,QBER");
    assert_eq!(lines.len(), 7);
    assert!(text.ends_with('\n'));
}

#[test]
fn config_file_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geneva.ini");
    let cfg = spooky_cli::geneva_preset();
    std::fs::write(&path, cfg.to_ini()).unwrap();
    let back = spooky_cli::load_config(&path).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_ini(), read(&path));
}

#[test]
fn json_config_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"source": {"visibility": 0.9}}"#).unwrap();
    let cfg = spooky_cli::load_config(&path).unwrap();
    assert_eq!(cfg.source.visibility, 0.9);
}

#[test]
fn unknown_preset_rejected() {
    let out = spooky().args(["preset", "vienna", "qkd"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("geneva"));
}

#[test]
fn sweep_threads_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let four = dir.path().join("four.csv");
    for (threads, path) in [("1", &one), ("4", &four)] {
        let out = spooky()
            .args([
                "--threads",
                threads,
                "--out",
                path.to_str().unwrap(),
                "qkd",
                "--gates",
                "10000",
                "--sweep-visibility",
                "0.8:1.0:5",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(read(&one), read(&four));
}
