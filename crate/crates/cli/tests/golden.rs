//! Byte-exact golden-file tests for the `additive` binary.
//!
//! Regenerate with `UPDATE_GOLDEN=1 cargo test -p additive-cli --test golden`.

use std::path::Path;
use std::process::{Command, Output};

#[path = "support/golden.rs"]
mod golden;

fn additive(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_additive"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| {
        panic!(
            "stderr is not JSON: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn golden_files_match() {
    let root = golden::golden_root();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let tmp = tempfile::tempdir().unwrap();
    for case in golden::CASES {
        let out = tmp.path().join(case.name);
        let mut args = case.args.to_vec();
        args.extend(["--out", out.to_str().unwrap()]);
        let run = additive(&args, &root);
        assert!(
            run.status.success(),
            "{}: {}",
            case.name,
            String::from_utf8_lossy(&run.stderr)
        );
        let expected = root.join(case.name);
        if update {
            std::fs::create_dir_all(&expected).unwrap();
            for name in golden::list_files(&expected) {
                std::fs::remove_file(expected.join(name)).unwrap();
            }
            for name in golden::list_files(&out) {
                std::fs::copy(out.join(&name), expected.join(&name)).unwrap();
            }
            continue;
        }
        let want = golden::list_files(&expected);
        assert!(
            !want.is_empty(),
            "missing golden directory for {}",
            case.name
        );
        assert_eq!(golden::list_files(&out), want, "{}: file set", case.name);
        for name in want {
            let a = std::fs::read(expected.join(&name)).unwrap();
            let b = std::fs::read(out.join(&name)).unwrap();
            assert!(a == b, "{}/{name} differs from golden copy", case.name);
        }
    }
}

#[test]
fn omega_diff_predictions_vanish() {
    let dir = golden::golden_root().join("moments_omega_diff");
    let text = std::fs::read_to_string(dir.join("prediction_paper_progression.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["sums"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s.as_f64() == Some(0.0)));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("boundedness.json")).unwrap())
            .unwrap();
    assert_eq!(report["bounded_evidence"], true);
}

#[test]
fn missing_residue_names_field() {
    let tmp = tempfile::tempdir().unwrap();
    let run = additive(
        &["moments", "--fn", "omega", "--k", "4", "--n", "1000"],
        tmp.path(),
    );
    assert_eq!(run.status.code(), Some(2));
    let err = stderr_json(&run);
    assert_eq!(err["error"], "config");
    assert_eq!(err["field"], "l");
    assert!(golden::list_files(tmp.path()).is_empty());
}

#[test]
fn kfun_without_params_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let run = additive(
        &["limits", "--fn", "omega", "--n", "1000", "--vs", "kfun"],
        tmp.path(),
    );
    assert_eq!(run.status.code(), Some(2));
    assert_eq!(stderr_json(&run)["field"], "params");
}

#[test]
fn unknown_flag_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let run = additive(
        &["moments", "--fn", "omega", "--n", "100", "--color", "red"],
        tmp.path(),
    );
    assert_eq!(run.status.code(), Some(2));
    assert_eq!(stderr_json(&run)["field"], "color");
}

#[test]
fn bad_config_file_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.ini");
    std::fs::write(&cfg, "fn = omega\nn = 100\nwidth = 3\n").unwrap();
    let run = additive(&["moments", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(run.status.code(), Some(2));
    assert_eq!(stderr_json(&run)["field"], "width");
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.ini");
    std::fs::write(&cfg, "fn = omega\nn = 100\nk = 4\n").unwrap();
    let run = additive(
        &[
            "moments",
            "--config",
            cfg.to_str().unwrap(),
            "--k",
            "1",
            "--out",
            "o",
        ],
        tmp.path(),
    );
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/config.json")).unwrap())
            .unwrap();
    assert_eq!(v["spec"]["k"], 1);
}

#[test]
fn compute_errors_exit_3() {
    // the condition profile of a function vanishing on primes is degenerate
    let tmp = tempfile::tempdir().unwrap();
    let run = additive(&["limits", "--fn", "omega_diff", "--n", "1000"], tmp.path());
    assert_eq!(run.status.code(), Some(3));
    assert_eq!(stderr_json(&run)["error"], "compute");
}

#[test]
fn help_lists_every_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let expect: &[(&str, &[&str])] = &[
        (
            "moments",
            &["--orders", "--sup-bound", "--tail-tol", "--eps"],
        ),
        ("simulate", &["--orders", "--trials", "--seed"]),
        ("limits", &["--vs"]),
    ];
    let common = [
        "--config",
        "--fn",
        "--rule",
        "--kind",
        "--name",
        "--k",
        "--l",
        "--n",
        "--mode",
        "--params",
        "--out",
        "--threads",
    ];
    for (cmd, own) in expect {
        let run = additive(&[cmd, "--help"], tmp.path());
        assert!(run.status.success());
        let text = String::from_utf8(run.stdout).unwrap();
        for flag in common.iter().chain(own.iter()) {
            assert!(
                text.contains(&format!("{flag} ")),
                "{cmd} --help lacks {flag}"
            );
        }
    }
}

#[test]
fn cache_directory_is_used() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    std::fs::create_dir(&cache).unwrap();
    for _ in 0..2 {
        let run = Command::new(env!("CARGO_BIN_EXE_additive"))
            .args(["moments", "--fn", "omega", "--n", "5000", "--out", "o"])
            .env("ADDITIVE_CACHE_DIR", &cache)
            .current_dir(tmp.path())
            .output()
            .unwrap();
        assert!(run.status.success());
    }
    assert_eq!(
        golden::list_files(&cache),
        vec!["primes-5000.bin".to_string()]
    );
}
