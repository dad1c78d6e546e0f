use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn artic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artic"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env("ARTIC_THREADS", "2")
        .output()
        .expect("run artic")
}

fn synth(dir: &Path) {
    let out = dir.to_str().unwrap();
    let o = artic(&["synth", "--speakers", "4", "--utts", "4", "--phones", "6", "--seed", "5", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn help_lists_subcommands_and_flags() {
    let o = artic(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["extract", "priors", "synth", "split", "train", "eval", "table1", "table2", "plot-data"] {
        assert!(text.contains(cmd), "missing {cmd}");
    }
    let o = artic(&["train", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--config", "--manifest", "--priors", "--split", "--scale", "--set", "--seed", "--out"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn usage_errors_exit_one_with_a_single_line() {
    let o = artic(&["train", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim_end().lines().count(), 1);
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "kind = blstm\nmanifest = manifest.txt\n").unwrap();
    let o = artic(&["train", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(!dir.path().join("o").exists());

    let o = artic(&["train", "--manifest", "x", "--set", "lambda_w=-1", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let manifest = dir.path().join("manifest.txt");
    let lf = dir.path().join("lf_table.txt");
    let out = dir.path().join("ae2");
    let o = artic(&[
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--priors",
        lf.to_str().unwrap(),
        "--set",
        "kind=ae2",
        "--set",
        "split_counts=2,1,1",
        "--set",
        "epochs=2",
        "--set",
        "seeds=1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["experiment.cfg", "split.txt", "priors.txt", "seed1.ckpt", "seed1.log", "seed1.report.tsv", "baseline.report.tsv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let log = fs::read_to_string(out.join("seed1.log")).unwrap();
    assert!(log.contains("# stop: max-epochs"), "{log}");
    assert_eq!(log.lines().filter(|l| !l.starts_with('#')).count(), 3);

    let report = dir.path().join("eval.tsv");
    let cfg = out.join("experiment.cfg");
    let o = artic(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        out.join("seed1.ckpt").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(report).unwrap(), fs::read_to_string(out.join("seed1.report.tsv")).unwrap());
}

#[test]
fn table2_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let manifest = dir.path().join("manifest.txt");
    let lf = dir.path().join("lf_table.txt");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = artic(&[
            "table2",
            "--manifest",
            manifest.to_str().unwrap(),
            "--priors",
            lf.to_str().unwrap(),
            "--set",
            "split_counts=2,1,1",
            "--set",
            "epochs=1",
            "--set",
            "seeds=1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out).unwrap()
    };
    let a = run("a.tsv");
    assert_eq!(a, run("b.tsv"));
    let text = String::from_utf8(a).unwrap();
    let lf_row = text.lines().find(|l| l.starts_with("LF\t")).unwrap();
    assert_eq!(lf_row.split('\t').nth(1), Some(""));
}
