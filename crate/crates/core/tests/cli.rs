use std::fs;
use std::process::{Command, Output};

use pcmb::harness::CSV_HEADER;

fn pcmb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcmb")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn ber_sweep_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ber.csv");
    let o = pcmb(&[
        "ber", "--scheme", "gcmb", "--dim", "2", "--mod", "4", "--snr", "0:5:10", "--errors", "20",
        "--max-trials", "500", "--seed", "3", "--no-timing", "--out", path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 4);
    for (line, snr) in lines[1..].iter().zip(["0.0", "5.0", "10.0"]) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(&f[..4], &["pcmb", "2", "4", snr]);
        assert_eq!(f[8], "0");
    }
}

#[test]
fn same_seed_gives_identical_output_across_thread_counts() {
    let run = |threads: &str| {
        let o = pcmb(&[
            "complexity", "--scheme", "fpmb", "--dim", "2", "--mod", "16", "--snr", "0,10", "--max-trials",
            "300", "--seed", "11", "--no-timing", "--threads", threads,
        ]);
        assert!(o.status.success());
        stdout(&o)
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "scheme = \"gc\"\ndim = 2\nmod = 4\nsnr = \"4\"\nmax-trials = 50\nerrors = 5\nno-timing = true\n",
    )
    .unwrap();
    let o = pcmb(&["ber", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("pc,2,4,4.0,"));

    let o = pcmb(&["ber", "--config", cfg.to_str().unwrap(), "--scheme", "gcmb", "--snr", "7"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("pcmb,2,4,7.0,"));
}

#[test]
fn bad_input_exits_nonzero_with_message() {
    for args in [
        &["ber", "--scheme", "gc", "--dim", "3", "--mod", "4", "--snr", "0"][..],
        &["ber", "--scheme", "gc", "--dim", "4", "--mod", "16", "--snr", "0"],
        &["ber", "--scheme", "gcmb", "--dim", "2", "--snr", "0"],
        &["ber", "--scheme", "warp", "--dim", "2", "--mod", "4", "--snr", "0"],
    ] {
        let o = pcmb(args);
        assert!(!o.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn validate_subcommand_reports_pass() {
    let o = pcmb(&["validate", "--instances", "20"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().count() >= 5);
    assert!(!out.contains("FAIL"));
}
