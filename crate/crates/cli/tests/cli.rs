use std::path::Path;
use std::process::Command;

fn hpv(args: &[&str], threads: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hpv"))
        .args(args)
        .env("HPV_THREADS", threads)
        .output()
        .expect("hpv runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Runs `args` with one thread, replays the record with three, and compares
/// every output byte for byte.
fn replay_matches(dir: &Path, name: &str, args: &[&str], suffixes: &[&str]) {
    let first = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let first_s = first.to_str().unwrap();
    full.extend(["--out", first_s]);
    let o = hpv(&full, "1");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let record = format!("{first_s}.record.json");
    let second = dir.join(format!("{name}-replay"));
    let o = hpv(&["replay", &record, "--out", second.to_str().unwrap()], "3");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for s in suffixes {
        assert_eq!(
            read(dir, &format!("{name}{s}")),
            read(dir, &format!("{name}-replay{s}")),
            "{name}{s}"
        );
    }
    // The replay's record carries the same command and settings.
    let rec = |n: &str| -> serde_json::Value {
        serde_json::from_slice(&read(dir, &format!("{n}.record.json"))).unwrap()
    };
    let (a, b) = (rec(name), rec(&format!("{name}-replay")));
    assert_eq!(
        (&a["command"], &a["settings"]),
        (&b["command"], &b["settings"])
    );
}

#[test]
fn every_command_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    replay_matches(
        d,
        "sample",
        &["sample", "--lambda", "0.5", "--window-radius", "4"],
        &[".csv"],
    );
    replay_matches(
        d,
        "degree",
        &[
            "degree",
            "--lambdas",
            "1,0.5",
            "--trials",
            "30",
            "--seed",
            "7",
        ],
        &[".csv"],
    );
    replay_matches(
        d,
        "perc",
        &[
            "percolate",
            "--lambda",
            "0.5",
            "--p",
            "0.3",
            "--trials",
            "20",
        ],
        &[".csv"],
    );
    replay_matches(
        d,
        "pc",
        &["pc-sweep", "--lambdas", "0.5", "--trials", "20"],
        &[".csv"],
    );
    replay_matches(
        d,
        "explore",
        &[
            "explore",
            "--lambda",
            "0.05",
            "--trials",
            "20",
            "--runs",
            "4",
            "--max-nodes",
            "40",
        ],
        &[".csv"],
    );
    replay_matches(
        d,
        "xi",
        &["xi", "--kinds", "I,II,III", "--trials", "5"],
        &[".csv"],
    );
    replay_matches(
        d,
        "pp",
        &[
            "pseudopath",
            "--lambda",
            "0.1",
            "--k",
            "2",
            "--trials",
            "10",
            "--w2",
            "4",
        ],
        &[".csv"],
    );
    replay_matches(
        d,
        "render",
        &[
            "render", "--lambda", "0.5", "--pixels", "96", "--format", "both",
        ],
        &[".csv", ".png", ".svg"],
    );
    replay_matches(
        d,
        "hp",
        &["render", "--pixels", "64", "--model", "halfplane"],
        &[".csv", ".png"],
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "lambda = 0.5\nwindow_radius = 3.0\nseed = 4\n").unwrap();
    let out = dir.path().join("s");
    let o = hpv(
        &[
            "sample",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ],
        "2",
    );
    assert!(o.status.success());
    let rec: serde_json::Value =
        serde_json::from_slice(&read(dir.path(), "s.record.json")).unwrap();
    assert_eq!(rec["settings"]["seed"], 5);
    assert_eq!(rec["settings"]["lambda"], 0.5);
    assert_eq!(rec["settings"]["window_radius"], 3.0);
    assert_eq!(rec["settings"]["p"], 0.5);
}

#[test]
fn errors_exit_nonzero_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    let o = hpv(
        &["sample", "--lambda", "-1", "--out", out.to_str().unwrap()],
        "1",
    );
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"lambda": 1, "colour": 2}"#).unwrap();
    let o = hpv(
        &[
            "sample",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        "1",
    );
    assert!(!o.status.success());
}
