use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hnmr(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hnmr"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HNMR_OUT")
        .output()
        .expect("spawn hnmr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn map_lines(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| l.contains("->") && !l.starts_with("input"))
        .map(|l| l.split_whitespace().take(3).collect::<Vec<_>>().join(" "))
        .collect()
}

const NOT12: [&str; 4] = ["00 -> 11", "01 -> 10", "10 -> 01", "11 -> 00"];

#[test]
fn not12_map_from_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let h = hnmr(
        &[
            "gate", "run", "--system", "c2f3i", "--gate", "not12", "--method", "hadamard", "--out",
            "h",
        ],
        dir.path(),
    );
    assert!(h.status.success(), "{}", String::from_utf8_lossy(&h.stderr));
    assert_eq!(map_lines(&h), NOT12);
    assert!(stdout(&h).contains("4 acquisitions"));

    let c = hnmr(
        &[
            "gate",
            "run",
            "--gate",
            "not12",
            "--method",
            "conventional",
            "--t1",
            "128",
            "--out",
            "c",
        ],
        dir.path(),
    );
    assert!(c.status.success());
    assert_eq!(map_lines(&c), NOT12);
    assert!(stdout(&c).contains("128 acquisitions"));
    for f in [
        "manifest.json",
        "correlation.json",
        "spectrum2d.csv",
        "spectrum2d_full.csv",
        "raw/fid_127.bin",
    ] {
        assert!(dir.path().join("c").join(f).exists(), "{f}");
    }

    let d = hnmr(
        &["gate", "decode", "--data", "h/raw", "--out", "decoded"],
        dir.path(),
    );
    assert!(d.status.success());
    assert_eq!(map_lines(&d), NOT12);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        hnmr(&["gate", "run", "--gate", "bogus"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        hnmr(
            &["gate", "run", "--system", "nosuch", "--gate", "nop"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        hnmr(
            &["gate", "run", "--system", "c2f3i", "--gate", "toffoli"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        hnmr(
            &[
                "gate",
                "run",
                "--gate",
                "nop",
                "--method",
                "conventional",
                "--encoding",
                "j"
            ],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        hnmr(&["gate", "decode", "--data", "missing"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        hnmr(
            &["mem", "search", "--data", "missing", "--text", "ab", "--letter", "a"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        hnmr(&["gate", "frobnicate"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn superposing_gate_gives_ambiguous_map() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("half.seq"),
        "# (pi/2)_x on work qubit 1\npulse spin=1 angle=90 phase=x\n",
    )
    .unwrap();
    let o = hnmr(
        &["gate", "run", "--gate-file", "half.seq", "--out", "amb"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("peak(s)") && err.contains("ambiguous"),
        "{err}"
    );
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = hnmr(
            &[
                "gate",
                "run",
                "--system",
                "tfba",
                "--gate",
                "toffoli",
                "--encoding",
                "j",
                "--out",
                out,
            ],
            dir.path(),
        );
        assert!(o.status.success());
    }
    for f in [
        "manifest.json",
        "correlation.json",
        "spectrum2d.csv",
        "raw/manifest.json",
        "raw/series_005.bin",
    ] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);

    for out in ["m1", "m2"] {
        let o = hnmr(
            &[
                "mem", "record", "--slices", "16", "--noise", "0.01", "--seed", "9", "--out", out,
            ],
            dir.path(),
        );
        assert!(o.status.success());
    }
    for f in ["manifest.json", "spectrum_003.bin"] {
        assert_eq!(
            fs::read(dir.path().join("m1").join(f)).unwrap(),
            fs::read(dir.path().join("m2").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hnmr"))
        .args(["gate", "run", "--gate", "swap"])
        .current_dir(dir.path())
        .env("HNMR_OUT", "results")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(
        map_lines(&o),
        ["00 -> 00", "01 -> 10", "10 -> 01", "11 -> 11"]
    );
    assert!(dir
        .path()
        .join("results/gate-c2f3i-swap-hadamard/manifest.json")
        .exists());
}

#[test]
fn help_lists_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = hnmr(&["--help"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("c2f3i") && text.contains("tfba") && text.contains("HNMR_OUT"));
    let p = hnmr(&["presets"], dir.path());
    assert!(stdout(&p).contains("-30.350 Hz"));
}

#[test]
fn memory_search_workflow() {
    let dir = tempfile::tempdir().unwrap();
    assert!(hnmr(&["mem", "record", "--out", "ds"], dir.path())
        .status
        .success());
    let fox = "the quick brown fox jumps over the lazy dog";
    let o = hnmr(
        &[
            "mem", "search", "--data", "ds", "--text", fox, "--letter", "u", "--report", "fox.json",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("fox.json")).unwrap()).unwrap();
    assert_eq!(report["matches"], serde_json::json!([5, 21]));
    assert_eq!(report["complements"], serde_json::json!([20]));
    assert_eq!(report["intensities"].as_array().unwrap().len(), 43);

    let w = hnmr(
        &[
            "mem",
            "write",
            "--data",
            "ds",
            "--text",
            "principles of nuclear magnetic resonance",
            "--out",
            "w/spec.csv",
        ],
        dir.path(),
    );
    assert!(w.status.success());
    let csv = fs::read_to_string(dir.path().join("w/spec.csv")).unwrap();
    assert!(csv.starts_with("hz,intensity\n"));
    assert_eq!(csv.lines().count(), 1 + 256 * 64);

    assert_eq!(
        hnmr(
            &["mem", "search", "--data", "ds", "--text", "abc", "--letter", " "],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        hnmr(
            &["mem", "write", "--data", "ds", "--text", "ABC", "--out", "x.csv"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
}
