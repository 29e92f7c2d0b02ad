use std::path::Path;
use std::process::{Command, Output, Stdio};

use bmx_experiments::read_report;

const BMX: &str = env!("CARGO_BIN_EXE_bmx");

fn bmx(args: &[&str], out: &Path) -> Output {
    Command::new(BMX)
        .args(args)
        .arg("--out")
        .arg(out)
        .stdin(Stdio::null())
        .output()
        .unwrap()
}

const SMALL: [&str; 6] = ["--m", "20", "--n", "15", "--k", "12"];

#[test]
fn bvp_writes_report_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let mut args = vec!["bvp", "--space", "l2", "--ranks", "1,2,4", "--seeds", "3", "--seed-base", "7"];
    args.extend(SMALL);
    let o = bmx(&args, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_report(std::fs::File::open(&out).unwrap()).unwrap();
    let algos: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.algo.as_str()).collect();
    assert_eq!(algos.into_iter().collect::<Vec<_>>(), vec!["abcd", "abcd_cross", "hosvd", "random_cross"]);
    assert!(rows.iter().any(|r| r.rank_i == 4 && r.metric == "rel_error_p90"));
    assert!(rows.iter().filter(|r| r.metric == "seeds").all(|r| r.value == 3.0));

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seeds"], serde_json::json!([7, 8, 9]));
    assert!(meta["prng"].as_str().unwrap().contains("ChaCha8"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ChaCha8"));
}

#[test]
fn bvp_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let mut args = vec!["bvp", "--space", "h10", "--ranks", "1..6", "--seeds", "4"];
    args.extend(SMALL);
    assert!(bmx(&args, &a).status.success());
    assert!(bmx(&args, &b).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for args in [
        vec!["bvp", "--m", "0"],
        vec!["bvp", "--ranks", "0..3"],
        vec!["bvp", "--ranks", "three"],
        vec!["bvp", "--space", "h2"],
        vec!["bvp", "--seeds", "0"],
        vec!["abcdx", "--n-abcd", "0"],
        vec!["abcdx", "--oracle", "'unbalanced"],
    ] {
        let o = bmx(&args, &out);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn oracle_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = bmx(&["abcdx", "--oracle", "/nonexistent/solver --n 3", "--seeds", "1"], &out);
    assert_eq!(o.status.code(), Some(3));
    let o = bmx(&["abcdx", "--oracle", "sh -c 'read l; echo not-json'", "--seeds", "1"], &out);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn abcdx_through_an_oracle_matches_dense_mode() {
    let dir = tempfile::tempdir().unwrap();
    let (remote, dense) = (dir.path().join("remote.csv"), dir.path().join("dense.csv"));
    let serve = format!("{BMX} serve-bvp --space h10 --m 20 --n 15 --k 12");
    let common = ["--n-abcd", "6", "-r", "2", "--seeds", "3", "--space", "h10", "--m", "20", "--n", "15", "--k", "12"];
    let mut args = vec!["abcdx", "--oracle", serve.as_str(), "--reference-full"];
    args.extend(common);
    let o = bmx(&args, &remote);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut args = vec!["abcdx"];
    args.extend(common);
    assert!(bmx(&args, &dense).status.success());
    assert_eq!(std::fs::read(&remote).unwrap(), std::fs::read(&dense).unwrap());

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("remote.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["wire"]["reference_messages"], 21);
    assert!(meta["wire"]["run_messages"].as_u64().unwrap() > 0);

    // without the full reference only index counts are reported
    let blind = dir.path().join("blind.csv");
    let o = bmx(&["abcdx", "--oracle", serve.as_str(), "--n-abcd", "3", "--seeds", "2"], &blind);
    assert!(o.status.success());
    let rows = read_report(std::fs::File::open(&blind).unwrap()).unwrap();
    assert!(!rows.is_empty() && rows.iter().all(|r| r.algo == "abcdx" && !r.metric.starts_with("rel_error")));
    for r in rows.iter().filter(|r| r.metric.starts_with("card_")) {
        assert!(r.value <= r.rank_i as f64);
    }
}
