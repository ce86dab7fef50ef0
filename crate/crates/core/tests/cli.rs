use std::ffi::OsString;
use std::path::Path;

use serde_json::Value;
use tempfile::TempDir;

fn run_in(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = dir.join("out.txt");
    let _ = std::fs::remove_file(&out);
    let mut argv: Vec<OsString> = vec!["prodrel".into(), "--out".into(), out.clone().into()];
    argv.extend(args.iter().map(OsString::from));
    let code = prodrel::cli::run(argv);
    (code, std::fs::read_to_string(out).unwrap_or_default())
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn statuses(report: &str) -> Vec<(String, String)> {
    let v: Value = serde_json::from_str(report).unwrap();
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["name"].as_str().unwrap().to_string(),
                c["status"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

const TOY: &str = "vars: x1 x2\n1 1 <= 3/2\n1 0 <= 1\n-1 0 <= 0\n0 1 <= 1\n0 -1 <= 0\n";

#[test]
fn sa_projection_reaches_the_hull() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "toy.poly", TOY);
    let (code, out) = run_in(d.path(), &["sa", &f, "--level", "2", "--project"]);
    assert_eq!(code, 0, "{out}");
    let st = statuses(&out);
    assert!(st.iter().any(|(n, _)| n == "equals-integer-hull"));
    assert!(st.iter().all(|(_, s)| s == "PASS"), "{st:?}");

    let (code, out) = run_in(d.path(), &["sa", &f, "--level", "1", "--project"]);
    assert_eq!(code, 0, "{out}");
    assert!(!statuses(&out)
        .iter()
        .any(|(n, _)| n == "equals-integer-hull"));
}

#[test]
fn translate_reports_bad_sections() {
    let d = TempDir::new().unwrap();
    let q = write(&d, "q.poly", "vars: x y\n-1 1 == 0\n1 0 <= 1\n-1 0 <= 0\n");
    let bad = write(&d, "bad.sec", "0 -> 0 0\n1 -> 1 0\n");
    let (code, out) = run_in(d.path(), &["translate", &q, &bad, "--dx", "1"]);
    assert_eq!(code, 1);
    let st = statuses(&out);
    assert_eq!(st, vec![("section".to_string(), "FAIL".to_string())]);
    assert!(out.contains("row 1"), "{out}");

    let good = write(&d, "good.sec", "0 -> 0 0\n1 -> 1 1\n");
    let (code, out) = run_in(d.path(), &["translate", &q, &good, "--dx", "1"]);
    assert_eq!(code, 0, "{out}");
    assert!(statuses(&out).iter().all(|(_, s)| s == "PASS"));
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let missing = d.path().join("nope.poly").display().to_string();
    assert_eq!(run_in(d.path(), &["sa", &missing, "--level", "1"]).0, 2);
    assert_eq!(run_in(d.path(), &["frobnicate"]).0, 2);
    assert_eq!(run_in(d.path(), &["--jobs", "0", "cfl", "gap-table"]).0, 2);
    let f = write(&d, "toy.poly", TOY);
    assert_eq!(run_in(d.path(), &["sa", &f, "--level", "3"]).0, 2);
    let garbled = write(&d, "bad.poly", "vars: x\n1 <= zz\n");
    assert_eq!(run_in(d.path(), &["sa", &garbled, "--level", "1"]).0, 2);
}

#[test]
fn verify_pair_is_deterministic() {
    let d = TempDir::new().unwrap();
    let args = [
        "--seed",
        "3",
        "cfl",
        "verify-pair",
        "--n",
        "5",
        "--l",
        "{6,7,8,9,10}",
        "--lp",
        "{6,7,8,11,12}",
        "--extra",
        "10",
        "--no-lp",
    ];
    let (c1, a) = run_in(d.path(), &args);
    let (c2, b) = run_in(d.path(), &args);
    assert_eq!((c1, c2), (0, 0), "{a}");
    assert_eq!(a, b);
    assert!(statuses(&a).iter().all(|(_, s)| s == "PASS"));
}

#[test]
fn four_is_too_small_to_exclude() {
    let d = TempDir::new().unwrap();
    let args = [
        "cfl",
        "verify-pair",
        "--n",
        "4",
        "--l",
        "{5,6,7,8}",
        "--lp",
        "{5,6,7,9}",
        "--extra",
        "0",
        "--no-lp",
    ];
    let (code, out) = run_in(d.path(), &args);
    assert_eq!(code, 1);
    let failed: Vec<String> = statuses(&out)
        .into_iter()
        .filter(|(_, s)| s == "FAIL")
        .map(|(n, _)| n)
        .collect();
    assert_eq!(failed, ["core-exclusion[l]", "core-exclusion[l']"]);
}

#[test]
fn gap_table_csv() {
    let d = TempDir::new().unwrap();
    let (code, out) = run_in(
        d.path(),
        &[
            "--format",
            "csv",
            "cfl",
            "gap-table",
            "--from",
            "9",
            "--to",
            "10",
        ],
    );
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3, "{out}");
    assert!(lines[2].starts_with("10,10240/11253,11253/10240"), "{out}");
}

#[test]
fn sa_bound_table() {
    let d = TempDir::new().unwrap();
    let (code, out) = run_in(
        d.path(),
        &[
            "sa-bound", "--r", "2", "--n", "10", "--delta", "1", "--t", "0,1,2",
        ],
    );
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rows"][2]["bound"], "360");
    assert_eq!(v["max_level"], 2);
}

#[test]
fn exact_ef_check_passes() {
    let d = TempDir::new().unwrap();
    let (code, out) = run_in(
        d.path(),
        &[
            "cfl",
            "exact-ef",
            "--capacities",
            "1,1",
            "--clients",
            "1",
            "--check",
        ],
    );
    assert_eq!(code, 0, "{out}");
    assert!(statuses(&out).iter().all(|(_, s)| s == "PASS"));
}

#[test]
fn corelab_triangle() {
    let d = TempDir::new().unwrap();
    let core = write(&d, "core.txt", "dims: a b\n-1/4 1/2\n1/2 -1/4\n3/4 3/4\n");
    let dhat = write(&d, "dhat.txt", "dims: a b\n0 0\n1 0\n0 1\n");
    let tags = write(&d, "tags.txt", "2: -1 -1 | -1\n");
    let (code, out) = run_in(
        d.path(),
        &[
            "corelab",
            "--core",
            &core,
            "--dhat",
            &dhat,
            "--tags",
            &tags,
            "--max-arity",
            "3",
        ],
    );
    assert_eq!(code, 0, "{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["separation"]["bound"], 3);
    assert_eq!(v["edges"].as_array().unwrap().len(), 3);
}
