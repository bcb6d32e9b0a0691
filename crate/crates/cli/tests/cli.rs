use std::path::{Path, PathBuf};

use conesearch_cli::run_cli;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("conesearch").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Drops run-dependent fields so output can be compared with a stored file.
fn normalize(v: &mut Value, dir: &str) {
    match v {
        Value::Object(m) => {
            m.remove("millis");
            for x in m.values_mut() {
                normalize(x, dir);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(|x| normalize(x, dir)),
        Value::String(s) if !dir.is_empty() && s.contains(dir) => *s = s.replace(dir, "<dir>"),
        _ => {}
    }
}

fn golden(name: &str, json: &str, dir: &str) {
    let mut got: Value = serde_json::from_str(json).unwrap_or_else(|e| panic!("{name}: not JSON ({e}): {json}"));
    normalize(&mut got, dir);
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"));
    let want: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(
        got,
        want,
        "{name}: output differs from {}\n{}",
        path.display(),
        serde_json::to_string_pretty(&got).unwrap()
    );
}

fn copy_fixture(dir: &Path, name: &str) -> PathBuf {
    let to = dir.join(name);
    std::fs::copy(fixture(name), &to).unwrap();
    to
}

#[test]
fn check_and_verify_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let file = copy_fixture(tmp.path(), "a2.grp");
    let f = file.to_str().unwrap();
    let (code, out, _) = run(&[
        "check",
        f,
        "--radius",
        "1,2",
        "--seed",
        "none",
        "--deterministic",
        "--json",
    ]);
    assert_eq!(code, 0);
    golden("check_a2", &out, dir);
    let cert = tmp.path().join("a2.cert.json");
    assert!(cert.exists());
    let (code, out, _) = run(&["verify-cert", f, cert.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    golden("verify_cert_a2", &out, dir);

    let (code, out, _) = run(&["verify-cert", f, cert.to_str().unwrap()]);
    assert_eq!((code, out.trim()), (0, "VALID (2 leaves, 2 steps, depth 1)"));

    // the same certificate does not prove anything about another group
    let other = copy_fixture(tmp.path(), "a3.grp");
    let (code, out, err) = run(&["verify-cert", other.to_str().unwrap(), cert.to_str().unwrap()]);
    assert_eq!(code, 5, "{out}{err}");
    assert!(out.contains("INVALID") && err.contains("presentation"));

    std::fs::write(&cert, "{ not json").unwrap();
    assert_eq!(run(&["verify-cert", f, cert.to_str().unwrap()]).0, 5);
}

#[test]
fn check_text_output() {
    let tmp = tempfile::tempdir().unwrap();
    let file = copy_fixture(tmp.path(), "z.grp");
    let (code, out, _) = run(&["check", file.to_str().unwrap(), "--radius", "1,2,3"]);
    assert_eq!(code, 0);
    assert!(out.contains("CONSISTENT at radius 3"), "{out}");
    assert!(!tmp.path().join("z.cert.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.grp");
    std::fs::write(&bad, "gens: a\nrel: ab\n").unwrap();
    let (code, _, err) = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");
    assert_eq!(run(&["homology", "/nonexistent.grp"]).0, 2);
    assert_eq!(run(&["no-such-command"]).0, 2);
    let z = fixture("z.grp");
    assert_eq!(run(&["check", z.to_str().unwrap(), "--radius", "3,2"]).0, 2);

    let w = fixture("weeks.grp");
    let (code, _, err) = run(&["kb", w.to_str().unwrap(), "--max-rules", "50", "--strict-confluence"]);
    assert_eq!(code, 3, "{err}");
    let (code, _, _) = run(&["check", w.to_str().unwrap(), "--max-rules", "50", "--strict-confluence"]);
    assert_eq!(code, 3);
    let (code, _, _) = run(&[
        "ball",
        fixture("f2.grp").to_str().unwrap(),
        "--radius",
        "8",
        "--max-ball",
        "1000",
    ]);
    assert_eq!(code, 4);
    let (code, _, _) = run(&[
        "low-index",
        w.to_str().unwrap(),
        "--max-index",
        "6",
        "--max-nodes",
        "10",
    ]);
    assert_eq!(code, 4);
    let (code, _, _) = run(&["quotients", w.to_str().unwrap(), "1", "--max-cosets", "1000"]);
    assert_eq!(code, 4);
}

#[test]
fn golden_kb_ball_homology() {
    let (code, out, _) = run(&["kb", fixture("z2.grp").to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    golden("kb_z2", &out, "");
    let (code, out, _) = run(&[
        "ball",
        fixture("klein.grp").to_str().unwrap(),
        "--radius",
        "4",
        "--json",
    ]);
    assert_eq!(code, 0);
    golden("ball_klein", &out, "");
    let (code, out, _) = run(&["homology", fixture("weeks.grp").to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    golden("homology_weeks", &out, "");
    let (_, out, _) = run(&["homology", fixture("n1.grp").to_str().unwrap()]);
    assert_eq!(out.trim(), "H1 = Z/5 + Z/25");
}

#[test]
fn golden_subgroups() {
    let w = fixture("weeks.grp");
    let (code, out, _) = run(&["low-index", w.to_str().unwrap(), "--max-index", "5", "--json"]);
    assert_eq!(code, 0);
    golden("low_index_weeks", &out, "");
    let (code, out, _) = run(&["kernels", w.to_str().unwrap(), "--index", "5", "--json"]);
    assert_eq!(code, 0);
    golden("kernels_weeks", &out, "");
}

#[test]
fn kernels_pipe_back_into_check() {
    let tmp = tempfile::tempdir().unwrap();
    let w = fixture("weeks.grp");
    let (code, _, _) = run(&[
        "kernels",
        w.to_str().unwrap(),
        "--index",
        "5",
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let k0 = std::fs::read_to_string(tmp.path().join("kernel-0.grp")).unwrap();
    let n1 = std::fs::read_to_string(fixture("n1.grp")).unwrap();
    assert_eq!(k0, n1);
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 6);
}

#[test]
fn golden_obstruction_small() {
    let (code, out, _) = run(&[
        "circle-obstruction",
        fixture("a3.grp").to_str().unwrap(),
        "--deterministic",
        "--json",
    ]);
    assert_eq!(code, 0);
    golden("circle_obstruction_a3", &out, "");
    let (code, out, _) = run(&["circle-obstruction", fixture("trefoil.grp").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("NOT_APPLICABLE (H1 is infinite)"), "{out}");
}

#[test]
fn golden_identities_and_quotients() {
    let w = fixture("weeks.grp");
    let (code, out, _) = run(&["identities", w.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    golden("identities_weeks", &out, "");
    let (code, out, _) = run(&["quotients", w.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    golden("quotients_weeks", &out, "");
    let (code, out, _) = run(&["identities", w.to_str().unwrap(), "ababaBaaB", "ababaBaaA"]);
    assert_eq!(code, 0);
    assert!(
        out.contains("ok    ababaBaaB") && out.contains("FAIL  ababaBaaA"),
        "{out}"
    );
    // the built-in lists only apply to the Weeks presentation
    assert_eq!(run(&["identities", fixture("z.grp").to_str().unwrap()]).0, 2);
    assert_eq!(
        run(&["quotients", fixture("z.grp").to_str().unwrap(), "aa", "--order", "2"]).0,
        0
    );
}

#[test]
fn batch_rows() {
    let tmp = tempfile::tempdir().unwrap();
    for f in ["a2.grp", "z.grp", "klein.grp"] {
        copy_fixture(tmp.path(), f);
    }
    std::fs::write(tmp.path().join("broken.grp"), "gens: a a\n").unwrap();
    std::fs::write(tmp.path().join("notes.txt"), "ignored").unwrap();
    let d = tmp.path().to_str().unwrap();
    let (code, out, _) = run(&["batch", d, "--deterministic", "--json"]);
    assert_eq!(code, 0);
    golden("batch_small", &out, d);
    assert!(tmp.path().join(".conesearch-cache.json").exists());
    // a second run is served from the cache and agrees
    let (_, again, _) = run(&["batch", d, "--deterministic", "--json"]);
    let strip = |s: &str| {
        let mut v: Value = serde_json::from_str(s).unwrap();
        normalize(&mut v, d);
        v
    };
    assert_eq!(strip(&out), strip(&again));
    let (_, text, _) = run(&["batch", d, "--no-cache"]);
    assert!(text.lines().next().unwrap().contains("Ord"));
    assert_eq!(text.lines().count(), 5);

    let empty = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["batch", empty.path().to_str().unwrap(), "--json", "--no-cache"]);
    assert_eq!((code, out.trim()), (0, "[]"));
}

#[test]
fn help_lists_every_subcommand() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    for c in [
        "check",
        "kb",
        "ball",
        "homology",
        "kernels",
        "low-index",
        "circle-obstruction",
        "verify-cert",
        "identities",
        "quotients",
        "batch",
    ] {
        assert!(out.contains(c), "{c} missing from help");
    }
}
