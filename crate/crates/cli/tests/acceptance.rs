//! One check per acceptance criterion. Each prints a PASS or FAIL line and
//! the target fails if any criterion does.

#[path = "../../core/tests/props/mod.rs"]
mod props;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use conesearch::obstruct::{weeks, weeks_factorization, WEEKS_QUOTIENT_WORDS};
use conesearch::words::verify_conjugate_product;
use conesearch_cli::run_cli;
use serde_json::Value;

const WEEKS_CHECK_LIMIT: Duration = Duration::from_secs(120);
const OBSTRUCTION_LIMIT: Duration = Duration::from_secs(30 * 60);
const SUITE_LIMIT: Duration = Duration::from_secs(10 * 60);
/// Minimal radius at which the Weeks search closes, pinned from the first run.
const WEEKS_MIN_RADIUS: u64 = 3;
const GROWTH_RANGE: (f64, f64) = (2.0, 3.0);
/// Pinned regression value of the fitted growth constant over radii 4..7.
const WEEKS_GROWTH: f64 = 2.7213;
const GROWTH_TOLERANCE: f64 = 5e-4;
/// Largest leaf count accepted as a "small" certificate for a finite cyclic group.
const SMALL_CERT_LEAVES: u64 = 4;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

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

fn run_json(args: &[&str]) -> Result<Value, String> {
    let (code, out, err) = run(args);
    ensure!(code == 0, "{args:?} exited {code}: {err}");
    serde_json::from_str(&out).map_err(|e| format!("{args:?}: bad JSON ({e})"))
}

fn copy_to(dir: &Path, name: &str) -> String {
    let to = dir.join(name);
    std::fs::copy(fixture(name), &to).unwrap();
    to.to_str().unwrap().to_owned()
}

/// Runs `check`, then `verify-cert` on whatever certificate it wrote.
fn check_and_verify(dir: &Path, name: &str, extra: &[&str]) -> Result<Value, String> {
    let file = copy_to(dir, name);
    let mut args = vec!["check", file.as_str(), "--json"];
    args.extend_from_slice(extra);
    let report = run_json(&args)?;
    if let Some(cert) = report["certificate"].as_str() {
        let (code, out, err) = run(&["verify-cert", &file, cert]);
        ensure!(
            code == 0 && out.starts_with("VALID"),
            "{name}: certificate rejected: {out}{err}"
        );
    }
    Ok(report)
}

fn weeks_non_orderable() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let report = check_and_verify(tmp.path(), "weeks.grp", &[])?;
    let elapsed = t0.elapsed();
    let v = &report["verdict"];
    ensure!(v["verdict"] == "NOT_LEFT_ORDERABLE", "verdict {v}");
    let r = v["radius"].as_u64().unwrap();
    ensure!(r <= 6 && r == WEEKS_MIN_RADIUS, "closed at radius {r}");
    ensure!(report["certificate"].is_string(), "no certificate written");
    ensure!(elapsed < WEEKS_CHECK_LIMIT, "took {elapsed:?}");
    let below = check_and_verify(tmp.path(), "weeks.grp", &["--radius", "1,2", "--no-cert"])?;
    ensure!(
        below["verdict"]["verdict"] != "NOT_LEFT_ORDERABLE",
        "closed below the pinned radius"
    );
    Ok(format!(
        "radius {r}, {} leaves, certificate VALID, {:.1}s",
        v["leaves"],
        elapsed.as_secs_f64()
    ))
}

fn circle_obstruction() -> Outcome {
    let t0 = Instant::now();
    let rep = run_json(&["circle-obstruction", fixture("weeks.grp").to_str().unwrap(), "--json"])?;
    let elapsed = t0.elapsed();
    ensure!(
        rep["conclusion"]["kind"] == "no_faithful_circle_action",
        "conclusion {}",
        rep["conclusion"]
    );
    ensure!(rep["h1"] == "Z/5 + Z/5", "H1 = {}", rep["h1"]);
    ensure!(rep["z2_cohomology_trivial"] == true, "Z/2 cohomology");
    ensure!(
        rep["ambient_verdict"]["verdict"] == "NOT_LEFT_ORDERABLE",
        "ambient {}",
        rep["ambient_verdict"]
    );
    ensure!(
        rep["n_candidates"] == serde_json::json!([5]),
        "candidates {}",
        rep["n_candidates"]
    );
    let subs = rep["subgroups"].as_array().unwrap();
    ensure!(subs.len() == 6, "{} index-5 classes", subs.len());
    for s in subs {
        ensure!(s["index"] == 5 && s["normal"] == true, "class {s}");
        ensure!(
            s["verdict"] == "NOT_LEFT_ORDERABLE",
            "class {} is {}",
            s["class"],
            s["verdict"]
        );
    }
    ensure!(elapsed < OBSTRUCTION_LIMIT, "took {elapsed:?}");
    Ok(format!(
        "H1 = Z/5 + Z/5, 6 normal classes all refuted, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn identity_corpus() -> Outcome {
    let w = fixture("weeks.grp");
    let rep = run_json(&["identities", w.to_str().unwrap(), "--json"])?;
    let ids = rep["identities"].as_array().unwrap();
    ensure!(ids.len() == 10, "{} identities", ids.len());
    for r in ids {
        ensure!(
            r["trivial"] == true && r["normal_form"] == "1",
            "{} has normal form {}",
            r["word"],
            r["normal_form"]
        );
    }
    let fact = ids
        .iter()
        .find(|r| r["word"] == "BaBBaaBaaB")
        .ok_or("factorization case missing")?;
    ensure!(fact["factorization_ok"] == true, "factorization rejected");
    ensure!(
        rep["automorphisms"] == serde_json::json!([true, true]),
        "automorphisms {}",
        rep["automorphisms"]
    );

    // one flipped letter must not reduce, and must break the factorization
    let (code, out, _) = run(&["identities", w.to_str().unwrap(), "ababaBaaA"]);
    ensure!(
        code == 0 && out.contains("FAIL  ababaBaaA"),
        "corrupted word accepted: {out}"
    );
    let p = weeks();
    let (_, factors) = weeks_factorization();
    let corrupted = p.alphabet().parse_word("BaBBaaBaaA").unwrap();
    ensure!(
        !verify_conjugate_product(&corrupted, &factors, &p),
        "corrupted factorization accepted"
    );
    Ok("10 identities reduce to 1, factorization checks, corrupted word rejected".into())
}

fn cyclic_quotients() -> Outcome {
    let rep = run_json(&["quotients", fixture("weeks.grp").to_str().unwrap(), "--json"])?;
    let rows = rep.as_array().unwrap();
    ensure!(
        rows.len() == WEEKS_QUOTIENT_WORDS.len() && rows.len() == 15,
        "{} words",
        rows.len()
    );
    for r in rows {
        ensure!(
            r["order"] == 5 && r["cyclic"] == true,
            "{}: order {}, H1 {}",
            r["word"],
            r["order"],
            r["h1"]
        );
    }
    Ok("all 15 quotients have order 5".into())
}

fn soundness_controls() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    for g in ["z.grp", "z2.grp", "f2.grp", "klein.grp", "trefoil.grp"] {
        for seed in ["first", "none"] {
            let rep = check_and_verify(tmp.path(), g, &["--radius", "1,2,3,4,5,6", "--seed", seed])?;
            ensure!(
                rep["verdict"]["verdict"] != "NOT_LEFT_ORDERABLE",
                "{g} refuted with seed {seed}"
            );
            ensure!(rep["certificate"].is_null(), "{g} produced a certificate");
        }
    }
    let a2 = check_and_verify(tmp.path(), "a2.grp", &["--radius", "1,2", "--seed", "none"])?;
    ensure!(
        a2["verdict"]["verdict"] == "NOT_LEFT_ORDERABLE",
        "a^2: {}",
        a2["verdict"]
    );
    ensure!(a2["verdict"]["radius"].as_u64() <= Some(2), "a^2 radius");
    ensure!(
        a2["verdict"]["leaves"] == 2,
        "a^2 has {} leaves",
        a2["verdict"]["leaves"]
    );
    let a3 = check_and_verify(tmp.path(), "a3.grp", &["--radius", "1,2"])?;
    ensure!(
        a3["verdict"]["verdict"] == "NOT_LEFT_ORDERABLE",
        "a^3: {}",
        a3["verdict"]
    );
    let leaves = a3["verdict"]["leaves"].as_u64().unwrap();
    ensure!(leaves <= SMALL_CERT_LEAVES, "a^3 has {leaves} leaves");
    Ok(format!(
        "five orderable controls never refuted; a^2 2 leaves, a^3 {leaves} leaves"
    ))
}

fn ball_growth() -> Outcome {
    let w = fixture("weeks.grp");
    let rep = run_json(&["ball", w.to_str().unwrap(), "--radius", "7", "--json"])?;
    let fit = &rep["fit"];
    ensure!(fit["fit_from"] == 4 && fit["fit_to"] == 7, "fit range {fit}");
    let c = fit["growth"].as_f64().unwrap();
    ensure!(c > GROWTH_RANGE.0 && c < GROWTH_RANGE.1, "C = {c}");
    ensure!(
        (c - WEEKS_GROWTH).abs() <= GROWTH_TOLERANCE,
        "C = {c} drifted from {WEEKS_GROWTH}"
    );
    // completion stops at its rule budget, so check the counts do not move with more rules
    let wider = run_json(&[
        "ball",
        w.to_str().unwrap(),
        "--radius",
        "7",
        "--max-rules",
        "60000",
        "--json",
    ])?;
    ensure!(
        wider["sizes"] == rep["sizes"],
        "sizes move with the rule budget: {} vs {}",
        rep["sizes"],
        wider["sizes"]
    );
    Ok(format!("C = {c:.4} over radii 4..7, sizes {}", rep["sizes"]))
}

fn property_suites() -> Outcome {
    let t0 = Instant::now();
    let suites = props::suites();
    for (name, suite) in &suites {
        suite().map_err(|e| format!("{name}: {e}"))?;
    }
    let elapsed = t0.elapsed();
    ensure!(elapsed < SUITE_LIMIT, "took {elapsed:?}");
    Ok(format!("{} suites, {:.1}s", suites.len(), elapsed.as_secs_f64()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 7] = [
        ("1 weeks non-orderability", weeks_non_orderable),
        ("2 circle obstruction", circle_obstruction),
        ("3 identity corpus", identity_corpus),
        ("4 cyclic quotients", cyclic_quotients),
        ("5 soundness controls", soundness_controls),
        ("6 growth sanity", ball_growth),
        ("7 property suites", property_suites),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(msg) => println!("PASS  {name}: {msg}"),
            Err(msg) => {
                println!("FAIL  {name}: {msg}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
