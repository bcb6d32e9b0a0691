//! The `conesearch` command line.

pub mod batch;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand};
use serde_json::json;

use conesearch::abelian::{epimorphisms_to_cyclic, h1};
use conesearch::enumerate::{low_index_subgroups, Ball, BallError, BallStats};
use conesearch::obstruct::{
    check_quotients_cyclic, circle_obstruction, is_endomorphism, verify_identity_corpus, weeks, weeks_automorphisms,
    weeks_factorization, IdentityCase, ObstructionConfig, WEEKS_IDENTITIES, WEEKS_QUOTIENT_WORDS,
};
use conesearch::order::{check_certificate, test_left_orderability, Certificate, OrderError, OrderVerdict};
use conesearch::rewrite::{RewriteError, RewritingSystem};
use conesearch::subgrp::{subgroup_presentation, tietze_simplify};
use conesearch::words::{parse_presentation, Presentation, Word};

use config::{KbArgs, RunConfig, SearchArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NOT_CONFLUENT: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;
pub const EXIT_BAD_CERTIFICATE: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "conesearch",
    version,
    about = "Left-orderability and circle-action obstructions for finitely presented groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a proof that the group is not left-orderable
    Check {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Stop searching after this many seconds
        #[arg(long)]
        timeout: Option<u64>,
        /// Where to write the certificate (default: next to the input)
        #[arg(long)]
        cert: Option<PathBuf>,
        #[arg(long)]
        no_cert: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run shortlex completion and report the system
    Kb {
        file: PathBuf,
        #[command(flatten)]
        kb: KbArgs,
        #[arg(long)]
        strict_confluence: bool,
        /// Write the rules in text form
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Ball sizes and growth rate
    Ball {
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        radius: usize,
        /// First radius of the growth fit
        #[arg(long)]
        fit_from: Option<usize>,
        #[arg(long, default_value_t = 2_000_000)]
        max_ball: usize,
        #[command(flatten)]
        kb: KbArgs,
        #[arg(long)]
        json: bool,
    },
    /// First homology
    Homology {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Presentations of the kernels of all maps onto Z/n
    Kernels {
        file: PathBuf,
        #[arg(long)]
        index: u64,
        /// Eliminate generators where this does not lengthen the relators much
        #[arg(long)]
        simplify: bool,
        /// Write each kernel to `<dir>/kernel-<k>.grp`
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Subgroups of small index, up to conjugacy
    LowIndex {
        file: PathBuf,
        #[arg(long)]
        max_index: usize,
        #[arg(long, default_value_t = 5_000_000)]
        max_nodes: usize,
        /// Print each coset table
        #[arg(long)]
        tables: bool,
        #[arg(long)]
        json: bool,
    },
    /// Try to rule out faithful actions on the circle
    CircleObstruction {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 5_000_000)]
        subgroup_nodes: usize,
        #[arg(long)]
        json: bool,
    },
    /// Check a certificate against a presentation
    VerifyCert {
        file: PathBuf,
        cert: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check that words are trivial (the Weeks case identities by default)
    Identities {
        file: PathBuf,
        words: Vec<String>,
        #[command(flatten)]
        kb: KbArgs,
        #[arg(long)]
        json: bool,
    },
    /// Order of the quotient by each word (the Weeks case words by default)
    Quotients {
        file: PathBuf,
        words: Vec<String>,
        /// Expected cyclic order
        #[arg(long, default_value_t = 5)]
        order: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_cosets: usize,
        #[arg(long)]
        json: bool,
    },
    /// Orderability table for every `.grp` file in a directory
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Per-file time limit in seconds
        #[arg(long, default_value_t = 300)]
        timeout: u64,
        /// Results cache (default: `<dir>/.conesearch-cache.json`)
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        no_cache: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    NotConfluent(String),
    Resource(String),
    Certificate(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_PARSE,
            Failure::NotConfluent(_) => EXIT_NOT_CONFLUENT,
            Failure::Resource(_) => EXIT_RESOURCE,
            Failure::Certificate(_) => EXIT_BAD_CERTIFICATE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::NotConfluent(m) | Failure::Resource(m) | Failure::Certificate(m) => m,
        }
    }
}

impl From<OrderError> for Failure {
    fn from(e: OrderError) -> Failure {
        match e {
            OrderError::Rewrite(e @ RewriteError::NotConfluent { .. }) => Failure::NotConfluent(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Input(e.to_string())
    }
}

type Out<'a> = &'a mut dyn Write;
type Res = Result<i32, Failure>;

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Results go to `out`, diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: Out, err: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn read_presentation(path: &Path) -> Result<Presentation, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_presentation(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_words(p: &Presentation, words: &[String]) -> Result<Vec<Word>, Failure> {
    words
        .iter()
        .map(|w| p.parse_word(w).map_err(|e| Failure::Input(format!("word {w:?}: {e}"))))
        .collect()
}

fn print_json(out: Out, v: &serde_json::Value) -> std::io::Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json"))
}

fn cert_path(input: &Path) -> PathBuf {
    let stem = input.file_stem().unwrap_or_default().to_string_lossy();
    input.with_file_name(format!("{stem}.cert.json"))
}

fn search_config(a: &SearchArgs, json: bool) -> Result<RunConfig, Failure> {
    RunConfig::from_args(a, json).map_err(Failure::Input)
}

fn dispatch(cmd: Command, out: Out) -> Res {
    match cmd {
        Command::Check {
            file,
            search,
            timeout,
            cert,
            no_cert,
            json,
        } => check(&file, &search, timeout, cert, no_cert, json, out),
        Command::Kb {
            file,
            kb,
            strict_confluence,
            rules,
            json,
        } => {
            let p = read_presentation(&file)?;
            let sys = RewritingSystem::knuth_bendix(&p, &kb.budget());
            let stats = sys.stats();
            if let Some(path) = &rules {
                std::fs::write(path, sys.to_text(&p.hash()))?;
            }
            if json {
                print_json(
                    out,
                    &json!({
                        "presentation_hash": p.hash(),
                        "status": sys.status(),
                        "rules": stats.rules,
                        "max_rules": kb.max_rules,
                        "max_lhs_len": kb.max_lhs,
                    }),
                )?;
            } else {
                writeln!(out, "{}: {} rules", sys.status(), stats.rules)?;
                if !sys.is_confluent() {
                    for u in sys.unresolved_pairs(3) {
                        writeln!(
                            out,
                            "  unresolved: {} -> {} / {}",
                            p.render_word(&u.word),
                            p.render_word(&u.left),
                            p.render_word(&u.right)
                        )?;
                    }
                }
            }
            if strict_confluence && !sys.is_confluent() {
                sys.require_confluent()
                    .map_err(|e| Failure::NotConfluent(e.to_string()))?;
            }
            Ok(EXIT_OK)
        }
        Command::Ball {
            file,
            radius,
            fit_from,
            max_ball,
            kb,
            json,
        } => {
            let p = read_presentation(&file)?;
            let sys = RewritingSystem::knuth_bendix(&p, &kb.budget());
            let limits = conesearch::enumerate::BallLimits {
                max_elements: max_ball,
                allow_bounded: true,
                table_limit: 0,
            };
            let ball = match Ball::build(&sys, radius, &limits) {
                Ok(b) => b,
                Err(e @ BallError::ResourceExceeded { .. }) => return Err(Failure::Resource(e.to_string())),
                Err(e) => return Err(Failure::Input(e.to_string())),
            };
            let sizes = ball.sizes();
            let from = fit_from.unwrap_or(if radius >= 7 {
                4
            } else {
                radius.saturating_sub(3).max(1)
            });
            let fit = (from < radius).then(|| BallStats::fit(&sizes, from, radius));
            if json {
                print_json(
                    out,
                    &json!({
                        "sizes": sizes,
                        "exact": ball.is_exact(),
                        "fit": fit,
                    }),
                )?;
            } else {
                write!(out, "{}", ball.sizes_csv())?;
                if let Some(f) = fit {
                    writeln!(
                        out,
                        "# growth C = {:.4} over radii {}..{} (A = {:.3})",
                        f.growth, f.fit_from, f.fit_to, f.scale
                    )?;
                }
                if !ball.is_exact() {
                    writeln!(out, "# completion is not confluent; sizes are upper bounds")?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Homology { file, json } => {
            let p = read_presentation(&file)?;
            let inv = h1(&p);
            if json {
                print_json(out, &json!({ "h1": inv.to_string(), "invariants": inv }))?;
            } else {
                writeln!(out, "H1 = {inv}")?;
            }
            Ok(EXIT_OK)
        }
        Command::Kernels {
            file,
            index,
            simplify,
            out_dir,
            json,
        } => {
            let p = read_presentation(&file)?;
            if index < 2 {
                return Err(Failure::Input("--index must be at least 2".into()));
            }
            let mut rows = Vec::new();
            for (k, e) in epimorphisms_to_cyclic(&p, index).iter().enumerate() {
                let sp = subgroup_presentation(&p, &e.kernel_table()).map_err(|e| Failure::Resource(e.to_string()))?;
                let sp = if simplify { tietze_simplify(&sp, 1.5) } else { sp };
                let images: Vec<String> = p
                    .alphabet()
                    .names()
                    .iter()
                    .zip(&e.images)
                    .map(|(c, x)| format!("{c}->{x}"))
                    .collect();
                let header = format!("# kernel of {} mod {index}", images.join(" "));
                let gens: Vec<String> = sp
                    .presentation
                    .alphabet()
                    .names()
                    .iter()
                    .zip(&sp.schreier_map)
                    .map(|(c, w)| format!("# {c} = {}", p.render_word(w)))
                    .collect();
                let text = format!("{header}\n{}\n{}", gens.join("\n"), sp.presentation.render());
                if let Some(dir) = &out_dir {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join(format!("kernel-{k}.grp")), &text)?;
                }
                rows.push((e.clone(), sp, text));
            }
            if json {
                let v: Vec<_> = rows
                    .iter()
                    .map(|(e, sp, _)| {
                        json!({
                            "images": e.images,
                            "modulus": e.modulus,
                            "generators": sp.schreier_map.iter().map(|w| p.render_word(w)).collect::<Vec<_>>(),
                            "presentation": sp.presentation.render(),
                        })
                    })
                    .collect();
                print_json(out, &json!(v))?;
            } else {
                for (_, _, text) in &rows {
                    writeln!(out, "{text}")?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::LowIndex {
            file,
            max_index,
            max_nodes,
            tables,
            json,
        } => {
            let p = read_presentation(&file)?;
            if max_index == 0 {
                return Err(Failure::Input("--max-index must be positive".into()));
            }
            let classes =
                low_index_subgroups(&p, max_index, max_nodes).map_err(|e| Failure::Resource(e.to_string()))?;
            if json {
                let v: Vec<_> = classes
                    .iter()
                    .map(|c| {
                        let mut row = json!({ "index": c.index(), "normal": c.normal });
                        if tables {
                            row["table"] = json!(c.table.to_text(&p));
                        }
                        row
                    })
                    .collect();
                print_json(out, &json!(v))?;
            } else {
                for n in 1..=max_index {
                    let of: Vec<_> = classes.iter().filter(|c| c.index() == n).collect();
                    let normal = of.iter().filter(|c| c.normal).count();
                    writeln!(out, "index {n}: {} classes ({normal} normal)", of.len())?;
                    if tables {
                        for c in of {
                            write!(out, "{}", c.table.to_text(&p))?;
                        }
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::CircleObstruction {
            file,
            search,
            subgroup_nodes,
            json,
        } => {
            let p = read_presentation(&file)?;
            let cfg = search_config(&search, json)?;
            let report = circle_obstruction(
                &p,
                &ObstructionConfig {
                    order: cfg.order_config(None),
                    subgroup_nodes,
                },
            )?;
            if json {
                print_json(out, &report.to_json())?;
            } else {
                writeln!(out, "H1 = {}", report.h1())?;
                writeln!(out, "H1(Z/2) trivial: {}", report.z2_cohomology_trivial())?;
                if let Some(v) = report.ambient_verdict() {
                    writeln!(out, "group: {} at radius {}", v.label(), v.radius())?;
                }
                let cands: Vec<String> = report.n_candidates().iter().map(|n| n.to_string()).collect();
                writeln!(out, "candidate indices: {}", cands.join(", "))?;
                for s in report.subgroups() {
                    writeln!(
                        out,
                        "index {} #{}{}: {} at radius {}",
                        s.index,
                        s.class,
                        if s.normal { " (normal)" } else { "" },
                        s.verdict.label(),
                        s.verdict.radius()
                    )?;
                }
                writeln!(out, "{}", report.conclusion())?;
            }
            Ok(EXIT_OK)
        }
        Command::VerifyCert { file, cert, json } => {
            let p = read_presentation(&file)?;
            let text =
                std::fs::read_to_string(&cert).map_err(|e| Failure::Certificate(format!("{}: {e}", cert.display())))?;
            let c = Certificate::from_json(&text).map_err(|e| Failure::Certificate(e.to_string()))?;
            match check_certificate(&c, &p) {
                Ok(s) => {
                    if json {
                        print_json(
                            out,
                            &json!({ "valid": true, "leaves": s.leaves, "steps": s.steps, "depth": s.depth, "radius": c.radius }),
                        )?;
                    } else {
                        writeln!(out, "VALID ({} leaves, {} steps, depth {})", s.leaves, s.steps, s.depth)?;
                    }
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    if json {
                        print_json(
                            out,
                            &json!({ "valid": false, "location": e.location, "message": e.message }),
                        )?;
                    } else {
                        writeln!(out, "INVALID")?;
                    }
                    Err(Failure::Certificate(e.to_string()))
                }
            }
        }
        Command::Identities { file, words, kb, json } => {
            let p = read_presentation(&file)?;
            let builtin = words.is_empty();
            let corpus: Vec<IdentityCase> = if builtin {
                if p != weeks() {
                    return Err(Failure::Input(
                        "no words given, and the built-in identities are for the Weeks presentation".into(),
                    ));
                }
                let (target, factors) = weeks_factorization();
                WEEKS_IDENTITIES
                    .iter()
                    .map(|s| {
                        let word = p.alphabet().parse_expression(s).expect("built-in word");
                        let factorization = (word == target).then(|| factors.clone());
                        IdentityCase { word, factorization }
                    })
                    .collect()
            } else {
                parse_words(&p, &words)?
                    .into_iter()
                    .map(|word| IdentityCase {
                        word,
                        factorization: None,
                    })
                    .collect()
            };
            let sys = RewritingSystem::knuth_bendix(&p, &kb.budget());
            let results = verify_identity_corpus(&p, &sys, &corpus);
            let maps: Vec<bool> = if builtin {
                weeks_automorphisms()
                    .iter()
                    .map(|m| is_endomorphism(&p, &sys, m))
                    .collect()
            } else {
                Vec::new()
            };
            if json {
                print_json(out, &json!({ "identities": results, "automorphisms": maps }))?;
            } else {
                for r in &results {
                    let fact = match r.factorization_ok {
                        Some(true) => ", factorization checks",
                        Some(false) => ", factorization FAILS",
                        None => "",
                    };
                    if r.trivial {
                        writeln!(out, "ok    {}{fact}", r.word)?;
                    } else {
                        writeln!(out, "FAIL  {} -> {}{fact}", r.word, r.normal_form)?;
                    }
                }
                for (name, ok) in ["a->b b->a", "a->aB b->a"].iter().zip(&maps) {
                    writeln!(out, "{}  map {name}", if *ok { "ok  " } else { "FAIL" })?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Quotients {
            file,
            words,
            order,
            max_cosets,
            json,
        } => {
            let p = read_presentation(&file)?;
            let ws = if words.is_empty() {
                if p != weeks() {
                    return Err(Failure::Input(
                        "no words given, and the built-in words are for the Weeks presentation".into(),
                    ));
                }
                WEEKS_QUOTIENT_WORDS
                    .iter()
                    .map(|s| p.alphabet().parse_expression(s).expect("built-in word"))
                    .collect()
            } else {
                parse_words(&p, &words)?
            };
            let results = check_quotients_cyclic(&p, &ws, order, max_cosets);
            if json {
                print_json(out, &json!(results))?;
            } else {
                for r in &results {
                    let ord = r.order.map(|n| n.to_string()).unwrap_or_else(|| "overflow".into());
                    writeln!(
                        out,
                        "{}  {}  order {ord}, H1 = {}",
                        if r.cyclic { "ok  " } else { "FAIL" },
                        r.word,
                        r.h1
                    )?;
                }
            }
            Ok(if results.iter().any(|r| r.order.is_none()) {
                EXIT_RESOURCE
            } else {
                EXIT_OK
            })
        }
        Command::Batch {
            dir,
            search,
            timeout,
            cache,
            no_cache,
            json,
        } => {
            let cfg = search_config(&search, json)?;
            let cache = if no_cache {
                None
            } else {
                Some(cache.unwrap_or_else(|| dir.join(".conesearch-cache.json")))
            };
            let report = batch::run_batch(&dir, &cfg, Duration::from_secs(timeout), cache.as_deref())?;
            if json {
                print_json(out, &json!(report.rows))?;
            } else {
                write!(out, "{}", report.render_table())?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn check(
    file: &Path,
    search: &SearchArgs,
    timeout: Option<u64>,
    cert: Option<PathBuf>,
    no_cert: bool,
    json: bool,
    out: Out,
) -> Res {
    let p = read_presentation(file)?;
    let cfg = search_config(search, json)?;
    let rep = test_left_orderability(&p, &cfg.order_config(timeout.map(Duration::from_secs)))?;
    let mut written = None;
    if let (Some(c), false) = (rep.verdict.certificate(), no_cert) {
        let path = cert.unwrap_or_else(|| cert_path(file));
        std::fs::write(&path, c.to_json())?;
        written = Some(path);
    }
    if json {
        print_json(
            out,
            &json!({
                "presentation_hash": p.hash(),
                "rewriting": rep.rewriting,
                "attempts": rep.attempts,
                "verdict": rep.verdict.summary(),
                "certificate": written.as_ref().map(|p| p.display().to_string()),
            }),
        )?;
    } else {
        writeln!(out, "{p}")?;
        writeln!(
            out,
            "rewriting: {}, {} rules",
            rep.rewriting.status, rep.rewriting.rules
        )?;
        for a in &rep.attempts {
            writeln!(
                out,
                "radius {}: ball {}, {} ({} ms)",
                a.radius, a.ball_size, a.outcome, a.millis
            )?;
        }
        match &rep.verdict {
            OrderVerdict::NotLeftOrderable(c) => {
                writeln!(out, "NOT_LEFT_ORDERABLE at radius {}", c.radius)?;
                if let Some(path) = &written {
                    writeln!(out, "certificate: {}", path.display())?;
                }
            }
            OrderVerdict::ConsistentAtRadius { radius, cone } => {
                writeln!(out, "CONSISTENT at radius {radius} (cone of {} elements)", cone.len())?;
            }
            OrderVerdict::Inconclusive { radius, reason } => {
                writeln!(out, "INCONCLUSIVE at radius {radius} ({reason:?})")?;
            }
        }
    }
    Ok(EXIT_OK)
}
