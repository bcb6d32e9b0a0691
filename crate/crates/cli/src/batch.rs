//! Orderability table over a directory of presentation files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use conesearch::abelian::h1;
use conesearch::order::{test_left_orderability, OrderVerdict};
use conesearch::words::parse_presentation;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRow {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hash: Option<String>,
    pub h1: String,
    /// `N` not left-orderable, `O` a cone survived, blank inconclusive.
    pub ord: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    pub millis: u128,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BatchReport {
    pub rows: Vec<BatchRow>,
}

impl BatchReport {
    pub fn render_table(&self) -> String {
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let h = self.rows.iter().map(|r| r.h1.len()).max().unwrap_or(2).max(2);
        let mut s = format!("{:<w$}  {:<h$}  Ord  radius  time\n", "name", "H1");
        for r in &self.rows {
            let radius = r.radius.map(|x| x.to_string()).unwrap_or_default();
            let _ = write!(
                s,
                "{:<w$}  {:<h$}  {:<3}  {:<6}  {:.1}s",
                r.name,
                r.h1,
                r.ord,
                radius,
                r.millis as f64 / 1000.0
            );
            if let Some(e) = &r.error {
                let _ = write!(s, "  {e}");
            }
            s.push('\n');
        }
        s
    }
}

type Cache = BTreeMap<String, BatchRow>;

fn load_cache(path: &Path) -> Cache {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default()
}

fn run_one(path: &Path, cfg: &RunConfig, timeout: Duration, cache: &Cache) -> (Option<String>, BatchRow) {
    let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let t0 = Instant::now();
    let failed = |error: String, hash: Option<String>| BatchRow {
        name: name.clone(),
        hash,
        h1: String::new(),
        ord: "error".into(),
        radius: None,
        millis: t0.elapsed().as_millis(),
        error: Some(error),
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return (None, failed(e.to_string(), None)),
    };
    let p = match parse_presentation(&text) {
        Ok(p) => p,
        Err(e) => return (None, failed(e.to_string(), None)),
    };
    let key = format!("{}|{}|timeout={}", p.hash(), cfg.fingerprint(), timeout.as_secs());
    if let Some(row) = cache.get(&key) {
        let mut row = row.clone();
        row.name = name;
        return (Some(key), row);
    }
    let homology = h1(&p).to_string();
    let row = match test_left_orderability(&p, &cfg.order_config(Some(timeout))) {
        Ok(rep) => BatchRow {
            name,
            hash: Some(p.hash()),
            h1: homology,
            ord: match &rep.verdict {
                OrderVerdict::NotLeftOrderable(_) => "N",
                OrderVerdict::ConsistentAtRadius { .. } => "O",
                OrderVerdict::Inconclusive { .. } => "",
            }
            .into(),
            radius: Some(rep.verdict.radius()),
            millis: t0.elapsed().as_millis(),
            error: None,
        },
        Err(e) => failed(e.to_string(), Some(p.hash())),
    };
    (Some(key), row)
}

/// Runs every `.grp` file in `dir`. Per-file failures become error rows.
/// Rows come back sorted by file name whatever order they ran in.
pub fn run_batch(
    dir: &Path,
    cfg: &RunConfig,
    timeout: Duration,
    cache_path: Option<&Path>,
) -> std::io::Result<BatchReport> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "grp"))
        .collect();
    files.sort();
    let mut cache = cache_path.map(load_cache).unwrap_or_default();
    let results: Vec<(Option<String>, BatchRow)> = if cfg.deterministic {
        files.iter().map(|f| run_one(f, cfg, timeout, &cache)).collect()
    } else {
        files.par_iter().map(|f| run_one(f, cfg, timeout, &cache)).collect()
    };
    let mut rows = Vec::with_capacity(results.len());
    for (key, row) in results {
        if let Some(k) = key {
            cache.insert(k, row.clone());
        }
        rows.push(row);
    }
    if let Some(path) = cache_path {
        std::fs::write(path, serde_json::to_string_pretty(&cache).expect("cache serializes"))?;
    }
    Ok(BatchReport { rows })
}
