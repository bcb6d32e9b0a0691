use std::time::{Duration, Instant};

use clap::{Args, ValueEnum};
use conesearch::enumerate::BallLimits;
use conesearch::order::{OrderConfig, SeedMode};
use conesearch::rewrite::KbBudget;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SeedArg {
    First,
    Inverse,
    None,
}

#[derive(Clone, Debug, Args)]
pub struct KbArgs {
    /// Rule budget for completion
    #[arg(long, default_value_t = 20_000)]
    pub max_rules: usize,
    /// Longest left-hand side completion may create
    #[arg(long, default_value_t = 60)]
    pub max_lhs: usize,
}

impl KbArgs {
    pub fn budget(&self) -> KbBudget {
        KbBudget {
            max_rules: self.max_rules,
            max_lhs_len: self.max_lhs,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct SearchArgs {
    /// Comma-separated, strictly increasing radii
    #[arg(long, value_delimiter = ',')]
    pub radius: Option<Vec<usize>>,
    /// Branching depth cap (default 16, or 5 with --screen)
    #[arg(long)]
    pub depth_cap: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_nodes: usize,
    /// Largest ball to build
    #[arg(long, default_value_t = 2_000_000)]
    pub max_ball: usize,
    /// Shallow search; proofs are still checked
    #[arg(long)]
    pub screen: bool,
    /// Single-threaded, reproducible runs
    #[arg(long)]
    pub deterministic: bool,
    /// Element assumed positive before the search
    #[arg(long, value_enum, default_value = "first")]
    pub seed: SeedArg,
    /// Give up unless completion is confluent
    #[arg(long)]
    pub strict_confluence: bool,
    /// Largest subgroup index used to prove elements nontrivial
    #[arg(long, default_value_t = 5)]
    pub witness_index: usize,
    #[command(flatten)]
    pub kb: KbArgs,
}

/// Validated settings for one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub radii: Vec<usize>,
    pub depth_cap: usize,
    pub max_nodes: usize,
    pub kb: KbBudget,
    pub ball: BallLimits,
    pub seed: SeedMode,
    pub witness_index: usize,
    pub strict_confluence: bool,
    pub deterministic: bool,
    pub screen: bool,
    pub json: bool,
}

impl RunConfig {
    pub fn from_args(a: &SearchArgs, json: bool) -> Result<RunConfig, String> {
        let radii = a.radius.clone().unwrap_or_else(|| vec![3, 4, 5, 6]);
        if radii.is_empty() || radii[0] == 0 || radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err("--radius must be positive and strictly increasing".into());
        }
        let depth_cap = a.depth_cap.unwrap_or(if a.screen { 5 } else { 16 });
        if depth_cap == 0 || a.max_nodes == 0 || a.max_ball == 0 || a.kb.max_rules == 0 || a.kb.max_lhs == 0 {
            return Err("caps must be positive".into());
        }
        Ok(RunConfig {
            radii,
            depth_cap,
            max_nodes: a.max_nodes,
            kb: a.kb.budget(),
            ball: BallLimits {
                max_elements: a.max_ball,
                allow_bounded: !a.strict_confluence,
                ..BallLimits::default()
            },
            seed: match a.seed {
                SeedArg::First => SeedMode::First,
                SeedArg::Inverse => SeedMode::FirstInverse,
                SeedArg::None => SeedMode::Unseeded,
            },
            witness_index: a.witness_index,
            strict_confluence: a.strict_confluence,
            deterministic: a.deterministic,
            screen: a.screen,
            json,
        })
    }

    /// Search settings; a timeout bounds the search only, so that completion
    /// stays reproducible for certificate checking.
    pub fn order_config(&self, timeout: Option<Duration>) -> OrderConfig {
        OrderConfig {
            radii: self.radii.clone(),
            depth_cap: self.depth_cap,
            max_nodes: self.max_nodes,
            kb: self.kb,
            ball: self.ball,
            seed: self.seed,
            parallel: !self.deterministic,
            strict_confluence: self.strict_confluence,
            witness_index: self.witness_index,
            deadline: timeout.map(|t| Instant::now() + t),
        }
    }

    /// Everything that can change a verdict, for cache keys.
    pub fn fingerprint(&self) -> String {
        format!(
            "radii={:?};depth={};nodes={};rules={};lhs={};ball={};seed={:?};witness={};strict={}",
            self.radii,
            self.depth_cap,
            self.max_nodes,
            self.kb.max_rules,
            self.kb.max_lhs_len,
            self.ball.max_elements,
            self.seed,
            self.witness_index,
            self.strict_confluence
        )
    }
}
