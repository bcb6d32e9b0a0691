//! Positive-cone search, verdicts and non-orderability certificates.

pub mod bitset;
pub mod certificate;
pub mod search;
pub mod witness;

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::enumerate::{Ball, BallError, BallLimits, CosetTable, OUT_OF_BALL};
use crate::rewrite::{KbBudget, RewriteError, RewritingSystem};
use crate::words::{Presentation, Word};

use bitset::BitSet;
pub use certificate::{
    check_certificate, check_certificate_with, CertNode, CertStep, Certificate, CertificateError, CheckSummary,
    RewritingInfo, SubgroupSpec, WitnessEntry,
};
use search::{search_cone, Cutoff, Refutation, SearchLimits, SearchOutcome};
use witness::WitnessFinder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Assume the first nontrivial generator is positive.
    First,
    /// Assume its inverse is positive instead.
    FirstInverse,
    /// Assume nothing.
    Unseeded,
}

#[derive(Clone, Debug)]
pub struct OrderConfig {
    /// Strictly increasing radii to try.
    pub radii: Vec<usize>,
    pub depth_cap: usize,
    pub max_nodes: usize,
    pub kb: KbBudget,
    pub ball: BallLimits,
    pub seed: SeedMode,
    pub parallel: bool,
    /// Refuse to search unless completion is confluent.
    pub strict_confluence: bool,
    /// Largest subgroup index used when looking for nontriviality witnesses.
    pub witness_index: usize,
    pub deadline: Option<Instant>,
}

impl Default for OrderConfig {
    fn default() -> Self {
        OrderConfig {
            radii: vec![3, 4, 5, 6],
            depth_cap: 16,
            max_nodes: 1_000_000,
            kb: KbBudget::default(),
            ball: BallLimits {
                allow_bounded: true,
                ..BallLimits::default()
            },
            seed: SeedMode::First,
            parallel: false,
            strict_confluence: false,
            witness_index: 5,
            deadline: None,
        }
    }
}

impl OrderConfig {
    pub fn screening() -> OrderConfig {
        OrderConfig {
            depth_cap: 5,
            ..OrderConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InconclusiveReason {
    DepthCap,
    BudgetExceeded,
    /// A refutation was found but some element it branches on could not be
    /// shown to be nontrivial.
    Unwitnessed,
}

/// One-sided verdict: only non-orderability is ever proved.
#[derive(Clone, Debug)]
pub enum OrderVerdict {
    NotLeftOrderable(Box<Certificate>),
    /// A partial cone of the ball exists; this proves nothing.
    ConsistentAtRadius {
        radius: usize,
        cone: Vec<Word>,
    },
    Inconclusive {
        radius: usize,
        reason: InconclusiveReason,
    },
}

impl OrderVerdict {
    pub fn is_not_left_orderable(&self) -> bool {
        matches!(self, OrderVerdict::NotLeftOrderable(_))
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            OrderVerdict::NotLeftOrderable(c) => Some(c),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OrderVerdict::NotLeftOrderable(_) => "NOT_LEFT_ORDERABLE",
            OrderVerdict::ConsistentAtRadius { .. } => "CONSISTENT",
            OrderVerdict::Inconclusive { .. } => "INCONCLUSIVE",
        }
    }

    pub fn radius(&self) -> usize {
        match self {
            OrderVerdict::NotLeftOrderable(c) => c.radius,
            OrderVerdict::ConsistentAtRadius { radius, .. } | OrderVerdict::Inconclusive { radius, .. } => *radius,
        }
    }
}

/// Compact, serializable form of a verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerdictSummary {
    pub verdict: &'static str,
    pub radius: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaves: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<InconclusiveReason>,
}

impl OrderVerdict {
    pub fn summary(&self) -> VerdictSummary {
        VerdictSummary {
            verdict: self.label(),
            radius: self.radius(),
            leaves: self.certificate().map(|c| c.tree.leaves()),
            reason: match self {
                OrderVerdict::Inconclusive { reason, .. } => Some(*reason),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusAttempt {
    pub radius: usize,
    pub ball_size: usize,
    pub outcome: String,
    pub millis: u128,
}

#[derive(Clone, Debug)]
pub struct OrderReport {
    pub verdict: OrderVerdict,
    pub rewriting: RewritingInfo,
    pub attempts: Vec<RadiusAttempt>,
}

#[derive(Debug, Error)]
pub enum OrderError {
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn validate(cfg: &OrderConfig) -> Result<(), OrderError> {
    if cfg.radii.is_empty() || cfg.radii.windows(2).any(|w| w[0] >= w[1]) || cfg.radii[0] == 0 {
        return Err(OrderError::Config(
            "radius schedule must be positive and strictly increasing".into(),
        ));
    }
    if cfg.depth_cap == 0 || cfg.max_nodes == 0 || cfg.kb.max_rules == 0 || cfg.kb.max_lhs_len == 0 {
        return Err(OrderError::Config("caps must be positive".into()));
    }
    Ok(())
}

/// Completion, then the cone search at each radius in turn.
pub fn test_left_orderability(p: &Presentation, cfg: &OrderConfig) -> Result<OrderReport, OrderError> {
    validate(cfg)?;
    let sys = RewritingSystem::knuth_bendix(p, &cfg.kb);
    if cfg.strict_confluence {
        sys.require_confluent()?;
    }
    search_orderability(p, &sys, None, cfg)
}

/// As [`test_left_orderability`], reusing a system the caller completed
/// from `p` under `cfg.kb`.
pub fn test_left_orderability_with(
    p: &Presentation,
    sys: &RewritingSystem,
    cfg: &OrderConfig,
) -> Result<OrderReport, OrderError> {
    validate(cfg)?;
    if cfg.strict_confluence {
        sys.require_confluent()?;
    }
    search_orderability(p, sys, None, cfg)
}

/// Orderability of the subgroup fixing coset 0 of `table`, searched inside the
/// balls of the ambient group. `sys` must come from `knuth_bendix(p, &cfg.kb)`.
pub fn test_subgroup_orderability(
    p: &Presentation,
    sys: &RewritingSystem,
    table: &CosetTable,
    cfg: &OrderConfig,
) -> Result<OrderReport, OrderError> {
    validate(cfg)?;
    if cfg.strict_confluence {
        sys.require_confluent()?;
    }
    search_orderability(p, sys, Some(table), cfg)
}

fn rewriting_info(sys: &RewritingSystem, budget: &KbBudget) -> RewritingInfo {
    RewritingInfo {
        status: sys.status(),
        max_rules: budget.max_rules,
        max_lhs_len: budget.max_lhs_len,
        rules: sys.stats().rules,
    }
}

/// Nontriviality bookkeeping shared across radii.
struct Witnesses<'a> {
    confluent: bool,
    finder: WitnessFinder<'a>,
    cache: HashMap<Word, Option<witness::Witness>>,
}

impl Witnesses<'_> {
    /// `Some(None)` when no witness is needed.
    fn get(&mut self, w: &Word) -> Option<Option<witness::Witness>> {
        if w.is_empty() {
            return None;
        }
        if self.confluent {
            return Some(None);
        }
        if !self.cache.contains_key(w) {
            let found = self.finder.find(w);
            self.cache.insert(w.clone(), found);
        }
        self.cache[w].clone().map(Some)
    }
}

fn search_orderability(
    p: &Presentation,
    sys: &RewritingSystem,
    table: Option<&CosetTable>,
    cfg: &OrderConfig,
) -> Result<OrderReport, OrderError> {
    let info = rewriting_info(sys, &cfg.kb);
    let mut wit = Witnesses {
        confluent: sys.is_confluent(),
        finder: WitnessFinder::new(p, cfg.witness_index),
        cache: HashMap::new(),
    };
    let limits = SearchLimits {
        depth_cap: cfg.depth_cap,
        max_nodes: cfg.max_nodes,
        deadline: cfg.deadline,
        parallel: cfg.parallel,
    };
    let ball_limits = BallLimits {
        allow_bounded: !cfg.strict_confluence,
        ..cfg.ball
    };
    let mut attempts = Vec::new();
    let mut last = None;
    for &r in &cfg.radii {
        let t0 = Instant::now();
        let ball = match Ball::with_table(sys, r, &ball_limits) {
            Ok(b) => b,
            Err(BallError::ResourceExceeded { .. }) => {
                attempts.push(RadiusAttempt {
                    radius: r,
                    ball_size: 0,
                    outcome: "ball too large".into(),
                    millis: t0.elapsed().as_millis(),
                });
                last = Some(OrderVerdict::Inconclusive {
                    radius: r,
                    reason: InconclusiveReason::BudgetExceeded,
                });
                break;
            }
            Err(BallError::Rewrite(e)) => return Err(e.into()),
        };
        let universe = table.map(|t| {
            BitSet::from_ids(
                ball.len(),
                (0..ball.len() as u32).filter(|&id| t.trace(0, ball.rep(id)) == Some(0)),
            )
        });
        let seed = choose_seed(p, sys, &ball, universe.as_ref(), cfg.seed, &mut wit);
        let outcome = search_cone(&ball, sys, &seed, universe.as_ref(), &limits);
        let verdict = match outcome {
            SearchOutcome::Refuted(tree) => match build_certificate(p, &ball, &info, table, &seed, &tree, &mut wit) {
                Some(cert) => {
                    if let Err(e) = check_certificate_with(&cert, p, sys) {
                        panic!("emitted certificate fails to check: {e}");
                    }
                    OrderVerdict::NotLeftOrderable(Box::new(cert))
                }
                None => OrderVerdict::Inconclusive {
                    radius: r,
                    reason: InconclusiveReason::Unwitnessed,
                },
            },
            SearchOutcome::Consistent(state) => OrderVerdict::ConsistentAtRadius {
                radius: r,
                cone: state.members().iter().map(|id| ball.rep(id).clone()).collect(),
            },
            SearchOutcome::Cut(c) => OrderVerdict::Inconclusive {
                radius: r,
                reason: match c {
                    Cutoff::DepthCap => InconclusiveReason::DepthCap,
                    Cutoff::BudgetExceeded => InconclusiveReason::BudgetExceeded,
                },
            },
        };
        attempts.push(RadiusAttempt {
            radius: r,
            ball_size: ball.len(),
            outcome: match &verdict {
                OrderVerdict::NotLeftOrderable(c) => format!("refuted ({} leaves)", c.tree.leaves()),
                OrderVerdict::ConsistentAtRadius { cone, .. } => format!("consistent (|P| = {})", cone.len()),
                OrderVerdict::Inconclusive { reason, .. } => format!("inconclusive ({reason:?})"),
            },
            millis: t0.elapsed().as_millis(),
        });
        let done = verdict.is_not_left_orderable();
        last = Some(verdict);
        if done || cfg.deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
    }
    Ok(OrderReport {
        verdict: last.expect("at least one radius"),
        rewriting: info,
        attempts,
    })
}

fn choose_seed(
    p: &Presentation,
    sys: &RewritingSystem,
    ball: &Ball,
    universe: Option<&BitSet>,
    mode: SeedMode,
    wit: &mut Witnesses,
) -> Vec<u32> {
    if mode == SeedMode::Unseeded {
        return Vec::new();
    }
    let usable = |id: u32, wit: &mut Witnesses| {
        id != 0
            && ball.inverse(id) != OUT_OF_BALL
            && universe.is_none_or(|u| u.contains(id))
            && wit.get(ball.rep(id)).is_some()
    };
    let pick = match universe {
        // the ambient group: the first generator that is provably nontrivial
        None => p.alphabet().letters().step_by(2).find_map(|x| {
            let nf = sys.rewrite(&Word::from_letters(vec![x]));
            ball.lookup(nf.letters()).filter(|&id| usable(id, wit))
        }),
        Some(_) => (1..ball.len() as u32).find(|&id| usable(id, wit)),
    };
    match (pick, mode) {
        (Some(id), SeedMode::FirstInverse) => vec![ball.inverse(id)],
        (Some(id), _) => vec![id],
        (None, _) => Vec::new(),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_certificate(
    p: &Presentation,
    ball: &Ball,
    info: &RewritingInfo,
    table: Option<&CosetTable>,
    seed: &[u32],
    tree: &Refutation,
    wit: &mut Witnesses,
) -> Option<Certificate> {
    let render = |id: u32| p.render_word(ball.rep(id));
    let mut decided = seed.to_vec();
    tree.branch_elements(&mut decided);
    let mut witnesses = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for id in decided {
        if !seen.insert(id) {
            continue;
        }
        if let Some(w) = wit.get(ball.rep(id))? {
            witnesses.push(WitnessEntry {
                element: render(id),
                witness: w,
            });
        }
    }
    fn node(t: &Refutation, render: &dyn Fn(u32) -> String) -> CertNode {
        match t {
            Refutation::Leaf(steps) => CertNode::Leaf {
                steps: steps
                    .iter()
                    .map(|s| CertStep {
                        x: render(s.x),
                        y: render(s.y),
                        product: render(s.product),
                    })
                    .collect(),
            },
            Refutation::Branch {
                element,
                positive,
                negative,
            } => CertNode::Branch {
                element: render(*element),
                positive: Box::new(node(positive, render)),
                negative: Box::new(node(negative, render)),
            },
        }
    }
    Some(Certificate {
        format: certificate::FORMAT.to_string(),
        presentation: p.render(),
        presentation_hash: p.hash(),
        letter_order: p.alphabet().order_string(),
        rewriting: info.clone(),
        radius: ball.radius(),
        subgroup: table.map(SubgroupSpec::from_table),
        seed: seed.iter().map(|&id| render(id)).collect(),
        tree: node(tree, &render),
        witnesses,
    })
}
