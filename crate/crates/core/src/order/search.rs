//! Backtracking search for a partial positive cone inside a ball.
//!
//! A cone `P ⊂ B` must satisfy `(P·P) ∩ B ⊂ P` and `B = P ⊔ P⁻¹ ⊔ {1}`.
//! The search saturates, then branches on the shortlex-least undecided
//! element `g`, trying `g ∈ P` before `g⁻¹ ∈ P`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use crate::enumerate::{Ball, OUT_OF_BALL};
use crate::rewrite::RewritingSystem;

use super::bitset::BitSet;

/// How an element entered the cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Absent,
    Assumed,
    Product(u32, u32),
}

/// One derivation step `x · y = product`, in ball ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub x: u32,
    pub y: u32,
    pub product: u32,
}

/// A partial positive cone with the derivation of each member.
#[derive(Clone, Debug)]
pub struct ConeState {
    members: BitSet,
    /// Inverses of members, plus every element outside the search universe.
    blocked: BitSet,
    origin: Vec<Origin>,
    order: Vec<u32>,
    /// Members whose pairwise products have all been taken.
    closed: usize,
    depth: usize,
    assumptions: Vec<u32>,
}

impl ConeState {
    /// Empty cone. Elements whose inverse falls outside the ball (possible
    /// only for non-confluent systems) are never branched on.
    pub fn new(ball: &Ball) -> ConeState {
        let n = ball.len();
        let mut blocked = BitSet::new(n);
        for id in 1..n as u32 {
            if ball.inverse(id) == OUT_OF_BALL {
                blocked.insert(id);
            }
        }
        ConeState {
            members: BitSet::new(n),
            blocked,
            origin: vec![Origin::Absent; n],
            order: Vec::new(),
            closed: 0,
            depth: 0,
            assumptions: Vec::new(),
        }
    }

    /// Cone of a subgroup: only elements of `universe` are ever branched on.
    /// The universe must be closed under products and inverses.
    pub fn restricted(ball: &Ball, universe: &BitSet) -> ConeState {
        let mut s = ConeState::new(ball);
        for id in 1..ball.len() as u32 {
            if !universe.contains(id) {
                s.blocked.insert(id);
            }
        }
        s
    }

    /// Cone with the given elements assumed positive (not yet saturated).
    pub fn seeded(ball: &Ball, seed: &[u32], universe: Option<&BitSet>) -> ConeState {
        let mut s = match universe {
            Some(u) => ConeState::restricted(ball, u),
            None => ConeState::new(ball),
        };
        for &g in seed {
            s.assume(ball, g);
        }
        s
    }

    pub fn members(&self) -> &BitSet {
        &self.members
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn assumptions(&self) -> &[u32] {
        &self.assumptions
    }

    pub fn origin(&self, id: u32) -> Origin {
        self.origin[id as usize]
    }

    pub fn contains(&self, id: u32) -> bool {
        self.members.contains(id)
    }

    pub fn assume(&mut self, ball: &Ball, g: u32) {
        self.assumptions.push(g);
        self.insert(ball, g, Origin::Assumed);
    }

    fn insert(&mut self, ball: &Ball, z: u32, origin: Origin) -> bool {
        if !self.members.insert(z) {
            return false;
        }
        let inv = ball.inverse(z);
        if inv != OUT_OF_BALL {
            self.blocked.insert(inv);
        }
        self.origin[z as usize] = origin;
        self.order.push(z);
        true
    }

    /// First element of `B − (P ∪ P⁻¹ ∪ {1})` in shortlex order.
    pub fn first_undecided(&self) -> Option<u32> {
        self.members.first_unset_in_union(&self.blocked)
    }

    /// Derivation chain ending in `x · y = 1`, listing each product once,
    /// operands before the products that use them.
    pub fn chain_to(&self, x: u32, y: u32) -> Vec<Step> {
        let mut seen = BitSet::new(self.members.len());
        let mut steps = Vec::new();
        let mut stack: Vec<(u32, bool)> = vec![(y, false), (x, false)];
        while let Some((z, expanded)) = stack.pop() {
            match self.origin[z as usize] {
                Origin::Product(a, b) => {
                    if expanded {
                        steps.push(Step { x: a, y: b, product: z });
                    } else if seen.insert(z) {
                        stack.push((z, true));
                        stack.push((b, false));
                        stack.push((a, false));
                    }
                }
                Origin::Assumed | Origin::Absent => {}
            }
        }
        steps.push(Step { x, y, product: 0 });
        steps
    }
}

/// Least superset of the cone closed under in-ball products. Returns the
/// pair whose product is the identity if one is reached.
pub fn saturate(state: &mut ConeState, ball: &Ball, sys: &RewritingSystem) -> Result<(), (u32, u32)> {
    if state.members.contains(0) {
        return Err(identity_pair(state));
    }
    while state.closed < state.order.len() {
        let x = state.order[state.closed];
        state.closed += 1;
        for k in 0..state.closed {
            let y = state.order[k];
            let pairs = [(x, y), (y, x)];
            let pairs = if x == y { &pairs[..1] } else { &pairs[..] };
            for &(p, q) in pairs {
                let z = ball.mul(p, q, sys);
                if z == OUT_OF_BALL {
                    continue;
                }
                if z == 0 {
                    return Err((p, q));
                }
                state.insert(ball, z, Origin::Product(p, q));
            }
        }
    }
    Ok(())
}

fn identity_pair(state: &ConeState) -> (u32, u32) {
    match state.origin[0] {
        Origin::Product(a, b) => (a, b),
        _ => (0, 0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub depth_cap: usize,
    pub max_nodes: usize,
    pub deadline: Option<Instant>,
    pub parallel: bool,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            depth_cap: 16,
            max_nodes: 1_000_000,
            deadline: None,
            parallel: false,
        }
    }
}

/// Refutation tree in ball ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Refutation {
    Leaf(Vec<Step>),
    Branch {
        element: u32,
        positive: Box<Refutation>,
        negative: Box<Refutation>,
    },
}

impl Refutation {
    pub fn leaves(&self) -> usize {
        match self {
            Refutation::Leaf(_) => 1,
            Refutation::Branch { positive, negative, .. } => positive.leaves() + negative.leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Refutation::Leaf(_) => 0,
            Refutation::Branch { positive, negative, .. } => 1 + positive.depth().max(negative.depth()),
        }
    }

    pub fn branch_elements(&self, out: &mut Vec<u32>) {
        if let Refutation::Branch {
            element,
            positive,
            negative,
        } = self
        {
            out.push(*element);
            positive.branch_elements(out);
            negative.branch_elements(out);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cutoff {
    DepthCap,
    BudgetExceeded,
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Refuted(Refutation),
    Consistent(ConeState),
    Cut(Cutoff),
}

struct Searcher<'a> {
    ball: &'a Ball,
    sys: &'a RewritingSystem,
    limits: SearchLimits,
    nodes: AtomicUsize,
}

impl Searcher<'_> {
    fn out_of_budget(&self) -> bool {
        self.nodes.fetch_add(1, Ordering::Relaxed) >= self.limits.max_nodes
            || self.limits.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// `state` is saturated on entry.
    fn explore(&self, state: ConeState) -> SearchOutcome {
        let Some(g) = state.first_undecided() else {
            return SearchOutcome::Consistent(state);
        };
        if state.depth >= self.limits.depth_cap {
            return SearchOutcome::Cut(Cutoff::DepthCap);
        }
        if self.out_of_budget() {
            return SearchOutcome::Cut(Cutoff::BudgetExceeded);
        }
        let g_inv = self.ball.inverse(g);
        let go = |element: u32| {
            let mut child = state.clone();
            child.depth += 1;
            child.assume(self.ball, element);
            match saturate(&mut child, self.ball, self.sys) {
                Err((x, y)) => SearchOutcome::Refuted(Refutation::Leaf(child.chain_to(x, y))),
                Ok(()) => self.explore(child),
            }
        };
        let (pos, neg) = if self.limits.parallel && state.depth < 6 {
            rayon::join(|| go(g), || go(g_inv))
        } else {
            let pos = go(g);
            if let SearchOutcome::Consistent(_) = pos {
                return pos;
            }
            (pos, go(g_inv))
        };
        match (pos, neg) {
            (c @ SearchOutcome::Consistent(_), _) | (_, c @ SearchOutcome::Consistent(_)) => c,
            (SearchOutcome::Refuted(p), SearchOutcome::Refuted(n)) => SearchOutcome::Refuted(Refutation::Branch {
                element: g,
                positive: Box::new(p),
                negative: Box::new(n),
            }),
            (SearchOutcome::Cut(c), _) | (_, SearchOutcome::Cut(c)) => SearchOutcome::Cut(c),
        }
    }
}

/// Searches for a cone in `ball` extending `seed`, over the elements of
/// `universe` (all of the ball when `None`).
pub fn search_cone(
    ball: &Ball,
    sys: &RewritingSystem,
    seed: &[u32],
    universe: Option<&BitSet>,
    limits: &SearchLimits,
) -> SearchOutcome {
    let mut root = ConeState::seeded(ball, seed, universe);
    if let Err((x, y)) = saturate(&mut root, ball, sys) {
        return SearchOutcome::Refuted(Refutation::Leaf(root.chain_to(x, y)));
    }
    let searcher = Searcher {
        ball,
        sys,
        limits: *limits,
        nodes: AtomicUsize::new(0),
    };
    searcher.explore(root)
}
