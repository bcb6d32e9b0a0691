//! Shortlex Knuth–Bendix completion for group presentations.
//!
//! A confluent system gives the word problem: every word rewrites to the
//! shortlex-least word representing the same group element.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::words::{Alphabet, Letter, Presentation, Word};

/// Shortlex comparison under the letter order `a < A < b < B < ...`.
pub fn shortlex_compare(u: &[Letter], v: &[Letter]) -> Ordering {
    u.len().cmp(&v.len()).then_with(|| u.cmp(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Confluent,
    BudgetExceeded,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Confluent => "confluent",
            Status::BudgetExceeded => "budget_exceeded",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KbBudget {
    pub max_rules: usize,
    pub max_lhs_len: usize,
    pub deadline: Option<Instant>,
}

impl Default for KbBudget {
    fn default() -> Self {
        KbBudget {
            max_rules: 20_000,
            max_lhs_len: 60,
            deadline: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("rewriting system is not confluent ({rules} rules when the budget ran out)")]
    NotConfluent { rules: usize },
    #[error("rules file line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Stats {
    pub rules: usize,
    pub max_lhs_len: usize,
}

const NONE: u32 = u32::MAX;

/// Trie over reversed left-hand sides, so that the rule whose lhs is a
/// suffix of the rewrite stack is found by walking the stack backwards.
#[derive(Clone, Debug)]
struct SuffixIndex {
    width: usize,
    children: Vec<u32>,
    rule: Vec<u32>,
}

impl SuffixIndex {
    fn new(width: usize) -> SuffixIndex {
        SuffixIndex {
            width,
            children: vec![NONE; width],
            rule: vec![NONE],
        }
    }

    fn insert(&mut self, lhs: &[Letter], id: u32) {
        let mut node = 0usize;
        for l in lhs.iter().rev() {
            let slot = node * self.width + l.index();
            let next = self.children[slot];
            node = if next == NONE {
                let fresh = self.rule.len();
                self.rule.push(NONE);
                self.children.extend(std::iter::repeat_n(NONE, self.width));
                self.children[slot] = fresh as u32;
                fresh
            } else {
                next as usize
            };
        }
        self.rule[node] = id;
    }

    fn remove(&mut self, lhs: &[Letter]) {
        let mut node = 0usize;
        for l in lhs.iter().rev() {
            node = self.children[node * self.width + l.index()] as usize;
        }
        self.rule[node] = NONE;
    }

    #[inline]
    fn find_suffix(&self, stack: &[Letter]) -> Option<u32> {
        let mut node = 0usize;
        for l in stack.iter().rev() {
            let next = self.children[node * self.width + l.index()];
            if next == NONE {
                return None;
            }
            node = next as usize;
            let r = self.rule[node];
            if r != NONE {
                return Some(r);
            }
        }
        None
    }
}

#[derive(Clone, Debug)]
struct Rule {
    lhs: Vec<Letter>,
    rhs: Vec<Letter>,
}

/// The rule set plus its suffix index; shared by completion and the final system.
#[derive(Clone, Debug)]
struct RuleSet {
    rules: Vec<Rule>,
    active: Vec<bool>,
    index: SuffixIndex,
}

impl RuleSet {
    fn new(letters: usize) -> RuleSet {
        RuleSet {
            rules: Vec::new(),
            active: Vec::new(),
            index: SuffixIndex::new(letters),
        }
    }

    /// Rewrites `input` onto the end of `out`, which must already be irreducible.
    fn reduce_onto(&self, out: &mut Vec<Letter>, input: &[Letter]) {
        let mut pending: Vec<Letter> = input.iter().rev().copied().collect();
        while let Some(x) = pending.pop() {
            out.push(x);
            if let Some(id) = self.index.find_suffix(out) {
                let rule = &self.rules[id as usize];
                out.truncate(out.len() - rule.lhs.len());
                pending.extend(rule.rhs.iter().rev());
            }
        }
    }

    fn reduce(&self, w: &[Letter]) -> Vec<Letter> {
        let mut out = Vec::with_capacity(w.len());
        self.reduce_onto(&mut out, w);
        out
    }

    fn push(&mut self, lhs: Vec<Letter>, rhs: Vec<Letter>) -> usize {
        let id = self.rules.len();
        self.index.insert(&lhs, id as u32);
        self.rules.push(Rule { lhs, rhs });
        self.active.push(true);
        id
    }

    fn deactivate(&mut self, id: usize) {
        self.active[id] = false;
        self.index.remove(&self.rules[id].lhs);
    }
}

fn contains_factor(haystack: &[Letter], needle: &[Letter]) -> bool {
    needle.len() <= haystack.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Proper overlaps: a nonempty proper suffix of `u` equal to a proper prefix of `v`.
/// Yields the two one-step reducts of `u[..|u|-k] · v`.
fn overlaps<'a>(u: &'a Rule, v: &'a Rule) -> impl Iterator<Item = (Vec<Letter>, Vec<Letter>)> + 'a {
    let max = u.lhs.len().min(v.lhs.len());
    (1..max).filter_map(move |k| {
        if u.lhs[u.lhs.len() - k..] != v.lhs[..k] {
            return None;
        }
        let mut left = u.rhs.clone();
        left.extend_from_slice(&v.lhs[k..]);
        let mut right = u.lhs[..u.lhs.len() - k].to_vec();
        right.extend_from_slice(&v.rhs);
        Some((left, right))
    })
}

/// Combined length, insertion number, then the two sides.
type PendingPair = (usize, u64, Vec<Letter>, Vec<Letter>);

struct Completion {
    set: RuleSet,
    pending: BinaryHeap<Reverse<PendingPair>>,
    seq: u64,
    unprocessed: BTreeSet<(usize, usize)>,
    processed: Vec<usize>,
    live: usize,
    budget: KbBudget,
    truncated: bool,
}

impl Completion {
    fn enqueue(&mut self, u: Vec<Letter>, v: Vec<Letter>) {
        self.seq += 1;
        self.pending.push(Reverse((u.len() + v.len(), self.seq, u, v)));
    }

    fn over_budget(&self) -> bool {
        self.live > self.budget.max_rules || self.budget.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Drains pending equations, adding oriented rules. Returns false when a
    /// budget is hit.
    fn drain(&mut self) -> bool {
        while let Some(Reverse((_, _, u, v))) = self.pending.pop() {
            let u = self.set.reduce(&u);
            let v = self.set.reduce(&v);
            let (lhs, rhs) = match shortlex_compare(&u, &v) {
                Ordering::Equal => continue,
                Ordering::Greater => (u, v),
                Ordering::Less => (v, u),
            };
            if lhs.len() > self.budget.max_lhs_len {
                self.truncated = true;
                continue;
            }
            self.add_rule(lhs, rhs);
            if self.over_budget() {
                return false;
            }
        }
        true
    }

    fn add_rule(&mut self, lhs: Vec<Letter>, rhs: Vec<Letter>) {
        let mut dirty_rhs = Vec::new();
        for id in 0..self.set.rules.len() {
            if !self.set.active[id] {
                continue;
            }
            let rule = &self.set.rules[id];
            if contains_factor(&rule.lhs, &lhs) {
                let (l, r) = (rule.lhs.clone(), rule.rhs.clone());
                self.set.deactivate(id);
                self.live -= 1;
                self.unprocessed.remove(&(l.len(), id));
                self.enqueue(l, r);
            } else if contains_factor(&rule.rhs, &lhs) {
                dirty_rhs.push(id);
            }
        }
        let len = lhs.len();
        let id = self.set.push(lhs, rhs);
        self.live += 1;
        self.unprocessed.insert((len, id));
        for d in dirty_rhs {
            let r = self.set.reduce(&self.set.rules[d].rhs);
            self.set.rules[d].rhs = r;
        }
    }

    fn run(&mut self) -> bool {
        loop {
            if !self.drain() {
                return false;
            }
            let Some((len, id)) = self.unprocessed.pop_first() else {
                return true;
            };
            debug_assert_eq!(self.set.rules[id].lhs.len(), len);
            self.processed.retain(|&j| self.set.active[j]);
            self.processed.push(id);
            let mut found = Vec::new();
            let ri = &self.set.rules[id];
            for &j in &self.processed {
                let rj = &self.set.rules[j];
                found.extend(overlaps(ri, rj));
                if j != id {
                    found.extend(overlaps(rj, ri));
                }
            }
            for (u, v) in found {
                self.enqueue(u, v);
            }
        }
    }
}

/// A shortlex rewriting system for a presentation.
#[derive(Clone, Debug)]
pub struct RewritingSystem {
    alphabet: Alphabet,
    set: RuleSet,
    status: Status,
}

/// A critical pair whose two reducts do not join.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnresolvedPair {
    pub word: Word,
    pub left: Word,
    pub right: Word,
}

impl RewritingSystem {
    /// Completes the presentation, seeding `x x⁻¹ -> 1` for every letter and
    /// one equation per relator.
    pub fn knuth_bendix(p: &Presentation, budget: &KbBudget) -> RewritingSystem {
        let alphabet = p.alphabet().clone();
        let letters = alphabet.letter_count();
        let mut kb = Completion {
            set: RuleSet::new(letters),
            pending: BinaryHeap::new(),
            seq: 0,
            unprocessed: BTreeSet::new(),
            processed: Vec::new(),
            live: 0,
            budget: *budget,
            truncated: false,
        };
        for x in alphabet.letters() {
            kb.enqueue(vec![x, x.inverse()], Vec::new());
        }
        // r = uv with |u| >= |v| enters as u = v⁻¹, keeping seed rules short
        for r in p.relators() {
            let l = r.letters();
            let (u, v) = l.split_at(l.len().div_ceil(2));
            let v_inv = v.iter().rev().map(|x| x.inverse()).collect();
            kb.enqueue(u.to_vec(), v_inv);
        }
        let mut finished = kb.run();
        let mut sys = RewritingSystem::from_completion(alphabet.clone(), &kb.set, Status::BudgetExceeded);
        // Completion is fair, so the final check only fails if a budget
        // interrupted it; failed pairs are fed back and completion resumes.
        while finished && !kb.truncated {
            let unresolved = sys.unresolved_pairs(usize::MAX);
            if unresolved.is_empty() {
                sys.status = Status::Confluent;
                break;
            }
            for pair in unresolved {
                kb.enqueue(pair.left.into_letters(), pair.right.into_letters());
            }
            finished = kb.run();
            sys = RewritingSystem::from_completion(alphabet.clone(), &kb.set, Status::BudgetExceeded);
        }
        sys
    }

    fn from_completion(alphabet: Alphabet, set: &RuleSet, status: Status) -> RewritingSystem {
        let mut rules: Vec<Rule> = set
            .rules
            .iter()
            .zip(&set.active)
            .filter(|(_, &a)| a)
            .map(|(r, _)| r.clone())
            .collect();
        rules.sort_by(|a, b| shortlex_compare(&a.lhs, &b.lhs));
        Self::from_rules(alphabet, rules, status)
    }

    fn from_rules(alphabet: Alphabet, rules: Vec<Rule>, status: Status) -> RewritingSystem {
        let mut set = RuleSet::new(alphabet.letter_count());
        for r in rules {
            set.push(r.lhs, r.rhs);
        }
        RewritingSystem { alphabet, set, status }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn is_confluent(&self) -> bool {
        self.status == Status::Confluent
    }

    pub fn require_confluent(&self) -> Result<(), RewriteError> {
        if self.is_confluent() {
            Ok(())
        } else {
            Err(RewriteError::NotConfluent {
                rules: self.set.rules.len(),
            })
        }
    }

    pub fn stats(&self) -> Stats {
        Stats {
            rules: self.set.rules.len(),
            max_lhs_len: self.set.rules.iter().map(|r| r.lhs.len()).max().unwrap_or(0),
        }
    }

    pub fn rules(&self) -> impl Iterator<Item = (Word, Word)> + '_ {
        self.set
            .rules
            .iter()
            .map(|r| (Word::from_letters(r.lhs.clone()), Word::from_letters(r.rhs.clone())))
    }

    pub fn rewrite(&self, w: &Word) -> Word {
        Word::from_letters(self.set.reduce(w.letters()))
    }

    /// Rewrites `suffix` onto an already irreducible `prefix`.
    #[inline]
    pub fn reduce_onto(&self, prefix: &mut Vec<Letter>, suffix: &[Letter]) {
        self.set.reduce_onto(prefix, suffix)
    }

    /// Normal form of `u · v`.
    pub fn multiply(&self, u: &Word, v: &Word) -> Word {
        let mut out = self.set.reduce(u.letters());
        self.set.reduce_onto(&mut out, v.letters());
        Word::from_letters(out)
    }

    /// True when some lhs is a suffix of `w`.
    #[inline]
    pub fn ends_with_redex(&self, w: &[Letter]) -> bool {
        self.set.index.find_suffix(w).is_some()
    }

    pub fn is_irreducible(&self, w: &[Letter]) -> bool {
        (1..=w.len()).all(|k| self.set.index.find_suffix(&w[..k]).is_none())
    }

    pub fn word_equal(&self, u: &Word, v: &Word) -> Result<bool, RewriteError> {
        self.require_confluent()?;
        Ok(self.rewrite(u) == self.rewrite(v))
    }

    /// Exhaustive critical-pair check over the current rules, returning at most
    /// `limit` failures.
    pub fn unresolved_pairs(&self, limit: usize) -> Vec<UnresolvedPair> {
        let mut out = Vec::new();
        let rules = &self.set.rules;
        for u in rules {
            for v in rules {
                let max = u.lhs.len().min(v.lhs.len());
                for k in 1..max {
                    if u.lhs[u.lhs.len() - k..] != v.lhs[..k] {
                        continue;
                    }
                    let mut left = u.rhs.clone();
                    left.extend_from_slice(&v.lhs[k..]);
                    let mut right = u.lhs[..u.lhs.len() - k].to_vec();
                    right.extend_from_slice(&v.rhs);
                    let (nl, nr) = (self.set.reduce(&left), self.set.reduce(&right));
                    if nl != nr {
                        let mut word = u.lhs.clone();
                        word.extend_from_slice(&v.lhs[k..]);
                        out.push(UnresolvedPair {
                            word: Word::from_letters(word),
                            left: Word::from_letters(nl),
                            right: Word::from_letters(nr),
                        });
                        if out.len() >= limit {
                            return out;
                        }
                    }
                }
            }
        }
        out
    }

    /// Structural checks: every rule decreases in shortlex order, no lhs
    /// contains another lhs, every rhs is irreducible.
    pub fn check_structure(&self) -> Result<(), String> {
        let rules = &self.set.rules;
        for (i, r) in rules.iter().enumerate() {
            if shortlex_compare(&r.lhs, &r.rhs) != Ordering::Greater {
                return Err(format!("rule {i} does not decrease"));
            }
            if !self.is_irreducible(&r.rhs) {
                return Err(format!("rule {i} has a reducible rhs"));
            }
            for (j, s) in rules.iter().enumerate() {
                if i != j && contains_factor(&r.lhs, &s.lhs) {
                    return Err(format!("lhs of rule {i} contains lhs of rule {j}"));
                }
            }
        }
        Ok(())
    }

    /// Text form: a header with letter order and status, then `lhs -> rhs` lines.
    pub fn to_text(&self, presentation_hash: &str) -> String {
        let mut s = String::new();
        s.push_str("# shortlex rewriting system\n");
        s.push_str(&format!("presentation: {presentation_hash}\n"));
        s.push_str(&format!("order: {}\n", self.alphabet.order_string()));
        s.push_str(&format!("status: {}\n", self.status));
        for r in &self.set.rules {
            s.push_str(&format!(
                "{} -> {}\n",
                Word::from_letters(r.lhs.clone()).render(&self.alphabet),
                Word::from_letters(r.rhs.clone()).render(&self.alphabet)
            ));
        }
        s
    }

    /// Loads a cached system for `p`. The cache must have been written for the
    /// same presentation; a `confluent` status is re-verified.
    pub fn from_text(text: &str, p: &Presentation) -> Result<RewritingSystem, RewriteError> {
        let err = |line: usize, message: &str| RewriteError::Format {
            line,
            message: message.to_string(),
        };
        let alphabet = p.alphabet().clone();
        let mut status = None;
        let mut seen_hash = false;
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let n = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(h) = line.strip_prefix("presentation:") {
                if h.trim() != p.hash() {
                    return Err(err(n, "written for a different presentation"));
                }
                seen_hash = true;
            } else if let Some(o) = line.strip_prefix("order:") {
                if o.trim() != alphabet.order_string() {
                    return Err(err(n, "letter order mismatch"));
                }
            } else if let Some(s) = line.strip_prefix("status:") {
                status = Some(match s.trim() {
                    "confluent" => Status::Confluent,
                    "budget_exceeded" => Status::BudgetExceeded,
                    _ => return Err(err(n, "unknown status")),
                });
            } else if let Some((l, r)) = line.split_once("->") {
                let lhs = alphabet.parse_word(l).map_err(|e| err(n, &e.to_string()))?;
                let rhs = alphabet.parse_word(r).map_err(|e| err(n, &e.to_string()))?;
                rules.push(Rule {
                    lhs: lhs.into_letters(),
                    rhs: rhs.into_letters(),
                });
            } else {
                return Err(err(n, "expected a header field or `lhs -> rhs`"));
            }
        }
        if !seen_hash {
            return Err(err(0, "missing presentation hash"));
        }
        let status = status.ok_or_else(|| err(0, "missing status"))?;
        let mut sys = RewritingSystem::from_rules(alphabet, rules, Status::BudgetExceeded);
        sys.check_structure().map_err(|m| err(0, &m))?;
        for r in p.relators() {
            if !sys.rewrite(r).is_empty() {
                return Err(err(0, "a relator does not rewrite to 1"));
            }
        }
        if status == Status::Confluent {
            if !sys.unresolved_pairs(1).is_empty() {
                return Err(err(0, "claims confluence but has an unresolved critical pair"));
            }
            sys.status = Status::Confluent;
        }
        Ok(sys)
    }
}
