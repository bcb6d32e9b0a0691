//! Non-orderability certificates: serialization and an independent checker.
//!
//! A certificate is a decision tree. Each internal node splits on the sign of
//! an element; each leaf derives the identity as a product of elements known
//! to be positive on that path. The checker rebuilds the rewriting system
//! from the presentation and replays every product.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::enumerate::{CosetTable, UNDEFINED};
use crate::rewrite::{KbBudget, RewritingSystem, Status};
use crate::words::{parse_presentation, Letter, Presentation, Word};

use super::witness::Witness;

pub const FORMAT: &str = "conesearch-certificate/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewritingInfo {
    pub status: Status,
    pub max_rules: usize,
    pub max_lhs_len: usize,
    pub rules: usize,
}

/// The subgroup stabilizing coset 0 of a permutation action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub index: usize,
    /// One row per coset, one column per letter in alphabet order.
    pub cosets: Vec<Vec<u32>>,
}

impl SubgroupSpec {
    pub fn from_table(t: &CosetTable) -> SubgroupSpec {
        let letters: Vec<Letter> = (0..t.width()).map(Letter::from_index).collect();
        SubgroupSpec {
            index: t.index(),
            cosets: (0..t.index())
                .map(|c| letters.iter().map(|&x| t.get(c, x)).collect())
                .collect(),
        }
    }

    pub fn to_table(&self, width: usize) -> Option<CosetTable> {
        if self.index == 0 || self.cosets.len() != self.index {
            return None;
        }
        let mut entries = Vec::with_capacity(self.index * width);
        for row in &self.cosets {
            if row.len() != width || row.iter().any(|&d| d == UNDEFINED || d as usize >= self.index) {
                return None;
            }
            entries.extend_from_slice(row);
        }
        Some(CosetTable::from_entries(width, entries))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertStep {
    pub x: String,
    pub y: String,
    pub product: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertNode {
    Branch {
        element: String,
        positive: Box<CertNode>,
        negative: Box<CertNode>,
    },
    Leaf {
        steps: Vec<CertStep>,
    },
}

impl CertNode {
    pub fn leaves(&self) -> usize {
        match self {
            CertNode::Leaf { .. } => 1,
            CertNode::Branch { positive, negative, .. } => positive.leaves() + negative.leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            CertNode::Leaf { .. } => 0,
            CertNode::Branch { positive, negative, .. } => 1 + positive.depth().max(negative.depth()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub element: String,
    #[serde(flatten)]
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub format: String,
    pub presentation: String,
    pub presentation_hash: String,
    pub letter_order: String,
    pub rewriting: RewritingInfo,
    pub radius: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroup: Option<SubgroupSpec>,
    pub seed: Vec<String>,
    pub tree: CertNode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<WitnessEntry>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Certificate, CertificateError> {
        serde_json::from_str(text).map_err(|e| CertificateError::new("document", e.to_string()))
    }

    pub fn budget(&self) -> KbBudget {
        KbBudget {
            max_rules: self.rewriting.max_rules,
            max_lhs_len: self.rewriting.max_lhs_len,
            deadline: None,
        }
    }
}

/// First problem found in a certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateError {
    pub location: String,
    pub message: String,
}

impl CertificateError {
    fn new(location: impl Into<String>, message: impl Into<String>) -> CertificateError {
        CertificateError {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for CertificateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for CertificateError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckSummary {
    pub leaves: usize,
    pub steps: usize,
    pub depth: usize,
}

/// Verifies `cert` against `p`, rebuilding the rewriting system from scratch.
pub fn check_certificate(cert: &Certificate, p: &Presentation) -> Result<CheckSummary, CertificateError> {
    let sys = RewritingSystem::knuth_bendix(p, &cert.budget());
    check_certificate_with(cert, p, &sys)
}

/// As [`check_certificate`], with a system the caller has already completed
/// from `p` under the certificate's own budget.
pub fn check_certificate_with(
    cert: &Certificate,
    p: &Presentation,
    sys: &RewritingSystem,
) -> Result<CheckSummary, CertificateError> {
    if cert.format != FORMAT {
        return Err(CertificateError::new("format", format!("expected {FORMAT}")));
    }
    let echoed =
        parse_presentation(&cert.presentation).map_err(|e| CertificateError::new("presentation", e.to_string()))?;
    if echoed != *p || cert.presentation_hash != p.hash() {
        return Err(CertificateError::new(
            "presentation",
            "does not match the input presentation",
        ));
    }
    if cert.letter_order != p.alphabet().order_string() {
        return Err(CertificateError::new("letter_order", "does not match the alphabet"));
    }
    if sys.status() != cert.rewriting.status || sys.stats().rules != cert.rewriting.rules {
        return Err(CertificateError::new(
            "rewriting",
            format!(
                "rebuilt system is {} with {} rules, certificate claims {} with {}",
                sys.status(),
                sys.stats().rules,
                cert.rewriting.status,
                cert.rewriting.rules
            ),
        ));
    }
    let table = match &cert.subgroup {
        None => None,
        Some(spec) => {
            let t = spec
                .to_table(p.alphabet().letter_count())
                .ok_or_else(|| CertificateError::new("subgroup", "malformed coset table"))?;
            if !t.is_valid_action(p) {
                return Err(CertificateError::new("subgroup", "table is not an action of the group"));
            }
            Some(t)
        }
    };
    let checker = Checker {
        p,
        sys,
        table: table.as_ref(),
        witnesses: &cert.witnesses,
    };
    if cert.seed.len() > 1 {
        return Err(CertificateError::new(
            "seed",
            "at most one element may be assumed positive",
        ));
    }
    let mut path = Vec::new();
    for (i, s) in cert.seed.iter().enumerate() {
        let loc = format!("seed[{i}]");
        path.push(checker.decision_element(s, &loc)?);
    }
    let mut summary = CheckSummary {
        leaves: 0,
        steps: 0,
        depth: 0,
    };
    checker.node(&cert.tree, &mut path, "tree", 0, &mut summary)?;
    Ok(summary)
}

struct Checker<'a> {
    p: &'a Presentation,
    sys: &'a RewritingSystem,
    table: Option<&'a CosetTable>,
    witnesses: &'a [WitnessEntry],
}

impl Checker<'_> {
    fn word(&self, s: &str, loc: &str) -> Result<Word, CertificateError> {
        self.p
            .parse_word(s)
            .map_err(|e| CertificateError::new(loc, format!("bad word {s:?}: {e}")))
    }

    /// An element the tree assumes to have a sign: it must be a normal form,
    /// lie in the subgroup and be provably nontrivial.
    fn decision_element(&self, s: &str, loc: &str) -> Result<Word, CertificateError> {
        let w = self.word(s, loc)?;
        if self.sys.rewrite(&w) != w {
            return Err(CertificateError::new(loc, format!("{s} is not in normal form")));
        }
        if w.is_empty() {
            return Err(CertificateError::new(loc, "the identity has no sign"));
        }
        if let Some(t) = self.table {
            if t.trace(0, &w) != Some(0) {
                return Err(CertificateError::new(loc, format!("{s} is not in the subgroup")));
            }
        }
        if !self.sys.is_confluent() {
            let ok = self
                .witnesses
                .iter()
                .any(|e| e.element == s && e.witness.certifies(self.p, &w));
            if !ok {
                return Err(CertificateError::new(
                    loc,
                    format!("no valid nontriviality witness for {s}"),
                ));
            }
        }
        Ok(w)
    }

    fn node(
        &self,
        node: &CertNode,
        path: &mut Vec<Word>,
        loc: &str,
        depth: usize,
        summary: &mut CheckSummary,
    ) -> Result<(), CertificateError> {
        match node {
            CertNode::Branch {
                element,
                positive,
                negative,
            } => {
                let g = self.decision_element(element, &format!("{loc}.element"))?;
                let g_inv = self.sys.rewrite(&g.invert());
                path.push(g);
                self.node(positive, path, &format!("{loc}.positive"), depth + 1, summary)?;
                path.pop();
                path.push(g_inv);
                self.node(negative, path, &format!("{loc}.negative"), depth + 1, summary)?;
                path.pop();
                Ok(())
            }
            CertNode::Leaf { steps } => {
                let mut known: HashSet<Word> = path.iter().cloned().collect();
                if steps.is_empty() {
                    return Err(CertificateError::new(loc, "empty leaf"));
                }
                for (i, st) in steps.iter().enumerate() {
                    let sl = format!("{loc}.steps[{i}]");
                    let x = self.word(&st.x, &sl)?;
                    let y = self.word(&st.y, &sl)?;
                    let z = self.word(&st.product, &sl)?;
                    for (name, w) in [("x", &x), ("y", &y)] {
                        if !known.contains(w) {
                            return Err(CertificateError::new(
                                &sl,
                                format!("{name} = {} is not established as positive", self.p.render_word(w)),
                            ));
                        }
                    }
                    let nf = self.sys.multiply(&x, &y);
                    if nf != z {
                        return Err(CertificateError::new(
                            &sl,
                            format!("product is {}, not {}", self.p.render_word(&nf), st.product),
                        ));
                    }
                    known.insert(z);
                }
                if !steps.last().map(|s| s.product == "1").unwrap_or(false) {
                    return Err(CertificateError::new(loc, "chain does not end at the identity"));
                }
                summary.leaves += 1;
                summary.steps += steps.len();
                summary.depth = summary.depth.max(depth);
                Ok(())
            }
        }
    }
}
