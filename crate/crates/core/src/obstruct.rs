//! Obstructions to faithful actions on the circle.
//!
//! If a group with finite first homology of odd order acts faithfully on
//! the circle but not on the line, the Euler class of the action has some
//! order n > 1, and the stabilizer of one of the n lifted lines is a
//! left-orderable subgroup of index n. Refuting orderability of the group
//! and of every subgroup of each candidate index rules the action out.

use std::fmt;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::abelian::{h1, AbelianInvariants};
use crate::enumerate::{low_index_subgroups, todd_coxeter, CosetError, CosetTable};
use crate::order::{
    test_left_orderability_with, test_subgroup_orderability, OrderConfig, OrderError, OrderVerdict, VerdictSummary,
};
use crate::rewrite::RewritingSystem;
use crate::words::{parse_presentation, verify_conjugate_product, ConjugateFactor, GeneratorMap, Presentation, Word};

pub const WEEKS: &str = "gens: a b\nrel: bababAbbA\nrel: ababaBaaB";

/// Words equal to the identity in the Weeks group, one per branch of the
/// hand case analysis of its orderability and that of its index-5 kernels.
pub const WEEKS_IDENTITIES: [&str; 10] = [
    "ababaBaaB",
    "bababAbbA",
    "BaBBaaBaaB",
    "a(baB)^3(a^3(baB))^2a^2(baB)(a^3(baB))^2(baB)^2",
    "a^2(abaB)a^2(bAB)^2a(abaB)a(a(abaB))^2(a^2(abaB))^2a(abaB)",
    "a^2((bAB)(bABA)(bAB))^2(bABA)^2a(bAB)(bABA)(bAB)^2(bABA)((bAB)(bABA)(bAB))^2(bAB)",
    "(ab)(a^2bA)^2(ab)^2(a^2bA)^2((ab)^2(ba)^2)^2",
    "(aBA^2)^2(ba)^2(ab)^2(ba)^2(ab)(aBA^2)(ba)^2((ab)^2(ba)^2(ab)^2(ba))^2",
    "((a^2bA)(ab)^2(a^2bA)^2(ab)^2)^2(a^2bA)^2(AB)(ab)(a^2bA)^2(ab)^2(a^2bA)^2(AB)^2",
    "(ab)(AB)^3(aBA^2)^3",
];

/// Elements assumed positive somewhere in that case analysis. Killing any
/// one of them leaves a cyclic group of order 5.
pub const WEEKS_QUOTIENT_WORDS: [&str; 15] = [
    "a", "b", "aB", "bA", "B", "baB", "bAB", "abaB", "bABA", "ba", "a^2bA", "aBA^2", "AB", "a^2bA", "aBA^2",
];

pub fn weeks() -> Presentation {
    parse_presentation(WEEKS).expect("built-in presentation")
}

/// `B a B² a² B a² B = b⁻¹ R₁⁻¹ b · R₂`, as conjugates of the relators.
pub fn weeks_factorization() -> (Word, Vec<ConjugateFactor>) {
    let p = weeks();
    let w = |s: &str| p.parse_word(s).unwrap();
    (
        w("BaBBaaBaaB"),
        vec![
            ConjugateFactor {
                conjugator: w("B"),
                relator: 0,
                inverted: true,
            },
            ConjugateFactor {
                conjugator: Word::empty(),
                relator: 1,
                inverted: false,
            },
        ],
    )
}

/// `a ↦ b, b ↦ a` and `a ↦ aB, b ↦ a`.
pub fn weeks_automorphisms() -> [GeneratorMap; 2] {
    let p = weeks();
    let w = |s: &str| p.parse_word(s).unwrap();
    [
        GeneratorMap::new(vec![w("b"), w("a")]),
        GeneratorMap::new(vec![w("aB"), w("a")]),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "reason", rename_all = "snake_case")]
pub enum Conclusion {
    NoFaithfulCircleAction,
    Inconclusive(String),
    NotApplicable(String),
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conclusion::NoFaithfulCircleAction => f.write_str("NO_FAITHFUL_CIRCLE_ACTION"),
            Conclusion::Inconclusive(r) => write!(f, "INCONCLUSIVE ({r})"),
            Conclusion::NotApplicable(r) => write!(f, "NOT_APPLICABLE ({r})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SubgroupResult {
    pub index: usize,
    /// Position among the classes of this index, in enumeration order.
    pub class: usize,
    pub normal: bool,
    pub table: CosetTable,
    pub verdict: OrderVerdict,
}

#[derive(Clone, Debug)]
pub struct ObstructionConfig {
    pub order: OrderConfig,
    /// Node budget for the low-index enumeration.
    pub subgroup_nodes: usize,
}

impl Default for ObstructionConfig {
    fn default() -> Self {
        ObstructionConfig {
            order: OrderConfig::default(),
            subgroup_nodes: 5_000_000,
        }
    }
}

/// The fields are private so that a conclusion can only come from
/// [`ObstructionReport::assemble`].
#[derive(Clone, Debug)]
pub struct ObstructionReport {
    h1: AbelianInvariants,
    z2_cohomology_trivial: bool,
    ambient: Option<OrderVerdict>,
    n_candidates: Vec<u64>,
    subgroups: Vec<SubgroupResult>,
    enumeration_error: Option<String>,
    conclusion: Conclusion,
}

impl ObstructionReport {
    fn assemble(
        h1: AbelianInvariants,
        ambient: Option<OrderVerdict>,
        n_candidates: Vec<u64>,
        subgroups: Vec<SubgroupResult>,
        enumeration_error: Option<String>,
    ) -> ObstructionReport {
        let z2_cohomology_trivial = h1.rank == 0 && !h1.has_even_torsion();
        let conclusion = if h1.rank > 0 {
            Conclusion::NotApplicable("H1 is infinite".into())
        } else if h1.has_even_torsion() {
            Conclusion::NotApplicable("H1 has even torsion".into())
        } else {
            match &ambient {
                None => Conclusion::Inconclusive("the group itself was not tested".into()),
                Some(v) if !v.is_not_left_orderable() => {
                    Conclusion::Inconclusive(format!("the group itself is {}", v.label()))
                }
                Some(_) => {
                    if let Some(e) = &enumeration_error {
                        Conclusion::Inconclusive(format!("subgroup enumeration failed: {e}"))
                    } else if let Some(s) = subgroups.iter().find(|s| !s.verdict.is_not_left_orderable()) {
                        Conclusion::Inconclusive(format!(
                            "index-{} subgroup #{} is {}",
                            s.index,
                            s.class,
                            s.verdict.label()
                        ))
                    } else {
                        // an index with no subgroups at all leaves no line to stabilize
                        Conclusion::NoFaithfulCircleAction
                    }
                }
            }
        };
        ObstructionReport {
            h1,
            z2_cohomology_trivial,
            ambient,
            n_candidates,
            subgroups,
            enumeration_error,
            conclusion,
        }
    }

    pub fn h1(&self) -> &AbelianInvariants {
        &self.h1
    }

    pub fn z2_cohomology_trivial(&self) -> bool {
        self.z2_cohomology_trivial
    }

    pub fn ambient_verdict(&self) -> Option<&OrderVerdict> {
        self.ambient.as_ref()
    }

    pub fn n_candidates(&self) -> &[u64] {
        &self.n_candidates
    }

    pub fn subgroups(&self) -> &[SubgroupResult] {
        &self.subgroups
    }

    pub fn conclusion(&self) -> &Conclusion {
        &self.conclusion
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Row {
            index: usize,
            class: usize,
            normal: bool,
            #[serde(flatten)]
            verdict: VerdictSummary,
        }
        serde_json::json!({
            "h1": self.h1.to_string(),
            "h1_invariants": self.h1,
            "z2_cohomology_trivial": self.z2_cohomology_trivial,
            "ambient_verdict": self.ambient.as_ref().map(|v| v.summary()),
            "n_candidates": self.n_candidates,
            "subgroups": self.subgroups.iter().map(|s| Row {
                index: s.index,
                class: s.class,
                normal: s.normal,
                verdict: s.verdict.summary(),
            }).collect::<Vec<_>>(),
            "enumeration_error": self.enumeration_error,
            "conclusion": self.conclusion,
        })
    }
}

fn divisors_above_one(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d != n / d {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small
        .into_iter()
        .chain(large.into_iter().rev())
        .filter(|&d| d > 1)
        .collect()
}

/// Runs the whole pipeline: homology, orderability of the group, then of
/// every subgroup whose index is a possible order of the Euler class.
pub fn circle_obstruction(p: &Presentation, cfg: &ObstructionConfig) -> Result<ObstructionReport, OrderError> {
    let homology = h1(p);
    if homology.rank > 0 || homology.has_even_torsion() {
        return Ok(ObstructionReport::assemble(
            homology,
            None,
            Vec::new(),
            Vec::new(),
            None,
        ));
    }
    let exponent = homology.exponent().expect("finite");
    let Some(exponent) = exponent.to_u64() else {
        return Ok(ObstructionReport::assemble(
            homology,
            None,
            Vec::new(),
            Vec::new(),
            Some("exponent of H1 is too large".into()),
        ));
    };
    let n_candidates = divisors_above_one(exponent);

    let sys = RewritingSystem::knuth_bendix(p, &cfg.order.kb);
    let ambient = test_left_orderability_with(p, &sys, &cfg.order)?.verdict;

    let mut classes = Vec::new();
    let mut enumeration_error = None;
    if let Some(&top) = n_candidates.last() {
        match usize::try_from(top)
            .ok()
            .ok_or_else(|| "index too large".to_string())
            .and_then(|top| low_index_subgroups(p, top, cfg.subgroup_nodes).map_err(|e| e.to_string()))
        {
            Ok(all) => {
                for n in &n_candidates {
                    for (class, c) in all.iter().filter(|c| c.index() as u64 == *n).enumerate() {
                        classes.push((c.index(), class, c.normal, c.table.clone()));
                    }
                }
            }
            Err(e) => enumeration_error = Some(e),
        }
    }

    let run = |(index, class, normal, table): &(usize, usize, bool, CosetTable)| {
        test_subgroup_orderability(p, &sys, table, &cfg.order).map(|rep| SubgroupResult {
            index: *index,
            class: *class,
            normal: *normal,
            table: table.clone(),
            verdict: rep.verdict,
        })
    };
    let subgroups: Vec<SubgroupResult> = if cfg.order.parallel {
        classes.par_iter().map(run).collect::<Result<_, _>>()?
    } else {
        classes.iter().map(run).collect::<Result<_, _>>()?
    };
    Ok(ObstructionReport::assemble(
        homology,
        Some(ambient),
        n_candidates,
        subgroups,
        enumeration_error,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityResult {
    pub word: String,
    /// Normal form under the (possibly truncated) rewriting system.
    pub normal_form: String,
    pub trivial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factorization_ok: Option<bool>,
}

impl IdentityResult {
    pub fn holds(&self) -> bool {
        self.trivial && self.factorization_ok != Some(false)
    }
}

pub struct IdentityCase {
    pub word: Word,
    pub factorization: Option<Vec<ConjugateFactor>>,
}

/// Rewrites each word. Every rule of `sys` holds in the group, so reaching
/// the empty word proves the identity even when `sys` is not confluent; a
/// nonempty normal form is only conclusive for a confluent system.
pub fn verify_identity_corpus(p: &Presentation, sys: &RewritingSystem, corpus: &[IdentityCase]) -> Vec<IdentityResult> {
    corpus
        .iter()
        .map(|case| {
            let nf = sys.rewrite(&case.word);
            IdentityResult {
                word: p.render_word(&case.word),
                normal_form: p.render_word(&nf),
                trivial: nf.is_empty(),
                factorization_ok: case
                    .factorization
                    .as_ref()
                    .map(|f| verify_conjugate_product(&case.word, f, p)),
            }
        })
        .collect()
}

/// True when every relator maps to a word that `sys` rewrites to the identity.
pub fn is_endomorphism(p: &Presentation, sys: &RewritingSystem, m: &GeneratorMap) -> bool {
    m.images().len() == p.generator_count() && p.relators().iter().all(|r| sys.rewrite(&m.apply(r)).is_empty())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuotientResult {
    pub word: String,
    /// Order of the quotient, or `None` when enumeration overflowed.
    pub order: Option<usize>,
    pub h1: String,
    pub cyclic: bool,
}

/// For each `w`, the order of `G / ⟨⟨w⟩⟩` by coset enumeration over the
/// trivial subgroup; `cyclic` is set when it is `ℤ/n`.
pub fn check_quotients_cyclic(p: &Presentation, words: &[Word], n: u64, max_cosets: usize) -> Vec<QuotientResult> {
    words
        .iter()
        .map(|w| {
            let q = p.with_relators(std::slice::from_ref(w));
            let order = match todd_coxeter(&q, &[], max_cosets) {
                Ok(t) => Some(t.index()),
                Err(CosetError::Overflow { .. }) => None,
            };
            let inv = h1(&q);
            let cyclic_n = inv.rank == 0 && inv.torsion.len() == 1 && inv.torsion[0] == n.into();
            QuotientResult {
                word: p.render_word(w),
                order,
                h1: inv.to_string(),
                cyclic: order == Some(n as usize) && cyclic_n,
            }
        })
        .collect()
}
