//! Presentations of finite-index subgroups (Reidemeister–Schreier) and a
//! conservative Tietze simplifier.

use std::collections::VecDeque;

use thiserror::Error;

use crate::enumerate::CosetTable;
use crate::words::{Alphabet, Letter, Presentation, Word, MAX_GENERATORS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubgroupError {
    #[error("coset table is incomplete")]
    IncompleteTable,
    #[error("coset table does not match the presentation's alphabet")]
    WidthMismatch,
    #[error("subgroup needs {0} generators, more than the {MAX_GENERATORS} available names")]
    TooManyGenerators(usize),
}

/// A subgroup presentation over fresh generators `a, b, c, ...`, with each
/// generator's expression in the ambient group.
#[derive(Clone, Debug)]
pub struct SubgroupPresentation {
    pub presentation: Presentation,
    pub source_hash: String,
    pub table: CosetTable,
    /// Ambient word for each fresh generator.
    pub schreier_map: Vec<Word>,
    /// Rewritten conjugates of the ambient relators, one per (coset, relator),
    /// before cyclic reduction and deletion of trivial ones.
    pub schreier_relators: Vec<Word>,
    /// Schreier generator of each edge `(coset, ambient generator)`, indexed
    /// `coset * generators + generator`; `None` on spanning-tree edges.
    /// Numbering is that of the unsimplified presentation.
    pub edges: Vec<Option<usize>>,
}

impl SubgroupPresentation {
    pub fn index(&self) -> usize {
        self.table.index()
    }

    /// Ambient word represented by a word in the fresh generators.
    pub fn expand(&self, w: &Word) -> Word {
        let mut out = Vec::new();
        for l in w.letters() {
            let img = &self.schreier_map[l.generator()];
            if l.is_inverse() {
                out.extend(img.invert().into_letters());
            } else {
                out.extend(img.letters().iter().copied());
            }
        }
        Word::from_letters(out).free_reduce()
    }
}

/// Shortlex-least representative of every coset, by breadth-first search from
/// coset 0 trying letters in alphabet order. Also returns the tree edges.
fn transversal(table: &CosetTable, alphabet: &Alphabet) -> (Vec<Word>, Vec<Option<(usize, Letter)>>) {
    let n = table.index();
    let mut reps: Vec<Option<Word>> = vec![None; n];
    let mut parent = vec![None; n];
    reps[0] = Some(Word::empty());
    let mut queue = VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        for x in alphabet.letters() {
            let d = table.get(c, x) as usize;
            if reps[d].is_none() {
                let mut w = reps[c].clone().unwrap().into_letters();
                w.push(x);
                reps[d] = Some(Word::from_letters(w));
                parent[d] = Some((c, x));
                queue.push_back(d);
            }
        }
    }
    (
        reps.into_iter().map(|r| r.expect("table is connected")).collect(),
        parent,
    )
}

/// Reidemeister–Schreier presentation of the subgroup stabilizing coset 0.
pub fn subgroup_presentation(p: &Presentation, table: &CosetTable) -> Result<SubgroupPresentation, SubgroupError> {
    let alphabet = p.alphabet();
    if table.width() != alphabet.letter_count() {
        return Err(SubgroupError::WidthMismatch);
    }
    if !table.is_complete() {
        return Err(SubgroupError::IncompleteTable);
    }
    let table = table.standardized();
    let n = table.index();
    let g = p.generator_count();
    let (reps, parent) = transversal(&table, alphabet);

    // generator id for each (coset, ambient generator) that is not a tree edge
    let mut gen_id = vec![None; n * g];
    let mut schreier_map = Vec::new();
    for c in 0..n {
        for k in 0..g {
            let x = Letter::new(k, false);
            let d = table.get(c, x) as usize;
            let tree = parent[d] == Some((c, x)) || parent[c] == Some((d, x.inverse()));
            if !tree {
                gen_id[c * g + k] = Some(schreier_map.len());
                let w = reps[c].concat(&Word::from_letters(vec![x])).concat(&reps[d].invert());
                schreier_map.push(w.free_reduce());
            }
        }
    }
    let count = schreier_map.len();
    if g > 0 {
        assert_eq!(count, n * (g - 1) + 1, "Schreier index formula");
    }
    if count > MAX_GENERATORS {
        return Err(SubgroupError::TooManyGenerators(count));
    }

    let rewrite = |start: usize, r: &Word| -> Word {
        let mut c = start;
        let mut out = Vec::new();
        for &x in r.letters() {
            let k = x.generator();
            if x.is_inverse() {
                let prev = table.get(c, x) as usize;
                if let Some(id) = gen_id[prev * g + k] {
                    out.push(Letter::new(id, true));
                }
                c = prev;
            } else {
                if let Some(id) = gen_id[c * g + k] {
                    out.push(Letter::new(id, false));
                }
                c = table.get(c, x) as usize;
            }
        }
        debug_assert_eq!(c, start);
        Word::from_letters(out).free_reduce()
    };
    let mut schreier_relators = Vec::with_capacity(n * p.relators().len());
    for c in 0..n {
        for r in p.relators() {
            schreier_relators.push(rewrite(c, r));
        }
    }
    assert_eq!(schreier_relators.len(), n * p.relators().len());

    Ok(SubgroupPresentation {
        presentation: Presentation::new(Alphabet::standard(count), schreier_relators.clone()),
        source_hash: p.hash(),
        table,
        schreier_map,
        schreier_relators,
        edges: gen_id,
    })
}

fn total_length(rels: &[Word]) -> usize {
    rels.iter().map(Word::len).sum()
}

/// Canonical representative of a relator up to cyclic permutation and inversion.
fn relator_key(w: &Word) -> Vec<Letter> {
    let mut best: Option<Vec<Letter>> = None;
    for v in [w.clone(), w.invert()] {
        let l = v.letters();
        for s in 0..l.len().max(1) {
            let rot: Vec<Letter> = l[s..].iter().chain(&l[..s]).copied().collect();
            if best.as_ref().is_none_or(|b| rot < *b) {
                best = Some(rot);
            }
        }
    }
    best.unwrap_or_default()
}

fn tidy(rels: Vec<Word>) -> Vec<Word> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for r in rels {
        let r = r.cyclic_reduce();
        if !r.is_empty() && seen.insert(relator_key(&r)) {
            out.push(r);
        }
    }
    out
}

fn substitute(w: &Word, generator: usize, image: &Word) -> Word {
    let mut out = Vec::new();
    for &l in w.letters() {
        if l.generator() == generator {
            if l.is_inverse() {
                out.extend(image.invert().into_letters());
            } else {
                out.extend(image.letters().iter().copied());
            }
        } else {
            out.push(l);
        }
    }
    Word::from_letters(out).free_reduce()
}

/// Eliminates generators that occur exactly once in some relator, removes
/// trivial and duplicate relators, and stops when no elimination keeps the
/// total relator length within `budget` times the starting length.
pub fn tietze_simplify(sp: &SubgroupPresentation, budget: f64) -> SubgroupPresentation {
    let mut rels = tidy(sp.presentation.relators().to_vec());
    let mut map = sp.schreier_map.clone();
    let cap = ((total_length(&rels) as f64) * budget).max(total_length(&rels) as f64) as usize;

    loop {
        let mut best: Option<(usize, Vec<Word>)> = None;
        for (ri, r) in rels.iter().enumerate() {
            for k in 0..map.len() {
                let hits: Vec<usize> = (0..r.len()).filter(|&i| r.letters()[i].generator() == k).collect();
                if hits.len() != 1 {
                    continue;
                }
                // r = u x^e v, so x^e = u⁻¹ v⁻¹
                let i = hits[0];
                let l = r.letters();
                let u = Word::from_letters(l[..i].to_vec());
                let v = Word::from_letters(l[i + 1..].to_vec());
                let mut image = u.invert().concat(&v.invert()).free_reduce();
                if l[i].is_inverse() {
                    image = image.invert();
                }
                let next: Vec<Word> = rels
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != ri)
                    .map(|(_, w)| substitute(w, k, &image))
                    .collect();
                let next = tidy(next);
                if total_length(&next) > cap {
                    continue;
                }
                if best.as_ref().is_none_or(|(_, b)| total_length(&next) < total_length(b)) {
                    best = Some((k, next));
                }
            }
        }
        let Some((k, next)) = best else { break };
        // drop generator k and shift higher ones down
        let shift = |w: &Word| {
            Word::from_letters(
                w.letters()
                    .iter()
                    .map(|&l| {
                        let g = l.generator();
                        debug_assert_ne!(g, k);
                        Letter::new(if g > k { g - 1 } else { g }, l.is_inverse())
                    })
                    .collect(),
            )
        };
        rels = next.iter().map(shift).collect();
        map.remove(k);
    }

    SubgroupPresentation {
        presentation: Presentation::new(Alphabet::standard(map.len()), rels),
        source_hash: sp.source_hash.clone(),
        table: sp.table.clone(),
        schreier_map: map,
        schreier_relators: sp.schreier_relators.clone(),
        edges: sp.edges.clone(),
    }
}
