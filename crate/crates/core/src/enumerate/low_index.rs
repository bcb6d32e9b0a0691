//! Conjugacy classes of subgroups of small index, by backtracking over
//! partial coset tables.
//!
//! Entries are filled in row-major order; every definition is followed by
//! relator deductions, and a partial table survives only if no re-basing at
//! another coset yields a lexicographically smaller table. Complete tables
//! that survive are the first in their conjugacy class.

use thiserror::Error;

use crate::words::{Letter, Presentation};

use super::coset::{CosetTable, UNDEFINED};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LowIndexError {
    #[error("low-index search exceeded {0} nodes")]
    ResourceExceeded(usize),
}

/// One conjugacy class of subgroups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupClass {
    pub table: CosetTable,
    pub normal: bool,
}

impl SubgroupClass {
    pub fn index(&self) -> usize {
        self.table.index()
    }
}

#[derive(Clone)]
struct Partial {
    width: usize,
    cosets: usize,
    t: Vec<u32>,
}

impl Partial {
    #[inline]
    fn at(&self, c: usize, x: usize) -> u32 {
        self.t[c * self.width + x]
    }

    #[inline]
    fn set(&mut self, c: usize, x: usize, d: u32) {
        self.t[c * self.width + x] = d;
    }

    fn first_undefined(&self) -> Option<(usize, usize)> {
        (0..self.cosets * self.width)
            .find(|&k| self.t[k] == UNDEFINED)
            .map(|k| (k / self.width, k % self.width))
    }

    /// Relator deductions to a fixed point; false on a contradiction.
    fn deduce(&mut self, relators: &[Vec<usize>]) -> bool {
        loop {
            let mut changed = false;
            for c in 0..self.cosets {
                for r in relators {
                    let len = r.len();
                    let (mut f, mut i) = (c as u32, 0);
                    while i < len && self.at(f as usize, r[i]) != UNDEFINED {
                        f = self.at(f as usize, r[i]);
                        i += 1;
                    }
                    if i == len {
                        if f as usize != c {
                            return false;
                        }
                        continue;
                    }
                    let (mut b, mut j) = (c as u32, len);
                    while j > i && self.at(b as usize, r[j - 1] ^ 1) != UNDEFINED {
                        b = self.at(b as usize, r[j - 1] ^ 1);
                        j -= 1;
                    }
                    if j == i {
                        if f != b {
                            return false;
                        }
                    } else if j == i + 1 {
                        self.set(f as usize, r[i], b);
                        self.set(b as usize, r[i] ^ 1, f);
                        changed = true;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    /// False when re-basing at some coset gives a smaller table on the
    /// already-defined prefix.
    fn is_canonical(&self) -> bool {
        let n = self.cosets;
        let mut new_of = vec![UNDEFINED; n];
        let mut old_of = Vec::with_capacity(n);
        'bases: for base in 1..n {
            new_of.iter_mut().for_each(|v| *v = UNDEFINED);
            old_of.clear();
            new_of[base] = 0;
            old_of.push(base);
            for i in 0..n {
                if i >= old_of.len() {
                    continue 'bases;
                }
                for x in 0..self.width {
                    let d = self.at(old_of[i], x);
                    if d == UNDEFINED {
                        continue 'bases;
                    }
                    let mapped = if new_of[d as usize] == UNDEFINED {
                        new_of[d as usize] = old_of.len() as u32;
                        old_of.push(d as usize);
                        old_of.len() as u32 - 1
                    } else {
                        new_of[d as usize]
                    };
                    let orig = self.at(i, x);
                    if orig == UNDEFINED {
                        continue 'bases;
                    }
                    if mapped < orig {
                        return false;
                    }
                    if mapped > orig {
                        continue 'bases;
                    }
                }
            }
        }
        true
    }
}

struct Sims<'a> {
    relators: &'a [Vec<usize>],
    max_index: usize,
    nodes: usize,
    max_nodes: usize,
    found: Vec<CosetTable>,
}

impl Sims<'_> {
    fn search(&mut self, st: Partial) -> Result<(), LowIndexError> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(LowIndexError::ResourceExceeded(self.max_nodes));
        }
        let Some((c, x)) = st.first_undefined() else {
            let table = CosetTable::from_entries(st.width, st.t[..st.cosets * st.width].to_vec());
            self.found.push(table);
            return Ok(());
        };
        let limit = (st.cosets + 1).min(self.max_index);
        for target in 0..limit {
            if target < st.cosets && st.at(target, x ^ 1) != UNDEFINED {
                continue;
            }
            let mut next = st.clone();
            if target == st.cosets {
                next.cosets += 1;
            }
            next.set(c, x, target as u32);
            next.set(target, x ^ 1, c as u32);
            if next.deduce(self.relators) && next.is_canonical() {
                self.search(next)?;
            }
        }
        Ok(())
    }
}

/// One standardized table per conjugacy class of subgroups of index <= `max_index`,
/// ordered as discovered (index 1 first).
pub fn low_index_subgroups(
    p: &Presentation,
    max_index: usize,
    max_nodes: usize,
) -> Result<Vec<SubgroupClass>, LowIndexError> {
    assert!(max_index >= 1);
    let width = p.alphabet().letter_count();
    let relators: Vec<Vec<usize>> = p
        .relators()
        .iter()
        .map(|r| r.letters().iter().map(|l: &Letter| l.index()).collect())
        .collect();
    let start = Partial {
        width,
        cosets: 1,
        t: vec![UNDEFINED; max_index * width],
    };
    let mut s = Sims {
        relators: &relators,
        max_index,
        nodes: 0,
        max_nodes,
        found: Vec::new(),
    };
    let mut root = start;
    if !root.deduce(&relators) {
        return Ok(Vec::new());
    }
    s.search(root)?;
    let mut out: Vec<SubgroupClass> = s
        .found
        .into_iter()
        .map(|t| {
            debug_assert!(t.is_valid_action(p));
            let normal = t.is_normal();
            SubgroupClass {
                table: t.standardized(),
                normal,
            }
        })
        .collect();
    out.sort_by_key(|c| c.index());
    Ok(out)
}
