//! Coset tables and HLT Todd–Coxeter enumeration.

use std::fmt::Write as _;

use thiserror::Error;

use crate::words::{Letter, Presentation, Word};

pub const UNDEFINED: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CosetError {
    #[error("coset enumeration exceeded {max_cosets} cosets")]
    Overflow { max_cosets: usize },
}

/// Action of the group on the right cosets of a subgroup.
///
/// Row 0 is the subgroup itself. Columns are letters `a, A, b, B, ...`;
/// `get(c, x) = d` means `c·x = d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CosetTable {
    width: usize,
    entries: Vec<u32>,
}

impl CosetTable {
    pub(crate) fn from_entries(width: usize, entries: Vec<u32>) -> CosetTable {
        debug_assert_eq!(entries.len() % width.max(1), 0);
        CosetTable { width, entries }
    }

    pub fn index(&self) -> usize {
        self.entries.len().checked_div(self.width).unwrap_or(1)
    }

    /// Number of letter columns (twice the generator count).
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, coset: usize, x: Letter) -> u32 {
        self.entries[coset * self.width + x.index()]
    }

    pub fn is_complete(&self) -> bool {
        !self.entries.contains(&UNDEFINED)
    }

    /// Coset reached from `coset` by reading `w`, if defined along the way.
    pub fn trace(&self, coset: usize, w: &Word) -> Option<usize> {
        let mut c = coset;
        for &x in w.letters() {
            let d = self.get(c, x);
            if d == UNDEFINED {
                return None;
            }
            c = d as usize;
        }
        Some(c)
    }

    /// Every relator closes at every coset and columns are mutually inverse.
    pub fn is_valid_action(&self, p: &Presentation) -> bool {
        if !self.is_complete() || self.width != p.alphabet().letter_count() {
            return false;
        }
        let n = self.index();
        for c in 0..n {
            for x in p.alphabet().letters() {
                if self.get(self.get(c, x) as usize, x.inverse()) as usize != c {
                    return false;
                }
            }
            for r in p.relators() {
                if self.trace(c, r) != Some(c) {
                    return false;
                }
            }
        }
        true
    }

    /// Permutation of cosets induced by each generator.
    pub fn permutations(&self) -> Vec<Vec<u32>> {
        let n = self.index();
        (0..self.width / 2)
            .map(|g| {
                let x = Letter::new(g, false);
                (0..n).map(|c| self.get(c, x)).collect()
            })
            .collect()
    }

    /// Renumbers cosets in the order first reached by a row-major scan
    /// starting from `base`. Requires a complete table.
    pub fn standardized_from(&self, base: usize) -> CosetTable {
        let n = self.index();
        let mut new_of = vec![UNDEFINED; n];
        let mut old_of = Vec::with_capacity(n);
        new_of[base] = 0;
        old_of.push(base);
        let mut i = 0;
        while i < old_of.len() {
            let c = old_of[i];
            for x in 0..self.width {
                let d = self.entries[c * self.width + x];
                if d != UNDEFINED && new_of[d as usize] == UNDEFINED {
                    new_of[d as usize] = old_of.len() as u32;
                    old_of.push(d as usize);
                }
            }
            i += 1;
        }
        let mut entries = Vec::with_capacity(old_of.len() * self.width);
        for &c in &old_of {
            for x in 0..self.width {
                let d = self.entries[c * self.width + x];
                entries.push(if d == UNDEFINED { UNDEFINED } else { new_of[d as usize] });
            }
        }
        CosetTable {
            width: self.width,
            entries,
        }
    }

    pub fn standardized(&self) -> CosetTable {
        self.standardized_from(0)
    }

    /// The subgroup is normal iff every point stabilizer equals the base one,
    /// i.e. re-basing at any coset gives the same standardized table.
    pub fn is_normal(&self) -> bool {
        let base = self.standardized();
        (1..self.index()).all(|b| self.standardized_from(b) == base)
    }

    /// Row-per-coset text: `coset: image under a A b B ...`.
    pub fn to_text(&self, p: &Presentation) -> String {
        let mut s = String::new();
        let header: Vec<String> = p
            .alphabet()
            .letters()
            .map(|l| l.to_char(p.alphabet()).to_string())
            .collect();
        let _ = writeln!(s, "# coset: {}", header.join(" "));
        for c in 0..self.index() {
            let row: Vec<String> = (0..self.width)
                .map(|x| match self.entries[c * self.width + x] {
                    UNDEFINED => "-".to_string(),
                    d => d.to_string(),
                })
                .collect();
            let _ = writeln!(s, "{c}: {}", row.join(" "));
        }
        s
    }
}

/// HLT enumeration state with a union-find for coincidences.
struct Enumerator<'a> {
    width: usize,
    table: Vec<u32>,
    parent: Vec<u32>,
    relators: Vec<&'a [Letter]>,
    max_cosets: usize,
}

impl<'a> Enumerator<'a> {
    fn cosets(&self) -> usize {
        self.parent.len()
    }

    #[inline]
    fn at(&self, c: u32, x: Letter) -> u32 {
        self.table[c as usize * self.width + x.index()]
    }

    #[inline]
    fn set(&mut self, c: u32, x: Letter, d: u32) {
        self.table[c as usize * self.width + x.index()] = d;
    }

    fn is_live(&self, c: u32) -> bool {
        self.parent[c as usize] == c
    }

    fn define(&mut self, c: u32, x: Letter) -> Result<u32, CosetError> {
        if self.cosets() >= self.max_cosets {
            return Err(CosetError::Overflow {
                max_cosets: self.max_cosets,
            });
        }
        let d = self.cosets() as u32;
        self.parent.push(d);
        self.table.extend(std::iter::repeat_n(UNDEFINED, self.width));
        self.set(c, x, d);
        self.set(d, x.inverse(), c);
        Ok(d)
    }

    fn rep(&mut self, c: u32) -> u32 {
        let mut r = c;
        while self.parent[r as usize] != r {
            r = self.parent[r as usize];
        }
        let mut k = c;
        while self.parent[k as usize] != r {
            let next = self.parent[k as usize];
            self.parent[k as usize] = r;
            k = next;
        }
        r
    }

    fn merge(&mut self, a: u32, b: u32, queue: &mut Vec<u32>) {
        let (ra, rb) = (self.rep(a), self.rep(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
            queue.push(hi);
        }
    }

    fn coincidence(&mut self, a: u32, b: u32) {
        let mut queue = Vec::new();
        self.merge(a, b, &mut queue);
        let mut i = 0;
        while i < queue.len() {
            let g = queue[i];
            i += 1;
            for xi in 0..self.width {
                let x = Letter::from_index(xi);
                let d = self.at(g, x);
                if d == UNDEFINED {
                    continue;
                }
                self.set(d, x.inverse(), UNDEFINED);
                let mu = self.rep(g);
                let nu = self.rep(d);
                if self.at(mu, x) != UNDEFINED {
                    let t = self.at(mu, x);
                    self.merge(nu, t, &mut queue);
                } else if self.at(nu, x.inverse()) != UNDEFINED {
                    let t = self.at(nu, x.inverse());
                    self.merge(mu, t, &mut queue);
                } else {
                    self.set(mu, x, nu);
                    self.set(nu, x.inverse(), mu);
                }
            }
        }
    }

    /// Traces `w` from `c` in both directions, defining cosets to close the gap.
    fn scan_and_fill(&mut self, c: u32, w: &[Letter]) -> Result<(), CosetError> {
        let (mut f, mut b) = (c, c);
        let (mut i, mut j) = (0usize, w.len());
        loop {
            while i < j && self.at(f, w[i]) != UNDEFINED {
                f = self.at(f, w[i]);
                i += 1;
            }
            if i < j {
                while j > i && self.at(b, w[j - 1].inverse()) != UNDEFINED {
                    b = self.at(b, w[j - 1].inverse());
                    j -= 1;
                }
            }
            if i == j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            if j == i + 1 {
                self.set(f, w[i], b);
                self.set(b, w[i].inverse(), f);
                return Ok(());
            }
            self.define(f, w[i])?;
        }
    }

    fn pass(&mut self) -> Result<bool, CosetError> {
        let mut changed = false;
        let mut c = 0u32;
        while (c as usize) < self.cosets() {
            let before = self.cosets();
            for k in 0..self.relators.len() {
                if !self.is_live(c) {
                    break;
                }
                let r = self.relators[k];
                self.scan_and_fill(c, r)?;
            }
            for xi in 0..self.width {
                let x = Letter::from_index(xi);
                if self.is_live(c) && self.at(c, x) == UNDEFINED {
                    self.define(c, x)?;
                }
            }
            changed |= self.cosets() != before;
            c += 1;
        }
        Ok(changed)
    }

    fn run(&mut self, subgens: &[Word]) -> Result<(), CosetError> {
        for h in subgens {
            let h = h.letters().to_vec();
            self.scan_and_fill(0, &h)?;
        }
        self.pass()?;
        // Coincidences late in a pass can leave earlier rows open.
        while !self.closed() {
            for h in subgens {
                let h = h.letters().to_vec();
                let base = self.rep(0);
                self.scan_and_fill(base, &h)?;
            }
            self.pass()?;
        }
        Ok(())
    }

    fn closed(&mut self) -> bool {
        for c in 0..self.cosets() as u32 {
            if !self.is_live(c) {
                continue;
            }
            for xi in 0..self.width {
                if self.at(c, Letter::from_index(xi)) == UNDEFINED {
                    return false;
                }
            }
            for k in 0..self.relators.len() {
                let mut d = c;
                for &x in self.relators[k] {
                    d = self.at(d, x);
                }
                if d != c {
                    return false;
                }
            }
        }
        true
    }

    fn finish(self) -> CosetTable {
        let live: Vec<u32> = (0..self.cosets() as u32).filter(|&c| self.is_live(c)).collect();
        let mut new_of = vec![UNDEFINED; self.cosets()];
        for (k, &c) in live.iter().enumerate() {
            new_of[c as usize] = k as u32;
        }
        let mut entries = Vec::with_capacity(live.len() * self.width);
        for &c in &live {
            for xi in 0..self.width {
                let d = self.table[c as usize * self.width + xi];
                entries.push(new_of[d as usize]);
            }
        }
        CosetTable::from_entries(self.width, entries).standardized()
    }
}

/// Enumerates the cosets of `⟨subgens⟩` in the group of `p`.
pub fn todd_coxeter(p: &Presentation, subgens: &[Word], max_cosets: usize) -> Result<CosetTable, CosetError> {
    let width = p.alphabet().letter_count();
    if max_cosets == 0 {
        return Err(CosetError::Overflow { max_cosets });
    }
    let mut e = Enumerator {
        width,
        table: vec![UNDEFINED; width],
        parent: vec![0],
        relators: p.relators().iter().map(|r| r.letters()).collect(),
        max_cosets,
    };
    e.run(subgens)?;
    Ok(e.finish())
}
