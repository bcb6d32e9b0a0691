//! Finite quotients that certify an element is not the identity.
//!
//! Without a confluent rewriting system a nonempty normal form proves
//! nothing, so branch elements are certified by a homomorphism to a cyclic
//! group or to a permutation group under which they act nontrivially.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::abelian::{abelianization_matrix, detecting_character, smith_normal_form};
use crate::enumerate::{low_index_subgroups, CosetTable};
use crate::subgrp::subgroup_presentation;
use crate::words::{Presentation, Word};

/// Largest permutation degree a witness may use.
pub const MAX_DEGREE: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Generator `k` maps to `images[k]` in `ℤ/modulus`.
    Cyclic { modulus: u64, images: Vec<u64> },
    /// Generator `k` acts as the permutation `images[k]` of `0..degree`.
    Permutation { degree: usize, images: Vec<Vec<u32>> },
}

impl Witness {
    /// True when the map is a homomorphism of the presented group and `w`
    /// does not map to the identity.
    pub fn certifies(&self, p: &Presentation, w: &Word) -> bool {
        let g = p.generator_count();
        match self {
            Witness::Cyclic { modulus, images } => {
                let chi = crate::abelian::CyclicEpi {
                    modulus: *modulus,
                    images: images.clone(),
                };
                *modulus >= 2
                    && images.len() == g
                    && images.iter().all(|&x| x < *modulus)
                    && chi.is_homomorphism(p)
                    && chi.apply(w) != 0
            }
            Witness::Permutation { degree, images } => {
                let n = *degree;
                if n == 0 || n > MAX_DEGREE || images.len() != g {
                    return false;
                }
                let mut inverses = Vec::with_capacity(g);
                for perm in images {
                    if perm.len() != n {
                        return false;
                    }
                    let mut inv = vec![u32::MAX; n];
                    for (i, &x) in perm.iter().enumerate() {
                        if x as usize >= n || inv[x as usize] != u32::MAX {
                            return false;
                        }
                        inv[x as usize] = i as u32;
                    }
                    inverses.push(inv);
                }
                let act = |pt: usize, w: &Word| {
                    w.letters().iter().fold(pt, |c, l| {
                        let table = if l.is_inverse() { &inverses } else { images };
                        table[l.generator()][c] as usize
                    })
                };
                let relators_trivial = p.relators().iter().all(|r| (0..n).all(|pt| act(pt, r) == pt));
                relators_trivial && (0..n).any(|pt| act(pt, w) != pt)
            }
        }
    }
}

/// Characters of one finite-index subgroup, as integer values on the edges
/// of its coset table.
struct SubgroupCharacters {
    table: CosetTable,
    /// (modulus, value of each edge `coset * g + generator`); modulus 0 is ℤ.
    characters: Vec<(BigInt, Vec<i64>)>,
}

/// Searches finite quotients for nontriviality witnesses. Subgroups of
/// index up to `max_index` are enumerated on first use.
pub struct WitnessFinder<'a> {
    p: &'a Presentation,
    max_index: usize,
    subgroups: Option<Vec<SubgroupCharacters>>,
}

impl<'a> WitnessFinder<'a> {
    pub fn new(p: &'a Presentation, max_index: usize) -> WitnessFinder<'a> {
        WitnessFinder {
            p,
            max_index,
            subgroups: None,
        }
    }

    fn load(&mut self) -> &[SubgroupCharacters] {
        if self.subgroups.is_none() {
            let g = self.p.generator_count();
            let classes = low_index_subgroups(self.p, self.max_index.max(1), 200_000).unwrap_or_default();
            let mut out = Vec::new();
            for c in classes.into_iter().filter(|c| c.index() > 1) {
                let Ok(sp) = subgroup_presentation(self.p, &c.table) else {
                    continue;
                };
                let m = abelianization_matrix(&sp.presentation);
                let snf = smith_normal_form(&m);
                let cols = m.cols();
                let mut characters = Vec::new();
                for j in 0..cols {
                    let d = snf.diagonal.get(j).cloned().unwrap_or_else(BigInt::zero);
                    if d == BigInt::from(1) {
                        continue;
                    }
                    let Some(values) = sp
                        .edges
                        .iter()
                        .map(|e| match e {
                            Some(id) => snf.v.get(*id, j).to_i64(),
                            None => Some(0),
                        })
                        .collect::<Option<Vec<i64>>>()
                    else {
                        continue;
                    };
                    characters.push((d, values));
                }
                debug_assert_eq!(sp.edges.len(), sp.table.index() * g);
                out.push(SubgroupCharacters {
                    table: sp.table,
                    characters,
                });
            }
            self.subgroups = Some(out);
        }
        self.subgroups.as_deref().unwrap()
    }

    pub fn find(&mut self, w: &Word) -> Option<Witness> {
        if let Some(chi) = detecting_character(self.p, w) {
            return Some(Witness::Cyclic {
                modulus: chi.modulus,
                images: chi.images,
            });
        }
        let g = self.p.generator_count();
        let p = self.p;
        for sc in self.load() {
            let t = &sc.table;
            let n = t.index();
            if t.trace(0, w) != Some(0) {
                return Some(Witness::Permutation {
                    degree: n,
                    images: t.permutations().into_iter().step_by(2).collect(),
                });
            }
            for (d, values) in &sc.characters {
                // value of the character on w, read along its path from coset 0
                let mut c = 0usize;
                let mut val: i128 = 0;
                for l in w.letters() {
                    let k = l.generator();
                    if l.is_inverse() {
                        let prev = t.get(c, *l) as usize;
                        val -= values[prev * g + k] as i128;
                        c = prev;
                    } else {
                        val += values[c * g + k] as i128;
                        c = t.get(c, *l) as usize;
                    }
                }
                let m: u64 = if d.is_zero() {
                    if val == 0 {
                        continue;
                    }
                    match u64::try_from(val.unsigned_abs() + 1) {
                        Ok(m) => m,
                        Err(_) => continue,
                    }
                } else {
                    let Some(dm) = d.abs().to_u64() else { continue };
                    if val.rem_euclid(dm as i128) == 0 {
                        continue;
                    }
                    dm
                };
                let degree = n * m as usize;
                if degree > MAX_DEGREE {
                    continue;
                }
                // G acts on pairs (residue, coset): point = coset * m + residue
                let images: Vec<Vec<u32>> = (0..g)
                    .map(|k| {
                        let x = crate::words::Letter::new(k, false);
                        (0..degree)
                            .map(|pt| {
                                let (coset, v) = (pt / m as usize, (pt % m as usize) as i128);
                                let e = values[coset * g + k] as i128;
                                let nv = (v + e).rem_euclid(m as i128) as usize;
                                (t.get(coset, x) as usize * m as usize + nv) as u32
                            })
                            .collect()
                    })
                    .collect();
                let wit = Witness::Permutation { degree, images };
                debug_assert!(wit.certifies(p, w));
                return Some(wit);
            }
        }
        None
    }
}
