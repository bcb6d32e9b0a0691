//! Abelianization, Smith normal form and maps onto cyclic groups.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::enumerate::CosetTable;
use crate::words::{Presentation, Word};

/// Dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> IntMatrix {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> IntMatrix {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    /// `cols` is needed when there are no rows.
    pub fn from_rows(cols: usize, rows: &[Vec<i64>]) -> IntMatrix {
        let mut m = IntMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged matrix");
            for (j, &x) in r.iter().enumerate() {
                m.data[i * cols + j] = BigInt::from(x);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    fn at(&mut self, i: usize, j: usize) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }

    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_i64()).collect())
            .collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * other.get(k, j);
                    *out.at(i, j) += prod;
                }
            }
        }
        out
    }

    /// Determinant by fraction-free elimination.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a.get(k, k).is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !a.get(i, k).is_zero()) else {
                    return BigInt::zero();
                };
                a.swap_rows(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    *a.at(i, j) = v;
                }
            }
            prev = a.get(k, k).clone();
        }
        sign * a.get(n - 1, n - 1)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += f * row[src]
    fn add_row(&mut self, dst: usize, src: usize, f: &BigInt) {
        for j in 0..self.cols {
            let v = self.get(src, j) * f;
            *self.at(dst, j) += v;
        }
    }

    /// col[dst] += f * col[src]
    fn add_col(&mut self, dst: usize, src: usize, f: &BigInt) {
        for i in 0..self.rows {
            let v = self.get(i, src) * f;
            *self.at(i, dst) += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -self.get(r, j);
            *self.at(r, j) = v;
        }
    }
}

/// Exponent-sum matrix: one row per relator, one column per generator.
pub fn abelianization_matrix(p: &Presentation) -> IntMatrix {
    let g = p.generator_count();
    let rows: Vec<Vec<i64>> = p.relators().iter().map(|r| r.exponent_sums(g)).collect();
    IntMatrix::from_rows(g, &rows)
}

/// `u · m · v = diag(diagonal)`, with `u`, `v` unimodular.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub diagonal: Vec<BigInt>,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl SmithForm {
    /// Rebuilds `u · m · v` and checks it against the diagonal, the
    /// divisibility chain and the determinants of the transforms.
    pub fn verify(&self, m: &IntMatrix) -> bool {
        let d = self.u.mul(m).mul(&self.v);
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                let want = if i == j {
                    self.diagonal[i].clone()
                } else {
                    BigInt::zero()
                };
                if *d.get(i, j) != want {
                    return false;
                }
            }
        }
        let chain = self.diagonal.windows(2).all(|w| {
            if w[0].is_zero() {
                w[1].is_zero()
            } else {
                w[1].is_multiple_of(&w[0])
            }
        });
        chain
            && self.diagonal.iter().all(|x| !x.is_negative())
            && self.u.determinant().abs().is_one()
            && self.v.determinant().abs().is_one()
    }
}

/// Smith normal form with retained transforms; asserts its own result.
pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let steps = rows.min(cols);
    for t in 0..steps {
        // smallest nonzero entry of the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                let x = a.get(i, j);
                if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < a.get(bi, bj).abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap_rows(t, pi);
        u.swap_rows(t, pi);
        a.swap_cols(t, pj);
        v.swap_cols(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                let piv = a.get(t, t).clone();
                let q = a.get(i, t).div_floor(&piv);
                if !q.is_zero() {
                    a.add_row(i, t, &-&q);
                    u.add_row(i, t, &-&q);
                }
                if !a.get(i, t).is_zero() {
                    a.swap_rows(t, i);
                    u.swap_rows(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                let piv = a.get(t, t).clone();
                let q = a.get(t, j).div_floor(&piv);
                if !q.is_zero() {
                    a.add_col(j, t, &-&q);
                    v.add_col(j, t, &-&q);
                }
                if !a.get(t, j).is_zero() {
                    a.swap_cols(t, j);
                    v.swap_cols(t, j);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // the pivot must divide the rest of the block
            let piv = a.get(t, t).clone();
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a.get(i, j).is_multiple_of(&piv)));
            match bad {
                Some(i) => {
                    let one = BigInt::one();
                    a.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }
        if a.get(t, t).is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
    }
    let diagonal = (0..steps).map(|i| a.get(i, i).clone()).collect();
    let snf = SmithForm { diagonal, u, v };
    assert!(snf.verify(m), "Smith normal form failed verification");
    snf
}

fn serialize_factors<S: Serializer>(xs: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        match x.to_u64() {
            Some(v) => seq.serialize_element(&v)?,
            None => seq.serialize_element(&x.to_string())?,
        }
    }
    seq.end()
}

/// `ℤ^rank ⊕ ℤ/d₁ ⊕ … ⊕ ℤ/d_k` with `d₁ | d₂ | …` and every `dᵢ > 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbelianInvariants {
    pub rank: usize,
    #[serde(serialize_with = "serialize_factors")]
    pub torsion: Vec<BigUint>,
}

impl AbelianInvariants {
    pub fn is_finite(&self) -> bool {
        self.rank == 0
    }

    /// Order of the group, if finite.
    pub fn order(&self) -> Option<BigUint> {
        self.is_finite().then(|| self.torsion.iter().product())
    }

    /// Largest invariant factor (1 for the trivial group), if finite.
    pub fn exponent(&self) -> Option<BigUint> {
        self.is_finite()
            .then(|| self.torsion.last().cloned().unwrap_or_else(BigUint::one))
    }

    pub fn has_even_torsion(&self) -> bool {
        self.torsion.iter().any(|d| d.is_even())
    }

    /// Number of invariant factors divisible by the prime `p`.
    pub fn p_rank(&self, p: u64) -> usize {
        self.rank
            + self
                .torsion
                .iter()
                .filter(|d| d.is_multiple_of(&BigUint::from(p)))
                .count()
    }

    /// `|Hom(A, ℤ/m)|`.
    pub fn hom_count(&self, m: u64) -> BigUint {
        let m_big = BigUint::from(m);
        let mut n = m_big.pow(self.rank as u32);
        for d in &self.torsion {
            n *= d.gcd(&m_big);
        }
        n
    }
}

impl fmt::Display for AbelianInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        parts.extend(self.torsion.iter().map(|d| format!("Z/{d}")));
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

fn invariants_from(snf: &SmithForm, cols: usize) -> AbelianInvariants {
    let mut rank = cols - snf.diagonal.len();
    let mut torsion = Vec::new();
    for d in &snf.diagonal {
        if d.is_zero() {
            rank += 1;
        } else if !d.is_one() {
            torsion.push(d.magnitude().clone());
        }
    }
    AbelianInvariants { rank, torsion }
}

pub fn h1(p: &Presentation) -> AbelianInvariants {
    let m = abelianization_matrix(p);
    invariants_from(&smith_normal_form(&m), m.cols())
}

/// A homomorphism onto `ℤ/modulus` given by generator images.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CyclicEpi {
    pub modulus: u64,
    pub images: Vec<u64>,
}

impl CyclicEpi {
    pub fn apply(&self, w: &Word) -> u64 {
        let n = self.modulus as i128;
        let mut acc: i128 = 0;
        for l in w.letters() {
            let x = self.images[l.generator()] as i128;
            acc += if l.is_inverse() { -x } else { x };
        }
        acc.rem_euclid(n) as u64
    }

    /// Every relator maps to 0.
    pub fn is_homomorphism(&self, p: &Presentation) -> bool {
        self.images.len() == p.generator_count() && self.modulus >= 1 && p.relators().iter().all(|r| self.apply(r) == 0)
    }

    pub fn is_surjective(&self) -> bool {
        self.images.iter().fold(self.modulus, |g, &x| g.gcd(&x)) == 1
    }

    /// Coset table of the kernel of a surjection: coset `c` is sent to
    /// `c + image` by each generator.
    pub fn kernel_table(&self) -> CosetTable {
        assert!(self.is_surjective(), "kernel table of a non-surjective map");
        let n = self.modulus;
        let mut entries = Vec::with_capacity(n as usize * self.images.len() * 2);
        for c in 0..n {
            for &x in &self.images {
                entries.push(((c + x) % n) as u32);
                entries.push(((c + n - x) % n) as u32);
            }
        }
        CosetTable::from_entries(self.images.len() * 2, entries).standardized()
    }
}

fn units(n: u64) -> Vec<u64> {
    (1..n).filter(|u| u.gcd(&n) == 1).collect()
}

/// Surjections `G → ℤ/n`, one per kernel. Two surjections share a kernel
/// exactly when they differ by an automorphism of `ℤ/n`, so each unit orbit
/// is reported once, by its least image vector.
pub fn epimorphisms_to_cyclic(p: &Presentation, n: u64) -> Vec<CyclicEpi> {
    assert!(n >= 2, "modulus must be at least 2");
    let g = p.generator_count();
    let m = abelianization_matrix(p);
    let snf = smith_normal_form(&m);
    let n_big = BigInt::from(n);
    // coordinate j in the Smith basis can take multiples of n / gcd(d_j, n)
    let steps: Vec<u64> = (0..g)
        .map(|j| {
            let d = snf.diagonal.get(j).cloned().unwrap_or_else(BigInt::zero);
            let gcd = d.gcd(&n_big).to_u64().expect("gcd bounded by n");
            n / gcd
        })
        .collect();
    let v_mod: Vec<Vec<u64>> = (0..g)
        .map(|k| {
            (0..g)
                .map(|j| snf.v.get(k, j).mod_floor(&n_big).to_u64().unwrap())
                .collect()
        })
        .collect();
    let units = units(n);
    let mut out = Vec::new();
    let mut w = vec![0u64; g];
    loop {
        let images: Vec<u64> = (0..g)
            .map(|k| (0..g).fold(0u128, |acc, j| acc + v_mod[k][j] as u128 * w[j] as u128) as u64 % n)
            .collect();
        let epi = CyclicEpi { modulus: n, images };
        if epi.is_surjective() {
            let least = units
                .iter()
                .map(|&u| {
                    epi.images
                        .iter()
                        .map(|&x| (x as u128 * u as u128 % n as u128) as u64)
                        .collect::<Vec<_>>()
                })
                .min()
                .unwrap();
            if least == epi.images {
                debug_assert!(epi.is_homomorphism(p));
                out.push(epi);
            }
        }
        // odometer over the coordinate ranges
        let mut j = 0;
        loop {
            if j == g {
                out.sort_by(|a, b| a.images.cmp(&b.images));
                return out;
            }
            w[j] += steps[j];
            if w[j] < n {
                break;
            }
            w[j] = 0;
            j += 1;
        }
    }
}

/// A homomorphism to a cyclic group under which `w` is nonzero, if the
/// abelianization sees `w` at all.
pub fn detecting_character(p: &Presentation, w: &Word) -> Option<CyclicEpi> {
    let g = p.generator_count();
    let m = abelianization_matrix(p);
    let snf = smith_normal_form(&m);
    let e = w.exponent_sums(g);
    for j in 0..g {
        let d = snf.diagonal.get(j).cloned().unwrap_or_else(BigInt::zero);
        if d.is_one() {
            continue;
        }
        let coord: BigInt = (0..g).map(|k| snf.v.get(k, j) * BigInt::from(e[k])).sum();
        let modulus = if d.is_zero() {
            if coord.is_zero() {
                continue;
            }
            // any modulus that does not divide the coordinate
            coord.magnitude() + BigUint::one()
        } else {
            if coord.is_multiple_of(&d) {
                continue;
            }
            d.magnitude().clone()
        };
        let modulus = modulus.to_u64()?;
        let mb = BigInt::from(modulus);
        let images = (0..g)
            .map(|k| snf.v.get(k, j).mod_floor(&mb).to_u64().unwrap())
            .collect();
        let chi = CyclicEpi { modulus, images };
        debug_assert!(chi.is_homomorphism(p) && chi.apply(w) != 0);
        return Some(chi);
    }
    None
}
