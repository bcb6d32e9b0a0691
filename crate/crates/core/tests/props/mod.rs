//! Property suites shared by the `properties` and `acceptance` test targets.
//! Each suite runs a deterministic proptest runner and reports the first
//! failure as a string.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use num_bigint::BigUint;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};

use conesearch::abelian::{abelianization_matrix, h1, smith_normal_form, IntMatrix};
use conesearch::enumerate::{low_index_subgroups, todd_coxeter, Ball, BallLimits, OUT_OF_BALL};
use conesearch::order::search::{saturate, ConeState};
use conesearch::order::{check_certificate, test_left_orderability, CertNode, Certificate, OrderConfig, SeedMode};
use conesearch::rewrite::{KbBudget, RewritingSystem};
use conesearch::subgrp::{subgroup_presentation, tietze_simplify};
use conesearch::words::{parse_presentation, Alphabet, GeneratorMap, Letter, Presentation, Word};

pub type Suite = fn() -> Result<(), String>;

pub fn suites() -> Vec<(&'static str, Suite)> {
    vec![
        ("free reduction and inversion laws", word_laws),
        ("presentation render/parse round trip", presentation_round_trip),
        ("rewriting idempotence", rewriting_idempotence),
        ("critical pairs resolved", critical_pairs_resolved),
        ("ball multiplication table", ball_table_consistency),
        ("finite groups: coset enumeration and balls", finite_group_oracles),
        ("Smith normal form transforms", smith_form),
        ("homomorphism counts", hom_counts),
        ("Reidemeister-Schreier", reidemeister_schreier),
        ("saturation closure laws", saturation_laws),
        ("certificate round trip", certificate_round_trip),
    ]
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn word(gens: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..2 * gens, 0..=max_len)
        .prop_map(|v| Word::from_letters(v.into_iter().map(Letter::from_index).collect()))
}

fn naive_free_reduce(w: &Word) -> Word {
    // repeatedly delete the leftmost cancelling pair
    let mut v = w.letters().to_vec();
    loop {
        match (1..v.len()).find(|&i| v[i] == v[i - 1].inverse()) {
            Some(i) => {
                v.drain(i - 1..=i);
            }
            None => return Word::from_letters(v),
        }
    }
}

pub fn word_laws() -> Result<(), String> {
    check(
        300,
        (word(3, 24), word(3, 24), prop::collection::vec(word(2, 4), 3)),
        |(u, v, imgs)| {
            let r = u.free_reduce();
            prop_assert_eq!(&r, &naive_free_reduce(&u));
            prop_assert_eq!(r.free_reduce(), r.clone());
            prop_assert!(r.len() <= u.len());
            prop_assert!(r.is_freely_reduced());
            prop_assert_eq!(u.invert().invert(), u.clone());
            prop_assert!(u.concat(&u.invert()).free_reduce().is_empty());
            prop_assert_eq!(u.concat(&v).invert(), v.invert().concat(&u.invert()));
            let c = u.cyclic_reduce();
            prop_assert!(c.is_freely_reduced());
            if c.len() >= 2 {
                prop_assert!(c.letters()[0] != c.letters()[c.len() - 1].inverse());
            }
            let m = GeneratorMap::new(imgs);
            prop_assert_eq!(m.apply(&u.concat(&v)), m.apply(&u).concat(&m.apply(&v)).free_reduce());
            Ok(())
        },
    )
}

pub fn presentation_round_trip() -> Result<(), String> {
    check(
        200,
        (1usize..=4).prop_flat_map(|g| (Just(g), prop::collection::vec(word(g, 12), 0..4))),
        |(g, rels)| {
            let p = Presentation::new(Alphabet::standard(g), rels);
            let text = p.render();
            let q = parse_presentation(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(&q, &p);
            prop_assert_eq!(q.render(), text);
            prop_assert_eq!(q.hash(), p.hash());
            for r in p.relators() {
                prop_assert!(!r.is_empty() && r.cyclic_reduce() == *r);
            }
            Ok(())
        },
    )
}

/// Finite groups with a faithful permutation representation, for oracles.
pub struct FiniteGroup {
    pub name: &'static str,
    pub presentation: Presentation,
    pub perms: Vec<Vec<u32>>,
}

fn cycle_perm(n: usize, cycles: &[&[u32]]) -> Vec<u32> {
    let mut p: Vec<u32> = (0..n as u32).collect();
    for c in cycles {
        for i in 0..c.len() {
            p[c[i] as usize] = c[(i + 1) % c.len()];
        }
    }
    p
}

/// Right regular representation of a group given by its multiplication.
fn regular(n: usize, mul: impl Fn(usize, usize) -> usize, gens: &[usize]) -> Vec<Vec<u32>> {
    gens.iter()
        .map(|&g| (0..n).map(|h| mul(h, g) as u32).collect())
        .collect()
}

pub fn finite_groups() -> Vec<FiniteGroup> {
    let pres = |t: &str| parse_presentation(t).unwrap();
    let mut out = vec![
        FiniteGroup {
            name: "trivial",
            presentation: pres("gens: a\nrel: a"),
            perms: vec![vec![0]],
        },
        FiniteGroup {
            name: "Z/2 x Z/2",
            presentation: pres("gens: a b\nrel: aa\nrel: bb\nrel: abAB"),
            perms: vec![cycle_perm(4, &[&[0, 1], &[2, 3]]), cycle_perm(4, &[&[0, 2], &[1, 3]])],
        },
        FiniteGroup {
            name: "Z/2 x Z/4",
            presentation: pres("gens: a b\nrel: aa\nrel: bbbb\nrel: abAB"),
            perms: vec![cycle_perm(6, &[&[0, 1]]), cycle_perm(6, &[&[2, 3, 4, 5]])],
        },
        FiniteGroup {
            name: "S3",
            presentation: pres("gens: a b\nrel: aa\nrel: bbb\nrel: abab"),
            perms: vec![cycle_perm(3, &[&[0, 1]]), cycle_perm(3, &[&[0, 1, 2]])],
        },
        FiniteGroup {
            name: "D4",
            presentation: pres("gens: a b\nrel: aa\nrel: bbbb\nrel: abab"),
            perms: vec![cycle_perm(4, &[&[1, 3]]), cycle_perm(4, &[&[0, 1, 2, 3]])],
        },
        FiniteGroup {
            name: "D6",
            presentation: pres("gens: a b\nrel: aa\nrel: bbbbbb\nrel: abab"),
            perms: vec![
                cycle_perm(6, &[&[1, 5], &[2, 4]]),
                cycle_perm(6, &[&[0, 1, 2, 3, 4, 5]]),
            ],
        },
        FiniteGroup {
            name: "A4",
            presentation: pres("gens: a b\nrel: aa\nrel: bbb\nrel: ababab"),
            perms: vec![cycle_perm(4, &[&[0, 1], &[2, 3]]), cycle_perm(4, &[&[0, 1, 2]])],
        },
        FiniteGroup {
            name: "S4",
            presentation: pres("gens: a b\nrel: aa\nrel: bbb\nrel: abababab"),
            perms: vec![cycle_perm(4, &[&[0, 1]]), cycle_perm(4, &[&[1, 2, 3]])],
        },
        FiniteGroup {
            name: "Z/3 x Z/3",
            presentation: pres("gens: a b\nrel: aaa\nrel: bbb\nrel: abAB"),
            perms: vec![cycle_perm(6, &[&[0, 1, 2]]), cycle_perm(6, &[&[3, 4, 5]])],
        },
    ];
    for n in [2u32, 5, 7, 12, 24] {
        let cyc: Vec<u32> = (0..n).collect();
        out.push(FiniteGroup {
            name: "cyclic",
            presentation: pres(&format!("gens: a\nrel: {}", "a".repeat(n as usize))),
            perms: vec![cycle_perm(n as usize, &[&cyc])],
        });
    }
    // quaternion units 1, i, j, k and their negatives: element 4s + u
    let qmul = |x: usize, y: usize| {
        const T: [[(usize, usize); 4]; 4] = [
            [(0, 0), (0, 1), (0, 2), (0, 3)],
            [(0, 1), (1, 0), (0, 3), (1, 2)],
            [(0, 2), (1, 3), (1, 0), (0, 1)],
            [(0, 3), (0, 2), (1, 1), (1, 0)],
        ];
        let (s, u) = T[x % 4][y % 4];
        4 * ((x / 4 + y / 4 + s) % 2) + u
    };
    out.push(FiniteGroup {
        name: "Q8",
        presentation: pres("gens: a b\nrel: aaaa\nrel: aaBB\nrel: Baba"),
        perms: regular(8, qmul, &[1, 2]),
    });
    // Z/3 ⋊ Z/4 with the generator of Z/4 inverting: element 3y + x
    let dmul = |p: usize, q: usize| {
        let (x1, y1, x2, y2) = (p % 3, p / 3, q % 3, q / 3);
        let x2 = if y1 % 2 == 1 { (3 - x2) % 3 } else { x2 };
        3 * ((y1 + y2) % 4) + (x1 + x2) % 3
    };
    out.push(FiniteGroup {
        name: "Z/3 x| Z/4",
        presentation: pres("gens: a b\nrel: aaa\nrel: bbbb\nrel: Baba"),
        perms: regular(12, dmul, &[1, 3]),
    });
    out
}

fn invert_perm(p: &[u32]) -> Vec<u32> {
    let mut q = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        q[x as usize] = i as u32;
    }
    q
}

/// Word lengths of all group elements, by breadth-first search over the
/// permutation group. Returns the number of elements at each length.
fn cayley_spheres(perms: &[Vec<u32>]) -> Vec<usize> {
    let n = perms[0].len();
    let mut gens: Vec<Vec<u32>> = Vec::new();
    for p in perms {
        gens.push(p.clone());
        gens.push(invert_perm(p));
    }
    let id: Vec<u32> = (0..n as u32).collect();
    let mut seen: HashMap<Vec<u32>, usize> = HashMap::from([(id.clone(), 0)]);
    let mut queue = VecDeque::from([id]);
    let mut spheres = vec![1];
    while let Some(g) = queue.pop_front() {
        let d = seen[&g];
        for s in &gens {
            let h: Vec<u32> = g.iter().map(|&x| s[x as usize]).collect();
            if !seen.contains_key(&h) {
                seen.insert(h.clone(), d + 1);
                if spheres.len() <= d + 1 {
                    spheres.push(0);
                }
                spheres[d + 1] += 1;
                queue.push_back(h);
            }
        }
    }
    spheres
}

fn act(perms: &[Vec<u32>], w: &Word, pt: u32) -> u32 {
    w.letters().iter().fold(pt, |c, l| {
        let p = &perms[l.generator()];
        if l.is_inverse() {
            p.iter().position(|&x| x == c).unwrap() as u32
        } else {
            p[c as usize]
        }
    })
}

fn acts_trivially(perms: &[Vec<u32>], w: &Word) -> bool {
    (0..perms[0].len() as u32).all(|pt| act(perms, w, pt) == pt)
}

pub fn finite_group_oracles() -> Result<(), String> {
    for g in finite_groups() {
        let p = &g.presentation;
        for r in p.relators() {
            ensure(acts_trivially(&g.perms, r), || {
                format!("{}: relator fails in the permutations", g.name)
            })?;
        }
        let spheres = cayley_spheres(&g.perms);
        let order: usize = spheres.iter().sum();
        ensure(order <= 24, || format!("{}: order {order}", g.name))?;
        let t = todd_coxeter(p, &[], 10_000).map_err(|e| format!("{}: {e}", g.name))?;
        ensure(t.index() == order, || {
            format!("{}: coset enumeration gives {}, oracle {order}", g.name, t.index())
        })?;
        ensure(t.is_valid_action(p), || format!("{}: invalid table", g.name))?;
        let a = p.parse_word("a").unwrap();
        let a_order = (1..=order).find(|&k| acts_trivially(&g.perms, &a.pow(k))).unwrap();
        let ta = todd_coxeter(p, &[a], 10_000).map_err(|e| e.to_string())?;
        ensure(ta.index() * a_order == order, || format!("{}: index of <a>", g.name))?;

        let sys = RewritingSystem::knuth_bendix(p, &KbBudget::default());
        ensure(sys.is_confluent(), || format!("{}: completion did not finish", g.name))?;
        let radius = spheres.len();
        let ball = Ball::build(&sys, radius, &BallLimits::default()).map_err(|e| e.to_string())?;
        let mut cumulative = Vec::new();
        let mut acc = 0;
        for r in 0..=radius {
            acc += spheres.get(r).copied().unwrap_or(0);
            cumulative.push(acc);
        }
        ensure(ball.sizes() == cumulative, || {
            format!("{}: ball sizes {:?}, oracle {:?}", g.name, ball.sizes(), cumulative)
        })?;
    }
    Ok(())
}

fn confluent_examples() -> Vec<Presentation> {
    let mut v: Vec<Presentation> = finite_groups().into_iter().map(|g| g.presentation).collect();
    for t in ["gens: a", "gens: a b", "gens: a b\nrel: abAB", "gens: a b\nrel: abaB"] {
        v.push(parse_presentation(t).unwrap());
    }
    v
}

pub fn rewriting_idempotence() -> Result<(), String> {
    let mut systems: Vec<(Presentation, RewritingSystem)> = confluent_examples()
        .into_iter()
        .map(|p| {
            let s = RewritingSystem::knuth_bendix(&p, &KbBudget::default());
            (p, s)
        })
        .collect();
    let weeks = parse_presentation("gens: a b\nrel: bababAbbA\nrel: ababaBaaB").unwrap();
    let bounded = KbBudget {
        max_rules: 2_000,
        ..KbBudget::default()
    };
    let ws = RewritingSystem::knuth_bendix(&weeks, &bounded);
    systems.push((weeks, ws));
    let systems = &systems;
    check(400, (0..systems.len(), word(2, 30), word(2, 30)), |(i, u, v)| {
        let (p, s) = &systems[i];
        let g = p.generator_count();
        let keep = |w: &Word| Word::from_letters(w.letters().iter().copied().filter(|l| l.generator() < g).collect());
        let (u, v) = (keep(&u), keep(&v));
        let nf = s.rewrite(&u);
        prop_assert_eq!(s.rewrite(&nf), nf.clone());
        prop_assert!(s.is_irreducible(nf.letters()));
        prop_assert!(nf.is_freely_reduced());
        prop_assert!(nf.len() <= u.free_reduce().len());
        prop_assert_eq!(s.multiply(&u, &v), s.rewrite(&u.concat(&v)));
        prop_assert_eq!(s.multiply(&nf, &s.rewrite(&v)), s.rewrite(&u.concat(&v)));
        for r in p.relators() {
            prop_assert!(s.rewrite(r).is_empty());
        }
        Ok(())
    })
}

pub fn critical_pairs_resolved() -> Result<(), String> {
    for p in confluent_examples() {
        let s = RewritingSystem::knuth_bendix(&p, &KbBudget::default());
        ensure(s.is_confluent(), || format!("{p}: not confluent"))?;
        let open = s.unresolved_pairs(usize::MAX);
        ensure(open.is_empty(), || {
            format!("{p}: {} unresolved critical pairs", open.len())
        })?;
        s.check_structure().map_err(|e| format!("{p}: {e}"))?;
    }
    // a truncated system must admit it is not finished
    let weeks = parse_presentation("gens: a b\nrel: bababAbbA\nrel: ababaBaaB").unwrap();
    let s = RewritingSystem::knuth_bendix(
        &weeks,
        &KbBudget {
            max_rules: 500,
            ..KbBudget::default()
        },
    );
    ensure(!s.is_confluent() && !s.unresolved_pairs(1).is_empty(), || {
        "truncated system reports no open pairs".into()
    })
}

pub fn ball_table_consistency() -> Result<(), String> {
    let mut cases: Vec<(Presentation, usize)> = Vec::new();
    for g in finite_groups() {
        cases.push((g.presentation, 5));
    }
    for (t, r) in [
        ("gens: a", 12),
        ("gens: a b", 5),
        ("gens: a b\nrel: abAB", 12),
        ("gens: a b\nrel: abaB", 10),
        ("gens: a b\nrel: aaaBB", 6),
    ] {
        cases.push((parse_presentation(t).unwrap(), r));
    }
    for (p, r) in cases {
        let s = RewritingSystem::knuth_bendix(&p, &KbBudget::default());
        let limits = BallLimits {
            allow_bounded: true,
            ..BallLimits::default()
        };
        let ball = Ball::with_table(&s, r, &limits).map_err(|e| e.to_string())?;
        let n = ball.len();
        ensure(n <= 2_000, || {
            format!("{p}: ball of {n} is too big for an exhaustive check")
        })?;
        ensure(ball.rep(0).is_empty(), || "id 0 is not the identity".into())?;
        let index: HashMap<&Word, u32> = ball.reps().iter().enumerate().map(|(i, w)| (w, i as u32)).collect();
        ensure(index.len() == n, || format!("{p}: duplicate representatives"))?;
        for i in 0..n as u32 {
            let wi = ball.rep(i);
            ensure(s.rewrite(wi) == *wi && wi.len() <= r, || {
                format!("{p}: rep {i} not a short normal form")
            })?;
            ensure(ball.mul(0, i, &s) == i && ball.mul(i, 0, &s) == i, || {
                format!("{p}: identity row")
            })?;
            let inv = ball.inverse(i);
            let expect_inv = index.get(&s.rewrite(&wi.invert())).copied().unwrap_or(OUT_OF_BALL);
            ensure(inv == expect_inv, || format!("{p}: inverse of {i}"))?;
            for j in 0..n as u32 {
                let z = s.rewrite(&wi.concat(ball.rep(j)));
                let expect = index.get(&z).copied().unwrap_or(OUT_OF_BALL);
                ensure(ball.mul(i, j, &s) == expect, || format!("{p}: product {i}*{j}"))?;
            }
        }
    }
    Ok(())
}

fn small_matrix() -> impl Strategy<Value = (usize, Vec<Vec<i64>>)> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(r, c)| (Just(c), prop::collection::vec(prop::collection::vec(-6i64..=6, c), r)))
}

pub fn smith_form() -> Result<(), String> {
    check(300, small_matrix(), |(cols, rows)| {
        let m = IntMatrix::from_rows(cols, &rows);
        let snf = smith_normal_form(&m);
        prop_assert!(snf.verify(&m));
        prop_assert!(snf.u.determinant().magnitude() == &BigUint::from(1u32));
        prop_assert!(snf.v.determinant().magnitude() == &BigUint::from(1u32));
        if m.rows() == m.cols() {
            let prod = snf.diagonal.iter().fold(num_bigint::BigInt::from(1), |a, d| a * d);
            let det = m.determinant();
            prop_assert_eq!(prod.magnitude(), det.magnitude());
        }
        Ok(())
    })
}

/// Number of maps from the generators to `ℤ/m` killing every relator, by
/// trying all of them.
fn brute_force_homs(p: &Presentation, m: u64) -> u64 {
    let g = p.generator_count();
    let sums: Vec<Vec<i64>> = p.relators().iter().map(|r| r.exponent_sums(g)).collect();
    let mut count = 0;
    let mut x = vec![0u64; g];
    loop {
        if sums.iter().all(|s| {
            s.iter()
                .zip(&x)
                .map(|(&e, &v)| e * v as i64)
                .sum::<i64>()
                .rem_euclid(m as i64)
                == 0
        }) {
            count += 1;
        }
        let mut k = 0;
        loop {
            if k == g {
                return count;
            }
            x[k] += 1;
            if x[k] < m {
                break;
            }
            x[k] = 0;
            k += 1;
        }
    }
}

pub fn hom_counts() -> Result<(), String> {
    let strat = (1usize..=3).prop_flat_map(|g| (Just(g), prop::collection::vec(word(g, 10), 0..=3), 1u64..=12));
    check(250, strat, |(g, rels, m)| {
        let p = Presentation::new(Alphabet::standard(g), rels);
        let inv = h1(&p);
        prop_assert_eq!(inv.hom_count(m), BigUint::from(brute_force_homs(&p, m)));
        let snf = smith_normal_form(&abelianization_matrix(&p));
        prop_assert!(snf.verify(&abelianization_matrix(&p)));
        Ok(())
    })
}

pub fn reidemeister_schreier() -> Result<(), String> {
    let mut cases: Vec<(Presentation, usize, Option<usize>)> = Vec::new();
    for g in finite_groups()
        .into_iter()
        .filter(|g| ["S3", "A4", "Q8", "D4"].contains(&g.name))
    {
        let order = cayley_spheres(&g.perms).iter().sum();
        cases.push((g.presentation, 4, Some(order)));
    }
    for (t, n) in [
        ("gens: a b", 3),
        ("gens: a b\nrel: aaaBB", 4),
        ("gens: a b\nrel: bababAbbA\nrel: ababaBaaB", 5),
    ] {
        cases.push((parse_presentation(t).unwrap(), n, None));
    }
    for (p, n, order) in cases {
        let g = p.generator_count();
        let classes = low_index_subgroups(&p, n, 1_000_000).map_err(|e| e.to_string())?;
        for c in classes {
            let sp = subgroup_presentation(&p, &c.table).map_err(|e| e.to_string())?;
            let idx = c.index();
            ensure(sp.presentation.generator_count() == idx * (g - 1) + 1, || {
                format!("{p}: index formula at {idx}")
            })?;
            for w in &sp.schreier_map {
                ensure(sp.table.trace(0, w) == Some(0), || {
                    format!("{p}: Schreier generator outside the subgroup")
                })?;
            }
            let simple = tietze_simplify(&sp, 1.5);
            ensure(h1(&simple.presentation) == h1(&sp.presentation), || {
                format!("{p}: simplification changed H1")
            })?;
            if let Some(order) = order {
                let t = todd_coxeter(&sp.presentation, &[], 10_000).map_err(|e| e.to_string())?;
                ensure(t.index() * idx == order, || {
                    format!("{p}: subgroup order {} at index {idx}", t.index())
                })?;
                let s = RewritingSystem::knuth_bendix(&p, &KbBudget::default());
                for r in sp.presentation.relators() {
                    ensure(s.rewrite(&sp.expand(r)).is_empty(), || {
                        format!("{p}: relator not trivial in G")
                    })?;
                }
            }
        }
    }
    Ok(())
}

/// Closure of `seed` under in-ball products, by naive fixed-point iteration.
fn naive_closure(ball: &Ball, sys: &RewritingSystem, seed: &[u32]) -> Option<HashSet<u32>> {
    let mut c: HashSet<u32> = seed.iter().copied().collect();
    loop {
        let mut added = false;
        let cur: Vec<u32> = c.iter().copied().collect();
        for &x in &cur {
            for &y in &cur {
                let z = ball.mul(x, y, sys);
                if z == 0 {
                    return None;
                }
                if z != OUT_OF_BALL && c.insert(z) {
                    added = true;
                }
            }
        }
        if c.contains(&0) {
            return None;
        }
        if !added {
            return Some(c);
        }
    }
}

fn closure(ball: &Ball, sys: &RewritingSystem, seed: &[u32]) -> Option<HashSet<u32>> {
    let mut s = ConeState::seeded(ball, seed, None);
    saturate(&mut s, ball, sys).ok()?;
    Some(s.members().iter().collect())
}

pub fn saturation_laws() -> Result<(), String> {
    let groups: Vec<(Presentation, usize)> = vec![
        (parse_presentation("gens: a b").unwrap(), 3),
        (parse_presentation("gens: a b\nrel: abAB").unwrap(), 4),
        (parse_presentation("gens: a b\nrel: aaaBB").unwrap(), 4),
        (
            parse_presentation("gens: a b\nrel: aa\nrel: bbb\nrel: abab").unwrap(),
            3,
        ),
    ];
    let built: Vec<(RewritingSystem, Ball)> = groups
        .iter()
        .map(|(p, r)| {
            let s = RewritingSystem::knuth_bendix(p, &KbBudget::default());
            let limits = BallLimits {
                allow_bounded: true,
                ..BallLimits::default()
            };
            let b = Ball::with_table(&s, *r, &limits).unwrap();
            (s, b)
        })
        .collect();
    let built = &built;
    let strat = (0..built.len()).prop_flat_map(move |i| {
        let n = built[i].1.len() as u32;
        (
            Just(i),
            prop::collection::vec(1..n, 0..4),
            prop::collection::vec(1..n, 0..3),
        )
    });
    check(300, strat, |(i, s, extra)| {
        let (sys, ball) = &built[i];
        let c = closure(ball, sys, &s);
        prop_assert_eq!(&c, &naive_closure(ball, sys, &s));
        let mut t = s.clone();
        t.extend(&extra);
        let ct = closure(ball, sys, &t);
        match (&c, &ct) {
            (Some(c), Some(ct)) => {
                // extensive, idempotent, monotone, closed
                prop_assert!(s.iter().all(|x| c.contains(x)));
                prop_assert!(c.is_subset(ct));
                let mut cv: Vec<u32> = c.iter().copied().collect();
                cv.sort();
                let again = closure(ball, sys, &cv);
                prop_assert_eq!(again.as_ref(), Some(c));
                for &x in c {
                    for &y in c {
                        let z = ball.mul(x, y, sys);
                        prop_assert!(z == OUT_OF_BALL || c.contains(&z));
                    }
                }
            }
            (None, Some(_)) => prop_assert!(false, "contradiction lost by adding elements"),
            _ => {}
        }
        Ok(())
    })
}

fn tamper(c: &Certificate) -> Certificate {
    fn first_leaf(n: &mut CertNode) -> &mut CertNode {
        match n {
            CertNode::Branch { positive, .. } => first_leaf(positive),
            leaf => leaf,
        }
    }
    let mut bad = c.clone();
    if let CertNode::Leaf { steps } = first_leaf(&mut bad.tree) {
        let last = steps.last_mut().unwrap();
        last.product = last.x.clone();
    }
    bad
}

/// Every certificate the driver emits on a set of finite groups parses back,
/// checks, and stops checking once a step is corrupted.
pub fn certificate_round_trip() -> Result<(), String> {
    let mut emitted = 0;
    for g in finite_groups() {
        for seed in [SeedMode::First, SeedMode::FirstInverse, SeedMode::Unseeded] {
            let cfg = OrderConfig {
                radii: (1..=13).collect(),
                seed,
                ..OrderConfig::default()
            };
            let p = &g.presentation;
            let rep = test_left_orderability(p, &cfg).map_err(|e| e.to_string())?;
            if g.name == "trivial" {
                continue;
            }
            let c = rep
                .verdict
                .certificate()
                .ok_or_else(|| format!("{}: finite group not refuted", g.name))?;
            emitted += 1;
            let back = Certificate::from_json(&c.to_json()).map_err(|e| e.to_string())?;
            ensure(back == *c, || {
                format!("{}: JSON round trip changed the certificate", g.name)
            })?;
            check_certificate(&back, p).map_err(|e| format!("{}: {e}", g.name))?;
            ensure(check_certificate(&tamper(c), p).is_err(), || {
                format!("{}: corrupted certificate accepted", g.name)
            })?;
        }
    }
    ensure(emitted > 0, || "no certificates emitted".into())
}
