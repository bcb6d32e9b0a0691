//! Balls B(r) in the Cayley graph, indexed by shortlex normal forms.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use thiserror::Error;

use crate::rewrite::{RewriteError, RewritingSystem};
use crate::words::{Letter, Word};

/// Table entry for a product whose normal form is longer than the radius.
pub const OUT_OF_BALL: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BallError {
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error("ball exceeds {limit} elements at radius {radius}")]
    ResourceExceeded { limit: usize, radius: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct BallLimits {
    /// Cap on the number of ball elements.
    pub max_elements: usize,
    /// Largest ball for which the multiplication table is precomputed.
    pub table_limit: usize,
    /// Accept a system that is not known to be confluent.
    pub allow_bounded: bool,
}

impl Default for BallLimits {
    fn default() -> Self {
        BallLimits {
            max_elements: 2_000_000,
            table_limit: 20_000,
            allow_bounded: false,
        }
    }
}

#[derive(Debug)]
enum Table {
    Narrow(Vec<u16>),
    Wide(Vec<u32>),
    OnDemand(Mutex<HashMap<(u32, u32), u32>>),
    Absent,
}

/// The ball of radius `r` about the identity.
///
/// Elements are the irreducible words of length at most `r`, numbered in
/// shortlex order, so id 0 is the identity. When the rewriting system is
/// confluent these are exactly the group elements of word length <= r.
#[derive(Debug)]
pub struct Ball {
    radius: usize,
    width: usize,
    reps: Vec<Word>,
    /// `sphere_starts[k]` is the first id of length `k`; one extra sentinel.
    sphere_starts: Vec<usize>,
    child: Vec<u32>,
    parent: Vec<u32>,
    last: Vec<Letter>,
    inv: Vec<u32>,
    table: Table,
    exact: bool,
}

impl Ball {
    /// Breadth-first closure of the identity under right multiplication by letters.
    pub fn build(sys: &RewritingSystem, radius: usize, limits: &BallLimits) -> Result<Ball, BallError> {
        if !limits.allow_bounded {
            sys.require_confluent()?;
        }
        let width = sys.alphabet().letter_count();
        let mut reps = vec![Word::empty()];
        let mut parent = vec![OUT_OF_BALL];
        let mut last = vec![Letter::from_index(0)];
        let mut child: Vec<u32> = vec![OUT_OF_BALL; width];
        let mut sphere_starts = vec![0, 1];
        let mut buf = Vec::with_capacity(radius + 1);
        for k in 0..radius {
            let (lo, hi) = (sphere_starts[k], sphere_starts[k + 1]);
            for u in lo..hi {
                for x in 0..width {
                    let x = Letter::from_index(x);
                    buf.clear();
                    buf.extend_from_slice(reps[u].letters());
                    buf.push(x);
                    if sys.ends_with_redex(&buf) {
                        continue;
                    }
                    let id = reps.len();
                    if id >= limits.max_elements {
                        return Err(BallError::ResourceExceeded {
                            limit: limits.max_elements,
                            radius: k + 1,
                        });
                    }
                    child[u * width + x.index()] = id as u32;
                    reps.push(Word::from_letters(buf.clone()));
                    parent.push(u as u32);
                    last.push(x);
                    child.extend(std::iter::repeat_n(OUT_OF_BALL, width));
                }
            }
            sphere_starts.push(reps.len());
        }
        let mut ball = Ball {
            radius,
            width,
            reps,
            sphere_starts,
            child,
            parent,
            last,
            inv: Vec::new(),
            table: Table::Absent,
            exact: sys.is_confluent(),
        };
        ball.inv = (0..ball.len())
            .map(|i| {
                let w = sys.rewrite(&ball.reps[i].invert());
                ball.lookup(w.letters()).unwrap_or(OUT_OF_BALL)
            })
            .collect();
        Ok(ball)
    }

    /// Builds the ball and populates its multiplication table.
    pub fn with_table(sys: &RewritingSystem, radius: usize, limits: &BallLimits) -> Result<Ball, BallError> {
        let mut ball = Ball::build(sys, radius, limits)?;
        ball.populate_table(sys, limits.table_limit);
        Ok(ball)
    }

    /// Precomputes the full table when the ball has at most `table_limit`
    /// elements, otherwise switches to memoized on-demand products.
    pub fn populate_table(&mut self, sys: &RewritingSystem, table_limit: usize) {
        let n = self.len();
        if n > table_limit {
            self.table = Table::OnDemand(Mutex::new(HashMap::new()));
            return;
        }
        let rows: Vec<Vec<u32>> = (0..n).into_par_iter().map(|i| self.compute_row(sys, i)).collect();
        self.table = if n < u16::MAX as usize {
            let mut flat = Vec::with_capacity(n * n);
            for row in rows {
                flat.extend(
                    row.into_iter()
                        .map(|v| if v == OUT_OF_BALL { u16::MAX } else { v as u16 }),
                );
            }
            Table::Narrow(flat)
        } else {
            Table::Wide(rows.concat())
        };
    }

    /// Products `rep_i · rep_j` for all j, walking the prefix tree of the ball
    /// so each product is one letter appended to an earlier one.
    fn compute_row(&self, sys: &RewritingSystem, i: usize) -> Vec<u32> {
        let n = self.len();
        let mut row = vec![OUT_OF_BALL; n];
        let mut starts = vec![0usize; n + 1];
        let mut arena: Vec<Letter> = Vec::with_capacity(n * (self.radius + 2));
        arena.extend_from_slice(self.reps[i].letters());
        starts[1] = arena.len();
        row[0] = i as u32;
        let mut scratch = Vec::with_capacity(2 * self.radius + 1);
        for j in 1..n {
            let p = self.parent[j] as usize;
            scratch.clear();
            scratch.extend_from_slice(&arena[starts[p]..starts[p + 1]]);
            sys.reduce_onto(&mut scratch, &[self.last[j]]);
            if scratch.len() <= self.radius {
                row[j] = self.lookup(&scratch).unwrap_or(OUT_OF_BALL);
            }
            arena.extend_from_slice(&scratch);
            starts[j + 1] = arena.len();
        }
        row
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Whether the ball was built from a confluent system.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn has_table(&self) -> bool {
        matches!(self.table, Table::Narrow(_) | Table::Wide(_))
    }

    pub fn is_on_demand(&self) -> bool {
        matches!(self.table, Table::OnDemand(_))
    }

    pub fn rep(&self, id: u32) -> &Word {
        &self.reps[id as usize]
    }

    pub fn reps(&self) -> &[Word] {
        &self.reps
    }

    pub fn inverse(&self, id: u32) -> u32 {
        self.inv[id as usize]
    }

    /// Sizes #B(0), #B(1), ..., #B(r).
    pub fn sizes(&self) -> Vec<usize> {
        self.sphere_starts[1..].to_vec()
    }

    /// Id of an irreducible word, if it lies in the ball.
    pub fn lookup(&self, w: &[Letter]) -> Option<u32> {
        let mut node = 0usize;
        for l in w {
            let next = *self.child.get(node * self.width + l.index())?;
            if next == OUT_OF_BALL {
                return None;
            }
            node = next as usize;
        }
        Some(node as u32)
    }

    /// Ball id of a normal form, or `OUT_OF_BALL`.
    #[inline]
    pub fn mul(&self, i: u32, j: u32, sys: &RewritingSystem) -> u32 {
        let n = self.reps.len();
        match &self.table {
            Table::Narrow(t) => {
                let v = t[i as usize * n + j as usize];
                if v == u16::MAX {
                    OUT_OF_BALL
                } else {
                    v as u32
                }
            }
            Table::Wide(t) => t[i as usize * n + j as usize],
            Table::OnDemand(cache) => {
                if let Some(&v) = cache.lock().unwrap().get(&(i, j)) {
                    return v;
                }
                let v = self.compute_product(sys, i, j);
                cache.lock().unwrap().insert((i, j), v);
                v
            }
            Table::Absent => self.compute_product(sys, i, j),
        }
    }

    fn compute_product(&self, sys: &RewritingSystem, i: u32, j: u32) -> u32 {
        let mut w = self.reps[i as usize].letters().to_vec();
        sys.reduce_onto(&mut w, self.reps[j as usize].letters());
        if w.len() <= self.radius {
            self.lookup(&w).unwrap_or(OUT_OF_BALL)
        } else {
            OUT_OF_BALL
        }
    }

    /// Ball sizes as CSV lines `radius,size`.
    pub fn sizes_csv(&self) -> String {
        let mut s = String::from("radius,size\n");
        for (r, n) in self.sizes().iter().enumerate() {
            s.push_str(&format!("{r},{n}\n"));
        }
        s
    }
}

/// Ball sizes with an exponential fit `#B(r) ≈ A·C^r`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BallStats {
    pub sizes: Vec<usize>,
    pub fit_from: usize,
    pub fit_to: usize,
    pub scale: f64,
    pub growth: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

impl BallStats {
    /// Least-squares fit of `ln #B(r) = ln A + r ln C` over radii `from..=to`.
    pub fn fit(sizes: &[usize], from: usize, to: usize) -> BallStats {
        assert!(from < to && to < sizes.len(), "fit range outside the sizes");
        let pts: Vec<(f64, f64)> = (from..=to).map(|r| (r as f64, (sizes[r] as f64).ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
        BallStats {
            sizes: sizes.to_vec(),
            fit_from: from,
            fit_to: to,
            scale: intercept.exp(),
            growth: slope.exp(),
            residual,
        }
    }
}
