//! BL/EL chunk scheduling as one-to-one two-sided matching.
//!
//! Both sides rank partners by the pair distortion `D[i][j]` (lower is
//! better), ties broken by ascending index. [`becma`] runs deferred
//! acceptance where a held partner is replaced only by a proposer that forms
//! a blocking pair with the acceptor.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::power::{self, LinkParams, Preallocation};
use crate::rng;

/// Default upper bound on `M` for [`exhaustive_match`].
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 9;

/// Square matrix of pair distortions; row `i` is BL chunk `i`, column `j` is
/// EL chunk `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    m: usize,
    d: Vec<f64>,
}

impl DistortionMatrix {
    /// Row-major `m x m` entries, each finite and non-negative.
    pub fn new(m: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != m * m {
            return Err(Error::input(format!(
                "distortion matrix of order {m} needs {} entries, got {}",
                m * m,
                d.len()
            )));
        }
        if let Some(bad) = d.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input(format!(
                "distortion entry ({}, {}) is {}; entries must be finite and >= 0",
                bad / m.max(1),
                bad % m.max(1),
                d[bad]
            )));
        }
        Ok(Self { m, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::input("distortion matrix must be square"));
        }
        Self::new(m, rows.concat())
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut d = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                d.push(f(i, j));
            }
        }
        Self::new(m, d)
    }

    /// Entries `D[i][j]` for every hypothetical pair under the two-stage power
    /// rule: stage-one budgets fixed globally, stage two solved per pair.
    pub fn two_stage(
        lambdas_bl: &[f64],
        lambdas_el: &[f64],
        prealloc: &Preallocation,
        link: &LinkParams,
    ) -> Result<Self> {
        let m = lambdas_bl.len();
        if lambdas_el.len() != m || prealloc.bl.len() != m || prealloc.el.len() != m {
            return Err(Error::input("layer sizes and budgets disagree"));
        }
        let mut d = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let budget = prealloc.pair(i, j).p_pair();
                d.push(power::optimal_pair_distortion(lambdas_bl[i], lambdas_el[j], budget, link)?);
            }
        }
        Self::new(m, d)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.m + j]
    }

    pub fn transposed(&self) -> Self {
        let m = self.m;
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                d[j * m + i] = self.d[i * m + j];
            }
        }
        Self { m, d }
    }
}

/// A bijection from BL chunks to EL chunks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    bl_to_el: Vec<usize>,
}

impl Matching {
    pub fn new(bl_to_el: Vec<usize>) -> Result<Self> {
        let m = bl_to_el.len();
        let mut seen = vec![false; m];
        for &j in &bl_to_el {
            if j >= m || std::mem::replace(&mut seen[j], true) {
                return Err(Error::input(format!("{bl_to_el:?} is not a permutation")));
            }
        }
        Ok(Self { bl_to_el })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            bl_to_el: (0..m).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.bl_to_el.len()
    }

    /// EL partner of BL chunk `i`.
    pub fn el_of(&self, i: usize) -> usize {
        self.bl_to_el[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.bl_to_el
    }

    /// BL partner of each EL chunk.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.m()];
        for (i, &j) in self.bl_to_el.iter().enumerate() {
            inv[j] = i;
        }
        inv
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bl_to_el.iter().copied().enumerate()
    }
}

/// Each side's partners in order of preference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceLists {
    pub bl: Vec<Vec<usize>>,
    pub el: Vec<Vec<usize>>,
}

impl PreferenceLists {
    /// `rank[a][b]`: position of `b` in `a`'s list.
    fn ranks(lists: &[Vec<usize>]) -> Vec<Vec<usize>> {
        lists
            .iter()
            .map(|list| {
                let mut rank = vec![0; list.len()];
                for (r, &b) in list.iter().enumerate() {
                    rank[b] = r;
                }
                rank
            })
            .collect()
    }
}

fn ascending_by(mut key: impl FnMut(usize) -> f64, m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    order
}

/// Sorts each BL row and each EL column by ascending distortion.
pub fn build_preferences(d: &DistortionMatrix) -> PreferenceLists {
    let m = d.m();
    PreferenceLists {
        bl: (0..m).map(|i| ascending_by(|j| d.get(i, j), m)).collect(),
        el: (0..m).map(|j| ascending_by(|i| d.get(i, j), m)).collect(),
    }
}

/// Which side makes proposals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Bl,
    El,
}

/// A BECMA result with its proposal count.
#[derive(Debug, Clone, PartialEq)]
pub struct BecmaOutcome {
    pub matching: Matching,
    pub proposals: usize,
}

/// Deferred acceptance. Returns the proposer-to-acceptor assignment.
fn deferred_acceptance(proposer_prefs: &[Vec<usize>], acceptor_prefs: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let m = proposer_prefs.len();
    let acceptor_rank = PreferenceLists::ranks(acceptor_prefs);
    let mut next = vec![0usize; m];
    let mut held_by: Vec<Option<usize>> = vec![None; m];
    let mut partner = vec![usize::MAX; m];
    let mut unmatched: BTreeSet<usize> = (0..m).collect();
    let mut proposals = 0;

    while let Some(p) = unmatched.pop_first() {
        let a = proposer_prefs[p][next[p]];
        next[p] += 1;
        proposals += 1;
        match held_by[a] {
            None => {
                held_by[a] = Some(p);
                partner[p] = a;
            }
            // An unmatched proposer prefers any acceptor to none, so the pair
            // blocks exactly when the acceptor ranks it above its holder.
            Some(q) if acceptor_rank[a][p] < acceptor_rank[a][q] => {
                held_by[a] = Some(p);
                partner[p] = a;
                partner[q] = usize::MAX;
                unmatched.insert(q);
            }
            Some(_) => {
                unmatched.insert(p);
            }
        }
    }
    (partner, proposals)
}

/// BL-EL chunk matching with proposal statistics.
pub fn becma_with_stats(d: &DistortionMatrix, driver: Driver) -> BecmaOutcome {
    let prefs = build_preferences(d);
    let (matching, proposals) = match driver {
        Driver::Bl => {
            let (bl_to_el, n) = deferred_acceptance(&prefs.bl, &prefs.el);
            (bl_to_el, n)
        }
        Driver::El => {
            let (el_to_bl, n) = deferred_acceptance(&prefs.el, &prefs.bl);
            let mut bl_to_el = vec![0; el_to_bl.len()];
            for (j, &i) in el_to_bl.iter().enumerate() {
                bl_to_el[i] = j;
            }
            (bl_to_el, n)
        }
    };
    BecmaOutcome {
        matching: Matching::new(matching).expect("deferred acceptance yields a permutation"),
        proposals,
    }
}

/// BL-EL chunk matching: a stable schedule in at most `M²` proposals.
pub fn becma(d: &DistortionMatrix, driver: Driver) -> Matching {
    becma_with_stats(d, driver).matching
}

/// Advances `perm` to the next permutation in lexicographic order.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| perm[i] < perm[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).expect("successor exists");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}

/// Minimum-total-distortion matching by enumerating all `M!` permutations;
/// the first minimum in lexicographic order wins.
pub fn exhaustive_match(d: &DistortionMatrix, cap: usize) -> Result<Matching> {
    let m = d.m();
    if m > cap {
        return Err(Error::TooLarge { m, cap });
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = perm.clone();
    let mut best_total = f64::INFINITY;
    loop {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| d.get(i, j)).sum();
        if total < best_total {
            best_total = total;
            best.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(Matching { bl_to_el: best })
}

/// Every permutation of `0..m` in lexicographic order.
pub fn all_matchings(m: usize) -> Vec<Matching> {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut out = vec![Matching { bl_to_el: perm.clone() }];
    while next_permutation(&mut perm) {
        out.push(Matching { bl_to_el: perm.clone() });
    }
    out
}

/// Uniformly random matching, deterministic per seed.
pub fn random_match(m: usize, seed: u64) -> Matching {
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut rng::stream(seed, &[rng::tag::SCHEDULE]));
    Matching { bl_to_el: perm }
}

/// True when no pair `(i, j)` strictly prefers each other to their partners.
pub fn is_stable(pi: &Matching, d: &DistortionMatrix) -> bool {
    let inv = pi.inverse();
    (0..d.m()).all(|i| {
        (0..d.m()).all(|j| {
            let dij = d.get(i, j);
            !(dij < d.get(i, pi.el_of(i)) && dij < d.get(inv[j], j))
        })
    })
}

/// Objective: `Σ_i D[i][π(i)]`.
pub fn total_distortion(pi: &Matching, d: &DistortionMatrix) -> f64 {
    pi.pairs().map(|(i, j)| d.get(i, j)).sum()
}
