//! The greedy tree-planting matcher.
//!
//! Each step pivots on the smallest unmatched source vertex `u`, enumerates the
//! leaf tuples `L` of tree copies rooted at `u` whose leaves are already matched
//! and whose internal vertices are not, and walks them in seeded priority order.
//! The first `L` whose image under the current partial permutation also hosts
//! a tree copy in the target graph wins, and the step matches all `chi` internal
//! vertices at once. Otherwise `u` alone goes to the smallest free target.
//!
//! Vertices are 1-indexed in every public type; the state works 0-based.

mod certificate;
mod priority;
mod search;

use num::ToPrimitive;
use serde::Serialize;

use crate::graph::GraphSample;
use crate::rational::{ceil_int, floor_int, int, Rational};
use crate::tree::TreeTemplate;
use search::TreeShape;

pub use certificate::{verify_certificates, CertificateReport};
pub use priority::{tuple_priority, TuplePriority};

pub const DEFAULT_EMBED_CAP: u64 = 1_000_000;

#[derive(Debug, thiserror::Error)]
pub enum MatchError {
    #[error("n = {n} is too small: the seed set floor(eta*n) = {seeded} must be at least xi = {xi} and n at least chi + floor(eta*n) = {needed}; raise --n or --epsilon")]
    Sizing { n: usize, seeded: usize, xi: usize, needed: usize },
    #[error("graphs have different vertex counts ({0} vs {1})")]
    VertexCount(usize, usize),
    #[error("tuple {0:?} repeats a coordinate")]
    RepeatedCoordinate(Vec<usize>),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("eta must be positive and below 1")]
    Eta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchConfig {
    pub eta: Rational,
    pub kappa0: u64,
    pub embed_cap: u64,
    /// seed of the tuple orders
    pub seed: u64,
}

/// `(L, Q, Q')` of a successful step, 1-indexed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatchTriple {
    pub l: Vec<u32>,
    pub q: Vec<u32>,
    pub q_prime: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub s: usize,
    pub u_s: u32,
    pub success: bool,
    pub mt: Option<MatchTriple>,
    pub explored: usize,
    pub failed: usize,
    pub cand_size: usize,
    pub cap_hit: bool,
}

/// Mutable state of one greedy run.
#[derive(Clone, Debug)]
pub struct MatchState {
    n: usize,
    config: MatchConfig,
    shape: TreeShape,
    /// `pi[u]` for matched sources, `u32::MAX` otherwise
    pi: Vec<u32>,
    src_matched: Vec<bool>,
    dst_free: Vec<bool>,
    usage: Vec<u64>,
    remaining: usize,
    /// `ceil(eta n)`: the loop runs while `remaining` reaches it
    stop_below: usize,
    seeded: usize,
    next_src: usize,
    next_dst: usize,
    step: usize,
}

impl MatchState {
    /// `pi(i) = i` on `1..=floor(eta n)`.
    pub fn new(n: usize, tree: &TreeTemplate, config: MatchConfig) -> Result<Self, MatchError> {
        if config.eta <= int(0) || config.eta >= int(1) {
            return Err(MatchError::Eta);
        }
        let scaled = &config.eta * int(n as i64);
        let seeded = floor_int(&scaled).to_usize().ok_or(MatchError::Eta)?;
        let stop_below = ceil_int(&scaled).to_usize().ok_or(MatchError::Eta)?;
        let needed = tree.chi() + seeded;
        if seeded < tree.xi() || n < needed {
            return Err(MatchError::Sizing { n, seeded, xi: tree.xi(), needed });
        }
        let mut pi = vec![u32::MAX; n];
        let mut src_matched = vec![false; n];
        let mut dst_free = vec![true; n];
        for v in 0..seeded {
            pi[v] = v as u32;
            src_matched[v] = true;
            dst_free[v] = false;
        }
        Ok(MatchState {
            n,
            config,
            shape: TreeShape::new(tree),
            pi,
            src_matched,
            dst_free,
            usage: vec![0; n],
            remaining: n - seeded,
            stop_below,
            seeded,
            next_src: seeded,
            next_dst: seeded,
            step: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> &MatchConfig {
        &self.config
    }

    /// Size of the identity seed `floor(eta n)`.
    pub fn seeded(&self) -> usize {
        self.seeded
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    /// `|R|`, the number of unmatched sources.
    pub fn remaining(&self) -> usize {
        self.remaining
    }

    /// Whether another step runs (`|R| >= eta n`).
    pub fn active(&self) -> bool {
        self.remaining >= self.stop_below
    }

    /// `pi(v)` for a 1-indexed source, if matched.
    pub fn image(&self, v: usize) -> Option<usize> {
        let w = *self.pi.get(v.checked_sub(1)?)?;
        (w != u32::MAX).then_some(w as usize + 1)
    }

    pub fn is_matched_source(&self, v: usize) -> bool {
        v >= 1 && v <= self.n && self.src_matched[v - 1]
    }

    pub fn is_free_target(&self, v: usize) -> bool {
        v >= 1 && v <= self.n && self.dst_free[v - 1]
    }

    pub fn usage(&self, v: usize) -> u64 {
        self.usage[v - 1]
    }

    /// Matched sources still below the usage cap, ascending and 1-indexed.
    pub fn leaf_pool(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.in_pool(v)).map(|v| v + 1).collect()
    }

    /// Candidate leaf tuples for pivot `u` in priority order, each with the
    /// lexicographically smallest internal witness (1-indexed), and whether the
    /// embedding cap stopped the enumeration.
    pub fn source_candidates(&self, g: &GraphSample, u: usize) -> Result<(Vec<(Vec<usize>, Vec<usize>)>, bool), MatchError> {
        if u == 0 || u > self.n || self.src_matched[u - 1] {
            return Err(MatchError::Contract(format!("pivot {u} is not an unmatched source")));
        }
        let pool: Vec<bool> = (0..self.n).map(|v| self.in_pool(v)).collect();
        let free_src: Vec<bool> = self.src_matched.iter().map(|m| !m).collect();
        let c = search::source_candidates(g, &self.shape, (u - 1) as u32, &free_src, &pool, self.config.embed_cap, self.config.seed);
        let lift = |t: &Vec<u32>| t.iter().map(|&v| v as usize + 1).collect::<Vec<_>>();
        Ok((c.entries.iter().map(|(l, q)| (lift(l), lift(q))).collect(), c.cap_hit))
    }

    /// Internal tuple of minimal priority among tree copies in `h` whose leaves
    /// sit at `leaf_images` and whose internal vertices are free targets.
    pub fn destination_match(&self, h: &GraphSample, leaf_images: &[usize]) -> Result<Option<Vec<usize>>, MatchError> {
        if leaf_images.len() != self.shape.xi
            || leaf_images.iter().any(|&t| t == 0 || t > self.n || self.dst_free[t - 1])
        {
            return Err(MatchError::Contract("leaf images must be matched targets".into()));
        }
        let images: Vec<u32> = leaf_images.iter().map(|&t| (t - 1) as u32).collect();
        let found = search::destination_match(h, &self.shape, &images, &self.dst_free, self.config.embed_cap, self.config.seed);
        Ok(found.best.map(|q| q.iter().map(|&v| v as usize + 1).collect()))
    }

    fn in_pool(&self, v: usize) -> bool {
        self.src_matched[v] && self.usage[v] < self.config.kappa0
    }

    /// One iteration of the main loop. Requires [`MatchState::active`].
    pub fn step(&mut self, g: &GraphSample, h: &GraphSample) -> Result<StepRecord, MatchError> {
        if !self.active() {
            return Err(MatchError::Contract("step called with |R| < eta n".into()));
        }
        if g.n() != self.n || h.n() != self.n {
            return Err(MatchError::VertexCount(g.n(), h.n()));
        }
        self.step += 1;
        while self.src_matched[self.next_src] {
            self.next_src += 1;
        }
        let u = self.next_src as u32;
        let pool: Vec<bool> = (0..self.n).map(|v| self.in_pool(v)).collect();
        let free_src: Vec<bool> = self.src_matched.iter().map(|m| !m).collect();
        let cands = search::source_candidates(
            g,
            &self.shape,
            u,
            &free_src,
            &pool,
            self.config.embed_cap,
            self.config.seed,
        );
        let mut record = StepRecord {
            s: self.step,
            u_s: u + 1,
            success: false,
            mt: None,
            explored: 0,
            failed: 0,
            cand_size: cands.entries.len(),
            cap_hit: cands.cap_hit,
        };
        let mut images = vec![0u32; self.shape.xi];
        for (l, q) in &cands.entries {
            record.explored += 1;
            for (slot, &v) in images.iter_mut().zip(l) {
                *slot = self.pi[v as usize];
            }
            let found = search::destination_match(
                h,
                &self.shape,
                &images,
                &self.dst_free,
                self.config.embed_cap,
                self.config.seed,
            );
            record.cap_hit |= found.cap_hit;
            match found.best {
                Some(q_prime) => {
                    for (&a, &b) in q.iter().zip(&q_prime) {
                        self.pi[a as usize] = b;
                        self.src_matched[a as usize] = true;
                        self.dst_free[b as usize] = false;
                    }
                    for &v in l.iter().chain(q) {
                        self.usage[v as usize] += 1;
                    }
                    self.remaining -= q.len();
                    record.success = true;
                    record.mt = Some(MatchTriple {
                        l: l.iter().map(|v| v + 1).collect(),
                        q: q.iter().map(|v| v + 1).collect(),
                        q_prime: q_prime.iter().map(|v| v + 1).collect(),
                    });
                    return Ok(record);
                }
                None => record.failed += 1,
            }
        }
        let target = self.min_free_target();
        self.pi[u as usize] = target;
        self.src_matched[u as usize] = true;
        self.dst_free[target as usize] = false;
        self.remaining -= 1;
        Ok(record)
    }

    fn min_free_target(&mut self) -> u32 {
        while !self.dst_free[self.next_dst] {
            self.next_dst += 1;
        }
        self.next_dst as u32
    }

    /// Pairs the unmatched sources with the free targets in ascending order and
    /// returns the 1-indexed permutation `perm[i-1] = pi(i)`.
    pub fn complete(mut self) -> Vec<u32> {
        let sources: Vec<usize> = (0..self.n).filter(|&v| !self.src_matched[v]).collect();
        let targets: Vec<usize> = (0..self.n).filter(|&v| self.dst_free[v]).collect();
        debug_assert_eq!(sources.len(), targets.len());
        for (s, t) in sources.into_iter().zip(targets) {
            self.pi[s] = t as u32;
        }
        self.pi.iter().map(|&w| w + 1).collect()
    }
}

/// Output of [`run_greedy`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyOutcome {
    /// `permutation[i-1] = pi(i)`
    pub permutation: Vec<u32>,
    pub trace: Vec<StepRecord>,
    pub seeded: usize,
    pub successes: usize,
}

impl GreedyOutcome {
    pub fn cap_hits(&self) -> usize {
        self.trace.iter().filter(|r| r.cap_hit).count()
    }
}

pub fn run_greedy(
    g: &GraphSample,
    h: &GraphSample,
    tree: &TreeTemplate,
    config: MatchConfig,
) -> Result<GreedyOutcome, MatchError> {
    if g.n() != h.n() {
        return Err(MatchError::VertexCount(g.n(), h.n()));
    }
    let mut state = MatchState::new(g.n(), tree, config)?;
    let mut trace = Vec::new();
    while state.active() {
        let before = state.remaining();
        let rec = state.step(g, h)?;
        let shrink = if rec.success { tree.chi() } else { 1 };
        debug_assert_eq!(before - state.remaining(), shrink);
        trace.push(rec);
    }
    let seeded = state.seeded();
    let permutation = state.complete();
    let successes = trace.iter().filter(|r| r.success).count();
    Ok(GreedyOutcome { permutation, trace, seeded, successes })
}
