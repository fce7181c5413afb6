//! Overlap measurement, exact small-instance oracles and baselines.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::graph::GraphSample;

pub const BRUTE_FORCE_MAX_N: usize = 9;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("graphs have different vertex counts ({0} vs {1})")]
    VertexCount(usize, usize),
    #[error("permutation is not a bijection of 1..={0}")]
    NotBijection(usize),
    #[error("exhaustive search is limited to n <= {BRUTE_FORCE_MAX_N}, got {0}")]
    TooLarge(usize),
    #[error("rho must be a non-negative finite number, got {0}")]
    Rho(f64),
    #[error("p must lie in [0, 1], got {0}")]
    Density(f64),
    #[error("threshold must be at least 1")]
    Threshold,
}

/// Overlap value with the certified share from a greedy run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverlapResult {
    pub value: usize,
    pub per_step_certified: usize,
    pub ratio: f64,
}

fn check_permutation(n: usize, pi: &[u32]) -> Result<(), EvalError> {
    if pi.len() != n {
        return Err(EvalError::NotBijection(n));
    }
    let mut seen = vec![false; n];
    for &t in pi {
        let t = t as usize;
        if t == 0 || t > n || seen[t - 1] {
            return Err(EvalError::NotBijection(n));
        }
        seen[t - 1] = true;
    }
    Ok(())
}

/// Number of edges `{i, j}` of `g` with `{pi(i), pi(j)}` an edge of `h`.
/// `pi` is 1-indexed: `pi[i-1]` is the image of `i`.
pub fn overlap(g: &GraphSample, h: &GraphSample, pi: &[u32]) -> Result<usize, EvalError> {
    if g.n() != h.n() {
        return Err(EvalError::VertexCount(g.n(), h.n()));
    }
    let n = g.n();
    check_permutation(n, pi)?;
    let fwd: Vec<u32> = pi.iter().map(|&t| t - 1).collect();
    let count = if g.edge_count() <= h.edge_count() {
        count_mapped(g, h, &fwd)
    } else {
        let mut inv = vec![0u32; n];
        for (i, &t) in fwd.iter().enumerate() {
            inv[t as usize] = i as u32;
        }
        count_mapped(h, g, &inv)
    };
    Ok(count)
}

fn count_mapped(a: &GraphSample, b: &GraphSample, map: &[u32]) -> usize {
    let mut count = 0;
    for u in 0..a.n() as u32 {
        for &v in a.neighbors0(u) {
            if v > u && b.has_edge0(map[u as usize], map[v as usize]) {
                count += 1;
            }
        }
    }
    count
}

/// Best overlap over all `n!` permutations; the lexicographically smallest
/// optimal permutation is returned.
pub fn brute_force_max(g: &GraphSample, h: &GraphSample) -> Result<(Vec<u32>, usize), EvalError> {
    if g.n() != h.n() {
        return Err(EvalError::VertexCount(g.n(), h.n()));
    }
    let n = g.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(EvalError::TooLarge(n));
    }
    let mut hm = vec![[false; BRUTE_FORCE_MAX_N]; n];
    for (i, j) in h.edges() {
        hm[i - 1][j - 1] = true;
        hm[j - 1][i - 1] = true;
    }
    let g_edges: Vec<(usize, usize)> = g.edges().map(|(i, j)| (i - 1, j - 1)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (perm.clone(), usize::MAX);
    loop {
        let value = g_edges.iter().filter(|&&(i, j)| hm[perm[i]][perm[j]]).count();
        if best.1 == usize::MAX || value > best.1 {
            best = (perm.clone(), value);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok((best.0.iter().map(|&t| t as u32 + 1).collect(), best.1))
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot has a successor");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `ln n! + ln P[Bin(C(n,2), p^2) >= ceil(rho n)]`; `-inf` when the threshold
/// exceeds the number of pairs.
pub fn first_moment_bound(n: usize, p: f64, rho: f64) -> Result<f64, EvalError> {
    if !rho.is_finite() || rho < 0.0 {
        return Err(EvalError::Rho(rho));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(EvalError::Density(p));
    }
    let trials = (n as u64) * (n.saturating_sub(1) as u64) / 2;
    let threshold = (rho * n as f64).ceil() as u64;
    let ln_fact = ln_gamma(n as f64 + 1.0);
    Ok(ln_fact + ln_binomial_upper_tail(trials, p * p, threshold))
}

/// `ln P[Bin(trials, q) >= t]` by log-space summation of the pmf recurrence.
pub fn ln_binomial_upper_tail(trials: u64, q: f64, t: u64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    if t > trials || q <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if q >= 1.0 {
        return 0.0;
    }
    let nf = trials as f64;
    let (ln_q, ln_1q) = (q.ln(), (-q).ln_1p());
    let ln_odds = ln_q - ln_1q;
    let ln_pmf = |k: u64| {
        ln_gamma(nf + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma(nf - k as f64 + 1.0)
            + k as f64 * ln_q
            + (nf - k as f64) * ln_1q
    };
    let mode = ((nf + 1.0) * q).floor() as u64;
    if t <= mode {
        // complement: sum the lower tail downwards from t - 1
        let mut term = ln_pmf(t - 1);
        let mut acc = term;
        let mut k = t - 1;
        while k > 0 {
            term += (k as f64).ln() - ((trials - k + 1) as f64).ln() - ln_odds;
            k -= 1;
            acc = log_add(acc, term);
            if term < acc - 60.0 {
                break;
            }
        }
        return (-acc.exp()).ln_1p().min(0.0);
    }
    let mut term = ln_pmf(t);
    let mut acc = term;
    let mut k = t;
    while k < trials {
        term += ((trials - k) as f64).ln() - ((k + 1) as f64).ln() + ln_odds;
        k += 1;
        acc = log_add(acc, term);
        if term < acc - 60.0 {
            break;
        }
    }
    acc.min(0.0)
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `C(n,2) p^2`, the mean overlap of any fixed permutation.
pub fn expected_random_overlap(n: usize, p: f64) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0 * p * p
}

/// Overlaps of `count` uniformly random permutations.
pub fn random_permutation_overlaps(g: &GraphSample, h: &GraphSample, count: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi: Vec<u32> = (1..=g.n() as u32).collect();
    (0..count)
        .map(|_| {
            pi.shuffle(&mut rng);
            overlap(g, h, &pi)
        })
        .collect()
}

/// Permutation and per-step hit flags of [`threshold_matcher`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdOutcome {
    pub permutation: Vec<u32>,
    pub hits: Vec<bool>,
}

impl ThresholdOutcome {
    pub fn hit_count(&self) -> usize {
        self.hits.iter().filter(|&&h| h).count()
    }
}

/// One-vertex-per-step baseline. After the identity seed on `1..=floor(eta n)`,
/// each unmatched source `v` (ascending) goes to the smallest free target `l`
/// with `sum_{j matched} G[j][v] * H[pi(j)][l] >= threshold`, or to the smallest
/// free target when none qualifies.
pub fn threshold_matcher(g: &GraphSample, h: &GraphSample, threshold: usize, eta: f64) -> Result<ThresholdOutcome, EvalError> {
    if g.n() != h.n() {
        return Err(EvalError::VertexCount(g.n(), h.n()));
    }
    if threshold == 0 {
        return Err(EvalError::Threshold);
    }
    let n = g.n();
    let seeded = ((eta.clamp(0.0, 1.0) * n as f64).floor() as usize).min(n);
    let mut pi = vec![u32::MAX; n];
    let mut free = vec![true; n];
    for v in 0..seeded {
        pi[v] = v as u32;
        free[v] = false;
    }
    let mut counts = vec![0usize; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut next_free = seeded;
    let mut hits = Vec::with_capacity(n - seeded);
    for v in seeded..n {
        for &j in g.neighbors0(v as u32) {
            let img = pi[j as usize];
            if img == u32::MAX {
                continue;
            }
            for &l in h.neighbors0(img) {
                if free[l as usize] {
                    if counts[l as usize] == 0 {
                        touched.push(l);
                    }
                    counts[l as usize] += 1;
                }
            }
        }
        let chosen = touched.iter().copied().filter(|&l| counts[l as usize] >= threshold).min();
        for &l in &touched {
            counts[l as usize] = 0;
        }
        touched.clear();
        let target = match chosen {
            Some(l) => l as usize,
            None => {
                while !free[next_free] {
                    next_free += 1;
                }
                next_free
            }
        };
        hits.push(chosen.is_some());
        pi[v] = target as u32;
        free[target] = false;
    }
    Ok(ThresholdOutcome { permutation: pi.iter().map(|&t| t + 1).collect(), hits })
}
