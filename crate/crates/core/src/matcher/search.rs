//! Backtracking embeddings of the template tree.

use std::collections::HashSet;

use super::priority::{cmp_keyed, raw_key};
use crate::graph::GraphSample;
use crate::tree::TreeTemplate;

/// Tree layout in 0-based positions (`position = label - 1`).
#[derive(Clone, Debug)]
pub(crate) struct TreeShape {
    pub chi: usize,
    pub xi: usize,
    parent: Vec<usize>,
    /// Destination search order: each internal position with an already placed
    /// anchor neighbour and the other placed neighbours to test.
    dst_plan: Vec<(usize, usize, Vec<usize>)>,
}

impl TreeShape {
    pub fn new(tree: &TreeTemplate) -> Self {
        let chi = tree.chi();
        let xi = tree.xi();
        let adj = tree.neighbors0();
        let total = chi + xi;
        let mut assigned = vec![false; total];
        for p in chi..total {
            assigned[p] = true;
        }
        // most-constrained first: the unplaced internal vertex with the most
        // placed neighbours, then the largest tree degree, then the lowest label
        let mut dst_plan = Vec::with_capacity(chi);
        while dst_plan.len() < chi {
            let w = (0..chi)
                .filter(|&w| !assigned[w] && adj[w].iter().any(|&x| assigned[x]))
                .max_by_key(|&w| (adj[w].iter().filter(|&&x| assigned[x]).count(), adj[w].len(), std::cmp::Reverse(w)))
                .expect("tree is connected");
            let mut placed = adj[w].iter().copied().filter(|&x| assigned[x]);
            let anchor = placed.next().expect("placed neighbour");
            let checks: Vec<usize> = placed.collect();
            assigned[w] = true;
            dst_plan.push((w, anchor, checks));
        }
        debug_assert_eq!(dst_plan.len(), chi);
        TreeShape { chi, xi, parent: tree.parent0(), dst_plan }
    }

    pub fn size(&self) -> usize {
        self.chi + self.xi
    }
}

/// Distinct leaf tuples of source embeddings, each with its first witness.
#[derive(Clone, Debug, Default)]
pub(crate) struct SourceCandidates {
    /// `(leaf tuple, internal tuple)`, 0-based, sorted by leaf-tuple priority
    pub entries: Vec<(Vec<u32>, Vec<u32>)>,
    pub cap_hit: bool,
}

/// Embeddings with root at `root`, internal positions in `is_free` and leaf
/// positions in `is_pool`. Positions are filled in label order and neighbours
/// are tried in ascending order, so the first witness of a leaf tuple is its
/// lexicographically smallest internal tuple. Stops after `cap` embeddings.
pub(crate) fn source_candidates(
    g: &GraphSample,
    shape: &TreeShape,
    root: u32,
    is_free: &[bool],
    is_pool: &[bool],
    cap: u64,
    seed: u64,
) -> SourceCandidates {
    let mut img = vec![u32::MAX; shape.size()];
    img[0] = root;
    let mut state = SrcSearch {
        g,
        shape,
        is_free,
        is_pool,
        cap,
        embeddings: 0,
        cap_hit: false,
        seen: HashSet::new(),
        out: Vec::new(),
    };
    if shape.size() > 1 {
        state.extend(&mut img, 1);
    }
    let mut entries = state.out;
    let mut keyed: Vec<(u128, (Vec<u32>, Vec<u32>))> =
        entries.drain(..).map(|(l, q)| (raw_key(seed, &l), (l, q))).collect();
    keyed.sort_by(|a, b| cmp_keyed((a.0, &a.1 .0), (b.0, &b.1 .0)));
    SourceCandidates { entries: keyed.into_iter().map(|(_, e)| e).collect(), cap_hit: state.cap_hit }
}

struct SrcSearch<'a> {
    g: &'a GraphSample,
    shape: &'a TreeShape,
    is_free: &'a [bool],
    is_pool: &'a [bool],
    cap: u64,
    embeddings: u64,
    cap_hit: bool,
    seen: HashSet<Vec<u32>>,
    out: Vec<(Vec<u32>, Vec<u32>)>,
}

impl SrcSearch<'_> {
    fn extend(&mut self, img: &mut [u32], pos: usize) {
        if self.cap_hit {
            return;
        }
        if pos == self.shape.size() {
            if self.embeddings >= self.cap {
                self.cap_hit = true;
                return;
            }
            self.embeddings += 1;
            let leaves = img[self.shape.chi..].to_vec();
            if self.seen.insert(leaves.clone()) {
                self.out.push((leaves, img[..self.shape.chi].to_vec()));
            }
            return;
        }
        let allowed = if pos < self.shape.chi { self.is_free } else { self.is_pool };
        let anchor = img[self.shape.parent[pos]];
        for &w in self.g.neighbors0(anchor) {
            if !allowed[w as usize] || img[..pos].contains(&w) {
                continue;
            }
            img[pos] = w;
            self.extend(img, pos + 1);
            if self.cap_hit {
                break;
            }
        }
        img[pos] = u32::MAX;
    }
}

/// Result of a destination search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct DstMatch {
    /// internal tuple of minimal priority, 0-based
    pub best: Option<Vec<u32>>,
    pub embeddings: u64,
    pub cap_hit: bool,
}

/// Embeddings into `h` with leaves fixed at `leaf_images` and internal
/// positions in `is_free`; returns the internal tuple of minimal priority.
pub(crate) fn destination_match(
    h: &GraphSample,
    shape: &TreeShape,
    leaf_images: &[u32],
    is_free: &[bool],
    cap: u64,
    seed: u64,
) -> DstMatch {
    let mut img = vec![u32::MAX; shape.size()];
    img[shape.chi..].copy_from_slice(leaf_images);
    let mut search =
        DstSearch { h, shape, is_free, cap, seed, embeddings: 0, cap_hit: false, best: None };
    search.extend(&mut img, 0);
    DstMatch { best: search.best.map(|(_, q)| q), embeddings: search.embeddings, cap_hit: search.cap_hit }
}

struct DstSearch<'a> {
    h: &'a GraphSample,
    shape: &'a TreeShape,
    is_free: &'a [bool],
    cap: u64,
    seed: u64,
    embeddings: u64,
    cap_hit: bool,
    best: Option<(u128, Vec<u32>)>,
}

impl DstSearch<'_> {
    fn extend(&mut self, img: &mut [u32], step: usize) {
        if self.cap_hit {
            return;
        }
        if step == self.shape.dst_plan.len() {
            if self.embeddings >= self.cap {
                self.cap_hit = true;
                return;
            }
            self.embeddings += 1;
            let q = &img[..self.shape.chi];
            let key = raw_key(self.seed, q);
            let better = match &self.best {
                None => true,
                Some((k, b)) => cmp_keyed((key, q), (*k, b)).is_lt(),
            };
            if better {
                self.best = Some((key, q.to_vec()));
            }
            return;
        }
        let shape = self.shape;
        let (pos, anchor, checks) = &shape.dst_plan[step];
        let (pos, anchor) = (*pos, *anchor);
        let anchor_img = img[anchor];
        for &w in self.h.neighbors0(anchor_img) {
            if !self.is_free[w as usize] || img[..self.shape.chi].contains(&w) {
                continue;
            }
            if !checks.iter().all(|&c| self.h.has_edge0(w, img[c])) {
                continue;
            }
            img[pos] = w;
            self.extend(img, step + 1);
            img[pos] = u32::MAX;
            if self.cap_hit {
                return;
            }
        }
    }
}
