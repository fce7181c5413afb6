use serde::Serialize;

use super::params::sequence_counts;
use super::DesignError;

/// Rooted template tree with internal labels `1..=chi` and leaf labels
/// `chi+1..=chi+xi`. The root is label 1 and every parent label is smaller
/// than its children's labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeTemplate {
    chi: usize,
    zeta: usize,
    xi: usize,
    k: usize,
    /// `parent[label]`; entries 0 and 1 are unused (0).
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
    /// Branching per generation: root first, then down to the leaf parents' `k`.
    generations: Vec<usize>,
    beta_terms: Vec<u32>,
}

impl TreeTemplate {
    /// Builds the generation tree for `beta_terms = [n_1, ..., n_l]`: the root has
    /// `n_l` children, a generation-`i` vertex has `n_{l-i}` children and every
    /// generation-`l` vertex carries `k` leaves. Labels are breadth-first.
    pub fn build(beta_terms: &[u32], k: usize, zeta_max: usize) -> Result<Self, DesignError> {
        if beta_terms.is_empty() || beta_terms.contains(&0) || k == 0 {
            return Err(DesignError::InvalidTree("beta terms and k must be positive".into()));
        }
        if beta_terms.windows(2).any(|w| w[0] > w[1]) {
            return Err(DesignError::InvalidTree("beta terms must be non-decreasing".into()));
        }
        let counts = sequence_counts(beta_terms, k as u64)
            .filter(|c| c.zeta <= zeta_max as u64)
            .ok_or(DesignError::ZetaBudget { zeta_max })?;

        let mut generations: Vec<usize> = beta_terms.iter().rev().map(|&n| n as usize).collect();
        generations.push(k);

        let mut parent = vec![0usize, 0usize];
        let mut frontier = vec![1usize];
        let mut next_label = 2usize;
        for &branching in &generations {
            let mut next_frontier = Vec::with_capacity(frontier.len() * branching);
            for &v in &frontier {
                for _ in 0..branching {
                    parent.push(v);
                    next_frontier.push(next_label);
                    next_label += 1;
                }
            }
            frontier = next_frontier;
        }
        let xi = frontier.len();
        let total = next_label - 1;
        let chi = total - xi;
        let tree = Self::assemble(parent, chi, k, generations, beta_terms.to_vec())?;
        debug_assert_eq!(tree.zeta, total - 1);
        if tree.chi as u64 != counts.chi || tree.zeta as u64 != counts.zeta {
            return Err(DesignError::InvalidTree(format!(
                "structure gives chi={} zeta={} but closed forms give chi={} zeta={}",
                tree.chi, tree.zeta, counts.chi, counts.zeta
            )));
        }
        if tree.zeta != k * counts.ell as usize + tree.chi - 1 {
            return Err(DesignError::InvalidTree("zeta != k*ell + chi - 1".into()));
        }
        Ok(tree)
    }

    /// Builds a tree from explicit parents for labels `2..=parents.len()+1`.
    /// Labels `1..=chi` must be exactly the vertices with children.
    pub fn from_parents(parents: &[usize], chi: usize) -> Result<Self, DesignError> {
        let mut parent = vec![0usize, 0usize];
        parent.extend_from_slice(parents);
        let total = parent.len() - 1;
        for label in 2..=total {
            if parent[label] == 0 || parent[label] >= label {
                return Err(DesignError::InvalidTree(format!("label {label} needs a parent with a smaller label")));
            }
        }
        let leaf_parent = (chi + 1..=total).map(|l| parent[l]).next().unwrap_or(0);
        let k = (chi + 1..=total).filter(|&l| parent[l] == leaf_parent).count();
        Self::assemble(parent, chi, k, Vec::new(), Vec::new())
    }

    fn assemble(
        parent: Vec<usize>,
        chi: usize,
        k: usize,
        generations: Vec<usize>,
        beta_terms: Vec<u32>,
    ) -> Result<Self, DesignError> {
        let total = parent.len() - 1;
        if chi == 0 || chi >= total {
            return Err(DesignError::InvalidTree("need at least one internal vertex and one leaf".into()));
        }
        let mut children = vec![Vec::new(); total + 1];
        for label in 2..=total {
            children[parent[label]].push(label);
        }
        for label in 1..=total {
            let internal = label <= chi;
            if internal == children[label].is_empty() {
                return Err(DesignError::InvalidTree(format!(
                    "label {label} is {} but has {} children",
                    if internal { "internal" } else { "a leaf" },
                    children[label].len()
                )));
            }
        }
        Ok(TreeTemplate { chi, zeta: total - 1, xi: total - chi, k, parent, children, generations, beta_terms })
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn zeta(&self) -> usize {
        self.zeta
    }

    pub fn xi(&self) -> usize {
        self.xi
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vertex_count(&self) -> usize {
        self.chi + self.xi
    }

    pub fn generations(&self) -> &[usize] {
        &self.generations
    }

    pub fn beta_terms(&self) -> &[u32] {
        &self.beta_terms
    }

    pub fn parent(&self, label: usize) -> Option<usize> {
        (label >= 2 && label <= self.vertex_count()).then(|| self.parent[label])
    }

    pub fn children(&self, label: usize) -> &[usize] {
        &self.children[label]
    }

    pub fn is_internal(&self, label: usize) -> bool {
        label >= 1 && label <= self.chi
    }

    pub fn degree(&self, label: usize) -> usize {
        self.children[label].len() + usize::from(label != 1)
    }

    /// Tree edges as `(parent, child)`; edge index `e` has child label `e + 2`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (2..=self.vertex_count()).map(move |c| (self.parent[c], c))
    }

    /// Every internal vertex adjacent to a leaf has exactly `k` leaf children.
    pub fn leaf_degree_uniform(&self) -> bool {
        (1..=self.chi).all(|v| {
            let leaves = self.children[v].iter().filter(|&&c| c > self.chi).count();
            leaves == 0 || leaves == self.k
        })
    }

    /// 0-based parent positions (`parent0[0]` is unused) for embedding search.
    pub(crate) fn parent0(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.vertex_count()];
        for label in 2..=self.vertex_count() {
            out[label - 1] = self.parent[label] - 1;
        }
        out
    }

    /// 0-based adjacency between positions.
    pub(crate) fn neighbors0(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for (p, c) in self.edges() {
            adj[p - 1].push(c - 1);
            adj[c - 1].push(p - 1);
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term_four() {
        let t = TreeTemplate::build(&[4], 1, 10).unwrap();
        assert_eq!((t.chi(), t.zeta(), t.xi()), (5, 8, 4));
        assert_eq!(t.children(1), &[2, 3, 4, 5]);
        assert_eq!(t.children(2), &[6]);
        assert_eq!(t.generations(), &[4, 1]);
        assert!(t.leaf_degree_uniform());
    }

    #[test]
    fn single_term_two() {
        let t = TreeTemplate::build(&[2], 1, 10).unwrap();
        assert_eq!((t.chi(), t.zeta(), t.xi()), (3, 4, 2));
        assert_eq!(t.edges().collect::<Vec<_>>(), vec![(1, 2), (1, 3), (2, 4), (3, 5)]);
    }

    #[test]
    fn two_terms() {
        let t = TreeTemplate::build(&[2, 5], 1, 100).unwrap();
        assert_eq!((t.chi(), t.zeta(), t.xi()), (16, 25, 10));
        assert_eq!(t.zeta(), t.k() * 10 + t.chi() - 1);
        assert_eq!(t.children(1).len(), 5);
        assert!(t.children(2).iter().all(|&c| c <= 16));
        assert_eq!(t.children(2).len(), 2);
    }

    #[test]
    fn budget_and_shape_errors() {
        assert!(matches!(TreeTemplate::build(&[2, 5], 1, 10), Err(DesignError::ZetaBudget { .. })));
        assert!(TreeTemplate::build(&[3, 2], 1, 100).is_err());
        assert!(TreeTemplate::build(&[], 1, 100).is_err());
        assert!(TreeTemplate::build(&[2], 0, 100).is_err());
    }

    #[test]
    fn from_parents_validates_labels() {
        let path = TreeTemplate::from_parents(&[1, 2], 2).unwrap();
        assert_eq!((path.chi(), path.zeta(), path.xi(), path.k()), (2, 2, 1, 1));
        // leaf label inside the internal range
        assert!(TreeTemplate::from_parents(&[1, 1], 2).is_err());
        // parent label not smaller
        assert!(TreeTemplate::from_parents(&[3, 1], 1).is_err());
        let lopsided = TreeTemplate::from_parents(&[1, 1, 2, 2, 3], 3).unwrap();
        assert!(!lopsided.leaf_degree_uniform());
    }
}
