//! Capacity, the balanced-tree conditions, and the extension exponent.
//!
//! Two verifiers decide the same two strict conditions on a template tree:
//!
//! * (iii) every proper subgraph `F` containing all leaves has
//!   `|V(T) \ V(F)| < a |E(T) \ E(F)|`;
//! * (iv) every proper subtree `T0` with at least one edge has
//!   `|V(T0) ∩ Q| - (2a - 1)|E(T0)| > chi - (2a - 1) zeta`.
//!
//! [`verify_balanced_exhaustive`] enumerates subgraphs literally and is the
//! ground truth. [`verify_balanced_structural`] works through entire subtrees
//! and the rooted-subtree density chain with tree dynamic programs.
//! All comparisons use integers scaled by the denominator of `a`.

use num::{BigInt, ToPrimitive};
use serde::Serialize;

use super::{DesignError, TreeTemplate};
use crate::rational::Rational;

const MASK_BITS: usize = 128;
const EXHAUSTIVE_MAX_VERTICES: usize = 22;
const EXHAUSTIVE_MAX_CHI_PLUS_ZETA: usize = 26;

/// A subgraph of a template tree. Bit `label - 1` marks a vertex and bit
/// `child_label - 2` marks the tree edge above `child_label`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct SubgraphMask {
    pub vertex_bits: u128,
    pub edge_bits: u128,
}

impl SubgraphMask {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full(tree: &TreeTemplate) -> Self {
        Self::induced(tree, low_bits(tree.vertex_count()))
    }

    pub fn leaves_only(tree: &TreeTemplate) -> Self {
        Self { vertex_bits: leaf_bits(tree), edge_bits: 0 }
    }

    /// Vertex set `vertex_bits` with every tree edge between its members.
    pub fn induced(tree: &TreeTemplate, vertex_bits: u128) -> Self {
        let mut edge_bits = 0u128;
        for (p, c) in tree.edges() {
            if vertex_bits >> (p - 1) & 1 == 1 && vertex_bits >> (c - 1) & 1 == 1 {
                edge_bits |= 1 << (c - 2);
            }
        }
        Self { vertex_bits, edge_bits }
    }

    pub fn from_labels(tree: &TreeTemplate, labels: &[usize]) -> Self {
        Self::induced(tree, labels.iter().fold(0u128, |acc, &l| acc | 1 << (l - 1)))
    }

    pub fn vertex_labels(&self) -> Vec<usize> {
        (0..MASK_BITS).filter(|b| self.vertex_bits >> b & 1 == 1).map(|b| b + 1).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_bits.count_ones() as usize
    }

    pub fn validate(&self, tree: &TreeTemplate) -> Result<(), DesignError> {
        check_mask_size(tree)?;
        let v = tree.vertex_count();
        if self.vertex_bits & !low_bits(v) != 0 || self.edge_bits & !low_bits(v - 1) != 0 {
            return Err(DesignError::InvalidMask("bits beyond the tree".into()));
        }
        for (p, c) in tree.edges() {
            if self.edge_bits >> (c - 2) & 1 == 1
                && (self.vertex_bits >> (p - 1) & 1 == 0 || self.vertex_bits >> (c - 1) & 1 == 0)
            {
                return Err(DesignError::InvalidMask(format!("edge ({p},{c}) without both endpoints")));
            }
        }
        Ok(())
    }

    fn internal_count(&self, tree: &TreeTemplate) -> usize {
        (self.vertex_bits & low_bits(tree.chi())).count_ones() as usize
    }
}

fn low_bits(n: usize) -> u128 {
    if n >= MASK_BITS {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

fn leaf_bits(tree: &TreeTemplate) -> u128 {
    low_bits(tree.vertex_count()) & !low_bits(tree.chi())
}

fn check_mask_size(tree: &TreeTemplate) -> Result<(), DesignError> {
    if tree.vertex_count() > MASK_BITS {
        return Err(DesignError::InvalidMask(format!("trees above {MASK_BITS} vertices are not maskable")));
    }
    Ok(())
}

/// `|V(H) ∩ Q| - a |E(H)|`.
pub fn capacity(tree: &TreeTemplate, mask: &SubgraphMask, alpha_eta: &Rational) -> Result<Rational, DesignError> {
    mask.validate(tree)?;
    Ok(Rational::from_integer(BigInt::from(mask.internal_count(tree)))
        - alpha_eta * Rational::from_integer(BigInt::from(mask.edge_count())))
}

/// `a = num/den` as machine integers for the enumeration loops.
#[derive(Clone, Copy, Debug)]
struct Scaled {
    num: i128,
    den: i128,
}

impl Scaled {
    fn new(a: &Rational) -> Result<Self, DesignError> {
        let num = a.numer().to_i128();
        let den = a.denom().to_i128();
        match (num, den) {
            (Some(num), Some(den)) if num.abs() < 1 << 60 && den < 1 << 60 => Ok(Scaled { num, den }),
            _ => Err(DesignError::InvalidTree("alpha_eta denominator too large".into())),
        }
    }
}

/// Which balanced condition a witness breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// proper subgraphs containing every leaf
    LeafCover,
    /// proper subtrees
    SubtreeMargin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Balanced,
    Violated { condition: Condition, witness: SubgraphMask },
}

impl Verdict {
    pub fn is_balanced(&self) -> bool {
        matches!(self, Verdict::Balanced)
    }
}

/// Literal enumeration of both conditions with strict inequalities; an equality
/// counts as a violation.
pub fn verify_balanced_exhaustive(tree: &TreeTemplate, alpha_eta: &Rational) -> Result<Verdict, DesignError> {
    let v = tree.vertex_count();
    if v > EXHAUSTIVE_MAX_VERTICES || tree.chi() + tree.zeta() > EXHAUSTIVE_MAX_CHI_PLUS_ZETA {
        return Err(DesignError::ExhaustiveBudget { chi: tree.chi(), zeta: tree.zeta() });
    }
    let a = Scaled::new(alpha_eta)?;
    let chi = tree.chi();
    let zeta = tree.zeta() as i128;
    let leaves = leaf_bits(tree);
    let edges: Vec<(usize, usize)> = tree.edges().map(|(p, c)| (p - 1, c - 1)).collect();

    // (iii): vertex sets L ∪ S for S ⊆ Q, then every edge subset inside.
    for s in 0u128..(1u128 << chi) {
        let w = leaves | s;
        let inside: Vec<usize> = edges
            .iter()
            .enumerate()
            .filter(|(_, &(p, c))| w >> p & 1 == 1 && w >> c & 1 == 1)
            .map(|(e, _)| e)
            .collect();
        let missing_vertices = (chi - s.count_ones() as usize) as i128;
        for sub in 0u64..(1u64 << inside.len()) {
            let kept = sub.count_ones() as i128;
            if missing_vertices == 0 && kept == zeta {
                continue; // F = T
            }
            // |V \ V(F)| < a |E \ E(F)|
            if missing_vertices * a.den >= a.num * (zeta - kept) {
                let mut edge_bits = 0u128;
                for (bit, &e) in inside.iter().enumerate() {
                    if sub >> bit & 1 == 1 {
                        edge_bits |= 1 << e;
                    }
                }
                return Ok(Verdict::Violated {
                    condition: Condition::LeafCover,
                    witness: SubgraphMask { vertex_bits: w, edge_bits },
                });
            }
        }
    }

    // (iv): connected vertex sets with at least two vertices, other than all of T.
    let lambda_num = 2 * a.num - a.den; // (2a - 1) * den
    let full = low_bits(v);
    let rhs = (chi as i128) * a.den - lambda_num * zeta;
    for w in 1u128..=full {
        if w == full || w.count_ones() < 2 {
            continue;
        }
        let mask = SubgraphMask::induced(tree, w);
        let e = mask.edge_count() as i128;
        if e != w.count_ones() as i128 - 1 {
            continue; // disconnected
        }
        let q = mask.internal_count(tree) as i128;
        if q * a.den - lambda_num * e <= rhs {
            return Ok(Verdict::Violated { condition: Condition::SubtreeMargin, witness: mask });
        }
    }
    Ok(Verdict::Balanced)
}

/// Outcome of the polynomial-time checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructuralVerdict {
    /// every entire subtree `T0` with internal core `Q0` has `|Q0| < a |E(T0)|`
    pub entire_subtrees: bool,
    /// every rooted subtree `T_v` (v internal, not the root) is denser than `chi/zeta`
    pub density_chain: bool,
    /// minimum of the (iv) margin over proper subtrees is positive
    pub subtree_margin: bool,
}

impl StructuralVerdict {
    pub fn is_balanced(&self) -> bool {
        self.entire_subtrees && self.density_chain && self.subtree_margin
    }
}

/// Polynomial-time verification through the entire-subtree bound, the density
/// chain over rooted subtrees, and a dynamic program for the subtree margin.
pub fn verify_balanced_structural(tree: &TreeTemplate, alpha_eta: &Rational) -> Result<StructuralVerdict, DesignError> {
    let a = Scaled::new(alpha_eta)?;
    Ok(StructuralVerdict {
        entire_subtrees: entire_subtree_bound(tree, a),
        density_chain: density_chain(tree),
        subtree_margin: subtree_margin(tree, a),
    })
}

/// An entire subtree with at least three vertices is a connected set `Q0` of
/// internal vertices together with all their tree neighbours, so
/// `|E(T0)| = sum_{u in Q0} deg(u) - |Q0| + 1`. Maximises
/// `den*|Q0| - num*|E(T0)|` over connected `Q0` and asks for a negative value.
fn entire_subtree_bound(tree: &TreeTemplate, a: Scaled) -> bool {
    let chi = tree.chi();
    let weight = |u: usize| a.den + a.num - a.num * tree.degree(u) as i128;
    let mut down = vec![0i128; chi + 1];
    let mut best = i128::MIN;
    for u in (1..=chi).rev() {
        let mut total = weight(u);
        for &c in tree.children(u) {
            if c <= chi {
                total += down[c].max(0);
            }
        }
        down[u] = total;
        best = best.max(total);
    }
    best - a.num < 0
}

/// `|V(T_v) ∩ Q| / |E(T_v)| > chi / zeta` for every internal non-root `v`.
fn density_chain(tree: &TreeTemplate) -> bool {
    let v = tree.vertex_count();
    let mut internal = vec![0u64; v + 1];
    let mut edges = vec![0u64; v + 1];
    for label in (1..=v).rev() {
        internal[label] += u64::from(tree.is_internal(label));
        if let Some(p) = tree.parent(label) {
            internal[p] += internal[label];
            edges[p] += edges[label] + 1;
        }
    }
    let (chi, zeta) = (tree.chi() as u64, tree.zeta() as u64);
    (2..=tree.chi()).all(|label| internal[label] * zeta > chi * edges[label])
}

/// Minimum over proper subtrees with at least one edge of
/// `den*|V(T0) ∩ Q| - lambda*|E(T0)|` (lambda = (2a - 1) den) must exceed the same
/// quantity for `T`. A proper subtree misses some vertex `x`, so the minimum is
/// taken over the forests `T - x`.
fn subtree_margin(tree: &TreeTemplate, a: Scaled) -> bool {
    let v = tree.vertex_count();
    let lambda = 2 * a.num - a.den;
    let target = tree.chi() as i128 * a.den - lambda * tree.zeta() as i128;
    let weight = |u: usize| if tree.is_internal(u) { a.den } else { 0 };
    for excluded in 1..=v {
        // down[u]: best subtree hanging at u (u included), possibly just {u}
        let mut down = vec![0i128; v + 1];
        for u in (1..=v).rev() {
            if u == excluded {
                continue;
            }
            let mut total = weight(u);
            let mut best_single = i128::MAX;
            let mut took_any = false;
            for &c in tree.children(u) {
                if c == excluded {
                    continue;
                }
                let gain = down[c] - lambda;
                best_single = best_single.min(gain);
                if gain < 0 {
                    total += gain;
                    took_any = true;
                }
            }
            down[u] = total;
            let with_edge = if took_any {
                total
            } else if best_single != i128::MAX {
                weight(u) + best_single
            } else {
                continue; // no child available: only the singleton
            };
            if with_edge <= target {
                return false;
            }
        }
    }
    true
}

/// `Cap(T0) - min Cap(F0)` over subgraphs `F0 ⊆ T0` covering `V(T0) ∩ L`:
/// the base-`n` exponent of the extension count of a subtree.
pub fn d_quantity(tree: &TreeTemplate, subtree: &SubgraphMask, alpha_eta: &Rational) -> Result<Rational, DesignError> {
    subtree.validate(tree)?;
    let induced = SubgraphMask::induced(tree, subtree.vertex_bits);
    let verts = subtree.vertex_bits.count_ones() as usize;
    if induced != *subtree || verts == 0 || induced.edge_count() + 1 != verts {
        return Err(DesignError::InvalidMask("not a subtree".into()));
    }
    let cap_t0 = capacity(tree, subtree, alpha_eta)?;
    let labels = subtree.vertex_labels();
    let required = subtree.vertex_bits & leaf_bits(tree);
    let optional: Vec<usize> = labels.iter().copied().filter(|&l| l <= tree.chi()).collect();
    if optional.len() > 24 {
        return Err(DesignError::ExhaustiveBudget { chi: tree.chi(), zeta: tree.zeta() });
    }
    let mut best: Option<Rational> = None;
    for sub in 0u32..(1u32 << optional.len()) {
        let mut w = required;
        for (bit, &l) in optional.iter().enumerate() {
            if sub >> bit & 1 == 1 {
                w |= 1 << (l - 1);
            }
        }
        // keeping every available edge minimises the capacity for a fixed vertex set
        let cap = capacity(tree, &SubgraphMask::induced(tree, w), alpha_eta)?;
        if best.as_ref().is_none_or(|b| &cap < b) {
            best = Some(cap);
        }
    }
    Ok(cap_t0 - best.expect("at least the required set"))
}

/// `|V(T0) ∩ Q| - (2a - 1)|E(T0)| - (chi - (2a - 1) zeta)` for a single mask.
pub fn subtree_margin_of(tree: &TreeTemplate, mask: &SubgraphMask, alpha_eta: &Rational) -> Result<Rational, DesignError> {
    mask.validate(tree)?;
    let lambda = Rational::from_integer(BigInt::from(2)) * alpha_eta - Rational::from_integer(BigInt::from(1));
    let lhs = Rational::from_integer(BigInt::from(mask.internal_count(tree)))
        - &lambda * Rational::from_integer(BigInt::from(mask.edge_count()));
    let rhs = Rational::from_integer(BigInt::from(tree.chi())) - &lambda * Rational::from_integer(BigInt::from(tree.zeta()));
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn path3() -> TreeTemplate {
        TreeTemplate::build(&[2], 1, 10).unwrap()
    }

    #[test]
    fn capacity_examples() {
        let t = path3();
        let a = ratio(87, 100);
        assert_eq!(capacity(&t, &SubgraphMask::full(&t), &a).unwrap(), ratio(-12, 25));
        assert_eq!(capacity(&t, &SubgraphMask::empty(), &a).unwrap(), int(0));
        assert_eq!(capacity(&t, &SubgraphMask::leaves_only(&t), &a).unwrap(), int(0));
    }

    #[test]
    fn capacity_rejects_dangling_edges() {
        let t = path3();
        let bad = SubgraphMask { vertex_bits: 0b1, edge_bits: 0b1 };
        assert!(capacity(&t, &bad, &ratio(87, 100)).is_err());
        let beyond = SubgraphMask { vertex_bits: 1 << 9, edge_bits: 0 };
        assert!(capacity(&t, &beyond, &ratio(87, 100)).is_err());
    }

    #[test]
    fn leaves_only_subgraph_hand_check() {
        // |V \ L| = 3 < (87/100) * 4
        let t = path3();
        let a = ratio(87, 100);
        assert!(int(3) < &a * int(4));
        assert_eq!(verify_balanced_exhaustive(&t, &a).unwrap(), Verdict::Balanced);
    }

    #[test]
    fn single_internal_vertex_margin() {
        let t = path3();
        let m = SubgraphMask::from_labels(&t, &[1]);
        // 1 - 0 - (3 - (74/100) * 4) = 1 - 1/25
        assert_eq!(subtree_margin_of(&t, &m, &ratio(87, 100)).unwrap(), ratio(24, 25));
    }

    #[test]
    fn broken_path_has_witness() {
        let t = TreeTemplate::build(&[1], 1, 10).unwrap();
        assert_eq!((t.chi(), t.zeta()), (2, 2));
        match verify_balanced_exhaustive(&t, &ratio(3, 5)).unwrap() {
            Verdict::Violated { condition: Condition::LeafCover, witness } => {
                witness.validate(&t).unwrap();
                assert_eq!(witness.vertex_bits & (1 << 2), 1 << 2, "leaves kept");
            }
            other => panic!("{other:?}"),
        }
        assert!(!verify_balanced_structural(&t, &ratio(3, 5)).unwrap().is_balanced());
    }

    #[test]
    fn structural_agrees_with_exhaustive_on_small_sequences() {
        for terms in super::super::params::all_sequences(1, 10) {
            let t = TreeTemplate::build(&terms, 1, 10).unwrap();
            for (p, q) in [(3, 5), (7, 10), (3, 4), (4, 5), (17, 20), (19, 22), (9, 10), (15, 19)] {
                let a = ratio(p, q);
                let ex = verify_balanced_exhaustive(&t, &a).unwrap();
                let st = verify_balanced_structural(&t, &a).unwrap();
                // the chain is a property of the tree alone; the other two are exact
                assert_eq!(ex.is_balanced(), st.entire_subtrees && st.subtree_margin, "{terms:?} at {a}");
            }
        }
    }

    #[test]
    fn d_quantity_examples() {
        let t = path3();
        let a = ratio(87, 100);
        let leaf = SubgraphMask::from_labels(&t, &[4]);
        assert_eq!(d_quantity(&t, &leaf, &a).unwrap(), int(0));
        let root = SubgraphMask::from_labels(&t, &[1]);
        assert_eq!(d_quantity(&t, &root, &a).unwrap(), int(1));
        // brute force: minimiser over vertex sets containing both leaves
        let full = SubgraphMask::full(&t);
        let mut best: Option<Rational> = None;
        for s in 0u128..8 {
            let m = SubgraphMask::induced(&t, 0b11000 | s);
            for sub in 0u128..=m.edge_bits {
                if sub & !m.edge_bits != 0 {
                    continue;
                }
                let f = SubgraphMask { vertex_bits: m.vertex_bits, edge_bits: sub };
                let c = capacity(&t, &f, &a).unwrap();
                if best.as_ref().is_none_or(|b| &c < b) {
                    best = Some(c);
                }
            }
        }
        let expected = capacity(&t, &full, &a).unwrap() - best.unwrap();
        assert_eq!(d_quantity(&t, &full, &a).unwrap(), expected);
        assert!(d_quantity(&t, &SubgraphMask::leaves_only(&t), &a).is_err());
    }

    #[test]
    fn capacity_additive_over_disjoint_masks() {
        let t = TreeTemplate::build(&[2, 2], 1, 20).unwrap();
        let a = ratio(4, 5);
        let left = SubgraphMask::from_labels(&t, &[2, 4, 5]);
        let right = SubgraphMask::from_labels(&t, &[3, 6]);
        let union = SubgraphMask {
            vertex_bits: left.vertex_bits | right.vertex_bits,
            edge_bits: left.edge_bits | right.edge_bits,
        };
        assert_eq!(
            capacity(&t, &union, &a).unwrap(),
            capacity(&t, &left, &a).unwrap() + capacity(&t, &right, &a).unwrap()
        );
    }
}
