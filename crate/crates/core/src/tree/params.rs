//! Parameter selection: `k`, the slack `eta`, and the branching sequence.

use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};

use super::DesignError;
use crate::rational::{self, floor_int, int, Rational};

/// Smallest grid value tried by [`choose_eta`].
pub const ETA_GRID_FLOOR_LOG2: u32 = 30;

pub(crate) fn alpha_exact(alpha: f64) -> Result<Rational, DesignError> {
    let a = rational::from_f64_decimal(alpha).ok_or(DesignError::Alpha(alpha))?;
    if a <= rational::ratio(1, 2) || a >= int(1) {
        return Err(DesignError::Alpha(alpha));
    }
    Ok(a)
}

pub(crate) fn epsilon_exact(epsilon: f64) -> Result<Rational, DesignError> {
    let e = rational::from_f64_decimal(epsilon).ok_or(DesignError::Epsilon(epsilon))?;
    if !e.is_positive() || e >= int(1) {
        return Err(DesignError::Epsilon(epsilon));
    }
    Ok(e)
}

/// The unique `k >= 1` with `1/(2a-1)` in `(k, k+1]`.
pub fn choose_k(alpha: f64) -> Result<u32, DesignError> {
    let a = alpha_exact(alpha)?;
    Ok(k_for(&a))
}

pub(crate) fn k_for(a: &Rational) -> u32 {
    let x = (int(2) * a - int(1)).recip();
    let k = rational::ceil_int(&x) - BigInt::one();
    k.to_u32().expect("k fits in u32")
}

/// `((k+1)(2a-1) - 1) / (2 - 2a)`: the lower end of the admissible `beta`
/// range for a given `a`, also the quantity whose floor must not move with `eta`.
pub(crate) fn beta_of_alpha(a: &Rational, k: u32) -> Option<Rational> {
    let denom = int(2) - int(2) * a;
    if !denom.is_positive() {
        return None;
    }
    Some((int(k as i64 + 1) * (int(2) * a - int(1)) - int(1)) / denom)
}

/// Which of the slack constraints a grid value breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtaConstraint {
    /// `(1-2e)/(2a+2e-1) > (1-eps)/(2a-1)`
    Approximation,
    /// `1/(2a+2e-1) > k`
    LeafCount,
    /// the floor identity between `a` and `a+e`
    FloorIdentity,
}

impl std::fmt::Display for EtaConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EtaConstraint::Approximation => "(1-2eta)/(2alpha+2eta-1) > (1-epsilon)/(2alpha-1)",
            EtaConstraint::LeafCount => "1/(2alpha+2eta-1) > k",
            EtaConstraint::FloorIdentity => "floor identity between alpha and alpha+eta",
        })
    }
}

/// First constraint that `eta` violates, if any.
pub fn eta_violation(a: &Rational, eps: &Rational, eta: &Rational) -> Option<EtaConstraint> {
    let k = k_for(a);
    let two_a_minus_one = int(2) * a - int(1);
    let shifted = &two_a_minus_one + int(2) * eta;
    let lhs = (int(1) - int(2) * eta) / &shifted;
    let rhs = (int(1) - eps) / &two_a_minus_one;
    if lhs <= rhs {
        return Some(EtaConstraint::Approximation);
    }
    if shifted.recip() <= int(k as i64) {
        return Some(EtaConstraint::LeafCount);
    }
    let base = beta_of_alpha(a, k).expect("alpha < 1");
    match beta_of_alpha(&(a + eta), k) {
        Some(moved) if floor_int(&moved) == floor_int(&base) => None,
        _ => Some(EtaConstraint::FloorIdentity),
    }
}

/// Largest `eta` on the grid `eps/2, eps/4, ...` (not below `2^-30`) meeting every
/// slack constraint.
pub fn choose_eta(alpha: f64, epsilon: f64) -> Result<Rational, DesignError> {
    let a = alpha_exact(alpha)?;
    let eps = epsilon_exact(epsilon)?;
    choose_eta_exact(&a, &eps)
}

pub(crate) fn choose_eta_exact(a: &Rational, eps: &Rational) -> Result<Rational, DesignError> {
    let floor = Rational::new(BigInt::one(), num::pow(BigInt::from(2), ETA_GRID_FLOOR_LOG2 as usize));
    let mut eta = eps / int(2);
    let mut last = None;
    while eta >= floor {
        match eta_violation(a, eps, &eta) {
            None => return Ok(eta),
            Some(c) => last = Some(c),
        }
        eta /= int(2);
    }
    Err(DesignError::EtaInfeasible {
        constraint: last.map_or_else(|| "grid floor 2^-30 reached before any candidate".to_string(), |c| c.to_string()),
    })
}

/// Exact counts implied by a branching sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SequenceCounts {
    pub ell: u64,
    pub chi: u64,
    pub zeta: u64,
}

/// `ell = n_1...n_l`, `chi = ell(1 + sum_{i<=l} 1/(n_1..n_i))`,
/// `zeta = ell(k + 1 + sum_{i<l} 1/(n_1..n_i))`. `None` on overflow.
pub fn sequence_counts(terms: &[u32], k: u64) -> Option<SequenceCounts> {
    let l = terms.len();
    // suffix[i] = n_{i+1} * ... * n_l  (0-based: product of terms[i..])
    let mut suffix = vec![1u64; l + 1];
    for i in (0..l).rev() {
        suffix[i] = suffix[i + 1].checked_mul(terms[i] as u64)?;
    }
    let ell = suffix[0];
    let mut chi = ell;
    for s in suffix.iter().skip(1) {
        chi = chi.checked_add(*s)?;
    }
    let mut zeta = ell.checked_mul(k + 1)?;
    for s in suffix.iter().take(l).skip(1) {
        zeta = zeta.checked_add(*s)?;
    }
    Some(SequenceCounts { ell, chi, zeta })
}

/// `chi / zeta` of the tree a sequence builds, i.e. `2 * alpha_tilde - 1`.
pub fn sequence_ratio(terms: &[u32], k: u64) -> Option<Rational> {
    let c = sequence_counts(terms, k)?;
    Some(Rational::new(BigInt::from(c.chi), BigInt::from(c.zeta)))
}

/// The set of seeds whose greedy expansion starts with `terms`:
/// `(beta_l, beta_l + 1/(ell (n_l - 1))]`, unbounded above when `n_l = 1`.
fn cylinder(terms: &[u32]) -> (Rational, Option<Rational>) {
    let mut partial = Rational::zero();
    let mut prod = BigInt::one();
    for &n in terms {
        prod *= BigInt::from(n);
        partial += Rational::new(BigInt::one(), prod.clone());
    }
    let last = *terms.last().expect("non-empty");
    let upper = (last > 1).then(|| &partial + Rational::new(BigInt::one(), prod * BigInt::from(last - 1)));
    (partial, upper)
}

/// Next term of the greedy expansion: the `n` with `1/n < r <= 1/(n-1)`.
fn greedy_term(r: &Rational) -> u64 {
    (floor_int(&r.recip()) + BigInt::one()).to_u64().unwrap_or(u64::MAX)
}

/// Branching sequence `n_1 <= ... <= n_l` whose tree ratio `chi/zeta` lies strictly
/// inside `(2a - 1, 2(a + eta) - 1)` with `zeta <= zeta_max`.
///
/// The seed is the midpoint of the admissible `beta` range and its greedy expansion
/// is tried first. If no truncation of it fits the budget, every expansion prefix
/// reachable from some seed in the range is scanned, smallest `zeta` first.
pub fn expand_beta(alpha: f64, eta: &Rational, k: u32, zeta_max: usize) -> Result<Vec<u32>, DesignError> {
    let a = alpha_exact(alpha)?;
    expand_beta_exact(&a, eta, k, zeta_max)
}

pub(crate) fn expand_beta_exact(
    a: &Rational,
    eta: &Rational,
    k: u32,
    zeta_max: usize,
) -> Result<Vec<u32>, DesignError> {
    let r_lo = int(2) * a - int(1);
    let r_hi = int(2) * (a + eta) - int(1);
    let inside = |terms: &[u32]| -> bool {
        sequence_ratio(terms, k as u64).is_some_and(|r| r > r_lo && r < r_hi)
    };
    let fits = |terms: &[u32]| -> bool {
        sequence_counts(terms, k as u64).is_some_and(|c| c.zeta <= zeta_max as u64)
    };
    let beta_lo = beta_of_alpha(a, k).ok_or(DesignError::Alpha(rational::to_f64(a)))?;
    let beta_hi = beta_of_alpha(&(a + eta), k);
    if let Some(hi) = &beta_hi {
        if hi <= &beta_lo {
            return Err(DesignError::InvalidTree("empty beta interval".into()));
        }
    }

    // Greedy expansion of the midpoint seed.
    let seed = match &beta_hi {
        Some(hi) => (&beta_lo + hi) / int(2),
        None => &beta_lo + int(1),
    };
    let mut terms: Vec<u32> = Vec::new();
    let mut rem = seed;
    loop {
        let n = greedy_term(&rem);
        let Ok(n32) = u32::try_from(n) else { break };
        terms.push(n32);
        if !fits(&terms) {
            break;
        }
        if inside(&terms) {
            return Ok(terms);
        }
        rem = rem * int(n as i64) - int(1);
    }

    // Scan all budget-feasible prefixes whose cylinder meets the beta range.
    let mut best: Option<(u64, Rational, Vec<u32>)> = None;
    let mut stack: Vec<Vec<u32>> = Vec::new();
    let mut first = 1u32;
    while fits(&[first]) {
        stack.push(vec![first]);
        first += 1;
    }
    while let Some(seq) = stack.pop() {
        let (lo, hi) = cylinder(&seq);
        let reachable = beta_hi.as_ref().is_none_or(|bh| &lo < bh) && hi.as_ref().is_none_or(|h| h > &beta_lo);
        if !reachable {
            // every extension lives inside this cylinder too
            continue;
        }
        if inside(&seq) {
            let c = sequence_counts(&seq, k as u64).expect("fits");
            let ratio = sequence_ratio(&seq, k as u64).expect("fits");
            let better = match &best {
                None => true,
                Some((z, r, s)) => (c.zeta, &ratio, &seq) < (*z, r, s),
            };
            if better {
                best = Some((c.zeta, ratio, seq.clone()));
            }
        }
        let last = *seq.last().expect("non-empty");
        let mut next = last;
        loop {
            let mut ext = seq.clone();
            ext.push(next);
            if !fits(&ext) {
                break;
            }
            stack.push(ext);
            next += 1;
        }
    }
    best.map(|(_, _, s)| s).ok_or(DesignError::ZetaBudget { zeta_max })
}

/// Every non-decreasing sequence with `zeta <= zeta_max`.
pub(crate) fn all_sequences(k: u32, zeta_max: usize) -> Vec<Vec<u32>> {
    let fits = |terms: &[u32]| sequence_counts(terms, k as u64).is_some_and(|c| c.zeta <= zeta_max as u64);
    let mut out = Vec::new();
    let mut stack: Vec<Vec<u32>> = Vec::new();
    let mut first = 1u32;
    while fits(&[first]) {
        stack.push(vec![first]);
        first += 1;
    }
    while let Some(seq) = stack.pop() {
        let mut next = *seq.last().expect("non-empty");
        loop {
            let mut ext = seq.clone();
            ext.push(next);
            if !fits(&ext) {
                break;
            }
            stack.push(ext);
            next += 1;
        }
        out.push(seq);
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn k_examples() {
        assert_eq!(choose_k(0.6).unwrap(), 4);
        assert_eq!(choose_k(0.75).unwrap(), 1);
        assert_eq!(choose_k(0.85).unwrap(), 1);
        assert_eq!(choose_k(0.55).unwrap(), 9);
        assert!(choose_k(0.5).is_err());
        assert!(choose_k(1.0).is_err());
        assert!(choose_k(0.2).is_err());
    }

    #[test]
    fn eta_for_three_quarters() {
        let eta = choose_eta(0.75, 0.3).unwrap();
        assert_eq!(eta, ratio(3, 80));
        // independent float recheck of the two displayed inequalities
        let e = 0.0375f64;
        assert!((1.0 - 2.0 * e) / (1.5 + 2.0 * e - 1.0) > 0.7 / 0.5);
        assert!(1.0 / (0.5 + 2.0 * e) > 1.0);
    }

    #[test]
    fn eta_infeasible_for_tiny_epsilon() {
        match choose_eta(0.6, 1e-9) {
            Err(DesignError::EtaInfeasible { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn eta_rechecked_independently() {
        let eta = choose_eta(0.85, 0.2).unwrap();
        let a = ratio(17, 20);
        let eps = ratio(1, 5);
        assert_eq!(eta_violation(&a, &eps, &eta), None);
        // the next coarser grid value must have failed
        let coarser = &eta * int(2);
        if coarser < eps {
            assert!(eta_violation(&a, &eps, &coarser).is_some());
        }
        let ef = rational::to_f64(&eta);
        let k = 1.0;
        assert!((1.0 - 2.0 * ef) / (0.7 + 2.0 * ef) > 0.8 / 0.7);
        assert!(1.0 / (0.7 + 2.0 * ef) > k);
        let f = |x: f64| ((2.0 * (2.0 * x - 1.0) - 1.0) / (2.0 - 2.0 * x)).floor();
        assert_eq!(f(0.85), f(0.85 + ef));
    }

    #[test]
    fn counts_closed_forms() {
        assert_eq!(sequence_counts(&[4], 1), Some(SequenceCounts { ell: 4, chi: 5, zeta: 8 }));
        assert_eq!(sequence_counts(&[2], 1), Some(SequenceCounts { ell: 2, chi: 3, zeta: 4 }));
        assert_eq!(sequence_counts(&[2, 5], 1), Some(SequenceCounts { ell: 10, chi: 16, zeta: 25 }));
        for terms in [vec![1, 3], vec![2, 2, 3], vec![5]] {
            for k in 1..4u64 {
                let c = sequence_counts(&terms, k).unwrap();
                assert_eq!(c.zeta, k * c.ell + c.chi - 1);
            }
        }
    }

    #[test]
    fn expansion_lands_inside_interval() {
        let eta = ratio(1, 20);
        let seq = expand_beta(0.85, &eta, 1, 10).unwrap();
        let r = sequence_ratio(&seq, 1).unwrap();
        assert!(r > ratio(7, 10) && r < ratio(4, 5), "{seq:?} gives {r}");
        assert!(sequence_counts(&seq, 1).unwrap().zeta <= 10);
        assert_eq!(seq, vec![1, 3]);
    }

    #[test]
    fn expansion_budget_error_when_nothing_fits() {
        // every tree with zeta <= 10 and k = 1 has chi/zeta >= 0.6 > 0.575
        let eta = ratio(3, 80);
        assert!(matches!(expand_beta(0.75, &eta, 1, 10), Err(DesignError::ZetaBudget { .. })));
        let seq = expand_beta(0.75, &eta, 1, 14).unwrap();
        assert_eq!(seq, vec![7]);
        let r = sequence_ratio(&seq, 1).unwrap();
        assert!(r > ratio(1, 2) && r < ratio(23, 40));
    }

    #[test]
    fn boundary_ratio_never_returned() {
        // beta = 0 would give ratio 1/(k+1) = 2a - 1 exactly
        for zeta_max in [4, 8, 12, 20, 40] {
            if let Ok(seq) = expand_beta(0.75, &ratio(3, 80), 1, zeta_max) {
                assert_ne!(sequence_ratio(&seq, 1).unwrap(), ratio(1, 2));
            }
        }
    }

    #[test]
    fn enumerated_sequences_respect_budget() {
        let seqs = all_sequences(1, 10);
        assert!(seqs.contains(&vec![2]));
        assert!(seqs.contains(&vec![1, 3]));
        assert!(seqs.contains(&vec![2, 2]));
        assert!(!seqs.contains(&vec![6]));
        for s in &seqs {
            assert!(sequence_counts(s, 1).unwrap().zeta <= 10);
            assert!(s.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
