//! The designer: from `(alpha, epsilon, zeta_max)` to a verified template tree.

use num::bigint::BigInt;
use serde::Serialize;

use super::balance::{verify_balanced_exhaustive, verify_balanced_structural, Verdict};
use super::params::{
    all_sequences, alpha_exact, choose_eta_exact, epsilon_exact, expand_beta_exact, k_for, sequence_counts,
    sequence_ratio,
};
use super::{DesignError, TreeTemplate};
use crate::rational::{self, ceil_int, int, simplest_between, Rational};

/// Retries of the `alpha_eta` choice before a candidate tree is abandoned.
const ALPHA_ETA_RETRIES: usize = 64;

/// Exhaustive verification runs when the tree is at most this large.
const EXHAUSTIVE_CHI_PLUS_ZETA: usize = 26;

/// All parameters of a design.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub alpha: Rational,
    pub epsilon: Rational,
    pub eta: Rational,
    pub k: u32,
    pub beta_terms: Vec<u32>,
    pub ell: u64,
    pub alpha_eta: Rational,
    pub alpha_tilde: Rational,
    pub zeta_max: usize,
    pub kappa0: u64,
}

/// How the branching sequence was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMode {
    /// expansion of the admissible `beta` range
    Expansion,
    /// smallest-ratio sequence within the budget, `alpha_eta < alpha + eta`
    BudgetSearch,
    /// as above but `alpha_eta` may exceed `alpha + eta`; the guarantee is weaker
    Relaxed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Verification {
    /// `None` when the tree is too large to enumerate
    pub exhaustive: Option<bool>,
    pub structural: bool,
}

#[derive(Clone, Debug)]
pub struct Design {
    pub params: ParamSet,
    pub tree: TreeTemplate,
    pub mode: DesignMode,
    pub verified: Verification,
}

impl Design {
    /// `(1 - 2 eta) zeta / chi`: the overlap ratio the tree certifies.
    pub fn achieved_ratio(&self) -> Rational {
        let z = int(self.tree.zeta() as i64);
        let c = int(self.tree.chi() as i64);
        (int(1) - int(2) * &self.params.eta) * z / c
    }

    /// `(1 - epsilon) / (2 alpha - 1)`.
    pub fn requested_ratio(&self) -> Rational {
        (int(1) - &self.params.epsilon) / (int(2) * &self.params.alpha - int(1))
    }

    /// The `epsilon` whose requested ratio equals the achieved one.
    pub fn effective_epsilon(&self) -> Rational {
        int(1) - self.achieved_ratio() * (int(2) * &self.params.alpha - int(1))
    }

    /// `0 < chi - (2 a - 1) zeta < 1 - a` at `a = alpha_eta`.
    pub fn condition_one_holds(&self) -> bool {
        condition_one(&self.tree, &self.params.alpha_eta)
    }

    pub fn summary(&self) -> DesignSummary {
        let p = &self.params;
        DesignSummary {
            alpha: rational::to_f64(&p.alpha),
            epsilon: rational::to_f64(&p.epsilon),
            zeta_max: p.zeta_max,
            k: p.k,
            eta: rational::display(&p.eta),
            eta_value: rational::to_f64(&p.eta),
            beta_terms: p.beta_terms.clone(),
            ell: p.ell,
            chi: self.tree.chi(),
            zeta: self.tree.zeta(),
            xi: self.tree.xi(),
            alpha_eta: rational::display(&p.alpha_eta),
            alpha_tilde: rational::display(&p.alpha_tilde),
            kappa0: p.kappa0,
            mode: self.mode,
            achieved_ratio: rational::to_f64(&self.achieved_ratio()),
            requested_ratio: rational::to_f64(&self.requested_ratio()),
            effective_epsilon: rational::to_f64(&self.effective_epsilon()),
            verified: self.verified,
        }
    }
}

/// JSON view of a design.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignSummary {
    pub alpha: f64,
    pub epsilon: f64,
    pub zeta_max: usize,
    pub k: u32,
    pub eta: String,
    pub eta_value: f64,
    pub beta_terms: Vec<u32>,
    pub ell: u64,
    pub chi: usize,
    pub zeta: usize,
    pub xi: usize,
    pub alpha_eta: String,
    pub alpha_tilde: String,
    pub kappa0: u64,
    pub mode: DesignMode,
    pub achieved_ratio: f64,
    pub requested_ratio: f64,
    pub effective_epsilon: f64,
    pub verified: Verification,
}

fn condition_one(tree: &TreeTemplate, a: &Rational) -> bool {
    let slack = int(tree.chi() as i64) - (int(2) * a - int(1)) * int(tree.zeta() as i64);
    slack > int(0) && slack < int(1) - a
}

/// `kappa0 = ceil(4 zeta / eta) + 1`.
pub fn default_kappa0(zeta: usize, eta: &Rational) -> u64 {
    let bound = ceil_int(&(int(4 * zeta as i64) / eta)) + BigInt::from(1);
    u64::try_from(bound).unwrap_or(u64::MAX)
}

pub fn design(alpha: f64, epsilon: f64, zeta_max: usize) -> Result<Design, DesignError> {
    design_exact(&alpha_exact(alpha)?, &epsilon_exact(epsilon)?, zeta_max)
}

pub fn design_exact(alpha: &Rational, epsilon: &Rational, zeta_max: usize) -> Result<Design, DesignError> {
    if zeta_max == 0 {
        return Err(DesignError::ZetaBudget { zeta_max });
    }
    let k = k_for(alpha);
    let eta = choose_eta_exact(alpha, epsilon)?;
    let cap = alpha + &eta;

    let assemble = |terms: Vec<u32>, mode: DesignMode, upper: Option<&Rational>| -> Option<Design> {
        let tree = TreeTemplate::build(&terms, k as usize, zeta_max).ok()?;
        let (alpha_eta, verified) = pick_alpha_eta(&tree, alpha, upper)?;
        let counts = sequence_counts(&terms, k as u64)?;
        let alpha_tilde = (sequence_ratio(&terms, k as u64)? + int(1)) / int(2);
        Some(Design {
            params: ParamSet {
                alpha: alpha.clone(),
                epsilon: epsilon.clone(),
                eta: eta.clone(),
                k,
                beta_terms: terms,
                ell: counts.ell,
                alpha_eta,
                alpha_tilde,
                zeta_max,
                kappa0: default_kappa0(tree.zeta(), &eta),
            },
            tree,
            mode,
            verified,
        })
    };

    if let Ok(terms) = expand_beta_exact(alpha, &eta, k, zeta_max) {
        if let Some(d) = assemble(terms, DesignMode::Expansion, Some(&cap)) {
            return Ok(d);
        }
    }

    let floor_ratio = int(2) * alpha - int(1);
    let mut ranked: Vec<(Rational, u64, Vec<u32>)> = all_sequences(k, zeta_max)
        .into_iter()
        .filter_map(|terms| {
            let r = sequence_ratio(&terms, k as u64)?;
            let z = sequence_counts(&terms, k as u64)?.zeta;
            (r > floor_ratio && r < int(1)).then_some((r, z, terms))
        })
        .collect();
    ranked.sort();

    for (mode, upper) in [(DesignMode::BudgetSearch, Some(&cap)), (DesignMode::Relaxed, None)] {
        for (_, _, terms) in &ranked {
            if let Some(d) = assemble(terms.clone(), mode, upper) {
                return Ok(d);
            }
        }
    }
    Err(DesignError::Infeasible { zeta_max })
}

/// Simplest rational in `(max(alpha, (chi+zeta-1)/(2 zeta-1)), min(upper, alpha_tilde))`
/// that passes verification, moving the lower end up after each rejection.
fn pick_alpha_eta(tree: &TreeTemplate, alpha: &Rational, upper: Option<&Rational>) -> Option<(Rational, Verification)> {
    let chi = tree.chi() as i64;
    let zeta = tree.zeta() as i64;
    let alpha_tilde = Rational::new(BigInt::from(chi + zeta), BigInt::from(2 * zeta));
    let cond_one_lo = Rational::new(BigInt::from(chi + zeta - 1), BigInt::from(2 * zeta - 1));
    let mut lo = if alpha > &cond_one_lo { alpha.clone() } else { cond_one_lo };
    let hi = match upper {
        Some(u) if u < &alpha_tilde => u.clone(),
        _ => alpha_tilde,
    };
    for _ in 0..ALPHA_ETA_RETRIES {
        if lo >= hi {
            return None;
        }
        let a = simplest_between(&lo, &hi);
        debug_assert!(condition_one(tree, &a));
        let structural = verify_balanced_structural(tree, &a).ok()?.is_balanced();
        let exhaustive = (tree.chi() + tree.zeta() <= EXHAUSTIVE_CHI_PLUS_ZETA)
            .then(|| verify_balanced_exhaustive(tree, &a).map(|v| v == Verdict::Balanced))
            .transpose()
            .ok()?;
        if structural && exhaustive != Some(false) {
            return Some((a, Verification { exhaustive, structural }));
        }
        lo = a;
    }
    None
}
