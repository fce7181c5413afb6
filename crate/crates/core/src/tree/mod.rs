//! Template tree design: parameters, construction and balanced-condition checks.

pub mod balance;
pub mod design;
pub mod params;
pub mod template;

pub use balance::{
    capacity, d_quantity, subtree_margin_of, verify_balanced_exhaustive, verify_balanced_structural, Condition,
    StructuralVerdict, SubgraphMask, Verdict,
};
pub use design::{design, design_exact, Design, DesignMode, DesignSummary, ParamSet, Verification};
pub use params::{choose_eta, choose_k, expand_beta, sequence_counts, sequence_ratio, EtaConstraint, SequenceCounts};
pub use template::TreeTemplate;

#[derive(Debug, thiserror::Error)]
pub enum DesignError {
    #[error("alpha must lie strictly between 1/2 and 1, got {0}")]
    Alpha(f64),
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    Epsilon(f64),
    #[error("no admissible eta on the halving grid; last violated constraint: {constraint}")]
    EtaInfeasible { constraint: String },
    #[error("no branching sequence fits zeta <= {zeta_max}; raise --zeta-max or --epsilon")]
    ZetaBudget { zeta_max: usize },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid subgraph mask: {0}")]
    InvalidMask(String),
    #[error("exhaustive verification is limited to small trees (chi={chi}, zeta={zeta})")]
    ExhaustiveBudget { chi: usize, zeta: usize },
    #[error("no balanced tree with zeta <= {zeta_max} was found; raise --zeta-max or --epsilon")]
    Infeasible { zeta_max: usize },
}
