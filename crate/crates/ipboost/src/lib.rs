//! Boosting engine that minimizes the true (non-convex) misclassification
//! loss by branch-and-price: column generation for decision-stump learners
//! inside a branch-and-bound search over per-example misclassification
//! indicators. Ships LPBoost and AdaBoost comparators, a generator for the
//! noisy hard-instance family that defeats convex potential boosters, a
//! bounded-variable revised simplex kernel with warm starts, and an
//! experiment runner.

pub mod baselines;
pub mod branch_price;
pub mod data;
pub mod experiment;
pub mod hard_instances;
pub mod learners;
pub mod master;
pub mod par;
pub mod simplex;
pub mod sparsify;

pub use data::{Dataset, SplitSpec};
pub use learners::{BoostedEnsemble, DecisionStump, EtaKind};

