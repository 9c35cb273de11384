//! Exterior algebra on `∧^k(ℝⁿ)*` over the lexicographic basis.

mod comass;
mod covector;
mod index;
pub(crate) mod linalg;
pub(crate) mod tables;

pub use comass::{comass_norm, ComassConfig, ComassResult};
pub use covector::{pullback_linear, KCovector};
pub use index::{basis, binomial, MultiIndex};

pub(crate) use index::{basis_masks, merge_sign, rank_of_mask};
