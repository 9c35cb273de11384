//! Numerical exterior calculus for quasiregular mappings.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`] — exact multilinear algebra on `∧^k(ℝⁿ)*` and the comass norm.
//! * [`grid`] — k-form fields sampled on uniform grids, with `d`, `L^p` norms,
//!   integration and pairings.
//! * [`maps`] — grid-sampled maps into `ℝ^m` or the flat torus `T^m`, their
//!   derivatives, pull-backs and distortion inequalities.
//! * [`homotopy`] — the Poincaré homotopy operator with its explicit singular kernel.
//! * [`degree`] — topological degree and local index.
//! * [`cohomology`] — normalized pull-back sequences and the cohomology limit map.
//! * [`estimates`] — reverse Hölder, Gehring and growth probes on dyadic cubes.

// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too;
// index loops over axes read more naturally than zipped iterators here.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod cohomology;
pub mod degree;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod homotopy;
pub mod maps;

pub use algebra::{ComassConfig, ComassResult, KCovector, MultiIndex};
pub use error::{Error, Result};
pub use grid::{Exponent, GridDomain, GridForm, HolderSequence, Region};
pub use maps::{AnalyticTargetForm, DerivativeField, MapFamily, SampledMap, ScalarFn};
