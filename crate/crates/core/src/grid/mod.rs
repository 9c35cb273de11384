//! Differential forms sampled on uniform grids.

mod domain;
mod form;
mod holder;
pub mod qrgf;

pub use domain::{unit_ball_volume, GridDomain, Region};
pub use domain::dist2;
pub use form::{bump_form, bump_integral, bump_profile, GridForm};
pub(crate) use form::difference;
pub use holder::{Exponent, HolderReport, HolderSequence};
