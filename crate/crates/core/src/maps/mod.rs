//! Grid-sampled maps into `ℝ^m` or the flat torus `T^m`.

mod distortion;
mod family;
mod sampled;
mod scalar;
mod target_form;

pub use distortion::{comass_field, distortion_check, DistortionKind, DistortionParams, DistortionReport, PartialField, Quantiles};
pub use family::MapFamily;
pub use sampled::{torus_dist, wrap_unit, DerivativeField, SampledMap};
pub use scalar::{Monomial, ScalarFn, TrigTerm, Wave};
pub use target_form::AnalyticTargetForm;
