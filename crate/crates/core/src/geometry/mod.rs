//! One-dimensional realizations at finite depth and the empirical
//! estimators run on them.
//!
//! Box counts and ball masses are exact interval arithmetic; nothing here
//! samples randomly.

mod boxcount;
mod measure;
mod realize;

pub use boxcount::{box_count, empirical_box_dim, geometric_scales, BoxCount, BoxDimFit, MIN_FIT_SCALES};
pub use measure::{local_exponent_scan, mass_distribution, LocalExponent, MeasureRealization};
pub use realize::{realize_attractor, AttractorRealization, Interval, Placement, DEFAULT_INTERVAL_BUDGET};
