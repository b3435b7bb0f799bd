//! Stress-aligned, non-planar toolpath generation.
//!
//! The crate takes a tetrahedral solid and a load case through the full
//! chain: linear-elastic FEA ([`fea`]), geodesic offset slicing into curved
//! layers ([`slicing`]), per-layer stress-flow preprocessing
//! ([`stressflow`]), trajectory generation from a fitted scalar field
//! ([`trajopt`]) and alignment/spacing metrics ([`metrics`]). The
//! [`pipeline`] module ties the stages together behind a config file.

// `!(x > 0.0)` guards deliberately reject NaN alongside non-positive values;
// index loops mirror the component formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod fea;
pub mod meshcore;
pub mod metrics;
pub mod numerics;
pub mod pipeline;
pub mod slicing;
pub mod stressflow;
pub mod trajopt;

pub use meshcore::Vec3;
