//! Paired spherical/planar binomial point processes for non-terrestrial
//! networks, and estimation of the error made when a spherical deployment
//! is approximated by a planar one.
//!
//! Frame conventions used throughout the crate:
//!
//! * The origin is the Earth center; the typical user sits on the +z axis
//!   at `(0, 0, R_earth)`.
//! * Lengths are in km, angles in radians.
//! * A planar point's `axis_height` is measured from the Earth center, so
//!   its height above the user is `axis_height - R_earth`.

pub mod distributions;
pub mod errest;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod pointgen;
pub mod regions;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use geom::{CartesianPoint, EarthConstants, PlanarPoint, SphericalPoint};
pub use metrics::{ChannelModel, MetricId};
pub use pointgen::{DeploymentParams, PairedDeployment};
pub use rng::RngSpec;
