//! Deployment regions: line of sight, zenith-pointing beam, or fixed cap
//! area, each resolved to the polar half-angle of a spherical cap.
//!
//! The beam relations come from the triangle (Earth center, user, platform
//! on the main-lobe edge): the angle at the user is `pi - psi/2`, the angle
//! at the center is `theta_max`. The closed forms are evaluated through the
//! law of sines and `atan2`, which are algebraically the same as the
//! law-of-cosines expressions but keep full precision near the zenith and
//! the horizon.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{one_minus_cos, EarthConstants};
use crate::pointgen::los_theta_max;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RegionSpec {
    Los,
    /// Main-lobe central angle in radians.
    BeamAngle(f64),
    /// Cap area in km².
    CapArea(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRegion {
    pub theta_max: f64,
    /// Farthest user-to-platform distance inside the beam (beam regions only).
    pub d_max: Option<f64>,
}

impl RegionSpec {
    pub fn resolve(&self, radius: f64, earth: &EarthConstants) -> Result<ResolvedRegion> {
        match *self {
            RegionSpec::Los => Ok(ResolvedRegion {
                theta_max: los_theta_max(radius, earth)?,
                d_max: None,
            }),
            RegionSpec::BeamAngle(psi) => theta_max_from_beam(psi, radius, earth),
            RegionSpec::CapArea(area) => Ok(ResolvedRegion {
                theta_max: theta_max_from_area(area, radius)?,
                d_max: None,
            }),
        }
    }
}

/// Cap half-angle covered by a zenith-pointing beam of main-lobe angle `psi`.
///
/// Beams wider than `pi` would reach below the horizon and are rejected.
pub fn theta_max_from_beam(psi: f64, radius: f64, earth: &EarthConstants) -> Result<ResolvedRegion> {
    let re = earth.earth_radius;
    if !(psi > 0.0 && psi < 2.0 * PI) {
        return Err(Error::domain(format!("beam angle {psi} outside (0, 2 pi)")));
    }
    if !(radius > re) {
        return Err(Error::domain(format!(
            "sphere radius {radius} must exceed the earth radius {re}"
        )));
    }
    if psi > PI {
        let los = los_theta_max(radius, earth)?;
        return Err(Error::domain(format!(
            "beam angle {psi} sees past the horizon (cap would exceed the line-of-sight bound {los})"
        )));
    }
    let (s, c) = (0.5 * psi).sin_cos();
    // R_s^2 - R_e^2 sin^2(psi/2), factored for precision when R_s is close to R_e.
    let q = (radius - re) * (radius + re) + re * re * c * c;
    let root = q.sqrt();
    // Positive root of d^2 - 2 R_e cos(pi - psi/2) d + R_e^2 - R_s^2 = 0,
    // rationalized: R_e cos(pi - psi/2) + sqrt(...) = (R_s^2 - R_e^2) / (sqrt(...) + R_e cos(psi/2)).
    let d_max = (radius - re) * (radius + re) / (root + re * c);
    // Angle at the platform is psi/2 - theta_max; law of sines gives its sine.
    let theta_max = 0.5 * psi - (re * s).atan2(root);
    Ok(ResolvedRegion { theta_max, d_max: Some(d_max) })
}

/// Cap half-angle for a cap of area `area` on a sphere of radius `radius`.
pub fn theta_max_from_area(area: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain(format!("sphere radius must be positive, got {radius}")));
    }
    let hemisphere = 2.0 * PI * radius * radius;
    if !(area > 0.0 && area <= hemisphere) {
        return Err(Error::domain(format!(
            "cap area {area} outside (0, {hemisphere}]"
        )));
    }
    // arccos(1 - x) = 2 asin(sqrt(x / 2)) with x = A / (2 pi R_s^2).
    let x = area / hemisphere;
    Ok(2.0 * (0.5 * x).sqrt().min(1.0).asin())
}

/// Main-lobe angle whose beam just covers a cap of half-angle `theta_max`.
pub fn beam_from_theta_max(theta_max: f64, radius: f64, earth: &EarthConstants) -> Result<f64> {
    let los = los_theta_max(radius, earth)?;
    if !(theta_max > 0.0 && theta_max <= los * (1.0 + 1e-15)) {
        return Err(Error::domain(format!(
            "theta_max {theta_max} outside (0, {los}]"
        )));
    }
    // Zenith angle at the user of the cap-edge platform.
    let horizontal = radius * theta_max.sin();
    let vertical = (radius - earth.earth_radius) - radius * one_minus_cos(theta_max);
    // The horizon cap maps to pi; rounding must not push it past.
    Ok((2.0 * horizontal.atan2(vertical)).min(PI))
}
