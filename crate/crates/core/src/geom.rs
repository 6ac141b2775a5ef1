//! Coordinate systems, cap geometry and user-to-platform distances.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthConstants {
    pub earth_radius: f64,
}

impl Default for EarthConstants {
    fn default() -> Self {
        Self {
            earth_radius: EARTH_RADIUS_KM,
        }
    }
}

impl EarthConstants {
    pub fn new(earth_radius: f64) -> Result<Self> {
        if !(earth_radius.is_finite() && earth_radius > 0.0) {
            return Err(Error::domain(format!(
                "earth radius must be positive, got {earth_radius}"
            )));
        }
        Ok(Self { earth_radius })
    }

    /// Position of the typical user.
    pub fn user(&self) -> CartesianPoint {
        CartesianPoint::new(0.0, 0.0, self.earth_radius)
    }
}

/// A platform on a sphere of radius `radius` about the Earth center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub radius: f64,
    pub azimuth: f64,
    pub polar: f64,
}

/// A platform on the plane `z = axis_height`, in cylindrical coordinates
/// about the user's zenith axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub horizontal_radius: f64,
    pub azimuth: f64,
    pub axis_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn sub(&self, other: &CartesianPoint) -> CartesianPoint {
        CartesianPoint::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn distance_sq(&self, other: &CartesianPoint) -> f64 {
        self.sub(other).norm_sq()
    }

    pub fn distance(&self, other: &CartesianPoint) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

impl SphericalPoint {
    pub fn to_cartesian(&self) -> CartesianPoint {
        spherical_to_cartesian(self)
    }
}

impl PlanarPoint {
    pub fn to_cartesian(&self) -> CartesianPoint {
        planar_to_cartesian(self)
    }
}

/// Surface area of the cap of polar half-angle `theta_max` on a sphere of
/// radius `radius`.
pub fn cap_area(radius: f64, theta_max: f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain(format!(
            "cap radius must be positive, got {radius}"
        )));
    }
    if !(theta_max > 0.0 && theta_max <= PI) {
        return Err(Error::domain(format!(
            "cap half-angle must lie in (0, pi], got {theta_max}"
        )));
    }
    Ok(2.0 * PI * radius * radius * one_minus_cos(theta_max))
}

/// `1 - cos(theta)` without cancellation for small angles.
pub fn one_minus_cos(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    2.0 * s * s
}

pub fn spherical_to_cartesian(p: &SphericalPoint) -> CartesianPoint {
    let (sin_t, cos_t) = p.polar.sin_cos();
    let (sin_p, cos_p) = p.azimuth.sin_cos();
    CartesianPoint::new(
        p.radius * sin_t * cos_p,
        p.radius * sin_t * sin_p,
        p.radius * cos_t,
    )
}

pub fn planar_to_cartesian(p: &PlanarPoint) -> CartesianPoint {
    let (sin_p, cos_p) = p.azimuth.sin_cos();
    CartesianPoint::new(
        p.horizontal_radius * cos_p,
        p.horizontal_radius * sin_p,
        p.axis_height,
    )
}

/// Squared distance from the user to a point at polar angle `polar` on the
/// sphere of radius `radius`.
///
/// Law of cosines `R_e^2 + R_s^2 - 2 R_e R_s cos(polar)`, rearranged as
/// `(R_s - R_e)^2 + 2 R_e R_s (1 - cos(polar))` to avoid cancellation.
pub fn user_distance_sq_spherical(polar: f64, radius: f64, earth: &EarthConstants) -> f64 {
    let re = earth.earth_radius;
    let dh = radius - re;
    dh * dh + 2.0 * re * radius * one_minus_cos(polar)
}

pub fn user_distance_spherical(polar: f64, radius: f64, earth: &EarthConstants) -> f64 {
    user_distance_sq_spherical(polar, radius, earth).sqrt()
}

pub fn user_distance_sq_planar(horizontal_radius: f64, axis_height: f64, earth: &EarthConstants) -> f64 {
    let dz = axis_height - earth.earth_radius;
    horizontal_radius * horizontal_radius + dz * dz
}

pub fn user_distance_planar(horizontal_radius: f64, axis_height: f64, earth: &EarthConstants) -> f64 {
    user_distance_sq_planar(horizontal_radius, axis_height, earth).sqrt()
}

/// Elevation angle (radians) of `p` above the user's local horizon.
pub fn elevation_angle(p: &CartesianPoint, earth: &EarthConstants) -> f64 {
    let rel = p.sub(&earth.user());
    let d = rel.norm();
    if d == 0.0 {
        return PI / 2.0;
    }
    (rel.z / d).clamp(-1.0, 1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cap_area_closed_forms() {
        assert_relative_eq!(cap_area(1.0, PI / 2.0).unwrap(), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(cap_area(1.0, PI).unwrap(), 4.0 * PI, max_relative = 1e-15);
        // Line-of-sight cap at 550 km: area is 2 pi R_s h.
        let t = (6371.0f64 / 6921.0).acos();
        assert_relative_eq!(cap_area(6921.0, t).unwrap(), 2.0 * PI * 6921.0 * 550.0, max_relative = 1e-12);
    }

    #[test]
    fn cap_area_matches_monte_carlo_surface_integration() {
        // Fraction of uniform sphere points inside the cap times 4*pi*R^2.
        let (radius, theta_max) = (6921.0_f64, 0.40098_f64);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400_000;
        let mut inside = 0usize;
        for _ in 0..n {
            // z uniform on [-1, 1] is the Archimedes construction of a uniform sphere point.
            let z: f64 = rng.random_range(-1.0..1.0);
            if z >= theta_max.cos() {
                inside += 1;
            }
        }
        let mc = inside as f64 / n as f64 * 4.0 * PI * radius * radius;
        let exact = cap_area(radius, theta_max).unwrap();
        assert_relative_eq!(mc, exact, max_relative = 0.02);
    }

    #[test]
    fn cap_area_rejects_bad_input() {
        assert!(cap_area(0.0, 1.0).is_err());
        assert!(cap_area(-1.0, 1.0).is_err());
        assert!(cap_area(1.0, 0.0).is_err());
        assert!(cap_area(1.0, PI + 1e-9).is_err());
    }

    #[test]
    fn spherical_examples() {
        let c = spherical_to_cartesian(&SphericalPoint { radius: 1.0, azimuth: 0.0, polar: 0.0 });
        assert_eq!((c.x, c.y, c.z), (0.0, 0.0, 1.0));
        let c = spherical_to_cartesian(&SphericalPoint { radius: 1.0, azimuth: 0.0, polar: PI / 2.0 });
        assert_relative_eq!(c.x, 1.0);
        assert!(c.y.abs() < 1e-16 && c.z.abs() < 1e-16);
        let c = spherical_to_cartesian(&SphericalPoint { radius: 2.0, azimuth: PI / 2.0, polar: PI / 4.0 });
        assert!(c.x.abs() < 1e-15);
        assert_relative_eq!(c.y, 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(c.z, 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn planar_examples() {
        let c = planar_to_cartesian(&PlanarPoint { horizontal_radius: 0.0, azimuth: 0.0, axis_height: 7.0 });
        assert_eq!((c.x, c.y, c.z), (0.0, 0.0, 7.0));
        let c = planar_to_cartesian(&PlanarPoint { horizontal_radius: 1.0, azimuth: PI, axis_height: 0.0 });
        assert_relative_eq!(c.x, -1.0);
        assert!(c.y.abs() < 1e-15);
        let c = planar_to_cartesian(&PlanarPoint { horizontal_radius: 3.0, azimuth: PI / 2.0, axis_height: 4.0 });
        assert!(c.x.abs() < 1e-15);
        assert_relative_eq!(c.y, 3.0);
        assert_relative_eq!(c.norm(), 5.0, max_relative = 1e-15);
    }

    #[test]
    fn spherical_distance_examples() {
        let e = EarthConstants::default();
        let rs = 6921.0;
        assert_relative_eq!(user_distance_spherical(0.0, rs, &e), rs - e.earth_radius, max_relative = 1e-12);
        assert_relative_eq!(user_distance_spherical(PI, rs, &e), rs + e.earth_radius, max_relative = 1e-15);
        let horizon = (e.earth_radius / rs).acos();
        let d = user_distance_spherical(horizon, rs, &e);
        assert_relative_eq!(d, (rs * rs - e.earth_radius * e.earth_radius).sqrt(), max_relative = 1e-12);
        assert!((d - 2703.8).abs() < 0.05);
    }

    #[test]
    fn spherical_distance_agrees_with_cartesian_route() {
        let e = EarthConstants::default();
        let p = SphericalPoint { radius: 7000.0, azimuth: 1.3, polar: 0.3 };
        let direct = user_distance_spherical(p.polar, p.radius, &e);
        let via = p.to_cartesian().distance(&e.user());
        assert_relative_eq!(direct, via, max_relative = 1e-12);
    }

    #[test]
    fn planar_distance_examples() {
        let e = EarthConstants::default();
        let re = e.earth_radius;
        assert_relative_eq!(user_distance_planar(0.0, re + 388.91, &e), 388.91, max_relative = 1e-12);
        assert_relative_eq!(user_distance_planar(3.0, re + 4.0, &e), 5.0, max_relative = 1e-12);
    }

    #[test]
    fn elevation_of_zenith_and_horizon() {
        let e = EarthConstants::default();
        let overhead = CartesianPoint::new(0.0, 0.0, e.earth_radius + 100.0);
        assert_relative_eq!(elevation_angle(&overhead, &e), PI / 2.0);
        let level = CartesianPoint::new(100.0, 0.0, e.earth_radius);
        assert!(elevation_angle(&level, &e).abs() < 1e-15);
    }

    #[test]
    fn norm_is_radius_for_many_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            let p = SphericalPoint {
                radius: rng.random_range(6372.0..50_000.0),
                azimuth: rng.random_range(0.0..2.0 * PI),
                polar: rng.random_range(0.0..=PI),
            };
            let n = spherical_to_cartesian(&p).norm();
            assert!(((n - p.radius) / p.radius).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn spherical_distance_increases_with_polar(a in 0.0..PI, b in 0.0..PI, rs in 6400.0..60_000.0) {
                prop_assume!((a - b).abs() > 1e-9);
                let e = EarthConstants::default();
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(user_distance_spherical(lo, rs, &e) < user_distance_spherical(hi, rs, &e));
            }

            #[test]
            fn planar_distance_increases_with_radius(a in 0.0f64..5000.0, b in 0.0f64..5000.0, h in 1.0..2000.0) {
                prop_assume!((a - b).abs() > 1e-6);
                let e = EarthConstants::default();
                let hp = e.earth_radius + h;
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(user_distance_planar(lo, hp, &e) < user_distance_planar(hi, hp, &e));
            }

            #[test]
            fn cap_area_scales_with_radius_squared(r in 1.0f64..1e6, k in 0.01f64..100.0, t in 0.001f64..PI) {
                let a: f64 = cap_area(r, t).unwrap() / (r * r);
                let b = cap_area(r * k, t).unwrap() / (r * k * r * k);
                prop_assert!(((a - b) / a).abs() < 1e-12);
            }
        }
    }
}
