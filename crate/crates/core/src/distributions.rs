//! User-to-platform distance laws of the two processes, their second
//! moments, and the planar altitude that equalizes those moments.
//!
//! For both processes the squared distance is affine in the driving
//! uniform `u`, so `D^2` is uniform on its range and every formula below
//! follows from that.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{one_minus_cos, EarthConstants};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DistanceLaw {
    Spherical {
        radius: f64,
        theta_max: f64,
        earth: EarthConstants,
    },
    /// `axis_height` measured from the Earth center.
    Planar {
        rho_max: f64,
        axis_height: f64,
        earth: EarthConstants,
    },
}

impl DistanceLaw {
    /// `D^2 = offset + u * span`.
    fn affine(&self) -> (f64, f64) {
        match *self {
            DistanceLaw::Spherical { radius, theta_max, earth } => {
                let dh = radius - earth.earth_radius;
                (dh * dh, 2.0 * earth.earth_radius * radius * one_minus_cos(theta_max))
            }
            DistanceLaw::Planar { rho_max, axis_height, earth } => {
                let dh = axis_height - earth.earth_radius;
                (dh * dh, rho_max * rho_max)
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.affine();
        (a.sqrt(), (a + b).sqrt())
    }

    /// CDF of the user-to-platform distance, clamped to `[0, 1]` outside
    /// the support.
    pub fn cdf(&self, d: f64) -> f64 {
        let (a, b) = self.affine();
        if b == 0.0 {
            return if d * d >= a { 1.0 } else { 0.0 };
        }
        ((d * d - a) / b).clamp(0.0, 1.0)
    }

    /// Inverse-CDF draw.
    pub fn sample(&self, u: f64) -> f64 {
        let (a, b) = self.affine();
        (a + u * b).sqrt()
    }

    pub fn mean_sq(&self) -> f64 {
        let (a, b) = self.affine();
        a + 0.5 * b
    }
}

pub fn cdf_spherical(d: f64, radius: f64, theta_max: f64, earth: &EarthConstants) -> f64 {
    DistanceLaw::Spherical { radius, theta_max, earth: *earth }.cdf(d)
}

/// Planar distance CDF with the height above the user taken as
/// `axis_height - R_earth`.
pub fn cdf_planar(d: f64, rho_max: f64, axis_height: f64, earth: &EarthConstants) -> f64 {
    DistanceLaw::Planar { rho_max, axis_height, earth: *earth }.cdf(d)
}

pub fn sample_distance(law: &DistanceLaw, u: f64) -> f64 {
    law.sample(u)
}

/// `E[D^2] = R_e^2 + R_s^2 - R_e R_s (1 + cos theta_max)`.
pub fn mean_sq_distance_spherical(radius: f64, theta_max: f64, earth: &EarthConstants) -> f64 {
    DistanceLaw::Spherical { radius, theta_max, earth: *earth }.mean_sq()
}

/// `E[D^2] = (h_p - R_e)^2 + rho_max^2 / 2`.
pub fn mean_sq_distance_planar(rho_max: f64, axis_height: f64, earth: &EarthConstants) -> f64 {
    DistanceLaw::Planar { rho_max, axis_height, earth: *earth }.mean_sq()
}

/// Planar altitude (from the Earth center) whose mean squared user distance
/// equals the spherical one:
/// `R_e + sqrt(R_e^2 - rho_max^2 / 2 - (1 + cos theta_max) R_s R_e + R_s^2)`.
pub fn optimal_altitude(radius: f64, theta_max: f64, rho_max: f64, earth: &EarthConstants) -> Result<f64> {
    let radicand = mean_sq_distance_spherical(radius, theta_max, earth) - 0.5 * rho_max * rho_max;
    if !(radicand >= 0.0) {
        return Err(Error::domain(format!(
            "no equalizing planar altitude: radicand {radicand} < 0"
        )));
    }
    Ok(earth.earth_radius + radicand.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointgen::los_theta_max;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn literal_cdf_spherical(d: f64, rs: f64, t: f64, re: f64) -> f64 {
        (1.0 / (1.0 - t.cos())) * (1.0 - (re * re + rs * rs - d * d) / (2.0 * re * rs))
    }

    #[test]
    fn spherical_cdf_edges_and_median() {
        let e = EarthConstants::default();
        let rs = 6921.0;
        let t = los_theta_max(rs, &e).unwrap();
        let (lo, hi) = DistanceLaw::Spherical { radius: rs, theta_max: t, earth: e }.support();
        assert_relative_eq!(lo, 550.0, max_relative = 1e-14);
        assert_eq!(cdf_spherical(lo, rs, t, &e), 0.0);
        assert_relative_eq!(cdf_spherical(hi, rs, t, &e), 1.0, max_relative = 1e-14);
        // LoS cap: D^2 uniform on [h^2, R_s^2 - R_e^2], median sqrt(R_s h).
        let median = (rs * 550.0f64).sqrt();
        assert!((median - 1951.04).abs() < 0.01);
        assert_relative_eq!(cdf_spherical(median, rs, t, &e), 0.5, max_relative = 1e-12);
        assert_eq!(cdf_spherical(0.0, rs, t, &e), 0.0);
        assert_eq!(cdf_spherical(1e6, rs, t, &e), 1.0);
    }

    #[test]
    fn spherical_cdf_median_by_monte_carlo() {
        let e = EarthConstants::default();
        let rs = 6921.0;
        let t = los_theta_max(rs, &e).unwrap();
        let median = (rs * 550.0f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        // Uniform cap points by rejection from the sphere (independent of the inverse-CDF sampler).
        let mut below = 0usize;
        let mut total = 0usize;
        while total < n {
            let z: f64 = rng.random_range(-1.0..1.0);
            if z < t.cos() {
                continue;
            }
            total += 1;
            let d2 = e.earth_radius.powi(2) + rs * rs - 2.0 * e.earth_radius * rs * z;
            if d2 <= median * median {
                below += 1;
            }
        }
        let frac = below as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.002, "{frac}");
    }

    #[test]
    fn spherical_cdf_matches_literal_form() {
        let e = EarthConstants::default();
        let rs = 7500.0;
        let t = 0.3;
        let (lo, hi) = DistanceLaw::Spherical { radius: rs, theta_max: t, earth: e }.support();
        for k in 0..=20 {
            let d = lo + (hi - lo) * k as f64 / 20.0;
            let lit = literal_cdf_spherical(d, rs, t, e.earth_radius);
            assert!((cdf_spherical(d, rs, t, &e) - lit.clamp(0.0, 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn planar_cdf_examples() {
        let e = EarthConstants::default();
        let hp = e.earth_radius + 50.0;
        assert_eq!(cdf_planar(50.0, 100.0, hp, &e), 0.0);
        assert_relative_eq!(cdf_planar((2500.0f64 + 10_000.0).sqrt(), 100.0, hp, &e), 1.0, max_relative = 1e-12);
        assert_relative_eq!(cdf_planar((2500.0f64 + 5000.0).sqrt(), 100.0, hp, &e), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn planar_upper_support_is_the_disk_edge_distance() {
        let e = EarthConstants::default();
        let hp = e.earth_radius + 388.91;
        let rho = 2703.8;
        let (_, hi) = DistanceLaw::Planar { rho_max: rho, axis_height: hp, earth: e }.support();
        assert_relative_eq!(hi, crate::geom::user_distance_planar(rho, hp, &e), max_relative = 1e-14);
    }

    #[test]
    fn mean_sq_closed_forms() {
        let e = EarthConstants::default();
        let rs = 6921.0;
        let t = los_theta_max(rs, &e).unwrap();
        assert_relative_eq!(mean_sq_distance_spherical(rs, t, &e), 3_806_550.0, max_relative = 1e-12);
        assert_relative_eq!(mean_sq_distance_spherical(rs, 1e-9, &e), 550.0 * 550.0, max_relative = 1e-9);
        let hp = e.earth_radius + 388.91;
        assert_eq!(mean_sq_distance_planar(0.0, hp, &e), (hp - e.earth_radius).powi(2));
        assert_eq!(mean_sq_distance_planar(10.0, e.earth_radius, &e), 50.0);
        let m = mean_sq_distance_planar(2703.8, hp, &e);
        assert!((m - 3_806_550.0).abs() / 3_806_550.0 < 1e-4);
    }

    #[test]
    fn mean_sq_by_monte_carlo() {
        let e = EarthConstants::default();
        let rs = 6921.0;
        let t = los_theta_max(rs, &e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let mut acc = 0.0;
        let mut got = 0;
        while got < n {
            let z: f64 = rng.random_range(-1.0..1.0);
            if z < t.cos() {
                continue;
            }
            got += 1;
            acc += e.earth_radius.powi(2) + rs * rs - 2.0 * e.earth_radius * rs * z;
        }
        let mc = acc / n as f64;
        assert!((mc / 3_806_550.0 - 1.0).abs() < 0.005);
    }

    #[test]
    fn optimal_altitude_los_simplification() {
        let e = EarthConstants::default();
        for &(h, expect) in &[(550.0, 388.91), (20.0, 14.142)] {
            let rs = e.earth_radius + h;
            let t = los_theta_max(rs, &e).unwrap();
            let hopt = optimal_altitude(rs, t, rs * t.sin(), &e).unwrap();
            assert_relative_eq!(hopt - e.earth_radius, h / 2f64.sqrt(), max_relative = 1e-10);
            assert!((hopt - e.earth_radius - expect).abs() < 0.01);
        }
    }

    #[test]
    fn optimal_altitude_literal_formula() {
        let e = EarthConstants::default();
        let re = e.earth_radius;
        let (rs, t) = (7200.0f64, 0.25f64);
        let rho = rs * t.sin();
        let lit = re + (re * re - 0.5 * rho * rho - (1.0 + t.cos()) * rs * re + rs * rs).sqrt();
        assert_relative_eq!(optimal_altitude(rs, t, rho, &e).unwrap(), lit, max_relative = 1e-12);
    }

    #[test]
    fn optimal_altitude_rejects_negative_radicand() {
        let e = EarthConstants::default();
        let rs = 6921.0;
        assert!(optimal_altitude(rs, 0.1, 5000.0, &e).is_err());
    }

    #[test]
    fn sample_distance_edges() {
        let e = EarthConstants::default();
        let law = DistanceLaw::Spherical { radius: 6921.0, theta_max: 0.3, earth: e };
        let (lo, hi) = law.support();
        assert_eq!(sample_distance(&law, 0.0), lo);
        assert_relative_eq!(sample_distance(&law, 1.0 - 1e-15), hi, max_relative = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn law() -> impl Strategy<Value = DistanceLaw> {
            let e = EarthConstants::default();
            prop_oneof![
                (10.0..40_000.0f64, 0.001..1.0f64).prop_map(move |(h, frac)| {
                    let rs = e.earth_radius + h;
                    let t = los_theta_max(rs, &e).unwrap() * frac;
                    DistanceLaw::Spherical { radius: rs, theta_max: t, earth: e }
                }),
                (1.0..5000.0f64, 0.1..2000.0f64).prop_map(move |(rho, h)| DistanceLaw::Planar {
                    rho_max: rho,
                    axis_height: e.earth_radius + h,
                    earth: e,
                }),
            ]
        }

        /// Rounding floor for the CDF: `D^2` carries relative error of a few
        /// ulps of the offset, which the span then magnifies.
        fn cdf_tolerance(l: &DistanceLaw) -> f64 {
            let (a, b) = l.affine();
            1e-12 + 8.0 * f64::EPSILON * (a + b) / b
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(10_000))]
            #[test]
            fn cdf_is_a_cdf(l in law(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
                let (lo, hi) = l.support();
                prop_assert_eq!(l.cdf(lo), 0.0);
                prop_assert!((l.cdf(hi) - 1.0).abs() < cdf_tolerance(&l));
                let (x, y) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(l.cdf(lo + x * (hi - lo)) <= l.cdf(lo + y * (hi - lo)));
            }
        }

        proptest! {
            #[test]
            fn inverse_round_trip(l in law(), u in 0.0..1.0f64) {
                prop_assert!((l.cdf(sample_distance(&l, u)) - u).abs() < cdf_tolerance(&l));
            }

            #[test]
            fn optimal_altitude_equalizes_and_sits_in_interval(h in 10.0..40_000.0f64, frac in 0.01..1.0f64) {
                let e = EarthConstants::default();
                let rs = e.earth_radius + h;
                let t = los_theta_max(rs, &e).unwrap() * frac;
                let rho = rs * t.sin();
                if let Ok(hopt) = optimal_altitude(rs, t, rho, &e) {
                    let ms = mean_sq_distance_spherical(rs, t, &e);
                    let mp = mean_sq_distance_planar(rho, hopt, &e);
                    prop_assert!(((ms - mp) / ms).abs() < 1e-9);
                    prop_assert!(hopt > rs * t.cos() && hopt < rs);
                }
            }
        }
    }
}
