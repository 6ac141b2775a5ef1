//! Paired generation of a spherical-cap BPP and its planar counterpart.
//!
//! Both processes are driven by the same uniform pair `(u, v)` per point:
//! `u` sets the polar angle on the cap and the horizontal radius on the
//! disk through their area-preserving inverse CDFs, `v` sets the common
//! azimuth. This is what makes the two processes homogeneous and
//! point-by-point comparable.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{one_minus_cos, CartesianPoint, EarthConstants, PlanarPoint, SphericalPoint};
use crate::regions;
use crate::rng::RngSpec;
use crate::stats::{self, ChiSquareResult};

/// Point counts above which generation is spread over the rayon pool.
const PARALLEL_THRESHOLD: usize = 4096;

/// Parameters of a paired deployment.
///
/// `rho_max` is not free: it is tied to the cap as `R_s sin(theta_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentParams {
    radius: f64,
    theta_max: f64,
    rho_max: f64,
    axis_height: f64,
    n_points: usize,
}

impl DeploymentParams {
    pub fn new(radius: f64, theta_max: f64, axis_height: f64, n_points: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain(format!("sphere radius must be positive, got {radius}")));
        }
        if !(theta_max > 0.0 && theta_max <= PI / 2.0) {
            return Err(Error::domain(format!(
                "theta_max must lie in (0, pi/2], got {theta_max}"
            )));
        }
        let lower = radius * theta_max.cos();
        if !(axis_height > lower && axis_height < radius) {
            return Err(Error::domain(format!(
                "planar altitude {axis_height} outside ({lower}, {radius})"
            )));
        }
        if n_points == 0 {
            return Err(Error::domain("a deployment needs at least one point"));
        }
        Ok(Self {
            radius,
            theta_max,
            rho_max: radius * theta_max.sin(),
            axis_height,
            n_points,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn axis_height(&self) -> f64 {
        self.axis_height
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Same cap, different planar altitude.
    pub fn with_axis_height(&self, axis_height: f64) -> Result<Self> {
        Self::new(self.radius, self.theta_max, axis_height, self.n_points)
    }

    pub fn with_n_points(&self, n_points: usize) -> Result<Self> {
        Self::new(self.radius, self.theta_max, self.axis_height, n_points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDeployment {
    pub params: DeploymentParams,
    pub uniforms: Vec<(f64, f64)>,
    pub spherical: Vec<SphericalPoint>,
    pub planar: Vec<PlanarPoint>,
}

impl PairedDeployment {
    pub fn len(&self) -> usize {
        self.uniforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uniforms.is_empty()
    }

    pub fn spherical_cartesian(&self) -> Vec<CartesianPoint> {
        self.spherical.iter().map(SphericalPoint::to_cartesian).collect()
    }

    pub fn planar_cartesian(&self) -> Vec<CartesianPoint> {
        self.planar.iter().map(PlanarPoint::to_cartesian).collect()
    }

    /// Writes one row per point with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,u,v,theta_s,phi,rho_p,x_s,y_s,z_s,x_p,y_p,z_p")?;
        for (n, (((u, v), s), p)) in self
            .uniforms
            .iter()
            .zip(&self.spherical)
            .zip(&self.planar)
            .enumerate()
        {
            let cs = s.to_cartesian();
            let cp = p.to_cartesian();
            writeln!(
                out,
                "{n},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                u, v, s.polar, s.azimuth, p.horizontal_radius, cs.x, cs.y, cs.z, cp.x, cp.y, cp.z
            )?;
        }
        Ok(())
    }
}

fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::domain(format!("uniform draw {u} outside [0, 1]")))
    }
}

/// Polar angle `arccos(1 - u (1 - cos theta_max))`, area-uniform on the cap.
///
/// Evaluated as `2 asin(sqrt(u (1 - cos theta_max) / 2))`, the same
/// quantity in a form that stays accurate for very flat caps.
pub fn sample_polar(u: f64, theta_max: f64) -> Result<f64> {
    check_unit(u)?;
    if !(theta_max > 0.0 && theta_max <= PI / 2.0) {
        return Err(Error::domain(format!(
            "theta_max must lie in (0, pi/2], got {theta_max}"
        )));
    }
    Ok(polar_unchecked(u, theta_max))
}

fn polar_unchecked(u: f64, theta_max: f64) -> f64 {
    let x = u * one_minus_cos(theta_max);
    (2.0 * (0.5 * x).sqrt().min(1.0).asin()).min(theta_max)
}

/// Horizontal radius `sqrt(u) rho_max`, area-uniform on the disk.
pub fn sample_horizontal_radius(u: f64, rho_max: f64) -> Result<f64> {
    check_unit(u)?;
    Ok(u.sqrt() * rho_max)
}

/// Builds the paired point sets from explicit uniforms.
pub fn pair_from_uniforms(params: &DeploymentParams, uniforms: Vec<(f64, f64)>) -> Result<PairedDeployment> {
    if uniforms.len() != params.n_points {
        return Err(Error::domain(format!(
            "expected {} uniform pairs, got {}",
            params.n_points,
            uniforms.len()
        )));
    }
    for &(u, v) in &uniforms {
        check_unit(u)?;
        check_unit(v)?;
    }
    Ok(build(params, uniforms))
}

fn build(params: &DeploymentParams, uniforms: Vec<(f64, f64)>) -> PairedDeployment {
    let make = |&(u, v): &(f64, f64)| {
        let azimuth = 2.0 * PI * v;
        let s = SphericalPoint {
            radius: params.radius,
            azimuth,
            polar: polar_unchecked(u, params.theta_max),
        };
        let p = PlanarPoint {
            horizontal_radius: u.sqrt() * params.rho_max,
            azimuth,
            axis_height: params.axis_height,
        };
        (s, p)
    };
    let (spherical, planar): (Vec<_>, Vec<_>) = if uniforms.len() >= PARALLEL_THRESHOLD {
        uniforms.par_iter().map(make).unzip()
    } else {
        uniforms.iter().map(make).unzip()
    };
    PairedDeployment {
        params: *params,
        uniforms,
        spherical,
        planar,
    }
}

/// Draws the uniforms for `params.n_points()` points from `rng` and builds
/// both processes. Output is identical for any rayon pool size.
pub fn generate_pair(params: &DeploymentParams, rng: &RngSpec) -> PairedDeployment {
    let n = params.n_points;
    let uniforms: Vec<(f64, f64)> = if n >= PARALLEL_THRESHOLD {
        (0..n as u64).into_par_iter().map(|i| rng.uniform_pair(i)).collect()
    } else {
        // One sequential pass over the keystream; identical to random access.
        use rand::Rng;
        let mut r = rng.rng();
        (0..n).map(|_| (r.random::<f64>(), r.random::<f64>())).collect()
    };
    build(params, uniforms)
}

/// Polar half-angle of the cap visible above the user's horizon.
pub fn los_theta_max(radius: f64, earth: &EarthConstants) -> Result<f64> {
    if !(radius > earth.earth_radius) {
        return Err(Error::domain(format!(
            "sphere radius {radius} must exceed the earth radius {}",
            earth.earth_radius
        )));
    }
    Ok((earth.earth_radius / radius).acos())
}

/// Splits `cells` into `bands x sectors` with `bands` the largest divisor
/// not above `sqrt(cells)`.
fn factor_cells(cells: usize) -> Result<(usize, usize)> {
    if cells < 2 {
        return Err(Error::InsufficientData(format!(
            "homogeneity test needs at least 2 cells, got {cells}"
        )));
    }
    let mut bands = (cells as f64).sqrt().floor() as usize;
    while cells % bands != 0 {
        bands -= 1;
    }
    Ok((bands, cells / bands))
}

fn cell_index(radial_fraction: f64, azimuth: f64, bands: usize, sectors: usize) -> usize {
    let b = ((radial_fraction * bands as f64) as usize).min(bands - 1);
    let az = azimuth.rem_euclid(2.0 * PI) / (2.0 * PI);
    let s = ((az * sectors as f64) as usize).min(sectors - 1);
    b * sectors + s
}

fn chi_square_cells<I>(fractions: I, cells: usize) -> Result<ChiSquareResult>
where
    I: Iterator<Item = (f64, f64)>,
{
    let (bands, sectors) = factor_cells(cells)?;
    let mut counts = vec![0u64; cells];
    for (frac, az) in fractions {
        counts[cell_index(frac, az, bands, sectors)] += 1;
    }
    stats::chi_square_uniform(&counts)
}

/// Pearson chi-square of cap points over equal-area cells: polar bands with
/// edges at `cos(theta_k) = 1 - (k/K)(1 - cos theta_max)` crossed with equal
/// azimuth sectors.
pub fn cap_homogeneity(points: &[SphericalPoint], theta_max: f64, cells: usize) -> Result<ChiSquareResult> {
    let denom = one_minus_cos(theta_max);
    chi_square_cells(
        points.iter().map(|p| (one_minus_cos(p.polar) / denom, p.azimuth)),
        cells,
    )
}

/// Pearson chi-square of disk points over equal-area annuli (edges at
/// `rho_max sqrt(k/K)`) crossed with equal azimuth sectors.
pub fn disk_homogeneity(points: &[PlanarPoint], rho_max: f64, cells: usize) -> Result<ChiSquareResult> {
    let denom = rho_max * rho_max;
    chi_square_cells(
        points
            .iter()
            .map(|p| (p.horizontal_radius * p.horizontal_radius / denom, p.azimuth)),
        cells,
    )
}

/// Largest paired Cartesian displacement between the two processes for a
/// cap of fixed area `area` on a sphere of radius `radius`, after moving
/// each surface's central point (cap pole, disk center) to the origin.
pub fn similarity_displacement(area: f64, radius: f64, n_points: usize, rng: &RngSpec) -> Result<f64> {
    let theta_max = regions::theta_max_from_area(area, radius)?;
    let axis_height = 0.5 * radius * (1.0 + theta_max.cos());
    let params = DeploymentParams::new(radius, theta_max, axis_height, n_points)?;
    Ok(max_centered_displacement(&generate_pair(&params, rng)))
}

pub fn max_centered_displacement(pair: &PairedDeployment) -> f64 {
    let radius = pair.params.radius;
    pair.spherical
        .iter()
        .zip(&pair.planar)
        .map(|(s, p)| {
            let (sin_t, _) = s.polar.sin_cos();
            let (sin_a, cos_a) = s.azimuth.sin_cos();
            // Pole-relative z offset -R_s (1 - cos theta), computed without cancellation.
            let xs = CartesianPoint::new(
                radius * sin_t * cos_a,
                radius * sin_t * sin_a,
                -radius * one_minus_cos(s.polar),
            );
            let (sin_b, cos_b) = p.azimuth.sin_cos();
            let xp = CartesianPoint::new(p.horizontal_radius * cos_b, p.horizontal_radius * sin_b, 0.0);
            xs.distance(&xp)
        })
        .fold(0.0, f64::max)
}
