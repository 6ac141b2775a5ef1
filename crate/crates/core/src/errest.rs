//! Relative error of the planar approximation, estimated by paired Monte
//! Carlo over a sweep of planar altitudes (CSM), at the closed-form optimal
//! altitude only (JSAM), or fully in closed form for t2 (CAM).
//!
//! Every inner iteration draws from its own stream keyed by
//! `(seed, altitude tag, iteration)`, and all reductions run in index order,
//! so estimates are bit-identical for any rayon pool size.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{mean_sq_distance_planar, mean_sq_distance_spherical, optimal_altitude};
use crate::error::{Error, Result};
use crate::geom::one_minus_cos;
use crate::metrics::{t1_paired_transport, ChannelModel, MetricContext, MetricId};
use crate::pointgen::{generate_pair, DeploymentParams};
use crate::rng::RngSpec;

/// Share of excluded iterations above which an estimate is flagged.
pub const UNRELIABLE_EXCLUSION_SHARE: f64 = 0.01;

/// Altitude tag used by the single JSAM evaluation.
const JSAM_TAG: u64 = u64::MAX;

const PURPOSE_POINTS: u64 = 0;
const PURPOSE_SPHERICAL_FADING: u64 = 1;
const PURPOSE_PLANAR_FADING: u64 = 2;

pub const CSV_HEADER: &str = "seed,mode,metric,h_s_km,theta_max_rad,h_p_km,rel_err,n_in,n_out,excluded";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Monte Carlo at every altitude of the sweep.
    #[default]
    Csm,
    /// Monte Carlo at the closed-form optimal altitude only.
    Jsam,
    /// Closed forms only; t2 is the one metric that has them.
    Cam,
}

impl Mode {
    pub fn code(&self) -> &'static str {
        match self {
            Mode::Csm => "csm",
            Mode::Jsam => "jsam",
            Mode::Cam => "cam",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csm" => Ok(Mode::Csm),
            "jsam" => Ok(Mode::Jsam),
            "cam" => Ok(Mode::Cam),
            other => Err(Error::config(format!("unknown mode '{other}' (expected csm, jsam or cam)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    /// Sphere radius `R_s` from the Earth center (km).
    pub radius: f64,
    pub theta_max: f64,
    pub metric: MetricId,
    pub n_in: usize,
    pub n_out: usize,
    /// Platforms per deployment.
    pub n_points: usize,
    pub mode: Mode,
    pub ctx: MetricContext,
    pub seed: u64,
}

impl EstimationConfig {
    /// Defaults: `n_in = 1000`, `n_out = 50`, 20 platforms, CSM.
    pub fn new(radius: f64, theta_max: f64, metric: MetricId, seed: u64) -> Self {
        Self {
            radius,
            theta_max,
            metric,
            n_in: 1000,
            n_out: 50,
            n_points: 20,
            mode: Mode::Csm,
            ctx: MetricContext::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 {
            return Err(Error::config("n_in must be at least 1"));
        }
        if self.n_out == 0 {
            return Err(Error::config("n_out must be at least 1"));
        }
        if !(self.radius > self.ctx.earth.earth_radius) {
            return Err(Error::config(format!(
                "sphere radius {} must exceed the earth radius {}",
                self.radius, self.ctx.earth.earth_radius
            )));
        }
        // Checks theta_max and n_points through the same validation as generation.
        self.params_at(self.radius - 0.5 * self.radius * one_minus_cos(self.theta_max))?;
        self.metric_context()?.check(self.metric)
    }

    /// Metric context with the altitude preset filled in when a system
    /// metric is requested and no channel was given.
    pub fn metric_context(&self) -> Result<MetricContext> {
        let mut ctx = self.ctx;
        if self.metric.is_system() && ctx.channel.is_none() {
            let preset = ChannelModel::preset_for_altitude(self.altitude_km())?;
            ctx.channel = Some(ChannelModel::preset(preset));
        }
        Ok(ctx)
    }

    /// Deployment altitude `h_s` above ground (km).
    pub fn altitude_km(&self) -> f64 {
        self.radius - self.ctx.earth.earth_radius
    }

    pub fn rho_max(&self) -> f64 {
        self.radius * self.theta_max.sin()
    }

    fn params_at(&self, axis_height: f64) -> Result<DeploymentParams> {
        DeploymentParams::new(self.radius, self.theta_max, axis_height, self.n_points)
    }

    /// Swept planar altitudes (from the Earth center) and their spacing.
    pub fn altitude_grid(&self) -> (Vec<f64>, f64) {
        let depth = self.radius * one_minus_cos(self.theta_max);
        let lower = self.radius - depth;
        let step = depth / (self.n_out + 1) as f64;
        ((1..=self.n_out).map(|k| lower + k as f64 * step).collect(), step)
    }

    fn provenance(&self, mode: Mode) -> Provenance {
        Provenance {
            seed: self.seed,
            mode,
            metric: self.metric,
            radius: self.radius,
            theta_max: self.theta_max,
            earth_radius: self.ctx.earth.earth_radius,
            n_in: self.n_in,
            n_out: self.n_out,
            n_points: self.n_points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub mode: Mode,
    pub metric: MetricId,
    pub radius: f64,
    pub theta_max: f64,
    pub earth_radius: f64,
    pub n_in: usize,
    pub n_out: usize,
    pub n_points: usize,
}

/// Mean relative error at one planar altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltitudePoint {
    /// Planar altitude from the Earth center (km).
    pub h_p: f64,
    pub rel_err: f64,
    /// Standard error of `rel_err`; infinite with fewer than two samples.
    pub std_err: f64,
    pub kept: usize,
    pub excluded: usize,
}

impl AltitudePoint {
    fn from_samples(h_p: f64, samples: &[Option<f64>]) -> Self {
        let kept: Vec<f64> = samples.iter().flatten().copied().collect();
        let excluded = samples.len() - kept.len();
        let n = kept.len();
        let (rel_err, std_err) = match n {
            0 => (f64::NAN, f64::INFINITY),
            1 => (kept[0], f64::INFINITY),
            _ => {
                let mean = kept.iter().sum::<f64>() / n as f64;
                let var = kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (mean, (var / n as f64).sqrt())
            }
        };
        Self { h_p, rel_err, std_err, kept: n, excluded }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub e_min: f64,
    /// Planar altitude from the Earth center achieving `e_min` (km).
    pub h_opt: f64,
    pub per_altitude: Vec<AltitudePoint>,
    pub provenance: Provenance,
    /// More than 1% of the iterations at some altitude had `g_s = 0`.
    pub unreliable: bool,
}

impl ErrorEstimate {
    fn from_points(per_altitude: Vec<AltitudePoint>, provenance: Provenance, n_in: usize) -> Result<Self> {
        let best = per_altitude
            .iter()
            .filter(|p| p.kept > 0)
            .fold(None::<&AltitudePoint>, |best, p| match best {
                Some(b) if b.rel_err <= p.rel_err => Some(b),
                _ => Some(p),
            })
            .ok_or_else(|| {
                Error::InsufficientData("every iteration was excluded by the division guard".into())
            })?;
        let unreliable = per_altitude
            .iter()
            .any(|p| p.excluded as f64 > UNRELIABLE_EXCLUSION_SHARE * n_in as f64);
        Ok(Self {
            e_min: best.rel_err,
            h_opt: best.h_p,
            per_altitude: per_altitude.clone(),
            provenance,
            unreliable,
        })
    }

    /// Standard error at the minimizing altitude.
    pub fn std_err(&self) -> f64 {
        self.per_altitude
            .iter()
            .find(|p| p.h_p == self.h_opt)
            .map_or(f64::INFINITY, |p| p.std_err)
    }

    /// Minimizing altitude above ground (km).
    pub fn h_opt_km(&self) -> f64 {
        self.h_opt - self.provenance.earth_radius
    }

    /// One [`CSV_HEADER`] row per swept altitude. Altitudes are above ground.
    pub fn write_csv_rows<W: Write>(&self, mut out: W) -> io::Result<()> {
        let p = &self.provenance;
        for a in &self.per_altitude {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                p.seed,
                p.mode,
                p.metric,
                p.radius - p.earth_radius,
                p.theta_max,
                a.h_p - p.earth_radius,
                a.rel_err,
                p.n_in,
                p.n_out,
                a.excluded
            )?;
        }
        Ok(())
    }
}

/// One inner iteration: `None` when the spherical value is zero.
fn iteration_error(
    params: &DeploymentParams,
    metric: MetricId,
    ctx: &MetricContext,
    stream: RngSpec,
) -> Result<Option<f64>> {
    let pair = generate_pair(params, &stream.derive(&[PURPOSE_POINTS]));
    if metric.is_paired() {
        // The transport metric is already a discrepancy between the sets.
        return Ok(Some(t1_paired_transport(&pair, ctx.t1_normalization, &ctx.earth)));
    }
    let mut rs = stream.derive(&[PURPOSE_SPHERICAL_FADING]).rng();
    let mut rp = stream.derive(&[PURPOSE_PLANAR_FADING]).rng();
    let g_s = ctx.evaluate(metric, &pair.spherical_cartesian(), &mut rs)?;
    let g_p = ctx.evaluate(metric, &pair.planar_cartesian(), &mut rp)?;
    if g_s == 0.0 {
        return Ok(None);
    }
    Ok(Some((g_s - g_p).abs() / g_s))
}

fn iteration_stream(seed: u64, altitude_tag: u64, iteration: u64) -> RngSpec {
    RngSpec::new(seed, 0).derive(&[altitude_tag, iteration])
}

/// Mean relative error at planar altitude `h_p` over `cfg.n_in` fresh
/// paired deployments. `altitude_tag` keys the random streams.
pub fn relative_error_at(h_p: f64, cfg: &EstimationConfig, altitude_tag: u64) -> Result<AltitudePoint> {
    cfg.validate()?;
    let params = cfg.params_at(h_p)?;
    let ctx = cfg.metric_context()?;
    let samples = (0..cfg.n_in as u64)
        .into_par_iter()
        .map(|i| iteration_error(&params, cfg.metric, &ctx, iteration_stream(cfg.seed, altitude_tag, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AltitudePoint::from_samples(h_p, &samples))
}

/// Full altitude sweep. Records itself as CSM regardless of `cfg.mode`.
pub fn estimate_csm(cfg: &EstimationConfig) -> Result<ErrorEstimate> {
    cfg.validate()?;
    let ctx = cfg.metric_context()?;
    let (grid, _) = cfg.altitude_grid();
    let params = grid.iter().map(|&h| cfg.params_at(h)).collect::<Result<Vec<_>>>()?;
    let n_in = cfg.n_in;
    // Flatten (altitude, iteration) so short sweeps still fill the pool.
    let samples = (0..grid.len() * n_in)
        .into_par_iter()
        .map(|j| {
            let (k, i) = (j / n_in, j % n_in);
            iteration_error(&params[k], cfg.metric, &ctx, iteration_stream(cfg.seed, k as u64, i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let per_altitude = grid
        .iter()
        .zip(samples.chunks(n_in))
        .map(|(&h, s)| AltitudePoint::from_samples(h, s))
        .collect();
    ErrorEstimate::from_points(per_altitude, cfg.provenance(Mode::Csm), n_in)
}

/// Closed-form optimal altitude from the Earth center, as a config error
/// when it does not exist.
pub fn jsam_altitude(cfg: &EstimationConfig) -> Result<f64> {
    optimal_altitude(cfg.radius, cfg.theta_max, cfg.rho_max(), &cfg.ctx.earth).map_err(|e| match e {
        Error::Domain(msg) => Error::Config(msg),
        other => other,
    })
}

/// Monte Carlo at the closed-form optimal altitude only.
pub fn estimate_jsam(cfg: &EstimationConfig) -> Result<ErrorEstimate> {
    cfg.validate()?;
    let h = jsam_altitude(cfg)?;
    let point = relative_error_at(h, cfg, JSAM_TAG)?;
    ErrorEstimate::from_points(vec![point], cfg.provenance(Mode::Jsam), cfg.n_in)
}

/// Closed-form sweep of `|E g_s - E g_p| / E g_s`, available for t2 only.
pub fn estimate_cam(cfg: &EstimationConfig) -> Result<ErrorEstimate> {
    if cfg.metric != MetricId::T2AvgEnergy {
        return Err(Error::config(format!(
            "closed-form analysis is only available for t2, not {}",
            cfg.metric
        )));
    }
    cfg.validate()?;
    let earth = &cfg.ctx.earth;
    let e_s = mean_sq_distance_spherical(cfg.radius, cfg.theta_max, earth);
    let rho_max = cfg.rho_max();
    let (grid, _) = cfg.altitude_grid();
    let per_altitude = grid
        .into_iter()
        .map(|h| AltitudePoint {
            h_p: h,
            rel_err: (e_s - mean_sq_distance_planar(rho_max, h, earth)).abs() / e_s,
            std_err: 0.0,
            kept: 1,
            excluded: 0,
        })
        .collect();
    ErrorEstimate::from_points(per_altitude, cfg.provenance(Mode::Cam), 1)
}

/// Dispatches on `cfg.mode`.
pub fn estimate(cfg: &EstimationConfig) -> Result<ErrorEstimate> {
    match cfg.mode {
        Mode::Csm => estimate_csm(cfg),
        Mode::Jsam => estimate_jsam(cfg),
        Mode::Cam => estimate_cam(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::EarthConstants;
    use crate::metrics::{ChannelModel, Fading, LosModel};
    use crate::pointgen::los_theta_max;
    use approx::assert_relative_eq;

    fn leo_cfg(h: f64, metric: MetricId) -> EstimationConfig {
        let e = EarthConstants::default();
        let rs = e.earth_radius + h;
        EstimationConfig::new(rs, los_theta_max(rs, &e).unwrap(), metric, 7)
    }

    fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
    }

    #[test]
    fn grid_matches_step_rule() {
        let cfg = EstimationConfig { n_out: 4, ..leo_cfg(550.0, MetricId::T2AvgEnergy) };
        let (grid, dh) = cfg.altitude_grid();
        let lower = cfg.radius * cfg.theta_max.cos();
        assert_relative_eq!(dh, (cfg.radius - lower) / 5.0, max_relative = 1e-9);
        assert_eq!(grid.len(), 4);
        for (k, h) in grid.iter().enumerate() {
            assert_relative_eq!(*h, lower + (k + 1) as f64 * dh, max_relative = 1e-12);
            assert!(*h > lower && *h < cfg.radius);
        }
    }

    #[test]
    fn single_altitude_sweep() {
        let cfg = EstimationConfig { n_out: 1, n_in: 50, ..leo_cfg(550.0, MetricId::T2AvgEnergy) };
        let est = estimate_csm(&cfg).unwrap();
        assert_eq!(est.per_altitude.len(), 1);
        assert_eq!(est.h_opt, cfg.altitude_grid().0[0]);
        assert_eq!(est.e_min, est.per_altitude[0].rel_err);
    }

    #[test]
    fn e_min_is_the_sweep_minimum() {
        for metric in [MetricId::T1PairedTransport, MetricId::T2AvgEnergy, MetricId::T3ContactEnergy] {
            let cfg = EstimationConfig { n_out: 12, n_in: 40, ..leo_cfg(550.0, metric) };
            let est = estimate_csm(&cfg).unwrap();
            assert!(est.e_min >= 0.0);
            assert!(est.per_altitude.iter().all(|p| est.e_min <= p.rel_err));
            assert!(est.per_altitude.iter().any(|p| p.h_p == est.h_opt && p.rel_err == est.e_min));
        }
    }

    #[test]
    fn degenerate_cap_contact_error() {
        let e = EarthConstants::default();
        let rs = e.earth_radius + 550.0;
        let theta = 1e-6;
        let mut cfg = EstimationConfig::new(rs, theta, MetricId::T3ContactEnergy, 1);
        cfg.n_in = 20;
        cfg.n_out = 3;
        let (grid, _) = cfg.altitude_grid();
        for (k, &h) in grid.iter().enumerate() {
            let got = relative_error_at(h, &cfg, k as u64).unwrap().rel_err;
            let axis = ((rs - e.earth_radius).powi(2) - (h - e.earth_radius).powi(2)).abs() / (rs - e.earth_radius).powi(2);
            assert!((got - axis).abs() < 1e-9, "{got} vs {axis}");
        }
    }

    #[test]
    fn deterministic_across_pools() {
        let cfg = EstimationConfig { n_out: 6, n_in: 30, ..leo_cfg(550.0, MetricId::T3ContactEnergy) };
        let a = in_pool(1, || estimate_csm(&cfg).unwrap());
        let b = in_pool(4, || estimate_csm(&cfg).unwrap());
        let c = in_pool(3, || estimate_csm(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, c);
        let sys = EstimationConfig { n_out: 3, n_in: 8, ..leo_cfg(550.0, MetricId::S3AvgRate) };
        assert_eq!(in_pool(1, || estimate_csm(&sys).unwrap()), in_pool(5, || estimate_csm(&sys).unwrap()));
    }

    #[test]
    fn t2_minimizer_near_closed_form() {
        let cfg = EstimationConfig { n_in: 500, ..leo_cfg(550.0, MetricId::T2AvgEnergy) };
        let est = estimate_csm(&cfg).unwrap();
        let (_, dh) = cfg.altitude_grid();
        let expect = cfg.ctx.earth.earth_radius + 550.0 / 2f64.sqrt();
        assert!((est.h_opt - expect).abs() <= dh, "{} vs {}", est.h_opt, expect);
    }

    #[test]
    fn jsam_close_to_csm_and_small_for_hap() {
        let cfg = EstimationConfig { n_in: 2000, ..leo_cfg(550.0, MetricId::T2AvgEnergy) };
        let csm = estimate_csm(&cfg).unwrap();
        let jsam = estimate_jsam(&cfg).unwrap();
        assert_eq!(jsam.per_altitude.len(), 1);
        assert!(jsam.e_min <= 2.0 * csm.e_min, "{} vs {}", jsam.e_min, csm.e_min);
        assert_relative_eq!(jsam.h_opt_km(), 550.0 / 2f64.sqrt(), max_relative = 1e-9);

        let hap = EstimationConfig { n_in: 2000, ..leo_cfg(20.0, MetricId::T2AvgEnergy) };
        assert!(estimate_jsam(&hap).unwrap().e_min < 1e-3);
    }

    #[test]
    fn single_iteration_is_valid() {
        let cfg = EstimationConfig { n_in: 1, ..leo_cfg(550.0, MetricId::T2AvgEnergy) };
        let est = estimate_jsam(&cfg).unwrap();
        assert_eq!(est.provenance.n_in, 1);
        assert!(est.e_min.is_finite() && est.std_err().is_infinite());
    }

    #[test]
    fn cam_is_zero_at_closed_form_altitude() {
        let cfg = EstimationConfig { n_out: 50, ..leo_cfg(550.0, MetricId::T2AvgEnergy) };
        let est = estimate_cam(&cfg).unwrap();
        let (_, dh) = cfg.altitude_grid();
        let h = jsam_altitude(&cfg).unwrap();
        assert!((est.h_opt - h).abs() <= dh);
        assert!(estimate_cam(&EstimationConfig { metric: MetricId::T3ContactEnergy, ..cfg }).is_err());
    }

    #[test]
    fn division_guard_counts_exclusions() {
        // Infinite threshold forces every coverage value to zero.
        let channel = ChannelModel {
            sinr_threshold_db: f64::INFINITY,
            fading_los: Fading::Unit,
            fading_nlos: Fading::Unit,
            los_model: LosModel::Always,
            ..ChannelModel::aerial_to_ground()
        };
        let mut cfg = EstimationConfig { n_out: 2, n_in: 10, ..leo_cfg(550.0, MetricId::S2Coverage) };
        cfg.ctx.channel = Some(channel);
        let err = estimate_csm(&cfg).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        let point = relative_error_at(cfg.altitude_grid().0[0], &cfg, 0).unwrap();
        assert_eq!(point.excluded, 10);
    }

    #[test]
    fn system_metrics_pick_altitude_preset() {
        let cfg = leo_cfg(550.0, MetricId::S1AvgSinr);
        assert!(cfg.metric_context().unwrap().channel.is_some());
        assert!(leo_cfg(5000.0, MetricId::S1AvgSinr).validate().is_err());
        assert!(leo_cfg(5000.0, MetricId::T2AvgEnergy).validate().is_ok());
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(EstimationConfig { n_in: 0, ..leo_cfg(550.0, MetricId::T2AvgEnergy) }.validate().is_err());
        assert!(EstimationConfig { n_out: 0, ..leo_cfg(550.0, MetricId::T2AvgEnergy) }.validate().is_err());
        assert!(EstimationConfig { n_points: 0, ..leo_cfg(550.0, MetricId::T2AvgEnergy) }.validate().is_err());
    }

    #[test]
    fn csv_rows_are_long_format() {
        let cfg = EstimationConfig { n_out: 3, n_in: 5, ..leo_cfg(550.0, MetricId::T2AvgEnergy) };
        let est = estimate_csm(&cfg).unwrap();
        let mut buf = Vec::new();
        est.write_csv_rows(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 3);
        let cols = CSV_HEADER.split(',').count();
        for r in rows {
            assert_eq!(r.split(',').count(), cols);
            assert!(r.starts_with("7,csm,t2,"));
        }
    }
}
