//! Experiment families. Each runner resolves and checks every grid cell
//! before computing anything, then evaluates cells in grid order; the
//! Monte Carlo inside each cell is parallel but index-ordered, so output is
//! byte-identical at any worker count.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use capmap_core::distributions::mean_sq_distance_spherical;
use capmap_core::errest::{self, EstimationConfig, ErrorEstimate, Mode, CSV_HEADER};
use capmap_core::geom::{user_distance_planar, user_distance_spherical, cap_area};
use capmap_core::metrics::MetricContext;
use capmap_core::pointgen::{
    cap_homogeneity, disk_homogeneity, generate_pair, los_theta_max, similarity_displacement, DeploymentParams,
};
use capmap_core::regions::{beam_from_theta_max, theta_max_from_area, theta_max_from_beam, RegionSpec};
use capmap_core::stats::ks_statistic;
use capmap_core::distributions::{cdf_planar, cdf_spherical};
use capmap_core::{EarthConstants, MetricId, RngSpec, SphericalPoint};
use rand::Rng;

use crate::config::Config;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    OptAlt,
    ErrAlt,
    HeatmapBeam,
    HeatmapArea,
    CaseStudy,
    Validate,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::OptAlt,
        Experiment::ErrAlt,
        Experiment::HeatmapBeam,
        Experiment::HeatmapArea,
        Experiment::CaseStudy,
        Experiment::Validate,
    ];

    /// File stem of the experiment's outputs.
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::OptAlt => "opt_alt",
            Experiment::ErrAlt => "err_alt",
            Experiment::HeatmapBeam => "heatmap_beam",
            Experiment::HeatmapArea => "heatmap_area",
            Experiment::CaseStudy => "case_study",
            Experiment::Validate => "validate",
        }
    }

    fn tag(&self) -> u64 {
        *self as u64 + 1
    }

    pub fn run(&self, cfg: &Config) -> Result<Outcome> {
        let tables = match self {
            Experiment::OptAlt => run_opt_alt_sweep(cfg)?,
            Experiment::ErrAlt => run_err_vs_altitude(cfg)?,
            Experiment::HeatmapBeam => run_heatmap(cfg, RegionKind::Beam)?,
            Experiment::HeatmapArea => run_heatmap(cfg, RegionKind::Area)?,
            Experiment::CaseStudy => run_case_study(cfg)?,
            Experiment::Validate => return run_validate(cfg),
        };
        Ok(Outcome { tables, failed_checks: 0 })
    }
}

/// Tables of one run, plus the number of failed checks (validation only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub failed_checks: usize,
}

/// One CSV artifact held in memory until the run succeeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
}

impl Table {
    fn new(name: &str, header: &str) -> Self {
        Self { name: name.to_string(), header: header.to_string(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(&self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.to_csv()).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    }

    /// Values of column `col` in every row.
    pub fn column(&self, col: &str) -> Vec<String> {
        let idx = self
            .header
            .split(',')
            .position(|h| h == col)
            .unwrap_or_else(|| panic!("no column {col} in {}", self.name));
        self.rows.iter().map(|r| r.split(',').nth(idx).unwrap_or_default().to_string()).collect()
    }
}

/// Seed of one grid cell, so neighboring cells never share uniforms.
fn cell_seed(master: u64, experiment: Experiment, cell: &[u64]) -> u64 {
    let mut tags = vec![experiment.tag()];
    tags.extend_from_slice(cell);
    RngSpec::new(master, 0).derive(&tags).stream_id
}

fn estimation_config(
    cfg: &Config,
    earth: EarthConstants,
    radius: f64,
    theta_max: f64,
    metric: MetricId,
    mode: Mode,
    seed: u64,
) -> Result<EstimationConfig> {
    let est = &cfg.estimation;
    let channel = if metric.is_system() {
        Some(cfg.channel.for_altitude(radius - earth.earth_radius)?)
    } else {
        None
    };
    let out = EstimationConfig {
        radius,
        theta_max,
        metric,
        n_in: est.n_in,
        n_out: est.n_out,
        n_points: cfg.deployment.n_points,
        mode,
        ctx: MetricContext { earth, channel, mc_draws: est.mc_draws, t1_normalization: est.t1_normalization },
        seed,
    };
    out.validate()?;
    if mode == Mode::Cam && metric != MetricId::T2AvgEnergy {
        return Err(CliError::Config(format!("closed-form mode supports t2 only, not {metric}")));
    }
    if mode == Mode::Jsam {
        errest::jsam_altitude(&out)?;
    }
    Ok(out)
}

fn los_radius(earth: &EarthConstants, h_s: f64) -> Result<(f64, f64)> {
    let radius = earth.earth_radius + h_s;
    Ok((radius, los_theta_max(radius, earth)?))
}

/// Summary of one cell. A cell whose every iteration hit the division
/// guard yields NaN values flagged unreliable instead of aborting the run.
struct CellResult {
    estimate: Option<ErrorEstimate>,
    h_opt_km: f64,
    e_min: f64,
    std_err: f64,
    excluded: usize,
    unreliable: bool,
}

fn estimate_cell(ec: &EstimationConfig, estimate: fn(&EstimationConfig) -> capmap_core::Result<ErrorEstimate>) -> Result<CellResult> {
    match estimate(ec) {
        Ok(est) => Ok(CellResult {
            h_opt_km: est.h_opt_km(),
            e_min: est.e_min,
            std_err: est.std_err(),
            excluded: est.per_altitude.iter().map(|p| p.excluded).sum(),
            unreliable: est.unreliable,
            estimate: Some(est),
        }),
        Err(capmap_core::Error::InsufficientData(_)) => Ok(CellResult {
            estimate: None,
            h_opt_km: f64::NAN,
            e_min: f64::NAN,
            std_err: f64::NAN,
            excluded: ec.n_in * if ec.mode == Mode::Csm { ec.n_out } else { 1 },
            unreliable: true,
        }),
        Err(e) => Err(e.into()),
    }
}

fn push_curves(table: &mut Table, est: &ErrorEstimate) {
    let mut buf = Vec::new();
    est.write_csv_rows(&mut buf).expect("writing to memory");
    table.rows.extend(String::from_utf8(buf).expect("ascii rows").lines().map(str::to_string));
}

pub fn run_opt_alt_sweep(cfg: &Config) -> Result<Vec<Table>> {
    let earth = cfg.earth()?;
    let spec = &cfg.opt_alt;
    let mut cells = Vec::new();
    for (i, &h_s) in spec.altitudes_km.iter().enumerate() {
        let (radius, theta) = los_radius(&earth, h_s)?;
        for (j, &metric) in spec.metrics.iter().enumerate() {
            let seed = cell_seed(cfg.seed, Experiment::OptAlt, &[i as u64, j as u64]);
            let ec = estimation_config(cfg, earth, radius, theta, metric, Mode::Csm, seed)?;
            let closed_form = errest::jsam_altitude(&ec)?;
            cells.push((h_s, ec, closed_form));
        }
    }
    let mut summary = Table::new(
        "opt_alt",
        "h_s_km,metric,h_opt_km,closed_form_km,ratio,e_min,std_err,unreliable,delta_h_km,n_in,n_out,seed",
    );
    let mut curves = Table::new("opt_alt_curves", CSV_HEADER);
    for (h_s, ec, closed_form) in cells {
        let cell = estimate_cell(&ec, errest::estimate_csm)?;
        let closed_form_km = closed_form - earth.earth_radius;
        let (_, dh) = ec.altitude_grid();
        summary.rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            h_s,
            ec.metric,
            cell.h_opt_km,
            closed_form_km,
            cell.h_opt_km / closed_form_km,
            cell.e_min,
            cell.std_err,
            cell.unreliable,
            dh,
            ec.n_in,
            ec.n_out,
            ec.seed
        ));
        if let Some(est) = &cell.estimate {
            push_curves(&mut curves, est);
        }
    }
    Ok(vec![summary, curves])
}

pub fn run_err_vs_altitude(cfg: &Config) -> Result<Vec<Table>> {
    let earth = cfg.earth()?;
    let spec = &cfg.err_alt;
    let mode = cfg.estimation.mode;
    let mut cells = Vec::new();
    for (i, &h_s) in spec.altitudes_km.iter().enumerate() {
        let (radius, theta) = los_radius(&earth, h_s)?;
        for (j, &metric) in spec.metrics.iter().enumerate() {
            let seed = cell_seed(cfg.seed, Experiment::ErrAlt, &[i as u64, j as u64]);
            cells.push((h_s, estimation_config(cfg, earth, radius, theta, metric, mode, seed)?));
        }
    }
    let mut summary = Table::new(
        "err_alt",
        "h_s_km,metric,mode,h_opt_km,e_min,e_min_percent,std_err,excluded,unreliable,n_in,n_out,seed",
    );
    let mut curves = Table::new("err_alt_curves", CSV_HEADER);
    for (h_s, ec) in cells {
        let cell = estimate_cell(&ec, errest::estimate)?;
        summary.rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            h_s,
            ec.metric,
            ec.mode,
            cell.h_opt_km,
            cell.e_min,
            100.0 * cell.e_min,
            cell.std_err,
            cell.excluded,
            cell.unreliable,
            ec.n_in,
            ec.n_out,
            ec.seed
        ));
        if let Some(est) = &cell.estimate {
            push_curves(&mut curves, est);
        }
    }
    Ok(vec![summary, curves])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Beam,
    Area,
}

pub fn run_heatmap(cfg: &Config, kind: RegionKind) -> Result<Vec<Table>> {
    let earth = cfg.earth()?;
    let (spec, experiment, label) = match kind {
        RegionKind::Beam => (&cfg.heatmap_beam, Experiment::HeatmapBeam, "beam"),
        RegionKind::Area => (&cfg.heatmap_area, Experiment::HeatmapArea, "area"),
    };
    let mode = cfg.estimation.mode;
    let mut cells = Vec::new();
    for (i, &h_s) in spec.altitudes_km.iter().enumerate() {
        let radius = earth.earth_radius + h_s;
        for (j, &value) in spec.values.iter().enumerate() {
            let region = match kind {
                RegionKind::Beam => RegionSpec::BeamAngle(value),
                RegionKind::Area => RegionSpec::CapArea(value),
            };
            let theta = region.resolve(radius, &earth)?.theta_max;
            for (k, &metric) in spec.metrics.iter().enumerate() {
                let seed = cell_seed(cfg.seed, experiment, &[i as u64, j as u64, k as u64]);
                cells.push((h_s, value, estimation_config(cfg, earth, radius, theta, metric, mode, seed)?));
            }
        }
    }
    let mut table = Table::new(
        experiment.name(),
        "h_s_km,region,region_value,theta_max_rad,metric,mode,h_opt_km,e_min,std_err,excluded,unreliable,seed",
    );
    for (h_s, value, ec) in cells {
        let cell = estimate_cell(&ec, errest::estimate)?;
        table.rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            h_s,
            label,
            value,
            ec.theta_max,
            ec.metric,
            ec.mode,
            cell.h_opt_km,
            cell.e_min,
            cell.std_err,
            cell.excluded,
            cell.unreliable,
            ec.seed
        ));
    }
    Ok(vec![table])
}

pub fn run_case_study(cfg: &Config) -> Result<Vec<Table>> {
    let earth = cfg.earth()?;
    let spec = &cfg.case_study;
    let mode = cfg.estimation.mode;
    let mut cells = Vec::new();
    for (i, (platform, h_s)) in [("hap", spec.hap_km), ("leo", spec.leo_km)].into_iter().enumerate() {
        let radius = earth.earth_radius + h_s;
        for (j, &psi) in spec.beams_rad.iter().enumerate() {
            let theta = theta_max_from_beam(psi, radius, &earth)?.theta_max;
            for (k, &metric) in spec.metrics.iter().enumerate() {
                let seed = cell_seed(cfg.seed, Experiment::CaseStudy, &[i as u64, j as u64, k as u64]);
                cells.push((platform, h_s, psi, estimation_config(cfg, earth, radius, theta, metric, mode, seed)?));
            }
        }
    }
    let mut table = Table::new(
        "case_study",
        "platform,h_s_km,psi_rad,theta_max_rad,metric,mode,h_opt_km,e_min,e_min_percent,std_err,unreliable,planar_recommended,seed",
    );
    for (platform, h_s, psi, ec) in cells {
        let cell = estimate_cell(&ec, errest::estimate)?;
        table.rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            platform,
            h_s,
            psi,
            ec.theta_max,
            ec.metric,
            ec.mode,
            cell.h_opt_km,
            cell.e_min,
            100.0 * cell.e_min,
            cell.std_err,
            cell.unreliable,
            cell.e_min < spec.threshold && !cell.unreliable,
            ec.seed
        ));
    }
    Ok(vec![table])
}

/// Statistical checks of the generator and the closed forms, one row per
/// check. Failed checks are counted, not raised, so the table is kept.
pub fn run_validate(cfg: &Config) -> Result<Outcome> {
    let earth = cfg.earth()?;
    let spec = cfg.validate;
    let base = RngSpec::new(cfg.seed, Experiment::Validate.tag());
    let mut table = Table::new("validate", "suite,case,statistic,threshold,pass");
    let mut failed = 0usize;
    let mut row = |table: &mut Table, suite: &str, case: &str, stat: f64, threshold: f64, pass: bool| {
        if !pass {
            failed += 1;
        }
        table.rows.push(format!("{suite},{case},{stat},{threshold},{pass}"));
    };

    // Distance laws: KS distance of generated distances to the closed-form
    // CDFs. The limit is 0.006 at 1e5 points and scales as 1/sqrt(n) below.
    let ks_limit = 0.006 * (1e5 / spec.n_points as f64).sqrt().max(1.0);
    for k in 0..spec.param_sets {
        let mut r = base.derive(&[0, k]).rng();
        let h_s = 10.0 + r.random::<f64>() * 1990.0;
        let radius = earth.earth_radius + h_s;
        let theta = los_theta_max(radius, &earth)? * (0.05 + 0.95 * r.random::<f64>());
        let lower = radius * theta.cos();
        let h_p = lower + (0.05 + 0.9 * r.random::<f64>()) * (radius - lower);
        let params = DeploymentParams::new(radius, theta, h_p, spec.n_points)?;
        let pair = generate_pair(&params, &base.derive(&[1, k]));
        let mut ds: Vec<f64> = pair.spherical.iter().map(|p| user_distance_spherical(p.polar, radius, &earth)).collect();
        let mut dp: Vec<f64> = pair
            .planar
            .iter()
            .map(|p| user_distance_planar(p.horizontal_radius, h_p, &earth))
            .collect();
        let ks_s = ks_statistic(&mut ds, |d| cdf_spherical(d, radius, theta, &earth));
        let ks_p = ks_statistic(&mut dp, |d| cdf_planar(d, params.rho_max(), h_p, &earth));
        let case = format!("set{k}:h_s={h_s:.3}:theta={theta:.6}");
        row(&mut table, "ks_spherical", &case, ks_s, ks_limit, ks_s < ks_limit);
        row(&mut table, "ks_planar", &case, ks_p, ks_limit, ks_p < ks_limit);
    }

    // Homogeneity on equal-area cells; one failure in total is tolerated.
    const P_MIN: f64 = 1e-3;
    let radius = earth.earth_radius + 550.0;
    let theta = los_theta_max(radius, &earth)?;
    let params = DeploymentParams::new(radius, theta, 0.5 * (radius + earth.earth_radius), spec.n_points)?;
    let mut homog_failures = 0;
    for s in 0..spec.seeds {
        let pair = generate_pair(&params, &base.derive(&[2, s]));
        let x = cap_homogeneity(&pair.spherical, theta, spec.cells)?;
        let y = disk_homogeneity(&pair.planar, params.rho_max(), spec.cells)?;
        for (set, res) in [("x", x), ("y", y)] {
            let ok = res.p_value > P_MIN;
            if !ok {
                homog_failures += 1;
            }
            table.rows.push(format!("homogeneity_{set},seed{s},{},{P_MIN},{ok}", res.p_value));
        }
    }
    row(&mut table, "homogeneity", "failures", homog_failures as f64, 1.0, homog_failures <= 1);

    // A sampler uniform in the polar angle is not uniform in area.
    let biased: Vec<SphericalPoint> = (0..spec.n_points as u64)
        .map(|i| {
            let (u, v) = base.derive(&[3]).uniform_pair(i);
            SphericalPoint { radius, azimuth: 2.0 * PI * v, polar: u * theta }
        })
        .collect();
    let p = cap_homogeneity(&biased, theta, spec.cells)?.p_value;
    row(&mut table, "biased_sampler", "theta=u*theta_max", p, 1e-6, p < 1e-6);

    // Asymptotic similarity at a fixed cap area.
    const AREA: f64 = 1e6;
    let scale = (AREA / PI).sqrt();
    let mut prev = f64::INFINITY;
    let mut decreasing = true;
    let mut last = 0.0;
    for r in [1e3, 1e4, 1e5, 1e6] {
        let d = similarity_displacement(AREA, r, 1000, &base.derive(&[4]))?;
        decreasing &= d < prev;
        prev = d;
        last = d;
        table.rows.push(format!("similarity,R_s={r},{d},{scale},true"));
    }
    row(&mut table, "similarity", "strictly_decreasing", f64::from(u8::from(decreasing)), 1.0, decreasing);
    row(&mut table, "similarity", "final_fraction", last / scale, 0.01, last / scale < 0.01);

    // Region maps compose to the identity.
    let mut worst: f64 = 0.0;
    for h in [20.0, 550.0, 1000.0] {
        let rs = earth.earth_radius + h;
        let los = los_theta_max(rs, &earth)?;
        for k in 1..=100 {
            let t = los * k as f64 / 100.0;
            let back = theta_max_from_beam(beam_from_theta_max(t, rs, &earth)?, rs, &earth)?.theta_max;
            worst = worst.max(((back - t) / t).abs());
            let ta = (PI / 2.0) * k as f64 / 100.0;
            let back = theta_max_from_area(cap_area(rs, ta)?, rs)?;
            worst = worst.max(((back - ta) / ta).abs());
        }
    }
    row(&mut table, "region_round_trip", "max_relative_error", worst, 1e-12, worst <= 1e-12);

    // Second moment of the LoS cap distance equals R_s h_s.
    let mut worst: f64 = 0.0;
    for h in [20.0, 100.0, 550.0, 1000.0] {
        let rs = earth.earth_radius + h;
        let m = mean_sq_distance_spherical(rs, los_theta_max(rs, &earth)?, &earth);
        worst = worst.max(((m - rs * h) / (rs * h)).abs());
    }
    row(&mut table, "mean_sq_identity", "max_relative_error", worst, 1e-12, worst <= 1e-12);

    Ok(Outcome { tables: vec![table], failed_checks: failed })
}
