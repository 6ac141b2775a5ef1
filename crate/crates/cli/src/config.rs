//! Run configuration, read from TOML. Every field has a default, so an empty
//! file is a valid config and `--print-config` shows the resolved values.

use std::f64::consts::PI;
use std::path::Path;

use capmap_core::errest::Mode;
use capmap_core::metrics::{ChannelModel, ChannelPreset, TransportNormalization};
use capmap_core::{EarthConstants, MetricId};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub earth: EarthSection,
    pub deployment: DeploymentSection,
    pub estimation: EstimationSection,
    pub channel: ChannelSection,
    pub opt_alt: SweepSpec,
    pub err_alt: SweepSpec,
    pub heatmap_beam: HeatmapSpec,
    pub heatmap_area: HeatmapSpec,
    pub case_study: CaseStudySpec,
    pub validate: ValidateSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 2024,
            earth: EarthSection::default(),
            deployment: DeploymentSection::default(),
            estimation: EstimationSection::default(),
            channel: ChannelSection::default(),
            opt_alt: SweepSpec {
                altitudes_km: vec![20.0, 100.0, 550.0, 1000.0],
                metrics: MetricId::ALL.to_vec(),
            },
            err_alt: SweepSpec {
                altitudes_km: vec![20.0, 100.0, 550.0, 1000.0],
                metrics: MetricId::ALL.to_vec(),
            },
            heatmap_beam: HeatmapSpec {
                altitudes_km: vec![20.0, 50.0, 100.0, 200.0, 550.0, 1000.0],
                values: [24.0, 12.0, 6.0, 4.0, 3.0, 2.0].iter().map(|d| PI / d).collect(),
                metrics: vec![MetricId::T2AvgEnergy],
            },
            heatmap_area: HeatmapSpec {
                altitudes_km: vec![20.0, 50.0, 100.0, 200.0, 550.0, 1000.0],
                values: vec![1e3, 1e4, 1e5, 5e5],
                metrics: vec![MetricId::T2AvgEnergy],
            },
            case_study: CaseStudySpec::default(),
            validate: ValidateSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarthSection {
    pub radius_km: f64,
}

impl Default for EarthSection {
    fn default() -> Self {
        Self { radius_km: EarthConstants::default().earth_radius }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeploymentSection {
    pub n_points: usize,
}

impl Default for DeploymentSection {
    fn default() -> Self {
        Self { n_points: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSection {
    pub n_in: usize,
    pub n_out: usize,
    pub mode: Mode,
    /// SINR realizations per system-metric evaluation.
    pub mc_draws: usize,
    pub t1_normalization: TransportNormalization,
}

impl Default for EstimationSection {
    fn default() -> Self {
        Self {
            n_in: 1000,
            n_out: 50,
            mode: Mode::Csm,
            mc_draws: 100,
            t1_normalization: TransportNormalization::ToUser,
        }
    }
}

/// Channel used by system metrics, chosen by deployment altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub aerial: ChannelModel,
    pub space: ChannelModel,
    /// Preset for altitudes between the aerial and space ranges, which
    /// otherwise have no implied channel.
    pub gap_preset: Option<ChannelPreset>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            aerial: ChannelModel::aerial_to_ground(),
            space: ChannelModel::space_to_ground(),
            gap_preset: None,
        }
    }
}

impl ChannelSection {
    pub fn for_altitude(&self, altitude_km: f64) -> Result<ChannelModel> {
        let preset = match (ChannelModel::preset_for_altitude(altitude_km), self.gap_preset) {
            (Ok(p), _) | (Err(_), Some(p)) => p,
            (Err(capmap_core::Error::Config(msg)), None) => {
                return Err(CliError::Config(format!("{msg}; set channel.gap_preset to choose one")))
            }
            (Err(e), None) => return Err(e.into()),
        };
        Ok(match preset {
            ChannelPreset::AerialToGround => self.aerial,
            ChannelPreset::SpaceToGround => self.space,
        })
    }
}

/// LoS-cap sweep over deployment altitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub altitudes_km: Vec<f64>,
    pub metrics: Vec<MetricId>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { altitudes_km: vec![550.0], metrics: vec![MetricId::T2AvgEnergy] }
    }
}

/// Altitude by region grid; `values` are beam angles (rad) or cap areas (km²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapSpec {
    pub altitudes_km: Vec<f64>,
    pub values: Vec<f64>,
    pub metrics: Vec<MetricId>,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        Self { altitudes_km: vec![550.0], values: vec![PI / 2.0], metrics: vec![MetricId::T2AvgEnergy] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseStudySpec {
    pub hap_km: f64,
    pub leo_km: f64,
    pub beams_rad: Vec<f64>,
    pub metrics: Vec<MetricId>,
    /// Planar modeling is recommended below this relative error.
    pub threshold: f64,
}

impl Default for CaseStudySpec {
    fn default() -> Self {
        Self {
            hap_km: 20.0,
            leo_km: 550.0,
            beams_rad: [24.0, 12.0, 6.0, 3.0, 2.0].iter().map(|d| PI / d).collect(),
            metrics: vec![MetricId::T1PairedTransport, MetricId::T2AvgEnergy, MetricId::T3ContactEnergy],
            threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSpec {
    /// Points per generated deployment.
    pub n_points: usize,
    /// Seeds for the homogeneity suite.
    pub seeds: u64,
    /// Equal-area cells for the chi-square tests.
    pub cells: usize,
    /// Random parameter sets for the distance-law suite.
    pub param_sets: u64,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        Self { n_points: 100_000, seeds: 20, cells: 100, param_sets: 5 }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn earth(&self) -> Result<EarthConstants> {
        EarthConstants::new(self.earth.radius_km).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks that need no numerics. Grid-specific domain checks happen in
    /// the experiment runners before any computation starts.
    pub fn validate(&self) -> Result<()> {
        self.earth()?;
        let est = &self.estimation;
        if est.n_in == 0 || est.n_out == 0 || est.mc_draws == 0 {
            return Err(CliError::Config("n_in, n_out and mc_draws must all be at least 1".into()));
        }
        if self.deployment.n_points == 0 {
            return Err(CliError::Config("deployment.n_points must be at least 1".into()));
        }
        self.channel.aerial.validate()?;
        self.channel.space.validate()?;
        for (name, grid, metrics) in [
            ("opt_alt", &self.opt_alt.altitudes_km, &self.opt_alt.metrics),
            ("err_alt", &self.err_alt.altitudes_km, &self.err_alt.metrics),
            ("heatmap_beam", &self.heatmap_beam.altitudes_km, &self.heatmap_beam.metrics),
            ("heatmap_area", &self.heatmap_area.altitudes_km, &self.heatmap_area.metrics),
        ] {
            nonempty(name, "altitudes_km", grid.len())?;
            nonempty(name, "metrics", metrics.len())?;
            positive(name, grid)?;
        }
        nonempty("heatmap_beam", "values", self.heatmap_beam.values.len())?;
        nonempty("heatmap_area", "values", self.heatmap_area.values.len())?;
        let cs = &self.case_study;
        nonempty("case_study", "beams_rad", cs.beams_rad.len())?;
        nonempty("case_study", "metrics", cs.metrics.len())?;
        positive("case_study", &[cs.hap_km, cs.leo_km])?;
        if !(cs.threshold > 0.0) {
            return Err(CliError::Config("case_study.threshold must be positive".into()));
        }
        let v = &self.validate;
        if v.n_points == 0 || v.seeds == 0 || v.param_sets == 0 || v.cells < 2 {
            return Err(CliError::Config(
                "validate needs n_points, seeds and param_sets >= 1 and cells >= 2".into(),
            ));
        }
        Ok(())
    }
}

fn nonempty(section: &str, field: &str, len: usize) -> Result<()> {
    if len == 0 {
        return Err(CliError::Config(format!("{section}.{field} must not be empty")));
    }
    Ok(())
}

fn positive(section: &str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(CliError::Config(format!("{section}: altitudes must be positive, got {v}")));
    }
    Ok(())
}
