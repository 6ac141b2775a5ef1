//! Parametric platform-to-ground channel presets.
//!
//! Received power on one link is
//! `P_tx G_tx * fading * 10^(-eta/10) / PL(d)` with
//! `PL(d) = (4 pi f / c)^2 d^alpha` (`d` in meters), which is free-space
//! path loss for `alpha = 2`. The aerial preset switches between LoS and
//! NLoS per link using the elevation-angle sigmoid; the space preset is
//! always LoS with shadowed-Rician fading.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{elevation_angle, CartesianPoint, EarthConstants};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Altitude ceiling (km) of the aerial preset.
pub const AERIAL_MAX_ALTITUDE_KM: f64 = 1000.0;
/// Altitude floor (km) of the space preset.
pub const SPACE_MIN_ALTITUDE_KM: f64 = 10_000.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelPreset {
    AerialToGround,
    SpaceToGround,
}

/// Small-scale fading of the received power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fading {
    /// No fading; the power gain is exactly 1.
    Unit,
    /// Nakagami-m envelope, i.e. Gamma(m, 1/m) power with unit mean.
    Nakagami { m: f64 },
    /// Shadowed-Rician envelope: half the average scattered power `b0`,
    /// Nakagami parameter `m` and average LoS power `omega`.
    ShadowedRician { b0: f64, m: f64, omega: f64 },
}

impl Fading {
    fn validate(&self) -> Result<()> {
        match *self {
            Fading::Unit => Ok(()),
            Fading::Nakagami { m } => check_m(m),
            Fading::ShadowedRician { b0, m, omega } => {
                check_m(m)?;
                if !(b0 > 0.0 && omega > 0.0 && b0.is_finite() && omega.is_finite()) {
                    return Err(Error::config(format!(
                        "shadowed-Rician b0 and omega must be positive, got {b0}, {omega}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn mean_power(&self) -> f64 {
        match *self {
            Fading::Unit | Fading::Nakagami { .. } => 1.0,
            Fading::ShadowedRician { b0, omega, .. } => omega + 2.0 * b0,
        }
    }

    pub fn sampler(&self) -> Result<FadingSampler> {
        self.validate()?;
        let err = |e: rand_distr::GammaError| Error::config(e.to_string());
        Ok(match *self {
            Fading::Unit => FadingSampler::Unit,
            Fading::Nakagami { m } => FadingSampler::Nakagami(Gamma::new(m, 1.0 / m).map_err(err)?),
            Fading::ShadowedRician { b0, m, omega } => FadingSampler::ShadowedRician {
                los: Gamma::new(m, omega / m).map_err(err)?,
                scatter_std: b0.sqrt(),
            },
        })
    }
}

fn check_m(m: f64) -> Result<()> {
    if m >= 0.5 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("Nakagami m must be >= 0.5, got {m}")))
    }
}

/// Prebuilt distributions for repeated power-gain draws.
#[derive(Debug, Clone, Copy)]
pub enum FadingSampler {
    Unit,
    Nakagami(Gamma<f64>),
    ShadowedRician { los: Gamma<f64>, scatter_std: f64 },
}

impl FadingSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingSampler::Unit => 1.0,
            FadingSampler::Nakagami(g) => g.sample(rng),
            FadingSampler::ShadowedRician { los, scatter_std } => {
                // Circular symmetry of the scattered part lets the LoS phase be fixed at 0.
                let a = los.sample(rng).sqrt();
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                let re = a + scatter_std * x;
                let im = scatter_std * y;
                re * re + im * im
            }
        }
    }
}

/// Probability that a link is line-of-sight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LosModel {
    Always,
    /// `1 / (1 + a exp(-b (elevation_deg - a)))`.
    Sigmoid { a: f64, b: f64 },
}

impl LosModel {
    pub fn probability(&self, elevation_rad: f64) -> f64 {
        match *self {
            LosModel::Always => 1.0,
            LosModel::Sigmoid { a, b } => {
                let deg = elevation_rad.to_degrees();
                1.0 / (1.0 + a * (-b * (deg - a)).exp())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub preset: ChannelPreset,
    pub path_loss_exponent: f64,
    pub carrier_frequency_ghz: f64,
    pub los_model: LosModel,
    pub excess_loss_los_db: f64,
    pub excess_loss_nlos_db: f64,
    pub fading_los: Fading,
    pub fading_nlos: Fading,
    pub tx_power_dbw: f64,
    pub tx_antenna_gain_dbi: f64,
    /// Receive gain on the serving link only; interferers see transmit gain alone.
    pub rx_antenna_gain_dbi: f64,
    pub noise_power_dbw: f64,
    pub sinr_threshold_db: f64,
}

impl ChannelModel {
    /// Urban aerial-to-ground preset.
    pub fn aerial_to_ground() -> Self {
        Self {
            preset: ChannelPreset::AerialToGround,
            path_loss_exponent: 2.0,
            carrier_frequency_ghz: 2.0,
            los_model: LosModel::Sigmoid { a: 9.61, b: 0.16 },
            excess_loss_los_db: 1.0,
            excess_loss_nlos_db: 20.0,
            fading_los: Fading::Nakagami { m: 3.0 },
            fading_nlos: Fading::Nakagami { m: 1.0 },
            tx_power_dbw: 10.0,
            tx_antenna_gain_dbi: 20.0,
            rx_antenna_gain_dbi: 0.0,
            noise_power_dbw: -124.0,
            sinr_threshold_db: 0.0,
        }
    }

    /// Space-to-ground preset with average shadowing.
    pub fn space_to_ground() -> Self {
        let sr = Fading::ShadowedRician { b0: 0.158, m: 19.4, omega: 1.29 };
        Self {
            preset: ChannelPreset::SpaceToGround,
            path_loss_exponent: 2.0,
            carrier_frequency_ghz: 2.0,
            los_model: LosModel::Always,
            excess_loss_los_db: 0.0,
            excess_loss_nlos_db: 0.0,
            fading_los: sr,
            fading_nlos: sr,
            tx_power_dbw: 20.0,
            tx_antenna_gain_dbi: 30.0,
            rx_antenna_gain_dbi: 0.0,
            noise_power_dbw: -124.0,
            sinr_threshold_db: 0.0,
        }
    }

    pub fn preset(preset: ChannelPreset) -> Self {
        match preset {
            ChannelPreset::AerialToGround => Self::aerial_to_ground(),
            ChannelPreset::SpaceToGround => Self::space_to_ground(),
        }
    }

    /// Preset implied by the deployment altitude above ground. Altitudes
    /// between the two presets' ranges have no implied channel.
    pub fn preset_for_altitude(altitude_km: f64) -> Result<ChannelPreset> {
        if altitude_km <= AERIAL_MAX_ALTITUDE_KM {
            Ok(ChannelPreset::AerialToGround)
        } else if altitude_km >= SPACE_MIN_ALTITUDE_KM {
            Ok(ChannelPreset::SpaceToGround)
        } else {
            Err(Error::config(format!(
                "altitude {altitude_km} km lies between the aerial (<= {AERIAL_MAX_ALTITUDE_KM} km) \
                 and space (>= {SPACE_MIN_ALTITUDE_KM} km) presets, so no channel is implied"
            )))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exponent >= 2.0 && self.path_loss_exponent.is_finite()) {
            return Err(Error::config(format!(
                "path-loss exponent must be >= 2, got {}",
                self.path_loss_exponent
            )));
        }
        if !(self.carrier_frequency_ghz > 0.0 && self.carrier_frequency_ghz.is_finite()) {
            return Err(Error::config("carrier frequency must be positive"));
        }
        for (name, v) in [
            ("excess_loss_los_db", self.excess_loss_los_db),
            ("excess_loss_nlos_db", self.excess_loss_nlos_db),
            ("tx_power_dbw", self.tx_power_dbw),
            ("tx_antenna_gain_dbi", self.tx_antenna_gain_dbi),
            ("rx_antenna_gain_dbi", self.rx_antenna_gain_dbi),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite, got {v}")));
            }
        }
        // Noise and threshold may be +-inf (limit studies) but not NaN.
        if self.noise_power_dbw.is_nan() || self.sinr_threshold_db.is_nan() {
            return Err(Error::config("noise power and SINR threshold must not be NaN"));
        }
        if let LosModel::Sigmoid { a, b } = self.los_model {
            if !(a.is_finite() && b.is_finite() && a > 0.0) {
                return Err(Error::config("LoS sigmoid parameters must be finite with a > 0"));
            }
        }
        self.fading_los.validate()?;
        self.fading_nlos.validate()
    }

    /// Path-loss factor (linear, >= 1 for the distances of interest) at
    /// distance `d_km`.
    pub fn path_loss(&self, d_km: f64) -> f64 {
        let k = 4.0 * PI * self.carrier_frequency_ghz * 1e9 / SPEED_OF_LIGHT;
        k * k * (d_km * 1e3).powf(self.path_loss_exponent)
    }

    pub fn noise_linear(&self) -> f64 {
        db_to_linear(self.noise_power_dbw)
    }

    pub fn threshold_linear(&self) -> f64 {
        db_to_linear(self.sinr_threshold_db)
    }

    /// Mean received power for a LoS and an NLoS state, before fading.
    pub fn mean_gains(&self, d_km: f64) -> (f64, f64) {
        let base = db_to_linear(self.tx_power_dbw + self.tx_antenna_gain_dbi) / self.path_loss(d_km);
        (
            base * db_to_linear(-self.excess_loss_los_db),
            base * db_to_linear(-self.excess_loss_nlos_db),
        )
    }
}

/// Received power from one platform at `point`, with a fresh LoS state and
/// fading draw. Transmit-side gain only.
pub fn link_gain<R: Rng + ?Sized>(
    point: &CartesianPoint,
    channel: &ChannelModel,
    earth: &EarthConstants,
    rng: &mut R,
) -> Result<f64> {
    channel.validate()?;
    let links = PreparedLinks::new(std::slice::from_ref(point), channel, earth)?;
    Ok(links.draw_gain(0, rng))
}

/// Per-link quantities that do not change between fading draws.
#[derive(Debug, Clone)]
pub struct PreparedLinks {
    pub(crate) distances: Vec<f64>,
    gain_los: Vec<f64>,
    gain_nlos: Vec<f64>,
    p_los: Vec<f64>,
    fading_los: FadingSampler,
    fading_nlos: FadingSampler,
}

impl PreparedLinks {
    pub fn new(points: &[CartesianPoint], channel: &ChannelModel, earth: &EarthConstants) -> Result<Self> {
        let user = earth.user();
        let n = points.len();
        let mut distances = Vec::with_capacity(n);
        let mut gain_los = Vec::with_capacity(n);
        let mut gain_nlos = Vec::with_capacity(n);
        let mut p_los = Vec::with_capacity(n);
        for p in points {
            let d = p.distance(&user);
            let (gl, gn) = channel.mean_gains(d);
            distances.push(d);
            gain_los.push(gl);
            gain_nlos.push(gn);
            p_los.push(channel.los_model.probability(elevation_angle(p, earth)));
        }
        Ok(Self {
            distances,
            gain_los,
            gain_nlos,
            p_los,
            fading_los: channel.fading_los.sampler()?,
            fading_nlos: channel.fading_nlos.sampler()?,
        })
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// One LoS-state and fading draw for link `i`.
    pub fn draw_gain<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        let p = self.p_los[i];
        // The state draw is skipped when it is certain, so always-LoS channels
        // spend no randomness on it.
        let los = p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p);
        if los {
            self.gain_los[i] * self.fading_los.draw(rng)
        } else {
            self.gain_nlos[i] * self.fading_nlos.draw(rng)
        }
    }
}
