//! Metric functionals evaluated on a point set (or on a paired deployment
//! for the transport metric).
//!
//! Topology metrics treat every platform as a unit mass, so the energy to
//! move it over distance `d` is `d^2`. System metrics draw SINR
//! realizations at the typical user with nearest-platform association.

mod channel;
mod system;
mod topology;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{CartesianPoint, EarthConstants};

pub use channel::{
    db_to_linear, link_gain, ChannelModel, ChannelPreset, Fading, FadingSampler, LosModel, PreparedLinks,
    AERIAL_MAX_ALTITUDE_KM, SPACE_MIN_ALTITUDE_KM,
};
pub use system::{sinr_realization, SinrSummary};
pub use topology::{t1_paired_transport, t2_avg_energy, t3_contact_energy, TransportNormalization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    /// Paired transport energy from the spherical to the planar set,
    /// normalized per point.
    #[serde(rename = "t1")]
    T1PairedTransport,
    /// Mean squared user distance (km²).
    #[serde(rename = "t2")]
    T2AvgEnergy,
    /// Squared contact distance (km²).
    #[serde(rename = "t3")]
    T3ContactEnergy,
    /// Mean linear SINR.
    #[serde(rename = "s1")]
    S1AvgSinr,
    /// Coverage probability `P[SINR > tau]`.
    #[serde(rename = "s2")]
    S2Coverage,
    /// Mean `log2(1 + SINR)` in bit/s/Hz.
    #[serde(rename = "s3")]
    S3AvgRate,
}

impl MetricId {
    pub const ALL: [MetricId; 6] = [
        MetricId::T1PairedTransport,
        MetricId::T2AvgEnergy,
        MetricId::T3ContactEnergy,
        MetricId::S1AvgSinr,
        MetricId::S2Coverage,
        MetricId::S3AvgRate,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            MetricId::T1PairedTransport => "t1",
            MetricId::T2AvgEnergy => "t2",
            MetricId::T3ContactEnergy => "t3",
            MetricId::S1AvgSinr => "s1",
            MetricId::S2Coverage => "s2",
            MetricId::S3AvgRate => "s3",
        }
    }

    pub fn is_system(&self) -> bool {
        matches!(self, MetricId::S1AvgSinr | MetricId::S2Coverage | MetricId::S3AvgRate)
    }

    /// Whether the metric is a function of the pair rather than of each set.
    pub fn is_paired(&self) -> bool {
        matches!(self, MetricId::T1PairedTransport)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown metric '{s}' (expected one of t1..t3, s1..s3)")))
    }
}

/// Everything a metric needs besides the points themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricContext {
    pub earth: EarthConstants,
    pub channel: Option<ChannelModel>,
    /// SINR realizations per evaluation of a system metric.
    pub mc_draws: usize,
    pub t1_normalization: TransportNormalization,
}

impl Default for MetricContext {
    fn default() -> Self {
        Self {
            earth: EarthConstants::default(),
            channel: None,
            mc_draws: 100,
            t1_normalization: TransportNormalization::ToUser,
        }
    }
}

impl MetricContext {
    /// Rejects metric/context combinations that cannot be evaluated.
    pub fn check(&self, id: MetricId) -> Result<()> {
        if id.is_system() {
            let ch = self
                .channel
                .as_ref()
                .ok_or_else(|| Error::config(format!("metric {id} needs a channel model")))?;
            ch.validate()?;
            if self.mc_draws == 0 {
                return Err(Error::config(format!("metric {id} needs at least one SINR draw")));
            }
        }
        Ok(())
    }

    /// Value of a single-set metric on `points`. `rng` is only consumed by
    /// system metrics.
    pub fn evaluate<R: Rng + ?Sized>(&self, id: MetricId, points: &[CartesianPoint], rng: &mut R) -> Result<f64> {
        self.check(id)?;
        if points.is_empty() {
            return Err(Error::domain("metrics need a nonempty point set"));
        }
        match id {
            MetricId::T1PairedTransport => Err(Error::config(
                "t1 is defined on a paired deployment; use t1_paired_transport",
            )),
            MetricId::T2AvgEnergy => Ok(t2_avg_energy(points, &self.earth)),
            MetricId::T3ContactEnergy => Ok(t3_contact_energy(points, &self.earth)),
            MetricId::S1AvgSinr | MetricId::S2Coverage | MetricId::S3AvgRate => {
                let channel = self.channel.as_ref().expect("checked above");
                let summary = SinrSummary::simulate(points, channel, &self.earth, self.mc_draws, rng)?;
                Ok(summary.metric(id))
            }
        }
    }
}
