use serde::{Deserialize, Serialize};

use crate::geom::{CartesianPoint, EarthConstants};
use crate::pointgen::PairedDeployment;

/// Reference point whose squared distance normalizes the transport energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportNormalization {
    /// The typical user at `(0, 0, R_earth)`.
    #[default]
    ToUser,
    /// The coordinate origin.
    ToEarthCenter,
}

/// Mean over pairs of `|x_n - y_n|^2 / |x_n - o|^2`.
pub fn t1_paired_transport(
    pair: &PairedDeployment,
    normalization: TransportNormalization,
    earth: &EarthConstants,
) -> f64 {
    let origin = match normalization {
        TransportNormalization::ToUser => earth.user(),
        TransportNormalization::ToEarthCenter => CartesianPoint::default(),
    };
    let n = pair.len();
    let sum: f64 = pair
        .spherical
        .iter()
        .zip(&pair.planar)
        .map(|(s, p)| {
            let x = s.to_cartesian();
            x.distance_sq(&p.to_cartesian()) / x.distance_sq(&origin)
        })
        .sum();
    sum / n as f64
}

/// Mean squared user distance.
pub fn t2_avg_energy(points: &[CartesianPoint], earth: &EarthConstants) -> f64 {
    let user = earth.user();
    points.iter().map(|p| p.distance_sq(&user)).sum::<f64>() / points.len() as f64
}

/// Squared distance from the user to the nearest point.
pub fn t3_contact_energy(points: &[CartesianPoint], earth: &EarthConstants) -> f64 {
    let user = earth.user();
    points
        .iter()
        .map(|p| p.distance_sq(&user))
        .fold(f64::INFINITY, f64::min)
}
