use rand::Rng;

use super::channel::{db_to_linear, ChannelModel, PreparedLinks};
use super::MetricId;
use crate::error::{Error, Result};
use crate::geom::{CartesianPoint, EarthConstants};

/// Index of the nearest platform; ties go to the lowest index.
fn serving_index(links: &PreparedLinks) -> usize {
    let mut best = 0;
    for (i, &d) in links.distances.iter().enumerate() {
        if d < links.distances[best] {
            best = i;
        }
    }
    best
}

fn draw_sinr<R: Rng + ?Sized>(links: &PreparedLinks, serving: usize, rx_gain: f64, noise: f64, rng: &mut R) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for i in 0..links.len() {
        let g = links.draw_gain(i, rng);
        if i == serving {
            signal = g * rx_gain;
        } else {
            interference += g;
        }
    }
    signal / (interference + noise)
}

/// One SINR realization at the typical user, served by the nearest platform.
pub fn sinr_realization<R: Rng + ?Sized>(
    points: &[CartesianPoint],
    channel: &ChannelModel,
    earth: &EarthConstants,
    rng: &mut R,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::domain("SINR needs at least one platform"));
    }
    channel.validate()?;
    let links = PreparedLinks::new(points, channel, earth)?;
    let serving = serving_index(&links);
    Ok(draw_sinr(
        &links,
        serving,
        db_to_linear(channel.rx_antenna_gain_dbi),
        channel.noise_linear(),
        rng,
    ))
}

/// Streaming reduction of SINR draws into the three system metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSummary {
    threshold: f64,
    draws: usize,
    sum_sinr: f64,
    covered: usize,
    sum_rate: f64,
}

impl SinrSummary {
    /// `threshold` is linear.
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            draws: 0,
            sum_sinr: 0.0,
            covered: 0,
            sum_rate: 0.0,
        }
    }

    pub fn push(&mut self, sinr: f64) {
        self.draws += 1;
        self.sum_sinr += sinr;
        if sinr > self.threshold {
            self.covered += 1;
        }
        self.sum_rate += sinr.ln_1p() / std::f64::consts::LN_2;
    }

    /// Buffered form: the same reduction over a stored slice.
    pub fn from_draws(threshold: f64, draws: &[f64]) -> Self {
        let n = draws.len();
        let sum_sinr = draws.iter().sum();
        let covered = draws.iter().filter(|&&s| s > threshold).count();
        let sum_rate = draws.iter().map(|&s| (1.0 + s).log2()).sum();
        Self {
            threshold,
            draws: n,
            sum_sinr,
            covered,
            sum_rate,
        }
    }

    /// Draws `mc_draws` SINR realizations over a fixed point set.
    pub fn simulate<R: Rng + ?Sized>(
        points: &[CartesianPoint],
        channel: &ChannelModel,
        earth: &EarthConstants,
        mc_draws: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("SINR needs at least one platform"));
        }
        let links = PreparedLinks::new(points, channel, earth)?;
        let serving = serving_index(&links);
        let rx = db_to_linear(channel.rx_antenna_gain_dbi);
        let noise = channel.noise_linear();
        let mut summary = Self::new(channel.threshold_linear());
        for _ in 0..mc_draws {
            summary.push(draw_sinr(&links, serving, rx, noise, rng));
        }
        Ok(summary)
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn mean_sinr(&self) -> f64 {
        self.sum_sinr / self.draws as f64
    }

    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.draws as f64
    }

    pub fn mean_rate(&self) -> f64 {
        self.sum_rate / self.draws as f64
    }

    /// # Panics
    /// On topology metrics.
    pub fn metric(&self, id: MetricId) -> f64 {
        match id {
            MetricId::S1AvgSinr => self.mean_sinr(),
            MetricId::S2Coverage => self.coverage(),
            MetricId::S3AvgRate => self.mean_rate(),
            other => panic!("{other} is not a system metric"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Fading, LosModel, MetricContext};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pinned() -> ChannelModel {
        ChannelModel {
            fading_los: Fading::Unit,
            fading_nlos: Fading::Unit,
            los_model: LosModel::Always,
            ..ChannelModel::aerial_to_ground()
        }
    }

    fn above(x: f64, h: f64) -> CartesianPoint {
        CartesianPoint::new(x, 0.0, EarthConstants::default().earth_radius + h)
    }

    #[test]
    fn single_platform_is_snr() {
        let e = EarthConstants::default();
        let ch = pinned();
        let p = [above(0.0, 400.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sinr = sinr_realization(&p, &ch, &e, &mut rng).unwrap();
        let (g, _) = ch.mean_gains(400.0);
        assert_relative_eq!(sinr, g / ch.noise_linear(), max_relative = 1e-12);
    }

    #[test]
    fn three_platforms_by_hand() {
        let e = EarthConstants::default();
        let ch = ChannelModel { rx_antenna_gain_dbi: 3.0, ..pinned() };
        // Distances 300, 500 (3-4-5 scaled by 100) and 1000 km.
        let pts = [above(400.0, 300.0), above(0.0, 300.0), above(800.0, 600.0)];
        let d = [500.0, 300.0, 1000.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sinr = sinr_realization(&pts, &ch, &e, &mut rng).unwrap();
        // Hand evaluation: 10 dBW + 20 dBi - 1 dB LoS excess over FSPL at 2 GHz.
        let k = (4.0 * std::f64::consts::PI * 2e9 / 299_792_458.0f64).powi(2);
        let gain = |dk: f64| 10f64.powf(2.9) / (k * (dk * 1e3).powi(2));
        let expect = gain(d[1]) * 10f64.powf(0.3) / (gain(d[0]) + gain(d[2]) + 10f64.powf(-12.4));
        assert_relative_eq!(sinr, expect, max_relative = 1e-12);
    }

    #[test]
    fn infinite_noise_kills_sinr() {
        let e = EarthConstants::default();
        let ch = ChannelModel { noise_power_dbw: f64::INFINITY, ..ChannelModel::aerial_to_ground() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sinr_realization(&[above(0.0, 100.0), above(50.0, 100.0)], &ch, &e, &mut rng).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn coverage_threshold_limits() {
        let pts = [above(0.0, 550.0), above(300.0, 550.0), above(900.0, 540.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (tau, expect) in [(f64::NEG_INFINITY, 1.0), (f64::INFINITY, 0.0)] {
            let ctx = MetricContext {
                channel: Some(ChannelModel { sinr_threshold_db: tau, ..ChannelModel::aerial_to_ground() }),
                ..MetricContext::default()
            };
            assert_eq!(ctx.evaluate(MetricId::S2Coverage, &pts, &mut rng).unwrap(), expect);
        }
    }

    #[test]
    fn coverage_nonincreasing_in_threshold() {
        let e = EarthConstants::default();
        let pts: Vec<CartesianPoint> = (0..20).map(|i| above(100.0 * i as f64, 550.0)).collect();
        for seed in 0..5 {
            let mut prev = f64::INFINITY;
            for k in 0..20 {
                let tau = -20.0 + 2.0 * k as f64;
                let ch = ChannelModel { sinr_threshold_db: tau, ..ChannelModel::aerial_to_ground() };
                // Same stream at every threshold: only the threshold moves.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let c = SinrSummary::simulate(&pts, &ch, &e, 200, &mut rng).unwrap().coverage();
                assert!((0.0..=1.0).contains(&c));
                assert!(c <= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn streaming_and_buffered_agree() {
        let e = EarthConstants::default();
        let ch = ChannelModel::aerial_to_ground();
        let pts: Vec<CartesianPoint> = (0..20).map(|i| above(120.0 * i as f64, 550.0)).collect();
        let links = PreparedLinks::new(&pts, &ch, &e).unwrap();
        let serving = serving_index(&links);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws: Vec<f64> = (0..1000).map(|_| draw_sinr(&links, serving, 1.0, ch.noise_linear(), &mut rng)).collect();
        let mut stream = SinrSummary::new(ch.threshold_linear());
        draws.iter().for_each(|&s| stream.push(s));
        let buffered = SinrSummary::from_draws(ch.threshold_linear(), &draws);
        assert_relative_eq!(stream.mean_sinr(), buffered.mean_sinr(), max_relative = 1e-12);
        assert_eq!(stream.coverage(), buffered.coverage());
        assert_relative_eq!(stream.mean_rate(), buffered.mean_rate(), max_relative = 1e-12);
        // Jensen: E log2(1 + S) <= log2(1 + E S).
        assert!(stream.mean_rate() <= (1.0 + stream.mean_sinr()).log2());
        assert!(stream.mean_sinr() >= 0.0 && stream.mean_rate() >= 0.0);
    }

    #[test]
    fn nearest_platform_serves() {
        let e = EarthConstants::default();
        let pts = [above(900.0, 550.0), above(10.0, 550.0), above(10.0, 550.0)];
        let links = PreparedLinks::new(&pts, &ChannelModel::aerial_to_ground(), &e).unwrap();
        assert_eq!(serving_index(&links), 1);
    }
}
