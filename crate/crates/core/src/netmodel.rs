//! Physical model of the single-cell C-RAN: channel realisation, SINR,
//! Shannon rate with margin, and the linear RRH power model.
//!
//! All physics runs in linear units. Decibel quantities from the config
//! (noise in dBm, antenna gain, shadowing spread) are converted on load or at
//! sampling time.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Closest user/RRH separation in metres; keeps the log-distance path loss finite.
pub const MIN_DISTANCE_M: f64 = 1.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Physical and topological constants shared by every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub num_rrhs: usize,
    pub num_users: usize,
    pub bandwidth_hz: f64,
    pub max_tx_power_w: f64,
    pub active_power_w: f64,
    pub sleep_power_w: f64,
    /// Cost of switching one RRH between active and sleep.
    pub transition_power_w: f64,
    pub noise_power_w: f64,
    pub antenna_gain_db: f64,
    pub shadowing_std_db: f64,
    pub amplifier_efficiency: f64,
    pub sinr_margin: f64,
    pub demand_min_mbps: f64,
    pub demand_max_mbps: f64,
    pub cell_radius_m: f64,
    pub slot_duration_ms: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            num_rrhs: 8,
            num_users: 4,
            bandwidth_hz: 10e6,
            max_tx_power_w: 1.0,
            active_power_w: 6.8,
            sleep_power_w: 4.3,
            transition_power_w: 2.0,
            noise_power_w: dbm_to_watts(-102.0),
            antenna_gain_db: 9.0,
            shadowing_std_db: 8.0,
            amplifier_efficiency: 0.25,
            sinr_margin: 1.0,
            demand_min_mbps: 20.0,
            demand_max_mbps: 40.0,
            cell_radius_m: 800.0,
            slot_duration_ms: 100.0,
        }
    }
}

/// On-disk form of [`NetworkConfig`]. Missing keys take the defaults; noise
/// may be given in dBm (`noise_power_dbm`) or watts (`noise_power_w`).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfigFile {
    pub num_rrhs: Option<usize>,
    pub num_users: Option<usize>,
    pub bandwidth_hz: Option<f64>,
    pub max_tx_power_w: Option<f64>,
    pub active_power_w: Option<f64>,
    pub sleep_power_w: Option<f64>,
    pub transition_power_w: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub noise_power_w: Option<f64>,
    pub antenna_gain_db: Option<f64>,
    pub shadowing_std_db: Option<f64>,
    pub amplifier_efficiency: Option<f64>,
    pub sinr_margin: Option<f64>,
    pub demand_min_mbps: Option<f64>,
    pub demand_max_mbps: Option<f64>,
    pub cell_radius_m: Option<f64>,
    pub slot_duration_ms: Option<f64>,
}

impl TryFrom<NetworkConfigFile> for NetworkConfig {
    type Error = Error;

    fn try_from(f: NetworkConfigFile) -> Result<Self> {
        let d = NetworkConfig::default();
        let noise_power_w = match (f.noise_power_dbm, f.noise_power_w) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "noise_power_w",
                    "give either noise_power_dbm or noise_power_w, not both",
                ))
            }
            (Some(dbm), None) => dbm_to_watts(dbm),
            (None, Some(w)) => w,
            (None, None) => d.noise_power_w,
        };
        let cfg = NetworkConfig {
            num_rrhs: f.num_rrhs.unwrap_or(d.num_rrhs),
            num_users: f.num_users.unwrap_or(d.num_users),
            bandwidth_hz: f.bandwidth_hz.unwrap_or(d.bandwidth_hz),
            max_tx_power_w: f.max_tx_power_w.unwrap_or(d.max_tx_power_w),
            active_power_w: f.active_power_w.unwrap_or(d.active_power_w),
            sleep_power_w: f.sleep_power_w.unwrap_or(d.sleep_power_w),
            transition_power_w: f.transition_power_w.unwrap_or(d.transition_power_w),
            noise_power_w,
            antenna_gain_db: f.antenna_gain_db.unwrap_or(d.antenna_gain_db),
            shadowing_std_db: f.shadowing_std_db.unwrap_or(d.shadowing_std_db),
            amplifier_efficiency: f.amplifier_efficiency.unwrap_or(d.amplifier_efficiency),
            sinr_margin: f.sinr_margin.unwrap_or(d.sinr_margin),
            demand_min_mbps: f.demand_min_mbps.unwrap_or(d.demand_min_mbps),
            demand_max_mbps: f.demand_max_mbps.unwrap_or(d.demand_max_mbps),
            cell_radius_m: f.cell_radius_m.unwrap_or(d.cell_radius_m),
            slot_duration_ms: f.slot_duration_ms.unwrap_or(d.slot_duration_ms),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl NetworkConfig {
    /// Parses a TOML document whose top-level keys are the config fields.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: NetworkConfigFile =
            toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        file.try_into()
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be finite and > 0, got {v}")))
            }
        }
        fn finite(key: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, "must be finite"))
            }
        }
        if self.num_rrhs < 1 {
            return Err(Error::config("num_rrhs", "must be >= 1"));
        }
        if self.num_users < 1 {
            return Err(Error::config("num_users", "must be >= 1"));
        }
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("max_tx_power_w", self.max_tx_power_w)?;
        positive("active_power_w", self.active_power_w)?;
        positive("sleep_power_w", self.sleep_power_w)?;
        positive("transition_power_w", self.transition_power_w)?;
        positive("noise_power_w", self.noise_power_w)?;
        finite("antenna_gain_db", self.antenna_gain_db)?;
        if !(self.shadowing_std_db.is_finite() && self.shadowing_std_db >= 0.0) {
            return Err(Error::config("shadowing_std_db", "must be finite and >= 0"));
        }
        if !(self.amplifier_efficiency > 0.0 && self.amplifier_efficiency <= 1.0) {
            return Err(Error::config("amplifier_efficiency", "must lie in (0, 1]"));
        }
        if !(self.sinr_margin.is_finite() && self.sinr_margin >= 1.0) {
            return Err(Error::config("sinr_margin", "must be finite and >= 1"));
        }
        if !(self.demand_min_mbps.is_finite() && self.demand_min_mbps >= 0.0) {
            return Err(Error::config("demand_min_mbps", "must be finite and >= 0"));
        }
        finite("demand_max_mbps", self.demand_max_mbps)?;
        if self.demand_min_mbps > self.demand_max_mbps {
            return Err(Error::config(
                "demand_max_mbps",
                "must be >= demand_min_mbps",
            ));
        }
        positive("cell_radius_m", self.cell_radius_m)?;
        positive("slot_duration_ms", self.slot_duration_ms)?;
        if self.sleep_power_w >= self.active_power_w {
            return Err(Error::config(
                "sleep_power_w",
                "must be strictly below active_power_w",
            ));
        }
        Ok(())
    }

    pub fn noise_power_dbm(&self) -> f64 {
        10.0 * self.noise_power_w.log10() + 30.0
    }
}

/// Complex channel gains `h[(rrh, user)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gains: DMatrix<Complex64>,
}

impl ChannelRealization {
    pub fn new(gains: DMatrix<Complex64>) -> Result<Self> {
        if gains.iter().any(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(Error::NonFinite("channel gain".into()));
        }
        Ok(Self { gains })
    }

    pub fn gains(&self) -> &DMatrix<Complex64> {
        &self.gains
    }

    pub fn num_rrhs(&self) -> usize {
        self.gains.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.gains.ncols()
    }

    pub fn gain(&self, rrh: usize, user: usize) -> Complex64 {
        self.gains[(rrh, user)]
    }

    /// Keeps only the rows listed in `rrhs`, in that order.
    pub fn restrict_rows(&self, rrhs: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(rrhs.len(), self.num_users(), |r, u| self.gains[(rrhs[r], u)])
    }
}

/// Log-distance macro-cell path loss, `148.1 + 37.6 log10(d_km)`.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain(format!(
            "path loss needs a positive distance, got {distance_km} km"
        )));
    }
    Ok(148.1 + 37.6 * distance_km.log10())
}

/// One channel coefficient `10^(-L/20) * sqrt(phi * s) * g` for a known
/// distance, shadowing draw (dB) and small-scale fading sample.
pub fn channel_coefficient(
    distance_km: f64,
    antenna_gain_db: f64,
    shadowing_db: f64,
    small_scale: Complex64,
) -> Result<Complex64> {
    let loss = path_loss_db(distance_km)?;
    let amplitude = 10f64.powf(-loss / 20.0)
        * (db_to_linear(antenna_gain_db) * db_to_linear(shadowing_db)).sqrt();
    Ok(small_scale * amplitude)
}

/// Circularly-symmetric complex normal with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws a channel coefficient for a user at `distance_m` with random
/// shadowing and Rayleigh fading.
pub fn sample_gain_at<R: Rng + ?Sized>(
    config: &NetworkConfig,
    distance_m: f64,
    rng: &mut R,
) -> Result<Complex64> {
    let shadowing_db = if config.shadowing_std_db > 0.0 {
        Normal::new(0.0, config.shadowing_std_db)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng)
    } else {
        0.0
    };
    let g = complex_normal(rng);
    channel_coefficient(
        distance_m.max(MIN_DISTANCE_M) / 1000.0,
        config.antenna_gain_db,
        shadowing_db,
        g,
    )
}

pub fn sample_channel<R: Rng + ?Sized>(
    config: &NetworkConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    config.validate()?;
    let (m, n) = (config.num_rrhs, config.num_users);
    let mut gains = DMatrix::zeros(m, n);
    for r in 0..m {
        for u in 0..n {
            let distance_m = rng.random_range(0.0..=config.cell_radius_m);
            gains[(r, u)] = sample_gain_at(config, distance_m, rng)?;
        }
    }
    ChannelRealization::new(gains)
}

/// SINR of `user_index` for weights laid out like the channel, `(rrh, user)`.
///
/// Uses the plain transpose `h_i^T w_j`, so the matched beam for a single
/// user is `conj(h_i)`.
pub fn compute_sinr(
    weights: &DMatrix<Complex64>,
    channel: &ChannelRealization,
    user_index: usize,
    noise_w: f64,
) -> Result<f64> {
    let h = channel.gains();
    if weights.shape() != h.shape() {
        return Err(Error::Dimension(format!(
            "weights {:?} vs channel {:?}",
            weights.shape(),
            h.shape()
        )));
    }
    if user_index >= h.ncols() {
        return Err(Error::Dimension(format!(
            "user {user_index} out of range for {} users",
            h.ncols()
        )));
    }
    if !(noise_w > 0.0) {
        return Err(Error::Domain("noise power must be > 0".into()));
    }
    let hi = h.column(user_index);
    let mut signal = 0.0;
    let mut interference = 0.0;
    for j in 0..weights.ncols() {
        let p = hi.dot(&weights.column(j)).norm_sqr();
        if j == user_index {
            signal = p;
        } else {
            interference += p;
        }
    }
    Ok(signal / (interference + noise_w))
}

/// Achievable rate in Mbps, `B log2(1 + sinr / margin)`.
pub fn compute_rate(sinr: f64, config: &NetworkConfig) -> f64 {
    config.bandwidth_hz * (1.0 + sinr / config.sinr_margin).log2() / 1e6
}

pub fn rrh_power(active: bool, tx_power_w: f64, config: &NetworkConfig) -> Result<f64> {
    if !(tx_power_w >= 0.0) {
        return Err(Error::Contract(format!(
            "transmit power must be >= 0, got {tx_power_w}"
        )));
    }
    if active {
        Ok(config.active_power_w + tx_power_w / config.amplifier_efficiency)
    } else if tx_power_w != 0.0 {
        Err(Error::Contract(format!(
            "sleeping RRH cannot transmit ({tx_power_w} W)"
        )))
    } else {
        Ok(config.sleep_power_w)
    }
}

/// Slot power split into the transmit, standby and mode-switch terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub transmit_w: f64,
    pub state_w: f64,
    pub transition_w: f64,
    pub total_w: f64,
}

/// Power accounting given the summed radiated power of the active RRHs.
///
/// Shared by the exact and surrogate reward paths so they differ only in
/// `radiated_w`.
pub fn power_accounting(
    prev_pattern: &[bool],
    next_pattern: &[bool],
    radiated_w: f64,
    config: &NetworkConfig,
) -> Result<PowerBreakdown> {
    let m = config.num_rrhs;
    if prev_pattern.len() != m || next_pattern.len() != m {
        return Err(Error::Dimension(format!(
            "patterns of length {} and {} for {m} RRHs",
            prev_pattern.len(),
            next_pattern.len()
        )));
    }
    let transmit_w = radiated_w / config.amplifier_efficiency;
    let mut state_w = 0.0;
    for &on in next_pattern {
        state_w += if on {
            config.active_power_w
        } else {
            config.sleep_power_w
        };
    }
    let switched = prev_pattern
        .iter()
        .zip(next_pattern)
        .filter(|(a, b)| a != b)
        .count();
    let transition_w = switched as f64 * config.transition_power_w;
    Ok(PowerBreakdown {
        transmit_w,
        state_w,
        transition_w,
        total_w: transmit_w + state_w + transition_w,
    })
}

pub fn total_power(
    prev_pattern: &[bool],
    next_pattern: &[bool],
    per_rrh_tx_w: &[f64],
    config: &NetworkConfig,
) -> Result<PowerBreakdown> {
    if per_rrh_tx_w.len() != config.num_rrhs {
        return Err(Error::Dimension(format!(
            "{} transmit powers for {} RRHs",
            per_rrh_tx_w.len(),
            config.num_rrhs
        )));
    }
    let mut radiated = 0.0;
    for (i, (&tx, &on)) in per_rrh_tx_w.iter().zip(next_pattern).enumerate() {
        if !(tx >= 0.0) {
            return Err(Error::Contract(format!("RRH {i}: negative transmit power {tx}")));
        }
        if !on && tx != 0.0 {
            return Err(Error::Contract(format!("RRH {i} sleeps but transmits {tx} W")));
        }
        radiated += tx;
    }
    power_accounting(prev_pattern, next_pattern, radiated, config)
}

pub fn sample_demands<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Vec<f64> {
    let (lo, hi) = (config.demand_min_mbps, config.demand_max_mbps);
    (0..config.num_users)
        .map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) })
        .collect()
}

/// RRH on/off pattern plus the current per-user demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub rrh_active: Vec<bool>,
    pub demands_mbps: Vec<f64>,
}

impl SystemState {
    /// Raw features `[y_1..y_m, d_1..d_n]` with demands in Mbps.
    pub fn features(&self) -> Vec<f64> {
        state_features(&self.rrh_active, &self.demands_mbps)
    }

    /// Features with demands divided by `demand_max_mbps`, as fed to the Q-network.
    pub fn scaled_features(&self, config: &NetworkConfig) -> Vec<f64> {
        let scale = if config.demand_max_mbps > 0.0 {
            1.0 / config.demand_max_mbps
        } else {
            1.0
        };
        self.rrh_active
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .chain(self.demands_mbps.iter().map(|d| d * scale))
            .collect()
    }

    pub fn num_active(&self) -> usize {
        self.rrh_active.iter().filter(|&&b| b).count()
    }
}

pub fn state_features(pattern: &[bool], demands_mbps: &[f64]) -> Vec<f64> {
    pattern
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .chain(demands_mbps.iter().copied())
        .collect()
}

pub fn pattern_bits(pattern: &[bool]) -> String {
    pattern.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn path_loss_values() {
        assert_eq!(path_loss_db(1.0).unwrap(), 148.1);
        assert!((path_loss_db(0.1).unwrap() - 110.5).abs() < 1e-12);
        assert!((path_loss_db(0.8).unwrap() - 144.456).abs() < 1e-3);
        assert!(path_loss_db(0.0).is_err());
        assert!(path_loss_db(-1.0).is_err());
    }

    #[test]
    fn coefficient_without_shadowing() {
        let h = channel_coefficient(0.1, 9.0, 0.0, Complex64::new(1.0, 0.0)).unwrap();
        let expected = 10f64.powf(-110.5 / 20.0) * 10f64.powf(9.0 / 20.0);
        assert!(rel(h.norm(), expected) < 1e-12);
        assert!(rel(h.norm(), 8.41e-6) < 1e-3);
    }

    #[test]
    fn channel_is_deterministic_per_seed() {
        let cfg = NetworkConfig::default();
        let a = sample_channel(&cfg, &mut seeded(7, 1)).unwrap();
        let b = sample_channel(&cfg, &mut seeded(7, 1)).unwrap();
        let c = sample_channel(&cfg, &mut seeded(8, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.gains().shape(), (8, 4));
    }

    #[test]
    fn mean_gain_matches_path_loss() {
        let cfg = NetworkConfig {
            shadowing_std_db: 0.0,
            ..NetworkConfig::default()
        };
        let mut rng = seeded(3, 0);
        let draws = 100_000;
        let mean = (0..draws)
            .map(|_| sample_gain_at(&cfg, 400.0, &mut rng).unwrap().norm_sqr())
            .sum::<f64>()
            / draws as f64;
        let expected =
            10f64.powf(-path_loss_db(0.4).unwrap() / 10.0) * db_to_linear(cfg.antenna_gain_db);
        assert!(rel(mean, expected) < 0.02, "mean {mean} vs {expected}");
    }

    #[test]
    fn sinr_cases() {
        let noise: f64 = 2.0;
        // single user, |h w|^2 = noise
        let ch = ChannelRealization::new(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))).unwrap();
        let w = DMatrix::from_element(1, 1, Complex64::new(noise.sqrt(), 0.0));
        assert!((compute_sinr(&w, &ch, 0, noise).unwrap() - 1.0).abs() < 1e-12);
        let zero = DMatrix::zeros(1, 1);
        assert_eq!(compute_sinr(&zero, &ch, 0, noise).unwrap(), 0.0);

        // two users on one RRH: |h1 w1|^2 = 4 noise, |h1 w2|^2 = noise
        let ch = ChannelRealization::new(DMatrix::from_row_slice(
            1,
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)],
        ))
        .unwrap();
        let w = DMatrix::from_row_slice(
            1,
            2,
            &[
                Complex64::new((4.0 * noise).sqrt(), 0.0),
                Complex64::new(0.0, noise.sqrt()),
            ],
        );
        assert!((compute_sinr(&w, &ch, 0, noise).unwrap() - 2.0).abs() < 1e-12);
        assert!(compute_sinr(&DMatrix::zeros(2, 2), &ch, 0, noise).is_err());
    }

    #[test]
    fn rate_cases() {
        let cfg = NetworkConfig::default();
        assert_eq!(compute_rate(0.0, &cfg), 0.0);
        assert!((compute_rate(3.0, &cfg) - 20.0).abs() < 1e-12);
        assert!((compute_rate(15.0, &cfg) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn rrh_power_cases() {
        let cfg = NetworkConfig::default();
        assert!((rrh_power(true, 0.5, &cfg).unwrap() - 8.8).abs() < 1e-12);
        assert_eq!(rrh_power(false, 0.0, &cfg).unwrap(), 4.3);
        assert_eq!(rrh_power(true, 0.0, &cfg).unwrap(), 6.8);
        assert!(matches!(rrh_power(false, 0.1, &cfg), Err(Error::Contract(_))));
    }

    #[test]
    fn total_power_cases() {
        let cfg = NetworkConfig::default();
        let off = vec![false; 8];
        let on = vec![true; 8];
        let p = total_power(&off, &off, &[0.0; 8], &cfg).unwrap();
        assert!((p.total_w - 34.4).abs() < 1e-9);
        let p = total_power(&on, &on, &[0.0; 8], &cfg).unwrap();
        assert!((p.total_w - 54.4).abs() < 1e-9);
        assert_eq!(p.transition_w, 0.0);

        let cfg2 = NetworkConfig {
            num_rrhs: 2,
            ..cfg.clone()
        };
        let p = total_power(&[true, false], &[true, true], &[0.25, 0.0], &cfg2).unwrap();
        assert!((p.transmit_w - 1.0).abs() < 1e-12);
        assert!((p.state_w - 13.6).abs() < 1e-12);
        assert_eq!(p.transition_w, 2.0);
        assert!((p.total_w - 16.6).abs() < 1e-12);

        assert!(matches!(
            total_power(&on, &on, &[0.0; 3], &cfg),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            total_power(&on[..3], &on, &[0.0; 8], &cfg),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn demands_sampling() {
        let fixed = NetworkConfig {
            demand_min_mbps: 20.0,
            demand_max_mbps: 20.0,
            ..NetworkConfig::default()
        };
        assert!(sample_demands(&fixed, &mut seeded(1, 0)).iter().all(|&d| d == 20.0));

        let cfg = NetworkConfig::default();
        assert_eq!(
            sample_demands(&cfg, &mut seeded(5, 2)),
            sample_demands(&cfg, &mut seeded(5, 2))
        );
        let mut rng = seeded(9, 2);
        let one_user = NetworkConfig {
            num_users: 1,
            ..cfg
        };
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample_demands(&one_user, &mut rng)[0]).sum::<f64>() / n as f64;
        assert!((mean - 30.0).abs() < 0.2, "mean {mean}");
    }

    #[test]
    fn config_loader_converts_and_validates() {
        let cfg = NetworkConfig::from_toml_str("noise_power_dbm = -102.0\n").unwrap();
        assert!(rel(cfg.noise_power_w, 10f64.powf(-13.2)) < 1e-12);
        assert!(rel(cfg.noise_power_w, 6.31e-14) < 1e-3);
        assert_eq!(cfg, NetworkConfig::default());

        let err = NetworkConfig::from_toml_str("sleep_power_w = 7.0\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "sleep_power_w"));
        let err = NetworkConfig::from_toml_str("amplifier_efficiency = 1.5\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "amplifier_efficiency"));
        let err = NetworkConfig::from_toml_str("demand_min_mbps = 50.0\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "demand_max_mbps"));
        let err = NetworkConfig::from_toml_str("num_rrhs = 0\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "num_rrhs"));
        assert!(NetworkConfig::from_toml_str("bogus = 1\n").is_err());
    }

    #[test]
    fn scaled_features_layout() {
        let cfg = NetworkConfig {
            num_rrhs: 2,
            num_users: 2,
            ..NetworkConfig::default()
        };
        let s = SystemState {
            rrh_active: vec![true, false],
            demands_mbps: vec![20.0, 40.0],
        };
        assert_eq!(s.features(), vec![1.0, 0.0, 20.0, 40.0]);
        assert_eq!(s.scaled_features(&cfg), vec![1.0, 0.0, 0.5, 1.0]);
    }
}
