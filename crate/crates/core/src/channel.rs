//! Log-distance path loss with log-normal shadowing.
//!
//! Received power falls off as `A - 10 n log10(d)` with `A` the power
//! received one meter from the transmitter. Shadowing adds a zero-mean
//! Gaussian term in dB. Radios report RSSI through an integer register
//! that is shifted by a fixed offset.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Shortest range `rss_to_distance` will report, in meters.
pub const MIN_RANGE_M: f64 = 0.1;

/// Upper clamp on reported range, as a multiple of the reception radius.
pub const MAX_RANGE_RADII: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ChannelError {
    #[error("distance must be positive and finite, got {0}")]
    NonPositiveDistance(f64),
    #[error("path-loss exponent must be positive, got {0}")]
    NonPositiveExponent(f64),
    #[error("shadowing sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("reception radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("reference power must be finite, got {0}")]
    NonFiniteReference(f64),
}

/// Propagation constants for one environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Power in dBm received 1 m from the transmitter.
    pub a_dbm: f64,
    /// Path-loss exponent. In simulation this is the hidden true value.
    pub n_exp: f64,
    /// Shadowing standard deviation in dB.
    pub sigma_dbm: f64,
    /// Offset added to the raw register value to get dBm.
    pub rssi_offset_dbm: f64,
    /// Packets beyond this distance are not received at all.
    pub reception_radius_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            a_dbm: -45.0,
            n_exp: 2.0,
            sigma_dbm: 0.0,
            rssi_offset_dbm: -45.0,
            reception_radius_m: 30.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !self.a_dbm.is_finite() {
            return Err(ChannelError::NonFiniteReference(self.a_dbm));
        }
        if !(self.n_exp.is_finite() && self.n_exp > 0.0) {
            return Err(ChannelError::NonPositiveExponent(self.n_exp));
        }
        if !(self.sigma_dbm.is_finite() && self.sigma_dbm >= 0.0) {
            return Err(ChannelError::NegativeSigma(self.sigma_dbm));
        }
        if !(self.reception_radius_m.is_finite() && self.reception_radius_m > 0.0) {
            return Err(ChannelError::NonPositiveRadius(self.reception_radius_m));
        }
        Ok(())
    }

    pub fn with_sigma(mut self, sigma_dbm: f64) -> Self {
        self.sigma_dbm = sigma_dbm;
        self
    }

    pub fn with_exponent(mut self, n_exp: f64) -> Self {
        self.n_exp = n_exp;
        self
    }

    /// Range clamp derived from the reception radius.
    pub fn distance_bounds(&self) -> DistanceBounds {
        DistanceBounds::for_radius(self.reception_radius_m)
    }
}

/// Deterministic received power at distance `d_m`.
pub fn distance_to_rss(d_m: f64, params: &ChannelParams) -> Result<f64, ChannelError> {
    if !(d_m.is_finite() && d_m > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d_m));
    }
    Ok(params.a_dbm - 10.0 * params.n_exp * libm::log10(d_m))
}

/// Exact inverse of the path-loss law, without clamping.
///
/// Callers must ensure `n_exp > 0`.
pub fn invert_path_loss(rss_dbm: f64, a_dbm: f64, n_exp: f64) -> f64 {
    libm::pow(10.0, (a_dbm - rss_dbm) / (10.0 * n_exp))
}

/// Range interval that ranging results are clamped into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBounds {
    pub min_m: f64,
    pub max_m: f64,
}

impl DistanceBounds {
    pub fn for_radius(reception_radius_m: f64) -> Self {
        Self {
            min_m: MIN_RANGE_M,
            max_m: MAX_RANGE_RADII * reception_radius_m,
        }
    }
}

/// Range recovered from an RSSI reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeEstimate {
    /// Clamped range in meters.
    pub distance_m: f64,
    /// Unclamped inverse.
    pub raw_m: f64,
    pub clamped: bool,
}

/// Range for an RSSI reading, clamped into `bounds`.
pub fn rss_to_distance(rss_dbm: f64, a_dbm: f64, n_exp: f64, bounds: DistanceBounds) -> RangeEstimate {
    let raw_m = invert_path_loss(rss_dbm, a_dbm, n_exp);
    // NaN falls through to the lower clamp
    let distance_m = if raw_m > bounds.max_m {
        bounds.max_m
    } else if raw_m >= bounds.min_m {
        raw_m
    } else {
        bounds.min_m
    };
    RangeEstimate {
        distance_m,
        raw_m,
        clamped: distance_m != raw_m,
    }
}

/// One received packet's signal strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssMeasurement {
    pub rss_dbm: f64,
    /// Integer dBm as seen through the RSSI register.
    pub register_dbm: i32,
}

impl RssMeasurement {
    pub fn from_rss(rss_dbm: f64) -> Self {
        Self {
            rss_dbm,
            register_dbm: quantize_dbm(rss_dbm),
        }
    }

    /// The value a receiver reports: the register reading when `quantized`,
    /// otherwise the real-valued power.
    pub fn reported_dbm(&self, quantized: bool) -> f64 {
        if quantized {
            f64::from(self.register_dbm)
        } else {
            self.rss_dbm
        }
    }
}

/// Outcome of one transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reception {
    Received(RssMeasurement),
    NoReception,
}

impl Reception {
    pub fn measurement(&self) -> Option<RssMeasurement> {
        match self {
            Reception::Received(m) => Some(*m),
            Reception::NoReception => None,
        }
    }
}

/// Integer dBm, rounding half away from zero.
pub fn quantize_dbm(rss_dbm: f64) -> i32 {
    libm::round(rss_dbm) as i32
}

/// Draws one noisy reception at distance `d_m`.
///
/// Exactly one standard-normal draw is consumed per received packet, whatever
/// the value of sigma, so streams line up across noise levels.
pub fn sample_rss<R: Rng + ?Sized>(d_m: f64, params: &ChannelParams, rng: &mut R) -> Result<Reception, ChannelError> {
    let mean = distance_to_rss(d_m, params)?;
    if d_m > params.reception_radius_m {
        return Ok(Reception::NoReception);
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(Reception::Received(RssMeasurement::from_rss(
        mean + params.sigma_dbm * z,
    )))
}

/// Converts a raw register reading to dBm.
pub fn register_to_rss(register_val: i32, params: &ChannelParams) -> f64 {
    f64::from(register_val) + params.rssi_offset_dbm
}

/// Arithmetic mean in the dBm domain.
pub fn mean_dbm(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    Some(samples.iter().sum::<f64>() / samples.len() as f64)
}
