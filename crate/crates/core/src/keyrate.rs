//! Secret-key accounting: error-correction leakage, Eve's information, the
//! one-way secret fraction and the capacity ceiling of a lossy channel.

use crate::distillation::DistillationOutcome;
use crate::error::{Error, Result};

/// Default error-correction inefficiency.
pub const DEFAULT_F_EC: f64 = 1.16;

/// `h2(p)` in bits; `h2(0) = h2(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Eve's information per key bit: ambiguous bits carry none, unambiguous bits
/// are a binary symmetric channel with error rate `eve_ber`.
pub fn eve_information(ambiguous_fraction: f64, eve_ber: f64) -> f64 {
    (1.0 - ambiguous_fraction) * (1.0 - binary_entropy(eve_ber))
}

/// `max(0, 1 - f_ec h2(e_B) - I_E)`.
pub fn secret_fraction(bob_ber: f64, ambiguous_fraction: f64, eve_ber: f64, f_ec: f64) -> f64 {
    let r = 1.0 - f_ec * binary_entropy(bob_ber) - eve_information(ambiguous_fraction, eve_ber);
    r.clamp(0.0, 1.0)
}

/// Secret bits per transmitted pulse for a distilled key produced from
/// `pulses` pulses, using error rates measured on that key.
pub fn secret_yield(outcome: &DistillationOutcome, pulses: u64, f_ec: f64) -> f64 {
    if outcome.is_empty() || pulses == 0 {
        log::warn!("empty distilled key; secret yield is 0");
        return 0.0;
    }
    let s = outcome.stats();
    let r = secret_fraction(s.bob_ber(), s.eve_ambiguous_fraction(), s.eve_ber(), f_ec);
    outcome.len() as f64 / pulses as f64 * r
}

/// Loose capacity bound of a pure-loss channel, `log2((1 + eta) / (1 - eta))`
/// bits per pulse.
pub fn takeoka_bound(eta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::param("eta", format!("{eta} must lie in [0, 1)")));
    }
    Ok(((1.0 + eta) / (1.0 - eta)).log2())
}

/// Which transmittance the capacity bound is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TakeokaConvention {
    /// Fiber only.
    Channel,
    /// Fiber times detector efficiency.
    #[default]
    ChannelTimesDetector,
}

impl TakeokaConvention {
    pub fn transmittance(self, fiber: f64, detector: f64) -> f64 {
        match self {
            Self::Channel => fiber,
            Self::ChannelTimesDetector => fiber * detector,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Channel => "channel",
            Self::ChannelTimesDetector => "channel-times-detector",
        }
    }
}

impl std::str::FromStr for TakeokaConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "channel" => Ok(Self::Channel),
            "channel-times-detector" => Ok(Self::ChannelTimesDetector),
            _ => Err(Error::param(
                "takeoka_convention",
                format!("`{s}` (expected channel or channel-times-detector)"),
            )),
        }
    }
}

/// One point of a yield-versus-distance curve.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldPoint {
    pub length_km: f64,
    pub gain: f64,
    pub mu: f64,
    pub rounds: u32,
    pub pulses: u64,
    /// Sifted bits per pulse.
    pub sift_yield: f64,
    pub sifted_ber: f64,
    pub distilled_yield: f64,
    pub distilled_ber: f64,
    pub eve_ambiguous: f64,
    pub eve_ber: f64,
    pub secret_fraction: f64,
    /// Secret bits per pulse.
    pub secret_yield: f64,
    /// Approximate one-sigma error on `secret_yield`.
    pub secret_yield_stderr: f64,
    pub takeoka_bound: f64,
}

/// Delta-method standard error of `distilled_yield * r` from the sample sizes
/// behind each measured rate.
pub fn yield_stderr(
    pulses: u64,
    distilled_len: usize,
    bob_ber: f64,
    ambiguous_fraction: f64,
    eve_ber: f64,
    f_ec: f64,
) -> f64 {
    if pulses == 0 || distilled_len == 0 {
        return 0.0;
    }
    let n = pulses as f64;
    let k = distilled_len as f64;
    let d = k / n;
    let r = secret_fraction(bob_ber, ambiguous_fraction, eve_ber, f_ec);
    if r == 0.0 {
        // clamped region: the yield is pinned at zero locally
        return 0.0;
    }
    let dh = |p: f64| {
        let p = p.clamp(0.5 / k, 1.0 - 0.5 / k);
        ((1.0 - p) / p).log2()
    };
    let var_d = d * (1.0 - d) / n;
    let var_eb = bob_ber * (1.0 - bob_ber) / k;
    let var_delta = ambiguous_fraction * (1.0 - ambiguous_fraction) / k;
    let unamb = (k * (1.0 - ambiguous_fraction)).max(1.0);
    let var_ee = eve_ber * (1.0 - eve_ber) / unamb;
    let dr_eb = f_ec * dh(bob_ber);
    let dr_delta = 1.0 - binary_entropy(eve_ber);
    let dr_ee = (1.0 - ambiguous_fraction) * dh(eve_ber);
    let var_r = dr_eb * dr_eb * var_eb + dr_delta * dr_delta * var_delta + dr_ee * dr_ee * var_ee;
    (r * r * var_d + d * d * var_r).sqrt()
}
