//! Photon-number statistics of weak-laser, thermal and amplified-coherent
//! light.
//!
//! All three laws are members of one family: the displaced-thermal
//! (Laguerre-Gauss) distribution with a coherent part `signal` and a thermal
//! part `noise`. Poisson is the `noise = 0` member and Bose-Einstein the
//! `signal = 0` member. The family is closed under binomial thinning, which is
//! how fiber loss and detector efficiency are modeled.
//!
//! Samplers work in the Glauber-Sudarshan P-representation: draw the complex
//! field amplitude, then a Poisson count with mean `|amplitude|^2`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{check_range, Error, Result};

/// Truncated tail mass never exceeds this at [`PhotonDistribution::cutoff`].
pub const TAIL_TOLERANCE: f64 = 1e-9;

/// Lower bound on the table cutoff, for low-mean laws where `mean + 20 sd`
/// leaves more than [`TAIL_TOLERANCE`] in the tail.
const MIN_CUTOFF: u64 = 30;

/// A photon count drawn from a [`PhotonDistribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CountSample(pub u64);

impl From<CountSample> for u64 {
    fn from(c: CountSample) -> u64 {
        c.0
    }
}

/// Single-mode photon-number law. Means are in photons per pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhotonDistribution {
    Poisson { mean: f64 },
    BoseEinstein { mean: f64 },
    LaguerreGauss { signal: f64, noise: f64 },
}

fn check_mean(name: &'static str, v: f64) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::param(name, format!("{v} is not a finite mean >= 0")));
    }
    Ok(v)
}

impl PhotonDistribution {
    pub fn poisson(mean: f64) -> Result<Self> {
        Ok(Self::Poisson {
            mean: check_mean("mean", mean)?,
        })
    }

    pub fn bose_einstein(mean: f64) -> Result<Self> {
        Ok(Self::BoseEinstein {
            mean: check_mean("mean", mean)?,
        })
    }

    pub fn laguerre_gauss(signal: f64, noise: f64) -> Result<Self> {
        Ok(Self::LaguerreGauss {
            signal: check_mean("signal", signal)?,
            noise: check_mean("noise", noise)?,
        })
    }

    /// The empty mode.
    pub fn vacuum() -> Self {
        Self::Poisson { mean: 0.0 }
    }

    /// `(signal, noise)` coordinates inside the Laguerre-Gauss family.
    pub fn as_signal_noise(&self) -> (f64, f64) {
        match *self {
            Self::Poisson { mean } => (mean, 0.0),
            Self::BoseEinstein { mean } => (0.0, mean),
            Self::LaguerreGauss { signal, noise } => (signal, noise),
        }
    }

    pub fn mean(&self) -> f64 {
        let (s, n) = self.as_signal_noise();
        s + n
    }

    pub fn variance(&self) -> f64 {
        let (s, n) = self.as_signal_noise();
        n * (n + 1.0) + s * (2.0 * n + 1.0)
    }

    /// Probability of an empty pulse.
    pub fn vacuum_probability(&self) -> f64 {
        let (s, n) = self.as_signal_noise();
        (-s / (1.0 + n)).exp() / (1.0 + n)
    }

    /// Largest `n` kept in a probability table: `mean + 20 sd`, but never below
    /// a fixed floor so that low-mean laws also meet [`TAIL_TOLERANCE`].
    pub fn cutoff(&self) -> u64 {
        let c = (self.mean() + 20.0 * self.variance().sqrt()).ceil() as u64;
        c.max(MIN_CUTOFF)
    }

    /// `P(n)` for a single `n`.
    pub fn pmf(&self, n: u64) -> f64 {
        let table = self.pmf_table(n as usize);
        table[n as usize]
    }

    /// `P(0) ..= P(max_n)`.
    ///
    /// Evaluated as `C t^n L_n(-x)` through the three-term Laguerre
    /// recurrence, which is forward-stable for a negative argument. The
    /// running value is rescaled to keep it inside the `f64` range.
    pub fn pmf_table(&self, max_n: usize) -> Vec<f64> {
        let (s, n) = self.as_signal_noise();
        let t = n / (1.0 + n);
        let b = s / ((1.0 + n) * (1.0 + n));
        let ln_c = -s / (1.0 + n) - (1.0 + n).ln();

        let mut out = Vec::with_capacity(max_n + 1);
        // r_k = t^k L_k(-x) * exp(-log_scale)
        let mut log_scale = 0.0_f64;
        let mut prev = 0.0_f64;
        let mut cur = 1.0_f64;
        out.push(ln_c.exp());
        for k in 0..max_n {
            let kf = k as f64;
            let next = ((t * (2.0 * kf + 1.0) + b) * cur - t * t * kf * prev) / (kf + 1.0);
            prev = cur;
            cur = next;
            if cur > 1e150 {
                prev /= 1e150;
                cur /= 1e150;
                log_scale += 1e150_f64.ln();
            } else if cur < 1e-150 && cur > 0.0 {
                prev *= 1e150;
                cur *= 1e150;
                log_scale -= 1e150_f64.ln();
            }
            let p = if cur > 0.0 {
                (ln_c + log_scale + cur.ln()).exp()
            } else {
                0.0
            };
            out.push(p.clamp(0.0, 1.0));
        }
        out
    }

    /// Binomial photon survival with probability `eta`.
    pub fn thin(&self, eta: f64) -> Result<Self> {
        let eta = check_range("transmittance", eta, 0.0, 1.0)?;
        Ok(match *self {
            Self::Poisson { mean } => Self::Poisson { mean: mean * eta },
            Self::BoseEinstein { mean } => Self::BoseEinstein { mean: mean * eta },
            Self::LaguerreGauss { signal, noise } => Self::LaguerreGauss {
                signal: signal * eta,
                noise: noise * eta,
            },
        })
    }

    /// Draw a field intensity `|sqrt(signal) + z|^2`, `z ~ CN(0, noise)`.
    pub fn sample_intensity<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (s, n) = self.as_signal_noise();
        field_intensity(s.sqrt(), n, rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CountSample {
        CountSample(poisson_count(self.sample_intensity(rng), rng))
    }
}

/// Intensity of a coherent amplitude `amplitude` (real, phase irrelevant for
/// counting) plus circular complex Gaussian noise of mean-square `noise`.
#[inline]
pub fn field_intensity<R: Rng + ?Sized>(amplitude: f64, noise: f64, rng: &mut R) -> f64 {
    if noise <= 0.0 {
        return amplitude * amplitude;
    }
    if amplitude == 0.0 {
        let e: f64 = Exp1.sample(rng);
        return noise * e;
    }
    let sd = (noise / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    let x = amplitude + sd * re;
    let y = sd * im;
    x * x + y * y
}

/// Poisson count with mean `lambda`; zero for a non-positive mean.
#[inline]
pub fn poisson_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 30.0 {
        // inversion
        let u: f64 = rng.random();
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u >= cdf && p > 0.0 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
        }
        return k;
    }
    let d = Poisson::new(lambda).expect("finite positive Poisson mean");
    let x: f64 = d.sample(rng);
    x as u64
}

/// Amplified-spontaneous-emission mean per mode, `chi (G - 1)`.
pub fn ase_photons(gain: f64, excess_noise: f64) -> f64 {
    excess_noise * (gain - 1.0)
}

/// Joint per-pulse counts `(signal-mode, orthogonal-mode)` of a Poisson
/// source of mean `mu` after a phase-insensitive amplifier.
pub fn sample_amplified_pair<R: Rng + ?Sized>(
    mu: f64,
    gain: f64,
    excess_noise: f64,
    rng: &mut R,
) -> Result<(CountSample, CountSample)> {
    check_mean("mu", mu)?;
    if !gain.is_finite() || gain < 1.0 {
        return Err(Error::param("gain", format!("{gain} must be >= 1")));
    }
    if !excess_noise.is_finite() || excess_noise < 1.0 {
        return Err(Error::param(
            "excess_noise",
            format!("{excess_noise} must be >= 1"),
        ));
    }
    let nsp = ase_photons(gain, excess_noise);
    let is = field_intensity((gain * mu).sqrt(), nsp, rng);
    let io = field_intensity(0.0, nsp, rng);
    Ok((
        CountSample(poisson_count(is, rng)),
        CountSample(poisson_count(io, rng)),
    ))
}
