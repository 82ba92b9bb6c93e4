//! Source, amplifier, filter, fiber and polarization parameters, and the
//! per-pulse two-mode state they produce.

use crate::error::{check_range, Error, Result};
use crate::photon_stats::{ase_photons, PhotonDistribution};

/// Representative single-mode fiber loss at 1550 nm.
pub const SMF_ATTENUATION_DB_PER_KM: f64 = 0.2;
/// Ultra-low-loss fiber preset.
pub const ULTRA_LOW_LOSS_DB_PER_KM: f64 = 0.17;

/// Phase-insensitive optical amplifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierSpec {
    pub gain: f64,
    /// `chi >= 1`; 1 is the quantum-limited 3 dB noise figure.
    pub excess_noise: f64,
}

impl AmplifierSpec {
    pub fn new(gain: f64, excess_noise: f64) -> Result<Self> {
        let spec = Self { gain, excess_noise };
        spec.validate()?;
        Ok(spec)
    }

    /// Unity gain, no amplifier in the path.
    pub fn none() -> Self {
        Self {
            gain: 1.0,
            excess_noise: 1.0,
        }
    }

    pub fn quantum_limited(gain: f64) -> Result<Self> {
        Self::new(gain, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gain.is_finite() || self.gain < 1.0 {
            return Err(Error::param("gain", format!("{} must be >= 1", self.gain)));
        }
        if !self.excess_noise.is_finite() || self.excess_noise < 1.0 {
            return Err(Error::param(
                "excess_noise",
                format!("{} must be >= 1", self.excess_noise),
            ));
        }
        Ok(())
    }

    /// Mean ASE photons per polarization mode, `chi (G - 1)`.
    pub fn ase_mean(&self) -> f64 {
        ase_photons(self.gain, self.excess_noise)
    }
}

impl Default for AmplifierSpec {
    fn default() -> Self {
        Self::none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
}

impl FiberSpec {
    pub fn new(length_km: f64, attenuation_db_per_km: f64) -> Result<Self> {
        let spec = Self {
            length_km,
            attenuation_db_per_km,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn smf(length_km: f64) -> Result<Self> {
        Self::new(length_km, SMF_ATTENUATION_DB_PER_KM)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.length_km.is_finite() || self.length_km < 0.0 {
            return Err(Error::param(
                "length_km",
                format!("{} must be >= 0", self.length_km),
            ));
        }
        if !self.attenuation_db_per_km.is_finite() || self.attenuation_db_per_km <= 0.0 {
            return Err(Error::param(
                "attenuation",
                format!("{} dB/km must be > 0", self.attenuation_db_per_km),
            ));
        }
        Ok(())
    }

    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.attenuation_db_per_km * self.length_km / 10.0)
    }
}

impl Default for FiberSpec {
    fn default() -> Self {
        Self {
            length_km: 0.0,
            attenuation_db_per_km: SMF_ATTENUATION_DB_PER_KM,
        }
    }
}

/// Matched optical filters at both ends of the link.
///
/// Out-of-band ASE and Raman noise are taken as fully suppressed, so the
/// filter only has to be configured for single longitudinal mode operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub single_longitudinal_mode: bool,
    pub out_of_band_rejection_db: f64,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.single_longitudinal_mode {
            return Err(Error::param(
                "filter",
                "only single-longitudinal-mode filtering is modeled",
            ));
        }
        if !self.out_of_band_rejection_db.is_finite() || self.out_of_band_rejection_db < 0.0 {
            return Err(Error::param(
                "out_of_band_rejection_db",
                format!("{} must be >= 0", self.out_of_band_rejection_db),
            ));
        }
        Ok(())
    }
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            single_longitudinal_mode: true,
            out_of_band_rejection_db: 30.0,
        }
    }
}

/// Per-photon misrouting at Bob's polarization analyzer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationSpec {
    pub error: f64,
}

impl PolarizationSpec {
    pub fn new(error: f64) -> Result<Self> {
        check_range("p_pol", error, 0.0, 0.5)?;
        Ok(Self { error })
    }

    pub fn validate(&self) -> Result<()> {
        check_range("p_pol", self.error, 0.0, 0.5).map(|_| ())
    }
}

impl Default for PolarizationSpec {
    fn default() -> Self {
        Self { error: 0.01 }
    }
}

/// The two polarization modes of one pulse: aligned with Alice's state, and
/// orthogonal to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePair {
    pub signal: PhotonDistribution,
    pub orth: PhotonDistribution,
}

impl ModePair {
    pub fn mean_photons(&self) -> f64 {
        self.signal.mean() + self.orth.mean()
    }

    /// Fraction of the mean photon number carried in Alice's polarization.
    /// An empty pulse is reported as perfectly polarized.
    pub fn fidelity(&self) -> f64 {
        let total = self.mean_photons();
        if total == 0.0 {
            1.0
        } else {
            self.signal.mean() / total
        }
    }
}

pub fn ase_mean(amp: &AmplifierSpec) -> f64 {
    amp.ase_mean()
}

/// State leaving Alice's amplifier for a Poisson source of mean `mu`.
pub fn amplified_state(mu: f64, amp: &AmplifierSpec) -> Result<ModePair> {
    amp.validate()?;
    let nsp = amp.ase_mean();
    if nsp == 0.0 {
        return Ok(ModePair {
            signal: PhotonDistribution::poisson(amp.gain * mu)?,
            orth: PhotonDistribution::vacuum(),
        });
    }
    Ok(ModePair {
        signal: PhotonDistribution::laguerre_gauss(amp.gain * mu, nsp)?,
        orth: PhotonDistribution::bose_einstein(nsp)?,
    })
}

pub fn transmittance(fiber: &FiberSpec) -> f64 {
    fiber.transmittance()
}

/// Applies a loss of transmittance `eta` to both modes.
pub fn propagate(state: &ModePair, eta: f64) -> Result<ModePair> {
    Ok(ModePair {
        signal: state.signal.thin(eta)?,
        orth: state.orth.thin(eta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ase_examples() {
        assert_eq!(ase_mean(&AmplifierSpec::none()), 0.0);
        assert_eq!(
            ase_mean(&AmplifierSpec::quantum_limited(16.0).unwrap()),
            15.0
        );
        let a = AmplifierSpec::quantum_limited(4.0 / 3.0).unwrap();
        assert!((ase_mean(&a) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ase_monotone_in_gain_and_noise() {
        let mut last = -1.0;
        for g in [1.0, 1.5, 2.0, 4.0, 16.0, 100.0] {
            let a = AmplifierSpec::new(g, 1.0).unwrap().ase_mean();
            assert!(a >= last);
            last = a;
        }
        let mut last = -1.0;
        for chi in [1.0, 1.2, 2.0, 5.0] {
            let a = AmplifierSpec::new(4.0, chi).unwrap().ase_mean();
            assert!(a >= last);
            last = a;
        }
    }

    #[test]
    fn unity_gain_is_plain_bb84_source() {
        let s = amplified_state(1.5, &AmplifierSpec::none()).unwrap();
        assert_eq!(s.signal, PhotonDistribution::Poisson { mean: 1.5 });
        assert_eq!(s.orth.mean(), 0.0);
        assert_eq!(s.fidelity(), 1.0);
    }

    #[test]
    fn high_gain_state() {
        let s = amplified_state(1.7, &AmplifierSpec::quantum_limited(16.0).unwrap()).unwrap();
        assert!((s.signal.mean() - 42.2).abs() < 1e-12);
        assert!((s.orth.mean() - 15.0).abs() < 1e-12);
        assert!((s.fidelity() - 42.2 / 57.2).abs() < 1e-12);
        assert!((s.fidelity() - 0.7378).abs() < 1e-4);

        let z = amplified_state(0.0, &AmplifierSpec::quantum_limited(16.0).unwrap()).unwrap();
        assert_eq!(z.fidelity(), 0.5);
        let a = z.signal.pmf_table(100);
        let b = PhotonDistribution::bose_einstein(15.0)
            .unwrap()
            .pmf_table(100);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn fiber_transmittance() {
        assert_eq!(FiberSpec::smf(0.0).unwrap().transmittance(), 1.0);
        assert!((FiberSpec::smf(100.0).unwrap().transmittance() - 0.01).abs() < 1e-15);
        assert!((FiberSpec::smf(250.0).unwrap().transmittance() - 1e-5).abs() < 1e-18);
        assert!(FiberSpec::new(-1.0, 0.2).is_err());
        assert!(FiberSpec::new(10.0, 0.0).is_err());
    }

    #[test]
    fn propagate_thins_both_modes_and_keeps_fidelity() {
        let s = amplified_state(1.7, &AmplifierSpec::quantum_limited(16.0).unwrap()).unwrap();
        assert_eq!(propagate(&s, 1.0).unwrap(), s);
        let p = propagate(&s, 0.01).unwrap();
        let (sig, noise) = p.signal.as_signal_noise();
        assert!((sig - 0.272).abs() < 1e-12 && (noise - 0.15).abs() < 1e-12);
        assert!((p.orth.mean() - 0.15).abs() < 1e-12);
        assert!((p.mean_photons() - 0.01 * s.mean_photons()).abs() < 1e-12);
        assert!((p.fidelity() - s.fidelity()).abs() < 1e-12);
    }

    #[test]
    fn filter_and_polarization_validation() {
        assert!(FilterSpec::default().validate().is_ok());
        let multi = FilterSpec {
            single_longitudinal_mode: false,
            ..FilterSpec::default()
        };
        assert!(multi.validate().is_err());
        assert!(PolarizationSpec::new(0.6).is_err());
        assert_eq!(PolarizationSpec::default().error, 0.01);
    }
}
