//! Bob's passive-basis BB84 receiver with gated threshold detectors, and the
//! passive-tap eavesdropper with ideal photon-number-resolving detectors.
//!
//! Detector labels are relative to Alice's state: in the preparation basis,
//! detector 0 is the one her polarization maps onto.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{check_range, Error, Result};
use crate::photon_stats::{poisson_count, PhotonDistribution};

/// Gated single-photon detector pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub efficiency: f64,
    /// Dark-count probability per gate, per detector.
    pub dark_count: f64,
}

impl DetectorSpec {
    /// Calibrated InGaAs APD working point.
    ///
    /// Chosen so that plain BB84 at `mu = 1.5` over 0.2 dB/km fiber loses key
    /// (yield below `1e-6`) at 145 km. See `aqkd calibrate`.
    pub const CALIBRATED: DetectorSpec = DetectorSpec {
        efficiency: 0.20,
        dark_count: 1.6e-5,
    };

    /// Superconducting-nanowire class detector used by the long-range
    /// scenario.
    pub const SUPERCONDUCTING: DetectorSpec = DetectorSpec {
        efficiency: 0.7,
        dark_count: 1e-7,
    };

    pub fn new(efficiency: f64, dark_count: f64) -> Result<Self> {
        let s = Self {
            efficiency,
            dark_count,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::param(
                "eta_d",
                format!("{} is outside (0, 1]", self.efficiency),
            ));
        }
        if !(self.dark_count >= 0.0 && self.dark_count < 1.0) {
            return Err(Error::param(
                "p_dark",
                format!("{} is outside [0, 1)", self.dark_count),
            ));
        }
        Ok(())
    }
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self::CALIBRATED
    }
}

/// Basis of a detection, relative to the basis Alice prepared in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelativeBasis {
    Preparation = 0,
    Conjugate = 1,
}

/// Clicks of Bob's four detectors for one gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BobOutcome {
    /// `clicks[basis][detector]`, basis 0 = preparation, 1 = conjugate.
    pub clicks: [[bool; 2]; 2],
    pub detected_photons: u64,
    /// Photons that reached Bob but were not absorbed, per mode.
    pub undetected_signal: u64,
    pub undetected_orth: u64,
}

impl BobOutcome {
    pub fn any_click(&self) -> bool {
        self.clicks.iter().flatten().any(|&c| c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedEvent {
    pub basis: RelativeBasis,
    /// Detector index within `basis`.
    pub detector: u8,
    pub double_click: bool,
}

/// One sifted bit as Eve sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveBit {
    pub value: bool,
    /// Tied photo-counts; `value` is then a coin flip.
    pub ambiguous: bool,
}

/// How Eve's receiver splits the photons she collects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EveReceiver {
    /// Passive 50/50 basis choice per photon; only the photons that land in
    /// the sifted basis count.
    #[default]
    Passive,
    /// Every tapped photon is analyzed in the sifted basis.
    SiftedBasis,
}

impl EveReceiver {
    /// Fraction of tapped photons reaching the sifted-basis detectors.
    pub fn basis_fraction(self) -> f64 {
        match self {
            EveReceiver::Passive => 0.5,
            EveReceiver::SiftedBasis => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EveReceiver::Passive => "passive",
            EveReceiver::SiftedBasis => "sifted-basis",
        }
    }
}

impl std::str::FromStr for EveReceiver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "passive" => Ok(Self::Passive),
            "sifted-basis" => Ok(Self::SiftedBasis),
            _ => Err(Error::param(
                "eve_receiver",
                format!("`{s}` (expected passive or sifted-basis)"),
            )),
        }
    }
}

#[inline]
fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Routes one absorbed photon; `aligned` is true for a signal-mode photon.
#[inline]
fn route_photon<R: Rng + ?Sized>(aligned: bool, p_pol: f64, rng: &mut R) -> (usize, usize) {
    if rng.random::<bool>() {
        (
            RelativeBasis::Conjugate as usize,
            rng.random::<bool>() as usize,
        )
    } else {
        let misrouted = rng.random::<f64>() < p_pol;
        let det = if aligned == misrouted { 1 } else { 0 };
        (RelativeBasis::Preparation as usize, det)
    }
}

#[inline]
fn add_dark_counts<R: Rng + ?Sized>(clicks: &mut [[bool; 2]; 2], p_dark: f64, rng: &mut R) {
    if p_dark <= 0.0 {
        return;
    }
    for c in clicks.iter_mut().flatten() {
        if rng.random::<f64>() < p_dark {
            *c = true;
        }
    }
}

/// Photon-by-photon detection of a pulse that has already crossed the fiber.
pub fn bob_detect<R: Rng + ?Sized>(
    n_signal: u64,
    n_orth: u64,
    spec: &DetectorSpec,
    p_pol: f64,
    rng: &mut R,
) -> BobOutcome {
    let det_signal = binomial(n_signal, spec.efficiency, rng);
    let det_orth = binomial(n_orth, spec.efficiency, rng);
    let mut clicks = [[false; 2]; 2];
    for aligned in std::iter::repeat_n(true, det_signal as usize)
        .chain(std::iter::repeat_n(false, det_orth as usize))
    {
        let (b, d) = route_photon(aligned, p_pol, rng);
        clicks[b][d] = true;
    }
    add_dark_counts(&mut clicks, spec.dark_count, rng);
    BobOutcome {
        clicks,
        detected_photons: det_signal + det_orth,
        undetected_signal: n_signal - det_signal,
        undetected_orth: n_orth - det_orth,
    }
}

/// Mean absorbed photons per detector for field intensities already scaled by
/// the end-to-end efficiency, indexed like [`BobOutcome::clicks`].
#[inline]
pub fn detector_means(signal: f64, orth: f64, p_pol: f64) -> [[f64; 2]; 2] {
    let conj = 0.25 * (signal + orth);
    [
        [
            0.5 * (signal * (1.0 - p_pol) + orth * p_pol),
            0.5 * (signal * p_pol + orth * (1.0 - p_pol)),
        ],
        [conj, conj],
    ]
}

/// Detection of a pulse whose field intensity at Bob's detectors is known.
///
/// Given the intensity, absorbed photons per detector are independent
/// Poisson variables, so this has the same law as [`bob_detect`] applied to
/// counts drawn from that intensity. Only `clicks` and `detected_photons` are
/// filled.
pub fn bob_detect_field<R: Rng + ?Sized>(
    signal: f64,
    orth: f64,
    p_dark: f64,
    p_pol: f64,
    rng: &mut R,
) -> BobOutcome {
    let mut out = BobOutcome::default();
    let total = signal + orth;
    if total > 0.0 {
        // one uniform decides the common no-photon case
        let u: f64 = rng.random();
        let p0 = (-total).exp();
        if u >= p0 {
            let k = if total < 30.0 {
                let mut p = p0;
                let mut cdf = p0;
                let mut k = 0u64;
                while u >= cdf && p > 0.0 {
                    k += 1;
                    p *= total / k as f64;
                    cdf += p;
                }
                k.max(1)
            } else {
                loop {
                    let k = poisson_count(total, rng);
                    if k > 0 {
                        break k;
                    }
                }
            };
            let means = detector_means(signal, orth, p_pol);
            for _ in 0..k {
                let mut x = rng.random::<f64>() * total;
                'route: for (b, row) in means.iter().enumerate() {
                    for (d, m) in row.iter().enumerate() {
                        if x < *m || (b == 1 && d == 1) {
                            out.clicks[b][d] = true;
                            break 'route;
                        }
                        x -= m;
                    }
                }
            }
            out.detected_photons = k;
        }
    }
    if p_dark > 0.0 {
        let none = (1.0 - p_dark).powi(4);
        let v: f64 = rng.random();
        if v >= none {
            // at least one dark count: draw the pattern conditionally
            let mut seen = false;
            for i in 0..4 {
                let p = if seen {
                    p_dark
                } else {
                    p_dark / (1.0 - (1.0 - p_dark).powi(4 - i))
                };
                if rng.random::<f64>() < p {
                    seen = true;
                    out.clicks[(i / 2) as usize][(i % 2) as usize] = true;
                }
            }
        }
    }
    out
}

/// Collapses a click pattern to one event: a basis chosen uniformly when both
/// bases fired, and a coin-flip bit on a double click within the basis.
pub fn resolve_event<R: Rng + ?Sized>(outcome: &BobOutcome, rng: &mut R) -> Option<ResolvedEvent> {
    let fired = |b: usize| outcome.clicks[b][0] || outcome.clicks[b][1];
    let basis = match (fired(0), fired(1)) {
        (false, false) => return None,
        (true, false) => RelativeBasis::Preparation,
        (false, true) => RelativeBasis::Conjugate,
        (true, true) => {
            if rng.random::<bool>() {
                RelativeBasis::Conjugate
            } else {
                RelativeBasis::Preparation
            }
        }
    };
    let [d0, d1] = outcome.clicks[basis as usize];
    let (detector, double_click) = match (d0, d1) {
        (true, true) => (rng.random::<bool>() as u8, true),
        (true, false) => (0, false),
        _ => (1, false),
    };
    Some(ResolvedEvent {
        basis,
        detector,
        double_click,
    })
}

/// Thins the photons Eve tapped down to those her receiver analyzes in the
/// sifted basis.
pub fn eve_tap<R: Rng + ?Sized>(
    receiver: EveReceiver,
    tapped_signal: u64,
    tapped_orth: u64,
    rng: &mut R,
) -> (u64, u64) {
    match receiver {
        EveReceiver::SiftedBasis => (tapped_signal, tapped_orth),
        EveReceiver::Passive => (
            binomial(tapped_signal, 0.5, rng),
            binomial(tapped_orth, 0.5, rng),
        ),
    }
}

/// Eve's bit from her two sifted-basis photo-counts: the detector with the
/// larger count wins, a tie is a coin flip.
pub fn eve_measure<R: Rng + ?Sized>(
    signal_count: u64,
    orth_count: u64,
    alice_bit: bool,
    rng: &mut R,
) -> EveBit {
    use std::cmp::Ordering::*;
    match signal_count.cmp(&orth_count) {
        Greater => EveBit {
            value: alice_bit,
            ambiguous: false,
        },
        Less => EveBit {
            value: !alice_bit,
            ambiguous: false,
        },
        Equal => EveBit {
            value: rng.random(),
            ambiguous: true,
        },
    }
}

/// `1 - (1 - p_d) P_vac(thin(dist, eta_d))` for one detector fed by `dist`.
pub fn analytic_click_probability(dist: &PhotonDistribution, spec: &DetectorSpec) -> Result<f64> {
    spec.validate()?;
    let at_detector = dist.thin(spec.efficiency)?;
    Ok(1.0 - (1.0 - spec.dark_count) * at_detector.vacuum_probability())
}

/// Validates a polarization-misrouting probability.
pub fn check_p_pol(p_pol: f64) -> Result<f64> {
    check_range("p_pol", p_pol, 0.0, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn rng(seed: u64) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(seed)
    }

    #[test]
    fn empty_pulse_no_darks_never_clicks() {
        let spec = DetectorSpec::new(0.2, 0.0).unwrap();
        let mut r = rng(1);
        for _ in 0..1000 {
            let o = bob_detect(0, 0, &spec, 0.01, &mut r);
            assert!(!o.any_click());
            assert_eq!(o.detected_photons, 0);
            assert_eq!(resolve_event(&o, &mut r), None);
        }
    }

    #[test]
    fn bright_pulse_saturates_correct_detector() {
        let spec = DetectorSpec::new(1.0, 0.0).unwrap();
        let mut r = rng(2);
        for _ in 0..100 {
            let o = bob_detect(200, 0, &spec, 0.0, &mut r);
            assert!(o.clicks[0][0]);
            assert!(!o.clicks[0][1]);
        }
    }

    #[test]
    fn conservation_inside_receiver() {
        let spec = DetectorSpec::new(0.3, 1e-3).unwrap();
        let mut r = rng(3);
        for n in 0..200u64 {
            let o = bob_detect(n, n / 3, &spec, 0.01, &mut r);
            assert_eq!(
                o.detected_photons + o.undetected_signal + o.undetected_orth,
                n + n / 3
            );
        }
    }

    #[test]
    fn resolve_rules() {
        let mut r = rng(4);
        let mut o = BobOutcome::default();
        o.clicks[0][0] = true;
        assert_eq!(
            resolve_event(&o, &mut r),
            Some(ResolvedEvent {
                basis: RelativeBasis::Preparation,
                detector: 0,
                double_click: false
            })
        );
        o.clicks[0][1] = true;
        let mut ones = 0;
        for _ in 0..10_000 {
            let e = resolve_event(&o, &mut r).unwrap();
            assert_eq!(e.basis, RelativeBasis::Preparation);
            assert!(e.double_click);
            ones += e.detector as u32;
        }
        assert!((ones as f64 - 5000.0).abs() < 4.0 * 50.0);
    }

    #[test]
    fn eve_rule() {
        let mut r = rng(5);
        assert_eq!(
            eve_measure(3, 1, true, &mut r),
            EveBit {
                value: true,
                ambiguous: false
            }
        );
        assert_eq!(
            eve_measure(1, 3, true, &mut r),
            EveBit {
                value: false,
                ambiguous: false
            }
        );
        assert!(eve_measure(2, 2, false, &mut r).ambiguous);
        assert!(eve_measure(0, 0, false, &mut r).ambiguous);
    }

    #[test]
    fn analytic_click_examples() {
        let vac = PhotonDistribution::vacuum();
        let s0 = DetectorSpec::new(0.2, 0.0).unwrap();
        assert_eq!(analytic_click_probability(&vac, &s0).unwrap(), 0.0);
        let s1 = DetectorSpec::new(0.2, 1e-5).unwrap();
        assert!((analytic_click_probability(&vac, &s1).unwrap() - 1e-5).abs() < 1e-15);
        let be = PhotonDistribution::bose_einstein(0.15).unwrap();
        let p = analytic_click_probability(&be, &s0).unwrap();
        assert!((p - (1.0 - 1.0 / 1.03)).abs() < 1e-15);
        assert!((p - 0.029126).abs() < 1e-6);
    }

    #[test]
    fn detector_spec_bounds() {
        assert!(DetectorSpec::new(0.0, 0.0).is_err());
        assert!(DetectorSpec::new(0.5, 1.0).is_err());
        assert!(DetectorSpec::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn receiver_parse() {
        assert_eq!(
            "passive".parse::<EveReceiver>().unwrap(),
            EveReceiver::Passive
        );
        assert!("quantum-memory".parse::<EveReceiver>().is_err());
    }
}
