//! One AQKD session: pulse generation, transmission, detection, sifting, the
//! passive tap, and the protocol transcript.
//!
//! Pulses are simulated in fixed-size shards. Shard `k` draws from its own
//! generator seeded from `(seed, k)`, and shard outputs are concatenated in
//! index order, so results do not depend on the number of worker threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Binomial, Distribution};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::distillation::{gad, DistillationOutcome, KeyStats, RejectionIndex, RoundStats};
use crate::error::{Error, Result};
use crate::keyrate::{binary_entropy, DEFAULT_F_EC};
use crate::measurement::{
    bob_detect, bob_detect_field, eve_measure, eve_tap, resolve_event, DetectorSpec, EveReceiver,
    RelativeBasis,
};
use crate::optical_path::{AmplifierSpec, FiberSpec, FilterSpec, PolarizationSpec};
use crate::photon_stats::{field_intensity, poisson_count};

/// Pulses per shard.
pub const SHARD_PULSES: u64 = 1 << 18;

/// Placeholder sizes for the messages whose content is not simulated.
pub const PA_FUNCTION_BITS: u64 = 256;
pub const AUTH_TAG_BITS: u64 = 128;

/// How a pulse's photons are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PulseKernel {
    /// Field intensity first, then per-detector and per-mode Poisson counts.
    #[default]
    Split,
    /// Every photon carried individually through fiber, receiver and tap.
    PerPhoton,
}

impl PulseKernel {
    pub fn name(self) -> &'static str {
        match self {
            PulseKernel::Split => "split",
            PulseKernel::PerPhoton => "per-photon",
        }
    }
}

impl std::str::FromStr for PulseKernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(Self::Split),
            "per-photon" => Ok(Self::PerPhoton),
            _ => Err(Error::param(
                "kernel",
                format!("`{s}` (expected split or per-photon)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    /// Mean photon number into Alice's amplifier.
    pub mu: f64,
    pub amplifier: AmplifierSpec,
    pub fiber: FiberSpec,
    pub filter: FilterSpec,
    pub detector: DetectorSpec,
    pub polarization: PolarizationSpec,
    pub eve_receiver: EveReceiver,
    pub kernel: PulseKernel,
    pub n_pulses: u64,
    pub gad_rounds: u32,
    pub f_ec: f64,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            mu: 1.5,
            amplifier: AmplifierSpec::none(),
            fiber: FiberSpec::default(),
            filter: FilterSpec::default(),
            detector: DetectorSpec::default(),
            polarization: PolarizationSpec::default(),
            eve_receiver: EveReceiver::default(),
            kernel: PulseKernel::default(),
            n_pulses: 1_000_000,
            gad_rounds: 0,
            f_ec: DEFAULT_F_EC,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::param("mu", format!("{} must be >= 0", self.mu)));
        }
        self.amplifier.validate()?;
        self.fiber.validate()?;
        self.filter.validate()?;
        self.detector.validate()?;
        self.polarization.validate()?;
        if self.n_pulses == 0 {
            return Err(Error::param("pulses", "need at least one pulse"));
        }
        if !self.f_ec.is_finite() || self.f_ec < 1.0 {
            return Err(Error::param("f_ec", format!("{} must be >= 1", self.f_ec)));
        }
        Ok(())
    }

    /// Fiber transmittance times detector efficiency.
    pub fn end_to_end_efficiency(&self) -> f64 {
        self.fiber.transmittance() * self.detector.efficiency
    }
}

/// Alice's choice for one pulse. `basis` false is rectilinear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AliceRecord {
    pub bit: bool,
    pub basis: bool,
}

/// Bob's resolved detection, in absolute basis and bit labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BobEvent {
    pub basis: bool,
    pub bit: bool,
    pub double_click: bool,
}

impl BobEvent {
    fn from_resolved(alice: AliceRecord, ev: &crate::measurement::ResolvedEvent) -> Self {
        let conj = ev.basis == RelativeBasis::Conjugate;
        BobEvent {
            basis: alice.basis ^ conj,
            // in the preparation basis detector 0 carries Alice's bit
            bit: if conj {
                ev.detector == 1
            } else {
                alice.bit ^ (ev.detector == 1)
            },
            double_click: ev.double_click,
        }
    }
}

/// Alice's and Bob's sifted bits before Eve is attached.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedPair {
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
    pub pulses: Vec<u64>,
    pub double_clicks: usize,
}

/// Keeps pulses where Bob resolved a detection in Alice's basis, then drops a
/// trailing bit if the count is odd.
pub fn sift(alice: &[AliceRecord], bob: &[Option<BobEvent>]) -> Result<SiftedPair> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    let mut out = SiftedPair::default();
    let mut last_double = false;
    for (i, (a, b)) in alice.iter().zip(bob).enumerate() {
        if let Some(b) = b {
            if b.basis == a.basis {
                out.alice.push(a.bit);
                out.bob.push(b.bit);
                out.pulses.push(i as u64);
                out.double_clicks += b.double_click as usize;
                last_double = b.double_click;
            }
        }
    }
    if out.alice.len() % 2 == 1 {
        out.alice.pop();
        out.bob.pop();
        out.pulses.pop();
        out.double_clicks -= last_double as usize;
    }
    Ok(out)
}

/// Aligned sifted keys of the three parties.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedTriple {
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
    pub eve_values: Vec<bool>,
    pub eve_ambiguous: Vec<bool>,
    /// Source pulse of each bit.
    pub pulses: Vec<u64>,
}

impl SiftedTriple {
    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.alice.len();
        for m in [
            self.bob.len(),
            self.eve_values.len(),
            self.eve_ambiguous.len(),
            self.pulses.len(),
        ] {
            if m != n {
                return Err(Error::LengthMismatch { left: n, right: m });
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> KeyStats {
        KeyStats::measure(
            &self.alice,
            &self.bob,
            &self.eve_values,
            &self.eve_ambiguous,
        )
    }

    fn truncate(&mut self, n: usize) {
        self.alice.truncate(n);
        self.bob.truncate(n);
        self.eve_values.truncate(n);
        self.eve_ambiguous.truncate(n);
        self.pulses.truncate(n);
    }
}

/// Photon bookkeeping of the per-photon kernel, summed over pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhotonLedger {
    pub emitted: u64,
    pub detected_by_bob: u64,
    pub tapped_by_eve: u64,
    /// Pulses where `detected + tapped != emitted`.
    pub violations: u64,
}

impl PhotonLedger {
    fn add(&mut self, o: &PhotonLedger) {
        self.emitted += o.emitted;
        self.detected_by_bob += o.detected_by_bob;
        self.tapped_by_eve += o.tapped_by_eve;
        self.violations += o.violations;
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionStats {
    pub pulses: u64,
    /// Pulses with at least one click.
    pub click_events: u64,
    /// Pulses with a resolved basis and bit.
    pub resolved_events: u64,
    /// Sifted length `N` after even truncation.
    pub sifted: usize,
    pub double_clicks: usize,
    pub bob_ber: f64,
    pub eve_ambiguous_fraction: f64,
    pub eve_ber: f64,
    pub rounds: Vec<RoundStats>,
    /// Present for the per-photon kernel.
    pub photons: Option<PhotonLedger>,
}

impl SessionStats {
    pub fn sift_yield(&self) -> f64 {
        crate::distillation::ratio(self.sifted, self.pulses as usize)
    }

    pub fn double_click_fraction(&self) -> f64 {
        crate::distillation::ratio(self.double_clicks, self.sifted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AliceToBob,
    BobToAlice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Qubits,
    SiftingBases,
    AdParity,
    AdRejectionIndex,
    EcInfo,
    PaFunction,
    AuthTagA,
    AuthTagB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranscriptMessage {
    pub direction: Direction,
    pub kind: MessageKind,
    pub payload_bits: u64,
}

/// Sizes of one distillation exchange: parity bits sent by Alice, and the
/// fixed-width rejection list returned by Bob.
pub fn ad_message_bits(n: usize, rejected: &RejectionIndex) -> Result<(u64, u64)> {
    if n % 2 == 1 {
        return Err(Error::OddLength(n));
    }
    let pairs = n / 2;
    let width = if pairs <= 1 {
        0
    } else {
        usize::BITS - (pairs - 1).leading_zeros()
    };
    Ok((pairs as u64, rejected.len() as u64 * width as u64))
}

/// Bits leaked by one-way error correction, `ceil(f_ec h2(e) len)`.
pub fn ec_info_bits(len: usize, ber: f64, f_ec: f64) -> u64 {
    (f_ec * binary_entropy(ber) * len as f64).ceil() as u64
}

/// Message sequence of a completed session.
pub fn build_transcript(
    n_pulses: u64,
    resolved_events: u64,
    distilled: &DistillationOutcome,
    f_ec: f64,
) -> Result<Vec<TranscriptMessage>> {
    use Direction::*;
    use MessageKind::*;
    let msg = |direction, kind, payload_bits| TranscriptMessage {
        direction,
        kind,
        payload_bits,
    };
    let mut t = vec![
        msg(AliceToBob, Qubits, n_pulses),
        msg(BobToAlice, SiftingBases, resolved_events),
    ];
    for (n, rejected) in &distilled.exchanges {
        let (parity, index) = ad_message_bits(*n, rejected)?;
        t.push(msg(AliceToBob, AdParity, parity));
        t.push(msg(BobToAlice, AdRejectionIndex, index));
    }
    let s = distilled.stats();
    t.push(msg(
        AliceToBob,
        EcInfo,
        ec_info_bits(s.len, s.bob_ber(), f_ec),
    ));
    t.push(msg(AliceToBob, PaFunction, PA_FUNCTION_BITS));
    t.push(msg(AliceToBob, AuthTagA, AUTH_TAG_BITS));
    t.push(msg(BobToAlice, AuthTagB, AUTH_TAG_BITS));
    Ok(t)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a seed with a stream index into a new seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Generator for stream `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(splitmix64(seed) ^ splitmix64(stream.wrapping_add(0x5EED)))
}

const DISTILL_STREAM: u64 = u64::MAX;

/// Photon counts of one pulse under the per-photon kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseTrace {
    pub emitted_signal: u64,
    pub emitted_orth: u64,
    pub detected: u64,
    pub tapped_signal: u64,
    pub tapped_orth: u64,
    pub outcome: crate::measurement::BobOutcome,
}

/// Constant per-session quantities used by the pulse loop.
#[derive(Debug, Clone, Copy)]
struct PulseModel {
    amplitude: f64,
    noise: f64,
    fiber: f64,
    eta: f64,
    eve_scale: f64,
    detector: DetectorSpec,
    p_pol: f64,
    receiver: EveReceiver,
}

impl PulseModel {
    fn new(c: &SessionConfig) -> Self {
        let eta = c.end_to_end_efficiency();
        Self {
            amplitude: (c.amplifier.gain * c.mu).sqrt(),
            noise: c.amplifier.ase_mean(),
            fiber: c.fiber.transmittance(),
            eta,
            eve_scale: (1.0 - eta) * c.eve_receiver.basis_fraction(),
            detector: c.detector,
            p_pol: c.polarization.error,
            receiver: c.eve_receiver,
        }
    }

    #[inline]
    fn field<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        (
            field_intensity(self.amplitude, self.noise, rng),
            field_intensity(0.0, self.noise, rng),
        )
    }

    fn trace<R: Rng + ?Sized>(&self, rng: &mut R) -> PulseTrace {
        let (is, io) = self.field(rng);
        let ns = poisson_count(is, rng);
        let no = poisson_count(io, rng);
        let survive = |n: u64, rng: &mut R| {
            if n == 0 || self.fiber >= 1.0 {
                n
            } else {
                Binomial::new(n, self.fiber).expect("valid").sample(rng)
            }
        };
        let arrive_s = survive(ns, rng);
        let arrive_o = survive(no, rng);
        let outcome = bob_detect(arrive_s, arrive_o, &self.detector, self.p_pol, rng);
        PulseTrace {
            emitted_signal: ns,
            emitted_orth: no,
            detected: outcome.detected_photons,
            tapped_signal: ns - arrive_s + outcome.undetected_signal,
            tapped_orth: no - arrive_o + outcome.undetected_orth,
            outcome,
        }
    }
}

/// Samples one pulse photon by photon (the `PerPhoton` kernel's law).
pub fn trace_pulse<R: Rng + ?Sized>(config: &SessionConfig, rng: &mut R) -> PulseTrace {
    PulseModel::new(config).trace(rng)
}

#[derive(Debug, Default)]
struct ShardOut {
    pulses: u64,
    clicks: u64,
    resolved: u64,
    triple: SiftedTriple,
    double_click: Vec<bool>,
    photons: PhotonLedger,
}

fn run_shard(config: &SessionConfig, model: &PulseModel, shard: u64) -> ShardOut {
    let start = shard * SHARD_PULSES;
    let end = ((shard + 1) * SHARD_PULSES).min(config.n_pulses);
    let mut rng = stream_rng(config.seed, shard);
    let mut out = ShardOut {
        pulses: end - start,
        ..Default::default()
    };
    let mut bitbuf = 0u64;
    let mut left = 0u32;
    for pulse in start..end {
        if left == 0 {
            bitbuf = rng.next_u64();
            left = 32;
        }
        let alice = AliceRecord {
            bit: bitbuf & 1 == 1,
            basis: bitbuf & 2 == 2,
        };
        bitbuf >>= 2;
        left -= 1;

        let (outcome, eve_counts) = match config.kernel {
            PulseKernel::Split => {
                let (is, io) = model.field(&mut rng);
                let o = bob_detect_field(
                    model.eta * is,
                    model.eta * io,
                    model.detector.dark_count,
                    model.p_pol,
                    &mut rng,
                );
                (o, Err((is, io)))
            }
            PulseKernel::PerPhoton => {
                let t = model.trace(&mut rng);
                let emitted = t.emitted_signal + t.emitted_orth;
                let ledger = PhotonLedger {
                    emitted,
                    detected_by_bob: t.detected,
                    tapped_by_eve: t.tapped_signal + t.tapped_orth,
                    violations: (t.detected + t.tapped_signal + t.tapped_orth != emitted) as u64,
                };
                out.photons.add(&ledger);
                (t.outcome, Ok((t.tapped_signal, t.tapped_orth)))
            }
        };
        if !outcome.any_click() {
            continue;
        }
        out.clicks += 1;
        let Some(ev) = resolve_event(&outcome, &mut rng) else {
            continue;
        };
        out.resolved += 1;
        let bob = BobEvent::from_resolved(alice, &ev);
        if bob.basis != alice.basis {
            continue;
        }
        let (es, eo) = match eve_counts {
            Ok((ts, to)) => eve_tap(model.receiver, ts, to, &mut rng),
            Err((is, io)) => (
                poisson_count(model.eve_scale * is, &mut rng),
                poisson_count(model.eve_scale * io, &mut rng),
            ),
        };
        let eve = eve_measure(es, eo, alice.bit, &mut rng);
        out.triple.alice.push(alice.bit);
        out.triple.bob.push(bob.bit);
        out.triple.eve_values.push(eve.value);
        out.triple.eve_ambiguous.push(eve.ambiguous);
        out.triple.pulses.push(pulse);
        out.double_click.push(bob.double_click);
    }
    out
}

/// Incrementally extendable simulation of one configuration.
///
/// Extending to more pulses reuses every shard already simulated; the result
/// equals a fresh run with the larger pulse count.
#[derive(Debug)]
pub struct SessionRun {
    config: SessionConfig,
    shards: Vec<ShardOut>,
}

impl SessionRun {
    pub fn new(config: SessionConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            shards: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn pulses(&self) -> u64 {
        self.shards.iter().map(|s| s.pulses).sum()
    }

    /// Simulates up to `n_pulses` in total on the current rayon pool.
    pub fn extend_to(&mut self, n_pulses: u64) {
        if n_pulses <= self.pulses() {
            return;
        }
        if let Some(last) = self.shards.last() {
            if last.pulses < SHARD_PULSES {
                self.shards.pop();
            }
        }
        self.config.n_pulses = n_pulses;
        let first = self.shards.len() as u64;
        let last = n_pulses.div_ceil(SHARD_PULSES);
        let model = PulseModel::new(&self.config);
        let config = &self.config;
        let fresh: Vec<ShardOut> = (first..last)
            .into_par_iter()
            .map(|k| run_shard(config, &model, k))
            .collect();
        self.shards.extend(fresh);
    }

    /// Concatenated, even-truncated keys and their statistics.
    pub fn sifted(&self) -> (SiftedTriple, SessionStats) {
        let total: usize = self.shards.iter().map(|s| s.triple.len()).sum();
        let mut t = SiftedTriple {
            alice: Vec::with_capacity(total),
            bob: Vec::with_capacity(total),
            eve_values: Vec::with_capacity(total),
            eve_ambiguous: Vec::with_capacity(total),
            pulses: Vec::with_capacity(total),
        };
        let mut stats = SessionStats::default();
        let mut photons = PhotonLedger::default();
        let mut double_click = Vec::with_capacity(total);
        for s in &self.shards {
            t.alice.extend_from_slice(&s.triple.alice);
            t.bob.extend_from_slice(&s.triple.bob);
            t.eve_values.extend_from_slice(&s.triple.eve_values);
            t.eve_ambiguous.extend_from_slice(&s.triple.eve_ambiguous);
            t.pulses.extend_from_slice(&s.triple.pulses);
            double_click.extend_from_slice(&s.double_click);
            stats.pulses += s.pulses;
            stats.click_events += s.clicks;
            stats.resolved_events += s.resolved;
            photons.add(&s.photons);
        }
        let even = total & !1;
        t.truncate(even);
        let dc = double_click[..even].iter().filter(|&&d| d).count();
        let ks = t.stats();
        stats.sifted = even;
        stats.double_clicks = dc;
        stats.bob_ber = ks.bob_ber();
        stats.eve_ambiguous_fraction = ks.eve_ambiguous_fraction();
        stats.eve_ber = ks.eve_ber();
        if self.config.kernel == PulseKernel::PerPhoton {
            stats.photons = Some(photons);
        }
        if even == 0 {
            log::warn!("session produced no sifted bits");
        }
        (t, stats)
    }
}

/// Everything a completed session produces.
#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub triple: SiftedTriple,
    pub stats: SessionStats,
    pub distilled: DistillationOutcome,
    pub transcript: Vec<TranscriptMessage>,
}

/// Runs a full session: simulation, sifting, `gad_rounds` of distillation and
/// the transcript. Uses the current rayon pool.
pub fn run_session(config: &SessionConfig) -> Result<SessionOutput> {
    let mut run = SessionRun::new(config.clone())?;
    run.extend_to(config.n_pulses);
    let (triple, mut stats) = run.sifted();
    let distilled = distill(&triple, config.gad_rounds, config.seed)?;
    stats.rounds = distilled.rounds.clone();
    let transcript =
        build_transcript(stats.pulses, stats.resolved_events, &distilled, config.f_ec)?;
    Ok(SessionOutput {
        triple,
        stats,
        distilled,
        transcript,
    })
}

/// Distillation with the session's dedicated random stream.
pub fn distill(triple: &SiftedTriple, rounds: u32, seed: u64) -> Result<DistillationOutcome> {
    let mut rng = stream_rng(seed, DISTILL_STREAM);
    gad(triple, rounds, &mut rng)
}

/// Runs `f` on a dedicated pool of `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sift_examples() {
        let a = vec![
            AliceRecord {
                bit: true,
                basis: false
            };
            4
        ];
        let none = vec![None; 4];
        assert!(sift(&a, &none).unwrap().alice.is_empty());

        let all: Vec<_> = a
            .iter()
            .map(|r| {
                Some(BobEvent {
                    basis: r.basis,
                    bit: r.bit,
                    double_click: false,
                })
            })
            .collect();
        assert_eq!(sift(&a, &all).unwrap().alice.len(), 4);
        assert_eq!(sift(&a[..3], &all[..3]).unwrap().alice.len(), 2);
        assert!(sift(&a[..3], &all).is_err());
    }

    #[test]
    fn ad_message_examples() {
        assert_eq!(
            ad_message_bits(4, &RejectionIndex::default()).unwrap(),
            (2, 0)
        );
        assert_eq!(
            ad_message_bits(4, &RejectionIndex(vec![1])).unwrap(),
            (2, 1)
        );
        assert_eq!(
            ad_message_bits(10, &RejectionIndex(vec![0, 4])).unwrap(),
            (5, 6)
        );
        assert!(ad_message_bits(5, &RejectionIndex::default()).is_err());
    }

    #[test]
    fn ec_leak_example() {
        assert_eq!(ec_info_bits(1000, 0.05, 1.16), 333);
        assert_eq!(ec_info_bits(1000, 0.0, 1.16), 0);
    }

    #[test]
    fn config_validation() {
        let mut c = SessionConfig::default();
        assert!(c.validate().is_ok());
        c.n_pulses = 0;
        assert!(c.validate().is_err());
        c.n_pulses = 10;
        c.f_ec = 0.9;
        assert!(c.validate().is_err());
    }

    #[test]
    fn noiseless_channel_has_no_errors() {
        let c = SessionConfig {
            mu: 1.5,
            fiber: FiberSpec::smf(0.0).unwrap(),
            detector: DetectorSpec::new(0.2, 0.0).unwrap(),
            polarization: PolarizationSpec::new(0.0).unwrap(),
            n_pulses: 200_000,
            ..Default::default()
        };
        let out = run_session(&c).unwrap();
        assert!(out.stats.sifted > 10_000);
        assert_eq!(out.stats.bob_ber, 0.0);
    }

    #[test]
    fn transcript_follows_protocol_order() {
        let c = SessionConfig {
            n_pulses: 100_000,
            gad_rounds: 2,
            ..Default::default()
        };
        let out = run_session(&c).unwrap();
        let kinds: Vec<_> = out.transcript.iter().map(|m| m.kind).collect();
        use MessageKind::*;
        assert_eq!(
            kinds,
            vec![
                Qubits,
                SiftingBases,
                AdParity,
                AdRejectionIndex,
                AdParity,
                AdRejectionIndex,
                EcInfo,
                PaFunction,
                AuthTagA,
                AuthTagB
            ]
        );
        assert_eq!(
            out.transcript[2].payload_bits as usize,
            out.stats.sifted / 2
        );
        assert_eq!(out.transcript[0].direction, Direction::AliceToBob);
        assert_eq!(out.transcript[3].direction, Direction::BobToAlice);
    }
}
