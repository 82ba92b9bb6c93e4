//! Sweeps over span length, optimization over `(mu, rounds)`, CSV output and
//! built-in presets.

pub mod config;
pub mod output;
pub mod presets;
pub mod selftest;

use std::path::PathBuf;

use rayon::prelude::*;

use crate::distillation::DistillationOutcome;
use crate::error::{Error, Result};
use crate::keyrate::{secret_fraction, takeoka_bound, yield_stderr, TakeokaConvention, YieldPoint};
use crate::measurement::{DetectorSpec, EveReceiver};
use crate::optical_path::{AmplifierSpec, FiberSpec, PolarizationSpec, SMF_ATTENUATION_DB_PER_KM};
use crate::session::{distill, with_workers, PulseKernel, SessionConfig, SessionRun, SessionStats};

use config::{parse_count, parse_f64_list, parse_u32_list, ConfigFile, Entry};

pub use output::{emit_csv, gnuplot_script, write_csv, CSV_HEADER};

/// Yield below which a span counts as out of range.
pub const DEFAULT_YIELD_FLOOR: f64 = 1e-6;
pub const DEFAULT_PULSES: u64 = 10_000_000;
pub const DEFAULT_MAX_PULSES: u64 = 100_000_000;
pub const DEFAULT_MIN_SIFTED: usize = 10_000;
pub const MIN_PULSES: u64 = 10_000;

/// Link parameters shared by every curve of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub attenuation_db_per_km: f64,
    pub detector: DetectorSpec,
    pub p_pol: f64,
    pub f_ec: f64,
    pub eve_receiver: EveReceiver,
    pub kernel: PulseKernel,
    pub takeoka: TakeokaConvention,
}

impl Default for Link {
    fn default() -> Self {
        Self {
            attenuation_db_per_km: SMF_ATTENUATION_DB_PER_KM,
            detector: DetectorSpec::CALIBRATED,
            p_pol: PolarizationSpec::default().error,
            f_ec: crate::keyrate::DEFAULT_F_EC,
            eve_receiver: EveReceiver::default(),
            kernel: PulseKernel::default(),
            takeoka: TakeokaConvention::default(),
        }
    }
}

impl Link {
    pub fn takeoka_at(&self, length_km: f64) -> Result<f64> {
        let fiber = FiberSpec::new(length_km, self.attenuation_db_per_km)?.transmittance();
        takeoka_bound(self.takeoka.transmittance(fiber, self.detector.efficiency))
    }
}

/// Pulse budget of one point, with escalation for sparse long spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseBudget {
    pub pulses: u64,
    /// Escalation target when fewer than `min_sifted` bits were collected.
    pub max_pulses: u64,
    pub min_sifted: usize,
}

impl Default for PulseBudget {
    fn default() -> Self {
        Self {
            pulses: DEFAULT_PULSES,
            max_pulses: DEFAULT_MAX_PULSES,
            min_sifted: DEFAULT_MIN_SIFTED,
        }
    }
}

impl PulseBudget {
    pub fn fixed(pulses: u64) -> Self {
        Self {
            pulses,
            max_pulses: pulses,
            min_sifted: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub label: String,
    pub gain: f64,
    pub chi: f64,
    pub mu_grid: Vec<f64>,
    pub rounds_grid: Vec<u32>,
}

impl CurveSpec {
    pub fn new(label: &str, gain: f64, mu: f64, rounds_grid: Vec<u32>) -> Self {
        Self {
            label: label.into(),
            gain,
            chi: 1.0,
            mu_grid: vec![mu],
            rounds_grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub lengths_km: Vec<f64>,
    pub curves: Vec<CurveSpec>,
    pub link: Link,
    pub budget: PulseBudget,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub yield_floor: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            lengths_km: vec![0.0],
            curves: vec![CurveSpec::new("default", 1.0, 1.5, vec![0, 1, 2, 3])],
            link: Link::default(),
            budget: PulseBudget::default(),
            seed: 0,
            out: None,
            workers: None,
            yield_floor: DEFAULT_YIELD_FLOOR,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lengths_km.is_empty() {
            return Err(Error::param("L", "empty length grid"));
        }
        if self.lengths_km.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("L", "lengths must be strictly increasing"));
        }
        if self.curves.is_empty() {
            return Err(Error::param("curve", "no curves defined"));
        }
        for c in &self.curves {
            if c.mu_grid.is_empty() {
                return Err(Error::param("mu", format!("empty grid for `{}`", c.label)));
            }
            if c.rounds_grid.is_empty() {
                return Err(Error::param(
                    "rounds",
                    format!("empty grid for `{}`", c.label),
                ));
            }
            AmplifierSpec::new(c.gain, c.chi)?;
        }
        if self.budget.pulses < MIN_PULSES {
            return Err(Error::param(
                "pulses",
                format!(
                    "{} is below the minimum of {MIN_PULSES}",
                    self.budget.pulses
                ),
            ));
        }
        if self.budget.max_pulses < self.budget.pulses {
            return Err(Error::param("max-pulses", "must be >= pulses"));
        }
        if self.yield_floor.is_nan() || self.yield_floor <= 0.0 {
            return Err(Error::param("floor", "must be > 0"));
        }
        if self.workers == Some(0) {
            return Err(Error::param("workers", "must be >= 1"));
        }
        // every configuration must be constructible
        for c in &self.curves {
            for &mu in &c.mu_grid {
                for &l in &self.lengths_km {
                    session_config(&self.link, c.gain, c.chi, mu, l, 1, 0)?.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Applies config-file entries, then command-line overrides.
    pub fn apply(&mut self, file: &ConfigFile, overrides: &[Entry]) -> Result<()> {
        let mut curve_defaults = CurveDefaults::default();
        for e in &file.global {
            self.apply_global(e, &file.origin, &mut curve_defaults)?;
        }
        for e in overrides {
            self.apply_global(e, "command line", &mut curve_defaults)?;
        }
        if !file.curves.is_empty() {
            self.curves.clear();
            for (label, entries) in &file.curves {
                let mut c = curve_defaults.build(label);
                for e in entries {
                    apply_curve_key(&mut c, e, &file.origin)?;
                }
                for e in overrides
                    .iter()
                    .filter(|e| CURVE_KEYS.contains(&e.key.as_str()))
                {
                    apply_curve_key(&mut c, e, "command line")?;
                }
                self.curves.push(c);
            }
        } else if curve_defaults.any() {
            for c in &mut self.curves {
                curve_defaults.patch(c);
            }
        }
        Ok(())
    }

    fn apply_global(&mut self, e: &Entry, origin: &str, cd: &mut CurveDefaults) -> Result<()> {
        let bad = |m: String| Error::Config {
            origin: origin.to_string(),
            line: e.line,
            message: format!("`{}`: {m}", e.key),
        };
        let one = |v: &str| -> std::result::Result<f64, String> {
            let xs = parse_f64_list(v)?;
            if xs.len() != 1 {
                return Err("expected a single value".into());
            }
            Ok(xs[0])
        };
        let v = e.value.as_str();
        match e.key.as_str() {
            "L" => self.lengths_km = parse_f64_list(v).map_err(bad)?,
            "G" => cd.gain = Some(one(v).map_err(bad)?),
            "chi" => cd.chi = Some(one(v).map_err(bad)?),
            "mu" => cd.mu = Some(parse_f64_list(v).map_err(bad)?),
            "rounds" => cd.rounds = Some(parse_u32_list(v).map_err(bad)?),
            "alpha" => self.link.attenuation_db_per_km = one(v).map_err(bad)?,
            "eta-d" => self.link.detector.efficiency = one(v).map_err(bad)?,
            "p-dark" => self.link.detector.dark_count = one(v).map_err(bad)?,
            "p-pol" => self.link.p_pol = one(v).map_err(bad)?,
            "f-ec" => self.link.f_ec = one(v).map_err(bad)?,
            "takeoka-convention" => {
                self.link.takeoka = v.parse().map_err(|x: Error| bad(x.to_string()))?
            }
            "eve-receiver" => {
                self.link.eve_receiver = v.parse().map_err(|x: Error| bad(x.to_string()))?
            }
            "kernel" => self.link.kernel = v.parse().map_err(|x: Error| bad(x.to_string()))?,
            "seed" => self.seed = parse_count(v).map_err(bad)?,
            "pulses" => {
                let p = parse_count(v).map_err(bad)?;
                self.budget.pulses = p;
                self.budget.max_pulses = self.budget.max_pulses.max(p);
            }
            "max-pulses" => self.budget.max_pulses = parse_count(v).map_err(bad)?,
            "min-sifted" => self.budget.min_sifted = parse_count(v).map_err(bad)? as usize,
            "floor" => self.yield_floor = one(v).map_err(bad)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "workers" => self.workers = Some(parse_count(v).map_err(bad)? as usize),
            _ => return Err(bad("unknown key".into())),
        }
        Ok(())
    }
}

/// Keys allowed inside `[curve.<label>]` sections.
pub const CURVE_KEYS: [&str; 4] = ["G", "chi", "mu", "rounds"];

#[derive(Debug, Default)]
struct CurveDefaults {
    gain: Option<f64>,
    chi: Option<f64>,
    mu: Option<Vec<f64>>,
    rounds: Option<Vec<u32>>,
}

impl CurveDefaults {
    fn any(&self) -> bool {
        self.gain.is_some() || self.chi.is_some() || self.mu.is_some() || self.rounds.is_some()
    }

    fn patch(&self, c: &mut CurveSpec) {
        if let Some(g) = self.gain {
            c.gain = g;
        }
        if let Some(x) = self.chi {
            c.chi = x;
        }
        if let Some(m) = &self.mu {
            c.mu_grid = m.clone();
        }
        if let Some(r) = &self.rounds {
            c.rounds_grid = r.clone();
        }
    }

    fn build(&self, label: &str) -> CurveSpec {
        let mut c = SweepSpec::default().curves.remove(0);
        c.label = label.to_string();
        self.patch(&mut c);
        c
    }
}

fn apply_curve_key(c: &mut CurveSpec, e: &Entry, origin: &str) -> Result<()> {
    let bad = |m: String| Error::Config {
        origin: origin.to_string(),
        line: e.line,
        message: format!("`{}` in curve `{}`: {m}", e.key, c.label),
    };
    let v = e.value.as_str();
    match e.key.as_str() {
        "G" | "chi" => {
            let xs = parse_f64_list(v).map_err(bad)?;
            if xs.len() != 1 {
                return Err(bad("expected a single value".into()));
            }
            if e.key == "G" {
                c.gain = xs[0];
            } else {
                c.chi = xs[0];
            }
        }
        "mu" => c.mu_grid = parse_f64_list(v).map_err(bad)?,
        "rounds" => c.rounds_grid = parse_u32_list(v).map_err(bad)?,
        _ => return Err(bad("unknown or global-only key".into())),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveResult {
    pub label: String,
    pub points: Vec<YieldPoint>,
}

pub fn session_config(
    link: &Link,
    gain: f64,
    chi: f64,
    mu: f64,
    length_km: f64,
    n_pulses: u64,
    seed: u64,
) -> Result<SessionConfig> {
    Ok(SessionConfig {
        mu,
        amplifier: AmplifierSpec::new(gain, chi)?,
        fiber: FiberSpec::new(length_km, link.attenuation_db_per_km)?,
        detector: DetectorSpec::new(link.detector.efficiency, link.detector.dark_count)?,
        polarization: PolarizationSpec::new(link.p_pol)?,
        eve_receiver: link.eve_receiver,
        kernel: link.kernel,
        n_pulses,
        gad_rounds: 0,
        f_ec: link.f_ec,
        seed,
        ..Default::default()
    })
}

/// Seed of one operating point, derived from the sweep seed and the point's
/// physical coordinates so that the same point draws the same pulses in any
/// sweep.
pub fn point_seed(seed: u64, gain: f64, mu: f64, length_km: f64) -> u64 {
    [gain, mu, length_km]
        .iter()
        .fold(seed, |h, x| crate::session::mix_seed(h, x.to_bits()))
}

/// Builds the reported point from a session's sifted statistics and one
/// distillation result.
#[allow(clippy::too_many_arguments)]
pub fn yield_point(
    length_km: f64,
    gain: f64,
    mu: f64,
    rounds: u32,
    sifted: &SessionStats,
    distilled: &DistillationOutcome,
    f_ec: f64,
    takeoka: f64,
) -> YieldPoint {
    let pulses = sifted.pulses;
    let s = distilled.stats();
    let r = if s.len == 0 {
        0.0
    } else {
        secret_fraction(s.bob_ber(), s.eve_ambiguous_fraction(), s.eve_ber(), f_ec)
    };
    let dist_yield = s.len as f64 / pulses as f64;
    YieldPoint {
        length_km,
        gain,
        mu,
        rounds,
        pulses,
        sift_yield: sifted.sift_yield(),
        sifted_ber: sifted.bob_ber,
        distilled_yield: dist_yield,
        distilled_ber: s.bob_ber(),
        eve_ambiguous: s.eve_ambiguous_fraction(),
        eve_ber: s.eve_ber(),
        secret_fraction: r,
        secret_yield: dist_yield * r,
        secret_yield_stderr: yield_stderr(
            pulses,
            s.len,
            s.bob_ber(),
            s.eve_ambiguous_fraction(),
            s.eve_ber(),
            f_ec,
        ),
        takeoka_bound: takeoka,
    }
}

/// Simulates one `(G, chi, mu, L)` configuration and distills the same sifted
/// key with every round count in `rounds_grid`. Returns one point per entry.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_rounds(
    link: &Link,
    gain: f64,
    chi: f64,
    mu: f64,
    length_km: f64,
    rounds_grid: &[u32],
    budget: PulseBudget,
    seed: u64,
) -> Result<Vec<YieldPoint>> {
    let pseed = point_seed(seed, gain, mu, length_km);
    let cfg = session_config(link, gain, chi, mu, length_km, budget.pulses, pseed)?;
    let mut run = SessionRun::new(cfg)?;
    run.extend_to(budget.pulses);
    let (mut triple, mut stats) = run.sifted();
    if stats.sifted < budget.min_sifted && budget.max_pulses > budget.pulses {
        log::info!(
            "G={gain} mu={mu} L={length_km}: {} sifted bits, escalating to {} pulses",
            stats.sifted,
            budget.max_pulses
        );
        run.extend_to(budget.max_pulses);
        (triple, stats) = run.sifted();
    }
    let takeoka = link.takeoka_at(length_km)?;
    rounds_grid
        .iter()
        .map(|&r| {
            let d = distill(&triple, r, pseed)?;
            Ok(yield_point(
                length_km, gain, mu, r, &stats, &d, link.f_ec, takeoka,
            ))
        })
        .collect()
}

/// Best point over a curve's `(mu, rounds)` grids at one length. Ties keep
/// the earliest grid entry.
pub fn best_point(
    link: &Link,
    curve: &CurveSpec,
    length_km: f64,
    budget: PulseBudget,
    seed: u64,
) -> Result<YieldPoint> {
    let mut best: Option<YieldPoint> = None;
    for &mu in &curve.mu_grid {
        for p in evaluate_rounds(
            link,
            curve.gain,
            curve.chi,
            mu,
            length_km,
            &curve.rounds_grid,
            budget,
            seed,
        )? {
            if best
                .as_ref()
                .is_none_or(|b| p.secret_yield > b.secret_yield)
            {
                best = Some(p);
            }
        }
    }
    Ok(best.expect("grids are nonempty"))
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<CurveResult>> {
    spec.validate()?;
    with_workers(spec.workers, || {
        let jobs: Vec<(usize, f64)> = (0..spec.curves.len())
            .flat_map(|c| spec.lengths_km.iter().map(move |&l| (c, l)))
            .collect();
        let points: Vec<Result<YieldPoint>> = jobs
            .par_iter()
            .map(|&(c, l)| best_point(&spec.link, &spec.curves[c], l, spec.budget, spec.seed))
            .collect();
        let mut out: Vec<CurveResult> = spec
            .curves
            .iter()
            .map(|c| CurveResult {
                label: c.label.clone(),
                points: Vec::with_capacity(spec.lengths_km.len()),
            })
            .collect();
        for ((c, _), p) in jobs.iter().zip(points) {
            out[*c].points.push(p?);
        }
        Ok(out)
    })
}

/// Reach of a curve: the largest length whose secret yield is at least
/// `floor`, refined by log-linear interpolation towards the next length.
///
/// When the next point has zero yield, the crossing is extrapolated with the
/// log-slope of the preceding segment and capped at the next length.
pub fn max_range(curve: &CurveResult, floor: f64) -> f64 {
    let pts = &curve.points;
    let Some(i) = pts.iter().rposition(|p| p.secret_yield >= floor) else {
        log::warn!("curve `{}` never reaches yield {floor}", curve.label);
        return 0.0;
    };
    let here = &pts[i];
    let Some(next) = pts.get(i + 1) else {
        return here.length_km;
    };
    let ln = |y: f64| y.ln();
    let slope = if next.secret_yield > 0.0 {
        (ln(next.secret_yield) - ln(here.secret_yield)) / (next.length_km - here.length_km)
    } else if i > 0 && pts[i - 1].secret_yield > here.secret_yield {
        let prev = &pts[i - 1];
        (ln(here.secret_yield) - ln(prev.secret_yield)) / (here.length_km - prev.length_km)
    } else {
        return here.length_km;
    };
    if slope >= 0.0 {
        return here.length_km;
    }
    let dl = (ln(floor) - ln(here.secret_yield)) / slope;
    here.length_km + dl.clamp(0.0, next.length_km - here.length_km)
}

/// Length at which the capacity bound falls to `floor`, by bisection.
pub fn takeoka_range(link: &Link, floor: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 2000.0);
    if link.takeoka_at(hi)? >= floor {
        return Ok(hi);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if link.takeoka_at(mid)? >= floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(l: f64, y: f64) -> YieldPoint {
        YieldPoint {
            length_km: l,
            gain: 1.0,
            mu: 1.5,
            rounds: 0,
            pulses: 1,
            sift_yield: 0.0,
            sifted_ber: 0.0,
            distilled_yield: 0.0,
            distilled_ber: 0.0,
            eve_ambiguous: 0.0,
            eve_ber: 0.0,
            secret_fraction: 0.0,
            secret_yield: y,
            secret_yield_stderr: 0.0,
            takeoka_bound: 1.0,
        }
    }

    fn curve(ys: &[(f64, f64)]) -> CurveResult {
        CurveResult {
            label: "t".into(),
            points: ys.iter().map(|&(l, y)| pt(l, y)).collect(),
        }
    }

    #[test]
    fn range_examples() {
        assert_eq!(max_range(&curve(&[(0.0, 1e-3), (10.0, 1e-3)]), 1e-6), 10.0);
        assert_eq!(max_range(&curve(&[(0.0, 1e-7), (10.0, 0.0)]), 1e-6), 0.0);
        let r = max_range(&curve(&[(0.0, 1e-4), (10.0, 1e-8)]), 1e-6);
        assert!((r - 5.0).abs() < 1e-12);
        // zero next point: extrapolate with the previous slope, capped
        let r = max_range(&curve(&[(0.0, 1e-4), (10.0, 1e-5), (20.0, 0.0)]), 1e-6);
        assert!((r - 20.0).abs() < 1e-12);
        let r = max_range(
            &curve(&[(0.0, 1e-5), (10.0, 1e-5 / 2f64.sqrt()), (20.0, 0.0)]),
            1e-6,
        );
        assert!((r - 20.0).abs() < 1e-12);
        let r = max_range(
            &curve(&[(0.0, 1e-4), (10.0, 1e-5 * 2.0), (20.0, 0.0)]),
            1e-5,
        );
        assert!(r > 10.0 && r < 20.0);
    }

    #[test]
    fn config_application() {
        let file = config::parse_config(
            "L = 0:20:10\neta-d = 0.25\n[curve.a]\nG = 16\nmu = 1.7\n[curve.b]\nrounds = 0\n",
            "t",
        )
        .unwrap();
        let mut s = SweepSpec::default();
        let o = [Entry {
            key: "mu".into(),
            value: "2".into(),
            line: 0,
        }];
        s.apply(&file, &o).unwrap();
        assert_eq!(s.lengths_km, vec![0.0, 10.0, 20.0]);
        assert_eq!(s.link.detector.efficiency, 0.25);
        assert_eq!(s.curves.len(), 2);
        assert_eq!(s.curves[0].gain, 16.0);
        assert_eq!(s.curves[0].mu_grid, vec![2.0]);
        assert_eq!(s.curves[1].rounds_grid, vec![0]);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut s = SweepSpec::default();
        let f = config::parse_config("eta_d = 0.2\n", "t").unwrap();
        assert!(s.apply(&f, &[]).is_err());
        let f = config::parse_config("[curve.x]\nalpha = 0.2\n", "t").unwrap();
        assert!(s.apply(&f, &[]).is_err());
    }

    #[test]
    fn validation() {
        let s = SweepSpec {
            lengths_km: vec![10.0, 0.0],
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let mut s = SweepSpec::default();
        s.budget.pulses = 100;
        assert!(s.validate().is_err());
        let mut s = SweepSpec::default();
        s.curves[0].mu_grid.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn point_seed_depends_on_coordinates() {
        let a = point_seed(1, 1.0, 1.5, 10.0);
        assert_eq!(a, point_seed(1, 1.0, 1.5, 10.0));
        assert_ne!(a, point_seed(2, 1.0, 1.5, 10.0));
        assert_ne!(a, point_seed(1, 1.0, 1.5, 20.0));
    }
}
