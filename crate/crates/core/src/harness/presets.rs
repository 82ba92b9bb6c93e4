//! Built-in sweeps and the detector calibration search.

use super::{max_range, run_sweep, CurveSpec, Link, PulseBudget, SweepSpec};
use crate::error::{check_range, Result};
use crate::measurement::DetectorSpec;
use crate::optical_path::ULTRA_LOW_LOSS_DB_PER_KM;

/// Round counts tried by the distillation curves.
pub const GAD_ROUNDS: [u32; 4] = [0, 1, 2, 3];

/// Span grid of the four-curve comparison, 0 to 300 km in 10 km steps.
pub fn figure3_lengths() -> Vec<f64> {
    (0..=30).map(|i| i as f64 * 10.0).collect()
}

/// Plain BB84, BB84 with distillation, and the two amplified links.
pub fn figure3_curves() -> Vec<CurveSpec> {
    vec![
        CurveSpec::new("bb84", 1.0, 1.5, vec![0]),
        CurveSpec::new("gad", 1.0, 1.5, GAD_ROUNDS.to_vec()),
        CurveSpec::new("g4over3", 4.0 / 3.0, 2.5, GAD_ROUNDS.to_vec()),
        CurveSpec::new("g16", 16.0, 1.7, GAD_ROUNDS.to_vec()),
    ]
}

pub fn figure3(seed: u64) -> SweepSpec {
    SweepSpec {
        lengths_km: figure3_lengths(),
        curves: figure3_curves(),
        seed,
        ..Default::default()
    }
}

/// High-gain link with superconducting detectors over ultra-low-loss fiber.
pub fn stretch(seed: u64) -> SweepSpec {
    SweepSpec {
        lengths_km: (20..=45).map(|i| i as f64 * 10.0).collect(),
        curves: vec![CurveSpec::new("g16-snspd", 16.0, 1.7, GAD_ROUNDS.to_vec())],
        link: Link {
            attenuation_db_per_km: ULTRA_LOW_LOSS_DB_PER_KM,
            detector: DetectorSpec::SUPERCONDUCTING,
            ..Link::default()
        },
        seed,
        ..Default::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationStep {
    pub dark_count: f64,
    pub range_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub detector: DetectorSpec,
    pub range_km: f64,
    pub steps: Vec<CalibrationStep>,
}

/// Plain-BB84 reach for a detector, on a 5 km grid from 80 to 220 km.
pub fn bb84_range(
    link: &Link,
    budget: PulseBudget,
    seed: u64,
    workers: Option<usize>,
) -> Result<f64> {
    let spec = SweepSpec {
        lengths_km: (16..=44).map(|i| i as f64 * 5.0).collect(),
        curves: vec![CurveSpec::new("bb84", 1.0, 1.5, vec![0])],
        link: link.clone(),
        budget,
        seed,
        workers,
        ..Default::default()
    };
    let r = run_sweep(&spec)?;
    Ok(max_range(&r[0], spec.yield_floor))
}

/// Bisects the dark-count probability, in log space, for a plain-BB84 reach of
/// `target_km` at fixed detector efficiency. Reach decreases with dark counts.
pub fn calibrate_dark_count(
    base: &Link,
    target_km: f64,
    bracket: (f64, f64),
    iterations: u32,
    budget: PulseBudget,
    seed: u64,
    workers: Option<usize>,
) -> Result<Calibration> {
    check_range("p-dark", bracket.0, 1e-12, bracket.1)?;
    let mut lo = bracket.0.ln();
    let mut hi = bracket.1.ln();
    let mut steps = Vec::new();
    let mut best: Option<CalibrationStep> = None;
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        let mut link = base.clone();
        link.detector = DetectorSpec::new(base.detector.efficiency, mid.exp())?;
        let range_km = bb84_range(&link, budget, seed, workers)?;
        log::info!("p_dark = {:.4e}: reach {range_km:.2} km", mid.exp());
        let step = CalibrationStep {
            dark_count: mid.exp(),
            range_km,
        };
        if best
            .as_ref()
            .is_none_or(|b| (range_km - target_km).abs() < (b.range_km - target_km).abs())
        {
            best = Some(step.clone());
        }
        steps.push(step);
        if range_km > target_km {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = best.expect("at least one iteration");
    Ok(Calibration {
        detector: DetectorSpec::new(base.detector.efficiency, best.dark_count)?,
        range_km: best.range_km,
        steps,
    })
}
