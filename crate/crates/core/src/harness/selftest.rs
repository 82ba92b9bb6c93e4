//! Fast invariant checks runnable from the command line.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{run_sweep, write_csv, CurveSpec, PulseBudget, SweepSpec};
use crate::distillation::{expected_distilled_ambiguity, expected_distilled_ber, gad};
use crate::optical_path::{amplified_state, AmplifierSpec};
use crate::photon_stats::PhotonDistribution;
use crate::session::{trace_pulse, SessionConfig, SiftedTriple};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn pmf_checks() -> Check {
    let mut worst: f64 = 0.0;
    for (s, n) in [
        (0.0, 0.5),
        (1.5, 0.0),
        (42.2, 15.0),
        (0.3, 0.15),
        (2.0, 1.0 / 3.0),
    ] {
        let d = PhotonDistribution::laguerre_gauss(s, n).unwrap();
        let t = d.pmf_table(d.cutoff() as usize);
        let total: f64 = t.iter().sum();
        let mean: f64 = t.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        worst = worst
            .max((total - 1.0).abs())
            .max((mean - d.mean()).abs() / d.mean().max(1.0));
    }
    check(
        "photon-number laws normalize with correct mean",
        worst < 1e-9,
        format!("worst deviation {worst:.2e}"),
    )
}

fn synthetic(n: usize, e: f64, delta: f64, rng: &mut Xoshiro256PlusPlus) -> SiftedTriple {
    use rand::Rng;
    let alice: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    let bob = alice.iter().map(|&a| a ^ rng.random_bool(e)).collect();
    let eve_ambiguous: Vec<bool> = (0..n).map(|_| rng.random_bool(delta)).collect();
    SiftedTriple {
        eve_values: alice.clone(),
        alice,
        bob,
        eve_ambiguous,
        pulses: (0..n as u64).collect(),
    }
}

fn gad_checks() -> Vec<Check> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    let n = 200_000;
    let t = synthetic(n, 0.1, 0.5, &mut rng);
    let out = gad(&t, 1, &mut rng).unwrap();
    let s = out.stats();
    let want = expected_distilled_ber(0.1).unwrap();
    let sigma = (want * (1.0 - want) / s.len as f64).sqrt();
    let amb = expected_distilled_ambiguity(0.5);
    let sigma_a = (amb * (1.0 - amb) / s.len as f64).sqrt();
    vec![
        check(
            "distilled error rate follows e^2/(e^2+(1-e)^2)",
            (s.bob_ber() - want).abs() < 4.0 * sigma,
            format!("{:.5} vs {want:.5}", s.bob_ber()),
        ),
        check(
            "distilled ambiguity follows 1-(1-d)^2",
            (s.eve_ambiguous_fraction() - amb).abs() < 4.0 * sigma_a,
            format!("{:.5} vs {amb:.5}", s.eve_ambiguous_fraction()),
        ),
    ]
}

fn conservation_check() -> Check {
    let cfg = SessionConfig {
        mu: 1.7,
        amplifier: AmplifierSpec::quantum_limited(16.0).unwrap(),
        fiber: crate::optical_path::FiberSpec::smf(20.0).unwrap(),
        ..Default::default()
    };
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    let bad = (0..20_000)
        .map(|_| trace_pulse(&cfg, &mut rng))
        .filter(|t| {
            t.detected + t.tapped_signal + t.tapped_orth != t.emitted_signal + t.emitted_orth
        })
        .count();
    check(
        "every photon reaches Bob or Eve",
        bad == 0,
        format!("{bad} unbalanced pulses of 20000"),
    )
}

fn fidelity_check() -> Check {
    let f = amplified_state(1.7, &AmplifierSpec::quantum_limited(16.0).unwrap())
        .unwrap()
        .fidelity();
    check(
        "amplified polarization fidelity",
        (f - 42.2 / 57.2).abs() < 1e-12,
        format!("{f:.6}"),
    )
}

fn determinism_check() -> Check {
    let spec = |workers| SweepSpec {
        lengths_km: vec![0.0, 50.0],
        curves: vec![
            CurveSpec::new("a", 1.0, 1.5, vec![0, 1]),
            CurveSpec::new("b", 16.0, 1.7, vec![0, 2]),
        ],
        budget: PulseBudget::fixed(300_000),
        seed: 99,
        workers: Some(workers),
        ..Default::default()
    };
    let csv = |w| {
        let mut buf = Vec::new();
        write_csv(&run_sweep(&spec(w)).unwrap(), &mut buf).unwrap();
        buf
    };
    let one = csv(1);
    let ok = [2, 4].iter().all(|&w| csv(w) == one);
    check(
        "identical CSV for 1, 2 and 4 workers",
        ok,
        format!("{} bytes", one.len()),
    )
}

pub fn run_selftest() -> Vec<Check> {
    let mut v = vec![pmf_checks(), fidelity_check(), conservation_check()];
    v.extend(gad_checks());
    v.push(determinism_check());
    v
}
