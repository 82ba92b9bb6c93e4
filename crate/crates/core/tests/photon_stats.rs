use aqkd::photon_stats::{sample_amplified_pair, PhotonDistribution};
use rand::SeedableRng;
use rand_distr::{Binomial, Distribution};
use rand_xoshiro::Xoshiro256PlusPlus;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const DRAWS: usize = 10_000_000;
const SIGNIFICANCE: f64 = 1e-3;

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Pearson statistic with adjacent low-expectation bins pooled; returns
/// `(p_value, degrees_of_freedom)`.
fn chi_square(counts: &[u64], pmf: &[f64], total: usize) -> (f64, usize) {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (k, &p) in pmf.iter().enumerate() {
        o += counts.get(k).copied().unwrap_or(0) as f64;
        e += p * total as f64;
        if e >= 20.0 {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    // remaining tail, including any mass beyond the table
    let tail_obs: u64 = counts.iter().skip(pmf.len()).sum();
    o += tail_obs as f64;
    let listed: f64 = pmf.iter().sum();
    e += (1.0 - listed).max(0.0) * total as f64;
    if let (Some(lo), Some(le)) = (obs.last_mut(), exp.last_mut()) {
        *lo += o;
        *le += e;
    }
    let stat: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = obs.len() - 1;
    let p = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat);
    (p, dof)
}

fn histogram(samples: impl Iterator<Item = u64>) -> Vec<u64> {
    let mut h = Vec::new();
    for n in samples {
        let n = n as usize;
        if n >= h.len() {
            h.resize(n + 1, 0);
        }
        h[n] += 1;
    }
    h
}

#[test]
fn sampler_matches_pmf_chi_square() {
    for (i, (s, n)) in [(0.272, 0.15), (3.33, 0.33), (27.2, 15.0)]
        .into_iter()
        .enumerate()
    {
        let d = PhotonDistribution::laguerre_gauss(s, n).unwrap();
        let mut r = rng(100 + i as u64);
        let h = histogram((0..DRAWS).map(|_| d.sample(&mut r).0));
        let pmf = d.pmf_table(d.cutoff() as usize);
        let (p, dof) = chi_square(&h, &pmf, DRAWS);
        assert!(p > SIGNIFICANCE, "LG({s},{n}): p = {p:.3e} with {dof} dof");
    }
}

#[test]
fn thinned_samples_match_thinned_pmf() {
    let d = PhotonDistribution::laguerre_gauss(27.2, 15.0).unwrap();
    let thinned = d.thin(0.01).unwrap();
    assert_eq!(
        thinned,
        PhotonDistribution::laguerre_gauss(0.272, 0.15).unwrap()
    );
    let mut r = rng(7);
    let h = histogram((0..DRAWS).map(|_| {
        let k = d.sample(&mut r).0;
        if k == 0 {
            0
        } else {
            Binomial::new(k, 0.01).unwrap().sample(&mut r)
        }
    }));
    let pmf = thinned.pmf_table(thinned.cutoff() as usize);
    let (p, dof) = chi_square(&h, &pmf, DRAWS);
    assert!(p > SIGNIFICANCE, "p = {p:.3e} with {dof} dof");
}

#[test]
fn vacuum_frequency_matches_closed_form() {
    let d = PhotonDistribution::laguerre_gauss(27.2, 15.0).unwrap();
    let p0 = (-1.7f64).exp() / 16.0;
    assert!((d.vacuum_probability() - p0).abs() < 1e-15);
    assert!((p0 - 0.0114177).abs() < 1e-7);
    let mut r = rng(8);
    let zeros = (0..DRAWS).filter(|_| d.sample(&mut r).0 == 0).count();
    let f = zeros as f64 / DRAWS as f64;
    let sigma = (p0 * (1.0 - p0) / DRAWS as f64).sqrt();
    assert!((f - p0).abs() < 3.0 * sigma, "{f} vs {p0}");
}

#[test]
fn sample_moments_within_four_sigma() {
    let n = 1_000_000;
    for (i, d) in [
        PhotonDistribution::bose_einstein(15.0).unwrap(),
        PhotonDistribution::laguerre_gauss(27.2, 15.0).unwrap(),
        PhotonDistribution::poisson(1.5).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let mut r = rng(20 + i as u64);
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut r).0 as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let se = (d.variance() / n as f64).sqrt();
        assert!((mean - d.mean()).abs() < 4.0 * se, "{d:?}: mean {mean}");
        // fourth-moment free bound on the variance estimate: 5% is > 4 sigma here
        assert!((var / d.variance() - 1.0).abs() < 0.05, "{d:?}: var {var}");
    }
    assert_eq!(
        PhotonDistribution::bose_einstein(15.0).unwrap().variance(),
        240.0
    );
}

#[test]
fn amplified_pair_marginals() {
    let mut r = rng(31);
    let n = 1_000_000;
    let (mut ss, mut so) = (0.0, 0.0);
    for _ in 0..n {
        let (a, b) = sample_amplified_pair(1.7, 16.0, 1.0, &mut r).unwrap();
        ss += a.0 as f64;
        so += b.0 as f64;
    }
    let sig = PhotonDistribution::laguerre_gauss(27.2, 15.0).unwrap();
    let orth = PhotonDistribution::bose_einstein(15.0).unwrap();
    assert!((ss / n as f64 - 42.2).abs() < 4.0 * (sig.variance() / n as f64).sqrt());
    assert!((so / n as f64 - 15.0).abs() < 4.0 * (orth.variance() / n as f64).sqrt());

    let mut ss = 0.0;
    for _ in 0..n {
        let (a, b) = sample_amplified_pair(2.5, 4.0 / 3.0, 1.0, &mut r).unwrap();
        ss += a.0 as f64;
        let _ = b;
    }
    let sig = PhotonDistribution::laguerre_gauss(10.0 / 3.0, 1.0 / 3.0).unwrap();
    assert!((sig.mean() - 3.667).abs() < 1e-3);
    assert!((ss / n as f64 - sig.mean()).abs() < 4.0 * (sig.variance() / n as f64).sqrt());
}

#[test]
fn tail_mass_below_tolerance() {
    for d in [
        PhotonDistribution::poisson(0.015).unwrap(),
        PhotonDistribution::poisson(1.5).unwrap(),
        PhotonDistribution::bose_einstein(0.01).unwrap(),
        PhotonDistribution::bose_einstein(15.0).unwrap(),
        PhotonDistribution::laguerre_gauss(27.2, 15.0).unwrap(),
        PhotonDistribution::laguerre_gauss(0.272, 0.15).unwrap(),
        PhotonDistribution::laguerre_gauss(500.0, 50.0).unwrap(),
    ] {
        let total: f64 = d.pmf_table(d.cutoff() as usize).iter().sum();
        assert!(total >= 1.0 - 1e-9, "{d:?}: {total}");
        assert!(total <= 1.0 + 1e-9, "{d:?}: {total}");
    }
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reductions_hold_pointwise(x in 0.0f64..40.0) {
            let be = PhotonDistribution::bose_einstein(x).unwrap();
            let lg0 = PhotonDistribution::laguerre_gauss(0.0, x).unwrap();
            let po = PhotonDistribution::poisson(x).unwrap();
            let lgp = PhotonDistribution::laguerre_gauss(x, 0.0).unwrap();
            for n in 0..150 {
                prop_assert!((be.pmf(n) - lg0.pmf(n)).abs() < 1e-12);
                prop_assert!((po.pmf(n) - lgp.pmf(n)).abs() < 1e-12);
            }
        }

        #[test]
        fn pmf_normalized_with_exact_moments(s in 0.0f64..60.0, n in 0.0f64..20.0) {
            let d = PhotonDistribution::laguerre_gauss(s, n).unwrap();
            let t = d.pmf_table(d.cutoff() as usize);
            let total: f64 = t.iter().sum();
            let mean: f64 = t.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
            let m2: f64 = t.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!((mean - (s + n)).abs() < 1e-7 * (1.0 + s + n));
            let var = m2 - mean * mean;
            prop_assert!((var - d.variance()).abs() < 1e-6 * (1.0 + d.variance()));
            prop_assert!(t.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }

        #[test]
        fn thinning_composes(s in 0.0f64..30.0, n in 0.0f64..10.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let d = PhotonDistribution::laguerre_gauss(s, n).unwrap();
            let two = d.thin(a).unwrap().thin(b).unwrap();
            let one = d.thin(a * b).unwrap();
            for k in 0..60 {
                prop_assert!((two.pmf(k) - one.pmf(k)).abs() < 1e-12);
            }
            prop_assert_eq!(d.thin(1.0).unwrap(), d);
        }
    }
}
