//! Generalized advantage distillation.
//!
//! Each party splits an even-length sifted key `x` into pairs
//! `[x(2i+1), x(2i)]`, keeps the even bits `f(i) = x(2i)` and forms the pair
//! parities `p(i) = x(2i+1) ^ x(2i)`. Alice publishes her parities; Bob keeps
//! `f(i)` wherever his parity agrees and returns the list of rejected `i`.
//! Eve keeps `e(2i)` at the same positions, and the result is unambiguous only
//! when both bits of the pair were.

use rand::Rng;

use crate::error::{Error, Result};
use crate::session::SiftedTriple;

/// Pair parities of a key, one bit per pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParitySequence(pub Vec<bool>);

impl ParitySequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Strictly increasing pair indices whose parities disagreed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RejectionIndex(pub Vec<usize>);

impl RejectionIndex {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_even(key: &[bool]) -> Result<()> {
    if key.len() % 2 == 1 {
        Err(Error::OddLength(key.len()))
    } else {
        Ok(())
    }
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        Err(Error::LengthMismatch { left, right })
    } else {
        Ok(())
    }
}

pub fn parity_sequence(key: &[bool]) -> Result<ParitySequence> {
    check_even(key)?;
    Ok(ParitySequence(
        key.chunks_exact(2).map(|p| p[0] ^ p[1]).collect(),
    ))
}

pub fn even_subsequence(key: &[bool]) -> Result<Vec<bool>> {
    check_even(key)?;
    Ok(key.iter().step_by(2).copied().collect())
}

/// Alice/Bob half of one distillation round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairDistillation {
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
    pub rejected: RejectionIndex,
}

pub fn distill_pair(alice: &[bool], bob: &[bool]) -> Result<PairDistillation> {
    check_len(alice.len(), bob.len())?;
    check_even(alice)?;
    let pa = parity_sequence(alice)?;
    let pb = parity_sequence(bob)?;
    let rejected: Vec<usize> =
        pa.0.iter()
            .zip(&pb.0)
            .enumerate()
            .filter_map(|(i, (a, b))| (a != b).then_some(i))
            .collect();

    let keep = pa.0.iter().zip(&pb.0).map(|(a, b)| a == b);
    let mut da = Vec::with_capacity(pa.len() - rejected.len());
    let mut db = Vec::with_capacity(pa.len() - rejected.len());
    for (i, k) in keep.enumerate() {
        if k {
            da.push(alice[2 * i]);
            db.push(bob[2 * i]);
        }
    }
    Ok(PairDistillation {
        alice: da,
        bob: db,
        rejected: RejectionIndex(rejected),
    })
}

/// Eve's distilled key for a given rejection list: `(values, ambiguous)`.
pub fn distill_eve<R: Rng + ?Sized>(
    values: &[bool],
    ambiguous: &[bool],
    rejected: &RejectionIndex,
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<bool>)> {
    check_len(values.len(), ambiguous.len())?;
    check_even(values)?;
    let pairs = values.len() / 2;
    if let Some(&last) = rejected.0.last() {
        if last >= pairs {
            return Err(Error::LengthMismatch {
                left: last + 1,
                right: pairs,
            });
        }
    }
    let kept = pairs - rejected.len();
    let mut out_v = Vec::with_capacity(kept);
    let mut out_a = Vec::with_capacity(kept);
    let mut rej = rejected.0.iter().peekable();
    for i in 0..pairs {
        if rej.peek() == Some(&&i) {
            rej.next();
            continue;
        }
        let amb = ambiguous[2 * i] || ambiguous[2 * i + 1];
        out_v.push(if amb { rng.random() } else { values[2 * i] });
        out_a.push(amb);
    }
    Ok((out_v, out_a))
}

/// Error and ambiguity rates of one key set against Alice's bits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KeyStats {
    pub len: usize,
    pub bob_errors: usize,
    pub eve_ambiguous: usize,
    pub eve_unambiguous_errors: usize,
}

impl KeyStats {
    pub fn measure(alice: &[bool], bob: &[bool], eve: &[bool], eve_ambiguous: &[bool]) -> Self {
        let mut s = KeyStats {
            len: alice.len(),
            ..Default::default()
        };
        for i in 0..alice.len() {
            s.bob_errors += (alice[i] != bob[i]) as usize;
            if eve_ambiguous[i] {
                s.eve_ambiguous += 1;
            } else {
                s.eve_unambiguous_errors += (alice[i] != eve[i]) as usize;
            }
        }
        s
    }

    pub fn bob_ber(&self) -> f64 {
        ratio(self.bob_errors, self.len)
    }

    pub fn eve_ambiguous_fraction(&self) -> f64 {
        ratio(self.eve_ambiguous, self.len)
    }

    /// Error rate on Eve's unambiguous bits; 0 when she has none.
    pub fn eve_ber(&self) -> f64 {
        ratio(self.eve_unambiguous_errors, self.len - self.eve_ambiguous)
    }
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub before: KeyStats,
    pub after: KeyStats,
    pub rejected: usize,
}

impl RoundStats {
    /// Distilled bits per input bit.
    pub fn kept_fraction(&self) -> f64 {
        ratio(self.after.len, self.before.len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillationOutcome {
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
    pub eve_values: Vec<bool>,
    pub eve_ambiguous: Vec<bool>,
    /// Input length `N` and rejection list of every round, in order.
    pub exchanges: Vec<(usize, RejectionIndex)>,
    pub rounds: Vec<RoundStats>,
}

impl DistillationOutcome {
    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    pub fn stats(&self) -> KeyStats {
        KeyStats::measure(
            &self.alice,
            &self.bob,
            &self.eve_values,
            &self.eve_ambiguous,
        )
    }

    /// Rejection list of the final round, if any round ran.
    pub fn rejected(&self) -> Option<&RejectionIndex> {
        self.exchanges.last().map(|(_, r)| r)
    }
}

/// Runs `rounds` distillation rounds; 0 returns the sifted keys unchanged.
/// Keys are truncated to even length before every round.
pub fn gad<R: Rng + ?Sized>(
    triple: &SiftedTriple,
    rounds: u32,
    rng: &mut R,
) -> Result<DistillationOutcome> {
    triple.check()?;
    let mut alice = triple.alice.clone();
    let mut bob = triple.bob.clone();
    let mut eve_v = triple.eve_values.clone();
    let mut eve_a = triple.eve_ambiguous.clone();
    let mut exchanges = Vec::with_capacity(rounds as usize);
    let mut stats = Vec::with_capacity(rounds as usize);

    for _ in 0..rounds {
        let even = alice.len() & !1;
        for k in [&mut alice, &mut bob, &mut eve_v, &mut eve_a] {
            k.truncate(even);
        }
        let before = KeyStats::measure(&alice, &bob, &eve_v, &eve_a);
        let pd = distill_pair(&alice, &bob)?;
        let (ev, ea) = distill_eve(&eve_v, &eve_a, &pd.rejected, rng)?;
        alice = pd.alice;
        bob = pd.bob;
        eve_v = ev;
        eve_a = ea;
        let after = KeyStats::measure(&alice, &bob, &eve_v, &eve_a);
        stats.push(RoundStats {
            before,
            after,
            rejected: pd.rejected.len(),
        });
        exchanges.push((even, pd.rejected));
    }

    Ok(DistillationOutcome {
        alice,
        bob,
        eve_values: eve_v,
        eve_ambiguous: eve_a,
        exchanges,
        rounds: stats,
    })
}

/// Bob's error rate after one round on a binary symmetric channel with error
/// rate `e`: a kept pair is wrong only when both of its bits were flipped.
pub fn expected_distilled_ber(e: f64) -> Result<f64> {
    crate::error::check_range("e", e, 0.0, 0.5)?;
    let both = e * e;
    let none = (1.0 - e) * (1.0 - e);
    Ok(both / (both + none))
}

/// Eve's ambiguous fraction after one round, `1 - (1 - delta)^2`.
pub fn expected_distilled_ambiguity(delta: f64) -> f64 {
    1.0 - (1.0 - delta) * (1.0 - delta)
}
