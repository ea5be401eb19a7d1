//! Block composition for spaces with non-summable singular values.
//!
//! The positive integers are split into blocks `I_j = {2j-1} ∪ {k : v2(k) = j}`
//! (each block keeps a divergent square sum), an increasing index sequence
//! `n_0 < n_1 < ...` is chosen greedily from a target decay `tau`, and the
//! per-block integration lower bounds `sigma_{2j-1}/2` are composed through
//! the weights `2^{-j/2}`. The inner block spaces are abstract: only their
//! guaranteed lower value enters.
//!
//! Selected indices outgrow every machine integer almost immediately (for
//! `tau_n = ln(n+2)^{-1/2}` the second index is about `e^48`), so they are
//! kept as [`Count`], exact below `2^62` and logarithmic above.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::seq::{DecaySequence, DecayTail, Profile};

const EXACT_LIMIT: u64 = 1 << 62;

/// A nonnegative integer, exact when below `2^62`, otherwise known through
/// its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Count {
    Exact(u64),
    Huge { ln: f64 },
}

impl Count {
    pub fn from_ln(ln: f64) -> Count {
        if ln < (EXACT_LIMIT as f64).ln() {
            Count::Exact(ln.exp().ceil() as u64)
        } else {
            Count::Huge { ln }
        }
    }

    pub fn ln(&self) -> f64 {
        match *self {
            Count::Exact(0) => f64::NEG_INFINITY,
            Count::Exact(n) => (n as f64).ln(),
            Count::Huge { ln } => ln,
        }
    }

    pub fn as_exact(&self) -> Option<u64> {
        match *self {
            Count::Exact(n) => Some(n),
            Count::Huge { .. } => None,
        }
    }

    /// Smallest representable count above `self`.
    pub fn successor(&self) -> Count {
        match *self {
            Count::Exact(n) if n + 1 < EXACT_LIMIT => Count::Exact(n + 1),
            Count::Exact(n) => Count::Huge {
                ln: next_up((n as f64 + 1.0).ln()),
            },
            Count::Huge { ln } => Count::Huge { ln: next_up(ln) },
        }
    }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

impl Eq for Count {}

impl PartialOrd for Count {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Count {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Count::Exact(a), Count::Exact(b)) => a.cmp(b),
            (Count::Exact(_), Count::Huge { .. }) => Ordering::Less,
            (Count::Huge { .. }, Count::Exact(_)) => Ordering::Greater,
            (Count::Huge { ln: a }, Count::Huge { ln: b }) => a.total_cmp(b),
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Exact(n) => write!(f, "{n}"),
            Count::Huge { ln } => write!(f, "exp:{ln:.16e}"),
        }
    }
}

impl FromStr for Count {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |e: String| Error::InvalidArgument(format!("bad count '{s}': {e}"));
        match s.strip_prefix("exp:") {
            Some(rest) => {
                let ln: f64 = rest.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
                if ln.is_finite() && ln >= (EXACT_LIMIT as f64).ln() {
                    Ok(Count::Huge { ln })
                } else {
                    Err(bad("logarithmic counts start at 2^62".into()))
                }
            }
            None => {
                let n: u64 = s.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
                if n < EXACT_LIMIT {
                    Ok(Count::Exact(n))
                } else {
                    Ok(Count::Huge { ln: (n as f64).ln() })
                }
            }
        }
    }
}

/// `I_1, ..., I_{j_max}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    pub j_max: u32,
}

impl Partition {
    pub fn new(j_max: u32) -> Result<Self> {
        if j_max == 0 {
            return Err(Error::InvalidArgument("j_max must be >= 1".into()));
        }
        Ok(Partition { j_max })
    }

    /// The block containing `k >= 1` (not limited to `j_max`).
    pub fn block_of(k: u64) -> u64 {
        assert!(k >= 1, "blocks cover the positive integers");
        if k % 2 == 1 {
            k / 2 + 1
        } else {
            k.trailing_zeros() as u64
        }
    }

    /// `k in I_j`: `k = 2j - 1` or `k = 2^j mod 2^(j+1)`.
    pub fn contains(j: u64, k: u64) -> bool {
        if j == 0 || k == 0 {
            return false;
        }
        if j <= u64::MAX / 2 && k == 2 * j - 1 {
            return true;
        }
        j < 63 && k % (1u64 << (j + 1)) == 1u64 << j
    }

    /// Elements of `I_j` up to `limit`, increasing.
    pub fn block(j: u32, limit: u64) -> Vec<u64> {
        let anchor = 2 * j as u64 - 1;
        let mut out = Vec::new();
        if j < 63 {
            let step = 1u64 << (j + 1);
            let mut k = 1u64 << j;
            while k <= limit {
                out.push(k);
                match k.checked_add(step) {
                    Some(next) => k = next,
                    None => break,
                }
            }
        }
        if anchor <= limit {
            let pos = out.partition_point(|&k| k < anchor);
            out.insert(pos, anchor);
        }
        out
    }
}

/// `sigma_k` for `k >= 1` stored as `sigma.get(k - 1)`.
fn sigma_at(sigma: &DecaySequence, k: u64) -> f64 {
    sigma.get((k - 1) as usize)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceCheck {
    /// `sum_{k in I_j, k <= R} sigma_k^2`.
    pub block_sum: f64,
    /// `sum_{l >= 1, l 2^(j+1) <= R} sigma_{l 2^(j+1)}^2`.
    pub dyadic_sum: f64,
    /// `2^-(j+1) sum_{2^(j+1) <= k <= R} sigma_k^2`.
    pub scaled_tail: f64,
    pub chain_holds: bool,
}

/// Partial square sum of `sigma` over `I_j` up to `R`, with the comparison
/// chain `block_sum >= dyadic_sum >= scaled_tail` on the truncated range.
pub fn block_tail_divergence_check(sigma: &DecaySequence, j: u32, limit: u64) -> Result<DivergenceCheck> {
    if j == 0 || j >= 62 {
        return Err(Error::InvalidArgument(format!("block index {j} out of range")));
    }
    let block_sum: f64 = Partition::block(j, limit)
        .iter()
        .map(|&k| sigma_at(sigma, k).powi(2))
        .sum();
    let step = 1u64 << (j + 1);
    let mut dyadic_sum = 0.0;
    let mut k = step;
    while k <= limit {
        dyadic_sum += sigma_at(sigma, k).powi(2);
        k += step;
    }
    let scaled_tail = if step <= limit {
        (step..=limit).map(|k| sigma_at(sigma, k).powi(2)).sum::<f64>() / step as f64
    } else {
        0.0
    };
    let slack = 1e-12;
    let chain_holds = block_sum >= dyadic_sum * (1.0 - slack) && dyadic_sum >= scaled_tail * (1.0 - slack);
    Ok(DivergenceCheck {
        block_sum,
        dyadic_sum,
        scaled_tail,
        chain_holds,
    })
}

/// `tau_n`, also for `n` known only through `ln n`.
pub fn decay_value(tau: &DecaySequence, n: Count) -> Result<f64> {
    match n {
        Count::Exact(i) if (i as usize as u64) == i => Ok(tau.get(i as usize)),
        _ => match tau.tail() {
            None => Ok(0.0),
            Some(DecayTail::Single(p)) => Ok(p.value_at_ln(n.ln())),
            Some(DecayTail::Doubled { .. }) => Err(Error::Unsupported(
                "paired tails cannot be evaluated at logarithmic indices".into(),
            )),
        },
    }
}

/// Smallest `k >= start` with `p(k) <= threshold`, or `None` past `max_ln`.
fn profile_first_below(p: &Profile, start: u64, threshold: f64, max_ln: f64) -> Result<Option<Count>> {
    if p.value(start as i64) <= threshold {
        return Ok(Some(Count::Exact(start)));
    }
    if threshold <= 0.0 {
        return Ok(None);
    }
    // ln of the real root k*
    let ln_root = match *p {
        Profile::Geometric { scale, q } => {
            let k = (threshold / scale).ln() / q.ln();
            k.ln()
        }
        Profile::PowerLog {
            r,
            beta,
            scale,
            stretch,
            shift,
        } => {
            // solve ln scale - r L - beta ln L = ln threshold for L = ln u
            let f = |l: f64| scale.ln() - r * l - beta * l.ln() - threshold.ln();
            let mut lo = (stretch * start as f64 + shift).ln();
            let mut hi = lo.max(1.0);
            while f(hi) > 0.0 {
                hi *= 2.0;
                if hi > 4.0 * max_ln.max(1.0) + 100.0 {
                    return Ok(None);
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if hi < 40.0 {
                ((hi.exp() - shift) / stretch).max(1.0).ln()
            } else {
                hi - stretch.ln()
            }
        }
    };
    if ln_root > max_ln {
        return Ok(None);
    }
    let c = Count::from_ln(ln_root);
    match c {
        Count::Exact(mut k) => {
            k = k.max(start);
            while k > start && p.value(k as i64 - 1) <= threshold {
                k -= 1;
            }
            while p.value(k as i64) > threshold {
                k += 1;
            }
            Ok(Some(Count::Exact(k)))
        }
        Count::Huge { mut ln } => {
            while p.value_at_ln(ln) > threshold {
                ln = next_up(ln) + ln.abs() * 1e-15;
            }
            Ok(Some(Count::Huge { ln }))
        }
    }
}

/// Smallest `n >= start` with `tau_n <= threshold`.
pub fn first_below(tau: &DecaySequence, start: Count, threshold: f64, max_ln: f64) -> Result<Option<Count>> {
    if let Count::Exact(s) = start {
        let len = tau.len() as u64;
        if s < len {
            if let Some(i) = (s..len).find(|&i| tau.get(i as usize) <= threshold) {
                return Ok(Some(Count::Exact(i)));
            }
        }
    }
    match tau.tail() {
        None => Ok(Some(start.max(Count::Exact(tau.len() as u64)))),
        Some(DecayTail::Single(p)) => match start {
            Count::Exact(s) => profile_first_below(&p, s.max(tau.len() as u64), threshold, max_ln),
            Count::Huge { ln } => {
                if p.value_at_ln(ln) <= threshold {
                    Ok(Some(start))
                } else {
                    // the root lies beyond start; search from the exact limit
                    let r = profile_first_below(&p, EXACT_LIMIT - 1, threshold, max_ln)?;
                    Ok(r.map(|c| c.max(start)))
                }
            }
        },
        Some(DecayTail::Doubled { .. }) => Err(Error::Unsupported(
            "selection needs a single-profile tail".into(),
        )),
    }
}

/// `2^{-j/2} sigma_{2j-1} / 2`, the threshold `tau(n_{j-1})` must meet.
pub fn selection_threshold(sigma: &DecaySequence, j: u32) -> f64 {
    2f64.powf(-(j as f64) / 2.0) * sigma_at(sigma, 2 * j as u64 - 1) / 2.0
}

/// Greedy `n_0 < n_1 < ... < n_{j_max}` with
/// `tau(n_{j-1}) <= 2^{-j/2} sigma_{2j-1} / 2` for `j = 1..=j_max + 1`.
///
/// `n_{j_max}` is chosen by the condition for block `j_max + 1`, so that the
/// last block `[n_{j_max-1}, n_{j_max})` has a right end. Fails when an
/// index would exceed `e^max_ln`.
pub fn select_indices(
    sigma: &DecaySequence,
    tau: &DecaySequence,
    j_max: u32,
    max_ln: f64,
) -> Result<Vec<(u32, Count)>> {
    let mut out = Vec::new();
    let mut start = Count::Exact(0);
    for j in 1..=j_max + 1 {
        let thr = selection_threshold(sigma, j);
        let n = first_below(tau, start, thr, max_ln)?.ok_or_else(|| {
            Error::Budget(format!(
                "tau does not fall below {thr:e} before e^{max_ln} (block {j})"
            ))
        })?;
        out.push((j - 1, n));
        start = n.successor();
    }
    Ok(out)
}

/// Lower value `sigma_{2j-1}/2` guaranteed by block `j` for fewer than `n_j`
/// evaluations, valid from `start = n_{j-1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockOracle {
    pub j: u32,
    pub start: Count,
    pub n_j: Count,
    pub lower_value: f64,
}

pub fn block_oracles(sigma: &DecaySequence, indices: &[(u32, Count)]) -> Result<Vec<BlockOracle>> {
    let mut out = Vec::new();
    for w in indices.windows(2) {
        let (j, n_j) = (w[1].0, w[1].1);
        if w[1].1 <= w[0].1 {
            return Err(Error::InvalidArgument("indices must increase".into()));
        }
        out.push(BlockOracle {
            j,
            start: w[0].1,
            n_j,
            lower_value: sigma_at(sigma, 2 * j as u64 - 1) / 2.0,
        });
    }
    Ok(out)
}

/// `2^{-j/2} lower_value_j` for the block with `n_{j-1} <= n < n_j`.
pub fn composed_lower_bound(oracles: &[BlockOracle], n: Count) -> Result<f64> {
    let o = oracles
        .iter()
        .find(|o| o.start <= n && n < o.n_j)
        .ok_or_else(|| {
            Error::OutOfRange(format!(
                "n = {n} outside [{}, {})",
                oracles.first().map_or(Count::Exact(0), |o| o.start),
                oracles.last().map_or(Count::Exact(0), |o| o.n_j)
            ))
        })?;
    Ok(2f64.powf(-(o.j as f64) / 2.0) * o.lower_value)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompositionCheck {
    pub blocks: usize,
    /// Points evaluated one by one from `n_0`.
    pub exact_points: u64,
    /// Log-spaced points inside each block.
    pub sampled_points: u64,
    /// Smallest `composed(n) - tau_n` seen.
    pub min_margin: f64,
    pub holds: bool,
}

/// Checks `composed_lower_bound(n) >= tau_n` on `[n_0, n_{j_max})`: at every
/// block start (which decides the whole block since the bound is constant
/// there and `tau` is nonincreasing), at each integer of the first
/// `exact_span` indices, and at `samples` log-spaced points per block.
pub fn verify_composition(
    oracles: &[BlockOracle],
    tau: &DecaySequence,
    exact_span: u64,
    samples: usize,
) -> Result<CompositionCheck> {
    let mut check = CompositionCheck {
        blocks: oracles.len(),
        exact_points: 0,
        sampled_points: 0,
        min_margin: f64::INFINITY,
        holds: true,
    };
    let record = |n: Count, check: &mut CompositionCheck| -> Result<()> {
        let m = composed_lower_bound(oracles, n)? - decay_value(tau, n)?;
        check.min_margin = check.min_margin.min(m);
        if m < 0.0 {
            check.holds = false;
        }
        Ok(())
    };
    for o in oracles {
        record(o.start, &mut check)?;
        let (a, b) = (o.start.ln().max(0.0), o.n_j.ln());
        for s in 0..samples {
            let ln = a + (b - a) * (s as f64 + 0.5) / samples as f64;
            let n = Count::from_ln(ln).max(o.start);
            if n < o.n_j {
                record(n, &mut check)?;
                check.sampled_points += 1;
            }
        }
    }
    if let (Some(first), Some(last)) = (oracles.first(), oracles.last()) {
        if let Some(s) = first.start.as_exact() {
            let end = match last.n_j {
                Count::Exact(e) => e.min(s + exact_span),
                Count::Huge { .. } => s + exact_span,
            };
            for n in s..end {
                record(Count::Exact(n), &mut check)?;
                check.exact_points += 1;
            }
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sqrt_decay() -> DecaySequence {
        // sigma_k = k^-1/2, stored as v_i = (i+1)^-1/2
        let p = Profile::PowerLog {
            r: 0.5,
            beta: 0.0,
            scale: 1.0,
            stretch: 1.0,
            shift: 1.0,
        };
        DecaySequence::with_tail(vec![1.0], Some(DecayTail::Single(p))).unwrap()
    }

    fn log_decay(beta: f64) -> DecaySequence {
        // tau_n = ln(n+2)^-beta
        let p = Profile::PowerLog {
            r: 0.0,
            beta,
            scale: 1.0,
            stretch: 1.0,
            shift: 2.0,
        };
        DecaySequence::with_tail(vec![], Some(DecayTail::Single(p))).unwrap()
    }

    #[test]
    fn first_blocks() {
        assert_eq!(Partition::block(1, 14), vec![1, 2, 6, 10, 14]);
        assert_eq!(Partition::block(2, 28), vec![3, 4, 12, 20, 28]);
        assert_eq!(Partition::block(3, 40), vec![5, 8, 24, 40]);
        for j in 1..=16u32 {
            assert_eq!(Partition::block(j, 1 << 20)[0], 2 * j as u64 - 1);
        }
    }

    #[test]
    fn blocks_tile_the_integers() {
        let limit = 1u64 << 16;
        let mut hits = vec![0u8; limit as usize + 1];
        for j in 1..=(limit as u32).div_ceil(2) {
            for k in Partition::block(j, limit) {
                hits[k as usize] += 1;
            }
        }
        assert!(hits[1..].iter().all(|&h| h == 1));
        for k in 1..=limit {
            let j = Partition::block_of(k);
            assert!(Partition::contains(j, k));
            for other in (1..=20).chain([k.div_ceil(2)]) {
                if other != j {
                    assert!(!Partition::contains(other, k), "k {k} in {other} and {j}");
                }
            }
        }
    }

    #[test]
    fn small_blocks_cover_evens_and_early_odds() {
        // odd numbers 13..63 belong to blocks 7..32
        let mut covered = Vec::new();
        for j in 1..=6 {
            covered.extend(Partition::block(j, 64));
        }
        covered.sort_unstable();
        let n = covered.len();
        covered.dedup();
        assert_eq!(covered.len(), n);
        let want: Vec<u64> = (1..=64).filter(|k| k % 2 == 0 || *k <= 11).collect();
        assert_eq!(covered, want);
    }

    proptest! {
        #[test]
        fn membership_matches_block_of(k in 1u64..u64::MAX / 2) {
            let j = Partition::block_of(k);
            prop_assert!(Partition::contains(j, k));
            prop_assert!(!Partition::contains(j + 1, k));
        }

        #[test]
        fn counts_order_by_value(a in 0u64..1 << 40, b in 0u64..1 << 40) {
            prop_assert_eq!(Count::Exact(a).cmp(&Count::Exact(b)), a.cmp(&b));
            let c: Count = Count::Exact(a).to_string().parse().unwrap();
            prop_assert_eq!(c, Count::Exact(a));
        }

        #[test]
        fn huge_counts_round_trip(ln in 43.0f64..1e6) {
            let c = Count::Huge { ln };
            prop_assert_eq!(c.to_string().parse::<Count>().unwrap(), c);
            prop_assert!(Count::Exact(u64::MAX >> 2) < c);
        }
    }

    #[test]
    fn divergence_checks() {
        let sigma = sqrt_decay();
        let mut prev = 0.0;
        for limit in [16u64, 64, 256, 1024, 4096] {
            let c = block_tail_divergence_check(&sigma, 1, limit).unwrap();
            assert!(c.chain_holds);
            assert!(c.block_sum > prev);
            prev = c.block_sum;
        }
        assert!(prev > 2.0);
        let finite = DecaySequence::new(vec![1.0, 0.5, 0.25]).unwrap();
        let a = block_tail_divergence_check(&finite, 1, 100).unwrap();
        let b = block_tail_divergence_check(&finite, 1, 10_000).unwrap();
        assert_eq!(a.block_sum, b.block_sum);
    }

    #[test]
    fn divergence_chain_on_random_monotone_sigma() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let mut v = Vec::with_capacity(10_000);
            let mut cur = 1.0f64;
            for _ in 0..10_000 {
                v.push(cur);
                cur *= rng.random_range(0.999..1.0);
            }
            let sigma = DecaySequence::new(v).unwrap();
            for j in 1..8 {
                assert!(block_tail_divergence_check(&sigma, j, 10_000).unwrap().chain_holds);
            }
        }
    }

    #[test]
    fn constant_sigma_selection() {
        let sigma = DecaySequence::new(vec![1.0; 64]).unwrap();
        let tau = log_decay(1.0);
        let idx = select_indices(&sigma, &tau, 3, 1e4).unwrap();
        for (j, n) in &idx {
            let thr = 2f64.powf(-(*j as f64 + 1.0) / 2.0) / 2.0;
            let v = decay_value(&tau, *n).unwrap();
            assert!(v <= thr);
            // smallest: one step earlier misses the threshold
            if let Count::Exact(k) = n {
                if *k > 0 {
                    assert!(tau.get(*k as usize - 1) > thr);
                }
                // n >= e^{2^{(j+3)/2}} - 2
                let want = (2f64.powf((*j as f64 + 3.0) / 2.0)).exp() - 2.0;
                assert!((*k as f64 - want).abs() <= 1.0);
            }
        }
        assert!(idx.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn finite_tau_terminates_immediately() {
        let sigma = sqrt_decay();
        let tau = DecaySequence::new(vec![1.0, 0.5, 0.1]).unwrap();
        let idx = select_indices(&sigma, &tau, 4, 10.0).unwrap();
        let ns: Vec<Count> = idx.iter().map(|e| e.1).collect();
        assert_eq!(ns[0], Count::Exact(2));
        assert!(ns.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn huge_indices_for_log_half_decay() {
        let sigma = sqrt_decay();
        let tau = log_decay(0.5);
        let idx = select_indices(&sigma, &tau, 6, 1e5).unwrap();
        assert_eq!(idx[0].1, Count::Exact(2979));
        match idx[1].1 {
            Count::Huge { ln } => assert!((ln - 48.0).abs() < 1e-9),
            c => panic!("expected a huge count, got {c}"),
        }
        for (j, n) in &idx {
            let thr = selection_threshold(&sigma, j + 1);
            assert!(decay_value(&tau, *n).unwrap() <= thr);
        }
        let oracles = block_oracles(&sigma, &idx).unwrap();
        assert_eq!(oracles.len(), 6);
        let check = verify_composition(&oracles, &tau, 1 << 16, 32).unwrap();
        assert!(check.holds);
        assert!(check.min_margin >= 0.0);
        assert_eq!(check.exact_points, 1 << 16);
    }

    #[test]
    fn composition_examples() {
        let one = [BlockOracle {
            j: 1,
            start: Count::Exact(5),
            n_j: Count::Exact(10),
            lower_value: 0.5,
        }];
        let v = composed_lower_bound(&one, Count::Exact(7)).unwrap();
        assert!((v - 0.5 / 2f64.sqrt()).abs() < 1e-16);
        assert!(composed_lower_bound(&one, Count::Exact(4)).is_err());
        assert!(composed_lower_bound(&one, Count::Exact(10)).is_err());
        let doubled = [BlockOracle {
            lower_value: 1.0,
            ..one[0]
        }];
        assert_eq!(
            composed_lower_bound(&doubled, Count::Exact(7)).unwrap(),
            2.0 * v
        );
    }
}
