use crate::error::{Error, Result};
use crate::seq::{DecaySequence, DecayTail, Provenance, SpectralSequence, Tail};

/// `gamma_l = sqrt(sum_j mu_j mu_{j+l})` for a finitely supported `mu`.
///
/// The result has bandwidth `2M` and carries
/// [`Provenance::ConvolutionSquare`]. Only the nonzero entries of `mu` are
/// visited, so the cost is quadratic in the support size, not in `M`.
pub fn convolution_square(mu: &SpectralSequence) -> Result<SpectralSequence> {
    if !mu.is_finite() {
        return Err(Error::Unsupported(
            "convolution square needs a finitely supported mu".into(),
        ));
    }
    let support: Vec<(i64, f64)> = mu.stored().filter(|(_, v)| *v != 0.0).collect();
    if support.is_empty() {
        return Err(Error::InvalidSequence("mu must not vanish identically".into()));
    }
    let m = mu.bandwidth();
    let out_bw = 2 * m;
    let mut sq = vec![0.0; out_bw + 1];
    // only l >= 0; the l < 0 half is the mirror image
    for &(a, va) in &support {
        for &(b, vb) in &support {
            if b >= a {
                sq[(b - a) as usize] += va * vb;
            }
        }
    }
    let mut table = vec![0.0; 2 * out_bw + 1];
    for (l, s) in sq.iter().enumerate() {
        let v = s.sqrt();
        table[out_bw + l] = v;
        table[out_bw - l] = v;
    }
    SpectralSequence::from_table(out_bw, table, Tail::none(), Provenance::ConvolutionSquare)
}

/// `gamma = (..., a_3, a_1, a_0, a_2, a_4, ...)`: `gamma_0 = a_0`,
/// `gamma_k = a_{2k}`, `gamma_{-k} = a_{2k-1}`.
pub fn interleave(a: &DecaySequence) -> Result<SpectralSequence> {
    let len = a.len();
    if len == 0 {
        return Err(Error::InvalidSequence("cannot interleave an empty sequence".into()));
    }
    // covers every stored a_k: 2M >= len-1 and 2M-1 >= len-2
    let m = len / 2;
    let mut table = vec![0.0; 2 * m + 1];
    table[m] = a.get(0);
    for k in 1..=m {
        table[m + k] = a.get(2 * k);
        table[m - k] = a.get(2 * k - 1);
    }
    let tail = match a.tail() {
        None => Tail::none(),
        Some(DecayTail::Single(p)) => Tail {
            pos: Some(p.compose(2, 0)),
            neg: Some(p.compose(2, -1)),
        },
        Some(DecayTail::Doubled { .. }) => {
            return Err(Error::Unsupported(
                "interleaving a paired tail is not supported".into(),
            ))
        }
    };
    SpectralSequence::from_table(m, table, tail, Provenance::Interleaved)
}

/// Nonincreasing rearrangement of `gamma`.
///
/// Ties are broken by smaller `|j|` first, then nonnegative before negative
/// index, so the order of indices is deterministic (the values do not depend
/// on it). The stored range is rearranged exactly; a symmetric tail becomes a
/// paired [`DecayTail::Doubled`], a one-sided tail a shifted single profile.
pub fn rearrangement(gamma: &SpectralSequence) -> Result<DecaySequence> {
    let mut entries: Vec<(i64, f64)> = gamma.stored().collect();
    entries.sort_by(|x, y| {
        y.1.total_cmp(&x.1)
            .then(x.0.unsigned_abs().cmp(&y.0.unsigned_abs()))
            .then(y.0.cmp(&x.0))
    });
    let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let len = values.len() as i64;
    let start = gamma.bandwidth() as i64 + 1;
    let t = gamma.tail();
    let tail = match (t.pos, t.neg) {
        (None, None) => None,
        (Some(p), Some(n)) if p == n => Some(DecayTail::Doubled { profile: p, start }),
        (Some(p), None) | (None, Some(p)) => Some(DecayTail::Single(p.compose(1, start - len))),
        _ => {
            return Err(Error::NonComputableRearrangement(
                "tails differ on the two sides".into(),
            ))
        }
    };
    if tail.is_some() {
        let min_stored = values.last().copied().unwrap_or(0.0);
        let first_tail = t
            .pos
            .map_or(0.0, |p| p.value(start))
            .max(t.neg.map_or(0.0, |p| p.value(start)));
        if first_tail > min_stored {
            return Err(Error::NonComputableRearrangement(format!(
                "tail value {first_tail} exceeds smallest stored value {min_stored}"
            )));
        }
    }
    DecaySequence::with_tail(values, tail)
}

/// Outcome of a b-regularity scan `v_{2n} >= b v_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BRegularity {
    pub holds: bool,
    /// Range of `n` actually checked.
    pub checked: (usize, usize),
    /// `min v_{2n} / v_n` over the checked range (1 when every `v_n` is 0).
    pub worst_ratio: f64,
    pub first_violation: Option<usize>,
}

/// `v_{2n} >= b v_n` for all `n >= 1` with `2n` inside the stored prefix.
pub fn check_b_regular(s: &DecaySequence, b: f64) -> Result<BRegularity> {
    let hi = s.len().saturating_sub(1) / 2;
    check_b_regular_on(s, b, 1, hi)
}

/// `v_{2n} >= b v_n` for `n` in `[lo, hi]` (tail values are used beyond the
/// stored prefix). Comparisons allow a relative slack of `1e-10`.
pub fn check_b_regular_on(s: &DecaySequence, b: f64, lo: usize, hi: usize) -> Result<BRegularity> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
    }
    let lo = lo.max(1);
    let mut worst = 1.0f64;
    let mut first_violation = None;
    for n in lo..=hi {
        let vn = s.get(n);
        if vn == 0.0 {
            continue;
        }
        let v2n = s.get(2 * n);
        let ratio = v2n / vn;
        worst = worst.min(ratio);
        if v2n < b * vn * (1.0 - 1e-10) && first_violation.is_none() {
            first_violation = Some(n);
        }
    }
    Ok(BRegularity {
        holds: first_violation.is_none(),
        checked: (lo, hi.max(lo.saturating_sub(1))),
        worst_ratio: worst,
        first_violation,
    })
}
