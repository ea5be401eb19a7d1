//! Certified lower bounds for integration on `H_gamma`.
//!
//! Everything rests on one matrix fact: for a PSD matrix `M` of order `n`
//! with diagonal `d`, the matrix `M o M - d d^T / n` is PSD. With
//! `K = |M|^2` this makes `K - alpha h h^T` PSD for a suitable `alpha`, and
//! any such `alpha` yields `e_n^2 >= ||h||^2 - 1/alpha`.
//!
//! Certificates built on tail sums use a bracketed `n(r)` and place the
//! certificate at its lower estimate, which is sound because `e_n` is
//! nonincreasing in `n`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seq::{interleave, Bounded, DecaySequence, Profile, Provenance, SpectralSequence};
use crate::space::{reduce_mod1, KernelSpec, TrigPolynomial};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertTag {
    /// Direct bound for convolution-square sequences.
    ConvolutionSquare,
    /// Bound at `n(r)` from the tail beyond `r`.
    TailBlock,
    /// Interleaved schedule, tail-block branch (`n(r) >= 2r`).
    InterleavedTail,
    /// Interleaved schedule, approximation-number branch at `2r`; bounds the
    /// sampling number only.
    InterleavedApprox,
    /// Tail-block certificate located by scanning `r` under b-regularity.
    BRegular,
}

impl CertTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertTag::ConvolutionSquare => "convolution_square",
            CertTag::TailBlock => "tail_block",
            CertTag::InterleavedTail => "interleaved_tail",
            CertTag::InterleavedApprox => "interleaved_approx",
            CertTag::BRegular => "b_regular",
        }
    }

    /// Whether the bound is on the integration error `e_n` (otherwise it
    /// bounds only the sampling number `g_n`).
    pub fn bounds_integration(&self) -> bool {
        !matches!(self, CertTag::InterleavedApprox)
    }
}

impl fmt::Display for CertTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CertTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "convolution_square" => CertTag::ConvolutionSquare,
            "tail_block" => CertTag::TailBlock,
            "interleaved_tail" => CertTag::InterleavedTail,
            "interleaved_approx" => CertTag::InterleavedApprox,
            "b_regular" => CertTag::BRegular,
            _ => return Err(Error::InvalidArgument(format!("unknown certificate tag '{s}'"))),
        })
    }
}

/// `e_n(H_gamma, INT)^2 >= bound_sq` (or `g_n^2 >= bound_sq`, see
/// [`CertTag::bounds_integration`]).
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub n: u64,
    pub bound_sq: f64,
    pub tag: CertTag,
    pub params: Vec<(String, String)>,
}

impl Certificate {
    fn new(n: u64, bound_sq: f64, tag: CertTag) -> Self {
        Certificate {
            n,
            bound_sq,
            tag,
            params: Vec::new(),
        }
    }

    fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn bound(&self) -> f64 {
        self.bound_sq.max(0.0).sqrt()
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// `lambda_min(M o M - d d^T / n)` with `d = diag(M)`; nonnegative for every
/// PSD `M` up to round-off.
pub fn schur_rank1_gap(m: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let d = m.diagonal();
    let form = m.component_mul(m) - (&d * d.transpose()) / n as f64;
    Ok(min_eigenvalue(form))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriterionCheck {
    pub holds: bool,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
}

/// Whether `(K(x_i, x_j)) - alpha (h(x_i) h(x_j))` is PSD up to
/// `1e-8 trace + n * kernel remainder`.
pub fn certificate_criterion_check(
    spec: &KernelSpec,
    h: &TrigPolynomial,
    alpha: f64,
    nodes: &[f64],
) -> Result<CriterionCheck> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let nodes: Vec<f64> = nodes.iter().map(|&x| reduce_mod1(x)).collect();
    let hv: Vec<f64> = nodes.iter().map(|&x| h.eval(x).re).collect();
    let g = spec.gram(&nodes);
    let n = nodes.len();
    let trace = g.trace();
    let form = DMatrix::from_fn(n, n, |i, j| g[(i, j)] - alpha * hv[i] * hv[j]);
    let min = min_eigenvalue(form);
    let tolerance = 1e-8 * trace + n as f64 * spec.remainder();
    Ok(CriterionCheck {
        holds: min >= -tolerance,
        min_eigenvalue: min,
        tolerance,
    })
}

/// Runs the criterion on `trials` random node sets of size `n`; returns the
/// number of sets on which it holds.
pub fn criterion_monte_carlo<R: Rng>(
    spec: &KernelSpec,
    h: &TrigPolynomial,
    alpha: f64,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<usize> {
    let mut ok = 0;
    for _ in 0..trials {
        let nodes: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        if certificate_criterion_check(spec, h, alpha, &nodes)?.holds {
            ok += 1;
        }
    }
    Ok(ok)
}

/// `max{0, g0_sq (1 - n g0_sq / norm_sq)}`.
pub fn convolution_square_bound(g0_sq: f64, norm_sq: f64, n: u64) -> f64 {
    if g0_sq == 0.0 {
        return 0.0;
    }
    (g0_sq * (1.0 - n as f64 * g0_sq / norm_sq)).max(0.0)
}

/// Lower bound for `gamma^2 = mu * mu` (the sequence must carry
/// convolution-square provenance).
pub fn convolution_square_lower(gamma: &SpectralSequence, n: u64) -> Result<Certificate> {
    if gamma.provenance() != Provenance::ConvolutionSquare {
        return Err(Error::Hypothesis(format!(
            "needs a convolution-square sequence, got {:?}",
            gamma.provenance()
        )));
    }
    let g0_sq = gamma.center().powi(2);
    let norm = gamma.norm_sq()?;
    // smaller norm gives the smaller bound
    let bound = convolution_square_bound(g0_sq, norm.lo(), n);
    let alpha = norm.lo() / (n.max(1) as f64 * g0_sq * g0_sq);
    Ok(Certificate::new(n, bound, CertTag::ConvolutionSquare)
        .param("gamma0_sq", g0_sq)
        .param("norm_sq", norm.lo())
        .param("alpha", alpha))
}

/// `floor(s2^2 / (2 s4))`, with quotients within `1e-12` (relative) of an
/// integer taken as that integer.
pub fn tail_block_index(s2: f64, s4: f64) -> u64 {
    let x = s2 * s2 / (2.0 * s4);
    let k = x.round();
    if (x - k).abs() <= 1e-12 * k.max(1.0) {
        k as u64
    } else {
        x.floor() as u64
    }
}

/// Suffix sums `sum_{j >= r} gamma_j^p` for `p = 2, 4` on the nonnegative
/// side, bracketed for the tail.
#[derive(Clone, Debug)]
pub struct TailSums {
    s2: Vec<f64>,
    s4: Vec<f64>,
    t2: Bounded,
    t4: Bounded,
    tail: Option<Profile>,
}

impl TailSums {
    pub fn new(gamma: &SpectralSequence) -> Result<Self> {
        let m = gamma.bandwidth();
        let mut s2 = vec![0.0; m + 2];
        let mut s4 = vec![0.0; m + 2];
        for j in (0..=m).rev() {
            let v = gamma.get(j as i64).powi(2);
            s2[j] = s2[j + 1] + v;
            s4[j] = s4[j + 1] + v * v;
        }
        let tail = gamma.tail().pos;
        let (t2, t4) = match tail {
            Some(p) => (p.power_sum(m as i64 + 1, 2.0)?, p.power_sum(m as i64 + 1, 4.0)?),
            None => (Bounded::exact(0.0), Bounded::exact(0.0)),
        };
        Ok(TailSums { s2, s4, t2, t4, tail })
    }

    /// `(sum_{j >= r} gamma_j^2, sum_{j >= r} gamma_j^4)`.
    pub fn at(&self, r: u64) -> Result<(Bounded, Bounded)> {
        let r = r as usize;
        if r < self.s2.len() {
            Ok((
                Bounded::exact(self.s2[r]) + self.t2,
                Bounded::exact(self.s4[r]) + self.t4,
            ))
        } else {
            match self.tail {
                Some(p) => Ok((p.power_sum(r as i64, 2.0)?, p.power_sum(r as i64, 4.0)?)),
                None => Ok((Bounded::exact(0.0), Bounded::exact(0.0))),
            }
        }
    }

    /// Bracket `[n_lo, n_hi]` for `n(r)` together with the tail sums.
    pub fn block(&self, r: u64) -> Result<TailBlock> {
        let (s2, s4) = self.at(r)?;
        if s4.hi() == 0.0 {
            return Err(Error::Hypothesis(format!("gamma vanishes beyond r = {r}")));
        }
        let n_lo = tail_block_index(s2.lo(), s4.hi());
        let n_hi = if s4.lo() > 0.0 {
            tail_block_index(s2.hi(), s4.lo())
        } else {
            u64::MAX
        };
        Ok(TailBlock {
            r,
            n_lo,
            n_hi,
            s2,
            s4,
        })
    }
}

/// Tail sums beyond `r` and the bracket for `n(r)`.
///
/// The sequence `mu_k = gamma_k^2 / sqrt(s2)` on `k >= r` has a convolution
/// square dominated by `gamma`, with center `s4 / s2` and squared norm `s2`,
/// so `e_n^2 >= (s4/s2) (1 - n s4/s2^2)` for every `n`. At `n = n(r)` this
/// is at least `s2 / (4 (n(r) + 1))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBlock {
    pub r: u64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub s2: Bounded,
    pub s4: Bounded,
}

impl TailBlock {
    /// Certified `e_n^2` lower bound, with the tail brackets resolved in
    /// the unfavorable direction.
    pub fn bound_at(&self, n: u64) -> f64 {
        let u_lo = self.s4.lo() / self.s2.hi();
        let v_hi = self.s4.hi() / (self.s2.lo() * self.s2.lo());
        (u_lo * (1.0 - n as f64 * v_hi)).max(0.0)
    }

    /// Bound at the certified index `n_lo`.
    pub fn bound_sq(&self) -> f64 {
        self.bound_at(self.n_lo)
    }
}

fn check_tail_block_hypotheses(gamma: &SpectralSequence) -> Result<()> {
    gamma.check_nonincreasing_nonneg()?;
    gamma.check_mirror_dominates()
}

/// Certificate at `n(r) = floor((sum_{j>=r} gamma_j^2)^2 / (2 sum_{j>=r} gamma_j^4))`,
/// see [`TailBlock`] for the bound.
pub fn tail_block_lower(gamma: &SpectralSequence, r: u64) -> Result<Certificate> {
    check_tail_block_hypotheses(gamma)?;
    let b = TailSums::new(gamma)?.block(r)?;
    Ok(block_certificate(&b, CertTag::TailBlock))
}

fn block_certificate(b: &TailBlock, tag: CertTag) -> Certificate {
    Certificate::new(b.n_lo, b.bound_sq(), tag)
        .param("r", b.r)
        .param("n_r", b.n_lo)
        .param("n_r_hi", b.n_hi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleEntry {
    pub r: u64,
    /// Lower estimate of `n(r)`.
    pub n_r: u64,
    pub certificate: Certificate,
    /// `(1/(8n)) sum_{k>=n} a_k^2` for the tail branch,
    /// `(1/(16r)) sum_{k>=2r} a_k^2` for the approximation branch.
    pub target_sq: f64,
}

/// For `gamma = interleave(a)` and `r = 1..=r_max`: when `n(r) >= 2r` a
/// tail-block certificate at `n(r)`, otherwise `g_{2r}^2 >= a_{2r}^2` at
/// index `2r`.
pub fn interleaved_schedule(a: &DecaySequence, r_max: u64) -> Result<Vec<ScheduleEntry>> {
    let gamma = interleave(a)?;
    check_tail_block_hypotheses(&gamma)?;
    let sums = TailSums::new(&gamma)?;
    let mut out = Vec::new();
    for r in 1..=r_max {
        let b = match sums.block(r) {
            Ok(b) => b,
            Err(Error::Hypothesis(_)) => break,
            Err(e) => return Err(e),
        };
        let entry = if b.n_lo >= 2 * r {
            let n = b.n_lo;
            let target = a.power_sum(n as usize, 2.0)?.lo() / (8.0 * n as f64);
            ScheduleEntry {
                r,
                n_r: n,
                certificate: block_certificate(&b, CertTag::InterleavedTail),
                target_sq: target,
            }
        } else {
            let gr = gamma.get(r as i64);
            let target = a.power_sum(2 * r as usize, 2.0)?.lo() / (16.0 * r as f64);
            ScheduleEntry {
                r,
                n_r: b.n_lo,
                certificate: Certificate::new(2 * r, gr * gr, CertTag::InterleavedApprox)
                    .param("r", r)
                    .param("n_r", b.n_lo),
                target_sq: target,
            }
        };
        out.push(entry);
    }
    Ok(out)
}

/// Largest `b` with `gamma_{2k} >= b gamma_k` for `k` in `[lo, hi]`.
pub fn measured_b(gamma: &SpectralSequence, lo: u64, hi: u64) -> f64 {
    (lo.max(1)..=hi)
        .map(|k| {
            let g = gamma.get(k as i64);
            if g == 0.0 {
                1.0
            } else {
                gamma.get(2 * k as i64) / g
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn check_b_regular_spectral(gamma: &SpectralSequence, b: f64) -> Result<()> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
    }
    let hi = (gamma.bandwidth() as u64 / 2).max(1);
    for k in 1..=hi {
        let (g, g2) = (gamma.get(k as i64), gamma.get(2 * k as i64));
        if g2 < b * g * (1.0 - 1e-10) {
            return Err(Error::Hypothesis(format!(
                "not {b}-regular: gamma_{} / gamma_{k} = {}",
                2 * k,
                g2 / g
            )));
        }
    }
    Ok(())
}

/// Certificate at index `n` from a scan over `r`: the first `r` with
/// `n <= n(r)` fixes `C = n(r)/n`, and the bound is the best
/// [`TailBlock::bound_at`] over `r` up to `n(r) > 4n`.
pub fn b_regular_lower(
    gamma: &SpectralSequence,
    b: f64,
    n: u64,
    r_budget: u64,
) -> Result<Certificate> {
    check_tail_block_hypotheses(gamma)?;
    check_b_regular_spectral(gamma, b)?;
    let sums = TailSums::new(gamma)?;
    b_regular_scan(&sums, b, n, r_budget)
}

/// Scan behind [`b_regular_lower`], for callers that certify many `n` on
/// one sequence.
pub fn b_regular_scan(sums: &TailSums, b: f64, n: u64, r_budget: u64) -> Result<Certificate> {
    let mut cover = None;
    let mut best = (0u64, 0u64, 0.0f64);
    for r in 0..=r_budget {
        let blk = sums.block(r)?;
        let v = blk.bound_at(n);
        if v > best.2 {
            best = (r, blk.n_lo, v);
        }
        if cover.is_none() && blk.n_lo >= n {
            cover = Some(blk);
        }
        if blk.n_lo > 4 * n.max(1) {
            break;
        }
    }
    let cover = cover.ok_or_else(|| Error::Budget(format!("no r <= {r_budget} with n(r) >= {n}")))?;
    let c = cover.n_hi as f64 / n.max(1) as f64;
    Ok(Certificate::new(n, best.2, CertTag::BRegular)
        .param("r", best.0)
        .param("n_r", best.1)
        .param("r_cover", cover.r)
        .param("C", c)
        .param("b", b))
}

/// Best [`TailBlock::bound_at`] for index `n` over `r <= r_budget`, with no
/// regularity assumption. Stops early once `n(r) > 4n`.
pub fn best_tail_block(sums: &TailSums, n: u64, r_budget: u64) -> Result<Certificate> {
    let mut best = (0u64, 0u64, 0.0f64);
    for r in 0..=r_budget {
        let blk = match sums.block(r) {
            Ok(b) => b,
            Err(Error::Hypothesis(_)) => break,
            Err(e) => return Err(e),
        };
        let v = blk.bound_at(n);
        if v > best.2 {
            best = (r, blk.n_lo, v);
        }
        if blk.n_lo > 4 * n.max(1) {
            break;
        }
    }
    Ok(Certificate::new(n, best.2, CertTag::TailBlock)
        .param("r", best.0)
        .param("n_r", best.1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoublingChain {
    /// First `r` with `n(r) >= 1`.
    pub r0: u64,
    pub checked: u64,
    /// `max n(2r) / n(r)` over the checked range.
    pub worst_ratio: f64,
    pub limit: f64,
    pub first_violation: Option<u64>,
}

impl DoublingChain {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks `n(2r) <= (2/b^4) n(r)` for `r0 <= r <= r_max`.
pub fn doubling_chain(gamma: &SpectralSequence, b: f64, r_max: u64) -> Result<DoublingChain> {
    let sums = TailSums::new(gamma)?;
    let limit = 2.0 / b.powi(4);
    let mut r0 = None;
    for r in 0..=r_max {
        if sums.block(r)?.n_lo >= 1 {
            r0 = Some(r);
            break;
        }
    }
    let r0 = r0.ok_or_else(|| Error::Budget(format!("n(r) = 0 for all r <= {r_max}")))?;
    let mut out = DoublingChain {
        r0,
        checked: 0,
        worst_ratio: 0.0,
        limit,
        first_violation: None,
    };
    for r in r0..=r_max {
        let lo = sums.block(r)?.n_lo;
        let hi2 = sums.block(2 * r)?.n_hi;
        let ratio = hi2 as f64 / lo as f64;
        out.worst_ratio = out.worst_ratio.max(ratio);
        out.checked += 1;
        if ratio > limit && out.first_violation.is_none() {
            out.first_violation = Some(r);
        }
    }
    Ok(out)
}

/// `ceil(n + sum_{k>n} gamma_k^2 / gamma_n^2)`: the sample count a positive
/// answer to the open symmetric case would require for squared error
/// `gamma_n^2 / 2`. Conjectural; not a certified bound.
pub fn heuristic_mn(gamma: &SpectralSequence, n: u64) -> Result<u64> {
    let gn = gamma.get(n as i64);
    if gn == 0.0 {
        return Err(Error::InvalidArgument(format!("gamma_{n} = 0")));
    }
    let tail = gamma.tail_sum_sq(n as i64 + 1)?.hi();
    Ok((n as f64 + tail / (gn * gn)).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::equispaced_optimal_error;
    use crate::seq::convolution_square;
    use crate::space::integration_representer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_gram(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let k = rng.random_range(1..=n + 2);
        let b = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose()
    }

    #[test]
    fn schur_gap_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!(schur_rank1_gap(&id).unwrap().abs() < 1e-15);
        let ones = DMatrix::from_element(2, 2, 1.0);
        assert!(schur_rank1_gap(&ones).unwrap().abs() < 1e-15);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(schur_rank1_gap(&asym).is_err());
    }

    #[test]
    fn schur_gap_is_nonnegative_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let n = rng.random_range(2..=8);
            let m = random_gram(&mut rng, n);
            let gap = schur_rank1_gap(&m).unwrap();
            assert!(gap >= -1e-10 * m.trace());
        }
    }

    #[test]
    fn schur_gap_can_be_negative_without_psd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        // M o M = I, d d^T / 2 = [[.5,-.5],[-.5,.5]]: eigenvalues 0 and 1
        assert!(schur_rank1_gap(&m).unwrap().abs() < 1e-15);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(schur_rank1_gap(&m).unwrap() < 0.0);
    }

    fn two_spike() -> SpectralSequence {
        let mu = SpectralSequence::from_entries(1, [(0, 1.0), (1, 1.0)]).unwrap();
        convolution_square(&mu).unwrap()
    }

    #[test]
    fn convolution_square_examples() {
        assert_eq!(convolution_square_bound(0.25, 1.0, 2), 0.125);
        assert_eq!(convolution_square_bound(0.25, 1.0, 4), 0.0);
        assert_eq!(convolution_square_bound(0.25, 1.0, 9), 0.0);
        let g = two_spike();
        let c0 = convolution_square_lower(&g, 0).unwrap();
        assert!((c0.bound_sq - 2.0).abs() < 1e-15);
        let c1 = convolution_square_lower(&g, 1).unwrap();
        assert!((c1.bound_sq - 1.0).abs() < 1e-15);
        assert_eq!(convolution_square_lower(&g, 2).unwrap().bound_sq, 0.0);
        // e_1 = 1 exactly for this space
        assert!((equispaced_optimal_error(&g, 1).unwrap().value - 1.0).abs() < 1e-15);
        let plain = SpectralSequence::geometric(0.5, 10).unwrap();
        assert!(matches!(convolution_square_lower(&plain, 1), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn criterion_examples() {
        let g = two_spike();
        let spec = KernelSpec::new(&g).unwrap();
        let h = integration_representer(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for n in 1..4 {
            let nodes: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            assert!(certificate_criterion_check(&spec, &h, 1e-12, &nodes).unwrap().holds);
        }
        let huge = 1e6 * 4.0 / 4.0;
        assert!(!certificate_criterion_check(&spec, &h, huge, &[0.3]).unwrap().holds);
        assert!(certificate_criterion_check(&spec, &h, 0.0, &[0.3]).is_err());
    }

    #[test]
    fn criterion_holds_at_the_convolution_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let m = rng.random_range(1..6usize);
            let mu = SpectralSequence::from_entries(
                m,
                (-(m as i64)..=m as i64).map(|j| (j, rng.random_range(0.0..1.0))),
            )
            .unwrap();
            let g = convolution_square(&mu).unwrap();
            let spec = KernelSpec::new(&g).unwrap();
            let h = integration_representer(&g).unwrap();
            for n in 1..=4usize {
                let c = convolution_square_lower(&g, n as u64).unwrap();
                let g0_sq = g.center().powi(2);
                let alpha = g.norm_sq().unwrap().value / (n as f64 * g0_sq * g0_sq);
                let expected = (g0_sq - 1.0 / alpha).max(0.0);
                assert!((c.bound_sq - expected).abs() < 1e-12 * g0_sq);
                let ok = criterion_monte_carlo(&spec, &h, alpha, n, 100, &mut rng).unwrap();
                assert_eq!(ok, 100);
            }
        }
    }

    #[test]
    fn convolution_bound_is_below_measured_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..20 {
            let m = rng.random_range(1..8usize);
            let mu = SpectralSequence::from_entries(
                m,
                (-(m as i64)..=m as i64).map(|j| (j, rng.random_range(0.0..1.0))),
            )
            .unwrap();
            let g = convolution_square(&mu).unwrap();
            for n in 0..40u64 {
                let c = convolution_square_lower(&g, n).unwrap();
                let e = equispaced_optimal_error(&g, n).unwrap();
                assert!(c.bound() <= e.hi() + 1e-8);
            }
        }
    }

    #[test]
    fn tail_block_examples() {
        let spike = SpectralSequence::spike(3.0).unwrap();
        let c = tail_block_lower(&spike, 0).unwrap();
        assert_eq!(c.n, 0);
        assert_eq!(c.bound_sq, 9.0);
        // flat block gamma_j^2 = 1/m on r..r+m-1
        for (r, m) in [(0u64, 6usize), (2, 9), (5, 16)] {
            let bw = r as usize + m;
            let g = SpectralSequence::from_entries(
                bw,
                (-(bw as i64)..=bw as i64).map(|j| {
                    let k = j.unsigned_abs();
                    let v = if k < r {
                        1.0
                    } else if k < r + m as u64 {
                        (1.0 / m as f64).sqrt()
                    } else {
                        0.0
                    };
                    (j, v)
                }),
            )
            .unwrap();
            let c = tail_block_lower(&g, r).unwrap();
            let n = m as u64 / 2;
            assert_eq!(c.n, n);
            // (1/m)(1 - n/m), at least 1/(4(n+1))
            let want = (1.0 - n as f64 / m as f64) / m as f64;
            assert!((c.bound_sq - want).abs() < 1e-14);
            assert!(c.bound_sq >= 1.0 / (4.0 * (n as f64 + 1.0)));
        }
        let bumpy = SpectralSequence::from_entries(2, [(0, 1.0), (1, 2.0), (-1, 2.0)]).unwrap();
        assert!(tail_block_lower(&bumpy, 0).is_err());
        let lopsided = SpectralSequence::from_entries(1, [(0, 1.0), (1, 0.5), (-1, 0.1)]).unwrap();
        assert!(tail_block_lower(&lopsided, 0).is_err());
    }

    #[test]
    fn tail_block_is_below_measured_error_for_power_log() {
        let g = SpectralSequence::power_log(0.5, 1.0, 3, 1 << 14).unwrap();
        let sums = TailSums::new(&g).unwrap();
        for r in [0u64, 1, 3, 10, 40, 100, 300] {
            let b = sums.block(r).unwrap();
            assert!(b.n_hi - b.n_lo <= 1 + b.n_lo / 100, "{b:?}");
            let c = tail_block_lower(&g, r).unwrap();
            let e = equispaced_optimal_error(&g, c.n).unwrap();
            assert!(c.bound() <= e.hi() + 1e-8, "r {r}");
            assert!(c.bound_sq >= b.s2.lo() / (4.0 * (b.n_hi as f64 + 1.0)));
        }
    }

    #[test]
    fn half_tail_over_n_plus_one_overshoots_the_optimal_error() {
        // s2 / (2(n(r)+1)) is not a valid bound: five equispaced nodes beat it
        let g = SpectralSequence::power_log(0.5, 1.0, 3, 1 << 14).unwrap();
        let b = TailSums::new(&g).unwrap().block(0).unwrap();
        assert_eq!((b.n_lo, b.n_hi), (5, 5));
        let naive = b.s2.lo() / 12.0;
        let e = equispaced_optimal_error(&g, 5).unwrap();
        assert!(naive.sqrt() > e.hi() + 1e-3);
        assert!(b.bound_sq().sqrt() < e.lo());
    }

    #[test]
    fn tail_sums_agree_beyond_bandwidth() {
        let small = SpectralSequence::power_log(0.5, 1.0, 3, 64).unwrap();
        let big = SpectralSequence::power_log(0.5, 1.0, 3, 4096).unwrap();
        let (a, b) = (TailSums::new(&small).unwrap(), TailSums::new(&big).unwrap());
        for r in [10u64, 65, 100, 1000] {
            let (s2a, s4a) = a.at(r).unwrap();
            let (s2b, s4b) = b.at(r).unwrap();
            assert!(s2a.lo() <= s2b.hi() && s2b.lo() <= s2a.hi());
            assert!(s4a.lo() <= s4b.hi() && s4b.lo() <= s4a.hi());
        }
    }

    #[test]
    fn schedule_branches() {
        let fast = DecaySequence::geometric(0.5, 64).unwrap();
        let s = interleaved_schedule(&fast, 20).unwrap();
        assert!(s.iter().skip(2).all(|e| e.certificate.tag == CertTag::InterleavedApprox));
        let slow = DecaySequence::power_log(0.5, 1.0, 3, 1 << 12).unwrap();
        let s = interleaved_schedule(&slow, 200).unwrap();
        assert!(s.iter().skip(5).all(|e| e.certificate.tag == CertTag::InterleavedTail));
        for e in &s {
            assert!(e.certificate.bound_sq >= 0.0);
            assert!(e.certificate.bound_sq <= 1.0);
            assert!(e.certificate.bound_sq >= e.target_sq - 1e-10);
        }
    }

    #[test]
    fn b_regular_examples() {
        let g = SpectralSequence::power_log(0.5, 1.0, 3, 1 << 14).unwrap();
        let b = measured_b(&g, 3, 1 << 13);
        assert!((b - 0.5f64.sqrt() * 3f64.ln() / 6f64.ln()).abs() < 1e-12);
        let tail = g.tail_sum_sq(1024).unwrap().lo() / 1024.0;
        let c = b_regular_lower(&g, b, 1024, 1 << 14).unwrap();
        assert_eq!(c.n, 1024);
        assert!(c.bound_sq >= tail / 64.0);
        let geo = SpectralSequence::geometric(0.5, 64).unwrap();
        assert!(matches!(b_regular_lower(&geo, 0.4, 4, 100), Err(Error::Hypothesis(_))));
        assert!(matches!(b_regular_lower(&g, b, 1 << 30, 10), Err(Error::Budget(_))));
    }

    #[test]
    fn doubling_chain_for_power_log() {
        let g = SpectralSequence::power_log(0.5, 1.0, 3, 1 << 14).unwrap();
        let b = measured_b(&g, 3, 1 << 13);
        let chain = doubling_chain(&g, b, 4096).unwrap();
        assert!(chain.holds());
        assert!(chain.worst_ratio < 8.0);
    }

    #[test]
    fn heuristic_examples() {
        let flat = SpectralSequence::from_entries(5, (-5..=5).map(|j| (j, 1.0))).unwrap();
        assert_eq!(heuristic_mn(&flat, 5).unwrap(), 5);
        let geo = SpectralSequence::geometric(0.5, 40).unwrap();
        for n in 1..10 {
            assert_eq!(heuristic_mn(&geo, n).unwrap(), n + 1);
        }
        let pl = SpectralSequence::power_log(0.5, 1.0, 3, 1 << 16).unwrap();
        let ratios: Vec<f64> = [16u64, 256, 4096]
            .iter()
            .map(|&n| heuristic_mn(&pl, n).unwrap() as f64 / n as f64)
            .collect();
        assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2]);
        assert!(heuristic_mn(&flat, 6).is_err());
    }

    #[test]
    fn best_block_dominates_each_block_and_matches_b_scan() {
        let g = SpectralSequence::power_log(0.5, 1.0, 3, 1 << 12).unwrap();
        let sums = TailSums::new(&g).unwrap();
        for n in [1u64, 5, 40, 300] {
            let best = best_tail_block(&sums, n, 1 << 11).unwrap();
            for r in [0u64, 3, 17, 100] {
                assert!(best.bound_sq >= sums.block(r).unwrap().bound_at(n));
            }
            let b = b_regular_scan(&sums, 0.5, n, 1 << 11).unwrap();
            assert_eq!(best.bound_sq, b.bound_sq);
        }
        let spike = SpectralSequence::spike(2.0).unwrap();
        let c = best_tail_block(&TailSums::new(&spike).unwrap(), 3, 10).unwrap();
        assert!(c.bound_sq <= 4.0);
    }

    #[test]
    fn tag_names_round_trip() {
        for t in [
            CertTag::ConvolutionSquare,
            CertTag::TailBlock,
            CertTag::InterleavedTail,
            CertTag::InterleavedApprox,
            CertTag::BRegular,
        ] {
            assert_eq!(t.as_str().parse::<CertTag>().unwrap(), t);
        }
    }
}
