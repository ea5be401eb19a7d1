use anyhow::Context;
use rayon::prelude::*;
use sampgap::certify::{
    b_regular_scan, best_tail_block, convolution_square_lower, doubling_chain, interleaved_schedule,
    measured_b, CertTag, Certificate, DoublingChain, TailSums,
};
use sampgap::recovery::{equispaced_optimal_error, BoundReport};
use sampgap::report::{certificate_row, BlockRow};
use sampgap::sampling::prop32_upper_bound;
use sampgap::seq::{DecayTail, Profile, Provenance};
use sampgap::trace_infty::{
    block_oracles, decay_value, select_indices, verify_composition, CompositionCheck, Partition,
};
use sampgap::{DecaySequence, Error, SpectralSequence};

use crate::config::{ExperimentConfig, Family};

/// Slack for every inequality check in the drivers.
pub const TOLERANCE: f64 = 1e-8;

/// Upper end of the range on which `b` is measured.
pub const B_RANGE_END: u64 = 1 << 14;

/// Largest odd node count not above `n`, as `(nodes, degree)`.
pub fn odd_nodes(n: u64) -> (u64, u64) {
    let nodes = if n % 2 == 1 { n } else { n - 1 };
    (nodes, (nodes - 1) / 2)
}

enum LowerSource {
    ConvolutionSquare,
    Tail { sums: TailSums, b: Option<f64>, r_budget: u64 },
    Unavailable,
}

impl LowerSource {
    fn new(family: &Family, gamma: &SpectralSequence) -> anyhow::Result<Self> {
        if gamma.provenance() == Provenance::ConvolutionSquare {
            return Ok(LowerSource::ConvolutionSquare);
        }
        if gamma.check_nonincreasing_nonneg().is_err() || gamma.check_mirror_dominates().is_err() {
            return Ok(LowerSource::Unavailable);
        }
        let b = match family {
            Family::PowerLog { .. } => Some(family_b(gamma)),
            _ => None,
        };
        Ok(LowerSource::Tail {
            sums: TailSums::new(gamma)?,
            b,
            r_budget: gamma.bandwidth() as u64,
        })
    }

    fn certificate(&self, gamma: &SpectralSequence, n: u64) -> anyhow::Result<Option<Certificate>> {
        Ok(match self {
            LowerSource::ConvolutionSquare => Some(convolution_square_lower(gamma, n)?),
            LowerSource::Tail { sums, b, r_budget } => match b {
                Some(b) => match b_regular_scan(sums, *b, n, *r_budget) {
                    Ok(c) => Some(c),
                    Err(Error::Budget(_)) => Some(best_tail_block(sums, n, *r_budget)?),
                    Err(e) => return Err(e.into()),
                },
                None => Some(best_tail_block(sums, n, *r_budget)?),
            },
            LowerSource::Unavailable => None,
        })
    }
}

/// `min gamma_{2k} / gamma_k` over `3 <= k <= min(2^14, M/2)`.
pub fn family_b(gamma: &SpectralSequence) -> f64 {
    let hi = B_RANGE_END.min(gamma.bandwidth() as u64 / 2).max(3);
    measured_b(gamma, 3, hi)
}

#[derive(Clone, Debug)]
pub struct SandwichRun {
    pub rows: Vec<BoundReport>,
    pub violations: Vec<String>,
}

/// One row per `n`: the best available certified lower bound, the optimal
/// equispaced error on the largest odd node count `N <= n` (with its tail
/// remainder), and `min(gamma_0, prop32((N-1)/2))`.
///
/// `e_n <= e(N equispaced nodes)` because `N <= n`, and the optimal weights
/// on those nodes beat the midpoint rule, which the upper bound controls.
pub fn run_sandwich(cfg: &ExperimentConfig) -> anyhow::Result<SandwichRun> {
    cfg.validate()?;
    let gamma = cfg.family.build(cfg.bandwidth)?;
    let lower = LowerSource::new(&cfg.family, &gamma)?;
    let rows: Vec<BoundReport> = cfg
        .n_grid
        .par_iter()
        .map(|&n| sandwich_row(cfg, &gamma, &lower, n))
        .collect::<anyhow::Result<_>>()?;
    let violations = rows.iter().flat_map(|r| r.violations(TOLERANCE)).collect();
    Ok(SandwichRun { rows, violations })
}

fn sandwich_row(
    cfg: &ExperimentConfig,
    gamma: &SpectralSequence,
    lower: &LowerSource,
    n: u64,
) -> anyhow::Result<BoundReport> {
    let mut row = BoundReport::new(cfg.family.name(), n, cfg.seed);
    row.params = cfg.family.params();
    if let Some(c) = lower.certificate(gamma, n)? {
        row.lower_sq = Some(c.bound_sq);
        row.lower_tag = c.tag.to_string();
        row.params.extend(c.params);
    }
    let g0 = gamma.center();
    if n == 0 {
        row.measured = Some(g0);
        row.upper = Some(g0);
        return Ok(row.param("nodes", 0).param("upper_by", "initial"));
    }
    let (nodes, m) = odd_nodes(n);
    let e = equispaced_optimal_error(gamma, nodes)
        .with_context(|| format!("measuring n = {n}"))?;
    row.measured = Some(e.lo());
    row.measured_remainder = e.remainder;
    let (upper, by) = if m == 0 {
        (g0, "initial")
    } else {
        match prop32_upper_bound(gamma, m) {
            Ok(u) if u < g0 => (u, "prop32"),
            Ok(_) => (g0, "initial"),
            Err(Error::NotSymmetric(_)) | Err(Error::NotMonotone { .. }) => (g0, "initial"),
            Err(e) => return Err(e.into()),
        }
    };
    row.upper = Some(upper);
    Ok(row
        .param("nodes", nodes)
        .param("measured_by", "equispaced_optimal")
        .param("upper_by", by))
}

#[derive(Clone, Debug)]
pub struct CertifyRun {
    pub rows: Vec<BoundReport>,
    pub doubling: Option<DoublingChain>,
    pub violations: Vec<String>,
}

/// Certificates per family: the convolution-square bound on
/// `0..=ceil(|gamma|^2 / gamma_0^2)`, the interleaved schedule up to the
/// largest grid value, and tail-block scans (b-regular for power-log) on the
/// grid otherwise.
pub fn run_certify(cfg: &ExperimentConfig) -> anyhow::Result<CertifyRun> {
    cfg.validate()?;
    let gamma = cfg.family.build(cfg.bandwidth)?;
    let max_n = *cfg.n_grid.last().expect("validated");
    let mut violations = Vec::new();
    let mut doubling = None;
    let certs: Vec<Certificate> = if gamma.provenance() == Provenance::ConvolutionSquare {
        let g0_sq = gamma.center().powi(2);
        let top = (gamma.norm_sq()?.hi() / g0_sq).ceil() as u64;
        (0..=top)
            .map(|n| convolution_square_lower(&gamma, n))
            .collect::<sampgap::Result<_>>()?
    } else if let Some(a) = cfg.family.interleaved_source()? {
        let schedule = interleaved_schedule(&a, max_n)?;
        let mut met = false;
        let mut case1 = false;
        let certs = schedule
            .into_iter()
            .map(|e| {
                let tail_case = e.certificate.tag == CertTag::InterleavedTail;
                let meets = e.certificate.bound_sq >= e.target_sq - 1e-10;
                case1 |= tail_case;
                met |= tail_case && meets;
                let mut c = e.certificate;
                c.params.push(("case".into(), if tail_case { "1" } else { "2" }.into()));
                c.params.push(("target_sq".into(), e.target_sq.to_string()));
                c
            })
            .collect();
        if case1 && !met {
            violations.push("no tail-case certificate reaches the 1/(8n) target".into());
        }
        certs
    } else {
        let lower = LowerSource::new(&cfg.family, &gamma)?;
        if let Family::PowerLog { .. } = cfg.family {
            let b = family_b(&gamma);
            let chain = doubling_chain(&gamma, b, (gamma.bandwidth() as u64 / 2).min(B_RANGE_END))?;
            if let Some(r) = chain.first_violation {
                violations.push(format!(
                    "n(2r) <= (2/b^4) n(r) fails at r = {r} (b = {b}, limit {})",
                    chain.limit
                ));
            }
            doubling = Some(chain);
        }
        let certs: Vec<Option<Certificate>> = cfg
            .n_grid
            .par_iter()
            .map(|&n| lower.certificate(&gamma, n))
            .collect::<anyhow::Result<_>>()?;
        for (n, c) in cfg.n_grid.iter().zip(&certs) {
            if c.is_none() {
                violations.push(format!("no certificate at n = {n}"));
            }
        }
        certs.into_iter().flatten().collect()
    };
    let rows = certs
        .iter()
        .map(|c| {
            let mut r = certificate_row(cfg.family.name(), c, cfg.seed);
            let mut params = cfg.family.params();
            params.append(&mut r.params);
            r.params = params;
            r
        })
        .collect();
    Ok(CertifyRun {
        rows,
        doubling,
        violations,
    })
}

/// `sigma_k = k^(-1/2)` for `k >= 1`, stored one-based at `get(k - 1)`.
pub fn sqrt_sigma() -> DecaySequence {
    let p = Profile::PowerLog {
        r: 0.5,
        beta: 0.0,
        scale: 1.0,
        stretch: 1.0,
        shift: 1.0,
    };
    DecaySequence::with_tail(vec![1.0], Some(DecayTail::Single(p))).expect("valid profile")
}

/// `tau_n = ln(n + 2)^(-1/2)` for `n >= 0`.
pub fn log_half_tau() -> DecaySequence {
    let p = Profile::PowerLog {
        r: 0.0,
        beta: 0.5,
        scale: 1.0,
        stretch: 1.0,
        shift: 2.0,
    };
    DecaySequence::with_tail(vec![], Some(DecayTail::Single(p))).expect("valid profile")
}

#[derive(Clone, Debug)]
pub struct TraceRun {
    pub rows: Vec<BlockRow>,
    pub check: CompositionCheck,
    /// Blocks `1..` tile `[1, tile_limit]` exactly once.
    pub tiles: bool,
    pub tile_limit: u64,
    pub violations: Vec<String>,
}

/// Tiling check of the partition on `[1, limit]` using every block that
/// meets the range.
pub fn partition_tiles(limit: u64) -> bool {
    let mut hits = vec![0u8; limit as usize + 1];
    let j_top = limit.div_ceil(2) as u32;
    for j in 1..=j_top {
        for k in Partition::block(j, limit) {
            hits[k as usize] = hits[k as usize].saturating_add(1);
        }
    }
    hits[1..].iter().all(|&h| h == 1)
}

/// The composition demo with `sigma_k = k^(-1/2)`, `tau_n = ln(n+2)^(-1/2)`.
pub fn run_trace_infty(j_max: u32, exact_span: u64, samples: usize) -> anyhow::Result<TraceRun> {
    Partition::new(j_max)?;
    let sigma = sqrt_sigma();
    let tau = log_half_tau();
    let indices = select_indices(&sigma, &tau, j_max, 1e7)?;
    let oracles = block_oracles(&sigma, &indices)?;
    let check = verify_composition(&oracles, &tau, exact_span, samples)?;
    let rows = oracles
        .iter()
        .map(|o| Ok(BlockRow::from_oracle(o, decay_value(&tau, o.start)?)))
        .collect::<sampgap::Result<Vec<_>>>()?;
    let tile_limit = 1 << 16;
    let tiles = partition_tiles(tile_limit);
    let mut violations = Vec::new();
    if !tiles {
        violations.push(format!("blocks do not tile [1, {tile_limit}]"));
    }
    if !check.holds {
        violations.push(format!(
            "composed bound below tau (margin {:e})",
            check.min_margin
        ));
    }
    Ok(TraceRun {
        rows,
        check,
        tiles,
        tile_limit,
        violations,
    })
}
