use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use anyhow::{bail, Context};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use sampgap::recovery::{approximation_numbers, equispaced_optimal_error};
use sampgap::report::format_float;
use sampgap::sampling::prop32_upper_bound;
use sampgap::SpectralSequence;

use crate::config::{ExperimentConfig, Family};
use crate::experiments::odd_nodes;

/// Smallest `n` that enters a fit.
pub const MIN_FIT_N: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// `a_n`.
    Approx,
    /// `min(gamma_0, prop32(floor((n-1)/2)))`, the upper curve for `g_n`.
    Sampling,
    /// Optimal equispaced integration error on the largest odd `N <= n`.
    Integration,
    /// `Sampling / Approx`.
    Gap,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::Approx, Target::Sampling, Target::Integration, Target::Gap];

    pub fn as_str(&self) -> &'static str {
        match self {
            Target::Approx => "approx",
            Target::Sampling => "sampling",
            Target::Integration => "integration",
            Target::Gap => "gap",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .with_context(|| format!("unknown target '{s}'"))
    }
}

/// `ln v = c + slope ln n + log_exponent ln ln n` by least squares.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub target: Target,
    pub slope: f64,
    pub log_exponent: f64,
    /// Root mean square of the residuals in `ln v`.
    pub residual: f64,
    pub window: (u64, u64),
}

/// Three-parameter fit over the points with `n >= 16`.
pub fn fit_rate(target: Target, points: &[(u64, f64)]) -> anyhow::Result<RateFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, _)| *n >= MIN_FIT_N)
        .map(|&(n, v)| (n as f64, v))
        .collect();
    if pts.len() < 3 {
        bail!("need three points with n >= {MIN_FIT_N}, got {}", pts.len());
    }
    if let Some((n, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        bail!("value {v} at n = {n} cannot be fitted in log scale");
    }
    let a = DMatrix::from_fn(pts.len(), 3, |i, j| {
        let ln = pts[i].0.ln();
        [1.0, ln, ln.ln()][j]
    });
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1.ln()));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| anyhow::anyhow!("least squares: {e}"))?;
    let r = &a * &coef - &y;
    let window = (
        points.iter().map(|p| p.0).filter(|&n| n >= MIN_FIT_N).min().expect("nonempty"),
        points.iter().map(|p| p.0).max().expect("nonempty"),
    );
    Ok(RateFit {
        target,
        slope: coef[1],
        log_exponent: coef[2],
        residual: (r.norm_squared() / pts.len() as f64).sqrt(),
        window,
    })
}

/// Values of `target` on the grid.
pub fn rate_points(cfg: &ExperimentConfig, target: Target) -> anyhow::Result<Vec<(u64, f64)>> {
    if !matches!(cfg.family, Family::PowerLog { .. }) {
        bail!("rate fits need the powerlog family, got {}", cfg.family);
    }
    cfg.validate()?;
    let gamma = cfg.family.build(cfg.bandwidth)?;
    let max = *cfg.n_grid.last().expect("validated") as usize;
    let approx = match target {
        Target::Approx | Target::Gap => Some(approximation_numbers(&gamma, max + 1)?),
        _ => None,
    };
    cfg.n_grid
        .par_iter()
        .map(|&n| {
            let v = match target {
                Target::Approx => approx.as_ref().expect("computed").get(n as usize),
                Target::Sampling => sampling_upper(&gamma, n)?,
                Target::Integration => equispaced_optimal_error(&gamma, odd_nodes(n).0)?.lo(),
                Target::Gap => sampling_upper(&gamma, n)? / approx.as_ref().expect("computed").get(n as usize),
            };
            Ok((n, v))
        })
        .collect()
}

fn sampling_upper(gamma: &SpectralSequence, n: u64) -> anyhow::Result<f64> {
    let g0 = gamma.center();
    let m = odd_nodes(n).1;
    if m == 0 {
        return Ok(g0);
    }
    Ok(prop32_upper_bound(gamma, m)?.min(g0))
}

pub fn run_rate_fit(cfg: &ExperimentConfig, target: Target) -> anyhow::Result<RateFit> {
    fit_rate(target, &rate_points(cfg, target)?)
}

pub const FIT_HEADER: [&str; 6] = ["target", "slope", "log_exponent", "residual", "n_min", "n_max"];

pub fn write_fits<W: Write>(out: W, fits: &[RateFit]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIT_HEADER)?;
    for f in fits {
        w.write_record([
            f.target.to_string(),
            format_float(f.slope),
            format_float(f.log_exponent),
            format_float(f.residual),
            f.window.0.to_string(),
            f.window.1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fits<R: Read>(input: R) -> anyhow::Result<Vec<RateFit>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(FIT_HEADER) {
        bail!("expected header {}", FIT_HEADER.join(","));
    }
    rd.records()
        .map(|rec| {
            let rec = rec?;
            if rec.len() != FIT_HEADER.len() {
                bail!("expected {} fields, got {}", FIT_HEADER.len(), rec.len());
            }
            Ok(RateFit {
                target: rec[0].parse()?,
                slope: rec[1].parse()?,
                log_exponent: rec[2].parse()?,
                residual: rec[3].parse()?,
                window: (rec[4].parse()?, rec[5].parse()?),
            })
        })
        .collect()
}
