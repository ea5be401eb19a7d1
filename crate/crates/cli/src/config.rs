use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use sampgap::seq::{convolution_square, interleave, parse_sequence, SequenceFile};
use sampgap::{DecaySequence, SpectralSequence};

/// Where `gamma` comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `gamma_k = |k|^(-1/2) ln^(-beta)|k|` for `|k| >= k0`, flat below.
    PowerLog { beta: f64, k0: u64 },
    /// `gamma_k = q^|k|`.
    Geometric { q: f64 },
    /// `gamma = interleave(a)` with `a` read from a decay file.
    Interleaved(PathBuf),
    /// `gamma = convolution square of mu` with `mu` read from a spectral file.
    MuSquare(PathBuf),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::PowerLog { .. } => "powerlog",
            Family::Geometric { .. } => "geometric",
            Family::Interleaved(_) => "interleaved",
            Family::MuSquare(_) => "musquare",
        }
    }

    pub fn params(&self) -> Vec<(String, String)> {
        match self {
            Family::PowerLog { beta, k0 } => vec![
                ("beta".into(), beta.to_string()),
                ("k0".into(), k0.to_string()),
            ],
            Family::Geometric { q } => vec![("q".into(), q.to_string())],
            Family::Interleaved(p) | Family::MuSquare(p) => {
                vec![("file".into(), p.display().to_string())]
            }
        }
    }

    /// The spectral sequence, stored to `bandwidth` where that applies.
    pub fn build(&self, bandwidth: usize) -> anyhow::Result<SpectralSequence> {
        Ok(match self {
            Family::PowerLog { beta, k0 } => SpectralSequence::power_log(0.5, *beta, *k0, bandwidth)?,
            Family::Geometric { q } => SpectralSequence::geometric(*q, bandwidth)?,
            Family::Interleaved(p) => interleave(&read_decay(p)?)?,
            Family::MuSquare(p) => convolution_square(&read_spectral(p)?)?,
        })
    }

    /// The one-sided sequence `a` behind an interleaved family.
    pub fn interleaved_source(&self) -> anyhow::Result<Option<DecaySequence>> {
        match self {
            Family::Interleaved(p) => Ok(Some(read_decay(p)?)),
            _ => Ok(None),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn read_file(path: &Path) -> anyhow::Result<SequenceFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_sequence(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_decay(path: &Path) -> anyhow::Result<DecaySequence> {
    match read_file(path)? {
        SequenceFile::Decay(a) => Ok(a),
        SequenceFile::Spectral(_) => bail!("{} must hold kind=decay", path.display()),
    }
}

fn read_spectral(path: &Path) -> anyhow::Result<SpectralSequence> {
    match read_file(path)? {
        SequenceFile::Spectral(s) => Ok(s),
        SequenceFile::Decay(_) => bail!("{} must hold kind=spectral", path.display()),
    }
}

/// `2^a..2^b` (dyadic), `a..b` (every integer) or `n1,n2,...`.
pub fn parse_grid(s: &str) -> anyhow::Result<Vec<u64>> {
    let s = s.trim();
    let grid: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (a.trim(), b.trim());
        match (a.strip_prefix("2^"), b.strip_prefix("2^")) {
            (Some(ea), Some(eb)) => {
                let (ea, eb): (u32, u32) = (ea.parse()?, eb.parse()?);
                if eb > 62 {
                    bail!("exponent {eb} too large");
                }
                (ea..=eb).map(|e| 1u64 << e).collect()
            }
            (None, None) => (a.parse::<u64>()?..=b.parse::<u64>()?).collect(),
            _ => bail!("mixed range '{s}': write 2^a..2^b or a..b"),
        }
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<u64>().with_context(|| format!("bad grid entry '{t}'")))
            .collect::<anyhow::Result<_>>()?
    };
    if grid.is_empty() {
        bail!("empty grid '{s}'");
    }
    Ok(grid)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n_grid: Vec<u64>,
    pub bandwidth: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(family: Family, n_grid: Vec<u64>, bandwidth: usize) -> anyhow::Result<Self> {
        let c = ExperimentConfig {
            family,
            n_grid,
            bandwidth,
            seed: 0,
            output_path: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_grid.is_empty() {
            bail!("n grid is empty");
        }
        if let Some(w) = self.n_grid.windows(2).find(|w| w[0] >= w[1]) {
            bail!("n grid must increase strictly ({} then {})", w[0], w[1]);
        }
        let max = *self.n_grid.last().expect("nonempty");
        let generated = matches!(self.family, Family::PowerLog { .. } | Family::Geometric { .. });
        if generated && self.bandwidth as u64 <= max {
            bail!("bandwidth {} must exceed max n = {max}", self.bandwidth);
        }
        Ok(())
    }
}
