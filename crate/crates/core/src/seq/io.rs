//! Plain-text sequence files.
//!
//! ```text
//! kind=spectral
//! bandwidth=3
//! tail=powerlog 0.5 1 3
//! -1 0.25
//! 0 1.0
//! 1 0.25
//! ```
//!
//! Header keys are `kind` (`spectral` or `decay`), `bandwidth` (the stored
//! range: `|j| <= M` for spectral, `0..M` for decay) and `tail` (`none`,
//! `powerlog r beta k0` or `geometric q`). The remaining lines are
//! `index value` pairs; `#` starts a comment. Unlisted stored indices are 0.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::seq::{DecaySequence, DecayTail, Profile, SpectralSequence, Tail};

#[derive(Clone, Debug, PartialEq)]
pub enum SequenceFile {
    Spectral(SpectralSequence),
    Decay(DecaySequence),
}

#[derive(Clone, Copy)]
enum TailSpec {
    None,
    PowerLog { r: f64, beta: f64, k0: u64 },
    Geometric { q: f64 },
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_tail(s: &str, line: usize) -> Result<TailSpec> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .ok_or_else(|| perr(line, "missing tail parameter"))?
            .parse::<f64>()
            .map_err(|e| perr(line, e.to_string()))
    };
    match parts.first().copied() {
        Some("none") => Ok(TailSpec::None),
        Some("powerlog") => {
            let k0 = parts
                .get(3)
                .ok_or_else(|| perr(line, "powerlog needs r beta k0"))?
                .parse::<u64>()
                .map_err(|e| perr(line, e.to_string()))?;
            Ok(TailSpec::PowerLog {
                r: num(1)?,
                beta: num(2)?,
                k0,
            })
        }
        Some("geometric") => Ok(TailSpec::Geometric { q: num(1)? }),
        _ => Err(perr(line, format!("unknown tail model '{s}'"))),
    }
}

pub fn parse_sequence(text: &str) -> Result<SequenceFile> {
    let mut kind = None;
    let mut bandwidth = None;
    let mut tail = TailSpec::None;
    let mut entries: Vec<(i64, f64, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "kind" => kind = Some(v.trim().to_string()),
                "bandwidth" => {
                    bandwidth = Some(
                        v.trim()
                            .parse::<usize>()
                            .map_err(|e| perr(ln, e.to_string()))?,
                    )
                }
                "tail" => tail = parse_tail(v.trim(), ln)?,
                other => return Err(perr(ln, format!("unknown header key '{other}'"))),
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(perr(ln, "expected 'index value'"));
        };
        let j = a.parse::<i64>().map_err(|e| perr(ln, e.to_string()))?;
        let v = b.parse::<f64>().map_err(|e| perr(ln, e.to_string()))?;
        entries.push((j, v, ln));
    }
    let bandwidth = bandwidth.ok_or_else(|| perr(0, "missing 'bandwidth='"))?;
    match kind.as_deref() {
        Some("spectral") => {
            let m = bandwidth as i64;
            if let Some(&(j, _, ln)) = entries.iter().find(|e| e.0.abs() > m) {
                return Err(perr(ln, format!("index {j} outside bandwidth {m}")));
            }
            let tail = match tail {
                TailSpec::None => Tail::none(),
                TailSpec::PowerLog { r, beta, k0 } => {
                    if (bandwidth as u64) + 1 < k0 {
                        return Err(perr(0, "powerlog tail must start at or after k0"));
                    }
                    Tail::symmetric(Profile::power_log(r, beta)?)
                }
                TailSpec::Geometric { q } => Tail::symmetric(Profile::geometric(q)?),
            };
            let s = SpectralSequence::from_entries_with_tail(
                bandwidth,
                entries.iter().map(|e| (e.0, e.1)),
                tail,
            )?;
            Ok(SequenceFile::Spectral(s))
        }
        Some("decay") => {
            let mut values = vec![0.0; bandwidth];
            for &(j, v, ln) in &entries {
                if j < 0 || j as usize >= bandwidth {
                    return Err(perr(ln, format!("decay index {j} outside 0..{bandwidth}")));
                }
                values[j as usize] = v;
            }
            let tail = match tail {
                TailSpec::None => None,
                TailSpec::PowerLog { r, beta, k0 } => {
                    if (bandwidth as u64) < k0 {
                        return Err(perr(0, "powerlog tail must start at or after k0"));
                    }
                    Some(DecayTail::Single(Profile::power_log(r, beta)?))
                }
                TailSpec::Geometric { q } => Some(DecayTail::Single(Profile::geometric(q)?)),
            };
            Ok(SequenceFile::Decay(DecaySequence::with_tail(values, tail)?))
        }
        Some(other) => Err(perr(0, format!("unknown kind '{other}'"))),
        None => Err(perr(0, "missing 'kind='")),
    }
}

fn tail_text(p: Option<Profile>, k0: u64) -> Result<String> {
    match p {
        None => Ok("none".into()),
        Some(Profile::PowerLog {
            r,
            beta,
            scale,
            stretch,
            shift,
        }) if scale == 1.0 && stretch == 1.0 && shift == 0.0 => {
            Ok(format!("powerlog {r} {beta} {k0}"))
        }
        Some(Profile::Geometric { scale, q }) if scale == 1.0 => Ok(format!("geometric {q}")),
        Some(p) => Err(Error::Unsupported(format!(
            "tail {p:?} has no text representation"
        ))),
    }
}

pub fn write_sequence(seq: &SequenceFile) -> Result<String> {
    let mut out = String::new();
    match seq {
        SequenceFile::Spectral(s) => {
            let t = s.tail();
            if t.pos != t.neg {
                return Err(Error::Unsupported(
                    "asymmetric tails have no text representation".into(),
                ));
            }
            let m = s.bandwidth();
            let tail = tail_text(t.pos, m as u64 + 1)?;
            writeln!(out, "kind=spectral\nbandwidth={m}\ntail={tail}").unwrap();
            for (j, v) in s.stored().filter(|e| e.1 != 0.0) {
                writeln!(out, "{j} {v:.16e}").unwrap();
            }
        }
        SequenceFile::Decay(d) => {
            let tail = match d.tail() {
                None => "none".to_string(),
                Some(DecayTail::Single(p)) => tail_text(Some(p), d.len() as u64)?,
                Some(DecayTail::Doubled { .. }) => {
                    return Err(Error::Unsupported(
                        "paired tails have no text representation".into(),
                    ))
                }
            };
            writeln!(out, "kind=decay\nbandwidth={}\ntail={tail}", d.len()).unwrap();
            for (i, v) in d.values().iter().enumerate().filter(|e| *e.1 != 0.0) {
                writeln!(out, "{i} {v:.16e}").unwrap();
            }
        }
    }
    Ok(out)
}
