//! Closed-form monotone tails.
//!
//! A [`Profile`] describes the values of a sequence at all integer indices
//! `k >= start` beyond a stored prefix. Every profile is nonincreasing on its
//! domain, which lets tail sums be bracketed by integral comparison.

use crate::error::{Error, Result};
use crate::seq::Bounded;

/// Nonincreasing closed form `k -> value(k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `scale * u^(-r) * ln(u)^(-beta)` with `u = stretch * k + shift`.
    ///
    /// Only meaningful where `u > 1`.
    PowerLog {
        r: f64,
        beta: f64,
        scale: f64,
        stretch: f64,
        shift: f64,
    },
    /// `scale * q^k`, `0 < q < 1`.
    Geometric { scale: f64, q: f64 },
}

impl Profile {
    /// `k^(-r) ln(k)^(-beta)`.
    pub fn power_log(r: f64, beta: f64) -> Result<Self> {
        let p = Profile::PowerLog {
            r,
            beta,
            scale: 1.0,
            stretch: 1.0,
            shift: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// `q^k`.
    pub fn geometric(q: f64) -> Result<Self> {
        let p = Profile::Geometric { scale: 1.0, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Profile::PowerLog {
                r,
                beta,
                scale,
                stretch,
                shift,
            } => {
                let ok = r.is_finite()
                    && beta.is_finite()
                    && r >= 0.0
                    && beta >= 0.0
                    && (r > 0.0 || beta > 0.0)
                    && scale.is_finite()
                    && scale > 0.0
                    && stretch.is_finite()
                    && stretch > 0.0
                    && shift.is_finite();
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidSequence(format!(
                        "power-log profile needs r,beta >= 0 (not both 0), scale,stretch > 0; got {self:?}"
                    )))
                }
            }
            Profile::Geometric { scale, q } => {
                if scale.is_finite() && scale > 0.0 && q > 0.0 && q < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSequence(format!(
                        "geometric profile needs scale > 0 and 0 < q < 1; got {self:?}"
                    )))
                }
            }
        }
    }

    /// Smallest index at which the profile is defined and monotone.
    pub fn domain_start(&self) -> i64 {
        match *self {
            Profile::PowerLog { stretch, shift, .. } => {
                // need stretch * k + shift > 1
                let k = ((1.0 - shift) / stretch).floor() as i64 + 1;
                k.max(i64::MIN / 2)
            }
            Profile::Geometric { .. } => i64::MIN / 2,
        }
    }

    pub fn covers(&self, start: i64) -> bool {
        start >= self.domain_start()
    }

    /// Value at index `k`.
    pub fn value(&self, k: i64) -> f64 {
        match *self {
            Profile::PowerLog {
                r,
                beta,
                scale,
                stretch,
                shift,
            } => {
                let u = stretch * k as f64 + shift;
                scale * u.powf(-r) * u.ln().powf(-beta)
            }
            Profile::Geometric { scale, q } => scale * q.powf(k as f64),
        }
    }

    /// Value at the index `k = exp(ln_k)`; usable when `k` overflows every
    /// machine integer.
    pub fn value_at_ln(&self, ln_k: f64) -> f64 {
        match *self {
            Profile::PowerLog {
                r,
                beta,
                scale,
                stretch,
                shift,
            } => {
                let ln_u = if ln_k < 36.0 {
                    (stretch * ln_k.exp() + shift).ln()
                } else {
                    // shift / (stretch k) is below 1e-15 relative
                    ln_k + stretch.ln()
                };
                scale * (-r * ln_u).exp() * ln_u.powf(-beta)
            }
            Profile::Geometric { scale, q } => {
                let k = ln_k.exp();
                scale * (k * q.ln()).exp()
            }
        }
    }

    /// Profile of `theta -> value(step * theta + offset)`.
    pub fn compose(&self, step: u64, offset: i64) -> Profile {
        match *self {
            Profile::PowerLog {
                r,
                beta,
                scale,
                stretch,
                shift,
            } => Profile::PowerLog {
                r,
                beta,
                scale,
                stretch: stretch * step as f64,
                shift: stretch * offset as f64 + shift,
            },
            Profile::Geometric { scale, q } => Profile::Geometric {
                scale: scale * q.powf(offset as f64),
                q: q.powf(step as f64),
            },
        }
    }

    /// Bracket for `sum_{k >= from} value(k)^p`.
    pub fn power_sum(&self, from: i64, p: f64) -> Result<Bounded> {
        if !self.covers(from) {
            return Err(Error::InvalidSequence(format!(
                "profile {self:?} is not defined at index {from}"
            )));
        }
        match *self {
            Profile::PowerLog {
                r,
                beta,
                scale,
                stretch,
                shift,
            } => {
                let c = p * r;
                let d = p * beta;
                let u0 = stretch * from as f64 + shift;
                let head = scale.powf(p) * u0.powf(-c) * u0.ln().powf(-d);
                let (i_lo, i_hi) = log_power_integral(u0, c, d)?;
                let sp = scale.powf(p) / stretch;
                Bounded::from_bracket(sp * i_lo, head + sp * i_hi)
            }
            Profile::Geometric { scale, q } => {
                let qp = q.powf(p);
                let v = scale.powf(p) * qp.powf(from as f64) / (1.0 - qp);
                Ok(Bounded::exact(v))
            }
        }
    }

    /// Whether `self(k) >= other(k)` for every `k` in both domains, decided
    /// structurally.
    pub fn dominates(&self, other: &Profile) -> bool {
        match (*self, *other) {
            (
                Profile::PowerLog {
                    r,
                    beta,
                    scale,
                    stretch,
                    shift,
                },
                Profile::PowerLog {
                    r: r2,
                    beta: b2,
                    scale: s2,
                    stretch: st2,
                    shift: sh2,
                },
            ) => {
                r == r2 && beta == b2 && stretch == st2 && scale >= s2 && shift <= sh2
            }
            (Profile::Geometric { scale, q }, Profile::Geometric { scale: s2, q: q2 }) => {
                q == q2 && scale >= s2
            }
            _ => false,
        }
    }
}

/// Bracket for `int_u^inf x^(-c) ln(x)^(-d) dx`, `u > 1`, `c, d >= 0`.
///
/// Integration by parts gives
/// `u^(1-c) ln^(-d) u = (c-1) I + d int x^(-c) ln^(-d-1) x`, whence
/// `u^(1-c) ln^(-d) u / (c-1+d/ln u) <= I <= u^(1-c) ln^(-d) u / (c-1)`.
fn log_power_integral(u: f64, c: f64, d: f64) -> Result<(f64, f64)> {
    let ln_u = u.ln();
    if (c - 1.0).abs() <= 1e-12 {
        if d > 1.0 {
            let v = ln_u.powf(1.0 - d) / (d - 1.0);
            return Ok((v, v));
        }
        return Err(Error::Divergent(format!(
            "sum of k^-1 ln^-{d} k diverges (need exponent > 1)"
        )));
    }
    if c < 1.0 {
        return Err(Error::Divergent(format!(
            "sum of k^-{c} ln^-{d} k diverges (need power exponent >= 1)"
        )));
    }
    let top = u.powf(1.0 - c) * ln_u.powf(-d);
    Ok((top / (c - 1.0 + d / ln_u), top / (c - 1.0)))
}
