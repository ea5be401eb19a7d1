//! Spectral and decay sequences.
//!
//! A [`SpectralSequence`] is a two-sided nonnegative sequence `(gamma_j)`
//! stored explicitly for `|j| <= M` (the bandwidth) with an optional
//! closed-form [`Profile`] on each side beyond `M`. A [`DecaySequence`] is a
//! one-sided nonincreasing sequence with the same prefix-plus-tail layout.
//! Every quantity that depends on the tail is returned as a [`Bounded`]
//! value, never silently truncated.

mod io;
mod ops;
mod profile;

pub use io::{parse_sequence, write_sequence, SequenceFile};
pub use ops::{
    check_b_regular, check_b_regular_on, convolution_square, interleave, rearrangement,
    BRegularity,
};
pub use profile::Profile;

use crate::error::{Error, Result};

/// A nonnegative quantity known up to a one-sided remainder: the true value
/// lies in `[value, value + remainder]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub remainder: f64,
}

impl Bounded {
    pub fn exact(value: f64) -> Self {
        Bounded {
            value,
            remainder: 0.0,
        }
    }

    pub fn from_bracket(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}]")));
        }
        Ok(Bounded {
            value: lo,
            remainder: hi - lo,
        })
    }

    pub fn lo(&self) -> f64 {
        self.value
    }

    pub fn hi(&self) -> f64 {
        self.value + self.remainder
    }
}

impl std::ops::Add for Bounded {
    type Output = Bounded;
    fn add(self, rhs: Bounded) -> Bounded {
        Bounded {
            value: self.value + rhs.value,
            remainder: self.remainder + rhs.remainder,
        }
    }
}

/// How a spectral sequence came to be; certificates read this to enforce
/// their hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Literal,
    Generated,
    ConvolutionSquare,
    Interleaved,
}

/// Symmetric closed forms used as generators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    /// `|k|^(-r) ln(|k|)^(-beta)` for `|k| >= k0`, constant (equal to the
    /// value at `k0`) for `|k| < k0`.
    PowerLog { r: f64, beta: f64, k0: u64 },
    /// `q^|k|`.
    Geometric { q: f64 },
}

impl Generator {
    pub fn value(&self, j: i64) -> f64 {
        let k = j.unsigned_abs();
        match *self {
            Generator::PowerLog { r, beta, k0 } => {
                let k = k.max(k0) as f64;
                k.powf(-r) * k.ln().powf(-beta)
            }
            Generator::Geometric { q } => q.powf(k as f64),
        }
    }

    fn profile(&self) -> Result<Profile> {
        match *self {
            Generator::PowerLog { r, beta, .. } => Profile::power_log(r, beta),
            Generator::Geometric { q } => Profile::geometric(q),
        }
    }
}

/// Tail profiles beyond the bandwidth: `pos` gives `gamma_k` and `neg` gives
/// `gamma_{-k}` for `k > M`. `None` means zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tail {
    pub pos: Option<Profile>,
    pub neg: Option<Profile>,
}

impl Tail {
    pub fn none() -> Self {
        Tail::default()
    }

    pub fn symmetric(p: Profile) -> Self {
        Tail {
            pos: Some(p),
            neg: Some(p),
        }
    }

    pub fn is_none(&self) -> bool {
        self.pos.is_none() && self.neg.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Body {
    /// `values[j + M]` for `|j| <= M`.
    Table(Vec<f64>),
    Generated(Generator),
}

/// Two-sided nonnegative sequence defining the space `H_gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSequence {
    bandwidth: usize,
    body: Body,
    tail: Tail,
    provenance: Provenance,
}

impl SpectralSequence {
    /// Explicit values for `|j| <= bandwidth` (missing entries are zero),
    /// zero beyond.
    pub fn from_entries<I>(bandwidth: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, f64)>,
    {
        Self::from_entries_with_tail(bandwidth, entries, Tail::none())
    }

    pub fn from_entries_with_tail<I>(bandwidth: usize, entries: I, tail: Tail) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, f64)>,
    {
        let m = bandwidth as i64;
        let mut values = vec![0.0; 2 * bandwidth + 1];
        for (j, v) in entries {
            if j.abs() > m {
                return Err(Error::InvalidSequence(format!(
                    "index {j} outside bandwidth {bandwidth}"
                )));
            }
            values[(j + m) as usize] = v;
        }
        Self::from_table(bandwidth, values, tail, Provenance::Literal)
    }

    /// Dense table `values[j + bandwidth]`.
    pub fn from_table(
        bandwidth: usize,
        values: Vec<f64>,
        tail: Tail,
        provenance: Provenance,
    ) -> Result<Self> {
        if values.len() != 2 * bandwidth + 1 {
            return Err(Error::InvalidSequence(format!(
                "table of length {} does not match bandwidth {bandwidth}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidSequence(format!(
                "entry at index {} is {v}; entries must be finite and nonnegative",
                i as i64 - bandwidth as i64
            )));
        }
        let s = SpectralSequence {
            bandwidth,
            body: Body::Table(values),
            tail,
            provenance,
        };
        s.validate_tail()?;
        Ok(s)
    }

    /// Symmetric power-log sequence `|k|^(-r) ln^(-beta)|k|`, flat below
    /// `k0`, stored lazily up to `bandwidth`.
    pub fn power_log(r: f64, beta: f64, k0: u64, bandwidth: usize) -> Result<Self> {
        if k0 < 2 {
            return Err(Error::InvalidSequence("power-log needs k0 >= 2".into()));
        }
        if (bandwidth as u64) + 1 < k0 {
            return Err(Error::InvalidSequence(format!(
                "bandwidth {bandwidth} must reach k0 - 1 = {}",
                k0 - 1
            )));
        }
        let g = Generator::PowerLog { r, beta, k0 };
        let s = SpectralSequence {
            bandwidth,
            body: Body::Generated(g),
            tail: Tail::symmetric(g.profile()?),
            provenance: Provenance::Generated,
        };
        s.validate_tail()?;
        Ok(s)
    }

    /// Symmetric geometric sequence `q^|k|`.
    pub fn geometric(q: f64, bandwidth: usize) -> Result<Self> {
        let g = Generator::Geometric { q };
        Ok(SpectralSequence {
            bandwidth,
            body: Body::Generated(g),
            tail: Tail::symmetric(g.profile()?),
            provenance: Provenance::Generated,
        })
    }

    /// `gamma_0 = value`, zero elsewhere.
    pub fn spike(value: f64) -> Result<Self> {
        Self::from_entries(0, [(0, value)])
    }

    fn validate_tail(&self) -> Result<()> {
        let start = self.bandwidth as i64 + 1;
        for p in [self.tail.pos, self.tail.neg].into_iter().flatten() {
            p.validate()?;
            if !p.covers(start) {
                return Err(Error::InvalidSequence(format!(
                    "tail {p:?} undefined at index {start}"
                )));
            }
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn generator(&self) -> Option<Generator> {
        match &self.body {
            Body::Generated(g) => Some(*g),
            Body::Table(_) => None,
        }
    }

    /// Finitely supported (no tail).
    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    pub fn get(&self, j: i64) -> f64 {
        let m = self.bandwidth as i64;
        if j.abs() <= m {
            match &self.body {
                Body::Table(v) => v[(j + m) as usize],
                Body::Generated(g) => g.value(j),
            }
        } else if j > 0 {
            self.tail.pos.map_or(0.0, |p| p.value(j))
        } else {
            self.tail.neg.map_or(0.0, |p| p.value(-j))
        }
    }

    /// Stored entries `(j, gamma_j)` for `|j| <= M`, in increasing `j`.
    pub fn stored(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let m = self.bandwidth as i64;
        (-m..=m).map(move |j| (j, self.get(j)))
    }

    /// Value of `gamma_0`.
    pub fn center(&self) -> f64 {
        self.get(0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_defect().is_none()
    }

    pub(crate) fn symmetry_defect(&self) -> Option<i64> {
        if let Body::Generated(_) = self.body {
            return None;
        }
        for k in 1..=self.bandwidth as i64 {
            if self.get(k) != self.get(-k) {
                return Some(k);
            }
        }
        if self.tail.pos != self.tail.neg {
            return Some(self.bandwidth as i64 + 1);
        }
        None
    }

    /// Checks that `gamma` is nonincreasing on `j >= 0`, tail included.
    pub fn check_nonincreasing_nonneg(&self) -> Result<()> {
        if let Body::Generated(_) = self.body {
            return Ok(());
        }
        let m = self.bandwidth as i64;
        for j in 0..m {
            let (a, b) = (self.get(j), self.get(j + 1));
            if b > a {
                return Err(Error::NotMonotone {
                    index: j + 1,
                    prev: a,
                    next: b,
                });
            }
        }
        if let Some(p) = self.tail.pos {
            let b = p.value(m + 1);
            if b > self.get(m) {
                return Err(Error::NotMonotone {
                    index: m + 1,
                    prev: self.get(m),
                    next: b,
                });
            }
        }
        Ok(())
    }

    /// Checks `gamma_{-k} >= gamma_k` for every `k >= 1`.
    pub fn check_mirror_dominates(&self) -> Result<()> {
        for k in 1..=self.bandwidth as i64 {
            if self.get(-k) < self.get(k) {
                return Err(Error::Hypothesis(format!(
                    "gamma_-{k} = {} < gamma_{k} = {}",
                    self.get(-k),
                    self.get(k)
                )));
            }
        }
        match (self.tail.neg, self.tail.pos) {
            (_, None) => Ok(()),
            (Some(n), Some(p)) if n == p || n.dominates(&p) => Ok(()),
            _ => Err(Error::Hypothesis(
                "cannot verify gamma_-k >= gamma_k on the tail".into(),
            )),
        }
    }

    /// Bracket for `sum_{j >= from} gamma_j^p` along the nonnegative
    /// direction (`from` may be negative).
    pub fn power_sum_from(&self, from: i64, p: f64) -> Result<Bounded> {
        let m = self.bandwidth as i64;
        let mut acc = 0.0;
        // beyond M on the negative side, summed explicitly
        if from < -m {
            let neg = self.tail.neg;
            for k in (m + 1..=-from).rev() {
                acc += neg.map_or(0.0, |q| q.value(k)).powf(p);
            }
        }
        let lo = from.max(-m);
        for j in (lo..=m).rev() {
            let v = self.get(j);
            if v != 0.0 {
                acc += v.powf(p);
            }
        }
        let tail = match self.tail.pos {
            Some(q) => q.power_sum((m + 1).max(from), p)?,
            None => Bounded::exact(0.0),
        };
        Ok(Bounded::exact(acc) + tail)
    }

    /// `sum_{j >= from} gamma_j^2` with its remainder bound.
    pub fn tail_sum_sq(&self, from: i64) -> Result<Bounded> {
        self.power_sum_from(from, 2.0)
    }

    /// `sum_{j <= -from} gamma_j^2` (the mirror image of [`Self::tail_sum_sq`]).
    pub fn tail_sum_sq_neg(&self, from: i64) -> Result<Bounded> {
        let m = self.bandwidth as i64;
        let mut acc = 0.0;
        for k in (from.max(-m)..=m).rev() {
            let v = self.get(-k);
            acc += v * v;
        }
        let tail = match self.tail.neg {
            Some(q) => q.power_sum((m + 1).max(from), 2.0)?,
            None => Bounded::exact(0.0),
        };
        Ok(Bounded::exact(acc) + tail)
    }

    /// `||gamma||_2^2`.
    pub fn norm_sq(&self) -> Result<Bounded> {
        let m = self.bandwidth as i64;
        let mut acc = 0.0;
        for k in (1..=m).rev() {
            let (a, b) = (self.get(k), self.get(-k));
            acc += a * a + b * b;
        }
        acc += self.center() * self.center();
        Ok(Bounded::exact(acc) + self.outside_sq()?)
    }

    /// `sum_{|j| > M} gamma_j^2`.
    pub fn outside_sq(&self) -> Result<Bounded> {
        let start = self.bandwidth as i64 + 1;
        let mut b = Bounded::exact(0.0);
        for p in [self.tail.pos, self.tail.neg].into_iter().flatten() {
            b = b + p.power_sum(start, 2.0)?;
        }
        Ok(b)
    }

    /// Largest entry over the stored range; tails never exceed it for
    /// admissible sequences.
    pub fn max_value(&self) -> f64 {
        self.stored().map(|(_, v)| v).fold(0.0, f64::max)
    }
}

/// Tail of a [`DecaySequence`] beyond its stored prefix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayTail {
    /// `v_i = profile(i)` for `i >= len`.
    Single(Profile),
    /// `v_{len+2t} = v_{len+2t+1} = profile(start + t)`; the rearrangement of
    /// a symmetric two-sided tail.
    Doubled { profile: Profile, start: i64 },
}

/// One-sided nonincreasing nonnegative sequence `v_0 >= v_1 >= ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecaySequence {
    values: Vec<f64>,
    tail: Option<DecayTail>,
}

impl DecaySequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_tail(values, None)
    }

    pub fn with_tail(values: Vec<f64>, tail: Option<DecayTail>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::InvalidSequence(format!(
                    "value {v} at index {i} must be finite and nonnegative"
                )));
            }
        }
        for i in 1..values.len() {
            if values[i] > values[i - 1] {
                return Err(Error::NotMonotone {
                    index: i as i64,
                    prev: values[i - 1],
                    next: values[i],
                });
            }
        }
        let s = DecaySequence { values, tail };
        if let Some(t) = tail {
            let len = s.values.len() as i64;
            let (p, first) = match t {
                DecayTail::Single(p) => (p, len),
                DecayTail::Doubled { profile, start } => (profile, start),
            };
            p.validate()?;
            if !p.covers(first) {
                return Err(Error::InvalidSequence(format!(
                    "tail {p:?} undefined at index {first}"
                )));
            }
            if let Some(&last) = s.values.last() {
                let next = s.get(len as usize);
                if next > last {
                    return Err(Error::NotMonotone {
                        index: len,
                        prev: last,
                        next,
                    });
                }
            }
        }
        Ok(s)
    }

    /// `v_k = k^(-r) ln^(-beta) k` for `k >= k0`, flat below `k0`; `len`
    /// values stored.
    pub fn power_log(r: f64, beta: f64, k0: u64, len: usize) -> Result<Self> {
        if k0 < 2 || (len as u64) < k0 {
            return Err(Error::InvalidSequence(format!(
                "power-log decay needs k0 >= 2 and len >= k0 (k0={k0}, len={len})"
            )));
        }
        let g = Generator::PowerLog { r, beta, k0 };
        let values = (0..len as i64).map(|k| g.value(k)).collect();
        Self::with_tail(values, Some(DecayTail::Single(Profile::power_log(r, beta)?)))
    }

    /// `v_k = q^k`.
    pub fn geometric(q: f64, len: usize) -> Result<Self> {
        let values = (0..len).map(|k| q.powi(k as i32)).collect();
        Self::with_tail(values, Some(DecayTail::Single(Profile::geometric(q)?)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> Option<DecayTail> {
        self.tail
    }

    pub fn get(&self, i: usize) -> f64 {
        if i < self.values.len() {
            return self.values[i];
        }
        match self.tail {
            None => 0.0,
            Some(DecayTail::Single(p)) => p.value(i as i64),
            Some(DecayTail::Doubled { profile, start }) => {
                let t = ((i - self.values.len()) / 2) as i64;
                profile.value(start + t)
            }
        }
    }

    /// Bracket for `sum_{k >= from} v_k^p`.
    pub fn power_sum(&self, from: usize, p: f64) -> Result<Bounded> {
        let len = self.values.len();
        let mut acc = 0.0;
        let mut i = self.values.len();
        while i > from {
            i -= 1;
            let v = self.values[i];
            if v != 0.0 {
                acc += v.powf(p);
            }
        }
        let tail = match self.tail {
            None => Bounded::exact(0.0),
            Some(DecayTail::Single(q)) => q.power_sum(from.max(len) as i64, p)?,
            Some(DecayTail::Doubled { profile, start }) => {
                let off = from.saturating_sub(len);
                let t0 = (off / 2) as i64;
                let mut b = profile.power_sum(start + t0, p)?;
                b = Bounded {
                    value: 2.0 * b.value,
                    remainder: 2.0 * b.remainder,
                };
                if off % 2 == 1 {
                    let v = profile.value(start + t0).powf(p);
                    b.value -= v;
                }
                b
            }
        };
        Ok(Bounded::exact(acc) + tail)
    }

    /// `sum_{k >= from} v_k^2` with its remainder bound.
    pub fn tail_sum_sq(&self, from: usize) -> Result<Bounded> {
        self.power_sum(from, 2.0)
    }
}
