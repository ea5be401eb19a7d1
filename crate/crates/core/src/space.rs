//! The space `H_gamma`: trigonometric polynomials, norms, kernel, and the
//! representer of integration.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::seq::SpectralSequence;

/// Finitely supported Fourier series `f = sum_j alpha_j e_j`,
/// `e_j(x) = exp(2 pi i j x)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigPolynomial {
    coeffs: BTreeMap<i64, Complex64>,
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `c * e_j`.
    pub fn monomial(j: i64, c: Complex64) -> Self {
        Self::from_coeffs([(j, c)])
    }

    /// Zero coefficients are dropped; repeated frequencies are summed.
    pub fn from_coeffs<I>(coeffs: I) -> Self
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut p = Self::zero();
        for (j, c) in coeffs {
            p.add_coeff(j, c);
        }
        p
    }

    pub fn from_real_coeffs<I>(coeffs: I) -> Self
    where
        I: IntoIterator<Item = (i64, f64)>,
    {
        Self::from_coeffs(coeffs.into_iter().map(|(j, c)| (j, Complex64::new(c, 0.0))))
    }

    pub fn add_coeff(&mut self, j: i64, c: Complex64) {
        let e = self.coeffs.entry(j).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if *e == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&j);
        }
    }

    pub fn coeff(&self, j: i64) -> Complex64 {
        self.coeffs.get(&j).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(j, c)| (*j, *c))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `max |j|` over the support (0 for the zero polynomial).
    pub fn degree(&self) -> u64 {
        self.coeffs.keys().map(|j| j.unsigned_abs()).max().unwrap_or(0)
    }

    /// Real-valued on `R` iff `alpha_{-j} = conj(alpha_j)` for all `j`.
    pub fn is_real(&self) -> bool {
        self.coeffs
            .iter()
            .all(|(j, c)| self.coeff(-j) == c.conj())
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(j, c)| c * Complex64::from_polar(1.0, TAU * (*j as f64) * x))
            .sum()
    }

    /// `||f||_{L2}^2 = sum |alpha_j|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn sub(&self, other: &TrigPolynomial) -> TrigPolynomial {
        let mut out = self.clone();
        for (j, c) in other.iter() {
            out.add_coeff(j, -c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> TrigPolynomial {
        Self::from_coeffs(self.iter().map(|(j, c)| (j, c * s)))
    }
}

/// Reduces a node to `[0, 1)`.
pub fn reduce_mod1(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `||f||_{H_gamma}^2 = sum |alpha_j|^2 / gamma_j^2`.
pub fn h_norm_sq(f: &TrigPolynomial, gamma: &SpectralSequence) -> Result<f64> {
    let mut acc = 0.0;
    for (j, c) in f.iter() {
        let g = gamma.get(j);
        if g == 0.0 {
            return Err(Error::Membership(j));
        }
        acc += c.norm_sqr() / (g * g);
    }
    Ok(acc)
}

/// `<f, g>_{H_gamma} = sum alpha_j conj(beta_j) / gamma_j^2`.
pub fn h_inner(f: &TrigPolynomial, g: &TrigPolynomial, gamma: &SpectralSequence) -> Result<Complex64> {
    for p in [f, g] {
        if let Some((j, _)) = p.iter().find(|(j, _)| gamma.get(*j) == 0.0) {
            return Err(Error::Membership(j));
        }
    }
    Ok(f.iter()
        .map(|(j, a)| {
            let gj = gamma.get(j);
            a * g.coeff(j).conj() / (gj * gj)
        })
        .sum())
}

/// Representer of `INT(f) = alpha_0`: `h = gamma_0^2 e_0`.
pub fn integration_representer(gamma: &SpectralSequence) -> Result<TrigPolynomial> {
    let g0 = gamma.center();
    if g0 == 0.0 {
        return Err(Error::Hypothesis(
            "gamma_0 = 0: integration vanishes on H_gamma".into(),
        ));
    }
    Ok(TrigPolynomial::from_real_coeffs([(0, g0 * g0)]))
}

/// A kernel value and the bound `|K_full - value| <= remainder`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub remainder: f64,
}

/// Truncated reproducing kernel `K(x, y) = sum_{|j| <= M} gamma_j^2 e_j(x - y)`
/// of a symmetric `gamma`, evaluated in cosine form.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    gamma: SpectralSequence,
    /// `gamma_j^2` for `j = 0..=M`.
    sq: Vec<f64>,
    remainder: f64,
}

impl KernelSpec {
    pub fn new(gamma: &SpectralSequence) -> Result<Self> {
        if let Some(k) = gamma.symmetry_defect() {
            return Err(Error::NotSymmetric(k));
        }
        let sq = (0..=gamma.bandwidth() as i64)
            .map(|j| gamma.get(j).powi(2))
            .collect();
        Ok(KernelSpec {
            gamma: gamma.clone(),
            sq,
            remainder: gamma.outside_sq()?.hi(),
        })
    }

    pub fn gamma(&self) -> &SpectralSequence {
        &self.gamma
    }

    pub fn bandwidth(&self) -> usize {
        self.sq.len() - 1
    }

    /// Upper bound on `sum_{|j| > M} gamma_j^2`.
    pub fn remainder(&self) -> f64 {
        self.remainder
    }

    fn eval_diff(&self, d: f64) -> f64 {
        let mut acc = 0.0;
        for j in (1..self.sq.len()).rev() {
            if self.sq[j] != 0.0 {
                acc += self.sq[j] * (TAU * j as f64 * d).cos();
            }
        }
        self.sq[0] + 2.0 * acc
    }

    pub fn eval(&self, x: f64, y: f64) -> KernelValue {
        let d = (reduce_mod1(x) - reduce_mod1(y)).abs();
        KernelValue {
            value: self.eval_diff(d),
            remainder: self.remainder,
        }
    }

    /// Gram matrix `(K(x_i, x_j))`, exactly symmetric.
    pub fn gram(&self, nodes: &[f64]) -> DMatrix<f64> {
        let n = nodes.len();
        let xs: Vec<f64> = nodes.iter().map(|x| reduce_mod1(*x)).collect();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval_diff((xs[i] - xs[j]).abs());
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// `K(., x)` as a trigonometric polynomial.
    pub fn section(&self, x: f64) -> TrigPolynomial {
        let m = self.bandwidth() as i64;
        TrigPolynomial::from_coeffs((-m..=m).map(|j| {
            let s = self.sq[j.unsigned_abs() as usize];
            (j, Complex64::from_polar(s, -TAU * j as f64 * x))
        }))
    }
}

/// `K(x, y)` with its truncation remainder.
pub fn kernel_eval(spec: &KernelSpec, x: f64, y: f64) -> KernelValue {
    spec.eval(x, y)
}
