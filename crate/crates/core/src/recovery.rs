//! Optimal recovery and quadrature on `H_gamma`.
//!
//! Kernel computations run on the truncation `|j| <= M` of a [`KernelSpec`];
//! every reported error carries a one-sided remainder so that it encloses the
//! error on the full space.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seq::{rearrangement, Bounded, DecaySequence, SpectralSequence};
use crate::space::{h_norm_sq, reduce_mod1, KernelSpec, TrigPolynomial};

/// Relative cut below which Gram eigenvalues count as zero.
pub const SINGULAR_CUTOFF: f64 = 1e-12;

/// Relative cutoff on eigenvalues of `A^T A` when forming a row-space projector.
const ROW_SPACE_CUTOFF: f64 = 1e-10;

/// Gram-form radicands below `-CLAMP_TOLERANCE * ||R||^2` are rejected.
pub const CLAMP_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("nodes and weights must be finite".into()));
        }
        Ok(QuadratureRule {
            nodes: nodes.into_iter().map(reduce_mod1).collect(),
            weights,
        })
    }

    pub fn empty() -> Self {
        QuadratureRule {
            nodes: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }
}

/// `n` equispaced nodes `i/n`.
pub fn equispaced_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

/// One row of a sandwich table: certified lower bound (squared), measured
/// error with its remainder, and proved upper bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub family: String,
    pub n: u64,
    pub lower_sq: Option<f64>,
    pub lower_tag: String,
    pub measured: Option<f64>,
    pub measured_remainder: f64,
    pub upper: Option<f64>,
    /// Ordered `key=value` parameters, including the producers of the
    /// measured and upper columns.
    pub params: Vec<(String, String)>,
    pub seed: u64,
}

impl BoundReport {
    pub fn new(family: impl Into<String>, n: u64, seed: u64) -> Self {
        BoundReport {
            family: family.into(),
            n,
            lower_sq: None,
            lower_tag: String::new(),
            measured: None,
            measured_remainder: 0.0,
            upper: None,
            params: Vec::new(),
            seed,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    /// Violated inequalities among `lower <= measured + remainder` and
    /// `measured <= upper`, each with slack `tol`.
    pub fn violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if let (Some(l), Some(m)) = (self.lower_sq, self.measured) {
            let lower = l.max(0.0).sqrt();
            if lower > m + self.measured_remainder + tol {
                out.push(format!(
                    "n={}: lower {lower:e} exceeds measured {m:e} + {:e}",
                    self.n, self.measured_remainder
                ));
            }
        }
        if let (Some(m), Some(u)) = (self.measured, self.upper) {
            if m > u + tol {
                out.push(format!("n={}: measured {m:e} exceeds upper {u:e}", self.n));
            }
        }
        out
    }
}

/// `(a_0, ..., a_{count-1})`, the nonincreasing rearrangement of `gamma`.
pub fn approximation_numbers(gamma: &SpectralSequence, count: usize) -> Result<DecaySequence> {
    let r = rearrangement(gamma)?;
    DecaySequence::new((0..count).map(|i| r.get(i)).collect())
}

fn real_values(h_rep: &TrigPolynomial, nodes: &[f64]) -> Result<Vec<f64>> {
    let scale = h_rep.iter().map(|(_, c)| c.norm()).sum::<f64>();
    nodes
        .iter()
        .map(|&x| {
            let v = h_rep.eval(x);
            if v.im.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                Err(Error::Unsupported(
                    "real weights need a real-valued representer".into(),
                ))
            } else {
                Ok(v.re)
            }
        })
        .collect()
}

/// Minimum-norm least-squares solution of `G w = b` for symmetric PSD `G`.
/// Goes through the eigen decomposition: nalgebra's default SVD can return
/// a wrong factorization for rank-deficient Gram matrices.
fn min_norm_solve(g: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let g = (&g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(g);
    let lmax = eig.eigenvalues.max();
    let mut w = DVector::zeros(b.len());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > SINGULAR_CUTOFF * lmax {
            let v = eig.eigenvectors.column(i);
            w += v * (v.dot(b) / l);
        }
    }
    w
}

/// Weights minimizing `||R - sum_i w_i K(., x_i)||_H` for the representer
/// `R = h_rep` on the truncated space.
pub fn optimal_quadrature_weights(
    spec: &KernelSpec,
    nodes: &[f64],
    h_rep: &TrigPolynomial,
) -> Result<QuadratureRule> {
    if nodes.is_empty() {
        return Ok(QuadratureRule::empty());
    }
    let nodes: Vec<f64> = nodes.iter().map(|&x| reduce_mod1(x)).collect();
    let rhs = DVector::from_vec(real_values(h_rep, &nodes)?);
    let g = spec.gram(&nodes);
    let w = if g.iter().all(|v| *v == 0.0) {
        DVector::zeros(nodes.len())
    } else {
        min_norm_solve(g, &rhs)
    };
    QuadratureRule::new(nodes, w.iter().copied().collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureError {
    /// Error on the full space lies in `[lo, hi]`.
    pub bound: Bounded,
    /// The Gram-form radicand came out slightly negative (round-off).
    pub clamped: bool,
}

/// `sup_{||f||_H <= 1} |<f, R>_H - Q(f)|`.
///
/// On the truncation this is
/// `sqrt(||R||^2 - 2 sum w_i R(x_i) + sum w_i w_j K(x_i, x_j))`. That radicand
/// is only checked for consistency; the value itself is the `H` norm of
/// `R - sum w_i K(., x_i)` summed coefficient by coefficient, which avoids
/// the cancellation near zero error. The kernel tail adds a PSD term of size
/// at most `W^2 T` with `W = sum |w_i|`, which gives the remainder.
pub fn quadrature_worst_case_error(
    spec: &KernelSpec,
    rule: &QuadratureRule,
    h_rep: &TrigPolynomial,
) -> Result<QuadratureError> {
    let r_sq = h_norm_sq(h_rep, spec.gamma())?;
    let w = DVector::from_column_slice(rule.weights());
    let rx = DVector::from_vec(real_values(h_rep, rule.nodes())?);
    let g = spec.gram(rule.nodes());
    let radicand = r_sq - 2.0 * w.dot(&rx) + w.dot(&(&g * &w));
    let tolerance = CLAMP_TOLERANCE * r_sq;
    if radicand < -tolerance {
        return Err(Error::InconsistentTruncation {
            radicand,
            tolerance,
        });
    }
    let clamped = radicand < 0.0;
    let e_sq = residual_norm_sq(spec, rule, h_rep);
    let wsum: f64 = rule.weights().iter().map(|w| w.abs()).sum();
    let e = e_sq.sqrt();
    let hi = (e_sq + wsum * wsum * spec.remainder()).sqrt();
    Ok(QuadratureError {
        bound: Bounded {
            value: e,
            remainder: hi - e,
        },
        clamped,
    })
}

/// `||R - sum_i w_i K(., x_i)||_H^2` on the truncation.
fn residual_norm_sq(spec: &KernelSpec, rule: &QuadratureRule, h_rep: &TrigPolynomial) -> f64 {
    let m = spec.bandwidth() as i64;
    let mut acc = 0.0;
    for j in -m..=m {
        let g2 = spec.gamma().get(j).powi(2);
        if g2 == 0.0 {
            continue;
        }
        let s: Complex64 = rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .map(|(&x, &w)| Complex64::from_polar(w, -std::f64::consts::TAU * j as f64 * x))
            .sum();
        acc += (h_rep.coeff(j) - s * g2).norm_sqr() / g2;
    }
    acc
}

/// Optimal integration error `e(H_gamma, INT)` over all weights on the
/// nodes `i/N`, `i < N`, in closed form.
///
/// Shifting by `1/N` is an isometry of `H_gamma` that permutes the nodes, so
/// some optimal rule has equal weights `c/N`. Its squared error is
/// `(1 - c)^2 gamma_0^2 + c^2 A` with `A = sum_{theta != 0} gamma_{theta N}^2`,
/// minimized at `c = gamma_0^2 / (gamma_0^2 + A)` with value
/// `gamma_0^2 A / (gamma_0^2 + A)`. Holds for any `gamma`, symmetric or not.
pub fn equispaced_optimal_error(gamma: &SpectralSequence, nodes: u64) -> Result<Bounded> {
    let g0 = gamma.center().powi(2);
    if nodes == 0 {
        return Ok(Bounded::exact(gamma.center()));
    }
    let a = aliased_mass(gamma, nodes)?;
    let e = |a: f64| {
        if g0 == 0.0 || a == 0.0 {
            0.0
        } else {
            (g0 * a / (g0 + a)).sqrt()
        }
    };
    Bounded::from_bracket(e(a.lo()), e(a.hi()))
}

/// Weight of the optimal equispaced rule: `gamma_0^2 / (N (gamma_0^2 + A))`,
/// evaluated at the lower estimate of `A`.
pub fn equispaced_optimal_weight(gamma: &SpectralSequence, nodes: u64) -> Result<f64> {
    if nodes == 0 {
        return Err(Error::InvalidArgument("need at least one node".into()));
    }
    let g0 = gamma.center().powi(2);
    let a = aliased_mass(gamma, nodes)?.lo();
    if g0 == 0.0 {
        return Ok(0.0);
    }
    Ok(g0 / (nodes as f64 * (g0 + a)))
}

/// `sum_{theta != 0} gamma_{theta N}^2`.
fn aliased_mass(gamma: &SpectralSequence, nodes: u64) -> Result<Bounded> {
    let big = nodes as i64;
    let m = gamma.bandwidth() as i64;
    let mut acc = 0.0;
    let mut theta = m / big;
    while theta >= 1 {
        let (a, b) = (gamma.get(theta * big), gamma.get(-theta * big));
        acc += a * a + b * b;
        theta -= 1;
    }
    let mut b = Bounded::exact(acc);
    let theta0 = m / big + 1;
    for p in [gamma.tail().pos, gamma.tail().neg].into_iter().flatten() {
        b = b + p.compose(nodes, 0).power_sum(theta0, 2.0)?;
    }
    Ok(b)
}

/// Search budget for [`brute_force_gn`].
#[derive(Clone, Copy, Debug)]
pub struct NodeSearch {
    /// Largest number of grid subsets enumerated exhaustively.
    pub budget: u64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NodeSearch {
    fn default() -> Self {
        NodeSearch {
            budget: 20_000,
            restarts: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnSearch {
    pub value: f64,
    pub exhaustive: bool,
    pub best_nodes: Vec<f64>,
}

/// Real orthonormal basis of the truncation: `1`, `sqrt2 cos(2 pi k x)`,
/// `sqrt2 sin(2 pi k x)`; returns `(gammas, sampling matrix)`.
fn real_design(spec: &KernelSpec, nodes: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = spec.bandwidth();
    let g = spec.gamma();
    let mut gammas = vec![g.center()];
    for k in 1..=m as i64 {
        gammas.push(g.get(k));
        gammas.push(g.get(k));
    }
    let dim = 2 * m + 1;
    let s2 = std::f64::consts::SQRT_2;
    let a = DMatrix::from_fn(nodes.len(), dim, |i, c| {
        let x = nodes[i];
        let phi = if c == 0 {
            1.0
        } else {
            let k = c.div_ceil(2) as f64;
            let t = std::f64::consts::TAU * k * x;
            if c % 2 == 1 {
                s2 * t.cos()
            } else {
                s2 * t.sin()
            }
        };
        phi * gammas[c]
    });
    (gammas, a)
}

/// Worst-case L2 error of optimal recovery from the samples at `nodes` on
/// the truncated unit ball: `sqrt(lambda_max(P Gamma^2 P))` with `P` the
/// projector onto the kernel of the sampling map.
pub fn optimal_recovery_error(spec: &KernelSpec, nodes: &[f64]) -> f64 {
    let (gammas, a) = real_design(spec, nodes);
    let dim = gammas.len();
    let mut p = DMatrix::<f64>::identity(dim, dim);
    if !nodes.is_empty() {
        // Row space of `a` from the eigenvectors of `a^T a`; cutoff is on
        // squared singular values.
        let ata = a.transpose() * &a;
        let ata = (&ata + ata.transpose()) * 0.5;
        let eig = SymmetricEigen::new(ata);
        let lmax = eig.eigenvalues.max();
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l > ROW_SPACE_CUTOFF * lmax {
                let v = eig.eigenvectors.column(i);
                p -= v * v.transpose();
            }
        }
    }
    let gsq = DMatrix::from_diagonal(&DVector::from_iterator(dim, gammas.iter().map(|g| g * g)));
    let form = &p * gsq * &p;
    let form = (&form + form.transpose()) * 0.5;
    SymmetricEigen::new(form).eigenvalues.max().max(0.0).sqrt()
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    u64::try_from(acc).ok()
}

/// Calls `f` on every increasing `n`-subset of `0..grid` that starts at 0.
fn for_each_anchored_subset(grid: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        f(&idx);
        let Some(pos) = (1..n).rev().find(|&p| idx[p] < grid - n + p) else {
            return;
        };
        idx[pos] += 1;
        for q in pos + 1..n {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Smallest worst-case L2 error over searched sets of `n` nodes: an upper
/// bound on the sampling number `g_n` of the truncated space.
///
/// With `C(G-1, n-1)` within budget, every `n`-subset of the grid `i/G`
/// containing `0` is tried (shifts are isometries, so fixing one node loses
/// nothing). Otherwise equispaced nodes plus jittered restarts are tried.
pub fn brute_force_gn(spec: &KernelSpec, n: usize, grid: usize, search: &NodeSearch) -> Result<GnSearch> {
    if n == 0 {
        return Ok(GnSearch {
            value: optimal_recovery_error(spec, &[]),
            exhaustive: true,
            best_nodes: Vec::new(),
        });
    }
    if grid == 0 {
        return Err(Error::InvalidArgument("node grid must be nonempty".into()));
    }
    let mut best = GnSearch {
        value: f64::INFINITY,
        exhaustive: false,
        best_nodes: Vec::new(),
    };
    let consider = |nodes: Vec<f64>, best: &mut GnSearch| {
        let v = optimal_recovery_error(spec, &nodes);
        if v < best.value {
            best.value = v;
            best.best_nodes = nodes;
        }
    };
    let subsets = if n <= grid {
        binomial(grid as u64 - 1, n as u64 - 1)
    } else {
        None
    };
    match subsets {
        Some(c) if c <= search.budget => {
            for_each_anchored_subset(grid, n, |idx| {
                consider(idx.iter().map(|&i| i as f64 / grid as f64).collect(), &mut best)
            });
            best.exhaustive = true;
        }
        _ => {
            let base = equispaced_nodes(n);
            consider(base.clone(), &mut best);
            let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
            let h = 0.5 / n as f64;
            for _ in 0..search.restarts {
                let nodes = base
                    .iter()
                    .map(|&x| reduce_mod1(x + rng.random_range(-h..h)))
                    .collect();
                consider(nodes, &mut best);
            }
        }
    }
    Ok(best)
}
