//! Dirichlet-kernel recovery `S_n` and the midpoint rule `Q_n` on the
//! `2n+1` equispaced nodes `x_j = j/(2n+1)`.
//!
//! Everything here works in coefficient space: sampling a trigonometric
//! polynomial at the nodes and resynthesizing with the Dirichlet kernel folds
//! frequency `m` onto its residue `k` modulo `2n+1`, `|k| <= n`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::recovery::QuadratureRule;
use crate::seq::{Bounded, Profile, SpectralSequence};
use crate::space::TrigPolynomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DirichletPlan {
    n: u64,
}

impl DirichletPlan {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("Dirichlet degree must be >= 1".into()));
        }
        Ok(DirichletPlan { n })
    }

    pub fn degree(&self) -> u64 {
        self.n
    }

    /// `N = 2n + 1`.
    pub fn node_count(&self) -> u64 {
        2 * self.n + 1
    }

    pub fn nodes(&self) -> Vec<f64> {
        let big = self.node_count();
        (0..big).map(|j| j as f64 / big as f64).collect()
    }

    /// Residue of `m` in `[-n, n]` modulo `N`.
    pub fn fold(&self, m: i64) -> i64 {
        let big = self.node_count() as i64;
        (m + self.n as i64).rem_euclid(big) - self.n as i64
    }
}

/// `S_n f`: coefficient `k` (`|k| <= n`) is `sum_theta alpha_{k + theta N}`.
pub fn apply_sn(plan: &DirichletPlan, f: &TrigPolynomial) -> TrigPolynomial {
    TrigPolynomial::from_coeffs(f.iter().map(|(m, c)| (plan.fold(m), c)))
}

/// The two orthogonal parts of `f - S_n f`: the truncation
/// `sum_{|j|>n} |alpha_j|^2` and the aliasing
/// `sum_{|k|<=n} |sum_{theta != 0} alpha_{k + theta N}|^2`.
pub fn error_parts_sn(plan: &DirichletPlan, f: &TrigPolynomial) -> (f64, f64) {
    let n = plan.degree() as i64;
    let mut truncation = 0.0;
    let mut aliased = TrigPolynomial::zero();
    for (m, c) in f.iter() {
        if m.abs() > n {
            truncation += c.norm_sqr();
            aliased.add_coeff(plan.fold(m), c);
        }
    }
    (truncation, aliased.l2_norm_sq())
}

/// `||f - S_n f||_2^2` from the aliasing identity.
pub fn exact_l2_error_sn(plan: &DirichletPlan, f: &TrigPolynomial) -> f64 {
    let (t, a) = error_parts_sn(plan, f);
    t + a
}

/// `Q_n`: weights `1/(2n+1)` at the plan nodes.
pub fn midpoint_rule(plan: &DirichletPlan) -> QuadratureRule {
    let big = plan.node_count() as usize;
    QuadratureRule::new(plan.nodes(), vec![1.0 / big as f64; big])
        .expect("node and weight counts agree")
}

/// `sup_{||f||_H <= 1} ||f - S_n f||_2` on `H_gamma`.
///
/// Frequencies split into residue classes mod `N`; in-band frequencies
/// contribute nothing. On class `k` with out-of-band entries `d_i = gamma_j`
/// the squared error is the quadratic form `D^2 + d d^T` in the normalized
/// coefficients, whose top eigenvalue solves `1 = sum d_i^2/(lambda - d_i^2)`.
/// Tail entries beyond the bandwidth are bracketed analytically, which gives
/// an enclosure of the exact value: the result is `[value, value + remainder]`.
pub fn worst_case_error_sn(plan: &DirichletPlan, gamma: &SpectralSequence) -> Result<Bounded> {
    let n = plan.degree() as i64;
    let big = plan.node_count() as i64;
    let m = gamma.bandwidth() as i64;
    let classes = big as usize;
    let mut entries: Vec<Vec<f64>> = vec![Vec::new(); classes];
    for j in -m..=m {
        if j.abs() <= n {
            continue;
        }
        let v = gamma.get(j);
        if v != 0.0 {
            entries[(plan.fold(j) + n) as usize].push(v * v);
        }
    }
    let tail = gamma.tail();
    let mut lam_lo = 0.0f64;
    let mut lam_hi = 0.0f64;
    for (idx, d2) in entries.iter().enumerate() {
        let k = idx as i64 - n;
        let mut t = ClassTail::default();
        if let Some(p) = tail.pos {
            // j = k + theta N > max(M, n)
            t.add(&p, big, k, ((m - k).div_euclid(big) + 1).max(1))?;
        }
        if let Some(p) = tail.neg {
            // -j = -k + theta N > M
            t.add(&p, big, -k, ((m + k).div_euclid(big) + 1).max(1))?;
        }
        let (lo, hi) = top_secular_root(d2, &t);
        lam_lo = lam_lo.max(lo);
        lam_hi = lam_hi.max(hi);
    }
    let lo = lam_lo.sqrt();
    Ok(Bounded {
        value: lo,
        remainder: lam_hi.sqrt() - lo,
    })
}

#[derive(Default)]
struct ClassTail {
    lo: f64,
    hi: f64,
    /// Largest squared tail entry.
    top: f64,
}

impl ClassTail {
    fn add(&mut self, p: &Profile, step: i64, offset: i64, theta0: i64) -> Result<()> {
        let c = p.compose(step as u64, offset);
        let s = c.power_sum(theta0, 2.0)?;
        self.lo += s.lo();
        self.hi += s.hi();
        self.top = self.top.max(c.value(theta0).powi(2));
        Ok(())
    }
}

/// Bracket for the largest eigenvalue of `diag(d2) + d d^T` extended by a
/// tail of total squared mass in `[t.lo, t.hi]` and entries at most `t.top`.
///
/// Each tail term `s/(lambda - s)` of the secular function lies between
/// `s/lambda` and `s/(lambda - top)`, so bisecting the two bounding secular
/// functions brackets the true root.
fn top_secular_root(d2: &[f64], t: &ClassTail) -> (f64, f64) {
    let stored_max = d2.iter().copied().fold(0.0, f64::max);
    let total: f64 = d2.iter().sum::<f64>() + t.hi;
    if total == 0.0 {
        return (0.0, 0.0);
    }
    let base = stored_max.max(t.top);
    let gaps: Vec<(f64, f64)> = d2.iter().map(|&s| (s, base - s)).collect();
    let secular = |shift: f64, tail_term: f64| -> f64 {
        gaps.iter().map(|&(s, g)| s / (g + shift)).sum::<f64>() + tail_term
    };
    // lower root: tail terms replaced by mass_lo / lambda
    let lower = bisect(total, |x| secular(x, t.lo / (base + x)) > 1.0).0;
    // upper root: tail terms replaced by mass_hi / (lambda - top)
    let upper = bisect(total, |x| {
        let denom = base - t.top + x;
        let tail_term = if t.hi == 0.0 { 0.0 } else { t.hi / denom };
        secular(x, tail_term) > 1.0
    })
    .1;
    (base + lower, base + upper)
}

/// Bracket `(a, b)` around the point in `[0, hi]` where `above` switches
/// from true to false.
fn bisect(hi: f64, above: impl Fn(f64) -> bool) -> (f64, f64) {
    let (mut a, mut b) = (0.0f64, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if above(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    (a, b)
}

/// `2 max{gamma_{n+1}, ((1/n) sum_{k>n} gamma_k^2)^{1/2}}`: an upper bound on
/// both `e(Q_n, H_gamma, INT)` and `e(S_n, H_gamma, L2)` for symmetric
/// `gamma` that is nonincreasing on `N_0`.
pub fn prop32_upper_bound(gamma: &SpectralSequence, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if let Some(k) = gamma.symmetry_defect() {
        return Err(Error::NotSymmetric(k));
    }
    gamma.check_nonincreasing_nonneg()?;
    let n = n as i64;
    let tail = gamma.tail_sum_sq(n + 1)?.hi();
    Ok(2.0 * gamma.get(n + 1).max((tail / n as f64).sqrt()))
}

/// `Q(f)` for a quadrature rule applied to a polynomial, exactly.
pub fn apply_rule(rule: &QuadratureRule, f: &TrigPolynomial) -> Complex64 {
    rule.apply(|x| f.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::testutil::random_poly;
    use crate::seq::Tail;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn low_band_is_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..8u64 {
            let plan = DirichletPlan::new(n).unwrap();
            let f = random_poly(&mut rng, n as i64, 0.8);
            assert_eq!(apply_sn(&plan, &f), f);
            assert_eq!(exact_l2_error_sn(&plan, &f), 0.0);
        }
    }

    #[test]
    fn pure_alias_folds_to_constant() {
        for n in 1..6u64 {
            let plan = DirichletPlan::new(n).unwrap();
            let f = TrigPolynomial::monomial(2 * n as i64 + 1, c(1.0));
            assert_eq!(apply_sn(&plan, &f), TrigPolynomial::monomial(0, c(1.0)));
        }
    }

    #[test]
    fn first_out_of_band_frequency_costs_two() {
        // e_{n+1} aliases to -n: one lost coefficient plus one injected
        for n in 1..10u64 {
            let plan = DirichletPlan::new(n).unwrap();
            let f = TrigPolynomial::monomial(n as i64 + 1, c(1.0));
            assert_eq!(exact_l2_error_sn(&plan, &f), 2.0);
        }
    }

    #[test]
    fn coefficients_match_the_nodal_sum() {
        // S_n f = (1/N) sum_j f(x_j) D_n(. - x_j), evaluated directly
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plan = DirichletPlan::new(3).unwrap();
        let big = plan.node_count() as f64;
        for _ in 0..20 {
            let f = random_poly(&mut rng, 30, 0.3);
            let s = apply_sn(&plan, &f);
            for k in -3i64..=3 {
                let direct: Complex64 = plan
                    .nodes()
                    .iter()
                    .map(|&x| f.eval(x) * Complex64::from_polar(1.0, -TAU * k as f64 * x))
                    .sum::<Complex64>()
                    / big;
                assert!((direct - s.coeff(k)).norm() < 1e-12);
            }
            assert!(s.degree() <= 3);
        }
    }

    #[test]
    fn identity_and_orthogonal_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..=16u64);
            let plan = DirichletPlan::new(n).unwrap();
            let f = random_poly(&mut rng, 100, 0.2);
            let direct = f.sub(&apply_sn(&plan, &f)).l2_norm_sq();
            let e = exact_l2_error_sn(&plan, &f);
            assert!((e - direct).abs() <= 1e-12 * direct.max(1e-300));
            // ||f - T_n f||^2 and ||S_n(T_n f - f)||^2 computed separately
            let tn = TrigPolynomial::from_coeffs(f.iter().filter(|(j, _)| j.abs() <= n as i64));
            let head = f.sub(&tn).l2_norm_sq();
            let alias = apply_sn(&plan, &tn.sub(&f)).l2_norm_sq();
            let (t, a) = error_parts_sn(&plan, &f);
            assert!((t - head).abs() <= 1e-12 * head.max(1.0));
            assert!((a - alias).abs() <= 1e-12 * alias.max(1.0));
        }
    }

    #[test]
    fn midpoint_rule_examples() {
        for n in 1..6u64 {
            let plan = DirichletPlan::new(n).unwrap();
            let q = midpoint_rule(&plan);
            let one = TrigPolynomial::monomial(0, c(1.0));
            assert!((apply_rule(&q, &one) - c(1.0)).norm() < 1e-15);
            let e1 = TrigPolynomial::monomial(1, c(1.0));
            assert!(apply_rule(&q, &e1).norm() < 1e-15);
            let alias = TrigPolynomial::monomial(2 * n as i64 + 1, c(1.0));
            assert!((apply_rule(&q, &alias) - c(1.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn midpoint_is_the_integral_of_sn() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.random_range(1..=8u64);
            let plan = DirichletPlan::new(n).unwrap();
            let f = random_poly(&mut rng, 40, 0.3);
            let q = apply_rule(&midpoint_rule(&plan), &f);
            assert!((q - apply_sn(&plan, &f).coeff(0)).norm() < 1e-12);
        }
    }

    /// Top eigenvalue of `D^2 + d d^T` per class by a dense eigensolver.
    fn brute_worst_case(plan: &DirichletPlan, gamma: &SpectralSequence) -> f64 {
        let n = plan.degree() as i64;
        let m = gamma.bandwidth() as i64;
        let mut best = 0.0f64;
        for k in -n..=n {
            let d: Vec<f64> = (-m..=m)
                .filter(|j| j.abs() > n && plan.fold(*j) == k)
                .map(|j| gamma.get(j))
                .collect();
            if d.is_empty() {
                continue;
            }
            let mut a = DMatrix::from_fn(d.len(), d.len(), |i, j| d[i] * d[j]);
            for i in 0..d.len() {
                a[(i, i)] += d[i] * d[i];
            }
            best = best.max(a.symmetric_eigenvalues().max());
        }
        best.sqrt()
    }

    #[test]
    fn worst_case_matches_dense_eigensolver_on_finite_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let m = rng.random_range(4..40usize);
            let g = SpectralSequence::from_entries(
                m,
                (-(m as i64)..=m as i64).map(|j| (j, rng.random_range(0.0..1.0))),
            )
            .unwrap();
            let n = rng.random_range(1..=(m as u64 / 2).max(1));
            let plan = DirichletPlan::new(n).unwrap();
            let w = worst_case_error_sn(&plan, &g).unwrap();
            let b = brute_worst_case(&plan, &g);
            assert!(w.remainder <= 1e-12 * b.max(1.0));
            assert!((w.value - b).abs() <= 1e-10 * b.max(1.0), "{} vs {b}", w.value);
        }
    }

    #[test]
    fn worst_case_examples() {
        let plan = DirichletPlan::new(4).unwrap();
        let band = SpectralSequence::from_entries(4, (-4..=4).map(|j| (j, 1.0))).unwrap();
        assert_eq!(worst_case_error_sn(&plan, &band).unwrap().value, 0.0);
        // single out-of-band spike c at n+1: 1x1 form c^2 + c^2
        let spike = SpectralSequence::from_entries(6, [(0, 1.0), (5, 0.3)]).unwrap();
        let w = worst_case_error_sn(&plan, &spike).unwrap();
        assert!((w.value - 0.3 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tail_enclosure_tightens_with_bandwidth() {
        let plan = DirichletPlan::new(20).unwrap();
        let small = SpectralSequence::power_log(0.5, 1.0, 3, 200).unwrap();
        let big = SpectralSequence::power_log(0.5, 1.0, 3, 20_000).unwrap();
        let a = worst_case_error_sn(&plan, &small).unwrap();
        let b = worst_case_error_sn(&plan, &big).unwrap();
        // both enclose the same exact value
        assert!(a.lo() <= b.hi() + 1e-12 && b.lo() <= a.hi() + 1e-12);
        assert!(b.remainder < a.remainder);
        assert!(b.remainder < 1e-3 * b.value);
    }

    #[test]
    fn worst_case_sits_between_approximation_number_and_prop32() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for trial in 0..20 {
            let gamma = if trial % 2 == 0 {
                let beta = rng.random_range(0.6..2.0);
                SpectralSequence::power_log(0.5, beta, 3, 4096).unwrap()
            } else {
                // random symmetric nonincreasing profile with geometric tail
                let m = 300usize;
                let mut v = vec![0.0; m + 1];
                let mut cur = 1.0f64;
                for x in v.iter_mut() {
                    *x = cur;
                    cur *= rng.random_range(0.97..1.0);
                }
                let q = cur.powf(1.0 / (m as f64 + 1.0)).min(0.99);
                let scale = v[m] / q.powi(m as i32);
                let p = Profile::Geometric { scale, q };
                SpectralSequence::from_entries_with_tail(
                    m,
                    (-(m as i64)..=m as i64).map(|j| (j, v[j.unsigned_abs() as usize])),
                    Tail::symmetric(p),
                )
                .unwrap()
            };
            let approx = crate::seq::rearrangement(&gamma).unwrap();
            for n in 1..=64u64 {
                let plan = DirichletPlan::new(n).unwrap();
                let w = worst_case_error_sn(&plan, &gamma).unwrap();
                let upper = prop32_upper_bound(&gamma, n).unwrap();
                assert!(w.value <= upper + 1e-12, "trial {trial} n {n}");
                // S_n uses 2n+1 samples, so its error is at least a_{2n+1}
                assert!(w.hi() + 1e-12 >= approx.get(2 * n as usize + 1));
            }
        }
    }

    #[test]
    fn prop32_examples() {
        let spike = SpectralSequence::spike(1.0).unwrap();
        for n in 1..10 {
            assert_eq!(prop32_upper_bound(&spike, n).unwrap(), 0.0);
        }
        let geo = SpectralSequence::geometric(0.5, 40).unwrap();
        // gamma_2 = 1/4, tail sum_{k>=2} 4^-k = 1/12
        let want = 2.0 * (1.0f64 / 12.0).sqrt();
        assert!((prop32_upper_bound(&geo, 1).unwrap() - want).abs() < 1e-15);
        let asym = SpectralSequence::from_entries(1, [(-1, 2.0), (0, 3.0), (1, 1.0)]).unwrap();
        assert!(prop32_upper_bound(&asym, 1).is_err());
        let bumpy = SpectralSequence::from_entries(2, (-2i64..=2).map(|j| (j, if j.abs() == 1 { 2.0 } else { 1.0 }))).unwrap();
        assert!(prop32_upper_bound(&bumpy, 1).is_err());
    }
}
