//! Multi-indices in graded lexicographic order and log-domain polynomial
//! evaluation.
//!
//! Monomials `z^ν` of degree `≤ n` in `m` variables are enumerated by total
//! degree, lexicographically inside each degree, so the first entry is the
//! constant monomial and every degree block is a prefix of the next order.
//! Each non-constant index records a parent `ν − e_j`, which lets values and
//! log-magnitudes be filled by a one-multiplication recurrence.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct MultiIndexOrder {
    m: usize,
    n: u32,
    indices: Vec<MultiIndex>,
    /// `(parent, coordinate)` with `indices[i] = indices[parent] + e_coordinate`.
    parents: Vec<Option<(usize, usize)>>,
}

/// `binomial(m + n, n)` with overflow detection.
pub fn monomial_count(m: usize, n: u32) -> Result<usize> {
    let mut acc: u128 = 1;
    // C(m+n, n) = prod_{k=1..n} (m + k) / k, exact at every step.
    for k in 1..=u128::from(n) {
        acc = acc
            .checked_mul(m as u128 + k)
            .ok_or_else(|| Error::SizeOverflow(format!("binomial({}+{n}, {n})", m)))?
            / k;
    }
    usize::try_from(acc).map_err(|_| Error::SizeOverflow(format!("binomial({}+{n}, {n})", m)))
}

/// All multi-indices of length `m` and degree `≤ n`, graded lexicographic.
pub fn enumerate_multiindices(m: usize, n: u32) -> Result<MultiIndexOrder> {
    if m == 0 {
        return Err(Error::Contract("dimension m must be at least 1".into()));
    }
    let count = monomial_count(m, n)?;
    let mut indices = Vec::with_capacity(count);
    let mut scratch = vec![0u32; m];
    for d in 0..=n {
        compositions(d, 0, &mut scratch, &mut indices);
    }
    debug_assert_eq!(indices.len(), count);

    let lookup: HashMap<&[u32], usize> = indices
        .iter()
        .enumerate()
        .map(|(i, ix)| (ix.exponents(), i))
        .collect();
    let parents = indices
        .iter()
        .map(|ix| {
            let j = ix.exponents().iter().rposition(|&e| e > 0)?;
            let mut p = ix.exponents().to_vec();
            p[j] -= 1;
            Some((lookup[p.as_slice()], j))
        })
        .collect();

    Ok(MultiIndexOrder {
        m,
        n,
        indices,
        parents,
    })
}

fn compositions(remaining: u32, pos: usize, scratch: &mut [u32], out: &mut Vec<MultiIndex>) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(MultiIndex(scratch.to_vec()));
        return;
    }
    for first in 0..=remaining {
        scratch[pos] = first;
        compositions(remaining - first, pos + 1, scratch, out);
    }
}

impl MultiIndexOrder {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn parent(&self, i: usize) -> Option<(usize, usize)> {
        self.parents[i]
    }

    pub fn position(&self, exponents: &[u32]) -> Option<usize> {
        self.indices.iter().position(|ix| ix.exponents() == exponents)
    }

    fn check_point(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.m {
            return Err(Error::Contract(format!(
                "point has {} coordinates, order expects {}",
                z.len(),
                self.m
            )));
        }
        Ok(())
    }
}

/// Values `z^ν` for every index of the order.
pub fn eval_monomials(z: &[Complex64], order: &MultiIndexOrder) -> Result<Vec<Complex64>> {
    order.check_point(z)?;
    let mut out = Vec::with_capacity(order.len());
    for i in 0..order.len() {
        let v = match order.parent(i) {
            None => Complex64::new(1.0, 0.0),
            Some((p, j)) => out[p] * z[j],
        };
        out.push(v);
    }
    Ok(out)
}

/// `log|z^ν|` and the unit phase of `z^ν` for every index, without ever
/// forming `z^ν` itself. Zero coordinates give `-∞` log-magnitudes.
#[derive(Debug, Clone)]
pub struct LogMonomials {
    pub log_abs: Vec<f64>,
    pub phase: Vec<Complex64>,
}

impl LogMonomials {
    pub fn new(order: &MultiIndexOrder, z: &[Complex64]) -> Result<Self> {
        order.check_point(z)?;
        let coord: Vec<(f64, Complex64)> = z.iter().map(|&c| split_log(c)).collect();
        let mut log_abs = Vec::with_capacity(order.len());
        let mut phase = Vec::with_capacity(order.len());
        for i in 0..order.len() {
            let (l, p) = match order.parent(i) {
                None => (0.0, Complex64::new(1.0, 0.0)),
                Some((parent, j)) => (log_abs[parent] + coord[j].0, phase[parent] * coord[j].1),
            };
            log_abs.push(l);
            phase.push(p);
        }
        Ok(LogMonomials { log_abs, phase })
    }

    pub fn len(&self) -> usize {
        self.log_abs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_abs.is_empty()
    }
}

/// `(log|c|, c/|c|)`, with phase 1 for `c = 0`.
pub(crate) fn split_log(c: Complex64) -> (f64, Complex64) {
    let r = c.norm();
    if r == 0.0 {
        (f64::NEG_INFINITY, Complex64::new(1.0, 0.0))
    } else {
        (r.ln(), c / r)
    }
}

/// A complex number stored as `exp(log_abs) * phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub log_abs: f64,
    pub phase: Complex64,
}

impl LogValue {
    pub fn to_complex(self) -> Complex64 {
        self.phase * self.log_abs.exp()
    }
}

/// Sums `Σ exp(l_i) p_i` by factoring out the largest `l_i`.
pub(crate) fn log_sum_terms<I>(terms: I) -> LogValue
where
    I: Iterator<Item = (f64, Complex64)> + Clone,
{
    let max = terms
        .clone()
        .map(|(l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogValue {
            log_abs: f64::NEG_INFINITY,
            phase: Complex64::new(1.0, 0.0),
        };
    }
    let sum: Complex64 = terms
        .filter(|(l, _)| *l > f64::NEG_INFINITY)
        .map(|(l, p)| p * (l - max).exp())
        .sum();
    let (l, p) = split_log(sum);
    LogValue {
        log_abs: max + l,
        phase: p,
    }
}

/// `Σ c_ν z^ν` in log-polar form given precomputed monomial logs.
pub fn log_eval_with(coeffs: &[Complex64], monomials: &LogMonomials) -> Result<LogValue> {
    if coeffs.len() != monomials.len() {
        return Err(Error::Contract(format!(
            "{} coefficients for {} monomials",
            coeffs.len(),
            monomials.len()
        )));
    }
    let terms = coeffs
        .iter()
        .zip(monomials.log_abs.iter().zip(&monomials.phase))
        .map(|(&c, (&l, &p))| {
            let (lc, pc) = split_log(c);
            (lc + l, pc * p)
        });
    Ok(log_sum_terms(terms))
}

/// `log|Σ c_ν z^ν|`; `-∞` exactly when the rescaled sum is zero.
pub fn log_abs_eval(coeffs: &[Complex64], order: &MultiIndexOrder, z: &[Complex64]) -> Result<f64> {
    if coeffs.len() != order.len() {
        return Err(Error::Contract(format!(
            "{} coefficients for {} monomials",
            coeffs.len(),
            order.len()
        )));
    }
    let mons = LogMonomials::new(order, z)?;
    Ok(log_eval_with(coeffs, &mons)?.log_abs)
}

/// Stable `log Σ exp(x_i)`; `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn exps(order: &MultiIndexOrder) -> Vec<Vec<u32>> {
        order.indices().iter().map(|i| i.exponents().to_vec()).collect()
    }

    #[test]
    fn univariate_order() {
        let o = enumerate_multiindices(1, 3).unwrap();
        assert_eq!(exps(&o), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn bivariate_degree_two() {
        let o = enumerate_multiindices(2, 2).unwrap();
        assert_eq!(
            exps(&o),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]
        );
    }

    #[test]
    fn constants_only() {
        let o = enumerate_multiindices(3, 0).unwrap();
        assert_eq!(exps(&o), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(enumerate_multiindices(0, 2), Err(Error::Contract(_))));
    }

    #[test]
    fn binomial_overflow_is_reported() {
        assert!(matches!(monomial_count(60, 4_000_000), Err(Error::SizeOverflow(_))));
        assert_eq!(monomial_count(2, 20).unwrap(), 231);
        assert_eq!(monomial_count(2, 40).unwrap(), 861);
    }

    #[test]
    fn monomial_values() {
        let o = enumerate_multiindices(2, 3).unwrap();
        let v = eval_monomials(&[c(2.0, 0.0), c(3.0, 0.0)], &o).unwrap();
        let k = o.position(&[1, 2]).unwrap();
        assert_eq!(v[k], c(18.0, 0.0));

        let v0 = eval_monomials(&[c(0.0, 0.0), c(0.0, 0.0)], &o).unwrap();
        assert_eq!(v0[0], c(1.0, 0.0));
        assert!(v0[1..].iter().all(|x| *x == c(0.0, 0.0)));

        let o1 = enumerate_multiindices(1, 3).unwrap();
        let p = eval_monomials(&[c(2.0, 0.0)], &o1).unwrap();
        assert_eq!(p, vec![c(1.0, 0.0), c(2.0, 0.0), c(4.0, 0.0), c(8.0, 0.0)]);
    }

    #[test]
    fn log_eval_examples() {
        let o0 = enumerate_multiindices(1, 0).unwrap();
        assert_eq!(log_abs_eval(&[c(1.0, 0.0)], &o0, &[c(-7.0, 3.0)]).unwrap(), 0.0);

        let o1 = enumerate_multiindices(1, 1).unwrap();
        let e = std::f64::consts::E;
        let v = log_abs_eval(&[c(0.0, 0.0), c(1.0, 0.0)], &o1, &[c(e, 0.0)]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);

        // Σ_{j≤200} 2^j = 2^201 - 1.
        let o = enumerate_multiindices(1, 200).unwrap();
        let ones = vec![c(1.0, 0.0); o.len()];
        let v = log_abs_eval(&ones, &o, &[c(2.0, 0.0)]).unwrap();
        let oracle = 201.0 * std::f64::consts::LN_2 + (-(2f64.powi(-201))).ln_1p();
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
    }

    #[test]
    fn exact_zero_gives_neg_infinity() {
        let o = enumerate_multiindices(1, 1).unwrap();
        let v = log_abs_eval(&[c(-1.0, 0.0), c(1.0, 0.0)], &o, &[c(1.0, 0.0)]).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
        let z = log_abs_eval(&[c(0.0, 0.0), c(0.0, 0.0)], &o, &[c(1.0, 0.0)]).unwrap();
        assert_eq!(z, f64::NEG_INFINITY);
    }

    #[test]
    fn large_arguments_do_not_overflow() {
        let o = enumerate_multiindices(1, 500).unwrap();
        let ones = vec![c(1.0, 0.0); o.len()];
        let v = log_abs_eval(&ones, &o, &[c(10.0, 0.0)]).unwrap();
        assert!(v.is_finite());
        assert!((v - 500.0 * 10f64.ln()).abs() < 0.2);
    }

    #[test]
    fn length_mismatch_is_contract_error() {
        let o = enumerate_multiindices(1, 2).unwrap();
        assert!(log_abs_eval(&[c(1.0, 0.0)], &o, &[c(1.0, 0.0)]).is_err());
        assert!(eval_monomials(&[c(1.0, 0.0), c(1.0, 0.0)], &o).is_err());
    }

    #[test]
    fn log_sum_exp_basics() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn prefix_property(m in 1usize..4, n in 1u32..8) {
            let big = enumerate_multiindices(m, n).unwrap();
            let small = enumerate_multiindices(m, n - 1).unwrap();
            prop_assert_eq!(&big.indices()[..small.len()], small.indices());
            prop_assert!(big.indices()[small.len()..].iter().all(|i| i.degree() == n));
        }

        #[test]
        fn log_eval_matches_direct(
            m in 1usize..3,
            n in 0u32..31,
            zs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2),
            seed in any::<u64>(),
        ) {
            let order = enumerate_multiindices(m, n).unwrap();
            let z: Vec<Complex64> = zs[..m].iter().map(|&(a, b)| c(a, b) * (1.0 / 2f64.sqrt())).collect();
            // Cheap deterministic coefficients in [-1, 1]^2.
            let mut s = seed;
            let mut next = || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            let coeffs: Vec<Complex64> = (0..order.len()).map(|_| c(next(), next())).collect();
            let mons = eval_monomials(&z, &order).unwrap();
            let direct: Complex64 = coeffs.iter().zip(&mons).map(|(a, b)| a * b).sum();
            let scale: f64 = coeffs.iter().zip(&mons).map(|(a, b)| (a * b).norm()).sum();
            // Away from near-cancellation both routes are well conditioned.
            prop_assume!(direct.norm() > 1e-3 * scale);
            let logged = log_abs_eval(&coeffs, &order, &z).unwrap();
            prop_assert!((logged - direct.norm().ln()).abs() < 1e-10);
        }
    }
}
