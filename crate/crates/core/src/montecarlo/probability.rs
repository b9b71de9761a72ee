//! Scalar probability and expectation estimates for coefficient vectors.

use num_complex::Complex64;

use super::report::{Check, TrialRow};
use super::batched;
use crate::ensembles::{stream_rng, CoefficientDistribution, RadialDensity};
use crate::quadrature::gauss_legendre_on;
use crate::error::{Error, Result};

/// Floor for `log|⟨a, u⟩|`, about the log of the smallest normal double.
pub const LOG_CLAMP: f64 = -690.0;

/// Clamped trials beyond this fraction raise the warning flag.
const CLAMP_WARNING_FRACTION: f64 = 0.01;

/// Fails unless `‖w‖ = 1` to within `1e-12`.
pub fn validate_unit(w: &[Complex64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::Contract("empty direction vector".into()));
    }
    let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Contract(format!("direction vector has norm {norm}, expected 1")));
    }
    Ok(())
}

/// `e_j` in `ℂ^len`.
pub fn unit_vector(len: usize, j: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); len];
    v[j] = Complex64::new(1.0, 0.0);
    v
}

/// `(e₁ + e₂)/√2`.
pub fn pair_vector(len: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); len];
    v[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[1] = v[0];
    v
}

/// `(1, …, 1)/√len`.
pub fn flat_vector(len: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0 / (len as f64).sqrt(), 0.0); len]
}

/// `E log|a|` for one coefficient: `∫ log r φ(r) 2πr dr` for complex laws,
/// `∫ log|x| φ(x) dx` for real ones. Dyadic panels toward 0 (and toward ∞
/// after `r = 1/t`) absorb the logarithmic singularity and the tail.
pub fn log_moment<D: RadialDensity + ?Sized>(d: &D) -> f64 {
    const PANELS: i32 = 80;
    const ORDER: usize = 20;
    let element = |r: f64| {
        if d.is_real() {
            2.0 * d.density(r)
        } else {
            2.0 * std::f64::consts::PI * r * d.density(r)
        }
    };
    let dyadic = |g: &dyn Fn(f64) -> f64, top: f64| -> f64 {
        let mut total = 0.0;
        for k in (0..PANELS).rev() {
            let hi = top * 0.5f64.powi(k);
            let (x, w) = gauss_legendre_on(ORDER, 0.5 * hi, hi);
            total += x.iter().zip(&w).map(|(&x, &w)| w * g(x)).sum::<f64>();
        }
        total
    };
    match d.support_radius() {
        Some(s) => dyadic(&|r: f64| r.ln() * element(r), s),
        None => {
            let inner = dyadic(&|r: f64| r.ln() * element(r), 1.0);
            let outer = dyadic(&|t: f64| -t.ln() * element(1.0 / t) / (t * t), 1.0);
            inner + outer
        }
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::Contract("trials must be positive".into()));
    }
    Ok(())
}

/// A hit frequency with its 3σ binomial margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub trials: u64,
    pub hits: u64,
    pub empirical: f64,
    /// `3 √(p̂(1−p̂)/trials)`.
    pub margin: f64,
    pub bound: f64,
}

impl ProbabilityEstimate {
    pub fn from_counts(trials: u64, hits: u64, bound: f64) -> Self {
        let p = hits as f64 / trials as f64;
        ProbabilityEstimate {
            trials,
            hits,
            empirical: p,
            margin: 3.0 * (p * (1.0 - p) / trials as f64).sqrt(),
            bound,
        }
    }

    pub fn within_bound(&self) -> bool {
        self.empirical <= self.bound + self.margin
    }

    /// `empirical ≤ bound + margin`.
    pub fn check(&self, name: impl Into<String>) -> Check {
        Check::at_most(name, self.empirical, self.bound + self.margin)
    }

    /// `|empirical − exact| ≤ margin`.
    pub fn agreement_check(&self, name: impl Into<String>, exact: f64) -> Check {
        Check::at_most(name, (self.empirical - exact).abs(), self.margin)
    }
}

/// Conjugated nonzero entries of `w`. Coordinates where `w` vanishes do
/// not affect `⟨a, w⟩`, so only the others are drawn.
fn active_entries(w: &[Complex64]) -> Vec<Complex64> {
    w.iter().filter(|c| c.norm_sqr() > 0.0).map(|c| c.conj()).collect()
}

fn inner(a: &[Complex64], w_conj: &[Complex64]) -> Complex64 {
    a.iter().zip(w_conj).map(|(x, y)| x * y).sum()
}

fn draw_into(dist: &CoefficientDistribution, seed: u64, trial: u64, buf: &mut [Complex64]) {
    let mut rng = stream_rng(seed, trial);
    dist.fill(&mut rng, buf);
}

/// Fraction of trials with `|⟨a, w⟩| ≤ 1/n²`, against `πT/n³`.
///
/// Returns the estimate and one `[trials, hits]` row per batch.
pub fn small_ball_probability(
    dist: &CoefficientDistribution,
    n: u32,
    w: &[Complex64],
    trials: u64,
    seed: u64,
) -> Result<(ProbabilityEstimate, Vec<TrialRow>)> {
    validate_unit(w)?;
    check_trials(trials)?;
    if n == 0 {
        return Err(Error::Contract("degree n must be positive".into()));
    }
    let radius = 1.0 / f64::from(n).powi(2);
    let w = active_entries(w);
    let w = w.as_slice();
    let counts = batched(trials, |start, end| {
        let mut buf = vec![Complex64::new(0.0, 0.0); w.len()];
        let mut hits = 0u64;
        for t in start..end {
            draw_into(dist, seed, t, &mut buf);
            if inner(&buf, w).norm() <= radius {
                hits += 1;
            }
        }
        (start, end - start, hits)
    });
    let hits = counts.iter().map(|c| c.2).sum();
    let rows = counts
        .iter()
        .map(|&(start, count, h)| TrialRow {
            group: format!("small_ball_n{n}"),
            trial: start,
            values: vec![count as f64, h as f64],
        })
        .collect();
    let bound = std::f64::consts::PI * dist.t() / f64::from(n).powi(3);
    Ok((ProbabilityEstimate::from_counts(trials, hits, bound), rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormTailEstimate {
    /// `P(‖a‖ ≥ n²)` against `T/n²`.
    pub base: ProbabilityEstimate,
    /// `(k, P(‖a‖ ≥ n^k))` against `T(m_n/n^k)²`, for `k = m+1, m+2`.
    pub higher: Vec<(u32, ProbabilityEstimate)>,
    /// Per batch: `[trials, hits at n², hits at n^(m+1), hits at n^(m+2)]`.
    pub rows: Vec<TrialRow>,
}

/// Tail frequencies of `‖a‖` for `a ∈ ℂ^{m_n}`; `dim` is the number of
/// variables `m` that fixes the higher thresholds.
pub fn norm_tail_probability(
    dist: &CoefficientDistribution,
    m_n: usize,
    n: u32,
    dim: usize,
    trials: u64,
    seed: u64,
) -> Result<NormTailEstimate> {
    check_trials(trials)?;
    if m_n == 0 || n < 2 || dim == 0 {
        return Err(Error::Contract(format!("norm tail needs m_n ≥ 1, n ≥ 2, m ≥ 1 (got {m_n}, {n}, {dim})")));
    }
    let nf = f64::from(n);
    let ks = [dim as u32 + 1, dim as u32 + 2];
    // Compare squared norms against squared thresholds.
    let thresholds = [nf.powi(4), nf.powi(2 * ks[0] as i32), nf.powi(2 * ks[1] as i32)];
    let counts = batched(trials, |start, end| {
        let mut buf = vec![Complex64::new(0.0, 0.0); m_n];
        let mut hits = [0u64; 3];
        for t in start..end {
            draw_into(dist, seed, t, &mut buf);
            let sq: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
            for (h, th) in hits.iter_mut().zip(&thresholds) {
                if sq >= *th {
                    *h += 1;
                }
            }
        }
        (start, end - start, hits)
    });
    let mut total = [0u64; 3];
    for c in &counts {
        for (t, h) in total.iter_mut().zip(&c.2) {
            *t += h;
        }
    }
    let rows = counts
        .iter()
        .map(|&(start, count, h)| TrialRow {
            group: format!("norm_tail_n{n}"),
            trial: start,
            values: vec![count as f64, h[0] as f64, h[1] as f64, h[2] as f64],
        })
        .collect();
    let t = dist.t();
    let mn = m_n as f64;
    let higher = ks
        .iter()
        .zip(&total[1..])
        .map(|(&k, &h)| {
            let bound = t * (mn / nf.powi(k as i32)).powi(2);
            (k, ProbabilityEstimate::from_counts(trials, h, bound))
        })
        .collect();
    Ok(NormTailEstimate {
        base: ProbabilityEstimate::from_counts(trials, total[0], t / (nf * nf)),
        higher,
        rows,
    })
}

/// Monte Carlo `E log|⟨a, u⟩|`.
#[derive(Debug, Clone, PartialEq)]
pub struct InEstimate {
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    /// Trials whose logarithm fell below [`LOG_CLAMP`].
    pub clamped: u64,
    pub warning: bool,
    /// Per batch: `[count, Σ log, Σ log², clamped]`.
    pub rows: Vec<TrialRow>,
}

impl InEstimate {
    /// Rebuilds the estimate from batch rows, summing them in order.
    pub fn from_rows(rows: Vec<TrialRow>) -> Result<Self> {
        let (mut count, mut sum, mut sum_sq, mut clamped) = (0.0, 0.0, 0.0, 0.0);
        for r in &rows {
            if r.values.len() != 4 {
                return Err(Error::Contract(format!("row {} has {} values, expected 4", r.trial, r.values.len())));
            }
            count += r.values[0];
            sum += r.values[1];
            sum_sq += r.values[2];
            clamped += r.values[3];
        }
        if count < 2.0 {
            return Err(Error::Contract("need at least two trials".into()));
        }
        let mean = sum / count;
        let var = ((sum_sq - sum * mean) / (count - 1.0)).max(0.0);
        Ok(InEstimate {
            trials: count as u64,
            mean,
            stderr: (var / count).sqrt(),
            clamped: clamped as u64,
            warning: clamped > CLAMP_WARNING_FRACTION * count,
            rows,
        })
    }
}

/// `E log|⟨a, u⟩|` over `trials` draws of `a ∈ ℂ^{len(u)}`; only the
/// coordinates where `u` is nonzero are sampled.
pub fn i_n_estimate(dist: &CoefficientDistribution, u: &[Complex64], trials: u64, seed: u64) -> Result<InEstimate> {
    validate_unit(u)?;
    check_trials(trials)?;
    let group = format!("i_n_m{}", u.len());
    let u = active_entries(u);
    let u = u.as_slice();
    let rows = batched(trials, |start, end| {
        let mut buf = vec![Complex64::new(0.0, 0.0); u.len()];
        let (mut sum, mut sum_sq, mut clamped) = (0.0, 0.0, 0u64);
        for t in start..end {
            draw_into(dist, seed, t, &mut buf);
            let mut l = inner(&buf, u).norm().ln();
            if l < LOG_CLAMP {
                l = LOG_CLAMP;
                clamped += 1;
            }
            sum += l;
            sum_sq += l * l;
        }
        TrialRow {
            group: group.clone(),
            trial: start,
            values: vec![(end - start) as f64, sum, sum_sq, clamped as f64],
        }
    });
    InEstimate::from_rows(rows)
}
