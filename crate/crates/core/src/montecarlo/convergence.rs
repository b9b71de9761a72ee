//! Convergence of `(1/n) log‖Fₙ‖` and of the Bergman kernel estimate to
//! the extremal function.

use std::f64::consts::PI;
use std::sync::Arc;

use super::report::{Check, TrialReport};
use super::{derive_seed, per_trial};
use crate::ensembles::{make_random_map, CoefficientDistribution};
use crate::error::{Error, Result};
use crate::extremal::{extremal_estimate, grid_error_from_values, oracle_extremal, EvaluationGrid, GridError, OracleModel};
use crate::orthobasis::{weyl_log_normalization, OrthonormalBasis};
use crate::polycore::{log_sum_exp, LogMonomials};
use crate::quadrature::composite_gauss_legendre;

/// Inputs of [`convergence_experiment`]; one basis per degree, degrees
/// strictly increasing.
#[derive(Debug, Clone)]
pub struct ConvergenceSetup<'a> {
    pub model: OracleModel,
    pub dist: &'a CoefficientDistribution,
    pub bases: Vec<Arc<OrthonormalBasis>>,
    pub grid: &'a EvaluationGrid,
    pub trials: u64,
    /// Number of map components `k` (1 gives `Hₙ`).
    pub components: usize,
    /// Mean-error tolerance counted at the largest degree.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSummary {
    pub degrees: Vec<u32>,
    /// `errors[i][t]`: grid error of trial `t` at `degrees[i]`.
    pub errors: Vec<Vec<GridError>>,
    pub median_mean_error: Vec<f64>,
    /// Medians strictly decrease with degree.
    pub monotone: bool,
    /// Fraction of trials whose mean error at the largest degree is below
    /// that at the previous degree (trial `t` paired with trial `t`).
    pub paired_improvement: f64,
    pub fraction_below_tolerance: f64,
    pub tolerance: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

impl ConvergenceSummary {
    /// Rows and notes only; callers attach the checks they declare.
    pub fn to_report(&self, experiment: &str, seed: u64) -> TrialReport {
        let mut report = TrialReport::new(experiment, seed, &["degree", "mean_abs_error", "sup_error"]);
        for (n, errs) in self.degrees.iter().zip(&self.errors) {
            for (t, e) in errs.iter().enumerate() {
                report.push_row(format!("n{n}"), t as u64, vec![f64::from(*n), e.mean_abs_error, e.sup_error]);
            }
        }
        for (n, med) in self.degrees.iter().zip(&self.median_mean_error) {
            report.notes.push(format!("median mean error at n={n}: {med:e}"));
        }
        report.notes.push(format!(
            "fraction of trials with mean error <= {:e} at n={}: {}",
            self.tolerance,
            self.degrees.last().copied().unwrap_or(0),
            self.fraction_below_tolerance
        ));
        report
    }
}

/// Grid mean-abs and sup errors of `(1/n) log‖Fₙ‖` against the oracle,
/// per degree and trial.
///
/// Trial `t` at degree `n` uses stream `t` of seed `derive_seed(seed, n)`.
pub fn convergence_experiment(setup: &ConvergenceSetup<'_>, seed: u64) -> Result<ConvergenceSummary> {
    let ConvergenceSetup {
        model,
        dist,
        ref bases,
        grid,
        trials,
        components,
        tolerance,
    } = *setup;
    if bases.is_empty() || trials == 0 {
        return Err(Error::Contract("convergence needs at least one degree and one trial".into()));
    }
    let degrees: Vec<u32> = bases.iter().map(|b| b.degree()).collect();
    if degrees.windows(2).any(|w| w[0] >= w[1]) || degrees[0] == 0 {
        return Err(Error::Contract(format!("degrees must be positive and increasing, got {degrees:?}")));
    }
    if bases.iter().any(|b| b.dim() != model.dim()) || grid.dim() != model.dim() {
        return Err(Error::Contract(format!("basis, grid and {model:?} disagree on dimension")));
    }
    let oracle: Vec<f64> = grid
        .points()
        .map(|z| oracle_extremal(model, z))
        .collect::<Result<_>>()?;

    let mut errors = Vec::with_capacity(bases.len());
    for basis in bases {
        let n = basis.degree();
        let inv_n = 1.0 / f64::from(n);
        let sub_seed = derive_seed(seed, u64::from(n));
        let per: Vec<Result<GridError>> = per_trial(trials, |t| {
            let f = make_random_map(basis.clone(), dist, components, sub_seed, t)?;
            let values = grid
                .points()
                .zip(&oracle)
                .map(|(z, &o)| {
                    let mons = LogMonomials::new(basis.order(), z)?;
                    Ok((inv_n * f.log_norm_with(&mons)?, o))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(grid_error_from_values(&values, grid))
        });
        errors.push(per.into_iter().collect::<Result<Vec<_>>>()?);
    }

    let means = |errs: &[GridError]| errs.iter().map(|e| e.mean_abs_error).collect::<Vec<_>>();
    let median_mean_error: Vec<f64> = errors.iter().map(|e| median(&means(e))).collect();
    let monotone = median_mean_error.windows(2).all(|w| w[1] < w[0]);
    let last = means(errors.last().unwrap());
    let paired_improvement = if errors.len() >= 2 {
        let prev = means(&errors[errors.len() - 2]);
        last.iter().zip(&prev).filter(|(a, b)| a < b).count() as f64 / trials as f64
    } else {
        f64::NAN
    };
    let fraction_below_tolerance = last.iter().filter(|&&e| e <= tolerance).count() as f64 / trials as f64;
    Ok(ConvergenceSummary {
        degrees,
        errors,
        median_mean_error,
        monotone,
        paired_improvement,
        fraction_below_tolerance,
        tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichSummary {
    /// `(log(C·mₙ) + 2n log(1+ε)) / (2n)`.
    pub bound: f64,
    /// Largest `|extremal_estimate − oracle|` on the grid.
    pub max_deviation: f64,
    pub holds: bool,
}

impl SandwichSummary {
    pub fn check(&self, name: impl Into<String>) -> Check {
        Check::at_most(name, self.max_deviation, self.bound)
    }
}

/// Deterministic check that the kernel estimate stays inside the band
/// implied by `1/(C(1+ε)^{2n}mₙ) ≤ Sₙ/φ² ≤ C(1+ε)^{2n}mₙ`.
pub fn bergman_sandwich_check(
    basis: &OrthonormalBasis,
    model: OracleModel,
    grid: &EvaluationGrid,
    c: f64,
    eps: f64,
) -> Result<SandwichSummary> {
    if !(c >= 1.0 && eps >= 0.0) {
        return Err(Error::Contract(format!("sandwich constants need C ≥ 1, ε ≥ 0 (got {c}, {eps})")));
    }
    let n = f64::from(basis.degree());
    if basis.dim() != model.dim() || grid.dim() != model.dim() {
        return Err(Error::Contract(format!("basis, grid and {model:?} disagree on dimension")));
    }
    let bound = ((c * basis.len() as f64).ln() + 2.0 * n * eps.ln_1p()) / (2.0 * n);
    let deviations = grid
        .points()
        .map(|z| Ok((extremal_estimate(basis, z)? - oracle_extremal(model, z)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let max_deviation = deviations.into_iter().fold(0.0, f64::max);
    Ok(SandwichSummary {
        bound,
        max_deviation,
        holds: max_deviation <= bound,
    })
}

/// For each closed-form Weyl basis element `p_j` of degree `n`, the weighted
/// mass `∫_{|z|>radius} |p_j|² e^{−n|z|²} dm₂`; the integral is cut at
/// `radius + 8`, where the integrand is below double precision.
pub fn weyl_mass_outside(n: u32, radius: f64) -> Result<Vec<f64>> {
    if n == 0 || !(radius > 0.0) {
        return Err(Error::Contract(format!("need n ≥ 1 and radius > 0 (got {n}, {radius})")));
    }
    let nf = f64::from(n);
    let (r, w) = composite_gauss_legendre(20, 64, radius, radius + 8.0);
    Ok((0..=n)
        .map(|j| {
            let c = 2.0 * weyl_log_normalization(n, j);
            let logs: Vec<f64> = r
                .iter()
                .zip(&w)
                .map(|(&r, &w)| c + f64::from(2 * j + 1) * r.ln() - nf * r * r + (2.0 * PI * w).ln())
                .collect();
            log_sum_exp(&logs).exp()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::DistributionKind;
    use crate::extremal::ring_grid;
    use crate::orthobasis::{closed_form_basis, ClosedForm};

    #[test]
    fn weyl_mass_total_is_one_from_zero() {
        // With the cut at a tiny radius the whole unit mass is captured.
        let masses = weyl_mass_outside(10, 1e-9).unwrap();
        for m in masses {
            assert!((m - 1.0).abs() < 1e-10, "{m}");
        }
    }

    #[test]
    fn weyl_mass_decays() {
        let a = weyl_mass_outside(20, 1.5).unwrap().into_iter().fold(0.0, f64::max);
        let b = weyl_mass_outside(40, 1.5).unwrap().into_iter().fold(0.0, f64::max);
        assert!(b < a * a.sqrt(), "{a} {b}");
    }

    #[test]
    fn constant_polynomial_error_is_oracle() {
        // Hₙ = p₀ ≡ 1 has (1/n) log|Hₙ| = 0, so the error is the oracle itself.
        let grid = ring_grid(&[2.0, 4.0], 16).unwrap();
        let values: Vec<(f64, f64)> = grid
            .points()
            .map(|z| (0.0, oracle_extremal(OracleModel::Circle, z).unwrap()))
            .collect();
        let e = grid_error_from_values(&values, &grid);
        assert!((e.sup_error - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn circle_sandwich() {
        let basis = closed_form_basis(ClosedForm::Circle { n: 50 }).unwrap();
        let grid = ring_grid(&crate::extremal::DEFAULT_RADII, 64).unwrap();
        let s = bergman_sandwich_check(&basis, OracleModel::Circle, &grid, 2.0, 0.05).unwrap();
        assert!(s.holds, "{s:?}");
    }

    #[test]
    fn circle_convergence_small() {
        let d = CoefficientDistribution::new(DistributionKind::ComplexGaussian).unwrap();
        let grid = ring_grid(&[2.0, 4.0], 32).unwrap();
        let bases = [10, 40]
            .map(|n| Arc::new(closed_form_basis(ClosedForm::Circle { n }).unwrap()))
            .to_vec();
        let setup = ConvergenceSetup {
            model: OracleModel::Circle,
            dist: &d,
            bases,
            grid: &grid,
            trials: 8,
            components: 1,
            tolerance: 0.1,
        };
        let s = convergence_experiment(&setup, 3).unwrap();
        assert_eq!(s.errors.len(), 2);
        assert!(s.monotone, "{:?}", s.median_mean_error);
        let r = s.to_report("conv", 3);
        assert_eq!(r.rows.len(), 16);
    }
}
