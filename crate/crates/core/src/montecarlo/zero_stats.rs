//! Averaged root statistics of univariate random polynomials.

use std::sync::Arc;

use super::per_trial;
use super::report::{Aggregate, TrialReport, TrialRow};
use crate::ensembles::{make_random_poly, CoefficientDistribution};
use crate::error::{Error, Result};
use crate::orthobasis::OrthonormalBasis;
use crate::zeros::{
    angular_counts, annulus_fraction, onb_to_monomial, radial_cdf, roots_1d, scale_zeros, EmpiricalZeroMeasure,
};

/// Which statistics to average, and the factor applied to roots first.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroStatsSpec {
    pub radii: Vec<f64>,
    pub sectors: usize,
    pub annulus: (f64, f64),
    pub scale: f64,
}

impl Default for ZeroStatsSpec {
    fn default() -> Self {
        ZeroStatsSpec {
            radii: vec![0.5, 0.7, 0.9, 1.0],
            sectors: 12,
            annulus: (0.9, 1.1),
            scale: 1.0,
        }
    }
}

impl ZeroStatsSpec {
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.radii.iter().map(|r| format!("cdf_{r}")).collect();
        cols.extend((0..self.sectors).map(|k| format!("sector_{k}")));
        cols.push("annulus".into());
        cols
    }
}

#[derive(Debug, Clone)]
pub struct ZeroMeasureSummary {
    pub spec: ZeroStatsSpec,
    pub trials: u64,
    /// Trials dropped because the polynomial was degenerate.
    pub excluded: u64,
    pub radial_cdf: Vec<(f64, Aggregate)>,
    pub sector_counts: Vec<Aggregate>,
    pub annulus: Aggregate,
    /// One row per retained trial, columns as [`ZeroStatsSpec::columns`].
    pub rows: Vec<TrialRow>,
    /// Retained root sets (after scaling), keyed by trial.
    pub zero_sets: Vec<(u64, EmpiricalZeroMeasure)>,
}

impl ZeroMeasureSummary {
    pub fn to_report(&self, experiment: &str, seed: u64) -> TrialReport {
        let cols = self.spec.columns();
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut report = TrialReport::new(experiment, seed, &col_refs);
        report.rows = self.rows.clone();
        report
            .notes
            .push(format!("trials {}, excluded degenerate {}", self.trials, self.excluded));
        report
    }
}

/// Roots of `trials` random polynomials over a univariate basis, with
/// radial CDF, sector counts and annulus fraction averaged across trials.
pub fn expected_zero_measure(
    basis: Arc<OrthonormalBasis>,
    dist: &CoefficientDistribution,
    trials: u64,
    seed: u64,
    spec: &ZeroStatsSpec,
) -> Result<ZeroMeasureSummary> {
    if basis.dim() != 1 {
        return Err(Error::Contract(format!("root statistics need a univariate basis, got m = {}", basis.dim())));
    }
    if trials == 0 {
        return Err(Error::Contract("trials must be positive".into()));
    }
    let per: Vec<Result<Option<(Vec<f64>, EmpiricalZeroMeasure)>>> = per_trial(trials, |t| {
        let h = make_random_poly(basis.clone(), dist, seed, t)?;
        let mu = match onb_to_monomial(&h).and_then(|c| roots_1d(&c)) {
            Ok(mu) => mu,
            Err(Error::DegeneratePolynomial(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let mu = scale_zeros(&mu, spec.scale)?;
        let mut values = spec
            .radii
            .iter()
            .map(|&r| radial_cdf(&mu, r))
            .collect::<Result<Vec<_>>>()?;
        values.extend(angular_counts(&mu, spec.sectors)?.into_iter().map(|c| c as f64));
        values.push(annulus_fraction(&mu, spec.annulus.0, spec.annulus.1)?);
        Ok(Some((values, mu)))
    });

    let mut rows = Vec::new();
    let mut zero_sets = Vec::new();
    let mut excluded = 0;
    for (t, r) in per.into_iter().enumerate() {
        match r? {
            Some((values, mu)) => {
                rows.push(TrialRow {
                    group: "zeros".into(),
                    trial: t as u64,
                    values,
                });
                zero_sets.push((t as u64, mu));
            }
            None => excluded += 1,
        }
    }
    let column = |k: usize| Aggregate::of(&rows.iter().map(|r| r.values[k]).collect::<Vec<_>>());
    let nr = spec.radii.len();
    Ok(ZeroMeasureSummary {
        radial_cdf: spec.radii.iter().enumerate().map(|(k, &r)| (r, column(k))).collect(),
        sector_counts: (0..spec.sectors).map(|k| column(nr + k)).collect(),
        annulus: column(nr + spec.sectors),
        spec: spec.clone(),
        trials,
        excluded,
        rows,
        zero_sets,
    })
}
