use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use plurirand_core::ensembles::{CoefficientDistribution, DistributionKind, RadialDensity};
use plurirand_core::extremal::{
    evaluate_on_grid, extremal_estimate, grid_error_from_values, oracle_extremal, product_ring_grid, ring_grid,
    write_grid_csv, EvaluationGrid, OracleModel, DEFAULT_ANGLES_1D, DEFAULT_ANGLES_PRODUCT, DEFAULT_RADII,
};
use plurirand_core::montecarlo::report::recheck_checks_csv;
use plurirand_core::montecarlo::{
    convergence_experiment, derive_seed, expected_zero_measure, flat_vector, i_n_estimate, log_moment,
    norm_tail_probability, pair_vector, small_ball_probability, unit_vector, Check, ConvergenceSetup, TrialReport,
    ZeroStatsSpec,
};
use plurirand_core::orthobasis::{build_basis_qr, closed_form_basis, ClosedForm, OrthonormalBasis};
use plurirand_core::weighted_sets::{
    circle_sites, sites_from_file, torus_sites, weyl_sites, TruncationRule, UnboundedWeightSpec, WeightedSiteSet,
};
use plurirand_core::zeros::write_zeros_csv;
use plurirand_core::{fmt_f64, Error, Result};

use crate::config::{BasisKind, ExperimentConfig, ModelTag, Subcommand};

/// A finished experiment: its report and every file written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: TrialReport,
    pub files: Vec<PathBuf>,
}

fn oracle_model(model: ModelTag, dim: usize) -> OracleModel {
    match model {
        ModelTag::Circle => OracleModel::Circle,
        ModelTag::Torus => OracleModel::Torus { m: dim },
        ModelTag::Weyl => OracleModel::Weyl,
    }
}

fn quadrature_sites(cfg: &ExperimentConfig, model: ModelTag, n: u32) -> Result<WeightedSiteSet> {
    if let Some(path) = &cfg.basis.sites_file {
        return sites_from_file(path);
    }
    let default_nodes = 2 * n as usize + 2;
    match model {
        ModelTag::Circle => circle_sites(cfg.basis.nodes.unwrap_or(default_nodes)),
        ModelTag::Torus => torus_sites(cfg.dim_for(model), cfg.basis.nodes.unwrap_or(default_nodes)),
        ModelTag::Weyl => {
            let spec = match cfg.basis.truncation_radius {
                Some(r) => UnboundedWeightSpec::new(1.0, 1.0, TruncationRule::Fixed(r))?,
                None => UnboundedWeightSpec::weyl_default(),
            };
            let radial = cfg.basis.nodes.unwrap_or(default_nodes.max(60));
            let angular = cfg.basis.angular_nodes.unwrap_or(default_nodes);
            weyl_sites(n, radial, angular, &spec)
        }
    }
}

fn basis_for(cfg: &ExperimentConfig, model: ModelTag, n: u32) -> Result<OrthonormalBasis> {
    match cfg.basis.kind {
        BasisKind::ClosedForm => closed_form_basis(match model {
            ModelTag::Circle => ClosedForm::Circle { n },
            ModelTag::Torus => ClosedForm::Torus {
                m: cfg.dim_for(model),
                n,
            },
            ModelTag::Weyl => ClosedForm::Weyl { n },
        }),
        BasisKind::Quadrature => build_basis_qr(&quadrature_sites(cfg, model, n)?, n),
    }
}

fn grid_for(cfg: &ExperimentConfig, dim: usize) -> Result<EvaluationGrid> {
    let radii = cfg.grid.radii.clone().unwrap_or_else(|| DEFAULT_RADII.to_vec());
    if dim == 1 {
        ring_grid(&radii, cfg.grid.angles.unwrap_or(DEFAULT_ANGLES_1D))
    } else {
        product_ring_grid(dim, &radii, cfg.grid.angles.unwrap_or(DEFAULT_ANGLES_PRODUCT))
    }
}

fn distribution(cfg: &ExperimentConfig) -> Result<CoefficientDistribution> {
    let key = cfg
        .distribution
        .as_deref()
        .ok_or_else(|| Error::Contract("distribution required".into()))?;
    CoefficientDistribution::from_key(key)
}

fn model(cfg: &ExperimentConfig, cmd: Subcommand) -> Result<ModelTag> {
    cfg.model_for(cmd)
        .ok_or_else(|| Error::Contract("model required".into()))
}

fn seed(cfg: &ExperimentConfig) -> Result<u64> {
    cfg.seed.ok_or_else(|| Error::Contract("seed required".into()))
}

fn create(dir: &Path, name: String, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let f = File::create(&path)?;
    files.push(path);
    Ok(BufWriter::new(f))
}

/// Runs one experiment and writes its artifacts under `cfg.output_dir`.
/// The configuration must already have passed [`crate::config::validate`].
pub fn run_experiment(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<Outcome> {
    let out = cfg.output_dir();
    let mut files = Vec::new();
    let report = match cmd {
        Subcommand::Extremal => extremal(cfg, &out, &mut files)?,
        Subcommand::Zeros | Subcommand::Weyl => zeros(cmd, cfg, &out, &mut files)?,
        Subcommand::Expectation => expectation(cfg)?,
        Subcommand::LemmaCheck => lemma_check(cfg)?,
        Subcommand::Mapping => mapping(cfg)?,
    };
    files.extend(report.persist(&out)?);
    Ok(Outcome { report, files })
}

fn extremal(cfg: &ExperimentConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<TrialReport> {
    let cmd = Subcommand::Extremal;
    let (tag, seed) = (model(cfg, cmd)?, seed(cfg)?);
    let dim = cfg.dim_for(tag);
    let oracle = oracle_model(tag, dim);
    let grid = grid_for(cfg, dim)?;
    let mut report = TrialReport::new(cmd.name(), seed, &["degree", "sup_error", "mean_abs_error"]);
    let mut sups = Vec::new();
    for (i, &n) in cfg.degrees.iter().enumerate() {
        let basis = basis_for(cfg, tag, n)?;
        let values = evaluate_on_grid(
            |z| extremal_estimate(&basis, z).unwrap_or(f64::NAN),
            |z| oracle_extremal(oracle, z).unwrap_or(f64::NAN),
            &grid,
        );
        let err = grid_error_from_values(&values, &grid);
        write_grid_csv(create(out, format!("{}_n{n}_grid.csv", report.file_stem()), files)?, &grid, &values)?;
        report.push_row("extremal", i as u64, vec![f64::from(n), err.sup_error, err.mean_abs_error]);
        sups.push((n, err.sup_error));
    }
    for w in sups.windows(2) {
        report.checks.push(Check::at_most(
            format!("sup error change n={} to n={}", w[0].0, w[1].0),
            w[1].1 - w[0].1,
            0.0,
        ));
    }
    if let (Some(tol), Some(&(n, sup))) = (cfg.tolerance, sups.last()) {
        report.checks.push(Check::at_most(format!("sup error at n={n}"), sup, tol));
    }
    report.notes.push(format!("grid {}, {} points", grid.tag(), grid.len()));
    Ok(report)
}

fn zeros(cmd: Subcommand, cfg: &ExperimentConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<TrialReport> {
    let (tag, seed, dist) = (model(cfg, cmd)?, seed(cfg)?, distribution(cfg)?);
    let n = cfg.degrees[0];
    let trials = cfg.trials_for(cmd);
    let basis = Arc::new(basis_for(cfg, tag, n)?);
    let defaults = ZeroStatsSpec::default();
    let radii = cfg.zeros.radii.clone().unwrap_or_else(|| match tag {
        ModelTag::Weyl => vec![0.5, 0.7, 0.9],
        _ => defaults.radii.clone(),
    });
    let spec = ZeroStatsSpec {
        radii,
        sectors: cfg.zeros.sectors.unwrap_or(defaults.sectors),
        annulus: cfg.zeros.annulus.map(|[a, b]| (a, b)).unwrap_or(defaults.annulus),
        scale: 1.0,
    };
    let summary = expected_zero_measure(basis, &dist, trials, seed, &spec)?;
    let mut report = summary.to_report(cmd.name(), seed);

    write_zeros_csv(
        create(out, format!("{}_roots.csv", report.file_stem()), files)?,
        summary.zero_sets.iter().map(|(t, mu)| (*t, mu)),
    )?;

    match tag {
        ModelTag::Weyl => {
            use std::io::Write;
            let tol = cfg.zeros.cdf_tolerance.unwrap_or(0.03);
            let mut table = create(out, format!("{}_radial.csv", report.file_stem()), files)?;
            writeln!(table, "r,mean_cdf,stderr,target")?;
            for (r, agg) in &summary.radial_cdf {
                let target = r * r;
                writeln!(table, "{},{},{},{}", fmt_f64(*r), fmt_f64(agg.mean), fmt_f64(agg.stderr), fmt_f64(target))?;
                report
                    .checks
                    .push(Check::at_most(format!("radial cdf deviation at r={r}"), (agg.mean - target).abs(), tol));
            }
        }
        _ => {
            let min = cfg.zeros.annulus_min.unwrap_or(0.95);
            report.checks.push(Check::at_least(
                format!("mean annulus fraction ({}, {}]", spec.annulus.0, spec.annulus.1),
                summary.annulus.mean,
                min,
            ));
        }
    }
    if !dist.kind().is_real() {
        let expected = f64::from(n) / spec.sectors as f64;
        for (k, agg) in summary.sector_counts.iter().enumerate() {
            report.checks.push(Check::at_most(
                format!("sector {k} mean count deviation"),
                (agg.mean - expected).abs(),
                3.0 * expected.sqrt(),
            ));
        }
    }
    if summary.excluded > 0 {
        report.notes.push(format!("{} degenerate trials excluded", summary.excluded));
    }
    Ok(report)
}

/// `E log|a₁|` applies to `⟨a, u⟩` for `u = e₁`, and for every `u` when the
/// law is the complex Gaussian (which is unitarily invariant).
fn expectation(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let cmd = Subcommand::Expectation;
    let (seed, dist) = (seed(cfg)?, distribution(cfg)?);
    let trials = cfg.trials_for(cmd);
    let sizes = cfg.expectation.sizes.clone().unwrap_or_else(|| vec![10, 100, 1000]);
    let tol = cfg.expectation.tolerance.unwrap_or(0.01);
    let ratio_bound = cfg.expectation.ratio_bound.unwrap_or(1.0);
    let oracle = log_moment(&dist.kind());
    let invariant = dist.kind() == DistributionKind::ComplexGaussian;

    let mut report = TrialReport::new(cmd.name(), seed, &["count", "sum_log", "sum_sq_log", "clamped"]);
    let mut estimates = Vec::new();
    for (i, &size) in sizes.iter().enumerate() {
        let vectors = [
            ("e1", unit_vector(size, 0)),
            ("pair", pair_vector(size)),
            ("flat", flat_vector(size)),
        ];
        for (j, (name, u)) in vectors.iter().enumerate() {
            let sub = derive_seed(seed, (i * vectors.len() + j) as u64);
            let est = i_n_estimate(&dist, u, trials, sub)?;
            let group = format!("m{size}_{name}");
            for mut row in est.rows.clone() {
                row.group = group.clone();
                report.rows.push(row);
            }
            if invariant || *name == "e1" {
                report
                    .checks
                    .push(Check::at_most(format!("{group} deviation from E log|a1|"), (est.mean - oracle).abs(), tol));
            }
            report.checks.push(Check::at_most(
                format!("{group} |I|/log m"),
                est.mean.abs() / (size as f64).ln(),
                ratio_bound,
            ));
            report.checks.push(Check::at_most(
                format!("{group} clamped fraction"),
                est.clamped as f64 / est.trials as f64,
                0.01,
            ));
            estimates.push((group, est));
        }
    }
    if invariant {
        for a in 0..estimates.len() {
            for b in a + 1..estimates.len() {
                let (ga, ea) = &estimates[a];
                let (gb, eb) = &estimates[b];
                let joint = (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt();
                report.checks.push(Check::at_most(
                    format!("{ga} vs {gb} in joint standard errors"),
                    (ea.mean - eb.mean).abs() / joint,
                    3.0,
                ));
            }
        }
    }
    report.notes.push(format!("one-coefficient oracle E log|a1| = {}", fmt_f64(oracle)));
    Ok(report)
}

/// `P(Σ_{j<k} E_j ≥ x)` for unit exponentials: `e^{−x} Σ_{i<k} x^i/i!`.
fn gamma_tail(k: usize, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..k {
        term *= x / i as f64;
        sum += term;
    }
    (-x).exp() * sum
}

fn lemma_check(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let cmd = Subcommand::LemmaCheck;
    let (seed, dist) = (seed(cfg)?, distribution(cfg)?);
    let trials = cfg.trials_for(cmd);
    let dim = cfg.model_for(cmd).map(|m| cfg.dim_for(m)).unwrap_or(1);
    let mut report = TrialReport::new(cmd.name(), seed, &["count", "hits", "hits_k1", "hits_k2"]);

    let cert = dist.certificate();
    report
        .checks
        .push(Check::at_most("sup density", cert.sup_density, cert.declared_t));
    for &(r, mass) in &cert.tails {
        report
            .checks
            .push(Check::at_most(format!("tail mass at R={r}"), mass, cert.declared_t / (r * r)));
    }

    let size = cfg.lemma.small_ball_size.unwrap_or(1);
    let degrees = cfg.lemma.small_ball_degrees.clone().unwrap_or_else(|| (2..=8).collect());
    let w = unit_vector(size, 0);
    for &n in &degrees {
        let (est, rows) = small_ball_probability(&dist, n, &w, trials, derive_seed(seed, u64::from(n)))?;
        for mut row in rows {
            row.values.extend([0.0, 0.0]);
            report.rows.push(row);
        }
        report.checks.push(est.check(format!("small ball n={n} vs pi T/n^3 + 3 sigma")));
    }

    let m_n = cfg.lemma.norm_tail_size.unwrap_or(6);
    let n = cfg.lemma.norm_tail_degree.unwrap_or(2);
    let tail = norm_tail_probability(&dist, m_n, n, dim, trials, derive_seed(seed, 1_000 + u64::from(n)))?;
    report.rows.extend(tail.rows.iter().cloned());
    report.checks.push(tail.base.check(format!("norm tail n={n} vs T/n^2 + 3 sigma")));
    for (k, est) in &tail.higher {
        report
            .checks
            .push(est.check(format!("norm tail at n^{k} vs T(m_n/n^k)^2 + 3 sigma")));
    }
    if dist.kind() == DistributionKind::ComplexGaussian {
        let exact = gamma_tail(m_n, f64::from(n).powi(4));
        report
            .checks
            .push(tail.base.agreement_check("norm tail vs Gamma tail within 3 sigma", exact));
        report.notes.push(format!("Gamma tail oracle {}", fmt_f64(exact)));
    }
    Ok(report)
}

fn mapping(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let cmd = Subcommand::Mapping;
    let (tag, seed, dist) = (model(cfg, cmd)?, seed(cfg)?, distribution(cfg)?);
    let dim = cfg.dim_for(tag);
    let grid = grid_for(cfg, dim)?;
    let bases = cfg
        .degrees
        .iter()
        .map(|&n| basis_for(cfg, tag, n).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let setup = ConvergenceSetup {
        model: oracle_model(tag, dim),
        dist: &dist,
        bases,
        grid: &grid,
        trials: cfg.trials_for(cmd),
        components: cfg.components.unwrap_or(1),
        tolerance: cfg.tolerance.unwrap_or(0.1),
    };
    let summary = convergence_experiment(&setup, seed)?;
    let mut report = summary.to_report(cmd.name(), seed);
    for (w, n) in summary.median_mean_error.windows(2).zip(summary.degrees.windows(2)) {
        report.checks.push(Check::at_most(
            format!("median mean error change n={} to n={}", n[0], n[1]),
            w[1] - w[0],
            0.0,
        ));
    }
    if summary.degrees.len() >= 2 {
        report.checks.push(Check::at_least(
            "fraction of paired trials improving at the largest degree",
            summary.paired_improvement,
            cfg.paired_min.unwrap_or(0.8),
        ));
    }
    Ok(report)
}

/// Exit status re-derived from a persisted checks file.
pub fn recheck(dir: &Path, cmd: Subcommand, seed: u64) -> Result<i32> {
    let path = dir.join(format!("{}_seed{seed}_checks.csv", cmd.name()));
    Ok(if recheck_checks_csv(&path)? { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_tail_small_cases() {
        assert!((gamma_tail(1, 2.0) - (-2.0f64).exp()).abs() < 1e-16);
        assert!((gamma_tail(2, 1.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-16);
    }
}
