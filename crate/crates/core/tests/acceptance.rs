//! Acceptance gate: one PASS/FAIL line per criterion, each with its pinned
//! tolerances and runtime budget. Oracles are computed here, independently
//! of the library code paths they check.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use plurirand_core::ensembles::{certify, CoefficientDistribution, DistributionKind, RadialDensity};
use plurirand_core::extremal::{
    default_grid, extremal_estimate, log_bergman_diag, oracle_extremal, product_ring_grid, ring_grid, OracleModel,
    DEFAULT_RADII,
};
use plurirand_core::montecarlo::{
    expected_zero_measure, flat_vector, i_n_estimate, norm_tail_probability, pair_vector, small_ball_probability,
    unit_vector, with_workers, InEstimate, TrialReport, ZeroStatsSpec,
};
use plurirand_core::orthobasis::{build_basis_qr, closed_form_basis, orthonormality_defect, ClosedForm};
use plurirand_core::weighted_sets::{circle_sites, torus_sites, weyl_sites, TruncationRule, UnboundedWeightSpec};
use plurirand_core::zeros::write_zeros_csv;
use plurirand_core::Error;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SEED: u64 = 20_240_601;

struct Verdict {
    passed: bool,
    detail: String,
}

fn line(id: u32, title: &str, budget_s: u64, run: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = run();
    let elapsed = start.elapsed();
    let in_time = elapsed <= Duration::from_secs(budget_s);
    let ok = v.passed && in_time;
    // Written to the raw handle so the line shows up even when the harness
    // captures test output.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{} criterion {id} ({title}): {} [{:.2} s, budget {budget_s} s]",
        if ok { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64()
    );
    ok
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `2j log r`, with the `j = 0` term kept finite at the origin.
fn log_r_power(j: u32, r: f64) -> f64 {
    if j == 0 {
        0.0
    } else {
        2.0 * f64::from(j) * r.ln()
    }
}

fn ln_factorial(j: u32) -> f64 {
    (1..=j).map(|k| f64::from(k).ln()).sum()
}

/// `(1/2n) log Σ_{j≤n} r^{2j}` for the unit circle with `Q = 0`.
fn circle_oracle_estimate(n: u32, r: f64) -> f64 {
    log_sum_exp((0..=n).map(|j| log_r_power(j, r))) / (2.0 * f64::from(n))
}

/// `(1/2n) log Σ_{j≤n} n^{j+1} r^{2j} / (π j!)` for `Q = |z|²/2` on ℂ.
fn weyl_oracle_estimate(n: u32, r: f64) -> f64 {
    let nf = f64::from(n);
    log_sum_exp((0..=n).map(|j| f64::from(j + 1) * nf.ln() + log_r_power(j, r) - PI.ln() - ln_factorial(j)))
        / (2.0 * nf)
}

fn weyl_extremal(r: f64) -> f64 {
    if r <= 1.0 {
        r * r / 2.0
    } else {
        r.ln() + 0.5
    }
}

/// Trapezoid rule on `[a, b]` with `steps` panels.
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|k| f(a + h * k as f64)).sum();
    h * (inner + 0.5 * (f(a) + f(b)))
}

fn criterion_1() -> Verdict {
    let basis = closed_form_basis(ClosedForm::Circle { n: 50 }).unwrap();
    let mut worst = [0.0f64; 2];
    let mut agree = 0.0f64;
    for (k, r) in [2.0, 1.0].into_iter().enumerate() {
        for a in 0..64 {
            let z = [Complex64::from_polar(r, 2.0 * PI * a as f64 / 64.0)];
            let est = extremal_estimate(&basis, &z).unwrap();
            agree = agree.max((est - circle_oracle_estimate(50, r)).abs());
            worst[k] = worst[k].max((est - r.ln().max(0.0)).abs());
        }
    }
    let exact_at_1 = 51f64.ln() / 100.0;
    Verdict {
        passed: worst[0] <= 0.015 && worst[1] <= 0.045 && agree <= 1e-12 && (worst[1] - exact_at_1).abs() <= 1e-12,
        detail: format!(
            "error at |z|=2 {:.6} <= 0.015, at |z|=1 {:.6} <= 0.045 (exact log(51)/100 = {exact_at_1:.6}), closed-sum agreement {agree:.1e}",
            worst[0], worst[1]
        ),
    }
}

fn torus_sup_error(n: u32) -> f64 {
    let sites = torus_sites(2, 72).unwrap();
    let basis = build_basis_qr(&sites, n).unwrap();
    let grid = product_ring_grid(2, &DEFAULT_RADII, 8).unwrap();
    grid.points()
        .map(|z| {
            let oracle = z.iter().map(|c| c.norm().ln().max(0.0)).fold(0.0, f64::max);
            (extremal_estimate(&basis, z).unwrap() - oracle).abs()
        })
        .fold(0.0, f64::max)
}

fn criterion_2() -> Verdict {
    let e10 = torus_sup_error(10);
    let e20 = torus_sup_error(20);
    Verdict {
        passed: e20 <= 0.15 && e20 < e10,
        detail: format!("quadrature basis sup error n=20 {e20:.6} <= 0.15, n=10 {e10:.6}"),
    }
}

fn criterion_3() -> Verdict {
    let radii = [0.5, 1.0, 2.0];
    let mut errs = [[0.0f64; 3]; 2];
    let mut agree = 0.0f64;
    for (i, n) in [50u32, 100].into_iter().enumerate() {
        let basis = closed_form_basis(ClosedForm::Weyl { n }).unwrap();
        for (k, &r) in radii.iter().enumerate() {
            for a in 0..8 {
                let z = [Complex64::from_polar(r, 2.0 * PI * a as f64 / 8.0)];
                let est = extremal_estimate(&basis, &z).unwrap();
                agree = agree.max((est - weyl_oracle_estimate(n, r)).abs());
                errs[i][k] = errs[i][k].max((est - weyl_extremal(r)).abs());
            }
        }
    }
    let decreasing = (0..3).all(|k| errs[1][k] < errs[0][k]);
    let worst50 = errs[0].iter().copied().fold(0.0, f64::max);
    let worst100 = errs[1].iter().copied().fold(0.0, f64::max);
    // Outside the disk Stirling gives the error as
    // (½ log n − ½ log 2π − log π + log(r²/(r²−1)))/(2n) + O(1/n²), which at
    // r = 2 still grows until n ≈ 95.
    let stirling = |n: f64| (0.5 * n.ln() - 0.5 * (2.0 * PI).ln() - PI.ln() + (4.0f64 / 3.0).ln()) / (2.0 * n);
    Verdict {
        passed: decreasing && worst100 <= 0.1 && agree <= 1e-12,
        detail: format!(
            "errors at r=0.5,1,2: n=50 {:.4?}, n=100 {:.4?}; decreasing at every radius {decreasing}, max at n=100 {worst100:.4} <= 0.1; INFO max over radii {worst50:.4} -> {worst100:.4}, Stirling prediction at r=2 {:.4} -> {:.4}",
            errs[0], errs[1], stirling(50.0), stirling(100.0)
        ),
    }
}

/// Expected fraction of Kac roots in `0.9 < |z| ≤ 1.1` at `n = 200`, from the
/// radial intensity `2r(1/(1−r²)² − (n+1)² r^{2n}/(1−r^{2n+2})²)` and the
/// inversion symmetry `z ↦ 1/z̄` of the ensemble.
fn kac_annulus_expectation(n: u32) -> f64 {
    let nf = f64::from(n);
    let density = |r: f64| {
        2.0 * r * (1.0 / (1.0 - r * r).powi(2) - (nf + 1.0).powi(2) * r.powf(2.0 * nf) / (1.0 - r.powf(2.0 * nf + 2.0)).powi(2))
    };
    let inside = |r: f64| trapezoid(density, 0.0, r, 200_000) / nf;
    1.0 - inside(0.9) - inside(1.0 / 1.1)
}

fn zero_spec() -> ZeroStatsSpec {
    ZeroStatsSpec {
        radii: vec![0.5, 0.7, 0.9],
        sectors: 12,
        annulus: (0.9, 1.1),
        scale: 1.0,
    }
}

fn circle_zero_run() -> (TrialReport, Vec<u8>, f64, Vec<f64>) {
    let basis = Arc::new(closed_form_basis(ClosedForm::Circle { n: 200 }).unwrap());
    let d = CoefficientDistribution::new(DistributionKind::ComplexGaussian).unwrap();
    let s = expected_zero_measure(basis, &d, 50, SEED, &zero_spec()).unwrap();
    let mut roots = Vec::new();
    write_zeros_csv(&mut roots, s.zero_sets.iter().map(|(t, mu)| (*t, mu))).unwrap();
    let sectors = s.sector_counts.iter().map(|a| a.mean).collect();
    (s.to_report("zeros", SEED), roots, s.annulus.mean, sectors)
}

fn criterion_4() -> Verdict {
    let (_, _, annulus, sectors) = circle_zero_run();
    let expected: f64 = 200.0 / 12.0;
    let band = 3.0 * expected.sqrt();
    let worst_sector = sectors.iter().map(|m| (m - expected).abs()).fold(0.0, f64::max);

    let basis = Arc::new(closed_form_basis(ClosedForm::Circle { n: 200 }).unwrap());
    let real = CoefficientDistribution::new(DistributionKind::RealGaussian).unwrap();
    let real_annulus = expected_zero_measure(basis, &real, 50, SEED, &zero_spec()).unwrap().annulus.mean;
    let exact = kac_annulus_expectation(200);
    Verdict {
        passed: annulus >= 0.95 && worst_sector <= band && real_annulus >= 0.95,
        detail: format!(
            "complex annulus {annulus:.4} >= 0.95 (exact expectation {exact:.5}), worst sector deviation {worst_sector:.3} <= {band:.3}, real annulus {real_annulus:.4} >= 0.95"
        ),
    }
}

fn criterion_5() -> Verdict {
    let basis = Arc::new(closed_form_basis(ClosedForm::Weyl { n: 200 }).unwrap());
    let d = CoefficientDistribution::new(DistributionKind::ComplexGaussian).unwrap();
    let s = expected_zero_measure(basis, &d, 50, SEED, &zero_spec()).unwrap();
    let devs: Vec<f64> = s.radial_cdf.iter().map(|(r, a)| (a.mean - r * r).abs()).collect();
    let means: Vec<f64> = s.radial_cdf.iter().map(|(_, a)| a.mean).collect();
    Verdict {
        passed: devs.iter().all(|&d| d <= 0.03) && s.excluded == 0,
        detail: format!("mean radial cdf at 0.5,0.7,0.9 = {means:.4?}, deviations {devs:.4?} <= 0.03"),
    }
}

/// `∫₀^∞ log r · 2r e^{−r²} dr` after `r² = e^t`: `½∫ t e^t e^{−e^t} dt`.
fn gaussian_log_oracle() -> f64 {
    0.5 * trapezoid(|t| t * (t - t.exp()).exp(), -60.0, 5.0, 650_000)
}

fn criterion_6() -> Verdict {
    let oracle = gaussian_log_oracle();
    let gauss = CoefficientDistribution::new(DistributionKind::ComplexGaussian).unwrap();
    let mut ests: Vec<(String, InEstimate)> = Vec::new();
    let mut tag = 0;
    for m in [10usize, 100, 1000] {
        for (name, u) in [("e1", unit_vector(m, 0)), ("pair", pair_vector(m)), ("flat", flat_vector(m))] {
            tag += 1;
            ests.push((format!("m{m}/{name}"), i_n_estimate(&gauss, &u, 1_000_000, SEED + tag).unwrap()));
        }
    }
    let worst_oracle = ests.iter().map(|(_, e)| (e.mean - oracle).abs()).fold(0.0, f64::max);
    let mut worst_pair = 0.0f64;
    for a in 0..ests.len() {
        for b in a + 1..ests.len() {
            let (x, y) = (&ests[a].1, &ests[b].1);
            let z = (x.mean - y.mean).abs() / (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
            worst_pair = worst_pair.max(z);
        }
    }
    let clamped: u64 = ests.iter().map(|(_, e)| e.clamped).sum();

    let disk = CoefficientDistribution::new(DistributionKind::UniformDisk(1.0)).unwrap();
    let disk_oracle = trapezoid(|r| if r > 0.0 { r.ln() * 2.0 * r } else { 0.0 }, 0.0, 1.0, 1_000_000);
    let disk_mean = i_n_estimate(&disk, &unit_vector(1, 0), 1_000_000, SEED + 100).unwrap().mean;

    // The constant in |Iₙ| ≤ C log n is unspecified; C = 1 is declared here.
    let heavy = CoefficientDistribution::new(DistributionKind::HeavyTail).unwrap();
    let mut ratios = Vec::new();
    for m in [10usize, 100, 1000] {
        for u in [unit_vector(m, 0), flat_vector(m)] {
            tag += 1;
            let e = i_n_estimate(&heavy, &u, 100_000, SEED + tag).unwrap();
            ratios.push(e.mean.abs() / (m as f64).ln());
        }
    }
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Verdict {
        passed: (oracle + EULER_GAMMA / 2.0).abs() < 1e-9
            && worst_oracle <= 0.01
            && worst_pair <= 3.0
            && clamped == 0
            && (disk_oracle + 0.5).abs() < 1e-9
            && (disk_mean - disk_oracle).abs() <= 0.01
            && worst_ratio <= 1.0,
        detail: format!(
            "gaussian oracle {oracle:.5}, worst |mean − oracle| {worst_oracle:.5} <= 0.01, worst pair {worst_pair:.2} joint SE <= 3, disk mean {disk_mean:.5} vs −0.5 ± 0.01, heavy-tail |I|/log n {ratios:.4?} <= 1"
        ),
    }
}

fn criterion_7() -> Verdict {
    let disk = CoefficientDistribution::new(DistributionKind::UniformDisk(1.0)).unwrap();
    let mut ok = true;
    let mut worst_exact: f64 = 0.0;
    for n in 2..=8u32 {
        let (est, _) = small_ball_probability(&disk, n, &unit_vector(1, 0), 1_000_000, SEED + u64::from(n)).unwrap();
        ok &= est.within_bound();
        let exact = f64::from(n).powi(-4);
        worst_exact = worst_exact.max((est.empirical - exact).abs() / est.margin.max(f64::MIN_POSITIVE));
    }
    // Gamma(6, 1) tail at 16 by quadrature of the density.
    let gamma_oracle = trapezoid(|x| x.powi(5) * (-x).exp() / 120.0, 16.0, 200.0, 2_000_000);
    let gauss = CoefficientDistribution::new(DistributionKind::ComplexGaussian).unwrap();
    let tail = norm_tail_probability(&gauss, 6, 2, 1, 1_000_000, SEED).unwrap();
    let agree = (tail.base.empirical - gamma_oracle).abs() <= tail.base.margin;
    Verdict {
        passed: ok && agree && tail.base.within_bound(),
        detail: format!(
            "small ball within πT/n³ + 3σ for n=2..8: {ok} (worst |emp − 1/n⁴| = {worst_exact:.2}σ/3), norm tail {:.6} vs Gamma oracle {gamma_oracle:.6} ± {:.6}",
            tail.base.empirical, tail.base.margin
        ),
    }
}

fn criterion_8() -> Verdict {
    let fine_weyl = UnboundedWeightSpec::new(1.0, 1.0, TruncationRule::Fixed(4.0)).unwrap();
    let cases = [
        (
            "circle n=10",
            build_basis_qr(&circle_sites(64).unwrap(), 10).unwrap(),
            circle_sites(257).unwrap(),
            closed_form_basis(ClosedForm::Circle { n: 10 }).unwrap(),
        ),
        (
            "torus n=5",
            build_basis_qr(&torus_sites(2, 16).unwrap(), 5).unwrap(),
            torus_sites(2, 41).unwrap(),
            closed_form_basis(ClosedForm::Torus { m: 2, n: 5 }).unwrap(),
        ),
        (
            "weyl n=10",
            build_basis_qr(&weyl_sites(10, 60, 32, &UnboundedWeightSpec::weyl_default()).unwrap(), 10).unwrap(),
            weyl_sites(10, 120, 45, &fine_weyl).unwrap(),
            closed_form_basis(ClosedForm::Weyl { n: 10 }).unwrap(),
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, quad, check_sites, closed) in &cases {
        let defect = orthonormality_defect(quad, check_sites).unwrap();
        let grid = default_grid(quad.dim()).unwrap();
        let rel = grid
            .points()
            .map(|z| (log_bergman_diag(quad, z).unwrap() - log_bergman_diag(closed, z).unwrap()).exp_m1().abs())
            .fold(0.0, f64::max);
        ok &= defect <= 1e-8 && rel <= 1e-6;
        parts.push(format!("{name}: max|G−I| {defect:.1e}, kernel rel diff {rel:.1e}"));
    }
    Verdict {
        passed: ok,
        detail: parts.join("; "),
    }
}

struct SlowTail;

impl RadialDensity for SlowTail {
    fn name(&self) -> String {
        "cauchy-type".into()
    }
    fn density(&self, r: f64) -> f64 {
        // P(|a| ≥ R) = (1 + R²)^{−1/2} ~ 1/R.
        1.0 / (2.0 * PI * (1.0 + r * r).powf(1.5))
    }
    fn declared_t(&self) -> f64 {
        1.0
    }
}

fn criterion_9() -> Verdict {
    let shipped = [
        DistributionKind::ComplexGaussian,
        DistributionKind::RealGaussian,
        DistributionKind::UniformDisk(1.0),
        DistributionKind::HeavyTail,
    ];
    let passing = shipped.iter().filter(|k| certify(*k).is_ok()).count();
    let rejected = match certify(&SlowTail) {
        Err(Error::Certification { bound, radius, .. }) => Some(format!("{bound} at R={radius}")),
        _ => None,
    };
    Verdict {
        passed: passing == 4 && rejected.as_ref().is_some_and(|b| b.contains("tail")),
        detail: format!("{passing}/4 shipped laws certified; slow tail rejected: {rejected:?}"),
    }
}

fn csv_bytes(report: &TrialReport) -> Vec<u8> {
    let mut buf = Vec::new();
    report.write_rows_csv(&mut buf).unwrap();
    report.write_checks_csv(&mut buf).unwrap();
    buf
}

fn determinism_run() -> Vec<u8> {
    let (report, roots, _, _) = circle_zero_run();
    let mut bytes = csv_bytes(&report);
    bytes.extend(roots);
    let gauss = CoefficientDistribution::new(DistributionKind::ComplexGaussian).unwrap();
    let est = i_n_estimate(&gauss, &flat_vector(100), 200_000, SEED).unwrap();
    let mut r = TrialReport::new("expectation", SEED, &["count", "sum_log", "sum_sq_log", "clamped"]);
    r.rows = est.rows;
    bytes.extend(csv_bytes(&r));
    bytes
}

fn criterion_10() -> Verdict {
    let runs: Vec<Vec<u8>> = [1usize, 4, 8]
        .into_iter()
        .map(|w| with_workers(Some(w), determinism_run).unwrap())
        .collect();
    let same = runs.iter().all(|r| r == &runs[0]);
    Verdict {
        passed: same && !runs[0].is_empty(),
        detail: format!("CSV bodies ({} bytes) identical under 1, 4, 8 workers: {same}", runs[0].len()),
    }
}

#[test]
fn acceptance() {
    let results = [
        line(1, "circle extremal convergence", 1, criterion_1),
        line(2, "torus extremal convergence", 30, criterion_2),
        line(3, "Weyl extremal convergence", 10, criterion_3),
        line(4, "random zeros on the circle", 60, criterion_4),
        line(5, "Weyl zeros fill the unit disk", 90, criterion_5),
        line(6, "log expectation of projections", 120, criterion_6),
        line(7, "small-ball and norm-tail bounds", 120, criterion_7),
        line(8, "orthonormality and kernel agreement", 10, criterion_8),
        line(9, "distribution certification", 5, criterion_9),
        line(10, "determinism across worker counts", 180, criterion_10),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn oracle_sanity() {
    assert!((circle_oracle_estimate(10, 2.0) - 1398101f64.ln() / 20.0).abs() < 1e-13);
    assert!((weyl_oracle_estimate(1, 0.0) - (1.0 / PI).ln() / 2.0).abs() < 1e-13);
    assert!((gaussian_log_oracle() + EULER_GAMMA / 2.0).abs() < 1e-9);
    let g = kac_annulus_expectation(200);
    assert!((g - 0.954_874_686_7).abs() < 1e-6, "{g}");
    let grid = ring_grid(&[3.0], 4).unwrap();
    for z in grid.points() {
        assert_eq!(oracle_extremal(OracleModel::Weyl, z).unwrap(), weyl_extremal(3.0));
        assert_eq!(oracle_extremal(OracleModel::Circle, &[c(3.0)]).unwrap(), 3f64.ln());
    }
}
