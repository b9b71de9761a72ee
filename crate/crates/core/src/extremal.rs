//! Bergman kernel diagonal `Sₙ(z,z) = Σ |p_ν(z)|²` and the extremal
//! function estimate `(1/2n) log Sₙ(z,z)`, with closed-form oracles for the
//! circle, torus and Weyl models and error metrics over evaluation grids.

use std::collections::HashSet;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::orthobasis::{eval_basis_log, OrthonormalBasis};
use crate::polycore::log_sum_exp;

/// Radii of the default ring grids: inside, on, and outside the unit circle.
pub const DEFAULT_RADII: [f64; 7] = [0.25, 0.5, 0.9, 1.0, 1.1, 2.0, 4.0];
pub const DEFAULT_ANGLES_1D: usize = 64;
pub const DEFAULT_ANGLES_PRODUCT: usize = 8;

/// Finite set of distinct evaluation points with area weights summing to 1.
#[derive(Debug, Clone)]
pub struct EvaluationGrid {
    m: usize,
    coords: Vec<Complex64>,
    weights: Vec<f64>,
    tag: String,
}

impl EvaluationGrid {
    pub fn new(m: usize, coords: Vec<Complex64>, weights: Vec<f64>, tag: impl Into<String>) -> Result<Self> {
        if m == 0 || coords.is_empty() {
            return Err(Error::Contract("evaluation grid must be nonempty".into()));
        }
        if coords.len() != weights.len() * m {
            return Err(Error::Contract("grid weights do not match point count".into()));
        }
        let mut seen = HashSet::with_capacity(weights.len());
        for p in coords.chunks_exact(m) {
            let key: Vec<(u64, u64)> = p.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect();
            if !seen.insert(key) {
                return Err(Error::Contract(format!("duplicate grid point {p:?}")));
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Contract("grid weights must be non-negative with positive sum".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(EvaluationGrid {
            m,
            coords,
            weights,
            tag: tag.into(),
        })
    }

    /// Unweighted grid (every point counts equally).
    pub fn uniform(m: usize, coords: Vec<Complex64>, tag: impl Into<String>) -> Result<Self> {
        let count = coords.len() / m.max(1);
        Self::new(m, coords, vec![1.0; count], tag)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    pub fn points(&self) -> impl Iterator<Item = &[Complex64]> {
        self.coords.chunks_exact(self.m)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }
}

/// Polar cell areas `π(outer² − inner²)/angles` around each radius, with
/// cell edges at the midpoints between neighbouring radii.
fn ring_areas(radii: &[f64], angles: usize) -> Vec<f64> {
    let k = radii.len();
    (0..k)
        .map(|i| {
            let inner = if i == 0 { 0.0 } else { 0.5 * (radii[i - 1] + radii[i]) };
            let outer = if i + 1 < k {
                0.5 * (radii[i] + radii[i + 1])
            } else if k > 1 {
                radii[i] + 0.5 * (radii[i] - radii[i - 1])
            } else {
                2.0 * radii[i]
            };
            std::f64::consts::PI * (outer * outer - inner * inner) / angles as f64
        })
        .collect()
}

fn ring_points(radii: &[f64], angles: usize) -> Result<Vec<(Complex64, f64)>> {
    if radii.is_empty() || angles == 0 {
        return Err(Error::Contract("ring grid needs radii and angles".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::Contract("ring radii must be positive and increasing".into()));
    }
    let areas = ring_areas(radii, angles);
    let step = 2.0 * std::f64::consts::PI / angles as f64;
    Ok(radii
        .iter()
        .zip(&areas)
        .flat_map(|(&r, &a)| (0..angles).map(move |l| (Complex64::from_polar(r, step * l as f64), a)))
        .collect())
}

/// Rings `|z| = r` sampled at `angles` equally spaced arguments.
pub fn ring_grid(radii: &[f64], angles: usize) -> Result<EvaluationGrid> {
    let pts = ring_points(radii, angles)?;
    let (coords, weights) = pts.into_iter().unzip();
    EvaluationGrid::new(1, coords, weights, format!("ring({} radii x {angles})", radii.len()))
}

/// `m`-fold product of a ring grid.
pub fn product_ring_grid(m: usize, radii: &[f64], angles: usize) -> Result<EvaluationGrid> {
    let ring = ring_points(radii, angles)?;
    let total = u32::try_from(m)
        .ok()
        .and_then(|e| ring.len().checked_pow(e))
        .ok_or_else(|| Error::SizeOverflow(format!("{}^{m} grid points", ring.len())))?;
    let mut coords = Vec::with_capacity(total * m);
    let mut weights = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let mut point = vec![Complex64::new(0.0, 0.0); m];
        let mut w = 1.0;
        for slot in point.iter_mut().rev() {
            let (z, a) = ring[rest % ring.len()];
            *slot = z;
            w *= a;
            rest /= ring.len();
        }
        coords.extend(point);
        weights.push(w);
    }
    EvaluationGrid::new(
        m,
        coords,
        weights,
        format!("product-ring(m={m}, {} radii x {angles})", radii.len()),
    )
}

/// The default grid: 64 angles for one variable, 8 per coordinate otherwise.
pub fn default_grid(m: usize) -> Result<EvaluationGrid> {
    if m == 1 {
        ring_grid(&DEFAULT_RADII, DEFAULT_ANGLES_1D)
    } else {
        product_ring_grid(m, &DEFAULT_RADII, DEFAULT_ANGLES_PRODUCT)
    }
}

/// `log Sₙ(z,z)`; finite because the constant basis element never vanishes.
pub fn log_bergman_diag(basis: &OrthonormalBasis, z: &[Complex64]) -> Result<f64> {
    let values = eval_basis_log(basis, z)?;
    let doubled: Vec<f64> = values.log_abs.iter().map(|l| 2.0 * l).collect();
    Ok(log_sum_exp(&doubled))
}

/// `(1/2n) log Sₙ(z,z)`, which tends to `V_{K,Q}(z)`.
pub fn extremal_estimate(basis: &OrthonormalBasis, z: &[Complex64]) -> Result<f64> {
    let n = basis.degree();
    if n == 0 {
        return Err(Error::Contract("extremal estimate needs degree n ≥ 1".into()));
    }
    Ok(log_bergman_diag(basis, z)? / (2.0 * f64::from(n)))
}

/// Models whose extremal function is known in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleModel {
    Circle,
    Torus { m: usize },
    Weyl,
}

impl OracleModel {
    pub fn dim(&self) -> usize {
        match *self {
            OracleModel::Torus { m } => m,
            _ => 1,
        }
    }
}

fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

/// `V_{K,Q}(z)` for the closed-form models:
/// circle `log⁺|z|`, torus `max_j log⁺|z_j|`, and for `Q = |z|²/2` on ℂ
/// `|z|²/2` on the unit disk and `log|z| + ½` outside.
pub fn oracle_extremal(model: OracleModel, z: &[Complex64]) -> Result<f64> {
    if z.len() != model.dim() {
        return Err(Error::Contract(format!(
            "{model:?} expects {} coordinates, got {}",
            model.dim(),
            z.len()
        )));
    }
    Ok(match model {
        OracleModel::Circle => log_plus(z[0].norm()),
        OracleModel::Torus { .. } => z.iter().map(|c| log_plus(c.norm())).fold(0.0, f64::max),
        OracleModel::Weyl => {
            let r = z[0].norm();
            if r <= 1.0 {
                0.5 * r * r
            } else {
                r.ln() + 0.5
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridError {
    pub sup_error: f64,
    /// Area-weighted mean of `|estimate − oracle|`.
    pub mean_abs_error: f64,
}

/// `(estimate, oracle)` at every grid point, in grid order.
pub fn evaluate_on_grid<E, O>(estimate: E, oracle: O, grid: &EvaluationGrid) -> Vec<(f64, f64)>
where
    E: Fn(&[Complex64]) -> f64 + Sync,
    O: Fn(&[Complex64]) -> f64 + Sync,
{
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let z = grid.point(i);
            (estimate(z), oracle(z))
        })
        .collect()
}

/// Sup and weighted mean error from already evaluated pairs; sums run in
/// grid order so the result does not depend on scheduling.
pub fn grid_error_from_values(values: &[(f64, f64)], grid: &EvaluationGrid) -> GridError {
    let mut sup: f64 = 0.0;
    let mut mean = 0.0;
    for ((e, o), w) in values.iter().zip(grid.weights()) {
        let d = (e - o).abs();
        sup = sup.max(d);
        mean += w * d;
    }
    GridError {
        sup_error: sup,
        mean_abs_error: mean,
    }
}

pub fn grid_error<E, O>(estimate: E, oracle: O, grid: &EvaluationGrid) -> GridError
where
    E: Fn(&[Complex64]) -> f64 + Sync,
    O: Fn(&[Complex64]) -> f64 + Sync,
{
    grid_error_from_values(&evaluate_on_grid(estimate, oracle, grid), grid)
}

/// Header `re,im,...` (or `re_1,im_1,re_2,im_2,...`) followed by
/// `estimate,oracle,abs_error`.
pub fn write_grid_csv<W: Write>(mut out: W, grid: &EvaluationGrid, values: &[(f64, f64)]) -> Result<()> {
    let mut header: Vec<String> = if grid.dim() == 1 {
        vec!["re".into(), "im".into()]
    } else {
        (1..=grid.dim())
            .flat_map(|j| [format!("re_{j}"), format!("im_{j}")])
            .collect()
    };
    header.extend(["estimate", "oracle", "abs_error"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for (z, (e, o)) in grid.points().zip(values) {
        let mut row: Vec<String> = z.iter().flat_map(|c| [fmt_f64(c.re), fmt_f64(c.im)]).collect();
        row.extend([fmt_f64(*e), fmt_f64(*o), fmt_f64((e - o).abs())]);
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthobasis::{closed_form_basis, ClosedForm};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn circle_bergman_geometric_series() {
        let b = closed_form_basis(ClosedForm::Circle { n: 10 }).unwrap();
        let v = log_bergman_diag(&b, &[c(2.0)]).unwrap();
        // Σ_{j≤10} 4^j = (4^11 − 1)/3 = 1398101.
        assert!((v - 1398101f64.ln()).abs() < 1e-12);
        assert!((v - 14.15063).abs() < 1e-5);
        let on = log_bergman_diag(&b, &[Complex64::from_polar(1.0, 0.3)]).unwrap();
        assert!((on - 11f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn bergman_dominates_constant_term() {
        let b = closed_form_basis(ClosedForm::Weyl { n: 5 }).unwrap();
        for r in [0.0, 0.3, 1.0, 7.0] {
            let v = log_bergman_diag(&b, &[c(r)]).unwrap();
            let p0 = crate::orthobasis::eval_basis_log(&b, &[c(r)]).unwrap().log_abs[0];
            assert!(v.is_finite() && v >= 2.0 * p0);
        }
    }

    #[test]
    fn estimate_examples() {
        let b10 = closed_form_basis(ClosedForm::Circle { n: 10 }).unwrap();
        let e = extremal_estimate(&b10, &[c(2.0)]).unwrap();
        assert!((e - 1398101f64.ln() / 20.0).abs() < 1e-13);
        assert!((e - 0.70754).abs() < 1e-5);

        let b50 = closed_form_basis(ClosedForm::Circle { n: 50 }).unwrap();
        let e = extremal_estimate(&b50, &[c(1.0)]).unwrap();
        assert!((e - 51f64.ln() / 100.0).abs() < 1e-14);
        assert!((e - 0.03932).abs() < 1e-5);

        let t = closed_form_basis(ClosedForm::Torus { m: 2, n: 60 }).unwrap();
        let e = extremal_estimate(&t, &[c(2.0), c(3.0)]).unwrap();
        assert!((e - 3f64.ln()).abs() < 0.05);

        let b0 = closed_form_basis(ClosedForm::Circle { n: 0 }).unwrap();
        assert!(extremal_estimate(&b0, &[c(1.0)]).is_err());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_extremal(OracleModel::Torus { m: 2 }, &[c(0.5), c(0.5)]).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((oracle_extremal(OracleModel::Circle, &[c(e)]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(oracle_extremal(OracleModel::Weyl, &[c(1.0)]).unwrap(), 0.5);
        let below = oracle_extremal(OracleModel::Weyl, &[c(1.0 - 1e-12)]).unwrap();
        let above = oracle_extremal(OracleModel::Weyl, &[c(1.0 + 1e-12)]).unwrap();
        assert!((below - above).abs() < 1e-11);
        assert!(oracle_extremal(OracleModel::Circle, &[c(1.0), c(1.0)]).is_err());
    }

    #[test]
    fn grid_error_basics() {
        let g = default_grid(1).unwrap();
        let same = grid_error(|z| z[0].norm(), |z| z[0].norm(), &g);
        assert_eq!(same, GridError { sup_error: 0.0, mean_abs_error: 0.0 });
        let off = grid_error(|z| z[0].norm() + 0.125, |z| z[0].norm(), &g);
        assert!((off.sup_error - 0.125).abs() < 1e-15);
        assert!((off.mean_abs_error - 0.125).abs() < 1e-14);
    }

    #[test]
    fn circle_error_on_ring_two() {
        let n = 50;
        let b = closed_form_basis(ClosedForm::Circle { n }).unwrap();
        let g = ring_grid(&[2.0], 64).unwrap();
        let err = grid_error(
            |z| extremal_estimate(&b, z).unwrap(),
            |z| oracle_extremal(OracleModel::Circle, z).unwrap(),
            &g,
        );
        // (1/2n) log((4^{n+1} − 1)/3) − log 2.
        let nf = f64::from(n);
        let exact = ((nf + 1.0) * 4f64.ln() - 3f64.ln()) / (2.0 * nf) - 2f64.ln();
        assert!((err.sup_error - exact).abs() < 1e-12, "{} vs {exact}", err.sup_error);
        assert!(err.sup_error <= 2f64.ln() / 50.0);
    }

    #[test]
    fn grids_are_validated() {
        assert!(ring_grid(&[], 4).is_err());
        assert!(ring_grid(&[1.0, 0.5], 4).is_err());
        assert!(EvaluationGrid::uniform(1, vec![c(1.0), c(1.0)], "dup").is_err());
        let g = product_ring_grid(2, &[0.5, 2.0], 3).unwrap();
        assert_eq!(g.len(), 36);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grid_csv_columns() {
        let g = ring_grid(&[1.0], 2).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &g, &[(1.0, 0.5), (0.0, 0.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("re,im,estimate,oracle,abs_error"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 5);
        assert_eq!(first[4], "5.0000000000000000e-1");
    }
}
