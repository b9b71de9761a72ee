//! Discrete stand-ins for a compact set `K` (or an unbounded `Y`) together
//! with a weight `Q` and a measure `τ`.
//!
//! Every integral `∫ f dτ` in the library is the weighted sum
//! `Σ_i w_i f(z_i)` over a [`WeightedSiteSet`]. The continuum measure is
//! assumed to have the Bernstein–Markov property; nothing here checks it.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

#[derive(Debug, Clone)]
pub struct WeightedSiteSet {
    m: usize,
    /// Row-major `len × m` coordinates.
    coords: Vec<Complex64>,
    weights: Vec<f64>,
    q_values: Vec<f64>,
    label: String,
}

impl WeightedSiteSet {
    pub fn new(
        m: usize,
        coords: Vec<Complex64>,
        weights: Vec<f64>,
        q_values: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Contract("site dimension must be at least 1".into()));
        }
        if weights.is_empty() {
            return Err(Error::EmptySiteSet);
        }
        if coords.len() != weights.len() * m || q_values.len() != weights.len() {
            return Err(Error::Contract(format!(
                "{} coordinates, {} weights, {} weight values for dimension {m}",
                coords.len(),
                weights.len(),
                q_values.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Contract(format!("site {i} has weight {}", weights[i])));
        }
        if let Some(i) = q_values.iter().position(|q| !q.is_finite()) {
            return Err(Error::Contract(format!("site {i} has non-finite Q")));
        }
        if coords.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Contract("site coordinates must be finite".into()));
        }
        Ok(WeightedSiteSet {
            m,
            coords,
            weights,
            q_values,
            label: label.into(),
        })
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

    pub fn q_values(&self) -> &[f64] {
        &self.q_values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    /// `Σ_i w_i e^{-2n q_i} f(z_i) conj(g(z_i))`.
    pub fn inner_product<F, G>(&self, n: u32, f: F, g: G) -> Complex64
    where
        F: Fn(&[Complex64]) -> Complex64,
        G: Fn(&[Complex64]) -> Complex64,
    {
        self.points()
            .zip(self.weights.iter().zip(&self.q_values))
            .map(|(z, (w, q))| f(z) * g(z).conj() * (w * (-2.0 * f64::from(n) * q).exp()))
            .sum()
    }
}

/// `N` equally spaced points on the unit circle with mass `1/N` each, `Q ≡ 0`.
pub fn circle_sites(count: usize) -> Result<WeightedSiteSet> {
    torus_sites(1, count)
}

/// Product of `m` copies of [`circle_sites`], mass `1/N^m` per point.
pub fn torus_sites(m: usize, count: usize) -> Result<WeightedSiteSet> {
    if count == 0 {
        return Err(Error::Contract("circle needs at least one site".into()));
    }
    let total = u32::try_from(m)
        .ok()
        .and_then(|e| count.checked_pow(e))
        .and_then(|t| t.checked_mul(m).map(|_| t))
        .ok_or_else(|| Error::SizeOverflow(format!("{count}^{m} torus sites")))?;
    let roots: Vec<Complex64> = (0..count)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / count as f64))
        .collect();
    let mut coords = Vec::with_capacity(total * m);
    for flat in 0..total {
        // Last coordinate varies fastest.
        let mut rest = flat;
        let mut point = vec![Complex64::new(0.0, 0.0); m];
        for slot in point.iter_mut().rev() {
            *slot = roots[rest % count];
            rest /= count;
        }
        coords.extend(point);
    }
    let w = 1.0 / total as f64;
    let label = if m == 1 {
        format!("circle({count})")
    } else {
        format!("torus({m},{count})")
    };
    WeightedSiteSet::new(m, coords, vec![w; total], vec![0.0; total], label)
}

/// Maps a degree `n` to the truncation radius `R(n)` of an unbounded set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationRule {
    Fixed(f64),
    /// `R(n) = base + slope · ln(1 + n)`.
    LogGrowth { base: f64, slope: f64 },
}

impl TruncationRule {
    pub fn radius(&self, n: u32) -> f64 {
        match *self {
            TruncationRule::Fixed(r) => r,
            TruncationRule::LogGrowth { base, slope } => base + slope * f64::from(n).ln_1p(),
        }
    }
}

/// Super-logarithmic weight data: margin `b`, moment exponent `a`, and the
/// radius at which the unbounded set is cut off for degree `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnboundedWeightSpec {
    b: f64,
    a: f64,
    truncation: TruncationRule,
}

impl UnboundedWeightSpec {
    pub fn new(b: f64, a: f64, truncation: TruncationRule) -> Result<Self> {
        if !(b > 0.0 && a > 0.0) {
            return Err(Error::Contract(format!("need b > 0 and a > 0, got b={b}, a={a}")));
        }
        if let TruncationRule::LogGrowth { slope, .. } = truncation {
            if slope < 0.0 {
                return Err(Error::Contract("truncation radius must be non-decreasing in n".into()));
            }
        }
        Ok(UnboundedWeightSpec { b, a, truncation })
    }

    /// `Q = |z|²/2` cut off at `R = 3`, which contains the support `|z| ≤ 1`
    /// of the weighted equilibrium measure with a wide margin.
    pub fn weyl_default() -> Self {
        UnboundedWeightSpec {
            b: 1.0,
            a: 1.0,
            truncation: TruncationRule::Fixed(3.0),
        }
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn radius(&self, n: u32) -> f64 {
        self.truncation.radius(n)
    }
}

/// Polar rule for Lebesgue measure on `r_in ≤ |z| ≤ r_out`: Gauss–Legendre
/// in `s = r²` (where `dm₂ = ½ ds dθ`) times the uniform rule in angle.
pub fn polar_sites<Q>(
    r_in: f64,
    r_out: f64,
    nodes_radial: usize,
    nodes_angular: usize,
    q: Q,
    label: impl Into<String>,
) -> Result<WeightedSiteSet>
where
    Q: Fn(Complex64) -> f64,
{
    if !(r_in >= 0.0 && r_out > r_in && r_out.is_finite()) {
        return Err(Error::Contract(format!("bad annulus radii [{r_in}, {r_out}]")));
    }
    if nodes_radial == 0 || nodes_angular == 0 {
        return Err(Error::Contract("polar rule needs nodes in both directions".into()));
    }
    let (s, ws) = gauss_legendre_on(nodes_radial, r_in * r_in, r_out * r_out);
    let dtheta = 2.0 * PI / nodes_angular as f64;
    let total = nodes_radial * nodes_angular;
    let mut coords = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut q_values = Vec::with_capacity(total);
    for (s, w) in s.iter().zip(&ws) {
        let r = s.sqrt();
        for l in 0..nodes_angular {
            let z = Complex64::from_polar(r, dtheta * l as f64);
            coords.push(z);
            weights.push(0.5 * w * dtheta);
            q_values.push(q(z));
        }
    }
    WeightedSiteSet::new(1, coords, weights, q_values, label)
}

/// Lebesgue measure on the disk `|z| ≤ R(n)` with `Q(z) = |z|²/2`. Weights
/// are not normalized; their sum approximates `πR(n)²`.
pub fn weyl_sites(
    n: u32,
    nodes_radial: usize,
    nodes_angular: usize,
    spec: &UnboundedWeightSpec,
) -> Result<WeightedSiteSet> {
    let r = spec.radius(n);
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Contract(format!("truncation radius R({n}) = {r} must be positive")));
    }
    polar_sites(
        0.0,
        r,
        nodes_radial,
        nodes_angular,
        |z| 0.5 * z.norm_sqr(),
        format!("weyl(R={r})"),
    )
}

/// Reads a site set from CSV. The header names columns `re`/`im` (one
/// variable) or `re_1..re_m`/`im_1..im_m` in any order, plus `weight` and
/// `q`.
pub fn sites_from_file(path: impl AsRef<Path>) -> Result<WeightedSiteSet> {
    let path = path.as_ref();
    let err = |line: u64, message: String| Error::SiteFile {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptySiteSet);
    }
    let col = |name: &str| header.iter().position(|h| h == name);
    let weight_col = col("weight").ok_or_else(|| err(1, "missing `weight` column".into()))?;
    let q_col = col("q").ok_or_else(|| err(1, "missing `q` column".into()))?;
    let mut coord_cols = Vec::new();
    if let (Some(re), Some(im)) = (col("re"), col("im")) {
        coord_cols.push((re, im));
    } else {
        for j in 1.. {
            match (col(&format!("re_{j}")), col(&format!("im_{j}"))) {
                (Some(re), Some(im)) => coord_cols.push((re, im)),
                (None, None) => break,
                _ => return Err(err(1, format!("unpaired re_{j}/im_{j} columns"))),
            }
        }
    }
    if coord_cols.is_empty() {
        return Err(err(1, "no coordinate columns (`re,im` or `re_1,im_1,...`)".into()));
    }
    let m = coord_cols.len();

    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut q_values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(err(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let field = |i: usize| -> Result<f64> {
            let v: f64 = record[i]
                .parse()
                .map_err(|_| err(line, format!("cannot parse `{}` as a number", &record[i])))?;
            if !v.is_finite() {
                return Err(err(line, format!("non-finite value `{}`", &record[i])));
            }
            Ok(v)
        };
        for &(re, im) in &coord_cols {
            coords.push(Complex64::new(field(re)?, field(im)?));
        }
        let w = field(weight_col)?;
        if w <= 0.0 {
            return Err(err(line, format!("non-positive weight {w}")));
        }
        weights.push(w);
        q_values.push(field(q_col)?);
    }
    if weights.is_empty() {
        return Err(Error::EmptySiteSet);
    }
    let label = path
        .file_stem()
        .map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned());
    WeightedSiteSet::new(m, coords, weights, q_values, label)
}
