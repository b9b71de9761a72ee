//! Zeros of univariate polynomials and their normalized counting measures.
//!
//! Roots are the eigenvalues of the balanced companion matrix, refined by
//! Aberth–Ehrlich iteration on the coefficients themselves (the eigenvalues
//! alone lose the small roots when coefficients are strongly graded, as for
//! the Weyl basis at high degree). Coefficients
//! at the top end that fall below `1e-13 · max|c|` are deflated: the
//! measure keeps mass `1/n` per root for the nominal degree `n`, and the
//! number of roots lost to deflation is reported, never hidden.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::ensembles::RandomPolynomial;
use crate::error::{Error, Result};
use crate::fmt_f64;

/// Relative size below which a top coefficient is treated as zero.
pub const DEFLATION_THRESHOLD: f64 = 1e-13;

/// Degree cap for companion eigensolves in double precision.
pub const MAX_ROOT_DEGREE: usize = 200;

/// Points carrying mass `1/n` each, for a polynomial of nominal degree `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalZeroMeasure {
    points: Vec<Complex64>,
    degree: usize,
    deflated: usize,
}

impl EmpiricalZeroMeasure {
    pub fn new(points: Vec<Complex64>, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Contract("zero measure of a degree-0 polynomial".into()));
        }
        if points.len() > degree {
            return Err(Error::Contract(format!("{} points for degree {degree}", points.len())));
        }
        let deflated = degree - points.len();
        Ok(EmpiricalZeroMeasure {
            points,
            degree,
            deflated,
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Roots lost to leading-coefficient deflation (sent to infinity).
    pub fn deflated(&self) -> usize {
        self.deflated
    }

    pub fn mass_per_point(&self) -> f64 {
        1.0 / self.degree as f64
    }

    fn fraction(&self, pred: impl Fn(f64) -> bool) -> f64 {
        self.points.iter().filter(|z| pred(z.norm())).count() as f64 / self.degree as f64
    }
}

/// Monomial coefficients of `H` (which must be univariate).
pub fn onb_to_monomial(h: &RandomPolynomial) -> Result<Vec<Complex64>> {
    if h.basis().dim() != 1 {
        return Err(Error::Contract("root finding needs a univariate basis".into()));
    }
    Ok(h.monomial_coefficients().to_vec())
}

/// Parlett–Reinsch balancing with radix 2 (exact in floating point).
fn balance(a: &mut DMatrix<Complex64>) {
    const RADIX: f64 = 2.0;
    let size = a.nrows();
    let l1 = |z: Complex64| z.re.abs() + z.im.abs();
    loop {
        let mut done = true;
        for i in 0..size {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..size {
                if j != i {
                    c += l1(a[(j, i)]);
                    r += l1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..size {
                    a[(i, j)] *= inv;
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// `p(z)/p'(z)` and `|p(z)| / Σ|c_j||z|^j`. Outside the unit disk the
/// reversed polynomial is evaluated at `1/z` so nothing overflows.
fn newton_ratio(c: &[Complex64], z: Complex64) -> (Complex64, f64) {
    let d = c.len() - 1;
    let zero = Complex64::new(0.0, 0.0);
    if z.norm() <= 1.0 {
        let (mut p, mut dp, mut scale) = (zero, zero, 0.0);
        let r = z.norm();
        for ck in c.iter().rev() {
            dp = dp * z + p;
            p = p * z + ck;
            scale = scale * r + ck.norm();
        }
        (p / dp, p.norm() / scale)
    } else {
        let y = z.inv();
        let r = y.norm();
        let (mut q, mut dq, mut scale) = (zero, zero, 0.0);
        for ck in c.iter() {
            dq = dq * y + q;
            q = q * y + ck;
            scale = scale * r + ck.norm();
        }
        // p = z^d q(y), p' = z^{d-1} (d q − y q').
        (z * q / (q * d as f64 - y * dq), q.norm() / scale)
    }
}

/// Simultaneous Aberth–Ehrlich refinement; a root stops moving once its
/// backward error reaches rounding level or its correction is negligible.
fn aberth_refine(c: &[Complex64], z: &mut [Complex64]) {
    const MAX_SWEEPS: usize = 100;
    let d = z.len();
    let tol = 4.0 * d as f64 * f64::EPSILON;
    let mut done = vec![false; d];
    for _ in 0..MAX_SWEEPS {
        let mut moving = false;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (ratio, backward) = newton_ratio(c, z[i]);
            if backward <= tol || !ratio.is_finite() {
                done[i] = true;
                continue;
            }
            let repulsion: Complex64 = (0..d).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                done[i] = true;
                continue;
            }
            z[i] -= step;
            if step.norm() <= f64::EPSILON * z[i].norm() {
                done[i] = true;
            } else {
                moving = true;
            }
        }
        if !moving {
            break;
        }
    }
}

/// Roots of `Σ c_j z^j`, nominal degree `c.len() − 1`.
pub fn roots_1d(c: &[Complex64]) -> Result<EmpiricalZeroMeasure> {
    let nominal = c.len().saturating_sub(1);
    let max = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::DegeneratePolynomial("all coefficients vanish".into()));
    }
    let d = c
        .iter()
        .rposition(|z| z.norm() > DEFLATION_THRESHOLD * max)
        .unwrap_or(0);
    if d == 0 {
        return Err(Error::DegeneratePolynomial(format!(
            "only the constant coefficient exceeds {DEFLATION_THRESHOLD:e} of the largest"
        )));
    }
    if d > MAX_ROOT_DEGREE {
        return Err(Error::Contract(format!("degree {d} exceeds the root-finding cap {MAX_ROOT_DEGREE}")));
    }
    let lead = c[d];
    let points = if d == 1 {
        vec![-c[0] / lead]
    } else {
        let mut companion = DMatrix::<Complex64>::zeros(d, d);
        for i in 1..d {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..d {
            companion[(i, d - 1)] = -c[i] / lead;
        }
        balance(&mut companion);
        let schur = Schur::try_new(companion, f64::EPSILON, 1000 * d).ok_or(Error::EigenSolver(d))?;
        let (_, t) = schur.unpack();
        let mut z: Vec<Complex64> = (0..d).map(|i| t[(i, i)]).collect();
        aberth_refine(&c[..=d], &mut z);
        z
    };
    EmpiricalZeroMeasure::new(points, nominal)
}

pub fn scale_zeros(mu: &EmpiricalZeroMeasure, factor: f64) -> Result<EmpiricalZeroMeasure> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Contract(format!("scale factor {factor} must be positive")));
    }
    Ok(EmpiricalZeroMeasure {
        points: mu.points.iter().map(|z| z * factor).collect(),
        degree: mu.degree,
        deflated: mu.deflated,
    })
}

/// Mass of `{|z| ≤ r}`.
pub fn radial_cdf(mu: &EmpiricalZeroMeasure, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Contract(format!("radius {r} must be positive")));
    }
    Ok(mu.fraction(|a| a <= r))
}

/// Mass of `{r_lo < |z| ≤ r_hi}`; `r_hi` may be infinite.
pub fn annulus_fraction(mu: &EmpiricalZeroMeasure, r_lo: f64, r_hi: f64) -> Result<f64> {
    if !(r_lo >= 0.0 && r_hi > r_lo) {
        return Err(Error::Contract(format!("bad annulus ({r_lo}, {r_hi}]")));
    }
    Ok(mu.fraction(|a| a > r_lo && a <= r_hi))
}

/// Root counts by argument in `[2πk/S, 2π(k+1)/S)`. A point on a sector
/// edge (to within rounding of its argument) goes to the sector that
/// begins there.
pub fn angular_counts(mu: &EmpiricalZeroMeasure, sectors: usize) -> Result<Vec<usize>> {
    if sectors < 2 {
        return Err(Error::Contract("need at least two sectors".into()));
    }
    let mut counts = vec![0usize; sectors];
    for z in &mu.points {
        let mut theta = z.im.atan2(z.re);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        let x = theta * sectors as f64 / (2.0 * PI);
        let nearest = x.round();
        let k = if (x - nearest).abs() < 1e-9 { nearest } else { x.floor() };
        counts[(k as usize) % sectors] += 1;
    }
    Ok(counts)
}

/// `trial,re,im` rows, one per root.
pub fn write_zeros_csv<'a, W, I>(mut out: W, sets: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (u64, &'a EmpiricalZeroMeasure)>,
{
    writeln!(out, "trial,re,im")?;
    for (trial, mu) in sets {
        for z in mu.points() {
            writeln!(out, "{trial},{},{}", fmt_f64(z.re), fmt_f64(z.im))?;
        }
    }
    Ok(())
}
