//! Orthonormal polynomial bases of degree `≤ n` in `L²(e^{-2nQ} τ)`.
//!
//! A basis is stored as a lower-triangular change of basis from the
//! graded-lex monomials: row `ν` of `transform` holds the monomial
//! coefficients of `p_ν`. Quadrature bases come from Gram–Schmidt on the
//! weighted Vandermonde matrix (classical Gram–Schmidt with one full
//! re-orthogonalization pass); the circle, torus and Weyl cases also have
//! closed forms.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::polycore::{enumerate_multiindices, log_sum_terms, split_log, LogMonomials, MultiIndexOrder};
use crate::weighted_sets::WeightedSiteSet;

/// Smallest admissible `λ_min / λ_max` of the weighted Gram matrix.
pub const GRAM_CONDITION_FLOOR: f64 = 1e-13;

/// Degree cap for quadrature bases built on arbitrary site sets.
pub const GENERAL_SET_DEGREE_CAP: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    /// Monomials on the unit circle with `dθ/2π`.
    Circle { n: u32 },
    /// Monomials on `(S¹)^m` with the product measure.
    Torus { m: usize, n: u32 },
    /// Lebesgue measure on ℂ with `Q = |z|²/2`:
    /// `p_j = z^j √(n^{j+1} / (π j!))`.
    Weyl { n: u32 },
}

impl ClosedForm {
    pub fn degree(&self) -> u32 {
        match *self {
            ClosedForm::Circle { n } | ClosedForm::Torus { n, .. } | ClosedForm::Weyl { n } => n,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ClosedForm::Torus { m, .. } => m,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisSource {
    Sites(String),
    ClosedForm(ClosedForm),
}

impl fmt::Display for BasisSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisSource::Sites(label) => write!(f, "quadrature:{label}"),
            BasisSource::ClosedForm(ClosedForm::Circle { .. }) => f.write_str("closed:circle"),
            BasisSource::ClosedForm(ClosedForm::Torus { m, .. }) => write!(f, "closed:torus({m})"),
            BasisSource::ClosedForm(ClosedForm::Weyl { .. }) => f.write_str("closed:weyl"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    order: MultiIndexOrder,
    transform: DMatrix<Complex64>,
    /// Lower triangle of `transform` split as `(log|t|, t/|t|)`, by row.
    log_rows: Vec<Vec<(f64, Complex64)>>,
    diagonal: bool,
    source: BasisSource,
}

/// `log|p_ν(z)|` and phases for every basis element.
#[derive(Debug, Clone)]
pub struct BasisLogValues {
    pub log_abs: Vec<f64>,
    pub phase: Vec<Complex64>,
}

impl OrthonormalBasis {
    fn from_transform(order: MultiIndexOrder, transform: DMatrix<Complex64>, source: BasisSource) -> Self {
        let size = order.len();
        let mut diagonal = true;
        let log_rows = (0..size)
            .map(|r| {
                (0..=r)
                    .map(|c| {
                        let t = transform[(r, c)];
                        if c != r && t != Complex64::new(0.0, 0.0) {
                            diagonal = false;
                        }
                        split_log(t)
                    })
                    .collect()
            })
            .collect();
        OrthonormalBasis {
            order,
            transform,
            log_rows,
            diagonal,
            source,
        }
    }

    pub fn order(&self) -> &MultiIndexOrder {
        &self.order
    }

    pub fn degree(&self) -> u32 {
        self.order.degree()
    }

    pub fn dim(&self) -> usize {
        self.order.dim()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn transform(&self) -> &DMatrix<Complex64> {
        &self.transform
    }

    pub fn source(&self) -> &BasisSource {
        &self.source
    }

    /// True when every `p_ν` is a multiple of `z^ν`.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Monomial coefficients `c = Tᵀ a` of `Σ a_ν p_ν`.
    pub fn to_monomial(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.len() {
            return Err(Error::Contract(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                self.len()
            )));
        }
        if self.diagonal {
            return Ok(coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| a * self.transform[(i, i)])
                .collect());
        }
        let a = DVector::from_column_slice(coeffs);
        Ok(self.transform.tr_mul(&a).iter().copied().collect())
    }

    /// Writes the transform row-major, one matrix row per line as
    /// `re,im` pairs.
    pub fn write_transform_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let size = self.len();
        let header: Vec<String> = (0..size).flat_map(|j| [format!("re_{j}"), format!("im_{j}")]).collect();
        writeln!(out, "{}", header.join(","))?;
        for r in 0..size {
            let row: Vec<String> = (0..size)
                .flat_map(|c| {
                    let t = self.transform[(r, c)];
                    [fmt_f64(t.re), fmt_f64(t.im)]
                })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Rows = sites scaled by `√(w_i e^{-2n q_i})`, columns = monomials.
fn weighted_vandermonde(sites: &WeightedSiteSet, order: &MultiIndexOrder) -> Result<DMatrix<Complex64>> {
    let n = f64::from(order.degree());
    let mut v = DMatrix::<Complex64>::zeros(sites.len(), order.len());
    for (i, (z, (w, q))) in sites
        .points()
        .zip(sites.weights().iter().zip(sites.q_values()))
        .enumerate()
    {
        let scale = (0.5 * (w.ln() - 2.0 * n * q)).exp();
        let mons = crate::polycore::eval_monomials(z, order)?;
        for (k, val) in mons.into_iter().enumerate() {
            v[(i, k)] = val * scale;
        }
    }
    Ok(v)
}

/// `G_{νγ} = Σ_i w_i z_i^ν conj(z_i^γ) e^{-2n q_i}`.
pub fn gram_matrix(sites: &WeightedSiteSet, n: u32) -> Result<DMatrix<Complex64>> {
    let order = enumerate_multiindices(sites.dim(), n)?;
    let v = weighted_vandermonde(sites, &order)?;
    // (VᴴV)_{νγ} = Σ conj(V_iν) V_iγ, the transpose of G.
    Ok(v.ad_mul(&v).transpose())
}

/// Gram–Schmidt on the weighted Vandermonde matrix of `sites`.
pub fn build_basis_qr(sites: &WeightedSiteSet, n: u32) -> Result<OrthonormalBasis> {
    let order = enumerate_multiindices(sites.dim(), n)?;
    let size = order.len();
    if sites.len() < size {
        return Err(Error::TooFewSites {
            sites: sites.len(),
            monomials: size,
        });
    }
    let v = weighted_vandermonde(sites, &order)?;

    let gram = v.ad_mul(&v);
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let lmax = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lmin = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if lmax > 0.0 { lmin / lmax } else { 0.0 };

    let mut q = DMatrix::<Complex64>::zeros(sites.len(), size);
    let mut r = DMatrix::<Complex64>::zeros(size, size);
    let mut worst = (f64::INFINITY, 0usize);
    for k in 0..size {
        let mut col = v.column(k).clone_owned();
        let original = col.norm();
        if k > 0 {
            let basis = q.columns(0, k);
            for _ in 0..2 {
                let h = basis.ad_mul(&col);
                col -= &basis * &h;
                let mut rk = r.view_mut((0, k), (k, 1));
                rk += h;
            }
        }
        let norm = col.norm();
        let rel = if original > 0.0 { norm / original } else { 0.0 };
        if rel < worst.0 {
            worst = (rel, k);
        }
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Conditioning {
                degree: order.get(k).degree(),
                ratio,
            });
        }
        r[(k, k)] = Complex64::new(norm, 0.0);
        q.set_column(k, &(col / Complex64::new(norm, 0.0)));
    }
    if !(ratio > GRAM_CONDITION_FLOOR) {
        return Err(Error::Conditioning {
            degree: order.get(worst.1).degree(),
            ratio,
        });
    }

    // Q = V R⁻¹, so p_k = Σ_i (R⁻¹)_{ik} z^{ν_i} and T = (R⁻¹)ᵀ.
    let identity = DMatrix::<Complex64>::identity(size, size);
    let rinv = r
        .solve_upper_triangular(&identity)
        .ok_or(Error::Conditioning {
            degree: order.degree(),
            ratio,
        })?;
    let mut transform = rinv.transpose();
    for row in 0..size {
        for c in (row + 1)..size {
            transform[(row, c)] = Complex64::new(0.0, 0.0);
        }
        transform[(row, row)] = Complex64::new(transform[(row, row)].re, 0.0);
    }
    Ok(OrthonormalBasis::from_transform(
        order,
        transform,
        BasisSource::Sites(sites.label().to_string()),
    ))
}

fn ln_factorial(j: u32) -> f64 {
    (2..=j).map(|k| f64::from(k).ln()).sum()
}

/// `√(n^{j+1} / (π j!))`, the Weyl normalization in log form.
pub fn weyl_log_normalization(n: u32, j: u32) -> f64 {
    0.5 * (f64::from(j + 1) * f64::from(n).ln() - PI.ln() - ln_factorial(j))
}

/// Analytically known bases; no quadrature involved.
pub fn closed_form_basis(form: ClosedForm) -> Result<OrthonormalBasis> {
    let order = enumerate_multiindices(form.dim(), form.degree())?;
    let size = order.len();
    let transform = match form {
        ClosedForm::Circle { .. } | ClosedForm::Torus { .. } => DMatrix::identity(size, size),
        ClosedForm::Weyl { n } => {
            if n == 0 {
                return Err(Error::Contract("Weyl basis needs degree n ≥ 1".into()));
            }
            let diag: Vec<Complex64> = (0..size as u32)
                .map(|j| Complex64::new(weyl_log_normalization(n, j).exp(), 0.0))
                .collect();
            DMatrix::from_diagonal(&DVector::from_vec(diag))
        }
    };
    Ok(OrthonormalBasis::from_transform(
        order,
        transform,
        BasisSource::ClosedForm(form),
    ))
}

/// `log|p_ν(z)|` and `p_ν(z)/|p_ν(z)|` for every `ν`.
pub fn eval_basis_log(basis: &OrthonormalBasis, z: &[Complex64]) -> Result<BasisLogValues> {
    let mons = LogMonomials::new(&basis.order, z)?;
    if basis.diagonal {
        let log_abs = mons
            .log_abs
            .iter()
            .zip(&basis.log_rows)
            .map(|(l, row)| l + row[row.len() - 1].0)
            .collect();
        return Ok(BasisLogValues {
            log_abs,
            phase: mons.phase,
        });
    }
    let mut log_abs = Vec::with_capacity(basis.len());
    let mut phase = Vec::with_capacity(basis.len());
    for row in &basis.log_rows {
        let terms = row
            .iter()
            .zip(mons.log_abs.iter().zip(&mons.phase))
            .map(|(&(lt, pt), (&lm, &pm))| (lt + lm, pt * pm));
        let v = log_sum_terms(terms);
        log_abs.push(v.log_abs);
        phase.push(v.phase);
    }
    Ok(BasisLogValues { log_abs, phase })
}

/// `max |PᴴWP − I|` with `P_{iν} = p_ν(z_i)` and `W = w e^{-2nQ}`.
pub fn orthonormality_defect(basis: &OrthonormalBasis, sites: &WeightedSiteSet) -> Result<f64> {
    if sites.dim() != basis.dim() {
        return Err(Error::Contract("site set and basis dimensions differ".into()));
    }
    let v = weighted_vandermonde(sites, &basis.order)?;
    let p = v * basis.transform.transpose();
    let g = p.ad_mul(&p);
    let size = basis.len();
    let mut worst: f64 = 0.0;
    for r in 0..size {
        for c in 0..size {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((g[(r, c)] - Complex64::new(target, 0.0)).norm());
        }
    }
    Ok(worst)
}
