//! Coefficient distributions, their certification against the density and
//! tail bounds, and random polynomials `Hₙ = Σ a_ν p_ν` and maps `Fₙ`.
//!
//! A distribution with density `φ` must satisfy
//!
//! * `φ(z) ≤ T` everywhere, and
//! * `P(|a| ≥ R) ≤ T/R²` for `R ≥ 1`.
//!
//! [`CoefficientDistribution`] can only be built through certification, so
//! every sampler in the crate draws from a checked distribution. Draws are
//! a pure function of `(seed, stream)`: the generator is ChaCha8 keyed by the
//! seed with the stream index selecting an independent keystream.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::orthobasis::OrthonormalBasis;
use crate::polycore::{log_eval_with, log_sum_exp, LogMonomials};
use crate::quadrature::composite_gauss_legendre;

/// Radii at which the tail bound is checked.
pub const TAIL_RADII: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

/// Relative slack for comparisons against `T` (quadrature error only).
const CERT_SLACK: f64 = 1e-9;

/// A rotation-invariant density on ℂ (or an even density on ℝ), described
/// by its profile `r ↦ φ(r)`.
pub trait RadialDensity {
    fn name(&self) -> String;
    /// `φ` at any point of modulus `r`.
    fn density(&self, r: f64) -> f64;
    /// Real-valued variables live on the real axis with `φ(x) dx`.
    fn is_real(&self) -> bool {
        false
    }
    /// The constant `T` claimed for both bounds.
    fn declared_t(&self) -> f64;
    /// Radius beyond which the density vanishes, if any.
    fn support_radius(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionKind {
    /// `φ(z) = e^{-|z|²}/π`.
    ComplexGaussian,
    /// `φ(x) = e^{-x²}/√π` on the real axis.
    RealGaussian,
    /// `1/(πr²)` on `|z| ≤ r`.
    UniformDisk(f64),
    /// `c/(1+|z|⁴)` with `c = 2/π²`.
    HeavyTail,
}

const HEAVY_TAIL_C: f64 = 2.0 / (PI * PI);

impl RadialDensity for DistributionKind {
    fn name(&self) -> String {
        self.to_string()
    }

    fn density(&self, r: f64) -> f64 {
        match *self {
            DistributionKind::ComplexGaussian => (-r * r).exp() / PI,
            DistributionKind::RealGaussian => (-r * r).exp() / PI.sqrt(),
            DistributionKind::UniformDisk(radius) => {
                if r <= radius {
                    1.0 / (PI * radius * radius)
                } else {
                    0.0
                }
            }
            DistributionKind::HeavyTail => HEAVY_TAIL_C / (1.0 + r.powi(4)),
        }
    }

    fn is_real(&self) -> bool {
        matches!(self, DistributionKind::RealGaussian)
    }

    fn declared_t(&self) -> f64 {
        match *self {
            DistributionKind::ComplexGaussian => 1.0,
            DistributionKind::RealGaussian => 1.0 / PI.sqrt(),
            DistributionKind::UniformDisk(radius) => {
                let peak = 1.0 / (PI * radius * radius);
                // R²(1 − R²/r²) peaks at r²/4 when the disk reaches past R = 1.
                if radius <= 1.0 {
                    peak
                } else {
                    peak.max(radius * radius / 4.0)
                }
            }
            // R² · (2/π) atan(1/R²) increases to 2/π.
            DistributionKind::HeavyTail => 2.0 / PI,
        }
    }

    fn support_radius(&self) -> Option<f64> {
        match *self {
            DistributionKind::UniformDisk(radius) => Some(radius),
            _ => None,
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionKind::ComplexGaussian => f.write_str("complex_gaussian"),
            DistributionKind::RealGaussian => f.write_str("real_gaussian"),
            DistributionKind::UniformDisk(r) => write!(f, "uniform_disk:{r}"),
            DistributionKind::HeavyTail => f.write_str("heavy_tail"),
        }
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(key: &str) -> Result<Self> {
        match key {
            "complex_gaussian" => Ok(DistributionKind::ComplexGaussian),
            "real_gaussian" => Ok(DistributionKind::RealGaussian),
            "heavy_tail" => Ok(DistributionKind::HeavyTail),
            _ => {
                let r = key
                    .strip_prefix("uniform_disk:")
                    .and_then(|r| r.parse::<f64>().ok())
                    .filter(|r| *r > 0.0 && r.is_finite())
                    .ok_or_else(|| Error::UnknownDistribution(key.to_string()))?;
                Ok(DistributionKind::UniformDisk(r))
            }
        }
    }
}

/// Outcome of checking both bounds for a density.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub declared_t: f64,
    pub sup_density: f64,
    /// `(R, P(|a| ≥ R))` at [`TAIL_RADII`].
    pub tails: Vec<(f64, f64)>,
    pub t_bound_ok: bool,
    pub tail_ok: bool,
    /// Smallest `T` for which both checks pass on the tested grid.
    pub measured_t: f64,
}

/// `P(|a| ≥ R)` by quadrature after substituting `r = R/t`.
pub fn tail_mass<D: RadialDensity + ?Sized>(d: &D, radius: f64) -> f64 {
    let integrand = |r: f64| {
        if d.is_real() {
            2.0 * d.density(r)
        } else {
            2.0 * PI * r * d.density(r)
        }
    };
    // ∫_R^∞ g(r) dr = ∫_0^1 g(R/t) R/t² dt; split where the support ends.
    let mut breaks = vec![0.0, 1.0];
    if let Some(s) = d.support_radius() {
        if s > radius {
            breaks.insert(1, radius / s);
        }
    }
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (t, wt) = composite_gauss_legendre(16, 128, w[0], w[1]);
        total += t
            .iter()
            .zip(&wt)
            .map(|(&t, &wt)| wt * integrand(radius / t) * radius / (t * t))
            .sum::<f64>();
    }
    total
}

/// Evaluates both bounds without failing.
pub fn check_density<D: RadialDensity + ?Sized>(d: &D) -> Certificate {
    let t = d.declared_t();
    let mut sup: f64 = 0.0;
    let steps = 40_000;
    for k in 0..=steps {
        sup = sup.max(d.density(40.0 * k as f64 / steps as f64));
    }
    if let Some(s) = d.support_radius() {
        sup = sup.max(d.density(s));
    }
    let tails: Vec<(f64, f64)> = TAIL_RADII.iter().map(|&r| (r, tail_mass(d, r))).collect();
    let tail_need = tails.iter().map(|(r, p)| r * r * p).fold(0.0, f64::max);
    let limit = t * (1.0 + CERT_SLACK);
    Certificate {
        declared_t: t,
        sup_density: sup,
        t_bound_ok: sup <= limit,
        tail_ok: tail_need <= limit,
        measured_t: sup.max(tail_need),
        tails,
    }
}

/// Checks both bounds and names the first violation.
pub fn certify<D: RadialDensity + ?Sized>(d: &D) -> Result<Certificate> {
    let cert = check_density(d);
    let limit = cert.declared_t * (1.0 + CERT_SLACK);
    if !cert.t_bound_ok {
        return Err(Error::Certification {
            bound: "density bound φ ≤ T",
            radius: 0.0,
            value: cert.sup_density,
            limit: cert.declared_t,
        });
    }
    if let Some(&(r, p)) = cert.tails.iter().find(|(r, p)| r * r * p > limit) {
        return Err(Error::Certification {
            bound: "tail bound P(|a| ≥ R) ≤ T/R²",
            radius: r,
            value: p,
            limit: cert.declared_t / (r * r),
        });
    }
    Ok(cert)
}

/// A coefficient law that has passed [`certify`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDistribution {
    kind: DistributionKind,
    certificate: Certificate,
}

impl CoefficientDistribution {
    pub fn new(kind: DistributionKind) -> Result<Self> {
        if let DistributionKind::UniformDisk(r) = kind {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Contract(format!("uniform disk radius {r}")));
            }
        }
        let certificate = certify(&kind)?;
        Ok(CoefficientDistribution { kind, certificate })
    }

    pub fn from_key(key: &str) -> Result<Self> {
        Self::new(key.parse()?)
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    /// The certified constant `T`.
    pub fn t(&self) -> f64 {
        self.certificate.declared_t
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self.kind {
            DistributionKind::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            }
            DistributionKind::RealGaussian => {
                let x: f64 = rng.sample(StandardNormal);
                Complex64::new(x * FRAC_1_SQRT_2, 0.0)
            }
            DistributionKind::UniformDisk(radius) => {
                let u: f64 = rng.random();
                let theta: f64 = rng.random::<f64>() * 2.0 * PI;
                Complex64::from_polar(radius * u.sqrt(), theta)
            }
            DistributionKind::HeavyTail => {
                // P(|a| ≤ r) = (2/π) atan(r²).
                let u: f64 = rng.random();
                let theta: f64 = rng.random::<f64>() * 2.0 * PI;
                Complex64::from_polar((0.5 * PI * u).tan().sqrt(), theta)
            }
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Complex64]) {
        for slot in out {
            *slot = self.sample(rng);
        }
    }
}

/// The generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `count` i.i.d. draws determined by `(seed, stream)`.
pub fn sample_coefficients(dist: &CoefficientDistribution, count: usize, seed: u64, stream: u64) -> Vec<Complex64> {
    let mut rng = stream_rng(seed, stream);
    let mut out = vec![Complex64::new(0.0, 0.0); count];
    dist.fill(&mut rng, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedRecord {
    pub seed: u64,
    pub stream: u64,
    /// Offset of this component's block within the stream.
    pub component: usize,
}

/// `Hₙ = Σ a_ν p_ν` over a shared basis.
#[derive(Debug, Clone)]
pub struct RandomPolynomial {
    basis: Arc<OrthonormalBasis>,
    coefficients: Vec<Complex64>,
    monomial: Vec<Complex64>,
    seed: Option<SeedRecord>,
}

impl RandomPolynomial {
    /// A polynomial with given basis coefficients (no seed record).
    pub fn from_coefficients(basis: Arc<OrthonormalBasis>, coefficients: Vec<Complex64>) -> Result<Self> {
        let monomial = basis.to_monomial(&coefficients)?;
        Ok(RandomPolynomial {
            basis,
            coefficients,
            monomial,
            seed: None,
        })
    }

    pub fn basis(&self) -> &Arc<OrthonormalBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficients in the monomial basis.
    pub fn monomial_coefficients(&self) -> &[Complex64] {
        &self.monomial
    }

    pub fn seed(&self) -> Option<SeedRecord> {
        self.seed
    }

    /// `log|Hₙ(z)|`, `-∞` only at exact zeros.
    pub fn log_abs(&self, z: &[Complex64]) -> Result<f64> {
        let mons = LogMonomials::new(self.basis.order(), z)?;
        self.log_abs_with(&mons)
    }

    /// As [`Self::log_abs`] with monomial logs already computed for `z`.
    pub fn log_abs_with(&self, mons: &LogMonomials) -> Result<f64> {
        Ok(log_eval_with(&self.monomial, mons)?.log_abs)
    }

    /// The same polynomial with every coefficient multiplied by `lambda`.
    pub fn scaled(&self, lambda: Complex64) -> Result<Self> {
        let coeffs = self.coefficients.iter().map(|a| a * lambda).collect();
        let mut out = Self::from_coefficients(self.basis.clone(), coeffs)?;
        out.seed = self.seed;
        Ok(out)
    }
}

pub fn make_random_poly(
    basis: Arc<OrthonormalBasis>,
    dist: &CoefficientDistribution,
    seed: u64,
    stream: u64,
) -> Result<RandomPolynomial> {
    let coeffs = sample_coefficients(dist, basis.len(), seed, stream);
    let mut p = RandomPolynomial::from_coefficients(basis, coeffs)?;
    p.seed = Some(SeedRecord {
        seed,
        stream,
        component: 0,
    });
    Ok(p)
}

/// `log|Hₙ(z)|`.
pub fn log_abs_h(h: &RandomPolynomial, z: &[Complex64]) -> Result<f64> {
    h.log_abs(z)
}

/// `Fₙ = (Hₙ⁽¹⁾, …, Hₙ⁽ᵏ⁾)` with `1 ≤ k ≤ m`, all over one basis.
#[derive(Debug, Clone)]
pub struct RandomPolynomialMap {
    components: Vec<RandomPolynomial>,
}

impl RandomPolynomialMap {
    pub fn new(components: Vec<RandomPolynomial>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Contract("a polynomial map needs at least one component".into()))?;
        let m = first.basis.dim();
        if components.len() > m {
            return Err(Error::Contract(format!("{} components exceed dimension {m}", components.len())));
        }
        if components.iter().any(|c| !Arc::ptr_eq(&c.basis, &first.basis)) {
            return Err(Error::Contract("map components must share one basis".into()));
        }
        Ok(RandomPolynomialMap { components })
    }

    pub fn components(&self) -> &[RandomPolynomial] {
        &self.components
    }

    pub fn basis(&self) -> &Arc<OrthonormalBasis> {
        &self.components[0].basis
    }

    /// `log‖Fₙ(z)‖ = ½ log Σ_j |Hₙ⁽ʲ⁾(z)|²`.
    pub fn log_norm(&self, z: &[Complex64]) -> Result<f64> {
        let mons = LogMonomials::new(self.basis().order(), z)?;
        self.log_norm_with(&mons)
    }

    pub fn log_norm_with(&self, mons: &LogMonomials) -> Result<f64> {
        let doubled = self
            .components
            .iter()
            .map(|h| h.log_abs_with(mons).map(|l| 2.0 * l))
            .collect::<Result<Vec<_>>>()?;
        Ok(0.5 * log_sum_exp(&doubled))
    }
}

/// `k` components drawn consecutively from the `(seed, stream)` generator;
/// component 0 coincides with [`make_random_poly`].
pub fn make_random_map(
    basis: Arc<OrthonormalBasis>,
    dist: &CoefficientDistribution,
    k: usize,
    seed: u64,
    stream: u64,
) -> Result<RandomPolynomialMap> {
    let size = basis.len();
    let all = sample_coefficients(dist, size * k, seed, stream);
    let components = all
        .chunks_exact(size)
        .enumerate()
        .map(|(j, chunk)| {
            let mut p = RandomPolynomial::from_coefficients(basis.clone(), chunk.to_vec())?;
            p.seed = Some(SeedRecord {
                seed,
                stream,
                component: j,
            });
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    RandomPolynomialMap::new(components)
}

pub fn log_norm_f(f: &RandomPolynomialMap, z: &[Complex64]) -> Result<f64> {
    f.log_norm(z)
}
