use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use plurirand_core::ensembles::DistributionKind;
use plurirand_core::orthobasis::GENERAL_SET_DEGREE_CAP;
use plurirand_core::polycore::monomial_count;
use plurirand_core::zeros::MAX_ROOT_DEGREE;
use serde::Deserialize;

/// Nodes per monomial required of site files, which only approximate a
/// continuum measure.
pub const SITE_FILE_OVERSAMPLING: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Extremal,
    Zeros,
    Weyl,
    Expectation,
    LemmaCheck,
    Mapping,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Extremal,
        Subcommand::Zeros,
        Subcommand::Weyl,
        Subcommand::Expectation,
        Subcommand::LemmaCheck,
        Subcommand::Mapping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Extremal => "extremal",
            Subcommand::Zeros => "zeros",
            Subcommand::Weyl => "weyl",
            Subcommand::Expectation => "expectation",
            Subcommand::LemmaCheck => "lemma-check",
            Subcommand::Mapping => "mapping",
        }
    }

    fn is_random(self) -> bool {
        self != Subcommand::Extremal
    }

    fn default_trials(self) -> u64 {
        match self {
            Subcommand::Expectation | Subcommand::LemmaCheck => 1_000_000,
            _ => 50,
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown subcommand `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Circle,
    Torus,
    Weyl,
}

impl FromStr for ModelTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "circle" => Ok(ModelTag::Circle),
            "torus" => Ok(ModelTag::Torus),
            "weyl" => Ok(ModelTag::Weyl),
            other => Err(format!("unknown model `{other}` (expected circle, torus or weyl)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    #[default]
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default)]
    pub kind: BasisKind,
    /// Sites per circle (per coordinate for the torus), or radial nodes for
    /// the Weyl disk.
    pub nodes: Option<usize>,
    /// Angular nodes of the Weyl disk.
    pub angular_nodes: Option<usize>,
    /// Cut radius of the Weyl disk.
    pub truncation_radius: Option<f64>,
    /// A CSV site set used instead of the model's built-in rule.
    pub sites_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub radii: Option<Vec<f64>>,
    pub angles: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZerosConfig {
    pub radii: Option<Vec<f64>>,
    pub sectors: Option<usize>,
    pub annulus: Option<[f64; 2]>,
    /// Minimum mean annulus fraction (circle).
    pub annulus_min: Option<f64>,
    /// Allowed deviation of the radial CDF from `r²` (Weyl).
    pub cdf_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectationConfig {
    /// Coefficient vector lengths `m_n`.
    pub sizes: Option<Vec<usize>>,
    /// Allowed deviation of the mean from the one-coefficient oracle.
    pub tolerance: Option<f64>,
    /// Bound declared for `|Iₙ| / log m_n`.
    pub ratio_bound: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    /// Degrees `n` for the small-ball check.
    pub small_ball_degrees: Option<Vec<u32>>,
    /// Length of the direction vector `w = e₁`.
    pub small_ball_size: Option<usize>,
    pub norm_tail_size: Option<usize>,
    pub norm_tail_degree: Option<u32>,
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<String>,
    /// Number of variables for the torus model.
    pub dim: Option<usize>,
    pub distribution: Option<String>,
    #[serde(default)]
    pub degrees: Vec<u32>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Extremal: sup error at the largest degree; mapping: mean error.
    pub tolerance: Option<f64>,
    /// Map components `k` for `mapping`.
    pub components: Option<usize>,
    /// Mapping: required fraction of paired trials that improve.
    pub paired_min: Option<f64>,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub zeros: ZerosConfig,
    #[serde(default)]
    pub expectation: ExpectationConfig,
    #[serde(default)]
    pub lemma: LemmaConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn trials_for(&self, cmd: Subcommand) -> u64 {
        self.trials.unwrap_or(cmd.default_trials())
    }

    /// Model tag, with `weyl` implied by the `weyl` subcommand.
    pub fn model_for(&self, cmd: Subcommand) -> Option<ModelTag> {
        match (cmd, &self.model) {
            (Subcommand::Weyl, None) => Some(ModelTag::Weyl),
            (_, Some(m)) => m.parse().ok(),
            _ => None,
        }
    }

    pub fn dim_for(&self, model: ModelTag) -> usize {
        match model {
            ModelTag::Torus => self.dim.unwrap_or(2),
            _ => 1,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("plurirand-out"))
    }
}

/// A field-level problem that stops a run before it starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Every violation that would stop `run`; empty iff the run can start.
pub fn validate(cmd: Subcommand, cfg: &ExperimentConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |field: &'static str, message: String| out.push(Violation { field, message });

    if cfg.seed.is_none() {
        bad("seed", "seed required".into());
    }

    if cmd.is_random() {
        match &cfg.distribution {
            None => bad("distribution", "distribution required".into()),
            Some(key) => {
                if let Err(e) = key.parse::<DistributionKind>() {
                    bad("distribution", e.to_string());
                }
            }
        }
        if cfg.trials == Some(0) {
            bad("trials", "trials must be positive".into());
        }
    }

    let needs_model = matches!(cmd, Subcommand::Extremal | Subcommand::Zeros | Subcommand::Mapping);
    let model = cfg.model_for(cmd);
    if let Some(m) = &cfg.model {
        if let Err(e) = m.parse::<ModelTag>() {
            bad("model", e);
        }
    } else if needs_model {
        bad("model", "model required".into());
    }
    if cmd == Subcommand::Weyl && model.is_some() && model != Some(ModelTag::Weyl) {
        bad("model", "the weyl experiment only runs the weyl model".into());
    }
    if cmd == Subcommand::Zeros && matches!(model, Some(ModelTag::Torus)) {
        bad("model", "root statistics need a univariate model".into());
    }
    if cfg.dim == Some(0) {
        bad("dim", "dim must be at least 1".into());
    }
    if cfg.dim.is_some() && model.is_some_and(|m| m != ModelTag::Torus) {
        bad("dim", "dim only applies to the torus model".into());
    }

    let needs_degrees = matches!(
        cmd,
        Subcommand::Extremal | Subcommand::Zeros | Subcommand::Weyl | Subcommand::Mapping
    );
    if needs_degrees {
        if cfg.degrees.is_empty() {
            bad("degrees", "at least one degree required".into());
        }
        if cfg.degrees.contains(&0) {
            bad("degrees", "degrees must be positive".into());
        }
        if cfg.degrees.windows(2).any(|w| w[0] >= w[1]) {
            bad("degrees", "degrees must be strictly increasing".into());
        }
    }
    if matches!(cmd, Subcommand::Zeros | Subcommand::Weyl) {
        if cfg.degrees.len() > 1 {
            bad("degrees", "root statistics take a single degree".into());
        }
        if cfg.degrees.iter().any(|&n| n as usize > MAX_ROOT_DEGREE) {
            bad("degrees", format!("degree cap {MAX_ROOT_DEGREE} for root finding"));
        }
    }

    let basis = &cfg.basis;
    if let Some(path) = &basis.sites_file {
        if basis.kind != BasisKind::Quadrature {
            bad("basis.sites_file", "a site file needs basis.kind = \"quadrature\"".into());
        }
        if cfg.degrees.iter().any(|&n| n > GENERAL_SET_DEGREE_CAP) {
            bad("degrees", format!("degree cap {GENERAL_SET_DEGREE_CAP} for general sets"));
        }
        match std::fs::read_to_string(path) {
            Err(e) => bad("basis.sites_file", format!("{}: {e}", path.display())),
            Ok(text) => {
                let nodes = text.lines().skip(1).filter(|l| !l.trim().is_empty()).count();
                let dim = model.map(|m| cfg.dim_for(m)).unwrap_or(1);
                if let Some(&n) = cfg.degrees.iter().filter(|&&n| n <= GENERAL_SET_DEGREE_CAP).max() {
                    if let Ok(mn) = monomial_count(dim, n) {
                        let need = SITE_FILE_OVERSAMPLING * mn;
                        if nodes < need {
                            bad(
                                "basis.sites_file",
                                format!("{nodes} sites; degree {n} needs at least {need} ({SITE_FILE_OVERSAMPLING} per monomial)"),
                            );
                        }
                    }
                }
            }
        }
    }
    if basis.nodes == Some(0) || basis.angular_nodes == Some(0) {
        bad("basis", "node counts must be positive".into());
    }
    if basis.truncation_radius.is_some_and(|r| !positive(r)) {
        bad("basis.truncation_radius", "must be positive".into());
    }

    if let Some(radii) = &cfg.grid.radii {
        if radii.is_empty() || radii.iter().any(|&r| !positive(r)) {
            bad("grid.radii", "radii must be a non-empty list of positive numbers".into());
        }
    }
    if cfg.grid.angles == Some(0) {
        bad("grid.angles", "must be positive".into());
    }

    if let Some(radii) = &cfg.zeros.radii {
        if radii.is_empty() || radii.iter().any(|&r| !positive(r)) {
            bad("zeros.radii", "radii must be a non-empty list of positive numbers".into());
        }
    }
    if cfg.zeros.sectors.is_some_and(|s| s < 2) {
        bad("zeros.sectors", "need at least two sectors".into());
    }
    if let Some([lo, hi]) = cfg.zeros.annulus {
        if !(lo >= 0.0 && hi > lo) {
            bad("zeros.annulus", format!("bad annulus ({lo}, {hi}]"));
        }
    }

    for (field, v) in [
        ("tolerance", cfg.tolerance),
        ("zeros.cdf_tolerance", cfg.zeros.cdf_tolerance),
        ("expectation.tolerance", cfg.expectation.tolerance),
        ("expectation.ratio_bound", cfg.expectation.ratio_bound),
    ] {
        if v.is_some_and(|v| !positive(v)) {
            bad(field, "must be positive".into());
        }
    }
    for (field, v) in [("paired_min", cfg.paired_min), ("zeros.annulus_min", cfg.zeros.annulus_min)] {
        if v.is_some_and(|v| !(0.0..=1.0).contains(&v)) {
            bad(field, "must lie in [0, 1]".into());
        }
    }

    if cmd == Subcommand::Mapping {
        let m = model.map(|m| cfg.dim_for(m)).unwrap_or(1);
        let k = cfg.components.unwrap_or(1);
        if k == 0 || k > m {
            bad("components", format!("need 1 ≤ k ≤ m = {m}, got {k}"));
        }
    }

    if cmd == Subcommand::Expectation {
        if let Some(sizes) = &cfg.expectation.sizes {
            if sizes.is_empty() || sizes.iter().any(|&s| s < 2) {
                bad("expectation.sizes", "sizes must be at least 2 (the pair vector needs two slots)".into());
            }
        }
    }
    if cmd == Subcommand::LemmaCheck {
        if let Some(ns) = &cfg.lemma.small_ball_degrees {
            if ns.is_empty() || ns.contains(&0) {
                bad("lemma.small_ball_degrees", "degrees must be positive".into());
            }
        }
        if cfg.lemma.small_ball_size == Some(0) || cfg.lemma.norm_tail_size == Some(0) {
            bad("lemma", "vector sizes must be positive".into());
        }
        if cfg.lemma.norm_tail_degree.is_some_and(|n| n < 2) {
            bad("lemma.norm_tail_degree", "must be at least 2".into());
        }
    }
    out
}
