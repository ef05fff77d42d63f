use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use pwphase::recovery::Backend;
use pwphase::{FrameFamily, InterpolationGrid, RecoveryOptions, SignalModel, TimeLimitedSignal};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub signal: SignalSection,
    pub grid: GridSection,
    #[serde(default)]
    pub frame: FrameSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub recovery: RecoverySection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Random,
    Inline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub kind: SignalKind,
    #[serde(default = "one")]
    pub interval_length: f64,
    /// `J` for random signals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `[re, im]` pairs for `c_{-J}..c_J`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<[f64; 2]>>,
    /// Points where the transform is forced to vanish (minimum-norm correction).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transform_zeros: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_prime: f64,
    pub k: usize,
    pub overlap: usize,
    /// Both bounds or neither; when absent the range is fitted to the band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_max: Option<i64>,
    /// Extra coverage beyond `2 pi J / T`, in units of `2 pi / T'` (automatic range only).
    #[serde(default)]
    pub margin: f64,
    #[serde(default)]
    pub anchor_shift: f64,
    /// Explicit imaginary lift per offset; overrides certification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrameSection {
    #[default]
    CanonicalK2,
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PipelineSection {
    #[default]
    Plain,
    Augmented {
        /// `L = (1 + l1_margin) ||x||_1`.
        #[serde(default = "default_l1_margin")]
        l1_margin: f64,
        #[serde(default = "default_quadrature_nodes")]
        quadrature_nodes: usize,
        #[serde(default = "default_max_shift")]
        max_shift_height: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverySection {
    #[serde(default = "default_backend")]
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_block: Option<i64>,
    #[serde(default = "default_fallback")]
    pub fallback_threshold: f64,
    #[serde(default = "default_min_sv")]
    pub min_singular_value: f64,
    #[serde(default = "default_gamma_tol")]
    pub gamma_tol: f64,
}

impl Default for RecoverySection {
    fn default() -> Self {
        let o = RecoveryOptions::default();
        Self {
            backend: o.backend,
            zero_tol: o.zero_tol,
            start_block: o.start_block,
            fallback_threshold: o.fallback_threshold,
            min_singular_value: o.min_singular_value,
            gamma_tol: o.gamma_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    /// Largest phase-aligned relative error counted as success.
    #[serde(default = "default_error_tol")]
    pub error: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            error: default_error_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn default_l1_margin() -> f64 {
    0.1
}
fn default_quadrature_nodes() -> usize {
    4001
}
fn default_max_shift() -> f64 {
    64.0
}
fn default_backend() -> Backend {
    Backend::LeastSquares
}
fn default_fallback() -> f64 {
    RecoveryOptions::default().fallback_threshold
}
fn default_min_sv() -> f64 {
    RecoveryOptions::default().min_singular_value
}
fn default_gamma_tol() -> f64 {
    RecoveryOptions::default().gamma_tol
}
fn default_error_tol() -> f64 {
    1e-8
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Reads and validates a config; relative frame paths resolve against the config's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let FrameSection::File { path: frame_path } = &mut cfg.frame {
            if frame_path.is_relative() {
                if let Some(dir) = path.parent() {
                    *frame_path = dir.join(&*frame_path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// `--seed` replaces both the signal seed and the noise seed.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.signal.seed = Some(seed);
            self.noise.seed = seed;
        }
        if let Some(tol) = o.tolerance {
            self.tolerances.error = tol;
        }
        if let Some(out) = &o.out {
            self.output.dir = Some(out.clone());
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let s = &self.signal;
        if !(s.interval_length > 0.0 && s.interval_length.is_finite()) {
            return bad(format!(
                "signal.interval_length must be positive, got {}",
                s.interval_length
            ));
        }
        match s.kind {
            SignalKind::Random => {
                if s.order.is_none() || s.coefficients.is_some() {
                    return bad("random signals need `order` and no `coefficients`".into());
                }
            }
            SignalKind::Inline => match &s.coefficients {
                Some(c) if c.len() % 2 == 1 => {}
                _ => return bad("inline signals need an odd number of `coefficients`".into()),
            },
        }
        let g = &self.grid;
        if !(g.t_prime >= s.interval_length) {
            return bad(format!(
                "grid.t_prime = {} must be at least T = {}",
                g.t_prime, s.interval_length
            ));
        }
        if g.k < 2 || g.overlap < 1 || g.overlap >= g.k {
            return bad(format!(
                "need K >= 2 and 1 <= a < K, got K = {}, a = {}",
                g.k, g.overlap
            ));
        }
        match (g.block_min, g.block_max) {
            (Some(lo), Some(hi)) if lo > hi => return bad(format!("empty block range [{lo}, {hi}]")),
            (Some(_), None) | (None, Some(_)) => {
                return bad("set both grid.block_min and grid.block_max, or neither".into())
            }
            _ => {}
        }
        if !(g.margin >= 0.0) {
            return bad(format!("grid.margin must be non-negative, got {}", g.margin));
        }
        if let Some(eta) = &g.eta {
            if eta.len() != g.k {
                return bad(format!("grid.eta has {} entries, K = {}", eta.len(), g.k));
            }
        }
        if let PipelineSection::Augmented {
            l1_margin,
            quadrature_nodes,
            max_shift_height,
        } = self.pipeline
        {
            if !(g.t_prime > s.interval_length) {
                return bad("the augmented pipeline needs t_prime > interval_length".into());
            }
            if !(l1_margin >= 0.0) || quadrature_nodes < 3 || !(max_shift_height >= 1.0) {
                return bad("invalid augmented pipeline parameters".into());
            }
        }
        if !(self.noise.sigma >= 0.0) {
            return bad(format!("noise.sigma must be non-negative, got {}", self.noise.sigma));
        }
        if !(self.tolerances.error >= 0.0) {
            return bad("tolerances.error must be non-negative".into());
        }
        let frame = self.frame()?;
        if frame.dim() != g.k {
            return bad(format!("frame dimension {} does not match K = {}", frame.dim(), g.k));
        }
        Ok(())
    }

    pub fn frame(&self) -> Result<FrameFamily, CliError> {
        match &self.frame {
            FrameSection::CanonicalK2 => Ok(FrameFamily::canonical_k2()),
            FrameSection::File { path } => load_frame(path),
        }
    }

    pub fn model(&self) -> SignalModel {
        SignalModel {
            interval_length: self.signal.interval_length,
            order: self.signal_order(),
        }
    }

    pub fn signal_order(&self) -> usize {
        match (&self.signal.order, &self.signal.coefficients) {
            (_, Some(c)) => c.len() / 2,
            (Some(j), None) => *j,
            (None, None) => 0,
        }
    }

    pub fn synthesize(&self) -> Result<TimeLimitedSignal, CliError> {
        let s = &self.signal;
        let x = match s.kind {
            SignalKind::Random => {
                TimeLimitedSignal::random(self.signal_order(), s.interval_length, s.seed.unwrap_or(0))?
            }
            SignalKind::Inline => {
                let coeffs = s.coefficients.as_deref().unwrap_or_default();
                TimeLimitedSignal::new(
                    s.interval_length,
                    coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
                )?
            }
        };
        if s.transform_zeros.is_empty() {
            return Ok(x);
        }
        let zeros: Vec<Complex64> = s.transform_zeros.iter().map(|z| Complex64::new(z[0], z[1])).collect();
        Ok(x.with_transform_zeros(&zeros)?)
    }

    /// Block range: explicit, or the smallest one covering `|Re z| <= 2 pi J / T + margin delta`.
    pub fn block_range(&self) -> (i64, i64) {
        let g = &self.grid;
        if let (Some(lo), Some(hi)) = (g.block_min, g.block_max) {
            return (lo, hi);
        }
        let delta = 2.0 * std::f64::consts::PI / g.t_prime;
        let beta = (g.k - g.overlap) as f64 * delta;
        let reach =
            2.0 * std::f64::consts::PI * self.signal_order() as f64 / self.signal.interval_length + g.margin * delta;
        let first = delta + g.anchor_shift;
        let last = g.k as f64 * delta + g.anchor_shift;
        let eps = 1e-9;
        let lo = ((-reach - first) / beta + eps).floor() as i64;
        let hi = ((reach - last) / beta - eps).ceil() as i64;
        (lo, hi.max(lo))
    }

    /// The real-axis grid before any imaginary lift.
    pub fn base_grid(&self) -> Result<InterpolationGrid, CliError> {
        let g = &self.grid;
        let (lo, hi) = self.block_range();
        Ok(InterpolationGrid::shannon(
            g.t_prime,
            g.k,
            g.overlap,
            lo,
            hi,
            g.anchor_shift,
        )?)
    }

    pub fn recovery_options(&self) -> RecoveryOptions {
        let r = &self.recovery;
        RecoveryOptions {
            zero_tol: r.zero_tol,
            start_block: r.start_block,
            backend: r.backend,
            fallback_threshold: r.fallback_threshold,
            min_singular_value: r.min_singular_value,
            gamma_tol: r.gamma_tol,
        }
    }
}

/// Frame file: `vectors = [[[re, im], ...], ...]`.
pub fn load_frame(path: &Path) -> Result<FrameFamily, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read frame file {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("frame file {}: {e}", path.display())))
}
