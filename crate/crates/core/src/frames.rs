//! Measurement frames and rank-one block recovery.
//!
//! A family of `M = K^2` unit vectors in `C^K` that is a 2-uniform `M/K`-tight
//! frame lets the outer product `v v*` be read off linearly from the `M`
//! intensities `|<v, alpha_m>|^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;

/// Family of `count` complex vectors of length `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameRecord", into = "FrameRecord")]
pub struct FrameFamily {
    dim: usize,
    vectors: Vec<Vec<Complex64>>,
}

/// On-disk shape of a frame: a list of vectors of `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecord {
    pub vectors: Vec<Vec<Complex64>>,
}

impl TryFrom<FrameRecord> for FrameFamily {
    type Error = Error;

    fn try_from(record: FrameRecord) -> Result<Self> {
        FrameFamily::new(record.vectors)
    }
}

impl From<FrameFamily> for FrameRecord {
    fn from(frame: FrameFamily) -> Self {
        FrameRecord { vectors: frame.vectors }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessReport {
    pub ok: bool,
    /// Largest entrywise deviation of `sum alpha alpha*` from `(M/K) I`.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformityReport {
    pub ok: bool,
    /// Mean of `|<alpha_m, alpha_m'>|^2` over all pairs `m != m'`.
    pub common_value: f64,
    /// Largest minus smallest squared correlation.
    pub max_spread: f64,
}

impl FrameFamily {
    /// Wraps a user-supplied family; all vectors must share a dimension `>= 2`.
    pub fn new(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidParameter("frame has no vectors".into()))?;
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "frame dimension must be >= 2, got {dim}"
            )));
        }
        if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        Ok(Self { dim, vectors })
    }

    /// The explicit four-vector family for `K = 2`.
    pub fn canonical_k2() -> Self {
        let inv_sqrt3 = 1.0 / 3f64.sqrt();
        let a = Complex64::new((0.5 * (1.0 - inv_sqrt3)).sqrt(), 0.0);
        let b = Complex64::from_polar((0.5 * (1.0 + inv_sqrt3)).sqrt(), 5.0 * std::f64::consts::FRAC_PI_4);
        let frame = Self {
            dim: 2,
            vectors: vec![vec![a, b], vec![b, a], vec![a, -b], vec![-b, a]],
        };
        debug_assert!(frame.max_norm_deviation() < 1e-12);
        frame
    }

    /// `K`
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `M`
    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn vector(&self, m: usize) -> &[Complex64] {
        &self.vectors[m]
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| (v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Checks `sum_m alpha_m alpha_m* = (M/K) I` entrywise.
    pub fn verify_tight(&self, tol: f64) -> TightnessReport {
        let k = self.dim;
        let bound = self.count() as f64 / k as f64;
        let mut max_deviation: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let sum: Complex64 = self.vectors.iter().map(|v| v[i] * v[j].conj()).sum();
                let target = if i == j { bound } else { 0.0 };
                max_deviation = max_deviation.max((sum - target).norm());
            }
        }
        TightnessReport {
            ok: max_deviation <= tol,
            max_deviation,
        }
    }

    /// Checks that `|<alpha_m, alpha_m'>|^2` takes one value for all `m != m'`.
    pub fn verify_two_uniform(&self, tol: f64) -> UniformityReport {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for m in 0..self.count() {
            for mp in (m + 1)..self.count() {
                let value = inner(&self.vectors[m], &self.vectors[mp]).norm_sqr();
                lo = lo.min(value);
                hi = hi.max(value);
                sum += value;
                pairs += 1;
            }
        }
        if pairs == 0 {
            return UniformityReport {
                ok: true,
                common_value: 0.0,
                max_spread: 0.0,
            };
        }
        let max_spread = hi - lo;
        UniformityReport {
            ok: max_spread <= tol,
            common_value: sum / pairs as f64,
            max_spread,
        }
    }

    /// The intensities `|<v, alpha_m>|^2` for every frame vector.
    pub fn intensities(&self, v: &[Complex64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok(self.vectors.iter().map(|a| inner(v, a).norm_sqr()).collect())
    }
}

/// `<x, y> = y* x`
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

/// Dense `K x K` Hermitian matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl GramMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.entries[i * self.dim + k]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.get(i, i).re
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.diagonal(i)).sum()
    }

    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for k in 0..self.dim {
                worst = worst.max((self.get(i, k) - self.get(k, i).conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(self.dim, &self.entries)
    }

    pub fn max_abs_diff(&self, other: &GramMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * s).collect(),
        }
    }
}

/// `v v*`
pub fn outer_product(v: &[Complex64]) -> GramMatrix {
    let dim = v.len();
    let entries = (0..dim * dim).map(|idx| v[idx / dim] * v[idx % dim].conj()).collect();
    GramMatrix { dim, entries }
}

/// Reconstructs `v v*` from the intensities `c_m = |<v, alpha_m>|^2`:
/// `Q = (K+1)/K sum_m c_m alpha_m alpha_m* - 1/K (sum_m c_m) I`.
pub fn rank_one_recover(c: &[f64], frame: &FrameFamily) -> Result<GramMatrix> {
    if c.len() != frame.count() {
        return Err(Error::DimensionMismatch {
            expected: frame.count(),
            actual: c.len(),
        });
    }
    if let Some((index, &value)) = c.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeIntensity { index, value });
    }
    let k = frame.dim();
    let kf = k as f64;
    let total: f64 = c.iter().sum();
    let mut q = GramMatrix::zeros(k);
    for i in 0..k {
        for j in 0..k {
            let weighted: Complex64 = frame
                .vectors()
                .iter()
                .zip(c)
                .map(|(a, &cm)| a[i] * a[j].conj() * cm)
                .sum();
            let mut value = weighted * ((kf + 1.0) / kf);
            if i == j {
                value -= total / kf;
            }
            q.entries[i * k + j] = value;
        }
    }
    Ok(q)
}
