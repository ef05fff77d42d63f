//! Block-structured interpolation grids, generating functions and sampling rates.
//!
//! Block `n` holds the `K` points `n beta + lambda_k`. Consecutive blocks share
//! `a` points: the last `a` positions of block `n` coincide with the first `a`
//! positions of block `n + 1`, which requires `lambda_{K-a+i} = lambda_i + beta`.
//!
//! Positions `k` are 0-based in this API and 1-based in emitted CSV files.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the overlap consistency check.
pub const OVERLAP_TOL: f64 = 1e-12;

/// Points closer than this to the origin count as the origin in generating functions.
const ORIGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationGrid {
    offsets: Vec<Complex64>,
    block_spacing: f64,
    overlap: usize,
    n_min: i64,
    n_max: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapReport {
    pub ok: bool,
    pub worst_violation: f64,
}

/// Points shared by blocks `n` and `n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSet {
    pub points: Vec<Complex64>,
    /// Positions of the shared points in block `n`.
    pub lower_positions: Vec<usize>,
    /// Positions of the shared points in block `n + 1`.
    pub upper_positions: Vec<usize>,
}

impl InterpolationGrid {
    /// Builds a grid and enforces the overlap condition.
    pub fn new(offsets: Vec<Complex64>, block_spacing: f64, overlap: usize, n_min: i64, n_max: i64) -> Result<Self> {
        let grid = Self::from_parts(offsets, block_spacing, overlap, n_min, n_max)?;
        let report = grid.validate_overlap_condition();
        if !report.ok {
            return Err(Error::OverlapViolation(format!(
                "lambda_(K-a+i) - lambda_i - beta deviates by {:e}",
                report.worst_violation
            )));
        }
        Ok(grid)
    }

    /// Builds a grid checking only structure (ordering, ranges), not the overlap condition.
    pub fn from_parts(
        offsets: Vec<Complex64>,
        block_spacing: f64,
        overlap: usize,
        n_min: i64,
        n_max: i64,
    ) -> Result<Self> {
        let k = offsets.len();
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need K >= 2 offsets, got {k}")));
        }
        if overlap < 1 || overlap >= k {
            return Err(Error::InvalidParameter(format!(
                "overlap must satisfy 1 <= a < K = {k}, got {overlap}"
            )));
        }
        if !(block_spacing > 0.0 && block_spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "block spacing must be positive, got {block_spacing}"
            )));
        }
        if n_min > n_max {
            return Err(Error::InvalidParameter(format!("empty block range [{n_min}, {n_max}]")));
        }
        if offsets.windows(2).any(|w| !(w[1].re > w[0].re)) {
            return Err(Error::InvalidParameter(
                "offsets must be strictly increasing in real part".into(),
            ));
        }
        Ok(Self {
            offsets,
            block_spacing,
            overlap,
            n_min,
            n_max,
        })
    }

    /// Zeros of `sin(T' z / 2)`: `lambda_k = k delta + shift` for `k = 1..=K`,
    /// `delta = 2 pi / T'`, `beta = (K - a) delta`.
    pub fn shannon(t_prime: f64, k: usize, overlap: usize, n_min: i64, n_max: i64, anchor_shift: f64) -> Result<Self> {
        if !(t_prime > 0.0 && t_prime.is_finite()) {
            return Err(Error::InvalidParameter(format!("T' must be positive, got {t_prime}")));
        }
        if k < 2 || overlap < 1 || overlap >= k {
            return Err(Error::InvalidParameter(format!(
                "need K >= 2 and 1 <= a < K, got K = {k}, a = {overlap}"
            )));
        }
        let delta = 2.0 * PI / t_prime;
        let offsets = (1..=k)
            .map(|i| Complex64::new(i as f64 * delta + anchor_shift, 0.0))
            .collect();
        Self::new(offsets, (k - overlap) as f64 * delta, overlap, n_min, n_max)
    }

    /// Lifts offset `k` by `i eta_k`. `eta` must repeat with the overlap structure.
    pub fn shift_imaginary(&self, eta: &[f64]) -> Result<Self> {
        let k = self.dim();
        if eta.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: eta.len(),
            });
        }
        for i in 0..self.overlap {
            let (lo, hi) = (eta[i], eta[k - self.overlap + i]);
            if (lo - hi).abs() > OVERLAP_TOL * (1.0 + lo.abs()) {
                return Err(Error::OverlapViolation(format!(
                    "eta[{}] = {hi} must equal eta[{i}] = {lo}",
                    k - self.overlap + i
                )));
            }
        }
        let offsets = self
            .offsets
            .iter()
            .zip(eta)
            .map(|(l, e)| l + Complex64::new(0.0, *e))
            .collect();
        Self::new(offsets, self.block_spacing, self.overlap, self.n_min, self.n_max)
    }

    /// `K`
    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[Complex64] {
        &self.offsets
    }

    /// `beta`
    pub fn block_spacing(&self) -> f64 {
        self.block_spacing
    }

    /// `a`
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn block_range(&self) -> (i64, i64) {
        (self.n_min, self.n_max)
    }

    pub fn block_count(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    /// Points added by each block after the first.
    pub fn stride(&self) -> usize {
        self.dim() - self.overlap
    }

    fn check_block(&self, n: i64) -> Result<()> {
        if n < self.n_min || n > self.n_max {
            return Err(Error::OutOfRange {
                index: n,
                min: self.n_min,
                max: self.n_max,
            });
        }
        Ok(())
    }

    /// `n beta + lambda_k` without range checking. Shared points are always
    /// evaluated from their lowest position, so both blocks see identical values.
    pub fn point(&self, n: i64, k: usize) -> Complex64 {
        let stride = self.stride();
        let (n, k) = (n + (k / stride) as i64, k % stride);
        self.offsets[k] + n as f64 * self.block_spacing
    }

    pub fn block_points(&self, n: i64) -> Result<Vec<Complex64>> {
        self.check_block(n)?;
        Ok((0..self.dim()).map(|k| self.point(n, k)).collect())
    }

    pub fn overlap_points(&self, n: i64) -> Result<OverlapSet> {
        self.check_block(n)?;
        self.check_block(n + 1)?;
        let k = self.dim();
        let lower_positions: Vec<usize> = (k - self.overlap..k).collect();
        let upper_positions: Vec<usize> = (0..self.overlap).collect();
        let points = lower_positions.iter().map(|&p| self.point(n, p)).collect();
        Ok(OverlapSet {
            points,
            lower_positions,
            upper_positions,
        })
    }

    pub fn validate_overlap_condition(&self) -> OverlapReport {
        let k = self.dim();
        let worst_violation = (0..self.overlap)
            .map(|i| (self.offsets[k - self.overlap + i] - self.offsets[i] - self.block_spacing).norm())
            .fold(0.0, f64::max);
        OverlapReport {
            ok: worst_violation <= OVERLAP_TOL * (1.0 + self.block_spacing),
            worst_violation,
        }
    }

    /// Number of distinct points in the window.
    pub fn point_count(&self) -> usize {
        self.dim() + (self.block_count() - 1) * self.stride()
    }

    /// Index of `(n, k)` in [`Self::distinct_points`]; shared points map to one index.
    pub fn global_index(&self, n: i64, k: usize) -> usize {
        (n - self.n_min) as usize * self.stride() + k
    }

    /// The union of all block points in the window, ordered by block then position.
    pub fn distinct_points(&self) -> Vec<Complex64> {
        let mut points = Vec::with_capacity(self.point_count());
        for n in self.n_min..=self.n_max {
            let first = if n == self.n_min { 0 } else { self.overlap };
            points.extend((first..self.dim()).map(|k| self.point(n, k)));
        }
        points
    }

    /// CSV with columns `n,k,re,im`, one row per block position (shared points repeat).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,re,im\n");
        for n in self.n_min..=self.n_max {
            for k in 0..self.dim() {
                let p = self.point(n, k);
                out.push_str(&format!("{},{},{:.16e},{:.16e}\n", n, k + 1, p.re, p.im));
            }
        }
        out
    }
}

/// Truncated canonical product `z^d prod_{|lambda| < R, lambda != 0} (1 - z / lambda)`.
///
/// Factors are multiplied in the order the points are given, so the result is
/// reproducible for a fixed input order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingFunction {
    points: Vec<Complex64>,
    has_origin: bool,
    radius: f64,
}

impl GeneratingFunction {
    /// Keeps the points strictly inside `radius`.
    pub fn new(points: &[Complex64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let inside: Vec<Complex64> = points.iter().copied().filter(|p| p.norm() < radius).collect();
        let has_origin = inside.iter().any(|p| p.norm() <= ORIGIN_TOL);
        let points = inside.into_iter().filter(|p| p.norm() > ORIGIN_TOL).collect();
        Ok(Self {
            points,
            has_origin,
            radius,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of non-origin factors.
    pub fn factor_count(&self) -> usize {
        self.points.len()
    }

    pub fn has_origin(&self) -> bool {
        self.has_origin
    }

    /// No point lies inside the radius, so the product is the constant 1.
    pub fn is_degenerate(&self) -> bool {
        self.points.is_empty() && !self.has_origin
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let product: Complex64 = self.points.iter().map(|l| Complex64::new(1.0, 0.0) - z / l).product();
        if self.has_origin {
            z * product
        } else {
            product
        }
    }

    /// Product over every factor except the one vanishing at `skip`.
    fn leave_one_out(&self, z: Complex64, skip: Option<usize>) -> Complex64 {
        let mut value = if self.has_origin && skip.is_some() {
            z
        } else {
            Complex64::new(1.0, 0.0)
        };
        for (i, l) in self.points.iter().enumerate() {
            if Some(i) != skip {
                value *= Complex64::new(1.0, 0.0) - z / l;
            }
        }
        value
    }

    fn locate(&self, lambda: Complex64) -> Result<Option<usize>> {
        if lambda.norm() <= ORIGIN_TOL && self.has_origin {
            return Ok(None);
        }
        self.points
            .iter()
            .position(|p| *p == lambda)
            .map(Some)
            .ok_or_else(|| Error::InvalidParameter(format!("{lambda} is not a point inside radius {}", self.radius)))
    }

    /// `S'(lambda_n)` from the product of the remaining factors.
    pub fn derivative_at(&self, lambda: Complex64) -> Result<Complex64> {
        match self.locate(lambda)? {
            None => Ok(self.leave_one_out(lambda, None)),
            Some(i) => Ok(-self.leave_one_out(lambda, Some(i)) / self.points[i]),
        }
    }

    /// `psi_n(z) = S(z) / (S'(lambda_n) (z - lambda_n))`, evaluated as a ratio of
    /// leave-one-out products so that `psi_n(lambda_n) = 1` exactly.
    pub fn dual_basis(&self, lambda: Complex64, z: Complex64) -> Result<Complex64> {
        let skip = self.locate(lambda)?;
        Ok(self.leave_one_out(z, skip) / self.leave_one_out(lambda, skip))
    }
}

/// `S(z)` truncated to the points of `points` inside `radius`.
pub fn generating_function(points: &[Complex64], z: Complex64, radius: f64) -> Result<Complex64> {
    Ok(GeneratingFunction::new(points, radius)?.eval(z))
}

/// `psi_n(z)` for the point `points[n]`, which must lie inside `radius`.
pub fn dual_basis_ft(points: &[Complex64], n: usize, z: Complex64, radius: f64) -> Result<Complex64> {
    let lambda = *points.get(n).ok_or(Error::OutOfRange {
        index: n as i64,
        min: 0,
        max: points.len() as i64 - 1,
    })?;
    GeneratingFunction::new(points, radius)?.dual_basis(lambda, z)
}

/// Sampling density of the scheme for given `K`, `a`, `T'`, `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFigure {
    pub k: usize,
    pub a: usize,
    pub t_prime: f64,
    pub t: f64,
    /// `K^2 / (K - a) * T' / (2 pi)`
    pub rate: f64,
    /// `rate / R_Ny` with `R_Ny = T / (2 pi)`
    pub nyquist_multiple: f64,
}

pub fn sampling_rate(k: usize, a: usize, t_prime: f64, t: f64) -> Result<RateFigure> {
    if k < 2 || a < 1 || a >= k {
        return Err(Error::InvalidParameter(format!(
            "need K >= 2 and 1 <= a < K, got K = {k}, a = {a}"
        )));
    }
    if !(t > 0.0 && t_prime >= t && t_prime.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need T' >= T > 0, got T' = {t_prime}, T = {t}"
        )));
    }
    let factor = (k * k) as f64 / (k - a) as f64;
    Ok(RateFigure {
        k,
        a,
        t_prime,
        t,
        rate: factor * t_prime / (2.0 * PI),
        nyquist_multiple: factor * (t_prime / t),
    })
}
