//! Time-limited signals modelled as finite Fourier series on `[-T/2, T/2]`.
//!
//! A signal `x(t) = sum_j c_j exp(-i 2 pi j t / T)` for `j = -J..=J` has the
//! transform `x^(z) = int x(t) exp(i t z) dt = sum_j c_j T sinc(T/2 (z - 2 pi j / T))`,
//! an entire function of exponential type `T/2`. With this sign convention
//! `x^(2 pi j / T) = T c_j`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::simpson;

/// Below this modulus `cardinal_sine` switches to its Taylor expansion.
const SINC_SERIES_THRESHOLD: f64 = 1e-4;

/// `sin(z)/z`, continued by `1` at the origin.
pub fn cardinal_sine(z: Complex64) -> Complex64 {
    if z.norm() < SINC_SERIES_THRESHOLD {
        Complex64::new(1.0, 0.0) - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// Finite Fourier-series signal supported on `[-T/2, T/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRecord", into = "SignalRecord")]
pub struct TimeLimitedSignal {
    interval_length: f64,
    coefficients: Vec<Complex64>,
}

/// On-disk shape of a signal: coefficients ordered `j = -J..=J` as `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalRecord {
    pub interval_length: f64,
    pub order: usize,
    pub coefficients: Vec<Complex64>,
}

impl TryFrom<SignalRecord> for TimeLimitedSignal {
    type Error = Error;

    fn try_from(record: SignalRecord) -> Result<Self> {
        if record.coefficients.len() != 2 * record.order + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * record.order + 1,
                actual: record.coefficients.len(),
            });
        }
        TimeLimitedSignal::new(record.interval_length, record.coefficients)
    }
}

impl From<TimeLimitedSignal> for SignalRecord {
    fn from(signal: TimeLimitedSignal) -> Self {
        SignalRecord {
            interval_length: signal.interval_length,
            order: signal.order(),
            coefficients: signal.coefficients,
        }
    }
}

impl TimeLimitedSignal {
    /// Builds a signal from coefficients ordered `j = -J..=J`.
    pub fn new(interval_length: f64, coefficients: Vec<Complex64>) -> Result<Self> {
        if !(interval_length > 0.0 && interval_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "interval length must be positive and finite, got {interval_length}"
            )));
        }
        if coefficients.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "coefficient count must be odd (2J+1), got {}",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(Self {
            interval_length,
            coefficients,
        })
    }

    pub fn zeros(interval_length: f64, order: usize) -> Result<Self> {
        Self::new(interval_length, vec![Complex64::new(0.0, 0.0); 2 * order + 1])
    }

    /// Deterministic pseudo-random signal with standard normal real and imaginary parts.
    pub fn random(order: usize, interval_length: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = (0..2 * order + 1)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        Self::new(interval_length, coefficients)
    }

    pub fn interval_length(&self) -> f64 {
        self.interval_length
    }

    /// The series order `J`.
    pub fn order(&self) -> usize {
        self.coefficients.len() / 2
    }

    /// Coefficients ordered `j = -J..=J`.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficient `c_j`; zero outside `-J..=J`.
    pub fn coefficient(&self, j: i64) -> Complex64 {
        let order = self.order() as i64;
        if j.abs() > order {
            Complex64::new(0.0, 0.0)
        } else {
            self.coefficients[(j + order) as usize]
        }
    }

    fn frequencies(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        let order = self.order() as i64;
        let spacing = 2.0 * PI / self.interval_length;
        self.coefficients
            .iter()
            .enumerate()
            .map(move |(idx, &c)| ((idx as i64 - order) as f64 * spacing, c))
    }

    /// `||x||^2 = T sum |c_j|^2`.
    pub fn energy(&self) -> f64 {
        self.interval_length * self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            interval_length: self.interval_length,
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
        }
    }

    /// Re-expresses the signal with a larger series order, padding with zeros.
    pub fn embedded(&self, order: usize) -> Result<Self> {
        if order < self.order() {
            return Err(Error::InvalidParameter(format!(
                "cannot embed order {} into order {order}",
                self.order()
            )));
        }
        let pad = order - self.order();
        let zero = Complex64::new(0.0, 0.0);
        let mut coefficients = vec![zero; pad];
        coefficients.extend_from_slice(&self.coefficients);
        coefficients.extend(std::iter::repeat_n(zero, pad));
        Self::new(self.interval_length, coefficients)
    }

    /// Evaluates `x(t)`; exactly zero for `|t| > T/2`.
    pub fn evaluate_time(&self, t: f64) -> Complex64 {
        if t.abs() > self.interval_length / 2.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.frequencies()
            .map(|(w, c)| c * Complex64::from_polar(1.0, -w * t))
            .sum()
    }

    /// Closed-form transform `x^(z) = int_{-T/2}^{T/2} x(t) e^{itz} dt`.
    pub fn fourier_transform(&self, z: Complex64) -> Complex64 {
        let half = self.interval_length / 2.0;
        self.frequencies()
            .map(|(w, c)| c * self.interval_length * cardinal_sine((z - w) * half))
            .sum()
    }

    /// Independent quadrature evaluation of the transform integral.
    pub fn fourier_transform_quadrature(&self, z: Complex64, nodes: usize) -> Result<Complex64> {
        if nodes < 2 {
            return Err(Error::InvalidParameter(format!("nodes must be >= 2, got {nodes}")));
        }
        let half = self.interval_length / 2.0;
        Ok(simpson(
            |t| self.evaluate_time(t) * (Complex64::i() * z * t).exp(),
            -half,
            half,
            nodes,
        ))
    }

    /// Quadrature estimate of `int |x(t)| dt` over the support.
    pub fn l1_norm(&self, nodes: usize) -> Result<f64> {
        if nodes < 2 {
            return Err(Error::InvalidParameter(format!("nodes must be >= 2, got {nodes}")));
        }
        let half = self.interval_length / 2.0;
        let value = simpson(
            |t| Complex64::new(self.evaluate_time(t).norm(), 0.0),
            -half,
            half,
            nodes,
        );
        Ok(value.re.max(0.0))
    }

    /// Returns the minimum-norm coefficient correction of `self` whose transform
    /// vanishes at every point in `points`.
    pub fn with_transform_zeros(&self, points: &[Complex64]) -> Result<Self> {
        let dim = self.coefficients.len();
        if points.len() >= dim {
            return Err(Error::InvalidParameter(format!(
                "{} zeros cannot be placed with {dim} coefficients",
                points.len()
            )));
        }
        if points.is_empty() {
            return Ok(self.clone());
        }
        let half = self.interval_length / 2.0;
        let freqs: Vec<f64> = self.frequencies().map(|(w, _)| w).collect();
        let a = DMatrix::from_fn(points.len(), dim, |r, j| {
            cardinal_sine((points[r] - freqs[j]) * half) * self.interval_length
        });
        let residual = DVector::from_iterator(points.len(), points.iter().map(|&z| -self.fourier_transform(z)));
        let svd = a.svd(true, true);
        let correction = svd
            .solve(&residual, 1e-12)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let coefficients = self
            .coefficients
            .iter()
            .zip(correction.iter())
            .map(|(c, d)| c + d)
            .collect();
        Self::new(self.interval_length, coefficients)
    }
}

/// A signal paired with a certified upper bound on its L1 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1BoundedSignal {
    signal: TimeLimitedSignal,
    l1_bound: f64,
}

impl L1BoundedSignal {
    /// Checks `||x||_1 <= l1_bound` by quadrature with `nodes` samples.
    pub fn new(signal: TimeLimitedSignal, l1_bound: f64, nodes: usize) -> Result<Self> {
        if !(l1_bound > 0.0 && l1_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "l1 bound must be positive, got {l1_bound}"
            )));
        }
        let norm = signal.l1_norm(nodes)?;
        if norm > l1_bound {
            return Err(Error::InvalidParameter(format!(
                "l1 norm {norm} exceeds bound {l1_bound}"
            )));
        }
        Ok(Self { signal, l1_bound })
    }

    /// Uses `(1 + margin) * ||x||_1` as the bound, or `1` for the zero signal.
    pub fn with_margin(signal: TimeLimitedSignal, margin: f64, nodes: usize) -> Result<Self> {
        if !(margin >= 0.0) {
            return Err(Error::InvalidParameter(format!("margin must be >= 0, got {margin}")));
        }
        let norm = signal.l1_norm(nodes)?;
        let bound = if norm > 0.0 { norm * (1.0 + margin) } else { 1.0 };
        Self::new(signal, bound, nodes)
    }

    pub fn signal(&self) -> &TimeLimitedSignal {
        &self.signal
    }

    pub fn l1_bound(&self) -> f64 {
        self.l1_bound
    }
}
