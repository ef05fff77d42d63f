use nalgebra::DMatrix;
use num_complex::Complex64;

use super::propagate::RecoveredValues;
use super::reconstruct::SignalModel;
use crate::error::{Error, Result};
use crate::grid::InterpolationGrid;
use crate::linalg::solve_least_squares;
use crate::measurement::Augmentation;
use crate::signal::{L1BoundedSignal, TimeLimitedSignal};

/// Fit of `x'(z) = sum_j d_j T sinc(T/2 (z - 2 pi j / T)) + gamma cos(T' z / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedFit {
    pub signal: TimeLimitedSignal,
    pub gamma: Complex64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Removes the known cosine from recovered `y^ e^{i theta}` values and fits the
/// extended model; `d_j = c_j e^{i theta}` and `gamma = L (1 - e^{i theta})`.
pub fn fit_augmented(
    y_values: &RecoveredValues,
    aug: Augmentation,
    model: SignalModel,
    min_singular_value: f64,
) -> Result<AugmentedFit> {
    let x_prime = y_values.map_values(|z, y| aug.cosine(z) * aug.l1_bound - y);
    let (points, rhs): (Vec<Complex64>, Vec<Complex64>) = x_prime.resolved().unzip();
    let freqs = model.frequencies();
    let cols = freqs.len() + 1;
    if points.len() < cols {
        return Err(Error::InsufficientPoints {
            needed: cols,
            available: points.len(),
        });
    }
    let a = DMatrix::from_fn(points.len(), cols, |r, j| {
        if j < freqs.len() {
            model.basis_transform(freqs[j], points[r])
        } else {
            aug.cosine(points[r])
        }
    });
    let ls = solve_least_squares(&a, &rhs)?;
    if ls.sigma_min < min_singular_value {
        return Err(Error::IllConditioned {
            sigma_min: ls.sigma_min,
        });
    }
    let gamma = ls.solution[freqs.len()];
    let signal = TimeLimitedSignal::new(model.interval_length, ls.solution[..freqs.len()].to_vec())?;
    Ok(AugmentedFit {
        signal,
        gamma,
        sigma_min: ls.sigma_min,
        sigma_max: ls.sigma_max,
    })
}

/// Imaginary lift under which the augmented transform stays away from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftCertificate {
    pub height: f64,
    pub grid: InterpolationGrid,
    /// Smallest `|y^|` over all window points of the lifted grid.
    pub min_magnitude: f64,
    pub threshold: f64,
}

/// Lifts every offset of `base` by `i h` for `h = 1, 2, 4, ...` up to `max_height`
/// until `|y^|` exceeds `10 * zero_tol` at every window point, where
/// `zero_tol = rel_tol * max |y^|`.
pub fn certify_imaginary_shift(
    xb: &L1BoundedSignal,
    base: &InterpolationGrid,
    t_prime: f64,
    rel_tol: f64,
    max_height: f64,
) -> Result<ShiftCertificate> {
    let aug = Augmentation {
        l1_bound: xb.l1_bound(),
        t_prime,
    };
    let mut height = 1.0;
    let mut last = None;
    while height <= max_height {
        let grid = base.shift_imaginary(&vec![height; base.dim()])?;
        let magnitudes: Vec<f64> = grid
            .distinct_points()
            .iter()
            .map(|&z| aug.apply(z, xb.signal().fourier_transform(z)).norm())
            .collect();
        let peak = magnitudes.iter().copied().fold(0.0, f64::max);
        let min_magnitude = magnitudes.iter().copied().fold(f64::INFINITY, f64::min);
        let threshold = 10.0 * rel_tol * peak;
        if min_magnitude > threshold {
            return Ok(ShiftCertificate {
                height,
                grid,
                min_magnitude,
                threshold,
            });
        }
        last = Some(min_magnitude);
        height *= 2.0;
    }
    Err(Error::InvalidParameter(format!(
        "no certified imaginary shift up to height {max_height} (last min |y| = {last:?})"
    )))
}
