use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::propagate::RecoveredValues;
use crate::error::{Error, Result};
use crate::grid::GeneratingFunction;
use crate::linalg::solve_least_squares;
use crate::signal::{cardinal_sine, TimeLimitedSignal};

/// Series model the reconstructor fits: interval length `T` and order `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub interval_length: f64,
    pub order: usize,
}

impl SignalModel {
    pub fn dimension(&self) -> usize {
        2 * self.order + 1
    }

    /// `2 pi j / T` for `j = -J..=J`.
    pub fn frequencies(&self) -> Vec<f64> {
        let j_max = self.order as i64;
        (-j_max..=j_max)
            .map(|j| 2.0 * PI * j as f64 / self.interval_length)
            .collect()
    }

    /// Transform of the `j`-th basis function (unit coefficient) at `z`.
    pub fn basis_transform(&self, frequency: f64, z: Complex64) -> Complex64 {
        cardinal_sine((z - frequency) * (self.interval_length / 2.0)) * self.interval_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// Reads `c_j = x^(2 pi j / T) / T` off a grid containing the regular points.
    ShannonClosedForm,
    /// Fits the series model to all recovered values.
    LeastSquares,
    /// Interpolates to the regular points with the grid's dual basis.
    GeneratingFunctionSeries { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub signal: TimeLimitedSignal,
    /// Extreme singular values of the column-equilibrated system (least squares only).
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
}

fn regular_point_tolerance(model: &SignalModel) -> f64 {
    1e-9 * 2.0 * PI / model.interval_length
}

/// Rebuilds the series coefficients from transform values on the grid.
pub fn reconstruct_signal(
    values: &RecoveredValues,
    model: SignalModel,
    backend: Backend,
    min_singular_value: f64,
) -> Result<Reconstruction> {
    if !(model.interval_length > 0.0) {
        return Err(Error::InvalidParameter("model interval length must be positive".into()));
    }
    let available = values.resolved_count();
    if available < model.dimension() {
        return Err(Error::InsufficientPoints {
            needed: model.dimension(),
            available,
        });
    }
    let t = model.interval_length;
    match backend {
        Backend::ShannonClosedForm => {
            let tol = regular_point_tolerance(&model);
            let coefficients = model
                .frequencies()
                .into_iter()
                .map(|w| {
                    values
                        .resolved()
                        .find(|(p, _)| (p - w).norm() <= tol)
                        .map(|(_, v)| v / t)
                        .ok_or_else(|| {
                            Error::InvalidParameter(format!("shannon_closed_form needs a recovered value at {w}"))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Reconstruction {
                signal: TimeLimitedSignal::new(t, coefficients)?,
                sigma_min: None,
                sigma_max: None,
            })
        }
        Backend::LeastSquares => {
            let (points, rhs): (Vec<Complex64>, Vec<Complex64>) = values.resolved().unzip();
            let freqs = model.frequencies();
            let a = DMatrix::from_fn(points.len(), freqs.len(), |r, j| {
                model.basis_transform(freqs[j], points[r])
            });
            let ls = solve_least_squares(&a, &rhs)?;
            if ls.sigma_min < min_singular_value {
                return Err(Error::IllConditioned {
                    sigma_min: ls.sigma_min,
                });
            }
            Ok(Reconstruction {
                signal: TimeLimitedSignal::new(t, ls.solution)?,
                sigma_min: Some(ls.sigma_min),
                sigma_max: Some(ls.sigma_max),
            })
        }
        Backend::GeneratingFunctionSeries { radius } => {
            let (points, samples): (Vec<Complex64>, Vec<Complex64>) = values.resolved().unzip();
            let gf = GeneratingFunction::new(&points, radius)?;
            if gf.is_degenerate() {
                return Err(Error::InvalidParameter(format!("no grid point inside radius {radius}")));
            }
            let inside: Vec<(Complex64, Complex64)> = points
                .iter()
                .zip(&samples)
                .filter(|(p, _)| p.norm() < radius)
                .map(|(p, v)| (*p, *v))
                .collect();
            let coefficients = model
                .frequencies()
                .into_iter()
                .map(|w| {
                    let z = Complex64::new(w, 0.0);
                    let mut sum = Complex64::new(0.0, 0.0);
                    for (p, v) in &inside {
                        sum += v * gf.dual_basis(*p, z)?;
                    }
                    Ok(sum / t)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Reconstruction {
                signal: TimeLimitedSignal::new(t, coefficients)?,
                sigma_min: None,
                sigma_max: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::InterpolationGrid;

    fn max_coeff_diff(a: &TimeLimitedSignal, b: &TimeLimitedSignal) -> f64 {
        a.coefficients()
            .iter()
            .zip(b.coefficients())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    fn model(x: &TimeLimitedSignal) -> SignalModel {
        SignalModel {
            interval_length: x.interval_length(),
            order: x.order(),
        }
    }

    #[test]
    fn shannon_closed_form_is_exact() {
        let x = TimeLimitedSignal::random(8, 1.0, 1).unwrap();
        let grid = InterpolationGrid::shannon(1.0, 2, 1, -9, 6, 0.0).unwrap();
        let values = RecoveredValues::from_signal(&x, &grid);
        let r = reconstruct_signal(&values, model(&x), Backend::ShannonClosedForm, 0.0).unwrap();
        assert!(max_coeff_diff(&r.signal, &x) <= 1e-12);

        let phase = Complex64::from_polar(1.0, 0.9);
        let rotated = values.map_values(|_, v| v * phase);
        let r = reconstruct_signal(&rotated, model(&x), Backend::ShannonClosedForm, 0.0).unwrap();
        assert!(max_coeff_diff(&r.signal, &x.scaled(phase)) <= 1e-12);
    }

    #[test]
    fn shannon_closed_form_needs_regular_points() {
        let x = TimeLimitedSignal::random(2, 1.0, 1).unwrap();
        let grid = InterpolationGrid::shannon(1.25, 2, 1, -6, 6, 0.0).unwrap();
        let values = RecoveredValues::from_signal(&x, &grid);
        assert!(reconstruct_signal(&values, model(&x), Backend::ShannonClosedForm, 0.0).is_err());
    }

    #[test]
    fn least_squares_on_oversampled_k3_grid() {
        let x = TimeLimitedSignal::random(6, 1.0, 13).unwrap();
        let grid = InterpolationGrid::shannon(1.25, 3, 1, -9, 8, 0.0).unwrap();
        let values = RecoveredValues::from_signal(&x, &grid);
        let r = reconstruct_signal(&values, model(&x), Backend::LeastSquares, 1e-10).unwrap();
        assert!(max_coeff_diff(&r.signal, &x) <= 1e-8);
        assert!(r.sigma_min.unwrap() > 1e-3);
    }

    #[test]
    fn backends_agree_on_shannon_grid() {
        let x = TimeLimitedSignal::random(5, 1.0, 3).unwrap();
        let grid = InterpolationGrid::shannon(1.0, 2, 1, -7, 5, 0.0).unwrap();
        let values = RecoveredValues::from_signal(&x, &grid);
        let closed = reconstruct_signal(&values, model(&x), Backend::ShannonClosedForm, 0.0).unwrap();
        let ls = reconstruct_signal(&values, model(&x), Backend::LeastSquares, 1e-10).unwrap();
        let gf = reconstruct_signal(
            &values,
            model(&x),
            Backend::GeneratingFunctionSeries { radius: 1e3 },
            0.0,
        )
        .unwrap();
        assert!(max_coeff_diff(&closed.signal, &ls.signal) <= 1e-9);
        assert!(max_coeff_diff(&closed.signal, &gf.signal) <= 1e-9);
    }

    #[test]
    fn insufficient_points_reported() {
        let x = TimeLimitedSignal::random(8, 1.0, 3).unwrap();
        let grid = InterpolationGrid::shannon(1.0, 2, 1, 0, 3, 0.0).unwrap();
        let values = RecoveredValues::from_signal(&x, &grid);
        assert!(matches!(
            reconstruct_signal(&values, model(&x), Backend::LeastSquares, 1e-10),
            Err(Error::InsufficientPoints {
                needed: 17,
                available: 5
            })
        ));
    }

    #[test]
    fn ill_conditioned_system_reported() {
        // points crowded far from the band leave the system nearly singular
        let x = TimeLimitedSignal::random(3, 1.0, 3).unwrap();
        let grid = InterpolationGrid::shannon(40.0, 2, 1, 200, 210, 0.0).unwrap();
        let values = RecoveredValues::from_signal(&x, &grid);
        assert!(matches!(
            reconstruct_signal(&values, model(&x), Backend::LeastSquares, 1e-6),
            Err(Error::IllConditioned { .. })
        ));
    }
}
