//! Inverting the acquisition chain.
//!
//! Each block's intensities give its gram matrix `Q_n = x_n x_n*`. Factoring
//! `Q_n` fixes `x_n` up to one phase per block; those phases are tied together
//! through the values shared by overlapping blocks, leaving a single global
//! phase `theta_0` that no intensity measurement can reveal. The resulting
//! values on the grid are then turned back into series coefficients.

mod augmented;
mod block;
mod propagate;
mod reconstruct;

pub use augmented::{certify_imaginary_shift, fit_augmented, AugmentedFit, ShiftCertificate};
pub use block::{anchor_block_vector, anchor_block_vector_robust, recover_block_gram, Anchor, BlockEstimate};
pub use propagate::{
    propagate_phases, propagate_phases_partial, PhaseLink, Propagation, PropagationOptions, RecoveredValues,
};
pub use reconstruct::{reconstruct_signal, Backend, Reconstruction, SignalModel};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::MeasurementSet;
use crate::signal::TimeLimitedSignal;

/// Relative zero tolerance used when none is given: `1e-8 * max block magnitude`.
pub const DEFAULT_RELATIVE_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    /// Absolute threshold below which a transform value counts as zero.
    pub zero_tol: Option<f64>,
    pub start_block: Option<i64>,
    pub backend: Backend,
    /// Rank-one residual above which blocks are factored by eigenvector.
    pub fallback_threshold: f64,
    /// Smallest admissible singular value of the equilibrated fit matrix.
    pub min_singular_value: f64,
    /// Allowed deviation of `|1 - gamma / L|` from 1 in the augmented fit.
    pub gamma_tol: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            zero_tol: None,
            start_block: None,
            backend: Backend::LeastSquares,
            fallback_threshold: 1e-8,
            min_singular_value: 1e-10,
            gamma_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    Success,
    PhaseLinkBreak { block: i64 },
    IllConditioned,
    Insufficient,
}

impl Status {
    pub fn is_success(&self) -> bool {
        matches!(self, Status::Success)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Success => "success",
            Status::PhaseLinkBreak { .. } => "phase_link_break",
            Status::IllConditioned => "ill_conditioned",
            Status::Insufficient => "insufficient",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub zero_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_block: Option<i64>,
    /// `(n, rank-one residual)` per block.
    pub block_residuals: Vec<(i64, f64)>,
    pub eigen_fallback_blocks: Vec<i64>,
    pub phase_links: Vec<PhaseLink>,
    pub max_overlap_disagreement: f64,
    pub resolved_points: usize,
    pub total_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Complex64>,
    /// `| |1 - gamma / L| - 1 |`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_consistency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_consistent: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub status: Status,
    /// Recovered transform values, all rotated by the same unknown `e^{i theta_0}`.
    pub fourier_values: RecoveredValues,
    pub signal: Option<TimeLimitedSignal>,
    /// Always set: the global phase is not recoverable from intensities.
    pub global_phase_note: bool,
    pub diagnostics: Diagnostics,
}

/// Structured-text form of a [`ReconstructionResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub status: Status,
    pub global_phase_note: bool,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<TimeLimitedSignal>,
}

impl ReconstructionResult {
    pub fn record(&self) -> ResultRecord {
        ResultRecord {
            status: self.status,
            global_phase_note: self.global_phase_note,
            diagnostics: self.diagnostics.clone(),
            signal: self.signal.clone(),
        }
    }
}

struct Chain {
    propagation: Option<Propagation>,
    diagnostics: Diagnostics,
    zero_data: bool,
}

fn run_chain(ms: &MeasurementSet, options: &RecoveryOptions) -> Result<Chain> {
    let grid = ms.grid();
    let (n_min, n_max) = grid.block_range();
    let blocks = (n_min..=n_max)
        .map(|n| recover_block_gram(n, ms.block(n)?, ms.frame()))
        .collect::<Result<Vec<_>>>()?;
    let max_mag = blocks.iter().map(|b| b.peak().1.max(0.0).sqrt()).fold(0.0, f64::max);
    let zero_tol = options.zero_tol.unwrap_or(DEFAULT_RELATIVE_ZERO_TOL * max_mag);
    let mut diagnostics = Diagnostics {
        zero_tol,
        block_residuals: blocks.iter().map(|b| (b.block_index, b.rank1_residual)).collect(),
        total_points: grid.point_count(),
        ..Diagnostics::default()
    };
    if max_mag == 0.0 {
        diagnostics.message = Some("all intensities are zero".into());
        return Ok(Chain {
            propagation: None,
            diagnostics,
            zero_data: true,
        });
    }
    let opts = PropagationOptions {
        zero_tol,
        start_block: options.start_block,
        fallback_threshold: options.fallback_threshold,
    };
    let p = propagate_phases_partial(&blocks, grid, &opts)?;
    diagnostics.start_block = Some(p.start_block);
    diagnostics.phase_links = p.links.clone();
    diagnostics.max_overlap_disagreement = p.max_overlap_disagreement;
    diagnostics.resolved_points = p.values.resolved_count();
    diagnostics.eigen_fallback_blocks = p
        .blocks
        .iter()
        .filter(|b| b.eigen_fallback)
        .map(|b| b.block_index)
        .collect();
    Ok(Chain {
        propagation: Some(p),
        diagnostics,
        zero_data: false,
    })
}

fn failure_status(err: &Error) -> Option<Status> {
    match err {
        Error::InsufficientPoints { .. } => Some(Status::Insufficient),
        Error::IllConditioned { .. } => Some(Status::IllConditioned),
        _ => None,
    }
}

/// Full recovery from a plain measurement set: grams, phase propagation, reconstruction.
///
/// Pipeline failures (broken phase link, ill-conditioned fit) are reported
/// through [`ReconstructionResult::status`] with partial values kept; only
/// inconsistent inputs return `Err`.
pub fn recover(ms: &MeasurementSet, model: SignalModel, options: &RecoveryOptions) -> Result<ReconstructionResult> {
    let chain = run_chain(ms, options)?;
    let mut diagnostics = chain.diagnostics;
    let Some(p) = chain.propagation else {
        debug_assert!(chain.zero_data);
        let points = ms.grid().distinct_points();
        let values = vec![Some(Complex64::new(0.0, 0.0)); points.len()];
        diagnostics.resolved_points = points.len();
        return Ok(ReconstructionResult {
            status: Status::Success,
            fourier_values: RecoveredValues { points, values },
            signal: Some(TimeLimitedSignal::zeros(model.interval_length, model.order)?),
            global_phase_note: true,
            diagnostics,
        });
    };
    if let Some(block) = p.broken_at {
        return Ok(ReconstructionResult {
            status: Status::PhaseLinkBreak { block },
            fourier_values: p.values,
            signal: None,
            global_phase_note: true,
            diagnostics,
        });
    }
    let (status, signal) = match reconstruct_signal(&p.values, model, options.backend, options.min_singular_value) {
        Ok(r) => {
            diagnostics.sigma_min = r.sigma_min;
            diagnostics.sigma_max = r.sigma_max;
            (Status::Success, Some(r.signal))
        }
        Err(e) => match failure_status(&e) {
            Some(status) => {
                diagnostics.message = Some(e.to_string());
                if let Error::IllConditioned { sigma_min } = e {
                    diagnostics.sigma_min = Some(sigma_min);
                }
                (status, None)
            }
            None => return Err(e),
        },
    };
    Ok(ReconstructionResult {
        status,
        fourier_values: p.values,
        signal,
        global_phase_note: true,
        diagnostics,
    })
}

/// Recovery from cosine-augmented intensities.
///
/// Propagates phases of `y^ = L cos(T' z / 2) - x^`, subtracts the cosine to get
/// `x^ e^{i theta} + L (1 - e^{i theta}) cos(T' z / 2)`, and fits the series model
/// plus a free cosine amplitude `gamma`. `fourier_values` holds the recovered
/// `y^ e^{i theta}`.
pub fn recover_augmented(
    ms: &MeasurementSet,
    model: SignalModel,
    options: &RecoveryOptions,
) -> Result<ReconstructionResult> {
    let aug = ms.augmentation().ok_or(Error::NotAugmented)?;
    if !(aug.t_prime > model.interval_length) {
        return Err(Error::InvalidParameter(format!(
            "augmentation needs T' > T, got T' = {}, T = {}",
            aug.t_prime, model.interval_length
        )));
    }
    let chain = run_chain(ms, options)?;
    let mut diagnostics = chain.diagnostics;
    let Some(p) = chain.propagation else {
        // y^ = 0 everywhere forces x^ = L cos, impossible for T' > T
        diagnostics.message = Some("augmented intensities are identically zero".into());
        return Ok(ReconstructionResult {
            status: Status::IllConditioned,
            fourier_values: RecoveredValues::empty(ms.grid()),
            signal: None,
            global_phase_note: true,
            diagnostics,
        });
    };
    if let Some(block) = p.broken_at {
        return Ok(ReconstructionResult {
            status: Status::PhaseLinkBreak { block },
            fourier_values: p.values,
            signal: None,
            global_phase_note: true,
            diagnostics,
        });
    }
    match fit_augmented(&p.values, aug, model, options.min_singular_value) {
        Ok(fit) => {
            let consistency = ((Complex64::new(1.0, 0.0) - fit.gamma / aug.l1_bound).norm() - 1.0).abs();
            diagnostics.sigma_min = Some(fit.sigma_min);
            diagnostics.sigma_max = Some(fit.sigma_max);
            diagnostics.gamma = Some(fit.gamma);
            diagnostics.gamma_consistency = Some(consistency);
            diagnostics.gamma_consistent = Some(consistency <= options.gamma_tol);
            Ok(ReconstructionResult {
                status: Status::Success,
                fourier_values: p.values,
                signal: Some(fit.signal),
                global_phase_note: true,
                diagnostics,
            })
        }
        Err(e) => match failure_status(&e) {
            Some(status) => {
                diagnostics.message = Some(e.to_string());
                Ok(ReconstructionResult {
                    status,
                    fourier_values: p.values,
                    signal: None,
                    global_phase_note: true,
                    diagnostics,
                })
            }
            None => Err(e),
        },
    }
}

/// `min_theta ||e^{i theta} recovered - truth|| / ||truth||`, or the absolute
/// error when `truth` is zero. Signals of different order are compared after
/// zero-padding.
pub fn phase_aligned_error(recovered: &TimeLimitedSignal, truth: &TimeLimitedSignal) -> Result<f64> {
    let t = truth.interval_length();
    if (recovered.interval_length() - t).abs() > 1e-12 * t {
        return Err(Error::InvalidParameter(format!(
            "interval lengths differ: {} vs {t}",
            recovered.interval_length()
        )));
    }
    let order = recovered.order().max(truth.order());
    let r = recovered.embedded(order)?;
    let x = truth.embedded(order)?;
    let cross: Complex64 = x
        .coefficients()
        .iter()
        .zip(r.coefficients())
        .map(|(a, b)| a * b.conj())
        .sum();
    let rotation = if cross.norm() > 0.0 {
        cross / cross.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let diff: f64 = r
        .coefficients()
        .iter()
        .zip(x.coefficients())
        .map(|(a, b)| (a * rotation - b).norm_sqr())
        .sum();
    let abs_err = (t * diff).sqrt();
    let norm = x.l2_norm();
    Ok(if norm > 0.0 { abs_err / norm } else { abs_err })
}
