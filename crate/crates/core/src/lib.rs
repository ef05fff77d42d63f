//! Phase retrieval for time-limited signals from intensity-only measurements
//! of their modulated Fourier transforms.
//!
//! The chain runs signal -> grid of block points -> frame intensities ->
//! rank-one block recovery -> phase propagation across overlapping blocks ->
//! series reconstruction, all up to a single unrecoverable global phase.

// `!(x > 0.0)` style guards are kept because they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frames;
pub mod grid;
pub mod linalg;
pub mod measurement;
pub mod quadrature;
pub mod recovery;
pub mod signal;

pub use error::{Error, Result};
pub use frames::{outer_product, rank_one_recover, FrameFamily, GramMatrix};
pub use grid::{sampling_rate, GeneratingFunction, InterpolationGrid, RateFigure};
pub use measurement::{add_noise, measure, measure_augmented, Augmentation, MeasurementSet, ModulatorBank, NoiseModel};
pub use recovery::{
    phase_aligned_error, recover, recover_augmented, Backend, Diagnostics, ReconstructionResult, RecoveryOptions,
    SignalModel, Status,
};
pub use signal::{cardinal_sine, L1BoundedSignal, TimeLimitedSignal};
