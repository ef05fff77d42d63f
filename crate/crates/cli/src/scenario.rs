use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use pwphase::measurement::{add_noise, measure, measure_augmented};
use pwphase::recovery::{certify_imaginary_shift, ResultRecord, DEFAULT_RELATIVE_ZERO_TOL};
use pwphase::{
    phase_aligned_error, recover, recover_augmented, InterpolationGrid, L1BoundedSignal, MeasurementSet, ModulatorBank,
    ReconstructionResult, TimeLimitedSignal,
};
use serde::{Deserialize, Serialize};

use crate::config::{PipelineSection, ScenarioConfig};
use crate::CliError;

/// Acquisition side of a scenario: the truth and what the detector saw.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub truth: TimeLimitedSignal,
    pub measurements: MeasurementSet,
    pub shift: Option<ShiftInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftInfo {
    pub height: f64,
    pub min_magnitude: f64,
    pub threshold: f64,
    pub l1_bound: f64,
}

/// Failure before any intensity was recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum AcquisitionFailure {
    ShiftUncertified(String),
}

pub fn acquire(cfg: &ScenarioConfig) -> Result<Result<Acquisition, AcquisitionFailure>, CliError> {
    let truth = cfg.synthesize()?;
    let frame = cfg.frame()?;
    let base = cfg.base_grid()?;
    let (measurements, shift) = match cfg.pipeline {
        PipelineSection::Plain => {
            let grid = lift(&base, cfg.grid.eta.as_deref())?;
            (measure(&truth, &ModulatorBank::new(frame, grid)?), None)
        }
        PipelineSection::Augmented {
            l1_margin,
            quadrature_nodes,
            max_shift_height,
        } => {
            let xb = L1BoundedSignal::with_margin(truth.clone(), l1_margin, quadrature_nodes)?;
            let (grid, shift) = match &cfg.grid.eta {
                Some(eta) => (base.shift_imaginary(eta)?, None),
                None => {
                    let rel = DEFAULT_RELATIVE_ZERO_TOL;
                    match certify_imaginary_shift(&xb, &base, cfg.grid.t_prime, rel, max_shift_height) {
                        Ok(c) => {
                            let info = ShiftInfo {
                                height: c.height,
                                min_magnitude: c.min_magnitude,
                                threshold: c.threshold,
                                l1_bound: xb.l1_bound(),
                            };
                            (c.grid, Some(info))
                        }
                        Err(e) => return Ok(Err(AcquisitionFailure::ShiftUncertified(e.to_string()))),
                    }
                }
            };
            let bank = ModulatorBank::new(frame, grid)?;
            (measure_augmented(&xb, &bank, cfg.grid.t_prime)?, shift)
        }
    };
    let measurements = if cfg.noise.sigma > 0.0 {
        add_noise(&measurements, cfg.noise.sigma, cfg.noise.seed)?
    } else {
        measurements
    };
    Ok(Ok(Acquisition {
        truth,
        measurements,
        shift,
    }))
}

fn lift(base: &InterpolationGrid, eta: Option<&[f64]>) -> Result<InterpolationGrid, CliError> {
    Ok(match eta {
        Some(eta) => base.shift_imaginary(eta)?,
        None => base.clone(),
    })
}

/// Everything a roundtrip produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: String,
    pub error: Option<f64>,
    pub passed: bool,
    pub acquisition: Option<Acquisition>,
    pub result: Option<ReconstructionResult>,
    pub message: Option<String>,
}

pub fn run_roundtrip(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let acq = match acquire(cfg)? {
        Ok(a) => a,
        Err(AcquisitionFailure::ShiftUncertified(msg)) => {
            return Ok(Outcome {
                status: "shift_uncertified".into(),
                error: None,
                passed: false,
                acquisition: None,
                result: None,
                message: Some(msg),
            })
        }
    };
    let model = cfg.model();
    let options = cfg.recovery_options();
    let result = match cfg.pipeline {
        PipelineSection::Plain => recover(&acq.measurements, model, &options)?,
        PipelineSection::Augmented { .. } => recover_augmented(&acq.measurements, model, &options)?,
    };
    let error = match &result.signal {
        Some(s) => Some(phase_aligned_error(s, &acq.truth)?),
        None => None,
    };
    let passed = result.status.is_success() && error.is_some_and(|e| e <= cfg.tolerances.error);
    Ok(Outcome {
        status: result.status.label().into(),
        error,
        passed,
        acquisition: Some(acq),
        result: Some(result),
        message: None,
    })
}

/// Serialized roundtrip record. Plain values precede tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundtripRecord {
    pub status: String,
    pub passed: bool,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ResultRecord>,
    pub config: ScenarioConfig,
}

impl Outcome {
    pub fn record(&self, cfg: &ScenarioConfig) -> RoundtripRecord {
        RoundtripRecord {
            status: self.status.clone(),
            passed: self.passed,
            tolerance: cfg.tolerances.error,
            error: self.error,
            message: self.message.clone(),
            shift: self.acquisition.as_ref().and_then(|a| a.shift),
            result: self.result.as_ref().map(ReconstructionResult::record),
            config: cfg.clone(),
        }
    }
}

pub const TIMESTAMP_PREFIX: &str = "# generated_at_unix = ";

/// Record text: one timestamp comment line, then the deterministic body.
pub fn render_record(record: &RoundtripRecord) -> String {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let body = toml::to_string(record).expect("record serializes");
    format!("{TIMESTAMP_PREFIX}{stamp}\n{body}")
}

pub fn write_artifacts(dir: &Path, cfg: &ScenarioConfig, outcome: &Outcome) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    };
    write("result.toml", render_record(&outcome.record(cfg)))?;
    if let Some(acq) = &outcome.acquisition {
        write("grid.csv", acq.measurements.grid().to_csv())?;
        write("measurements.csv", acq.measurements.to_csv())?;
    }
    if let Some(result) = &outcome.result {
        write("fourier_values.csv", result.fourier_values.to_csv())?;
    }
    Ok(())
}
