use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{Overrides, ScenarioConfig, SignalKind};
use crate::scenario::run_roundtrip;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    NoiseSigma,
    Overlap,
    K,
    TRatio,
    Order,
}

impl FromStr for SweepParameter {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "noise_sigma" => Ok(Self::NoiseSigma),
            "a" => Ok(Self::Overlap),
            "K" | "k" => Ok(Self::K),
            "T_ratio" | "t_ratio" => Ok(Self::TRatio),
            "J" | "j" => Ok(Self::Order),
            other => Err(CliError::Config(format!(
                "unknown sweep parameter {other:?}; expected noise_sigma, a, K, T_ratio or J"
            ))),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NoiseSigma => "noise_sigma",
            Self::Overlap => "a",
            Self::K => "K",
            Self::TRatio => "T_ratio",
            Self::Order => "J",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub status: String,
    pub error: Option<f64>,
    pub runtime_ms: f64,
}

fn as_count(param: SweepParameter, value: f64) -> Result<usize, CliError> {
    if value >= 0.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        Err(CliError::Config(format!("{param} needs whole numbers, got {value}")))
    }
}

/// Config with `param = value`. Structural parameters refit the block range to the band.
pub fn configure(base: &ScenarioConfig, param: SweepParameter, value: f64) -> Result<ScenarioConfig, CliError> {
    let mut cfg = base.clone();
    let refit = |cfg: &mut ScenarioConfig| {
        cfg.grid.block_min = None;
        cfg.grid.block_max = None;
    };
    match param {
        SweepParameter::NoiseSigma => cfg.noise.sigma = value,
        SweepParameter::Overlap => {
            cfg.grid.overlap = as_count(param, value)?;
            refit(&mut cfg);
        }
        SweepParameter::K => {
            cfg.grid.k = as_count(param, value)?;
            refit(&mut cfg);
        }
        SweepParameter::TRatio => {
            cfg.grid.t_prime = value * cfg.signal.interval_length;
            refit(&mut cfg);
        }
        SweepParameter::Order => {
            if cfg.signal.kind != SignalKind::Random {
                return Err(CliError::Config("sweeping J needs a random signal".into()));
            }
            cfg.signal.order = Some(as_count(param, value)?);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One roundtrip per `(value, seed)`; rows come back in input order.
pub fn sweep(base: &ScenarioConfig, param: SweepParameter, values: &[f64], seeds: u64) -> Vec<SweepRow> {
    let first_seed = base.signal.seed.unwrap_or(0);
    let jobs: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&v| (0..seeds.max(1)).map(move |i| (v, first_seed + i)))
        .collect();
    jobs.par_iter()
        .map(|&(value, seed)| {
            let started = Instant::now();
            let mut cfg = base.clone();
            cfg.apply(&Overrides {
                seed: Some(seed),
                ..Overrides::default()
            });
            let (status, error) = match configure(&cfg, param, value).and_then(|c| run_roundtrip(&c)) {
                Ok(outcome) => (outcome.status, outcome.error),
                Err(CliError::Config(_)) => ("invalid_config".to_string(), None),
                Err(_) => ("error".to_string(), None),
            };
            SweepRow {
                value,
                seed,
                status,
                error,
                runtime_ms: started.elapsed().as_secs_f64() * 1e3,
            }
        })
        .collect()
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("value,seed,status,phase_aligned_error,runtime_ms\n");
    for r in rows {
        let err = r.error.map(|e| format!("{e:.16e}")).unwrap_or_default();
        out.push_str(&format!(
            "{:.16e},{},{},{},{:.3}\n",
            r.value, r.seed, r.status, err, r.runtime_ms
        ));
    }
    out
}
