use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pwphase::{sampling_rate, FrameFamily};

use crate::config::{load_frame, Overrides, ScenarioConfig};
use crate::scenario::{acquire, render_record, run_roundtrip, write_artifacts, AcquisitionFailure};
use crate::sweep::{rows_to_csv, sweep, SweepParameter};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pwphase",
    version,
    about = "Phase retrieval roundtrips, frame checks and rate tables"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize, measure, recover and score one scenario.
    Roundtrip(ScenarioArgs),
    /// Check tightness and two-uniformity of a frame.
    VerifyFrame {
        /// TOML frame file; the canonical K = 2 frame when omitted.
        #[arg(long)]
        frame: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Sampling density relative to Nyquist.
    RateTable {
        #[arg(long = "k", value_delimiter = ',', default_values_t = [2usize, 3, 4, 6])]
        k: Vec<usize>,
        #[arg(long = "a", value_delimiter = ',', default_values_t = [1usize, 2, 3])]
        a: Vec<usize>,
        #[arg(long = "t-ratio", value_delimiter = ',', default_values_t = [1.0, 1.25, 1.5, 2.0])]
        t_ratio: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the roundtrip over values of one parameter.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// noise_sigma, a, K, T_ratio or J
        #[arg(long)]
        parameter: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Seeds per value, counting up from the configured seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Write the grid a scenario measures on.
    EmitGrid(ScenarioArgs),
    /// Write a scenario's intensity samples.
    EmitMeasurements(ScenarioArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = ScenarioConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            tolerance: self.tolerance,
            out: self.out.clone(),
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs a command, returning the process exit code.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<u8, CliError> {
    match cli.command {
        Command::Roundtrip(args) => roundtrip(&args, stdout),
        Command::VerifyFrame { frame, tolerance } => verify_frame(frame.as_deref(), tolerance, stdout),
        Command::RateTable { k, a, t_ratio, out } => {
            emit(&rate_table(&k, &a, &t_ratio)?, out.as_deref(), "rate_table.csv", stdout)?;
            Ok(0)
        }
        Command::Sweep {
            scenario,
            parameter,
            values,
            seeds,
        } => {
            let cfg = scenario.load()?;
            let param: SweepParameter = parameter.parse()?;
            let rows = sweep(&cfg, param, &values, seeds);
            emit(&rows_to_csv(&rows), cfg.output.dir.as_deref(), "sweep.csv", stdout)?;
            Ok(0)
        }
        Command::EmitGrid(args) => emit_acquisition(&args, stdout, |a| ("grid.csv", a.measurements.grid().to_csv())),
        Command::EmitMeasurements(args) => {
            emit_acquisition(&args, stdout, |a| ("measurements.csv", a.measurements.to_csv()))
        }
    }
}

fn write_out(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

/// Writes `text` to `dir/name` when a directory is given, otherwise to stdout.
fn emit(text: &str, dir: Option<&Path>, name: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            write_out(stdout, &format!("wrote {}\n", path.display()))
        }
        None => write_out(stdout, text),
    }
}

fn roundtrip(args: &ScenarioArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let cfg = args.load()?;
    let outcome = run_roundtrip(&cfg)?;
    match &cfg.output.dir {
        Some(dir) => {
            write_artifacts(dir, &cfg, &outcome)?;
            let err = outcome.error.map_or("n/a".to_string(), |e| format!("{e:.3e}"));
            write_out(
                stdout,
                &format!(
                    "status: {}\nphase_aligned_error: {err}\ntolerance: {:e}\nresult: {}\n",
                    outcome.status,
                    cfg.tolerances.error,
                    dir.join("result.toml").display()
                ),
            )?;
        }
        None => write_out(stdout, &render_record(&outcome.record(&cfg)))?,
    }
    Ok(if outcome.passed { 0 } else { 1 })
}

fn verify_frame(path: Option<&Path>, tolerance: f64, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let frame = match path {
        Some(p) => load_frame(p)?,
        None => FrameFamily::canonical_k2(),
    };
    let tight = frame.verify_tight(tolerance);
    let uniform = frame.verify_two_uniform(tolerance);
    let verdict = |ok: bool| if ok { "pass" } else { "fail" };
    write_out(
        stdout,
        &format!(
            "frame: K = {}, M = {}\n\
             tightness: {} (max deviation {:.3e})\n\
             two-uniformity: {} (spread {:.3e})\n\
             common squared correlation: {:.16e}\n\
             unit-norm deviation: {:.3e}\n",
            frame.dim(),
            frame.count(),
            verdict(tight.ok),
            tight.max_deviation,
            verdict(uniform.ok),
            uniform.max_spread,
            uniform.common_value,
            frame.max_norm_deviation(),
        ),
    )?;
    Ok(if tight.ok && uniform.ok { 0 } else { 1 })
}

/// Rows `K,a,T_ratio,nyquist_multiple` for every admissible combination.
pub fn rate_table(ks: &[usize], as_: &[usize], ratios: &[f64]) -> Result<String, CliError> {
    let mut out = String::from("K,a,T_ratio,nyquist_multiple\n");
    for &k in ks {
        for &a in as_ {
            if a == 0 || a >= k {
                continue;
            }
            for &ratio in ratios {
                let fig = sampling_rate(k, a, ratio, 1.0)
                    .map_err(|e| CliError::Config(format!("rate table entry ({k}, {a}, {ratio}): {e}")))?;
                out.push_str(&format!("{k},{a},{ratio:.16e},{:.16e}\n", fig.nyquist_multiple));
            }
        }
    }
    Ok(out)
}

fn emit_acquisition(
    args: &ScenarioArgs,
    stdout: &mut dyn Write,
    pick: impl Fn(&crate::scenario::Acquisition) -> (&'static str, String),
) -> Result<u8, CliError> {
    let cfg = args.load()?;
    match acquire(&cfg)? {
        Ok(acq) => {
            let (name, text) = pick(&acq);
            emit(&text, cfg.output.dir.as_deref(), name, stdout)?;
            Ok(0)
        }
        Err(AcquisitionFailure::ShiftUncertified(msg)) => {
            write_out(stdout, &format!("status: shift_uncertified\n{msg}\n"))?;
            Ok(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_table_contents() {
        let table = rate_table(&[2, 3, 6], &[1, 2], &[1.0]).unwrap();
        let rows: Vec<Vec<f64>> = table
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
            .collect();
        let find = |k: f64, a: f64| rows.iter().find(|r| r[0] == k && r[1] == a).map(|r| r[3]);
        assert_eq!(find(2.0, 1.0), Some(4.0));
        assert_eq!(find(3.0, 1.0), Some(4.5));
        assert_eq!(find(6.0, 2.0), Some(9.0));
        assert_eq!(find(2.0, 2.0), None);
    }

    #[test]
    fn rate_table_rejects_ratios_below_one() {
        assert!(rate_table(&[2], &[1], &[0.5]).is_err());
    }
}
