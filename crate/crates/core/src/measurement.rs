//! Simulated acquisition: modulation, intensity detection and frequency sampling.
//!
//! Branch `m` multiplies the signal by `p_m(t) = sum_k conj(alpha_mk) e^{i lambda_k t}`
//! and records `c_nm = |y_m^(n beta)|^2 = |<x_n, alpha_m>|^2`, where
//! `x_n = (x^(n beta + lambda_1), ..., x^(n beta + lambda_K))`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{inner, FrameFamily};
use crate::grid::InterpolationGrid;
use crate::quadrature::simpson;
use crate::signal::{L1BoundedSignal, TimeLimitedSignal};

/// Modulators `p_m` built from a frame and the grid offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorBank {
    frame: FrameFamily,
    grid: InterpolationGrid,
}

impl ModulatorBank {
    pub fn new(frame: FrameFamily, grid: InterpolationGrid) -> Result<Self> {
        if frame.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                actual: frame.dim(),
            });
        }
        Ok(Self { frame, grid })
    }

    pub fn frame(&self) -> &FrameFamily {
        &self.frame
    }

    pub fn grid(&self) -> &InterpolationGrid {
        &self.grid
    }

    /// `p_m(t)` for the 0-based branch index `m`.
    pub fn modulator_eval(&self, m: usize, t: f64) -> Result<Complex64> {
        if m >= self.frame.count() {
            return Err(Error::OutOfRange {
                index: m as i64,
                min: 0,
                max: self.frame.count() as i64 - 1,
            });
        }
        Ok(self
            .frame
            .vector(m)
            .iter()
            .zip(self.grid.offsets())
            .map(|(a, l)| a.conj() * (Complex64::i() * l * t).exp())
            .sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    Additive { sigma: f64, seed: u64 },
}

/// Parameters of the cosine-augmented acquisition `y^(z) = L cos(T' z / 2) - x^(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    pub l1_bound: f64,
    pub t_prime: f64,
}

impl Augmentation {
    pub fn cosine(&self, z: Complex64) -> Complex64 {
        (z * (self.t_prime / 2.0)).cos()
    }

    /// `y^(z)` given `x^(z)`.
    pub fn apply(&self, z: Complex64, x_hat: Complex64) -> Complex64 {
        self.cosine(z) * self.l1_bound - x_hat
    }
}

/// Intensity samples `c_nm` for blocks `n_min..=n_max` and branches `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    grid: InterpolationGrid,
    frame: FrameFamily,
    noise: NoiseModel,
    augmentation: Option<Augmentation>,
    /// Row-major by block then branch.
    samples: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasurementHeader {
    noise: NoiseModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    augmentation: Option<Augmentation>,
    grid: InterpolationGrid,
    frame: FrameFamily,
}

const HEADER_PREFIX: &str = "# ";

impl MeasurementSet {
    pub fn new(
        grid: InterpolationGrid,
        frame: FrameFamily,
        samples: Vec<f64>,
        noise: NoiseModel,
        augmentation: Option<Augmentation>,
    ) -> Result<Self> {
        if frame.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                actual: frame.dim(),
            });
        }
        let expected = grid.block_count() * frame.count();
        if samples.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: samples.len(),
            });
        }
        if noise == NoiseModel::None {
            if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
                return Err(Error::NegativeIntensity { index, value });
            }
        }
        Ok(Self {
            grid,
            frame,
            noise,
            augmentation,
            samples,
        })
    }

    pub fn grid(&self) -> &InterpolationGrid {
        &self.grid
    }

    pub fn frame(&self) -> &FrameFamily {
        &self.frame
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn augmentation(&self) -> Option<Augmentation> {
        self.augmentation
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// The `M` samples of block `n`.
    pub fn block(&self, n: i64) -> Result<&[f64]> {
        let (n_min, n_max) = self.grid.block_range();
        if n < n_min || n > n_max {
            return Err(Error::OutOfRange {
                index: n,
                min: n_min,
                max: n_max,
            });
        }
        let m = self.frame.count();
        let start = (n - n_min) as usize * m;
        Ok(&self.samples[start..start + m])
    }

    pub fn get(&self, n: i64, m: usize) -> Result<f64> {
        self.block(n)?.get(m).copied().ok_or(Error::OutOfRange {
            index: m as i64,
            min: 0,
            max: self.frame.count() as i64 - 1,
        })
    }

    /// CSV with a `# `-prefixed metadata header, then rows `n,m,c` (`m` 1-based).
    pub fn to_csv(&self) -> String {
        let header = MeasurementHeader {
            noise: self.noise,
            augmentation: self.augmentation,
            grid: self.grid.clone(),
            frame: self.frame.clone(),
        };
        let meta = toml::to_string(&header).expect("measurement header serializes");
        let mut out = String::new();
        for line in meta.lines() {
            out.push_str(HEADER_PREFIX);
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("n,m,c\n");
        let (n_min, _) = self.grid.block_range();
        let count = self.frame.count();
        for (idx, c) in self.samples.iter().enumerate() {
            let n = n_min + (idx / count) as i64;
            out.push_str(&format!("{},{},{:.16e}\n", n, idx % count + 1, c));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = String::new();
        let mut body = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                meta.push_str(rest.strip_prefix(' ').unwrap_or(rest));
                meta.push('\n');
            } else if !line.trim().is_empty() {
                body.push(line);
            }
        }
        let header: MeasurementHeader =
            toml::from_str(&meta).map_err(|e| Error::Format(format!("measurement header: {e}")))?;
        let mut rows = body.into_iter();
        match rows.next().map(str::trim) {
            Some("n,m,c") => {}
            other => return Err(Error::Format(format!("expected column header n,m,c, got {other:?}"))),
        }
        let (n_min, _) = header.grid.block_range();
        let count = header.frame.count();
        let mut samples = vec![f64::NAN; header.grid.block_count() * count];
        let mut seen = 0usize;
        for (lineno, row) in rows.enumerate() {
            let fields: Vec<&str> = row.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Format(format!("row {}: expected 3 fields", lineno + 1)));
            }
            let parse_err = |what: &str| Error::Format(format!("row {}: bad {what}", lineno + 1));
            let n: i64 = fields[0].parse().map_err(|_| parse_err("n"))?;
            let m: usize = fields[1].parse().map_err(|_| parse_err("m"))?;
            let c: f64 = fields[2].parse().map_err(|_| parse_err("c"))?;
            if n < n_min || m == 0 || m > count {
                return Err(Error::Format(format!(
                    "row {}: index ({n}, {m}) out of range",
                    lineno + 1
                )));
            }
            let idx = (n - n_min) as usize * count + (m - 1);
            if idx >= samples.len() {
                return Err(Error::Format(format!("row {}: block {n} out of range", lineno + 1)));
            }
            samples[idx] = c;
            seen += 1;
        }
        if seen != samples.len() || samples.iter().any(|v| v.is_nan()) {
            return Err(Error::Format(format!("expected {} samples, got {seen}", samples.len())));
        }
        Self::new(header.grid, header.frame, samples, header.noise, header.augmentation)
    }
}

/// `x_n`: the transform at the `K` points of block `n`.
pub fn block_vector(x: &TimeLimitedSignal, grid: &InterpolationGrid, n: i64) -> Result<Vec<Complex64>> {
    Ok(grid
        .block_points(n)?
        .into_iter()
        .map(|z| x.fourier_transform(z))
        .collect())
}

fn sample_blocks<F>(bank: &ModulatorBank, transform: F) -> Vec<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let grid = bank.grid();
    let (n_min, n_max) = grid.block_range();
    let mut samples = Vec::with_capacity(grid.block_count() * bank.frame().count());
    for n in n_min..=n_max {
        let v: Vec<Complex64> = (0..grid.dim()).map(|k| transform(grid.point(n, k))).collect();
        samples.extend(bank.frame().vectors().iter().map(|a| inner(&v, a).norm_sqr()));
    }
    samples
}

/// Noiseless intensities via the inner-product form.
pub fn measure(x: &TimeLimitedSignal, bank: &ModulatorBank) -> MeasurementSet {
    let samples = sample_blocks(bank, |z| x.fourier_transform(z));
    MeasurementSet {
        grid: bank.grid.clone(),
        frame: bank.frame.clone(),
        noise: NoiseModel::None,
        augmentation: None,
        samples,
    }
}

/// One sample computed by modulating in time and integrating by quadrature.
pub fn measure_via_modulation_oracle(
    x: &TimeLimitedSignal,
    bank: &ModulatorBank,
    n: i64,
    m: usize,
    nodes: usize,
) -> Result<f64> {
    if nodes < 2 {
        return Err(Error::InvalidParameter(format!("nodes must be >= 2, got {nodes}")));
    }
    bank.grid().block_points(n)?;
    bank.modulator_eval(m, 0.0)?;
    let freq = n as f64 * bank.grid().block_spacing();
    let half = x.interval_length() / 2.0;
    let y_hat = simpson(
        |t| {
            let p = bank.modulator_eval(m, t).expect("branch index checked");
            p * x.evaluate_time(t) * Complex64::from_polar(1.0, freq * t)
        },
        -half,
        half,
        nodes,
    );
    Ok(y_hat.norm_sqr())
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every sample and clamps at zero.
pub fn add_noise(ms: &MeasurementSet, sigma: f64, seed: u64) -> Result<MeasurementSet> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = ms
        .samples
        .iter()
        .map(|&c| {
            let noisy = c + normal.sample(&mut rng);
            noisy.max(0.0)
        })
        .collect();
    Ok(MeasurementSet {
        samples,
        noise: NoiseModel::Additive { sigma, seed },
        ..ms.clone()
    })
}

/// Intensities of `y^(z) = L cos(T' z / 2) - x^(z)` at the grid points.
pub fn measure_augmented(xb: &L1BoundedSignal, bank: &ModulatorBank, t_prime: f64) -> Result<MeasurementSet> {
    let t = xb.signal().interval_length();
    if !(t_prime > t) {
        return Err(Error::InvalidParameter(format!(
            "augmentation needs T' > T, got T' = {t_prime}, T = {t}"
        )));
    }
    let aug = Augmentation {
        l1_bound: xb.l1_bound(),
        t_prime,
    };
    let samples = sample_blocks(bank, |z| aug.apply(z, xb.signal().fourier_transform(z)));
    Ok(MeasurementSet {
        grid: bank.grid.clone(),
        frame: bank.frame.clone(),
        noise: NoiseModel::None,
        augmentation: Some(aug),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn canonical_bank(n_min: i64, n_max: i64) -> ModulatorBank {
        let grid = InterpolationGrid::shannon(1.0, 2, 1, n_min, n_max, 0.0).unwrap();
        ModulatorBank::new(FrameFamily::canonical_k2(), grid).unwrap()
    }

    #[test]
    fn modulator_examples() {
        let grid = InterpolationGrid::shannon(1.0, 2, 1, 0, 1, 0.0).unwrap();
        let unit = FrameFamily::new(vec![vec![c(1.0, 0.0), c(0.0, 0.0)]; 4]).unwrap();
        let bank = ModulatorBank::new(unit, grid).unwrap();
        assert_eq!(bank.modulator_eval(0, 0.0).unwrap(), c(1.0, 0.0));

        let bank = canonical_bank(0, 1);
        let f = FrameFamily::canonical_k2();
        let want = f.vector(0)[0].conj() + f.vector(0)[1].conj();
        assert!((bank.modulator_eval(0, 0.0).unwrap() - want).norm() < 1e-15);
        assert!(bank.modulator_eval(4, 0.0).is_err());

        // real coefficients and real offsets: p(-t) = conj(p(t))
        let real = FrameFamily::new(vec![vec![c(0.3, 0.0), c(-0.8, 0.0)]; 4]).unwrap();
        let bank = ModulatorBank::new(real, InterpolationGrid::shannon(1.0, 2, 1, 0, 1, 0.0).unwrap()).unwrap();
        for t in [0.1, 0.37, 0.5] {
            let p = bank.modulator_eval(0, t).unwrap();
            let q = bank.modulator_eval(0, -t).unwrap();
            assert!((p - q.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn bank_rejects_dimension_mismatch() {
        let grid = InterpolationGrid::shannon(1.0, 3, 1, 0, 1, 0.0).unwrap();
        assert!(ModulatorBank::new(FrameFamily::canonical_k2(), grid).is_err());
    }

    #[test]
    fn zero_signal_gives_zero_samples() {
        let bank = canonical_bank(-3, 3);
        let ms = measure(&TimeLimitedSignal::zeros(1.0, 4).unwrap(), &bank);
        assert!(ms.samples().iter().all(|&c| c == 0.0));
        assert_eq!(ms.samples().len(), 7 * 4);
    }

    #[test]
    fn constant_signal_only_lights_the_origin() {
        // x^ = sinc(z/2) vanishes at every nonzero multiple of 2 pi
        let x = TimeLimitedSignal::new(1.0, vec![c(1.0, 0.0)]).unwrap();
        let bank = canonical_bank(-4, 4);
        let ms = measure(&x, &bank);
        for n in -4..=4 {
            let touches_origin = bank.grid().block_points(n).unwrap().iter().any(|p| p.norm() < 1e-9);
            let energy: f64 = ms.block(n).unwrap().iter().sum();
            if touches_origin {
                assert!(energy > 0.1, "block {n}");
            } else {
                assert!(energy < 1e-28, "block {n}: {energy}");
            }
        }
    }

    #[test]
    fn global_phase_is_invisible() {
        let x = TimeLimitedSignal::random(4, 1.0, 3).unwrap();
        let bank = canonical_bank(-6, 3);
        let base = measure(&x, &bank);
        for theta in [0.3, PI / 2.0, 2.0] {
            let rotated = measure(&x.scaled(Complex64::from_polar(1.0, theta)), &bank);
            for (a, b) in base.samples().iter().zip(rotated.samples()) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + a));
            }
        }
    }

    #[test]
    fn oracle_matches_inner_product_form() {
        let x = TimeLimitedSignal::random(4, 1.0, 11).unwrap();
        let bank = canonical_bank(-2, 2);
        let ms = measure(&x, &bank);
        let oracle = measure_via_modulation_oracle(&x, &bank, 0, 0, 4001).unwrap();
        let direct = ms.get(0, 0).unwrap();
        assert!((oracle - direct).abs() <= 1e-6 * (1.0 + direct), "{oracle} vs {direct}");

        let zero = TimeLimitedSignal::zeros(1.0, 2).unwrap();
        assert_eq!(measure_via_modulation_oracle(&zero, &bank, 1, 2, 101).unwrap(), 0.0);
        assert!(measure_via_modulation_oracle(&x, &bank, 3, 0, 101).is_err());
        assert!(measure_via_modulation_oracle(&x, &bank, 0, 4, 101).is_err());
    }

    #[test]
    fn noise_is_deterministic_and_clamped() {
        let x = TimeLimitedSignal::random(3, 1.0, 2).unwrap();
        let ms = measure(&x, &canonical_bank(-5, 2));
        let same = add_noise(&ms, 0.0, 9).unwrap();
        assert_eq!(same.samples(), ms.samples());
        let a = add_noise(&ms, 0.5, 9).unwrap();
        let b = add_noise(&ms, 0.5, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.samples().iter().all(|&v| v >= 0.0));
        assert_eq!(a.noise(), NoiseModel::Additive { sigma: 0.5, seed: 9 });
        assert!(add_noise(&ms, -1.0, 9).is_err());
    }

    #[test]
    fn noise_has_requested_rms() {
        let grid = InterpolationGrid::shannon(1.0, 2, 1, 0, 2499, 0.0).unwrap();
        let frame = FrameFamily::canonical_k2();
        let samples = vec![1.0; grid.block_count() * 4];
        let ms = MeasurementSet::new(grid, frame, samples, NoiseModel::None, None).unwrap();
        let noisy = add_noise(&ms, 1e-3, 17).unwrap();
        let rms =
            (noisy.samples().iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() / noisy.samples().len() as f64).sqrt();
        assert!((rms - 1e-3).abs() < 0.2e-3, "rms = {rms}");
    }

    #[test]
    fn augmented_examples() {
        let zero = TimeLimitedSignal::zeros(1.0, 2).unwrap();
        let xb = L1BoundedSignal::with_margin(zero, 0.0, 101).unwrap();
        assert_eq!(xb.l1_bound(), 1.0);
        let grid = InterpolationGrid::shannon(1.25, 2, 1, -3, 3, 0.0).unwrap();
        let frame = FrameFamily::canonical_k2();
        let bank = ModulatorBank::new(frame.clone(), grid.clone()).unwrap();
        let ms = measure_augmented(&xb, &bank, 1.25).unwrap();
        for n in -3..=3 {
            let u: Vec<Complex64> = grid
                .block_points(n)
                .unwrap()
                .iter()
                .map(|z| (z * 0.625).cos())
                .collect();
            let want = frame.intensities(&u).unwrap();
            for (a, b) in ms.block(n).unwrap().iter().zip(want) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert_eq!(
            ms.augmentation(),
            Some(Augmentation {
                l1_bound: 1.0,
                t_prime: 1.25
            })
        );
        assert!(measure_augmented(&xb, &bank, 1.0).is_err());
    }

    #[test]
    fn augmentation_can_vanish_on_real_axis() {
        // cos(T' z / 2) = 0 at z = pi / T'; pick x with x^(pi / T') = 0 too
        let t_prime = 1.25;
        let z0 = c(PI / t_prime, 0.0);
        let x = TimeLimitedSignal::random(3, 1.0, 5)
            .unwrap()
            .with_transform_zeros(&[z0])
            .unwrap();
        let aug = Augmentation { l1_bound: 2.0, t_prime };
        assert!(aug.apply(z0, x.fourier_transform(z0)).norm() < 1e-12);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let x = TimeLimitedSignal::random(3, 1.0, 8).unwrap();
        let bank = canonical_bank(-4, 1);
        let ms = add_noise(&measure(&x, &bank), 1e-4, 3).unwrap();
        let text = ms.to_csv();
        assert!(text.starts_with("# "));
        assert!(text.contains("\nn,m,c\n"));
        let back = MeasurementSet::from_csv(&text).unwrap();
        assert_eq!(back, ms);
    }

    #[test]
    fn csv_rejects_missing_rows() {
        let x = TimeLimitedSignal::random(1, 1.0, 8).unwrap();
        let text = measure(&x, &canonical_bank(0, 1)).to_csv();
        let truncated: String = text
            .lines()
            .take(text.lines().count() - 1)
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(MeasurementSet::from_csv(&truncated).is_err());
    }
}
