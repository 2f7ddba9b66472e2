//! Exact sampling of Gaussian processes with stationary increments on a
//! uniform grid.
//!
//! The increment sequence is stationary with autocovariance
//! [`increment_covariance`]; it is drawn by circulant embedding when the
//! embedded spectrum is nonnegative and by the Durbin–Levinson recursion
//! otherwise. Paths are partial sums of the increments.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::variance::VarianceFunction;

/// Eigenvalues above −`CLAMP_TOLERANCE`·max are clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-9;
/// Largest increment count accepted by the O(n²) fallback.
pub const DENSE_LIMIT: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: f64,
    pub count: usize,
    #[serde(default)]
    pub origin: f64,
}

impl GridSpec {
    pub fn new(step: f64, count: usize, origin: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Parameter(format!("grid step must be positive, got {step}")));
        }
        if count < 2 {
            return Err(Error::Parameter(format!("a grid needs at least 2 points, got {count}")));
        }
        if !origin.is_finite() {
            return Err(Error::Parameter("grid origin must be finite".into()));
        }
        Ok(GridSpec { step, count, origin })
    }

    pub fn horizon(&self) -> f64 {
        self.step * (self.count - 1) as f64
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.step
    }
}

/// Master seed and stream of the generator that produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub seed: Option<SeedRecord>,
}

/// Generator for replica `stream` under `master`. Streams are independent
/// ChaCha8 keystreams, so replica r draws the same numbers whichever worker
/// runs it.
pub fn replica_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Stationary autocovariance of the unit-step increments at lag `k`.
pub fn increment_covariance<V: VarianceFunction + ?Sized>(model: &V, delta: f64, k: usize) -> f64 {
    model.increment_covariance(delta, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMethod {
    /// Uncorrelated increments; drawn directly.
    White,
    Circulant,
    /// Durbin–Levinson recursion on the Toeplitz covariance.
    Levinson,
}

enum Kernel {
    White { sd: f64 },
    Circulant { size: usize, scale: Vec<f64>, fft: Arc<dyn Fft<f64>> },
    Levinson { cov: Vec<f64> },
}

/// Precomputed sampler for `len` consecutive increments of one model.
pub struct IncrementSampler {
    len: usize,
    kernel: Kernel,
    /// Most negative eigenvalue relative to the largest, when circulant
    /// embedding was attempted.
    pub min_eigen_ratio: Option<f64>,
}

impl std::fmt::Debug for IncrementSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IncrementSampler")
            .field("len", &self.len)
            .field("method", &self.method())
            .field("min_eigen_ratio", &self.min_eigen_ratio)
            .finish()
    }
}

/// Scratch space reused between draws by one worker.
#[derive(Default)]
pub struct Workspace {
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    phi: Vec<f64>,
    prev: Vec<f64>,
    /// Scratch increments for callers that keep one buffer per worker.
    pub increments: Vec<f64>,
}

impl IncrementSampler {
    pub fn new<V: VarianceFunction + ?Sized>(model: &V, delta: f64, len: usize) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Parameter(format!("step must be positive, got {delta}")));
        }
        let cov: Vec<f64> = (0..len.max(1)).map(|k| model.increment_covariance(delta, k)).collect();
        Self::from_covariance(cov)
    }

    /// Sampler for a stationary sequence with autocovariance `cov[0..n]`.
    pub fn from_covariance(cov: Vec<f64>) -> Result<Self> {
        Self::build(cov, None)
    }

    /// As [`from_covariance`](Self::from_covariance) but with a fixed method;
    /// `White` is refused unless the covariance really is white.
    pub fn with_method(cov: Vec<f64>, method: SamplingMethod) -> Result<Self> {
        Self::build(cov, Some(method))
    }

    fn build(cov: Vec<f64>, forced: Option<SamplingMethod>) -> Result<Self> {
        let len = cov.len();
        if len == 0 {
            return Err(Error::Parameter("need at least one increment".into()));
        }
        if !(cov[0] > 0.0) || cov.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("increment variance must be positive and finite".into()));
        }
        let white = cov[1..].iter().all(|&c| c.abs() <= 1e-15 * cov[0]);
        match forced {
            Some(SamplingMethod::White) if !white => {
                return Err(Error::Parameter("covariance is not white".into()));
            }
            None | Some(SamplingMethod::White) if white => {
                return Ok(IncrementSampler { len, kernel: Kernel::White { sd: cov[0].sqrt() }, min_eigen_ratio: None });
            }
            Some(SamplingMethod::Levinson) => return Self::levinson(cov, None),
            _ => {}
        }

        let size = (2 * (len - 1)).max(2).next_power_of_two();
        let mut row = vec![Complex::new(0.0, 0.0); size];
        for (j, slot) in row.iter_mut().enumerate() {
            let lag = if j <= size / 2 { j } else { size - j };
            slot.re = if lag < len { cov[lag] } else { 0.0 };
        }
        // Lags ≥ len are zero-padded; the first len−1 lags (all that the
        // output uses) are reproduced exactly.
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        fft.process(&mut row);
        let max = row.iter().map(|z| z.re).fold(f64::MIN, f64::max);
        let min = row.iter().map(|z| z.re).fold(f64::MAX, f64::min);
        let ratio = min / max;
        if min < -CLAMP_TOLERANCE * max {
            if forced == Some(SamplingMethod::Circulant) {
                return Err(Error::Numeric(format!(
                    "circulant embedding of size {size} has eigenvalue ratio {ratio:e}"
                )));
            }
            return Self::levinson(cov, Some((size, ratio)));
        }
        let scale = row.iter().map(|z| (z.re.max(0.0) / size as f64).sqrt()).collect();
        Ok(IncrementSampler { len, kernel: Kernel::Circulant { size, scale, fft }, min_eigen_ratio: Some(ratio) })
    }

    fn levinson(cov: Vec<f64>, failed: Option<(usize, f64)>) -> Result<Self> {
        let len = cov.len();
        if len > DENSE_LIMIT {
            let why = match failed {
                Some((size, ratio)) => format!(
                    "circulant embedding of size {size} is not nonnegative definite (eigenvalue ratio {ratio:e}); "
                ),
                None => String::new(),
            };
            return Err(Error::Capacity(format!(
                "{why}dense fallback refused for {len} increments (limit {DENSE_LIMIT})"
            )));
        }
        Ok(IncrementSampler {
            len,
            kernel: Kernel::Levinson { cov },
            min_eigen_ratio: failed.map(|f| f.1),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn method(&self) -> SamplingMethod {
        match self.kernel {
            Kernel::White { .. } => SamplingMethod::White,
            Kernel::Circulant { .. } => SamplingMethod::Circulant,
            Kernel::Levinson { .. } => SamplingMethod::Levinson,
        }
    }

    /// One exact draw of `self.len()` increments into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, ws: &mut Workspace, out: &mut [f64]) -> Result<()> {
        if out.len() != self.len {
            return Err(Error::Parameter(format!(
                "output holds {} increments, sampler draws {}",
                out.len(),
                self.len
            )));
        }
        match &self.kernel {
            Kernel::White { sd } => {
                for x in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = sd * z;
                }
            }
            Kernel::Circulant { size, scale, fft } => {
                ws.buf.resize(*size, Complex::new(0.0, 0.0));
                for (slot, &s) in ws.buf.iter_mut().zip(scale) {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    *slot = Complex::new(s * a, s * b);
                }
                ws.scratch.resize(fft.get_inplace_scratch_len(), Complex::new(0.0, 0.0));
                fft.process_with_scratch(&mut ws.buf, &mut ws.scratch);
                for (x, z) in out.iter_mut().zip(&ws.buf) {
                    *x = z.re;
                }
            }
            Kernel::Levinson { cov } => levinson_draw(cov, rng, ws, out)?,
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len];
        self.sample_into(rng, &mut Workspace::default(), &mut out)?;
        Ok(out)
    }
}

/// Sequential prediction: x_j = Σ φ_{j,i} x_{j−i} + √v_j z_j, with the
/// coefficients updated in place by the Durbin–Levinson recursion.
fn levinson_draw<R: Rng + ?Sized>(cov: &[f64], rng: &mut R, ws: &mut Workspace, out: &mut [f64]) -> Result<()> {
    let n = cov.len();
    ws.phi.clear();
    ws.phi.resize(n, 0.0);
    ws.prev.clear();
    ws.prev.resize(n, 0.0);
    let mut v = cov[0];
    let z: f64 = rng.sample(StandardNormal);
    out[0] = v.sqrt() * z;
    for j in 1..n {
        // reflection coefficient
        let mut acc = cov[j];
        for i in 1..j {
            acc -= ws.phi[i] * cov[j - i];
        }
        let kappa = acc / v;
        ws.prev[1..j].copy_from_slice(&ws.phi[1..j]);
        for i in 1..j {
            ws.phi[i] = ws.prev[i] - kappa * ws.prev[j - i];
        }
        ws.phi[j] = kappa;
        v *= 1.0 - kappa * kappa;
        if !(v > 0.0) {
            if v > -1e-12 * cov[0] {
                v = 0.0;
            } else {
                return Err(Error::Numeric(format!(
                    "increment covariance is not positive definite at order {j}"
                )));
            }
        }
        let mut mean = 0.0;
        for i in 1..=j {
            mean += ws.phi[i] * out[j - i];
        }
        let z: f64 = rng.sample(StandardNormal);
        out[j] = mean + v.sqrt() * z;
    }
    Ok(())
}

/// One draw of the `grid.count − 1` increments of `model` on `grid`.
pub fn sample_increments<V: VarianceFunction + ?Sized>(
    model: &V,
    grid: &GridSpec,
    seed: SeedRecord,
) -> Result<Vec<f64>> {
    let sampler = IncrementSampler::new(model, grid.step, grid.count - 1)?;
    let mut rng = replica_rng(seed.master, seed.stream);
    sampler.sample(&mut rng)
}

/// Partial sums with X(t₀) = 0. Each prefix is a Neumaier-compensated sum,
/// so the last value equals the compensated total of the increments.
pub fn assemble_path(increments: &[f64], grid: GridSpec) -> Result<SampledPath> {
    if increments.len() + 1 != grid.count {
        return Err(Error::Parameter(format!(
            "{} increments do not fit a grid of {} points",
            increments.len(),
            grid.count
        )));
    }
    let mut values = Vec::with_capacity(grid.count);
    values.push(0.0);
    cumulative_into(increments, &mut values);
    Ok(SampledPath { grid, values, seed: None })
}

/// Appends the running compensated sums of `increments` to `out`.
pub fn cumulative_into(increments: &[f64], out: &mut Vec<f64>) {
    let mut acc = CompensatedSum::new();
    for &dx in increments {
        acc.add(dx);
        out.push(acc.value());
    }
}

/// Draws a full path in one call.
pub fn sample_path<V: VarianceFunction + ?Sized>(model: &V, grid: GridSpec, seed: SeedRecord) -> Result<SampledPath> {
    let inc = sample_increments(model, &grid, seed)?;
    let mut path = assemble_path(&inc, grid)?;
    path.seed = Some(seed);
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variance::{SrdCorrelation, VarianceModel};

    #[test]
    fn covariance_examples() {
        let bm = VarianceModel::fbm(0.5).unwrap();
        assert_eq!(increment_covariance(&bm, 1.0, 3), 0.0);
        assert_eq!(increment_covariance(&bm, 0.25, 0), 0.25);
        let lin = VarianceModel::fbm(1.0).unwrap();
        assert!((increment_covariance(&lin, 1.0, 2) - 1.0).abs() < 1e-15);
        let h75 = VarianceModel::fbm(0.75).unwrap();
        let want = 0.5 * (2f64.powf(1.5) - 2.0);
        assert!((increment_covariance(&h75, 1.0, 1) - want).abs() < 1e-15);
        assert!((want - 0.414_213_562_373_095).abs() < 1e-12);
    }

    #[test]
    fn brownian_uses_white_kernel() {
        let bm = VarianceModel::fbm(0.5).unwrap();
        let s = IncrementSampler::new(&bm, 0.01, 100).unwrap();
        assert_eq!(s.method(), SamplingMethod::White);
        let h = VarianceModel::fbm(0.3).unwrap();
        assert_eq!(IncrementSampler::new(&h, 0.01, 100).unwrap().method(), SamplingMethod::Circulant);
    }

    #[test]
    fn assemble_examples() {
        let g = GridSpec::new(1.0, 4, 0.0).unwrap();
        assert_eq!(assemble_path(&[1.0, 1.0, 1.0], g).unwrap().values, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(assemble_path(&[0.0; 3], g).unwrap().values, vec![0.0; 4]);
        assert!(assemble_path(&[1.0], g).is_err());
    }

    #[test]
    fn gaussian_covariance_falls_back_to_levinson() {
        let cov: Vec<f64> = (0..16).map(|k| (-(k as f64 / 10.0).powi(2)).exp()).collect();
        let s = IncrementSampler::from_covariance(cov.clone()).unwrap();
        assert_eq!(s.method(), SamplingMethod::Levinson);
        assert!(s.min_eigen_ratio.unwrap() < -CLAMP_TOLERANCE);
        assert!(IncrementSampler::with_method(cov, SamplingMethod::Circulant).is_err());
        let big: Vec<f64> = (0..DENSE_LIMIT + 1).map(|k| (-(k as f64 / 5000.0).powi(2)).exp()).collect();
        match IncrementSampler::from_covariance(big) {
            Err(Error::Capacity(msg)) => assert!(msg.contains("circulant embedding")),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn levinson_and_circulant_agree_in_law() {
        let h = VarianceModel::fbm(0.75).unwrap();
        let cov: Vec<f64> = (0..8).map(|k| h.increment_covariance(1.0, k)).collect();
        let a = IncrementSampler::with_method(cov.clone(), SamplingMethod::Circulant).unwrap();
        let b = IncrementSampler::with_method(cov.clone(), SamplingMethod::Levinson).unwrap();
        let reps = 40_000;
        let mut ws = Workspace::default();
        for s in [&a, &b] {
            let mut acc = [0.0f64; 3];
            let mut out = vec![0.0; 8];
            for r in 0..reps {
                let mut rng = replica_rng(9, r);
                s.sample_into(&mut rng, &mut ws, &mut out).unwrap();
                for lag in 0..3 {
                    acc[lag] += out[2] * out[2 + lag];
                }
            }
            for lag in 0..3 {
                let est = acc[lag] / reps as f64;
                // sd of a product of unit-ish Gaussians is ≤ √2
                assert!((est - cov[lag]).abs() < 5.0 * 1.5 / (reps as f64).sqrt(), "lag {lag}: {est}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let h = VarianceModel::fbm(0.3).unwrap();
        let g = GridSpec::new(0.5, 300, 0.0).unwrap();
        let seed = SeedRecord { master: 42, stream: 7 };
        let a = sample_path(&h, g, seed).unwrap();
        let b = sample_path(&h, g, seed).unwrap();
        assert_eq!(a, b);
        let c = sample_path(&h, g, SeedRecord { master: 42, stream: 8 }).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn srd_embedding_is_nonnegative() {
        let m = VarianceModel::srd(SrdCorrelation::exp_power(1.0).unwrap()).unwrap();
        let s = IncrementSampler::new(&m, 0.1, 4096).unwrap();
        assert_eq!(s.method(), SamplingMethod::Circulant);
    }
}
