//! Monte Carlo estimation of generalized Pickands constants
//! 𝓗_V(E) = E exp(sup_{t∈E}(√2 V(t) − σ_V²(t))) on windows E = [0, S] and on
//! their lattices θℤ ∩ [0, S], and of the rate 𝓗_V = lim 𝓗_V([0, S])/S.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{Asymptotics, PickandsProcess};
use crate::error::{Error, Result};
use crate::mc::{elapsed, fingerprint, run_replicas, McEstimate};
use crate::sampling::{cumulative_into, replica_rng, IncrementSampler, Workspace};
use crate::variance::{power_second_difference, VarianceFunction, VarianceModel};

/// Points per unit window on the simulation grid: step ≤ S/2¹².
pub const WINDOW_RESOLUTION: f64 = 4096.0;

/// The process V = η whose constant is estimated.
#[derive(Debug, Clone)]
pub struct Eta {
    pub process: PickandsProcess,
    base: Option<VarianceModel>,
}

impl Eta {
    pub fn fbm(index: f64) -> Result<Self> {
        if !(index > 0.0 && index <= 1.0) {
            return Err(Error::Parameter(format!("fBm index must lie in (0, 1], got {index}")));
        }
        Ok(Eta { process: PickandsProcess::Fbm { index }, base: None })
    }

    /// amplitude · X(time_scale · t) for the input process X of `model`.
    pub fn scaled_input(model: &VarianceModel, amplitude: f64, time_scale: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !(time_scale > 0.0) {
            return Err(Error::Parameter("amplitude and time scale must be positive".into()));
        }
        Ok(Eta { process: PickandsProcess::ScaledInput { amplitude, time_scale }, base: Some(model.clone()) })
    }

    /// The η selected by the exponents of a (model, c) pair.
    pub fn for_constants(asym: &Asymptotics) -> Result<Self> {
        match asym.constants().eta {
            PickandsProcess::Fbm { index } => Self::fbm(index),
            PickandsProcess::ScaledInput { amplitude, time_scale } => {
                Self::scaled_input(asym.model(), amplitude, time_scale)
            }
        }
    }

    /// The short-range form (cG/√2)·X(←σ(√2/(cG))·t), stated directly in
    /// terms of G for integrated short-range inputs.
    pub fn srd_form(model: &VarianceModel, c: f64) -> Result<Self> {
        let corr = model
            .srd_correlation()
            .ok_or_else(|| Error::Parameter("the short-range form needs an integrated short-range model".into()))?;
        let g = corr.g();
        let level = std::f64::consts::SQRT_2 / (c * g);
        Self::scaled_input(model, c * g / std::f64::consts::SQRT_2, model.sigma_inverse(level)?)
    }
}

impl VarianceFunction for Eta {
    fn variance(&self, t: f64) -> f64 {
        match self.process {
            PickandsProcess::Fbm { index } => {
                let t = t.abs();
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(2.0 * index)
                }
            }
            PickandsProcess::ScaledInput { amplitude, time_scale } => {
                let base = self.base.as_ref().expect("scaled input carries its model");
                amplitude * amplitude * base.variance(time_scale * t)
            }
        }
    }

    fn increment_covariance(&self, delta: f64, k: usize) -> f64 {
        match self.process {
            PickandsProcess::Fbm { index } => delta.powf(2.0 * index) * power_second_difference(index, k),
            PickandsProcess::ScaledInput { amplitude, time_scale } => {
                let base = self.base.as_ref().expect("scaled input carries its model");
                amplitude * amplitude * base.increment_covariance(time_scale * delta, k)
            }
        }
    }
}

/// One Monte Carlo configuration for a single window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PickandsSpec {
    pub process: PickandsProcess,
    /// Window length S.
    pub window: f64,
    /// Lattice step θ; 0 means the finest simulation grid.
    pub theta: f64,
    pub replicas: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    #[serde(rename = "S")]
    pub window: f64,
    pub theta: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub spec: PickandsSpec,
    /// 𝓗^θ([0, S]) per window.
    pub ladder: Vec<LadderPoint>,
    /// Intercept of the least-squares line of 𝓗^θ([0, S])/S against 1/S.
    pub extrapolated: McEstimate,
    pub stderr: f64,
    /// Simulation step used for every window.
    pub step: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Shared-noise evaluation of exp(sup(√2V − σ_V²)) over several windows and
/// lattice strides from one simulated path per replica.
struct SupKernel {
    step: f64,
    /// Last grid index of each window.
    ends: Vec<usize>,
    /// Lattice stride (in grid steps) of each θ.
    strides: Vec<usize>,
    drift: Vec<f64>,
    sampler: Option<IncrementSampler>,
}

impl SupKernel {
    fn new(eta: &Eta, windows: &[f64], thetas: &[f64]) -> Result<Self> {
        if windows.is_empty() || thetas.is_empty() {
            return Err(Error::Parameter("need at least one window and one theta".into()));
        }
        if windows.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Parameter("window lengths must be positive".into()));
        }
        if thetas.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::Parameter("theta must be nonnegative".into()));
        }
        let s_min = windows.iter().cloned().fold(f64::INFINITY, f64::min);
        let s_max = windows.iter().cloned().fold(0.0, f64::max);
        let coarse = s_min / WINDOW_RESOLUTION;
        // common step: no coarser than S/2¹² and dividing every positive θ
        let mut step = coarse;
        for &th in thetas.iter().filter(|&&t| t > 0.0) {
            step = step.min(th / (th / coarse).ceil());
        }
        let strides = thetas
            .iter()
            .map(|&th| {
                if th == 0.0 {
                    return Ok(1);
                }
                let j = (th / step).round();
                if ((th / step) - j).abs() > 1e-6 * j {
                    return Err(Error::Parameter(format!(
                        "theta values {thetas:?} are not commensurate on a common grid"
                    )));
                }
                Ok(j as usize)
            })
            .collect::<Result<Vec<_>>>()?;
        let ends: Vec<usize> = windows.iter().map(|&s| ((s / step) * (1.0 + 1e-12)).floor() as usize).collect();
        let n = ends.iter().max().copied().unwrap_or(0) + 1;
        if n > 1 << 24 {
            return Err(Error::Capacity(format!("window {s_max} needs {n} grid points")));
        }
        let analytic = matches!(eta.process, PickandsProcess::Fbm { index } if index == 1.0);
        let (drift, sampler) = if analytic {
            (Vec::new(), None)
        } else {
            let drift = (0..n).map(|k| eta.variance(k as f64 * step)).collect();
            (drift, Some(IncrementSampler::new(eta, step, n - 1)?))
        };
        Ok(SupKernel { step, ends, strides, drift, sampler })
    }

    /// exp of the supremum for each (window, stride), window-major.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, ws: &mut Workspace, path: &mut Vec<f64>, inc: &mut Vec<f64>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.ends.len() * self.strides.len());
        let Some(sampler) = &self.sampler else {
            // V(t) = tN: the lattice supremum of √2 tN − t² sits next to the vertex
            let z: f64 = rng.sample(StandardNormal);
            for &end in &self.ends {
                for &j in &self.strides {
                    let h = j as f64 * self.step;
                    let kmax = (end / j) as f64;
                    let d = |k: f64| {
                        let t = k * h;
                        std::f64::consts::SQRT_2 * t * z - t * t
                    };
                    let best = if z <= 0.0 {
                        0.0
                    } else {
                        let v = (z / std::f64::consts::SQRT_2) / h;
                        let lo = v.floor().min(kmax);
                        let hi = v.ceil().min(kmax);
                        d(lo).max(d(hi)).max(0.0)
                    };
                    out.push(best.exp());
                }
            }
            return Ok(out);
        };
        inc.resize(sampler.len(), 0.0);
        sampler.sample_into(rng, ws, inc)?;
        path.clear();
        path.push(0.0);
        cumulative_into(inc, path);
        let root2 = std::f64::consts::SQRT_2;
        for &end in &self.ends {
            for &j in &self.strides {
                let mut best = 0.0f64;
                let mut k = j;
                while k <= end {
                    best = best.max(root2 * path[k] - self.drift[k]);
                    k += j;
                }
                out.push(best.exp());
            }
        }
        Ok(out)
    }
}

/// exp(sup) samples, replica-major, window-major, stride-minor.
fn simulate(
    eta: &Eta,
    windows: &[f64],
    thetas: &[f64],
    replicas: u64,
    seed: u64,
    workers: usize,
) -> Result<(Vec<Vec<f64>>, f64)> {
    if replicas < 2 {
        return Err(Error::Parameter("need at least two replicas".into()));
    }
    let kernel = SupKernel::new(eta, windows, thetas)?;
    let rows = run_replicas(replicas, workers, |r, ws| {
        let mut rng = replica_rng(seed, r);
        let (mut path, mut inc) = (Vec::new(), Vec::new());
        kernel.draw(&mut rng, ws, &mut path, &mut inc)
    })?;
    Ok((rows, kernel.step))
}

fn column(rows: &[Vec<f64>], idx: usize) -> Vec<f64> {
    rows.iter().map(|r| r[idx]).collect()
}

/// 𝓗^θ([0, S]) for one spec.
pub fn estimate_window(eta: &Eta, spec: &PickandsSpec, workers: usize) -> Result<McEstimate> {
    let start = Instant::now();
    let (rows, step) = simulate(eta, &[spec.window], &[spec.theta], spec.replicas, spec.seed, workers)?;
    let fp = fingerprint(&(spec, step));
    Ok(McEstimate::from_samples(&column(&rows, 0), spec.seed, &fp)?.with_wall_time(elapsed(start)))
}

/// 𝓗^θ([0, S]) for several θ on shared noise; the lattices are nested when
/// the θ divide each other, making the estimates monotone replica by replica.
pub fn estimate_theta_ladder(
    eta: &Eta,
    window: f64,
    thetas: &[f64],
    replicas: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<LadderPoint>> {
    let (rows, _) = simulate(eta, &[window], thetas, replicas, seed, workers)?;
    thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let e = McEstimate::from_samples(&column(&rows, i), seed, "")?;
            Ok(LadderPoint { window, theta, value: e.value, stderr: e.stderr })
        })
        .collect()
}

/// Rate 𝓗^θ from a ladder of at least three windows: the intercept of the
/// least-squares fit of 𝓗^θ([0, S])/S on 1/S, with the standard error taken
/// from the per-replica values of the same linear combination.
pub fn estimate_rate(eta: &Eta, windows: &[f64], theta: f64, replicas: u64, seed: u64, workers: usize) -> Result<RateEstimate> {
    if windows.len() < 3 {
        return Err(Error::Parameter("the rate needs a ladder of at least three windows".into()));
    }
    if windows.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("window ladder must be strictly increasing".into()));
    }
    let start = Instant::now();
    let (rows, step) = simulate(eta, windows, &[theta], replicas, seed, workers)?;
    let x: Vec<f64> = windows.iter().map(|s| 1.0 / s).collect();
    let k = x.len() as f64;
    let xbar = x.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - xbar) * (v - xbar)).sum();
    let weights: Vec<f64> = x.iter().map(|v| 1.0 / k - xbar * (v - xbar) / sxx).collect();
    let per_replica: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(&weights).zip(windows).map(|((e, w), s)| w * e / s).sum())
        .collect();
    let spec = PickandsSpec { process: eta.process, window: *windows.last().unwrap(), theta, replicas, seed };
    let fp = fingerprint(&(spec, windows, step));
    let extrapolated = McEstimate::from_samples(&per_replica, seed, &fp)?.with_wall_time(elapsed(start));
    let mut ladder = Vec::with_capacity(windows.len());
    for (i, &s) in windows.iter().enumerate() {
        let e = McEstimate::from_samples(&column(&rows, i), seed, &fp)?;
        ladder.push(LadderPoint { window: s, theta, value: e.value, stderr: e.stderr });
    }
    let mut warnings = Vec::new();
    for w in ladder.windows(2) {
        if w[1].value < w[0].value - 2.0 * (w[0].stderr + w[1].stderr) {
            warnings.push(format!("window ladder decreases between S = {} and S = {}", w[0].window, w[1].window));
        }
    }
    let stderr = extrapolated.stderr;
    Ok(RateEstimate { spec, ladder, extrapolated, stderr, step, warnings })
}

/// 𝓗([0, S]) for V(t) = tN, which equals 1 + S/√π.
pub fn degenerate_window_exact(window: f64) -> f64 {
    1.0 + window / std::f64::consts::PI.sqrt()
}
