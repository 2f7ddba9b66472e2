//! Monte Carlo experiments on simulated queues: tail probabilities ψ(u),
//! strip/grid exceedances of the standardized field, limsup and
//! Erdős–Révész statistics, and the declarative suite runner.
//!
//! Every replica draws its noise from stream `r` of the master seed, so
//! results do not depend on the number of workers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{AsymptoticConstants, VALIDITY_LEVEL};
use crate::config::{JobSpec, Setup, SuiteConfig, SCHEMA_VERSION};
use crate::criterion::{classify, fp_phase_boundary, BoundaryFunction, ClassifyOptions, CriterionVerdict, PhaseBoundary};
use crate::error::{Error, Result};
use crate::io::{csv_table, plot_data, sha256_hex, to_json, write_atomic, CsvRow};
use crate::mc::{fingerprint, run_replicas, McEstimate};
use crate::pickands::{estimate_rate, Eta, RateEstimate};
use crate::queue::burn_in_rule;
use crate::sampling::{replica_rng, IncrementSampler, Workspace};
use crate::variance::{validate_ai_aii, ValidationReport};

/// Upper bound on the number of grid points of one simulated path.
pub const MAX_PATH_POINTS: usize = 1 << 21;
/// Stream offset of the half-step control replicas.
pub const CONTROL_STREAM: u64 = 1 << 40;
/// Label attached to every finite-horizon band.
pub const HEURISTIC_NOTE: &str =
    "finite-horizon band is a desk-scale heuristic; the underlying statements are almost-sure limits as t -> infinity";

/// How a path was discretized; recorded with every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub delta: f64,
    pub burn_in: f64,
    /// Grid points per path, burn-in included.
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

/// Draws the increments of replica `stream` into the worker buffer and hands
/// them to `body`.
fn with_increments<T>(
    sampler: &IncrementSampler,
    master: u64,
    stream: u64,
    ws: &mut Workspace,
    body: impl FnOnce(&[f64]) -> T,
) -> Result<T> {
    let mut inc = std::mem::take(&mut ws.increments);
    inc.resize(sampler.len(), 0.0);
    let drawn = sampler.sample_into(&mut replica_rng(master, stream), ws, &mut inc);
    let out = drawn.map(|_| body(&inc));
    ws.increments = inc;
    out
}

fn check_replicas(replicas: u64) -> Result<()> {
    if replicas == 0 {
        return Err(Error::Parameter("replicas must be at least 1".into()));
    }
    Ok(())
}

/// δ = min(Δ(u)/8, u/2¹⁴).
pub fn psi_step_rule(setup: &Setup, u: f64) -> Result<f64> {
    let delta_u = setup.asym.grid(u, 1.0, 1.0)?.delta;
    Ok((delta_u / 8.0).min(u / 16384.0))
}

/// Burn-in long enough to contain the relevant lags u(τ(u) + ln m/m).
fn lag_burn_in(setup: &Setup, u: f64) -> Result<f64> {
    let g = setup.asym.grid(u, 1.0, 1.0)?;
    Ok(burn_in_rule(&setup.model, setup.c)?.max(4.0 * u * (g.tau_center + g.tau_window)))
}

// ---------------------------------------------------------------------------
// ψ(u)

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PsiOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    pub half_step_control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiPoint {
    pub u: f64,
    pub m: f64,
    pub estimate: McEstimate,
    /// Large-level approximation; absent while the Pickands constant is pending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiRun {
    pub discretization: Discretization,
    pub points: Vec<PsiPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiReport {
    pub c: f64,
    pub replicas: u64,
    pub seed: u64,
    pub main: PsiRun,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_step: Option<PsiRun>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn sorted_levels(us: &[f64]) -> Result<Vec<f64>> {
    if us.is_empty() {
        return Err(Error::Parameter("at least one level u is required".into()));
    }
    if let Some(u) = us.iter().find(|u| !(**u > 0.0) || !u.is_finite()) {
        return Err(Error::Parameter(format!("levels must be positive and finite, got {u}")));
    }
    let mut v = us.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

/// ψ(u) = P(sup_{[0,u]} Q > u) for every u of the ladder, all levels read off
/// the same paths.
pub fn estimate_psi(
    setup: &Setup,
    us: &[f64],
    replicas: u64,
    seed: u64,
    workers: usize,
    opts: &PsiOptions,
) -> Result<PsiReport> {
    check_replicas(replicas)?;
    let us = sorted_levels(us)?;
    let u_max = *us.last().unwrap();
    let mut notes = Vec::new();
    let mut delta = match opts.delta {
        Some(d) if d > 0.0 => d,
        Some(d) => return Err(Error::Parameter(format!("step must be positive, got {d}"))),
        None => us.iter().map(|&u| psi_step_rule(setup, u)).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::INFINITY, f64::min),
    };
    let burn_in = match opts.burn_in {
        Some(b) if b >= 0.0 => b,
        Some(b) => return Err(Error::Parameter(format!("burn-in must be nonnegative, got {b}"))),
        None => lag_burn_in(setup, u_max)?,
    };
    let span = burn_in + u_max;
    if span / delta + 2.0 > MAX_PATH_POINTS as f64 {
        let enlarged = span / (MAX_PATH_POINTS - 2) as f64;
        notes.push(format!("step enlarged from {delta:e} to {enlarged:e} to respect the {MAX_PATH_POINTS}-point budget"));
        delta = enlarged;
    }
    let main = psi_run(setup, &us, replicas, seed, 0, workers, delta, burn_in)?;
    let half_step = if opts.half_step_control {
        if span / (delta / 2.0) + 2.0 > MAX_PATH_POINTS as f64 {
            notes.push("half-step control skipped: it exceeds the point budget".into());
            None
        } else {
            Some(psi_run(setup, &us, replicas, seed, CONTROL_STREAM, workers, delta / 2.0, burn_in)?)
        }
    } else {
        None
    };
    Ok(PsiReport { c: setup.c, replicas, seed, main, half_step, notes })
}

#[allow(clippy::too_many_arguments)]
fn psi_run(
    setup: &Setup,
    us: &[f64],
    replicas: u64,
    seed: u64,
    stream0: u64,
    workers: usize,
    delta: f64,
    burn_in: f64,
) -> Result<PsiRun> {
    let n_burn = (burn_in / delta).ceil() as usize;
    let ends: Vec<usize> = us.iter().map(|u| n_burn + (u / delta).floor() as usize).collect();
    let points = ends.last().unwrap() + 1;
    let sampler = IncrementSampler::new(&setup.model, delta, points - 1)?;
    let drain = setup.c * delta;
    let disc = Discretization { delta, burn_in: n_burn as f64 * delta, points, theta: None };
    let fp = fingerprint(&(setup.key(), "psi", us, replicas, seed, stream0, disc));
    let hits = run_replicas(replicas, workers, |r, ws| {
        with_increments(&sampler, seed, stream0 + r, ws, |inc| {
            let mut hit = vec![false; us.len()];
            let mut q = 0.0f64;
            let mut best = f64::NEG_INFINITY;
            let mut next = 0;
            for (k, dx) in std::iter::once(0.0).chain(inc.iter().copied()).enumerate() {
                if k > 0 {
                    q = (q + dx - drain).max(0.0);
                }
                if k >= n_burn {
                    best = best.max(q);
                    while next < ends.len() && ends[next] == k {
                        hit[next] = best > us[next];
                        next += 1;
                    }
                }
            }
            hit
        })
    })?;
    let mut out = Vec::with_capacity(us.len());
    for (i, &u) in us.iter().enumerate() {
        let s = hits.iter().filter(|h| h[i]).count() as u64;
        let estimate = McEstimate::from_successes(s, replicas, seed, &fp)?;
        let m = setup.asym.m(u)?;
        let asymptotic = setup.asym.psi(u).ok().map(|p| p.value);
        let ratio = asymptotic.map(|a| estimate.value / a);
        out.push(PsiPoint { u, m, estimate, asymptotic, ratio });
    }
    Ok(PsiRun { discretization: disc, points: out })
}

// ---------------------------------------------------------------------------
// Exceedances of the standardized field over the full range, the strip J(u)
// and the discrete grid

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaExceedance {
    pub theta: f64,
    /// Grid points s_l · (2 n_max + 1) lags.
    pub points: usize,
    pub estimate: McEstimate,
    /// discrete / strip.
    pub ratio_to_strip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    pub u: f64,
    pub m: f64,
    pub horizon: f64,
    pub tau_center: f64,
    pub tau_half_width: f64,
    /// Δ(u).
    pub delta_u: f64,
    pub discretization: Discretization,
    /// Lag range of the strip in grid steps: (lo, centre, hi).
    pub strip_lags: (usize, usize, usize),
    pub full: McEstimate,
    pub strip: McEstimate,
    pub discrete: Vec<ThetaExceedance>,
    pub strip_over_full: f64,
    /// Replicas breaking grid ⊂ strip ⊂ full or the θ nesting; zero by construction.
    pub inclusion_violations: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Strides of each θ as integer multiples of the finest one.
fn theta_multiples(thetas: &[f64]) -> Result<(f64, Vec<usize>)> {
    if thetas.is_empty() || thetas.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Parameter("theta values must be positive".into()));
    }
    let tmin = thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut mult = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let k = (t / tmin).round();
        if (t / tmin - k).abs() > 1e-9 * k {
            return Err(Error::Parameter(format!("theta {t} is not an integer multiple of {tmin}")));
        }
        mult.push(k as usize);
    }
    Ok((tmin, mult))
}

/// Full, strip and discrete exceedance probabilities of
/// Z_u(s, τ) = (X(us) − X(us − uτ))/(u(1 + cτ)) over s ∈ [0, T], from one
/// path per replica.
#[allow(clippy::too_many_arguments)]
pub fn estimate_sup_tail_strip(
    setup: &Setup,
    u: f64,
    horizon: f64,
    thetas: &[f64],
    replicas: u64,
    seed: u64,
    workers: usize,
    delta: Option<f64>,
) -> Result<StripReport> {
    check_replicas(replicas)?;
    if !(u > 0.0) || !(horizon > 0.0) {
        return Err(Error::Parameter("u and T must be positive".into()));
    }
    let (tmin, mult) = theta_multiples(thetas)?;
    let g = setup.asym.grid(u, horizon, tmin)?;
    let m = setup.asym.m(u)?;
    let mut notes = Vec::new();
    // lattice step: a whole fraction of the finest θΔ(u)
    let target = match delta {
        Some(d) if d > 0.0 => d,
        Some(d) => return Err(Error::Parameter(format!("step must be positive, got {d}"))),
        None => psi_step_rule(setup, u)?,
    };
    let coarse = tmin * g.delta;
    let lag_hi_time = u * (g.tau_center + g.tau_window);
    let burn_in = lag_burn_in(setup, u)?;
    let span = burn_in + u * horizon;
    let mut sub = (coarse / target).ceil().max(1.0) as usize;
    let budget = |sub: usize| span / (coarse / sub as f64) + 2.0 <= MAX_PATH_POINTS as f64;
    if !budget(sub) {
        let fit = ((MAX_PATH_POINTS - 2) as f64 * coarse / span).floor() as usize;
        if fit == 0 {
            return Err(Error::Capacity(format!("the theta lattice needs a step above the {MAX_PATH_POINTS}-point budget")));
        }
        notes.push(format!("lattice refinement reduced from {sub} to {fit} to respect the point budget"));
        sub = fit;
    }
    let step = coarse / sub as f64;
    let n_burn = ((burn_in / step).ceil() as usize).max((lag_hi_time / step).ceil() as usize + 1);
    let k_span = (u * horizon / step).floor() as usize;
    let points = n_burn + k_span + 1;
    let jc = (u * g.tau_center / step).round() as usize;
    let jw = (u * g.tau_window / step).floor() as usize;
    let j_lo = jc.saturating_sub(jw).max(1);
    let j_hi = jc + jw;
    if j_hi > n_burn {
        return Err(Error::Numeric("burn-in shorter than the strip lags".into()));
    }
    let strides: Vec<usize> = mult.iter().map(|k| k * sub).collect();
    let disc = Discretization { delta: step, burn_in: n_burn as f64 * step, points, theta: Some(tmin) };
    let sampler = IncrementSampler::new(&setup.model, step, points - 1)?;
    let drain = setup.c * step;
    let fp = fingerprint(&(setup.key(), "strip", u, horizon, thetas, replicas, seed, disc));

    struct Outcome {
        full: bool,
        strip: bool,
        grid: Vec<bool>,
    }
    let outcomes = run_replicas(replicas, workers, |r, ws| {
        with_increments(&sampler, seed, r, ws, |inc| {
            // Y_k = X_k − c t_k
            let mut y = Vec::with_capacity(points);
            let mut acc = 0.0f64;
            y.push(0.0);
            for dx in inc {
                acc += dx - drain;
                y.push(acc);
            }
            let mut run_min = f64::INFINITY;
            for &v in &y[..n_burn] {
                run_min = run_min.min(v);
            }
            let mut full = false;
            let mut strip = false;
            let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
            for i in (n_burn - j_hi)..(n_burn - j_lo) {
                while dq.back().is_some_and(|&b| y[b] >= y[i]) {
                    dq.pop_back();
                }
                dq.push_back(i);
            }
            for k in n_burn..=n_burn + k_span {
                run_min = run_min.min(y[k]);
                if y[k] - run_min > u {
                    full = true;
                }
                let enter = k - j_lo;
                while dq.back().is_some_and(|&b| y[b] >= y[enter]) {
                    dq.pop_back();
                }
                dq.push_back(enter);
                while dq.front().is_some_and(|&f| f < k - j_hi) {
                    dq.pop_front();
                }
                if y[k] - y[*dq.front().unwrap()] > u {
                    strip = true;
                }
            }
            let grid = strides
                .iter()
                .map(|&st| {
                    let l_max = k_span / st;
                    let n_max = (jw / st) as i64;
                    (0..=l_max).any(|l| {
                        let k = n_burn + l * st;
                        (-n_max..=n_max).any(|n| {
                            let j = jc as i64 + n * st as i64;
                            j >= 1 && y[k] - y[k - j as usize] > u
                        })
                    })
                })
                .collect();
            Outcome { full, strip, grid }
        })
    })?;

    let count = |f: &dyn Fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
    let full = McEstimate::from_successes(count(&|o| o.full), replicas, seed, &fp)?;
    let strip = McEstimate::from_successes(count(&|o| o.strip), replicas, seed, &fp)?;
    let mut order: Vec<usize> = (0..thetas.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(strides[i]));
    let mut violations = 0u64;
    for o in &outcomes {
        let nested = order.windows(2).all(|w| !o.grid[w[0]] || o.grid[w[1]]);
        let inside = o.grid.iter().all(|&gh| !gh || o.strip);
        if !(nested && inside && (!o.strip || o.full)) {
            violations += 1;
        }
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { f64::NAN };
    let discrete = thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let est = McEstimate::from_successes(count(&|o| o.grid[i]), replicas, seed, &fp)?;
            let st = strides[i];
            Ok(ThetaExceedance {
                theta,
                points: (k_span / st + 1) * (2 * (jw / st) + 1),
                ratio_to_strip: ratio(est.value, strip.value),
                estimate: est,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    notes.push(format!(
        "strip centre rounded to the lattice: lag {} steps for u*tau(u) = {:e}",
        jc,
        u * g.tau_center
    ));
    Ok(StripReport {
        u,
        m,
        horizon,
        tau_center: g.tau_center,
        tau_half_width: g.tau_window,
        delta_u: g.delta,
        discretization: disc,
        strip_lags: (j_lo, jc, j_hi),
        strip_over_full: ratio(strip.value, full.value),
        full,
        strip,
        discrete,
        inclusion_violations: violations,
        notes,
    })
}

// ---------------------------------------------------------------------------
// limsup statistic

pub const LIMSUP_DEFAULT_DELTA: f64 = 0.1;
pub const LIMSUP_DEFAULT_T0: f64 = 1e3;

/// T₀·2^j for j ≥ 0 while below `horizon`, then `horizon` itself.
pub fn geometric_checkpoints(t0: f64, horizon: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = t0;
    while t < horizon * (1.0 - 1e-12) {
        out.push(t);
        t *= 2.0;
    }
    out.push(horizon);
    out
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimsupReport {
    /// (2A_∞/A²)^exponent.
    pub constant: f64,
    pub exponent: f64,
    pub t0: f64,
    pub horizon: f64,
    pub discretization: Discretization,
    pub checkpoints: Vec<f64>,
    /// Cross-replica median of R(t_j) = sup_{T₀≤s≤t_j} Q(s)/(ln s)^exponent.
    pub median: Vec<f64>,
    pub final_median: f64,
    /// [0.5, 1.5] × constant.
    pub band: (f64, f64),
    pub within_band: bool,
    /// Per-replica R(t_j).
    pub traces: Vec<Vec<f64>>,
    /// Decreases of R along a trace; zero by construction.
    pub monotone_violations: u64,
    pub fingerprint: String,
    pub disclaimer: String,
}

pub fn limsup_experiment(
    setup: &Setup,
    horizon: f64,
    replicas: u64,
    seed: u64,
    workers: usize,
    delta: Option<f64>,
    t0: Option<f64>,
) -> Result<LimsupReport> {
    check_replicas(replicas)?;
    if !(horizon >= 1e4) {
        return Err(Error::Parameter(format!("the limsup experiment needs T >= 1e4, got {horizon}")));
    }
    let delta = delta.unwrap_or(LIMSUP_DEFAULT_DELTA);
    let t0 = t0.unwrap_or(LIMSUP_DEFAULT_T0);
    if !(delta > 0.0) || !(t0 > 1.0) || t0 >= horizon {
        return Err(Error::Parameter("need delta > 0 and 1 < T0 < T".into()));
    }
    let (constant, exponent) = setup.asym.limsup_constant();
    let burn = burn_in_rule(&setup.model, setup.c)?;
    let n_burn = (burn / delta).ceil() as usize;
    let n_keep = (horizon / delta).floor() as usize;
    let points = n_burn + n_keep + 1;
    if points > 64 * MAX_PATH_POINTS {
        return Err(Error::Capacity(format!("{points} grid points exceed the path budget")));
    }
    let checkpoints = geometric_checkpoints(t0, horizon);
    let idx: Vec<usize> = checkpoints.iter().map(|t| ((t / delta) * (1.0 + 1e-14)).floor() as usize).collect();
    let k0 = (t0 / delta).ceil() as usize;
    let disc = Discretization { delta, burn_in: n_burn as f64 * delta, points, theta: None };
    let fp = fingerprint(&(setup.key(), "limsup", horizon, replicas, seed, t0, disc));
    let sampler = IncrementSampler::new(&setup.model, delta, points - 1)?;
    let drain = setup.c * delta;
    let traces = run_replicas(replicas, workers, |r, ws| {
        with_increments(&sampler, seed, r, ws, |inc| {
            let mut q = 0.0f64;
            for dx in &inc[..n_burn] {
                q = (q + dx - drain).max(0.0);
            }
            let mut best = 0.0f64;
            let mut out = Vec::with_capacity(idx.len());
            let mut next = 0;
            for (k, dx) in inc[n_burn..].iter().enumerate().map(|(i, d)| (i + 1, d)) {
                q = (q + dx - drain).max(0.0);
                if k >= k0 {
                    let t = k as f64 * delta;
                    best = best.max(q / t.ln().powf(exponent));
                }
                while next < idx.len() && idx[next] == k {
                    out.push(best);
                    next += 1;
                }
            }
            out
        })
    })?;
    let monotone_violations = traces.iter().filter(|t| t.windows(2).any(|w| w[1] < w[0])).count() as u64;
    let med: Vec<f64> = (0..checkpoints.len())
        .map(|j| median(&mut traces.iter().map(|t| t[j]).collect::<Vec<_>>()))
        .collect();
    let final_median = *med.last().unwrap();
    let band = (0.5 * constant, 1.5 * constant);
    Ok(LimsupReport {
        constant,
        exponent,
        t0,
        horizon,
        discretization: disc,
        checkpoints,
        within_band: final_median >= band.0 && final_median <= band.1,
        median: med,
        final_median,
        band,
        traces,
        monotone_violations,
        fingerprint: fp,
        disclaimer: HEURISTIC_NOTE.into(),
    })
}

// ---------------------------------------------------------------------------
// Erdős–Révész statistic

pub const ER_DEFAULT_DELTA: f64 = 0.01;
pub const ER_BAND: (f64, f64) = (-2.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// (ξ − t)/h_p(t), used for p > 1.
    Difference,
    /// ln(ξ/t)/(h_p(t)/t), used for p ∈ (0, 1].
    LogRatio,
}

/// One replica. `None` in `statistic` and `running_inf` is the −∞ sentinel
/// recorded while Q has not yet crossed the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErdosReveszTrace {
    pub xi: Vec<Option<f64>>,
    pub statistic: Vec<Option<f64>>,
    pub running_inf: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErdosReveszReport {
    pub p: f64,
    pub normalization: Normalization,
    pub t0: f64,
    pub horizon: f64,
    pub discretization: Discretization,
    pub checkpoints: Vec<f64>,
    pub h_p: Vec<f64>,
    pub traces: Vec<ErdosReveszTrace>,
    pub band: (f64, f64),
    /// Share of replicas whose final running infimum lies in the band.
    pub fraction_in_band: f64,
    /// Replicas still carrying the −∞ sentinel at the last checkpoint.
    pub no_crossing: u64,
    /// Share of replicas with ξ defined at the last checkpoint.
    pub xi_exists_fraction: f64,
    /// Checkpoints with ξ < t and a positive statistic; zero by construction.
    pub sign_violations: u64,
    /// Median over replicas of the running infimum (sentinel counts as −∞).
    pub median_running_inf: Vec<f64>,
    pub fingerprint: String,
    pub disclaimer: String,
}

/// The smallest t > e^e (where h_p is defined) with m(f_p(t)) ≥ 3.
pub fn er_default_t0(setup: &Setup, p: f64) -> Result<f64> {
    let lo = std::f64::consts::E.powf(std::f64::consts::E) * (1.0 + 1e-9);
    let ok = |v: f64| setup.asym.f_p_level(p, v.exp()).map(|m| m >= VALIDITY_LEVEL).unwrap_or(false);
    if ok(lo.ln()) {
        return Ok(lo);
    }
    let mut hi = lo.ln() * 2.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::Domain(format!("f_p never reaches level {VALIDITY_LEVEL}")));
        }
    }
    Ok(crate::numeric::bisect_predicate(ok, lo.ln(), hi, 1e-12, 200).exp())
}

pub fn erdos_revesz_experiment(
    setup: &Setup,
    p: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
    workers: usize,
    delta: Option<f64>,
    t0: Option<f64>,
) -> Result<ErdosReveszReport> {
    check_replicas(replicas)?;
    if !(p > 0.0) {
        return Err(Error::Parameter(format!("p must be positive, got {p}")));
    }
    setup.asym.constants().pickands()?;
    let delta = delta.unwrap_or(ER_DEFAULT_DELTA);
    let t0 = match t0 {
        Some(t) => t,
        None => er_default_t0(setup, p)?,
    };
    let e_e = std::f64::consts::E.powf(std::f64::consts::E);
    if !(delta > 0.0) || !(t0 > e_e) || t0 >= horizon {
        return Err(Error::Parameter(format!("need delta > 0 and e^e < T0 < T, got T0 = {t0}")));
    }
    let normalization = if p > 1.0 { Normalization::Difference } else { Normalization::LogRatio };
    let checkpoints = geometric_checkpoints(t0, horizon);
    let h_p: Vec<f64> = checkpoints.iter().map(|&t| setup.asym.h_p(p, t)).collect::<Result<_>>()?;

    let burn = burn_in_rule(&setup.model, setup.c)?;
    let n_burn = (burn / delta).ceil() as usize;
    let n_keep = (horizon / delta).floor() as usize;
    let points = n_burn + n_keep + 1;
    if points > 64 * MAX_PATH_POINTS {
        return Err(Error::Capacity(format!("{points} grid points exceed the path budget")));
    }
    // boundary on the kept grid; +∞ where f_p is undefined (t ≤ e)
    let f: Vec<f64> = (0..=n_keep)
        .map(|k| {
            let t = k as f64 * delta;
            if t > std::f64::consts::E {
                setup.asym.f_p(p, t)
            } else {
                Ok(f64::INFINITY)
            }
        })
        .collect::<Result<_>>()?;
    let idx: Vec<usize> = checkpoints.iter().map(|t| ((t / delta) * (1.0 + 1e-14)).floor() as usize).collect();
    let disc = Discretization { delta, burn_in: n_burn as f64 * delta, points, theta: None };
    let fp = fingerprint(&(setup.key(), "erdos-revesz", p, horizon, replicas, seed, t0, disc));
    let sampler = IncrementSampler::new(&setup.model, delta, points - 1)?;
    let drain = setup.c * delta;

    let xis = run_replicas(replicas, workers, |r, ws| {
        with_increments(&sampler, seed, r, ws, |inc| {
            let mut q = 0.0f64;
            for dx in &inc[..n_burn] {
                q = (q + dx - drain).max(0.0);
            }
            let mut last: Option<usize> = None;
            let mut out = Vec::with_capacity(idx.len());
            let mut next = 0;
            for k in 0..=n_keep {
                if k > 0 {
                    q = (q + inc[n_burn + k - 1] - drain).max(0.0);
                }
                if q >= f[k] {
                    last = Some(k);
                }
                while next < idx.len() && idx[next] == k {
                    out.push(last.map(|j| j as f64 * delta));
                    next += 1;
                }
            }
            out
        })
    })?;

    let mut traces = Vec::with_capacity(xis.len());
    let mut sign_violations = 0u64;
    for xi in xis {
        let mut statistic = Vec::with_capacity(xi.len());
        let mut running_inf = Vec::with_capacity(xi.len());
        let mut inf: Option<f64> = Some(f64::INFINITY);
        for (j, x) in xi.iter().enumerate() {
            let t = checkpoints[j];
            let s = x.map(|x| match normalization {
                Normalization::Difference => (x - t) / h_p[j],
                Normalization::LogRatio => (x / t).ln() / (h_p[j] / t),
            });
            if let (Some(x), Some(v)) = (x, s) {
                if *x < t && v > 0.0 {
                    sign_violations += 1;
                }
            }
            inf = match (inf, s) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            };
            statistic.push(s);
            running_inf.push(inf);
        }
        traces.push(ErdosReveszTrace { xi, statistic, running_inf });
    }
    let n = traces.len() as f64;
    let finals: Vec<Option<f64>> = traces.iter().map(|t| *t.running_inf.last().unwrap()).collect();
    let in_band = finals.iter().filter(|v| v.is_some_and(|v| v >= ER_BAND.0 && v <= ER_BAND.1)).count();
    let no_crossing = traces.iter().filter(|t| t.statistic.last().unwrap().is_none()).count() as u64;
    let xi_exists = traces.iter().filter(|t| t.xi.last().unwrap().is_some()).count();
    let median_running_inf = (0..checkpoints.len())
        .map(|j| median(&mut traces.iter().map(|t| t.running_inf[j].unwrap_or(f64::NEG_INFINITY)).collect::<Vec<_>>()))
        .collect();
    Ok(ErdosReveszReport {
        p,
        normalization,
        t0,
        horizon,
        discretization: disc,
        checkpoints,
        h_p,
        traces,
        band: ER_BAND,
        fraction_in_band: in_band as f64 / n,
        no_crossing,
        xi_exists_fraction: xi_exists as f64 / n,
        sign_violations,
        median_running_inf,
        fingerprint: fp,
        disclaimer: format!("{HEURISTIC_NOTE}; the almost-sure liminf -1 is an infinite-horizon statement"),
    })
}

// ---------------------------------------------------------------------------
// suites

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub constants: AsymptoticConstants,
    pub limsup_constant: f64,
    pub limsup_exponent: f64,
    pub validation: ValidationReport,
    pub phase_boundary: PhaseBoundary,
}

pub fn constants_report(setup: &Setup) -> ConstantsReport {
    let (limsup_constant, limsup_exponent) = setup.asym.limsup_constant();
    ConstantsReport {
        constants: *setup.asym.constants(),
        limsup_constant,
        limsup_exponent,
        validation: validate_ai_aii(&setup.model),
        phase_boundary: fp_phase_boundary(&setup.asym),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: String,
    pub fingerprint: String,
    pub status: JobStatus,
    pub files: Vec<FileRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub suite_fingerprint: String,
    pub seed: u64,
    pub jobs: Vec<ManifestEntry>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub manifest: Manifest,
    /// Jobs whose outputs were already on disk with a matching fingerprint.
    pub reused: Vec<String>,
    pub summary: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Master seed of a job: the suite seed mixed with the job name.
pub fn job_seed(seed: u64, name: &str) -> u64 {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(name.as_bytes());
    let d = Sha256::digest(&bytes);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}


#[derive(Serialize)]
struct JobEnvelope<'a, T: Serialize> {
    job: &'a str,
    kind: &'a str,
    fingerprint: &'a str,
    seed: u64,
    result: T,
}

/// Serialized outputs of one job.
#[derive(Debug, Clone, PartialEq)]
pub struct JobOutput {
    pub fingerprint: String,
    pub json: String,
    pub csv: String,
    pub plot: Option<String>,
    /// One human-readable line.
    pub summary: String,
}

pub fn job_fingerprint(setup: &Setup, job: &JobSpec, seed: u64) -> String {
    fingerprint(&(SCHEMA_VERSION, seed, setup.key(), job))
}

/// Runs a single job with master seed `seed`.
pub fn run_job(setup: &Setup, job: &JobSpec, seed: u64, workers: usize) -> Result<JobOutput> {
    let fp = job_fingerprint(setup, job, seed);
    let fp = fp.as_str();
    let name = job.name();
    let kind = job.kind();
    let env = |result: &dyn erased::Json| -> Result<String> { result.envelope(name, kind, fp, seed) };
    let mut rows = Vec::new();
    let (json, plot, summary) = match job {
        JobSpec::Constants { .. } => {
            let r = constants_report(setup);
            let k = &r.constants;
            for (stat, v) in [
                ("tauStar", k.tau_star),
                ("A", k.a),
                ("B", k.b_coef),
                ("gamma", k.gamma),
                ("kappa", k.kappa),
                ("zeta", k.zeta_alpha),
                ("limsupConstant", r.limsup_constant),
            ] {
                rows.push(CsvRow::new(kind, "c", setup.c, stat, v, None));
            }
            if let Some(cc) = k.scr_c {
                rows.push(CsvRow::new(kind, "c", setup.c, "C", cc, None));
            }
            let s = format!("constants: tauStar={} A={} B={} gamma={}", k.tau_star, k.a, k.b_coef, k.gamma);
            (env(&r)?, None, s)
        }
        JobSpec::Psi { u, replicas, delta, burn_in, half_step_control, .. } => {
            let opts = PsiOptions { delta: *delta, burn_in: *burn_in, half_step_control: *half_step_control };
            let r = estimate_psi(setup, u, *replicas, seed, workers, &opts)?;
            let mut pts = Vec::new();
            for (label, run) in std::iter::once(("estimate", &r.main)).chain(r.half_step.iter().map(|h| ("half-step", h))) {
                for p in &run.points {
                    rows.push(CsvRow::new(kind, "u", p.u, label, p.estimate.value, Some(p.estimate.stderr)));
                    if label == "estimate" {
                        if let Some(a) = p.asymptotic {
                            rows.push(CsvRow::new(kind, "u", p.u, "asymptotic", a, None));
                        }
                        pts.push((p.u, p.estimate.value));
                    }
                }
            }
            let s = format!("psi: {} levels, {} replicas, delta={:e}", r.main.points.len(), replicas, r.main.discretization.delta);
            (env(&r)?, Some(plot_data(name, ("u", "psi"), &pts)), s)
        }
        JobSpec::Strip { u, horizon, thetas, replicas, delta, .. } => {
            let r = estimate_sup_tail_strip(setup, *u, *horizon, thetas, *replicas, seed, workers, *delta)?;
            rows.push(CsvRow::new(kind, "u", *u, "full", r.full.value, Some(r.full.stderr)));
            rows.push(CsvRow::new(kind, "u", *u, "strip", r.strip.value, Some(r.strip.stderr)));
            let mut pts = Vec::new();
            for d in &r.discrete {
                rows.push(CsvRow::new(kind, "theta", d.theta, "discrete", d.estimate.value, Some(d.estimate.stderr)));
                pts.push((d.theta, d.ratio_to_strip));
            }
            let s = format!("strip: full={} strip={} ratio={}", r.full.value, r.strip.value, r.strip_over_full);
            (env(&r)?, Some(plot_data(name, ("theta", "discrete/strip"), &pts)), s)
        }
        JobSpec::Pickands { windows, theta, replicas, .. } => {
            let eta = Eta::for_constants(&setup.asym)?;
            let r: RateEstimate = estimate_rate(&eta, windows, *theta, *replicas, seed, workers)?;
            let mut pts = Vec::new();
            for lp in &r.ladder {
                rows.push(CsvRow::new(kind, "S", lp.window, "window", lp.value, Some(lp.stderr)));
                pts.push((lp.window, lp.value));
            }
            rows.push(CsvRow::new(kind, "theta", *theta, "rate", r.extrapolated.value, Some(r.stderr)));
            let s = format!("pickands: rate={} +- {}", r.extrapolated.value, r.stderr);
            (env(&r)?, Some(plot_data(name, ("S", "H(S)"), &pts)), s)
        }
        JobSpec::Criterion { p, t_max, .. } => {
            let opts = ClassifyOptions { t_max: t_max.unwrap_or(crate::criterion::DEFAULT_T_MAX), ..Default::default() };
            let mut verdicts: BTreeMap<String, CriterionVerdict> = BTreeMap::new();
            let mut pts = Vec::new();
            for &pv in p {
                let v = classify(&setup.asym, &BoundaryFunction::Fp { p: pv }, &opts)?;
                let code = v.probability_io.map(f64::from).unwrap_or(f64::NAN);
                rows.push(CsvRow::new(kind, "p", pv, "probability_io", code, None));
                rows.push(CsvRow::new(kind, "p", pv, "tail_exponent", v.tail_exponent, None));
                pts.extend(v.samples.iter().map(|s| (s.ln_u, s.ln_integrand)));
                verdicts.insert(format!("{pv:+.6e}"), v);
            }
            let s = format!("criterion: {} boundaries classified", verdicts.len());
            (env(&verdicts)?, Some(plot_data(name, ("ln_u", "ln_integrand"), &pts)), s)
        }
        JobSpec::Limsup { horizon, replicas, delta, t0, .. } => {
            let r = limsup_experiment(setup, *horizon, *replicas, seed, workers, *delta, *t0)?;
            for (t, m) in r.checkpoints.iter().zip(&r.median) {
                rows.push(CsvRow::new(kind, "t", *t, "median", *m, None));
            }
            let pts: Vec<(f64, f64)> = r.checkpoints.iter().copied().zip(r.median.iter().copied()).collect();
            let s = format!("limsup: final median {} vs constant {}", r.final_median, r.constant);
            (env(&r)?, Some(plot_data(name, ("t", "median R(t)"), &pts)), s)
        }
        JobSpec::ErdosRevesz { p, horizon, replicas, delta, t0, .. } => {
            let r = erdos_revesz_experiment(setup, *p, *horizon, *replicas, seed, workers, *delta, *t0)?;
            for (t, m) in r.checkpoints.iter().zip(&r.median_running_inf) {
                rows.push(CsvRow::new(kind, "t", *t, "median_running_inf", *m, None));
            }
            rows.push(CsvRow::new(kind, "p", *p, "fraction_in_band", r.fraction_in_band, None));
            let pts: Vec<(f64, f64)> = r.checkpoints.iter().copied().zip(r.median_running_inf.iter().copied()).collect();
            let s = format!("erdos-revesz: {:.3} of replicas in band", r.fraction_in_band);
            (env(&r)?, Some(plot_data(name, ("t", "median running inf"), &pts)), s)
        }
    };
    Ok(JobOutput { fingerprint: fp.to_string(), json, csv: csv_table(&rows), plot, summary })
}

/// Object-safe JSON envelope writer for the heterogeneous job results.
mod erased {
    use super::*;
    pub trait Json {
        fn envelope(&self, job: &str, kind: &str, fingerprint: &str, seed: u64) -> Result<String>;
    }
    impl<T: Serialize> Json for T {
        fn envelope(&self, job: &str, kind: &str, fingerprint: &str, seed: u64) -> Result<String> {
            to_json(&JobEnvelope { job, kind, fingerprint, seed, result: self })
        }
    }
}

fn cached(dir: &Path, name: &str, fp: &str, want_plot: bool) -> Option<Vec<FileRecord>> {
    let json = std::fs::read(dir.join(format!("{name}.json"))).ok()?;
    let v: serde_json::Value = serde_json::from_slice(&json).ok()?;
    if v.get("fingerprint")?.as_str()? != fp {
        return None;
    }
    let mut files = vec![(format!("{name}.json"), json)];
    files.push((format!("{name}.csv"), std::fs::read(dir.join(format!("{name}.csv"))).ok()?));
    if want_plot {
        if let Ok(p) = std::fs::read(dir.join(format!("{name}.dat"))) {
            files.push((format!("{name}.dat"), p));
        }
    }
    Some(files.into_iter().map(|(path, b)| FileRecord { path, sha256: sha256_hex(&b) }).collect())
}

/// Runs every job, reusing outputs whose fingerprint matches. The manifest
/// is rewritten after each job so that partial results stay described.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let setup = Setup::new(cfg.model.clone(), cfg.c, cfg.pickands)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let suite_fp = fingerprint(&(SCHEMA_VERSION, cfg.seed, setup.key(), cfg.emit_plot_data, &cfg.jobs));
    let mut manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        suite_fingerprint: suite_fp,
        seed: cfg.seed,
        jobs: Vec::new(),
        complete: false,
    };
    let mut reused = Vec::new();
    let mut summary = Vec::new();
    for job in &cfg.jobs {
        let name = job.name();
        let seed = job_seed(cfg.seed, name);
        let fp = job_fingerprint(&setup, job, seed);
        let entry = if let Some(files) = cached(dir, name, &fp, cfg.emit_plot_data) {
            reused.push(name.to_string());
            summary.push(format!("{name}: reused"));
            ManifestEntry { name: name.into(), kind: job.kind().into(), fingerprint: fp, status: JobStatus::Completed, files, error: None }
        } else {
            match run_job(&setup, job, seed, cfg.workers) {
                Ok(out) => {
                    let mut files = Vec::new();
                    let mut put = |file: String, body: &str| -> Result<()> {
                        write_atomic(&dir.join(&file), body.as_bytes())?;
                        files.push(FileRecord { path: file, sha256: sha256_hex(body.as_bytes()) });
                        Ok(())
                    };
                    put(format!("{name}.csv"), &out.csv)?;
                    if cfg.emit_plot_data {
                        if let Some(p) = &out.plot {
                            put(format!("{name}.dat"), p)?;
                        }
                    }
                    // the JSON goes last: its presence marks the job as done
                    put(format!("{name}.json"), &out.json)?;
                    files.sort_by(|a, b| a.path.cmp(&b.path));
                    summary.push(format!("{name}: {}", out.summary));
                    ManifestEntry { name: name.into(), kind: job.kind().into(), fingerprint: fp, status: JobStatus::Completed, files, error: None }
                }
                Err(e) => {
                    summary.push(format!("{name}: failed: {e}"));
                    ManifestEntry {
                        name: name.into(),
                        kind: job.kind().into(),
                        fingerprint: fp,
                        status: JobStatus::Failed,
                        files: vec![],
                        error: Some(e.to_string()),
                    }
                }
            }
        };
        let mut files = entry.files.clone();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.jobs.push(ManifestEntry { files, ..entry });
        write_atomic(&dir.join(MANIFEST_FILE), to_json(&manifest)?.as_bytes())?;
    }
    manifest.complete = manifest.jobs.iter().all(|j| j.status == JobStatus::Completed);
    write_atomic(&dir.join(MANIFEST_FILE), to_json(&manifest)?.as_bytes())?;
    Ok(SuiteOutcome { manifest, reused, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelSpec;

    fn bm() -> Setup {
        Setup::new(ModelSpec::Fbm { hurst: 0.5 }, 1.0, None).unwrap()
    }

    #[test]
    fn small_level_is_almost_surely_exceeded() {
        let r = estimate_psi(&bm(), &[0.01], 400, 5, 1, &PsiOptions::default()).unwrap();
        assert!(r.main.points[0].estimate.value >= 0.99, "{:?}", r.main.points[0]);
    }

    #[test]
    fn psi_is_worker_independent() {
        let s = bm();
        let o = PsiOptions { half_step_control: true, ..Default::default() };
        let a = estimate_psi(&s, &[0.5, 1.0], 64, 9, 1, &o).unwrap();
        let b = estimate_psi(&s, &[1.0, 0.5], 64, 9, 3, &o).unwrap();
        assert_eq!(to_json(&a).unwrap(), to_json(&b).unwrap());
        assert!(a.half_step.is_some());
    }

    #[test]
    fn strip_inclusions_hold() {
        let r = estimate_sup_tail_strip(&bm(), 1.0, 1.0, &[0.8, 0.4, 0.2], 200, 3, 1, None).unwrap();
        assert_eq!(r.inclusion_violations, 0);
        assert!(r.strip.value <= r.full.value);
        for d in &r.discrete {
            assert!(d.estimate.value <= r.strip.value);
        }
        assert!(estimate_sup_tail_strip(&bm(), 1.0, 1.0, &[0.3, 0.2], 10, 3, 1, None).is_err());
    }

    #[test]
    fn checkpoints_are_geometric() {
        assert_eq!(geometric_checkpoints(10.0, 100.0), vec![10.0, 20.0, 40.0, 80.0, 100.0]);
        assert_eq!(geometric_checkpoints(10.0, 80.0), vec![10.0, 20.0, 40.0, 80.0]);
    }

    #[test]
    fn limsup_traces_are_nondecreasing() {
        let r = limsup_experiment(&bm(), 1e4, 4, 1, 1, Some(0.5), None).unwrap();
        assert_eq!(r.monotone_violations, 0);
        assert!(limsup_experiment(&bm(), 1e3, 4, 1, 1, None, None).is_err());
    }

    #[test]
    fn erdos_revesz_signs() {
        let r = erdos_revesz_experiment(&bm(), 2.0, 4e3, 8, 2, 1, Some(0.05), None).unwrap();
        assert_eq!(r.sign_violations, 0);
        for t in &r.traces {
            assert!(t.running_inf.windows(2).all(|w| match (w[0], w[1]) {
                (Some(a), Some(b)) => b <= a,
                (None, b) => b.is_none(),
                (Some(_), None) => true,
            }));
            for (x, (s, tc)) in t.xi.iter().zip(t.statistic.iter().zip(&r.checkpoints)) {
                if let (Some(x), Some(s)) = (x, s) {
                    if x < tc {
                        assert!(*s <= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn job_seeds_differ_by_name() {
        assert_ne!(job_seed(1, "a"), job_seed(1, "b"));
        assert_eq!(job_seed(1, "a"), job_seed(1, "a"));
    }
}
