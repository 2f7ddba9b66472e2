//! The reflected process Q(t) = sup_{s≤t}(X(t) − X(s) − c(t − s)) on a
//! sampled grid, its one-step recursion, and last-passage functionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect_predicate;
use crate::sampling::{replica_rng, GridSpec, IncrementSampler, SampledPath, SeedRecord, Workspace};
use crate::variance::VarianceModel;

/// Quadratic-cost guard of [`brute_force_sup`].
pub const BRUTE_FORCE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuePath {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub drift: f64,
    /// Length of simulated past discarded before the first point.
    pub burn_in: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn check_drift(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Parameter(format!("drift c must be positive, got {c}")));
    }
    Ok(())
}

/// Q_k = max(Q_{k−1} + X_k − X_{k−1} − cδ, 0) written into `out`, starting
/// from `q0`. Returns the largest value.
pub fn lindley_into(x: &[f64], step: f64, c: f64, q0: f64, out: &mut Vec<f64>) -> f64 {
    out.clear();
    out.reserve(x.len());
    let drain = c * step;
    let mut q = q0;
    let mut best = q0;
    out.push(q0);
    for w in x.windows(2) {
        q = (q + (w[1] - w[0]) - drain).max(0.0);
        best = best.max(q);
        out.push(q);
    }
    best
}

pub fn reflect_lindley(path: &SampledPath, c: f64, q0: f64) -> Result<QueuePath> {
    check_drift(c)?;
    if !(q0 >= 0.0) {
        return Err(Error::Parameter(format!("initial content must be nonnegative, got {q0}")));
    }
    let mut values = Vec::new();
    lindley_into(&path.values, path.grid.step, c, q0, &mut values);
    Ok(QueuePath { grid: path.grid, values, drift: c, burn_in: 0.0, warnings: vec![] })
}

/// Q(t_k) = max_{j≤k}(X_k − X_j − c(t_k − t_j)) by a double loop; a test oracle.
pub fn brute_force_sup(path: &SampledPath, c: f64) -> Result<QueuePath> {
    check_drift(c)?;
    let n = path.values.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::Capacity(format!("brute-force supremum limited to {BRUTE_FORCE_LIMIT} points, got {n}")));
    }
    let g = path.grid;
    let values = (0..n)
        .map(|k| {
            let tk = g.time(k);
            (0..=k)
                .map(|j| path.values[k] - path.values[j] - c * (tk - g.time(j)))
                .fold(f64::MIN, f64::max)
        })
        .collect();
    Ok(QueuePath { grid: g, values, drift: c, burn_in: 0.0, warnings: vec![] })
}

/// T_hit = sup{t > 0 : σ(t) ≥ c t}, the time after which the drift dominates
/// the standard deviation. Zero when σ(t) < ct everywhere.
pub fn hitting_time(model: &VarianceModel, c: f64) -> Result<f64> {
    check_drift(c)?;
    if let Some(h) = model.hurst() {
        if h >= 1.0 {
            return Err(Error::Parameter("the drift never dominates a linear standard deviation".into()));
        }
        return Ok(c.powf(-1.0 / (1.0 - h)));
    }
    let above = |t: f64| model.sigma(t) >= c * t;
    let mut hi = 1.0;
    let mut guard = 0;
    while above(hi) {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Numeric("standard deviation grows linearly; no hitting time".into()));
        }
    }
    // last probe point below `hi` where σ ≥ ct
    let probes: Vec<f64> = (0..=400).map(|k| hi * 10f64.powf(-(k as f64) / 20.0)).collect();
    match probes.iter().position(|&t| above(t)) {
        None => Ok(0.0),
        Some(0) => unreachable!(),
        Some(i) => {
            let (lo, up) = (probes[i], probes[i - 1]);
            Ok(bisect_predicate(|t| !above(t), lo, up, 1e-12, 200))
        }
    }
}

/// Default burn-in: 20·max(T_hit, τ*), with τ* = α_∞/(c(1 − α_∞)) covering
/// models whose σ never reaches ct.
pub fn burn_in_rule(model: &VarianceModel, c: f64) -> Result<f64> {
    let ex = model.exponents();
    let tau_star = ex.alpha_inf / (c * (1.0 - ex.alpha_inf));
    Ok(20.0 * hitting_time(model, c)?.max(tau_star))
}

/// Approximately stationary queue on [0, T]: simulate on [−T_b, T] from
/// Q(−T_b) = 0 and keep the nonnegative times.
pub fn stationary_queue(
    model: &VarianceModel,
    c: f64,
    horizon: f64,
    step: f64,
    seed: SeedRecord,
    burn_in: Option<f64>,
) -> Result<QueuePath> {
    check_drift(c)?;
    if !(horizon > 0.0) || !(step > 0.0) {
        return Err(Error::Parameter("horizon and step must be positive".into()));
    }
    let rule = burn_in_rule(model, c)?;
    let tb = burn_in.unwrap_or(rule);
    let mut warnings = Vec::new();
    if tb < rule {
        warnings.push(format!("burn-in {tb} is below the default rule {rule}"));
    }
    let n_burn = (tb / step).ceil() as usize;
    let n_keep = (horizon / step).floor() as usize + 1;
    let total = n_burn + n_keep;
    let sampler = IncrementSampler::new(model, step, total - 1)?;
    let mut inc = vec![0.0; total - 1];
    sampler.sample_into(&mut replica_rng(seed.master, seed.stream), &mut Workspace::default(), &mut inc)?;
    let mut q = Vec::with_capacity(total);
    let drain = c * step;
    let mut cur = 0.0f64;
    q.push(0.0);
    for dx in inc {
        cur = (cur + dx - drain).max(0.0);
        q.push(cur);
    }
    let values = q.split_off(n_burn);
    Ok(QueuePath {
        grid: GridSpec::new(step, n_keep.max(2), 0.0)?,
        values,
        drift: c,
        burn_in: n_burn as f64 * step,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub t: f64,
    /// Last grid time s ≤ t with Q(s) ≥ f(s); `None` if there is none.
    pub xi: Option<f64>,
    /// Whether a crossing happened since the previous checkpoint.
    pub crossed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub boundary: String,
    pub checkpoints: Vec<CheckpointRecord>,
    /// Grid times at which a run of Q ≥ f begins.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crossing_times: Vec<f64>,
}

/// ξ_f(t) = sup{s ≤ t : Q(s) ≥ f(s)} at each checkpoint, resolved on the grid.
pub fn last_passage(
    q: &QueuePath,
    name: &str,
    f: impl Fn(f64) -> f64,
    checkpoints: &[f64],
) -> Result<CrossingRecord> {
    let g = q.grid;
    let fv: Vec<f64> = (0..q.values.len()).map(|k| f(g.time(k))).collect();
    if let Some(k) = fv.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::Boundary(format!("boundary is negative or undefined at t = {}", g.time(k))));
    }
    if let Some(k) = fv.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::Boundary(format!("boundary decreases at t = {}", g.time(k + 1))));
    }
    if checkpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("checkpoints must be sorted".into()));
    }
    let end = g.time(q.values.len() - 1);
    if let Some(&t) = checkpoints.iter().find(|&&t| t < g.origin || t > end * (1.0 + 1e-12)) {
        return Err(Error::Parameter(format!("checkpoint {t} lies outside the grid [{}, {end}]", g.origin)));
    }
    let mut crossing_times = Vec::new();
    let mut last: Option<usize> = None;
    let mut records = Vec::with_capacity(checkpoints.len());
    let mut k = 0usize;
    let mut crossed = false;
    let mut prev_hit = false;
    for &t in checkpoints {
        let idx = (((t - g.origin) / g.step) * (1.0 + 1e-14)).floor() as usize;
        let idx = idx.min(q.values.len() - 1);
        while k <= idx {
            let hit = q.values[k] >= fv[k];
            if hit {
                last = Some(k);
                crossed = true;
                if !prev_hit {
                    crossing_times.push(g.time(k));
                }
            }
            prev_hit = hit;
            k += 1;
        }
        records.push(CheckpointRecord { t, xi: last.map(|j| g.time(j)), crossed });
        crossed = false;
    }
    Ok(CrossingRecord { boundary: name.to_string(), checkpoints: records, crossing_times })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::assemble_path;

    fn path(inc: &[f64], step: f64) -> SampledPath {
        assemble_path(inc, GridSpec::new(step, inc.len() + 1, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn lindley_examples() {
        let q = reflect_lindley(&path(&[2.0, -3.0, 2.0], 1.0), 1.0, 0.0).unwrap();
        assert_eq!(q.values, vec![0.0, 1.0, 0.0, 1.0]);
        let q = reflect_lindley(&path(&[0.0; 8], 1.0), 1.0, 5.0).unwrap();
        assert_eq!(q.values, vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let q = reflect_lindley(&path(&[0.0; 8], 1.0), 1.0, 0.0).unwrap();
        assert!(q.values.iter().all(|&v| v == 0.0));
        assert!(reflect_lindley(&path(&[0.0], 1.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let p = path(&[2.0, -3.0, 2.0], 1.0);
        assert_eq!(brute_force_sup(&p, 1.0).unwrap().values, vec![0.0, 1.0, 0.0, 1.0]);
        // X(t) = 2ct gives Q(t) = ct
        let c = 0.7;
        let p = path(&[2.0 * c * 0.5; 10], 0.5);
        let q = brute_force_sup(&p, c).unwrap();
        for (k, v) in q.values.iter().enumerate() {
            assert!((v - c * 0.5 * k as f64).abs() < 1e-12);
        }
        let single = SampledPath { grid: GridSpec { step: 1.0, count: 1, origin: 0.0 }, values: vec![0.0], seed: None };
        assert_eq!(brute_force_sup(&single, 1.0).unwrap().values, vec![0.0]);
    }

    #[test]
    fn hitting_time_of_fbm() {
        let m = VarianceModel::fbm(0.5).unwrap();
        assert!((hitting_time(&m, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((hitting_time(&m, 2.0).unwrap() - 0.25).abs() < 1e-15);
        let ou = VarianceModel::srd(crate::variance::SrdCorrelation::exp_power(1.0).unwrap()).unwrap();
        let t = hitting_time(&ou, 0.5).unwrap();
        assert!((ou.sigma(t) / (0.5 * t) - 1.0).abs() < 1e-9);
        assert_eq!(hitting_time(&ou, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn last_passage_examples() {
        let q = QueuePath {
            grid: GridSpec::new(1.0, 4, 0.0).unwrap(),
            values: vec![0.0, 1.0, 0.0, 1.0],
            drift: 1.0,
            burn_in: 0.0,
            warnings: vec![],
        };
        let r = last_passage(&q, "half", |_| 0.5, &[2.0]).unwrap();
        assert_eq!(r.checkpoints[0].xi, Some(1.0));
        let r = last_passage(&q, "zero", |_| 0.0, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        for c in &r.checkpoints {
            assert_eq!(c.xi, Some(c.t));
        }
        let r = last_passage(&q, "huge", |_| 1e9, &[3.0]).unwrap();
        assert_eq!(r.checkpoints[0].xi, None);
        assert!(matches!(last_passage(&q, "down", |t| 5.0 - t, &[3.0]), Err(Error::Boundary(_))));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"xi\":null"));
    }

    #[test]
    fn stationary_queue_warns_on_short_burn_in() {
        let m = VarianceModel::fbm(0.5).unwrap();
        let seed = SeedRecord { master: 1, stream: 0 };
        let q = stationary_queue(&m, 1.0, 2.0, 0.01, seed, Some(1.0)).unwrap();
        assert_eq!(q.warnings.len(), 1);
        assert_eq!(q.values.len(), 201);
        let q = stationary_queue(&m, 1.0, 2.0, 0.01, seed, None).unwrap();
        assert!(q.warnings.is_empty() && (q.burn_in - 20.0).abs() < 1e-9);
    }
}
