//! Monte Carlo result record, exact pooling, config fingerprints and the
//! replica-parallel runner.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::sampling::Workspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub replicas: u64,
    pub seed: u64,
    /// sha256 of the canonical configuration that produced the estimate.
    pub fingerprint: String,
    /// Seconds spent; excluded from serialized output so that result files
    /// stay byte-identical between runs.
    #[serde(skip)]
    pub wall_time: Option<f64>,
    /// One-sided 95% upper bound, reported when no success was observed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_bound_95: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub low_statistics: bool,
}

impl McEstimate {
    /// Sample mean and sd/√n of `samples`.
    pub fn from_samples(samples: &[f64], seed: u64, fingerprint: &str) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::Parameter("an estimate needs at least one replica".into()));
        }
        let mut sum = CompensatedSum::new();
        for &x in samples {
            sum.add(x);
        }
        let mean = sum.value() / n as f64;
        let mut ss = CompensatedSum::new();
        for &x in samples {
            ss.add((x - mean) * (x - mean));
        }
        let var = if n > 1 { ss.value() / (n - 1) as f64 } else { 0.0 };
        Ok(McEstimate {
            value: mean,
            stderr: (var / n as f64).sqrt(),
            replicas: n as u64,
            seed,
            fingerprint: fingerprint.to_string(),
            wall_time: None,
            upper_bound_95: None,
            low_statistics: false,
        })
    }

    /// Binomial proportion with stderr √(p(1−p)/n). Zero successes give the
    /// one-sided 95% bound 1 − 0.05^{1/n} and the low-statistics flag.
    pub fn from_successes(successes: u64, replicas: u64, seed: u64, fingerprint: &str) -> Result<Self> {
        if replicas == 0 || successes > replicas {
            return Err(Error::Parameter(format!("invalid binomial count {successes}/{replicas}")));
        }
        let p = successes as f64 / replicas as f64;
        let mut est = McEstimate {
            value: p,
            stderr: (p * (1.0 - p) / replicas as f64).sqrt(),
            replicas,
            seed,
            fingerprint: fingerprint.to_string(),
            wall_time: None,
            upper_bound_95: None,
            low_statistics: successes < 10,
        };
        if successes == 0 {
            est.upper_bound_95 = Some(1.0 - 0.05f64.powf(1.0 / replicas as f64));
        }
        Ok(est)
    }

    /// Pools independent estimates of the same quantity as if their replicas
    /// had been run together.
    pub fn pool(parts: &[McEstimate]) -> Result<McEstimate> {
        let first = parts.first().ok_or_else(|| Error::Parameter("nothing to pool".into()))?;
        let n: u64 = parts.iter().map(|e| e.replicas).sum();
        let nf = n as f64;
        let mut total = CompensatedSum::new();
        for e in parts {
            total.add(e.replicas as f64 * e.value);
        }
        let mean = total.value() / nf;
        let mut ss = CompensatedSum::new();
        for e in parts {
            let ni = e.replicas as f64;
            // within-part sum of squares recovered from the sample variance
            let var = e.stderr * e.stderr * ni;
            ss.add(var * (ni - 1.0));
            ss.add(ni * (e.value - mean) * (e.value - mean));
        }
        let var = if n > 1 { ss.value() / (nf - 1.0) } else { 0.0 };
        Ok(McEstimate {
            value: mean,
            stderr: (var / nf).sqrt(),
            replicas: n,
            seed: first.seed,
            fingerprint: first.fingerprint.clone(),
            wall_time: parts.iter().map(|e| e.wall_time).sum(),
            upper_bound_95: None,
            low_statistics: parts.iter().all(|e| e.low_statistics),
        })
    }

    pub fn with_wall_time(mut self, seconds: f64) -> Self {
        self.wall_time = Some(seconds);
        self
    }
}

/// Lowercase hex sha256 of the canonical JSON form of `config`.
pub fn fingerprint<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configuration serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Runs `job(replica, workspace)` for replicas `0..n` on `workers` threads
/// and returns the results in replica order. Results depend only on the
/// replica index, never on scheduling.
pub fn run_replicas<T, F>(n: u64, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut Workspace) -> Result<T> + Sync + Send,
{
    let run = || -> Result<Vec<T>> {
        (0..n)
            .into_par_iter()
            .map_init(Workspace::default, |ws, r| job(r, ws))
            .collect()
    };
    if workers <= 1 {
        let mut ws = Workspace::default();
        return (0..n).map(|r| job(r, &mut ws)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    pool.install(run)
}

/// Seconds since `start`.
pub fn elapsed(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}
