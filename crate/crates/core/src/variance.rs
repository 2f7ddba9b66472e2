//! Variance functions σ²(t) = Var X(t) of Gaussian inputs with stationary
//! increments, together with their regular-variation data at zero and at
//! infinity.
//!
//! Three families are supported:
//!
//! * fractional Brownian motion, σ²(t) = |t|^{2H};
//! * integrated short-range dependent processes, σ²(t) = 2∫₀ᵗ∫₀ˢ r(v) dv ds,
//!   with r from [`SrdCorrelation`];
//! * user tables interpolated by monotone cubic Hermite splines in log–log
//!   space with power-law extrapolation beyond the table.
//!
//! Every other module reads σ² and the exponents (α₀, A₀, α_∞, A_∞) through
//! [`VarianceModel`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, integrate};

/// Anything that can report Var X(t) for a process with stationary
/// increments. Implementations must be symmetric in `t`.
pub trait VarianceFunction: Send + Sync {
    fn variance(&self, t: f64) -> f64;

    /// Autocovariance at lag `k` of the increments X((j+1)δ) − X(jδ).
    fn increment_covariance(&self, delta: f64, k: usize) -> f64 {
        if k == 0 {
            return self.variance(delta);
        }
        let t = k as f64 * delta;
        0.5 * (self.variance(t + delta) - 2.0 * self.variance(t) + self.variance(t - delta))
    }
}

/// ½((k+1)^{2H} − 2k^{2H} + (k−1)^{2H}) written through expm1/ln_1p so the
/// second difference keeps its relative accuracy at large k.
pub(crate) fn power_second_difference(hurst: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if hurst == 0.5 {
        return 0.0;
    }
    let a = 2.0 * hurst;
    if k == 1 {
        return 0.5 * (2f64.powf(a) - 2.0);
    }
    let kf = k as f64;
    let x = 1.0 / kf;
    let up = (a * x.ln_1p()).exp_m1();
    let down = (a * (-x).ln_1p()).exp_m1();
    0.5 * kf.powf(a) * (up + down)
}

/// Regular-variation data: σ²(t) ~ A₀ t^{2α₀} at 0⁺ and σ²(t) ~ A_∞ t^{2α_∞}
/// at ∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularVariation {
    pub alpha0: f64,
    pub a0: f64,
    pub alpha_inf: f64,
    pub a_inf: f64,
}

/// Built-in correlation functions of the stationary integrand Y of an
/// integrated process X(t) = ∫₀ᵗ Y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SrdCorrelation {
    /// r(t) = exp(-|t|^a), a ∈ (0, 2].
    ExpPower { a: f64 },
}

impl SrdCorrelation {
    pub fn exp_power(a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 2.0) {
            return Err(Error::Parameter(format!(
                "exponential-power exponent must lie in (0, 2], got {a}"
            )));
        }
        Ok(SrdCorrelation::ExpPower { a })
    }

    #[inline]
    pub fn r(&self, t: f64) -> f64 {
        match *self {
            SrdCorrelation::ExpPower { a } => {
                if a == 1.0 {
                    (-t.abs()).exp()
                } else {
                    (-t.abs().powf(a)).exp()
                }
            }
        }
    }

    /// G = 1 / ∫₀^∞ r.
    pub fn g(&self) -> f64 {
        match *self {
            SrdCorrelation::ExpPower { a } => 1.0 / statrs::function::gamma::gamma(1.0 + 1.0 / a),
        }
    }

    /// G₁ = ∫₀^∞ t r(t) dt.
    pub fn g1(&self) -> f64 {
        match *self {
            SrdCorrelation::ExpPower { a } => statrs::function::gamma::gamma(2.0 / a) / a,
        }
    }

    /// Checks the short-range conditions by quadrature: continuity with
    /// r(0) = 1 and t·r(t) → 0, monotone decrease with a finite integral,
    /// and a finite second moment ∫ t²|r|.
    pub fn verify_short_range(&self) -> Vec<ConditionCheck> {
        let mut checks = Vec::new();
        let r0 = self.r(0.0);
        let tail: Vec<(f64, f64)> = [1e1, 1e2, 1e3, 1e4]
            .iter()
            .map(|&t| (t, t * self.r(t)))
            .collect();
        let s1 = (r0 - 1.0).abs() < 1e-15 && tail.windows(2).all(|w| w[1].1 <= w[0].1) && tail[3].1 < 1e-3;
        checks.push(ConditionCheck {
            name: "S1: r(0)=1 and t r(t) -> 0".into(),
            passed: s1,
            detail: format!("r(0) = {r0}"),
            measured: tail,
        });

        let grid: Vec<f64> = (0..400).map(|k| 1e-6 * 10f64.powf(k as f64 / 40.0)).collect();
        let decreasing = grid.windows(2).all(|w| self.r(w[1]) <= self.r(w[0]));
        let moment = |power: i32| -> Result<f64> {
            let head = integrate(|t| t.powi(power) * self.r(t), 0.0, 1.0, 1e-12, 0.0)?;
            // t = 1/x maps [1, ∞) to (0, 1]
            let rest = integrate(
                |x| {
                    if x <= 0.0 {
                        0.0
                    } else {
                        let t = 1.0 / x;
                        t.powi(power) * self.r(t) / (x * x)
                    }
                },
                0.0,
                1.0,
                1e-12,
                1e-300,
            )?;
            Ok(head.value + rest.value)
        };
        match moment(0) {
            Ok(i0) => {
                let closed = 1.0 / self.g();
                checks.push(ConditionCheck {
                    name: "S2: r decreasing, finite integral 1/G".into(),
                    passed: decreasing && i0.is_finite() && (i0 - closed).abs() <= 1e-8 * closed,
                    detail: format!("quadrature {i0:.12e} vs closed form {closed:.12e}"),
                    measured: vec![(0.0, i0)],
                });
            }
            Err(e) => checks.push(ConditionCheck::failed("S2: r decreasing, finite integral 1/G", e)),
        }
        match moment(2) {
            Ok(i2) => checks.push(ConditionCheck {
                name: "S3: finite second moment".into(),
                passed: i2.is_finite(),
                detail: format!("int t^2 r = {i2:.12e}"),
                measured: vec![(2.0, i2)],
            }),
            Err(e) => checks.push(ConditionCheck::failed("S3: finite second moment", e)),
        }
        checks
    }
}

/// σ² for an integrated SRD process, memoized on a geometric knot grid.
///
/// σ²(t) = 2(t·I₀(t) − I₁(t)) with I₀ = ∫₀ᵗ r and I₁ = ∫₀ᵗ v r(v) dv, which
/// is the double integral after exchanging the order of integration. The
/// cumulative integrals are stored at knots tₖ = T_MIN·2^{k/8}; evaluation
/// adds one short quadrature from the nearest knot below.
#[derive(Debug)]
struct SrdVariance {
    corr: SrdCorrelation,
    knots: Vec<f64>,
    i0: Vec<f64>,
    i1: Vec<f64>,
}

const SRD_T_MIN: f64 = 1e-8;
const SRD_T_MAX: f64 = 1e12;
const SRD_KNOTS_PER_OCTAVE: f64 = 8.0;
const SRD_REL_TOL: f64 = 1e-13;

impl SrdVariance {
    fn new(corr: SrdCorrelation) -> Result<Self> {
        let r = |t: f64| corr.r(t);
        let mut knots = vec![SRD_T_MIN];
        let first0 = integrate(r, 0.0, SRD_T_MIN, SRD_REL_TOL, 0.0)?.value;
        let first1 = integrate(|v| v * r(v), 0.0, SRD_T_MIN, SRD_REL_TOL, 0.0)?.value;
        let mut i0 = vec![first0];
        let mut i1 = vec![first1];
        let ratio = 2f64.powf(1.0 / SRD_KNOTS_PER_OCTAVE);
        let mut acc0 = crate::numeric::CompensatedSum::new();
        let mut acc1 = crate::numeric::CompensatedSum::new();
        acc0.add(first0);
        acc1.add(first1);
        let mut t = SRD_T_MIN;
        while t < SRD_T_MAX {
            let next = t * ratio;
            // absolute floors keep underflowing tails from stalling the quadrature
            let floor0 = 1e-17 * acc0.value();
            let floor1 = 1e-17 * acc1.value();
            acc0.add(integrate(r, t, next, SRD_REL_TOL, floor0)?.value);
            acc1.add(integrate(|v| v * r(v), t, next, SRD_REL_TOL, floor1)?.value);
            knots.push(next);
            i0.push(acc0.value());
            i1.push(acc1.value());
            t = next;
        }
        if !i0.iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter("correlation function is not integrable".into()));
        }
        Ok(SrdVariance { corr, knots, i0, i1 })
    }

    fn knot_below(&self, t: f64) -> usize {
        let k = ((t / SRD_T_MIN).log2() * SRD_KNOTS_PER_OCTAVE).floor() as isize;
        let mut k = k.clamp(0, self.knots.len() as isize - 1) as usize;
        // guard against rounding in the log
        while k > 0 && self.knots[k] > t {
            k -= 1;
        }
        while k + 1 < self.knots.len() && self.knots[k + 1] <= t {
            k += 1;
        }
        k
    }

    /// (I₀(t), I₁(t)).
    fn cumulative(&self, t: f64) -> (f64, f64) {
        let r = |v: f64| self.corr.r(v);
        if t < SRD_T_MIN {
            let a = integrate(r, 0.0, t, SRD_REL_TOL, 0.0).map(|q| q.value).unwrap_or(t);
            let b = integrate(|v| v * r(v), 0.0, t, SRD_REL_TOL, 0.0)
                .map(|q| q.value)
                .unwrap_or(0.5 * t * t);
            return (a, b);
        }
        let k = self.knot_below(t);
        let base = self.knots[k];
        if t == base {
            return (self.i0[k], self.i1[k]);
        }
        let a = integrate(r, base, t, SRD_REL_TOL, 1e-17 * self.i0[k])
            .map(|q| q.value)
            .unwrap_or(f64::NAN);
        let b = integrate(|v| v * r(v), base, t, SRD_REL_TOL, 1e-17 * self.i1[k])
            .map(|q| q.value)
            .unwrap_or(f64::NAN);
        (self.i0[k] + a, self.i1[k] + b)
    }

    fn sigma2(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        if t < SRD_T_MIN {
            // direct single integral 2∫₀ᵗ (t − v) r(v) dv avoids the subtraction
            return 2.0
                * integrate(|v| (t - v) * self.corr.r(v), 0.0, t, SRD_REL_TOL, 0.0)
                    .map(|q| q.value)
                    .unwrap_or(t * t);
        }
        let (a, b) = self.cumulative(t);
        2.0 * (t * a - b)
    }
}

/// Monotone cubic Hermite interpolation of ln σ² against ln t.
#[derive(Debug)]
struct TabulatedVariance {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl TabulatedVariance {
    fn new(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::Parameter(
                "a variance table needs at least two (t, sigma2) pairs of equal length".into(),
            ));
        }
        if times.iter().zip(values).any(|(&t, &v)| !(t > 0.0) || !(v > 0.0) || !t.is_finite() || !v.is_finite()) {
            return Err(Error::Parameter("table entries must be positive and finite".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("table times must be strictly increasing".into()));
        }
        let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = x.len();
        let secant: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut slope = vec![0.0; n];
        slope[0] = secant[0];
        slope[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            let (d0, d1) = (secant[i - 1], secant[i]);
            slope[i] = if d0 * d1 <= 0.0 {
                0.0
            } else {
                // weighted harmonic mean (Fritsch–Butland)
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                (w0 + w1) / (w0 / d0 + w1 / d1)
            };
        }
        Ok(TabulatedVariance { x, y, slope })
    }

    fn ln_sigma2(&self, lt: f64) -> f64 {
        let n = self.x.len();
        if lt <= self.x[0] {
            return self.y[0] + self.slope[0] * (lt - self.x[0]);
        }
        if lt >= self.x[n - 1] {
            return self.y[n - 1] + self.slope[n - 1] * (lt - self.x[n - 1]);
        }
        let i = match self.x.binary_search_by(|p| p.total_cmp(&lt)) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (lt - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.slope[i] + h01 * self.y[i + 1] + h11 * h * self.slope[i + 1]
    }

    fn sigma2(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            0.0
        } else {
            self.ln_sigma2(t.ln()).exp()
        }
    }

    fn end_exponents(&self) -> RegularVariation {
        let n = self.x.len();
        let alpha0 = 0.5 * self.slope[0];
        let alpha_inf = 0.5 * self.slope[n - 1];
        RegularVariation {
            alpha0,
            a0: (self.y[0] - self.slope[0] * self.x[0]).exp(),
            alpha_inf,
            a_inf: (self.y[n - 1] - self.slope[n - 1] * self.x[n - 1]).exp(),
        }
    }
}

#[derive(Debug, Clone)]
enum ModelKind {
    Fbm { hurst: f64 },
    Srd(Arc<SrdVariance>),
    Tabulated(Arc<TabulatedVariance>),
}

/// The variance model of the input process. Immutable and cheap to clone;
/// the SRD cache is filled at construction.
#[derive(Debug, Clone)]
pub struct VarianceModel {
    kind: ModelKind,
    exponents: RegularVariation,
}

/// Coarse model family, for reporting and branching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Fbm,
    SrdIntegrated,
    Tabulated,
}

impl VarianceModel {
    /// Fractional Brownian motion with Hurst index H ∈ (0, 1].
    pub fn fbm(hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst <= 1.0) {
            return Err(Error::Parameter(format!("Hurst index must lie in (0, 1], got {hurst}")));
        }
        Ok(VarianceModel {
            kind: ModelKind::Fbm { hurst },
            exponents: RegularVariation { alpha0: hurst, a0: 1.0, alpha_inf: hurst, a_inf: 1.0 },
        })
    }

    /// Integrated stationary process with correlation `corr`:
    /// σ²(t) ~ t² at zero and σ²(t) ~ (2/G) t at infinity.
    pub fn srd(corr: SrdCorrelation) -> Result<Self> {
        let SrdCorrelation::ExpPower { a } = corr;
        SrdCorrelation::exp_power(a)?;
        let g = corr.g();
        let cache = SrdVariance::new(corr)?;
        Ok(VarianceModel {
            kind: ModelKind::Srd(Arc::new(cache)),
            exponents: RegularVariation { alpha0: 1.0, a0: corr.r(0.0), alpha_inf: 0.5, a_inf: 2.0 / g },
        })
    }

    /// Tabulated σ²; exponents default to the end slopes of the log–log
    /// interpolant, which are also the slopes of its power-law extrapolation.
    pub fn tabulated(times: &[f64], values: &[f64]) -> Result<Self> {
        let table = TabulatedVariance::new(times, values)?;
        let exponents = table.end_exponents();
        Ok(VarianceModel { kind: ModelKind::Tabulated(Arc::new(table)), exponents })
    }

    /// Replace the regular-variation data with explicit values.
    pub fn with_exponents(mut self, exponents: RegularVariation) -> Self {
        self.exponents = exponents;
        self
    }

    pub fn family(&self) -> ModelFamily {
        match self.kind {
            ModelKind::Fbm { .. } => ModelFamily::Fbm,
            ModelKind::Srd(_) => ModelFamily::SrdIntegrated,
            ModelKind::Tabulated(_) => ModelFamily::Tabulated,
        }
    }

    pub fn hurst(&self) -> Option<f64> {
        match self.kind {
            ModelKind::Fbm { hurst } => Some(hurst),
            _ => None,
        }
    }

    pub fn srd_correlation(&self) -> Option<SrdCorrelation> {
        match &self.kind {
            ModelKind::Srd(s) => Some(s.corr),
            _ => None,
        }
    }

    pub fn exponents(&self) -> RegularVariation {
        self.exponents
    }

    /// σ²(t) for t ≥ 0.
    pub fn sigma2(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("sigma2 needs t >= 0, got {t}")));
        }
        Ok(self.variance(t))
    }

    #[inline]
    pub fn sigma(&self, t: f64) -> f64 {
        self.variance(t).sqrt()
    }

    /// (dσ²/dt, d²σ²/dt²) at t > 0.
    pub fn sigma2_derivatives(&self, t: f64) -> Result<(f64, f64)> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("derivatives need t > 0, got {t}")));
        }
        Ok(match &self.kind {
            ModelKind::Fbm { hurst } => {
                let h2 = 2.0 * hurst;
                (h2 * t.powf(h2 - 1.0), h2 * (h2 - 1.0) * t.powf(h2 - 2.0))
            }
            ModelKind::Srd(s) => {
                let (i0, _) = s.cumulative(t);
                (2.0 * i0, 2.0 * s.corr.r(t))
            }
            ModelKind::Tabulated(tab) => {
                let h = t * 1e-5;
                let (lo, mid, hi) = (tab.sigma2(t - h), tab.sigma2(t), tab.sigma2(t + h));
                ((hi - lo) / (2.0 * h), (hi - 2.0 * mid + lo) / (h * h))
            }
        })
    }

    /// Generalized inverse ←σ(y) = inf{t ≥ 0 : σ(t) ≥ y}.
    pub fn sigma_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("sigma inverse needs finite y >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if let ModelKind::Fbm { hurst } = self.kind {
            return Ok(y.powf(1.0 / hurst));
        }
        let target = y * y;
        let ex = self.exponents;
        // start from whichever power law is closer, then bracket
        let guess = if target < ex.a0 {
            (target / ex.a0).powf(0.5 / ex.alpha0.max(1e-3))
        } else {
            (target / ex.a_inf).powf(0.5 / ex.alpha_inf.max(1e-3))
        };
        let guess = if guess.is_finite() && guess > 0.0 { guess } else { 1.0 };
        let (mut lo, mut hi) = (guess, guess);
        let mut steps = 0;
        while self.variance(hi) < target {
            hi *= 2.0;
            steps += 1;
            if steps > 2000 || !hi.is_finite() {
                return Err(Error::Numeric(format!("sigma inverse: cannot bracket y = {y}")));
            }
        }
        while lo > 0.0 && self.variance(lo) >= target {
            lo *= 0.5;
            steps += 1;
            if steps > 4000 {
                return Ok(0.0);
            }
        }
        Ok(bisect_predicate(|t| self.variance(t) >= target, lo, hi, 1e-15, 400))
    }
}

impl VarianceFunction for VarianceModel {
    #[inline]
    fn variance(&self, t: f64) -> f64 {
        match &self.kind {
            ModelKind::Fbm { hurst } => {
                let t = t.abs();
                if *hurst == 0.5 {
                    t
                } else if t == 0.0 {
                    0.0
                } else {
                    t.powf(2.0 * hurst)
                }
            }
            ModelKind::Srd(s) => s.sigma2(t),
            ModelKind::Tabulated(tab) => tab.sigma2(t),
        }
    }

    fn increment_covariance(&self, delta: f64, k: usize) -> f64 {
        match &self.kind {
            ModelKind::Fbm { hurst } => delta.powf(2.0 * hurst) * power_second_difference(*hurst, k),
            ModelKind::Srd(s) if k > 0 => {
                // ∫_{−δ}^{δ} (δ − |v|) r(kδ + v) dv, free of the cancellation in
                // the second difference once r(kδ) is small
                let base = k as f64 * delta;
                let f = |v: f64| (delta - v.abs()) * s.corr.r(base + v);
                let left = integrate(f, -delta, 0.0, 1e-12, 1e-300).map(|q| q.value);
                let right = integrate(f, 0.0, delta, 1e-12, 1e-300).map(|q| q.value);
                match (left, right) {
                    (Ok(a), Ok(b)) => a + b,
                    _ => 0.5 * (s.sigma2(base + delta) - 2.0 * s.sigma2(base) + s.sigma2(base - delta)),
                }
            }
            _ => {
                if k == 0 {
                    return self.variance(delta);
                }
                let t = k as f64 * delta;
                0.5 * (self.variance(t + delta) - 2.0 * self.variance(t) + self.variance(t - delta))
            }
        }
    }
}

/// σ_V²(t) = amplitude² · σ²(time_scale · t): the variance of
/// amplitude · X(time_scale · t).
#[derive(Debug, Clone)]
pub struct ScaledVariance<'a> {
    pub base: &'a VarianceModel,
    pub time_scale: f64,
    pub amplitude: f64,
}

impl VarianceFunction for ScaledVariance<'_> {
    fn variance(&self, t: f64) -> f64 {
        self.amplitude * self.amplitude * self.base.variance(self.time_scale * t)
    }
}

/// Pure power law σ²(t) = |t|^{2H}, used for Pickands processes B_H.
#[derive(Debug, Clone, Copy)]
pub struct PowerVariance {
    pub index: f64,
}

impl VarianceFunction for PowerVariance {
    fn variance(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            0.0
        } else {
            t.powf(2.0 * self.index)
        }
    }

    fn increment_covariance(&self, delta: f64, k: usize) -> f64 {
        delta.powf(2.0 * self.index) * power_second_difference(self.index, k)
    }
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// (t, measured value) pairs backing the verdict.
    pub measured: Vec<(f64, f64)>,
}

impl ConditionCheck {
    fn failed(name: &str, e: Error) -> Self {
        ConditionCheck { name: name.into(), passed: false, detail: e.to_string(), measured: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
    /// H = 1 fBm: admissible only as the degenerate Pickands oracle.
    pub degenerate_pickands_oracle: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Relative deviation allowed between the measured limit ratios and A₀, A_∞.
pub const LIMIT_RATIO_TOLERANCE: f64 = 0.01;

/// Numeric check of the regularity assumptions at zero and infinity.
///
/// Limit ratios are measured on t ∈ {10³, …, 10⁶} and t ∈ {10⁻⁶, …, 10⁻³};
/// ultimate monotonicity of both derivatives is checked on [10², 10⁶] only.
pub fn validate_ai_aii(model: &VarianceModel) -> ValidationReport {
    let ex = model.exponents();
    let mut checks = Vec::new();

    checks.push(ConditionCheck {
        name: "AI: alpha_inf in (0,1), A_inf > 0".into(),
        passed: ex.alpha_inf > 0.0 && ex.alpha_inf < 1.0 && ex.a_inf > 0.0,
        detail: format!("alpha_inf = {}, A_inf = {}", ex.alpha_inf, ex.a_inf),
        measured: vec![],
    });
    checks.push(ConditionCheck {
        name: "AII: alpha0 in (0,1], A0 > 0".into(),
        passed: ex.alpha0 > 0.0 && ex.alpha0 <= 1.0 && ex.a0 > 0.0,
        detail: format!("alpha0 = {}, A0 = {}", ex.alpha0, ex.a0),
        measured: vec![],
    });

    let ratio_check = |name: &str, ts: &[f64], alpha: f64, target: f64| {
        let measured: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| (t, model.variance(t) / t.powf(2.0 * alpha)))
            .collect();
        let worst = measured
            .iter()
            .map(|&(_, r)| (r / target - 1.0).abs())
            .fold(0.0f64, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
        ConditionCheck {
            name: name.into(),
            passed: target > 0.0 && worst <= LIMIT_RATIO_TOLERANCE,
            detail: format!("max relative deviation from {target} is {worst:.3e}"),
            measured,
        }
    };
    checks.push(ratio_check(
        "AI: sigma2(t)/t^(2 alpha_inf) -> A_inf",
        &[1e3, 1e4, 1e5, 1e6],
        ex.alpha_inf,
        ex.a_inf,
    ));
    checks.push(ratio_check(
        "AII: sigma2(t)/t^(2 alpha0) -> A0",
        &[1e-6, 1e-5, 1e-4, 1e-3],
        ex.alpha0,
        ex.a0,
    ));

    let grid: Vec<f64> = (0..=80).map(|k| 1e-6 * 10f64.powf(k as f64 / 6.666_666_666_666_667)).collect();
    let positive = grid.iter().all(|&t| model.variance(t) > 0.0) && model.variance(0.0) == 0.0;
    checks.push(ConditionCheck {
        name: "sigma2 positive on (0, inf), zero at 0".into(),
        passed: positive,
        detail: format!("checked on {} points in [1e-6, 1e6]", grid.len()),
        measured: vec![],
    });

    let tail: Vec<f64> = (0..=40).map(|k| 1e2 * 10f64.powf(k as f64 / 10.0)).collect();
    let derivs: Vec<(f64, f64)> = tail
        .iter()
        .map(|&t| model.sigma2_derivatives(t).unwrap_or((f64::NAN, f64::NAN)))
        .collect();
    let monotone = |xs: Vec<f64>| -> bool {
        let tol = |a: f64, b: f64| 1e-9 * a.abs().max(b.abs()) + 1e-300;
        let up = xs.windows(2).all(|w| w[1] >= w[0] - tol(w[0], w[1]));
        let down = xs.windows(2).all(|w| w[1] <= w[0] + tol(w[0], w[1]));
        xs.iter().all(|v| v.is_finite()) && (up || down)
    };
    let first_ok = monotone(derivs.iter().map(|d| d.0).collect());
    let second_ok = monotone(derivs.iter().map(|d| d.1).collect());
    checks.push(ConditionCheck {
        name: "AI: derivatives ultimately monotone (window [1e2, 1e6])".into(),
        passed: first_ok && second_ok,
        detail: format!("first derivative monotone: {first_ok}, second: {second_ok}"),
        measured: tail.iter().zip(&derivs).map(|(&t, d)| (t, d.0)).collect(),
    });

    let degenerate = matches!(model.kind, ModelKind::Fbm { hurst } if hurst == 1.0);
    if let Some(corr) = model.srd_correlation() {
        checks.extend(corr.verify_short_range());
    }
    ValidationReport { checks, degenerate_pickands_oracle: degenerate }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou() -> VarianceModel {
        VarianceModel::srd(SrdCorrelation::exp_power(1.0).unwrap()).unwrap()
    }

    fn ou_sigma2(t: f64) -> f64 {
        2.0 * (t + (-t).exp() - 1.0)
    }

    #[test]
    fn fbm_brownian_value() {
        let m = VarianceModel::fbm(0.5).unwrap();
        assert_eq!(m.sigma2(4.0).unwrap(), 4.0);
        assert_eq!(m.sigma2(0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_time_is_a_domain_error() {
        let m = VarianceModel::fbm(0.3).unwrap();
        assert!(matches!(m.sigma2(-1.0), Err(Error::Domain(_))));
        assert!(matches!(m.sigma2_derivatives(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ou_variance_matches_symbolic_double_integral() {
        let m = ou();
        assert_eq!(m.sigma2(0.0).unwrap(), 0.0);
        let v = m.sigma2(1.0).unwrap();
        assert!((v - 2.0 / std::f64::consts::E).abs() < 1e-12, "{v}");
        // independent oracle: nested quadrature of the double integral
        let oracle = integrate(
            |s| 2.0 * integrate(|v: f64| (-v).exp(), 0.0, s, 1e-13, 0.0).unwrap().value,
            0.0,
            1.0,
            1e-13,
            0.0,
        )
        .unwrap()
        .value;
        assert!((v - oracle).abs() < 1e-11);
        for &t in &[1e-9, 1e-5, 0.37, 3.0, 42.0, 1e3, 1e7] {
            let exact = if t < 1e-4 { t * t - t * t * t / 3.0 } else { ou_sigma2(t) };
            let got = m.variance(t);
            assert!(((got - exact) / exact).abs() < 1e-10, "t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn analytic_derivatives() {
        let m = VarianceModel::fbm(0.5).unwrap();
        assert_eq!(m.sigma2_derivatives(3.0).unwrap(), (1.0, 0.0));
        let m = VarianceModel::fbm(0.75).unwrap();
        let (d1, d2) = m.sigma2_derivatives(1.0).unwrap();
        assert!((d1 - 1.5).abs() < 1e-15 && (d2 - 0.75).abs() < 1e-15);
        let (d1, d2) = ou().sigma2_derivatives(50.0).unwrap();
        assert!((d1 - 2.0).abs() < 1e-12);
        assert!((d2 - 2.0 * (-50f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        let models = [
            VarianceModel::fbm(0.3).unwrap(),
            VarianceModel::fbm(0.75).unwrap(),
            ou(),
            VarianceModel::srd(SrdCorrelation::exp_power(1.5).unwrap()).unwrap(),
        ];
        for m in &models {
            for k in 0..=20 {
                let t = 0.01 * 10f64.powf(k as f64 / 5.0);
                let (d1, d2) = m.sigma2_derivatives(t).unwrap();
                let h = t * 1e-4;
                let fd1 = (m.variance(t + h) - m.variance(t - h)) / (2.0 * h);
                assert!(((fd1 - d1) / d1).abs() < 1e-6, "{:?} t={t}: {fd1} vs {d1}", m.family());
                let h = t * 1e-4;
                let (a, _) = m.sigma2_derivatives(t + h).unwrap();
                let (b, _) = m.sigma2_derivatives(t - h).unwrap();
                let fd2 = (a - b) / (2.0 * h);
                let scale = d2.abs().max(1e-6 * d1.abs() / t);
                assert!((fd2 - d2).abs() <= 1e-5 * scale, "{:?} t={t}: {fd2} vs {d2}", m.family());
            }
        }
    }

    #[test]
    fn stable_second_difference_matches_naive_at_small_lags() {
        for &h in &[0.1, 0.3, 0.5, 0.75, 1.0] {
            for k in 1..50usize {
                let kf = k as f64;
                let naive = 0.5 * ((kf + 1.0).powf(2.0 * h) - 2.0 * kf.powf(2.0 * h) + (kf - 1.0).powf(2.0 * h));
                let got = power_second_difference(h, k);
                // the naive form itself carries rounding of order ε·k^{2H}
                assert!((got - naive).abs() <= 1e-14 * (kf + 1.0).powf(2.0 * h), "h={h} k={k}");
            }
        }
        // asymptotically H(2H−1) k^{2H−2}
        let k = 1usize << 20;
        let got = power_second_difference(0.75, k);
        let lead = 0.75 * 0.5 * (k as f64).powf(-0.5);
        assert!((got / lead - 1.0).abs() < 1e-9);
    }

    #[test]
    fn srd_increment_covariance_by_quadrature() {
        let m = ou();
        let d = 0.1f64;
        for k in 1..30usize {
            let t = k as f64 * d;
            let exact = 0.5 * (ou_sigma2(t + d) - 2.0 * ou_sigma2(t) + ou_sigma2(t - d));
            let got = m.increment_covariance(d, k);
            assert!((got / exact - 1.0).abs() < 1e-9, "k={k}");
        }
        // closed form e^{−kδ}(cosh δ − 1)·2 for r = e^{−t}
        let k = 400;
        let exact = 2.0 * (-(k as f64) * d).exp() * (d.cosh() - 1.0);
        assert!((m.increment_covariance(d, k) / exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fbm_self_similarity() {
        for &h in &[0.2, 0.5, 0.85] {
            let m = VarianceModel::fbm(h).unwrap();
            for &(a, t) in &[(2.0, 3.0), (0.1, 7.5), (1e3, 1e-2)] {
                let lhs = m.variance(a * t);
                let rhs = a.powf(2.0 * h) * m.variance(t);
                assert!(((lhs - rhs) / rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn srd_shape_near_zero_and_infinity() {
        for &a in &[0.5, 1.0, 2.0] {
            let corr = SrdCorrelation::exp_power(a).unwrap();
            let m = VarianceModel::srd(corr).unwrap();
            let g = corr.g();
            assert!(((m.variance(1e4) / 1e4) * g / 2.0 - 1.0).abs() < 0.01);
            assert!((m.variance(1e-6) / 1e-12 - 1.0).abs() < 0.01);
            let small: Vec<f64> = (1..50).map(|k| k as f64 * 1e-3).collect();
            // convex increasing near the origin
            for w in small.windows(3) {
                let (x, y, z) = (m.variance(w[0]), m.variance(w[1]), m.variance(w[2]));
                assert!(y > x && z - y > y - x);
            }
        }
    }

    #[test]
    fn short_range_conditions_hold_for_builtins() {
        for &a in &[0.5, 1.0, 1.7, 2.0] {
            let corr = SrdCorrelation::exp_power(a).unwrap();
            for c in corr.verify_short_range() {
                assert!(c.passed, "a={a}: {} ({})", c.name, c.detail);
            }
        }
        let c = SrdCorrelation::exp_power(1.0).unwrap();
        assert!((c.g() - 1.0).abs() < 1e-14 && (c.g1() - 1.0).abs() < 1e-14);
        assert!(SrdCorrelation::exp_power(2.5).is_err());
    }

    #[test]
    fn validator_accepts_fbm_and_ou() {
        let r = validate_ai_aii(&VarianceModel::fbm(0.3).unwrap());
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        let ex = VarianceModel::fbm(0.3).unwrap().exponents();
        assert_eq!((ex.alpha0, ex.alpha_inf, ex.a0, ex.a_inf), (0.3, 0.3, 1.0, 1.0));

        let m = ou();
        let r = validate_ai_aii(&m);
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        let ex = m.exponents();
        assert_eq!((ex.alpha0, ex.a0, ex.alpha_inf, ex.a_inf), (1.0, 1.0, 0.5, 2.0));
    }

    #[test]
    fn validator_flags_degenerate_and_flat_tail() {
        let r = validate_ai_aii(&VarianceModel::fbm(1.0).unwrap());
        assert!(!r.passed() && r.degenerate_pickands_oracle);

        let ts: Vec<f64> = (0..40).map(|k| 1e-3 * 10f64.powf(k as f64 / 6.0)).collect();
        let vs: Vec<f64> = ts.iter().map(|&t| t.min(10.0)).collect();
        let flat = VarianceModel::tabulated(&ts, &vs)
            .unwrap()
            .with_exponents(RegularVariation { alpha0: 0.5, a0: 1.0, alpha_inf: 0.5, a_inf: 1.0 });
        let r = validate_ai_aii(&flat);
        let ai = r.checks.iter().find(|c| c.name.starts_with("AI: sigma2")).unwrap();
        assert!(!ai.passed);
        assert!(ai.measured.last().unwrap().1 < 0.1);
    }

    #[test]
    fn tabulated_reproduces_power_laws() {
        let ts: Vec<f64> = (0..25).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
        let vs: Vec<f64> = ts.iter().map(|&t| t.powf(1.4)).collect();
        let m = VarianceModel::tabulated(&ts, &vs).unwrap();
        for &t in &[1e-8, 2e-3, 0.77, 55.0, 1e9] {
            assert!((m.variance(t) / t.powf(1.4) - 1.0).abs() < 1e-12);
        }
        let ex = m.exponents();
        assert!((ex.alpha0 - 0.7).abs() < 1e-12 && (ex.alpha_inf - 0.7).abs() < 1e-12);
        assert!(validate_ai_aii(&m).passed());
    }

    #[test]
    fn tabulated_interpolation_is_monotone_and_positive() {
        let ts = [0.1, 0.5, 1.0, 2.0, 10.0];
        let vs = [0.01, 0.2, 0.9, 1.0, 5.0];
        let m = VarianceModel::tabulated(&ts, &vs).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|k| 0.1 * 100f64.powf(k as f64 / 1000.0)).collect();
        for w in grid.windows(2) {
            assert!(m.variance(w[1]) >= m.variance(w[0]) && m.variance(w[0]) > 0.0);
        }
        assert!(VarianceModel::tabulated(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sigma_inverse_round_trips() {
        let models = [VarianceModel::fbm(0.5).unwrap(), VarianceModel::fbm(0.3).unwrap(), ou()];
        for m in &models {
            for &t in &[1e-4, 0.3, 1.0, 17.0, 1e5] {
                let y = m.sigma(t);
                let back = m.sigma_inverse(y).unwrap();
                assert!(((back - t) / t).abs() < 1e-10, "{:?}: {back} vs {t}", m.family());
            }
        }
        assert_eq!(VarianceModel::fbm(0.5).unwrap().sigma_inverse(3.0).unwrap(), 9.0);
        assert!(ou().sigma_inverse(-1.0).is_err());
    }
}
