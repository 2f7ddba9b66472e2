//! Closed-form and numerically optimized quantities of the large-level
//! analysis: the level function m(u) and its inverse, the most likely
//! overflow horizon τ(u), the constant bundle (τ*, A, B, γ, ζ, 𝒞), the
//! asymptotic tail ψ(u), the boundary family f_p with its window h_p, the
//! discretization grid, and the correlation structure of the field Z_u.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, golden_section, ln_normal_sf};
use crate::variance::{ModelFamily, RegularVariation, SrdCorrelation, VarianceFunction, VarianceModel};

/// Outputs of the asymptotic formulas are flagged valid from this m(u) on.
pub const VALIDITY_LEVEL: f64 = 3.0;
/// Smallest u probed by the inverse of m.
pub const U_PROBE_MIN: f64 = 1e-12;

const SCAN_HALF_WIDTH: f64 = 25.0;
const SCAN_POINTS: usize = 201;
const MAX_ITER: usize = 200;

/// The process whose Pickands constant enters the tail asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PickandsProcess {
    /// Fractional Brownian motion B_H.
    Fbm { index: f64 },
    /// amplitude · X(time_scale · t) for the input process X itself.
    ScaledInput { amplitude: f64, time_scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AsymptoticConstants {
    pub drift_c: f64,
    pub alpha0: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    pub alpha_inf: f64,
    #[serde(rename = "AInf")]
    pub a_inf: f64,
    pub tau_star: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b_coef: f64,
    /// B/(2A), the curvature of σ_u at its maximum.
    pub b: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// (γ − 1)/(2(1 − α_∞)), the log₂ coefficient inside f_p at p = 0.
    pub kappa: f64,
    pub zeta_alpha: f64,
    pub eta: PickandsProcess,
    pub pickands_h: Option<f64>,
    /// 𝒞; `None` while the Pickands constant is pending.
    pub scr_c: Option<f64>,
}

impl AsymptoticConstants {
    pub fn pickands(&self) -> Result<f64> {
        self.pickands_h.ok_or_else(|| {
            Error::Pending(
                "the Pickands constant of eta is unknown for this model; estimate it with the pickands \
                 subcommand and pass it explicitly"
                    .into(),
            )
        })
    }

    pub fn scr_c(&self) -> Result<f64> {
        self.scr_c.ok_or_else(|| self.pickands().unwrap_err())
    }
}

/// γ for the exponents (α₀, α_∞).
pub fn gamma_exponent(alpha0: f64, alpha_inf: f64) -> f64 {
    if alpha_inf >= 0.5 {
        2.0 * (1.0 - alpha_inf) / alpha_inf
    } else {
        2.0 * (1.0 + alpha0 - 2.0 * alpha_inf) / alpha0
    }
}

/// Pickands constants known in closed form: 1 for Brownian motion (also in
/// its scaled form) and 1/√π for B₁(t) = tN.
pub fn known_pickands(model: &VarianceModel, eta: &PickandsProcess) -> Option<f64> {
    match *eta {
        PickandsProcess::Fbm { index } if index == 0.5 => Some(1.0),
        PickandsProcess::Fbm { index } if index == 1.0 => Some(1.0 / std::f64::consts::PI.sqrt()),
        PickandsProcess::ScaledInput { amplitude, time_scale } => match model.hurst() {
            Some(h) if h == 0.5 => {
                // amplitude²·σ²(time_scale·t) = t exactly makes η a standard BM
                let unit = amplitude * amplitude * time_scale;
                ((unit - 1.0).abs() < 1e-12).then_some(1.0)
            }
            _ => None,
        },
        _ => None,
    }
}

/// Solution of the inner optimization defining m(u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSolution {
    pub u: f64,
    /// Minimizer τ(u) of (1 + cτ)/σ(uτ); maximizer of σ_u.
    pub tau: f64,
    pub m: f64,
}

/// Asymptotic tail value with its validity annotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiAsymptotic {
    pub u: f64,
    pub m: f64,
    pub ln_value: f64,
    pub value: f64,
    /// m(u) ≥ 3.
    pub valid: bool,
}

/// Grid on [0, T] × J(u) used for the discrete supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiscretizationGrid {
    pub u: f64,
    pub horizon: f64,
    pub theta: f64,
    /// Δ(u) = ←σ(√2 σ²(uτ*)/(u(1 + cτ*))).
    pub delta: f64,
    /// q(u) = θΔ(u)/u.
    pub q: f64,
    /// τ*(u) = ln m(u)/m(u), the half-width of J(u).
    pub tau_window: f64,
    /// τ(u), the centre of J(u).
    pub tau_center: f64,
    pub l_max: usize,
    pub n_max: usize,
}

impl DiscretizationGrid {
    #[inline]
    pub fn s(&self, l: usize) -> f64 {
        l as f64 * self.q
    }

    #[inline]
    pub fn tau(&self, n: i64) -> f64 {
        self.tau_center + n as f64 * self.q
    }

    /// E_{l,n} = [s_l, s_{l+1}] × [τ_n, τ_{n+1}].
    pub fn cell(&self, l: usize, n: i64) -> ((f64, f64), (f64, f64)) {
        ((self.s(l), self.s(l + 1)), (self.tau(n), self.tau(n + 1)))
    }

    pub fn in_window(&self, tau: f64) -> bool {
        (tau - self.tau_center).abs() <= self.tau_window * (1.0 + 1e-12)
    }

    pub fn points(&self) -> usize {
        (self.l_max + 1) * (2 * self.n_max + 1)
    }
}

/// Everything that depends on a (model, c) pair. Immutable; cheap to share.
#[derive(Debug, Clone)]
pub struct Asymptotics {
    model: VarianceModel,
    c: f64,
    constants: AsymptoticConstants,
    /// m(U_PROBE_MIN), computed on first use.
    floor: OnceLock<f64>,
}

impl Asymptotics {
    /// Constants with the Pickands constant taken from the closed-form table,
    /// or pending when unknown.
    pub fn new(model: &VarianceModel, c: f64) -> Result<Self> {
        Self::build(model, c, None)
    }

    /// Constants with an explicitly supplied Pickands constant.
    pub fn with_pickands(model: &VarianceModel, c: f64, pickands_h: f64) -> Result<Self> {
        if !(pickands_h > 0.0) || !pickands_h.is_finite() {
            return Err(Error::Parameter(format!("Pickands constant must be positive, got {pickands_h}")));
        }
        Self::build(model, c, Some(pickands_h))
    }

    fn build(model: &VarianceModel, c: f64, pickands_h: Option<f64>) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Parameter(format!("drift c must be positive, got {c}")));
        }
        let RegularVariation { alpha0, a0, alpha_inf, a_inf } = model.exponents();
        if !(alpha_inf > 0.0 && alpha_inf < 1.0) || !(a_inf > 0.0) {
            return Err(Error::Parameter(format!(
                "the asymptotics need alpha_inf in (0,1) and A_inf > 0, got {alpha_inf} and {a_inf}"
            )));
        }
        if !(alpha0 > 0.0 && alpha0 <= 1.0) || !(a0 > 0.0) {
            return Err(Error::Parameter(format!(
                "the asymptotics need alpha0 in (0,1] and A0 > 0, got {alpha0} and {a0}"
            )));
        }
        let tau_star = alpha_inf / (c * (1.0 - alpha_inf));
        let a = tau_star.powf(-alpha_inf) / (1.0 - alpha_inf);
        let b_coef = tau_star.powf(-alpha_inf - 2.0) * alpha_inf;
        let gamma = gamma_exponent(alpha0, alpha_inf);
        let kappa = (gamma - 1.0) / (2.0 * (1.0 - alpha_inf));
        let drift = 1.0 + c * tau_star;
        let (zeta_alpha, eta) = if alpha_inf > 0.5 {
            let base = (2.0 * a_inf).sqrt() * tau_star.powf(2.0 * alpha_inf) / drift;
            (base.powf(-2.0 / alpha_inf), PickandsProcess::Fbm { index: alpha_inf })
        } else if alpha_inf == 0.5 {
            let level = std::f64::consts::SQRT_2 * a_inf * tau_star / drift;
            let scale = model.sigma_inverse(level)?;
            (scale.powi(-2), PickandsProcess::ScaledInput { amplitude: 1.0 / level, time_scale: scale })
        } else {
            let base = std::f64::consts::SQRT_2 * a_inf * tau_star.powf(2.0 * alpha_inf) / (a0.sqrt() * drift);
            (base.powf(-2.0 / alpha0), PickandsProcess::Fbm { index: alpha0 })
        };
        let pickands_h = pickands_h.or_else(|| known_pickands(model, &eta));
        let scr_c = pickands_h.map(|h| {
            0.5 * h * h
                * (a / b_coef).sqrt()
                * zeta_alpha
                * ((2.0 * a_inf).sqrt() / a).powf((gamma - 1.0) / (1.0 - alpha_inf))
        });
        let constants = AsymptoticConstants {
            drift_c: c,
            alpha0,
            a0,
            alpha_inf,
            a_inf,
            tau_star,
            a,
            b_coef,
            b: b_coef / (2.0 * a),
            lambda: 1.0 - alpha_inf,
            gamma,
            kappa,
            zeta_alpha,
            eta,
            pickands_h,
            scr_c,
        };
        Ok(Asymptotics { model: model.clone(), c, constants, floor: OnceLock::new() })
    }

    pub fn constants(&self) -> &AsymptoticConstants {
        &self.constants
    }

    pub fn model(&self) -> &VarianceModel {
        &self.model
    }

    pub fn drift(&self) -> f64 {
        self.c
    }

    /// ln of (1 + c e^x)/σ(u e^x).
    fn profile(&self, u: f64, x: f64) -> f64 {
        let t = x.exp();
        (self.c * t).ln_1p() - 0.5 * self.model.variance(u * t).ln()
    }

    /// d/dx of [`profile`](Self::profile).
    fn profile_slope(&self, u: f64, x: f64) -> f64 {
        let t = x.exp();
        let ut = u * t;
        let d1 = self.model.sigma2_derivatives(ut).map(|d| d.0).unwrap_or(f64::NAN);
        self.c * t / (1.0 + self.c * t) - 0.5 * ut * d1 / self.model.variance(ut)
    }

    /// m(u) and τ(u) by a log-grid scan, golden-section refinement and a
    /// bisection polish on the sign of the derivative.
    pub fn level(&self, u: f64) -> Result<LevelSolution> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::Domain(format!("m(u) needs finite u > 0, got {u}")));
        }
        if let Some(h) = self.model.hurst() {
            if h == self.constants.alpha_inf {
                // scale invariance: τ(u) = τ*, m(u) = A u^{1−H}
                let tau = self.constants.tau_star;
                let m = u * (1.0 + self.c * tau) / self.model.sigma(u * tau);
                return Ok(LevelSolution { u, tau, m });
            }
        }
        self.level_numeric(u)
    }

    /// The generic optimizer, also used for fBm in tests as a cross-check.
    pub fn level_numeric(&self, u: f64) -> Result<LevelSolution> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::Domain(format!("m(u) needs finite u > 0, got {u}")));
        }
        let center = self.constants.tau_star.ln();
        let step = 2.0 * SCAN_HALF_WIDTH / (SCAN_POINTS - 1) as f64;
        let xs: Vec<f64> = (0..SCAN_POINTS).map(|i| center - SCAN_HALF_WIDTH + i as f64 * step).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| self.profile(u, x)).collect();
        let (imin, _) = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::Numeric(format!("m({u}): profile is not finite anywhere")))?;
        let dump = || {
            let pts: Vec<String> = xs
                .iter()
                .zip(&vals)
                .step_by(20)
                .map(|(x, v)| format!("({:.3e}, {:.6e})", x.exp(), v))
                .collect();
            pts.join(" ")
        };
        if imin == 0 || imin == SCAN_POINTS - 1 {
            return Err(Error::Numeric(format!(
                "m({u}): minimum at the scan boundary t = {:.3e}; profile {}",
                xs[imin].exp(),
                dump()
            )));
        }
        let minima = (1..SCAN_POINTS - 1)
            .filter(|&i| vals[i] < vals[i - 1] && vals[i] <= vals[i + 1])
            .filter(|&i| vals[i] - vals[imin] < 1e-9 * vals[imin].abs().max(1.0))
            .count();
        if minima > 1 {
            return Err(Error::Numeric(format!("m({u}): several minima of equal depth; profile {}", dump())));
        }
        let (mut lo, mut x, mut hi) = golden_section(|x| self.profile(u, x), xs[imin - 1], xs[imin + 1], 1e-12, MAX_ITER);
        if (hi - lo) > 1e-6 {
            return Err(Error::Numeric(format!(
                "m({u}): golden section did not converge, bracket [{:.6e}, {:.6e}]",
                lo.exp(),
                hi.exp()
            )));
        }
        // polish on the derivative where it changes sign
        lo = (x - 1e-5).max(xs[imin - 1]);
        hi = (x + 1e-5).min(xs[imin + 1]);
        let (slo, shi) = (self.profile_slope(u, lo), self.profile_slope(u, hi));
        if slo < 0.0 && shi > 0.0 {
            let root = bisect_predicate(|y| self.profile_slope(u, y) >= 0.0, lo, hi, 0.0, MAX_ITER);
            let px = self.profile(u, x);
            if self.profile(u, root) <= px + 8.0 * f64::EPSILON * px.abs().max(1.0) {
                x = root;
            }
        }
        let tau = x.exp();
        let m = u * (1.0 + self.c * tau) / self.model.sigma(u * tau);
        Ok(LevelSolution { u, tau, m })
    }

    pub fn m(&self, u: f64) -> Result<f64> {
        Ok(self.level(u)?.m)
    }

    pub fn tau_center(&self, u: f64) -> Result<f64> {
        Ok(self.level(u)?.tau)
    }

    /// d ln m / d ln u at u, by the envelope theorem.
    fn m_elasticity(&self, sol: &LevelSolution) -> f64 {
        let t = sol.u * sol.tau;
        let d1 = self.model.sigma2_derivatives(t).map(|d| d.0).unwrap_or(f64::NAN);
        1.0 - 0.5 * t * d1 / self.model.variance(t)
    }

    /// ←m(v) = inf{u : m(u) ≥ v}, by safeguarded Newton steps on ln m
    /// against ln u.
    pub fn m_inverse(&self, v: f64) -> Result<f64> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("inverse of m needs finite v > 0, got {v}")));
        }
        let floor = match self.floor.get() {
            Some(&f) => f,
            None => {
                let f = self.m(U_PROBE_MIN)?;
                let _ = self.floor.set(f);
                f
            }
        };
        if v <= floor {
            return Err(Error::Domain(format!(
                "v = {v} is below the probed range of m (m({U_PROBE_MIN:e}) = {floor:e})"
            )));
        }
        let ex = &self.constants;
        let guess = (v * ex.a_inf.sqrt() / ex.a).powf(1.0 / (1.0 - ex.alpha_inf));
        let target = v.ln();
        let mut y = guess.max(U_PROBE_MIN * 2.0).ln();
        // bracket [ylo, yhi] with m(e^ylo) < v ≤ m(e^yhi)
        let mut ylo = U_PROBE_MIN.ln();
        let mut yhi = f64::INFINITY;
        for _ in 0..MAX_ITER {
            let sol = self.level(y.exp())?;
            let g = sol.m.ln() - target;
            if g >= 0.0 {
                yhi = yhi.min(y);
            } else {
                ylo = ylo.max(y);
            }
            if g.abs() <= 4.0 * f64::EPSILON * target.abs().max(1.0) {
                let u = y.exp();
                self.check_monotone(u)?;
                return Ok(u);
            }
            let slope = self.m_elasticity(&sol);
            let mut next = y - g / slope;
            if !next.is_finite() || next < ylo || next > yhi || slope <= 0.0 {
                next = if yhi.is_finite() { 0.5 * (ylo + yhi) } else { y + 2.0 };
            }
            if (next - y).abs() <= 1e-15 * y.abs().max(1.0) {
                let u = next.exp();
                self.check_monotone(u)?;
                return Ok(u);
            }
            y = next;
            if yhi.is_finite() && yhi - ylo <= 1e-15 * yhi.abs().max(1.0) {
                self.check_monotone(yhi.exp())?;
                return Ok(yhi.exp());
            }
        }
        Err(Error::Numeric(format!("inverse of m did not converge at v = {v}, bracket [{:e}, {:e}]", ylo.exp(), yhi.exp())))
    }

    /// Confirms m is nondecreasing on a short probe grid below `u`, so that
    /// the root found is the generalized inverse.
    fn check_monotone(&self, u: f64) -> Result<()> {
        if self.model.family() == ModelFamily::Fbm {
            return Ok(());
        }
        let probes: Vec<f64> = (0..4).map(|k| u * 2f64.powi(-(k as i32) * 3)).filter(|&p| p >= U_PROBE_MIN).collect();
        let ms: Vec<f64> = probes.iter().map(|&p| self.m(p)).collect::<Result<_>>()?;
        if ms.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            return Err(Error::Numeric(format!("m is not nondecreasing below u = {u}; generalized inverse is ambiguous")));
        }
        Ok(())
    }

    /// σ_u(τ) = σ(uτ)·m(u)/(u(1 + cτ)).
    pub fn sigma_u(&self, u: f64, tau: f64) -> Result<f64> {
        if !(u > 0.0) || !(tau > 0.0) {
            return Err(Error::Domain(format!("sigma_u needs u, tau > 0, got {u}, {tau}")));
        }
        let m = self.m(u)?;
        Ok(self.model.sigma(u * tau) * m / (u * (1.0 + self.c * tau)))
    }

    /// ψ(u) ≈ 𝓗²·√(2Aπ/B)·ζ·u^γ·Ψ(m)/m, evaluated in log space.
    pub fn psi(&self, u: f64) -> Result<PsiAsymptotic> {
        let h = self.constants.pickands()?;
        let m = self.m(u)?;
        Ok(self.psi_at_level(u, m, h))
    }

    /// [`psi`](Self::psi) when m(u) is already known.
    pub fn psi_with_level(&self, u: f64, m: f64) -> Result<PsiAsymptotic> {
        let h = self.constants.pickands()?;
        Ok(self.psi_at_level(u, m, h))
    }

    fn psi_at_level(&self, u: f64, m: f64, h: f64) -> PsiAsymptotic {
        let k = &self.constants;
        let ln_value = 2.0 * h.ln()
            + 0.5 * (2.0 * k.a * std::f64::consts::PI / k.b_coef).ln()
            + k.zeta_alpha.ln()
            + k.gamma * u.ln()
            + ln_normal_sf(m)
            - m.ln();
        PsiAsymptotic { u, m, ln_value, value: ln_value.exp(), valid: m >= VALIDITY_LEVEL }
    }

    /// The level √(2(ln t + (κ − p) ln ln t)) whose inverse under m is f_p(t).
    pub fn f_p_level(&self, p: f64, t: f64) -> Result<f64> {
        if !(t > std::f64::consts::E) || !t.is_finite() {
            return Err(Error::Domain(format!("f_p needs t > e, got {t}")));
        }
        let arg = 2.0 * (t.ln() + (self.constants.kappa - p) * t.ln().ln());
        if !(arg >= 0.0) {
            return Err(Error::Domain(format!("f_p: negative square-root argument {arg:e} at p = {p}, t = {t}")));
        }
        Ok(arg.sqrt())
    }

    pub fn f_p(&self, p: f64, t: f64) -> Result<f64> {
        self.m_inverse(self.f_p_level(p, t)?)
    }

    /// ln h_p(t) = ln(p·f_p(t)/ψ(f_p(t))·ln ln t).
    pub fn ln_h_p(&self, p: f64, t: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(Error::Domain(format!("h_p needs p > 0, got {p}")));
        }
        let f = self.f_p(p, t)?;
        let psi = self.psi(f)?;
        Ok(p.ln() + f.ln() - psi.ln_value + t.ln().ln().ln())
    }

    pub fn h_p(&self, p: f64, t: f64) -> Result<f64> {
        Ok(self.ln_h_p(p, t)?.exp())
    }

    /// Discretization of [0, T] × J(u) with mesh θΔ(u)/u.
    pub fn grid(&self, u: f64, horizon: f64, theta: f64) -> Result<DiscretizationGrid> {
        if !(u > 0.0) || !(horizon > 0.0) || !(theta > 0.0) {
            return Err(Error::Parameter(format!("grid needs u, T, theta > 0, got {u}, {horizon}, {theta}")));
        }
        let ts = self.constants.tau_star;
        let level = std::f64::consts::SQRT_2 * self.model.variance(u * ts) / (u * (1.0 + self.c * ts));
        let delta = self
            .model
            .sigma_inverse(level)
            .map_err(|e| Error::Numeric(format!("Delta(u) root-find failed: {e}")))?;
        let sol = self.level(u)?;
        let q = theta * delta / u;
        let tau_window = sol.m.ln() / sol.m;
        let l_max = (horizon / q).floor();
        let n_max = (tau_window.max(0.0) / q).floor();
        if l_max > 1e15 || n_max > 1e15 {
            return Err(Error::Capacity(format!("grid with q = {q:e} is too fine")));
        }
        Ok(DiscretizationGrid {
            u,
            horizon,
            theta,
            delta,
            q,
            tau_window,
            tau_center: sol.tau,
            l_max: l_max as usize,
            n_max: n_max as usize,
        })
    }

    /// (constant, exponent) of the almost-sure limsup of Q(t)/(ln t)^exponent.
    pub fn limsup_constant(&self) -> (f64, f64) {
        let k = &self.constants;
        let exponent = 1.0 / (2.0 * (1.0 - k.alpha_inf));
        ((2.0 * k.a_inf / (k.a * k.a)).powf(exponent), exponent)
    }

    /// The field correlation r_{u,u'}(s, τ, s', τ').
    pub fn correlation(&self, u: f64, u2: f64, s: f64, tau: f64, s2: f64, tau2: f64) -> f64 {
        correlation_field(&self.model, u, u2, s, tau, s2, tau2)
    }
}

/// Correlation of Z_u(s, τ) and Z_{u'}(s', τ'):
/// (−σ²(|d + uτ − u'τ'|) + σ²(|d + uτ|) + σ²(|d − u'τ'|) − σ²(|d|)) / (2σ(uτ)σ(u'τ'))
/// with d = us − u's'.
pub fn correlation_field<V: VarianceFunction + ?Sized>(
    model: &V,
    u: f64,
    u2: f64,
    s: f64,
    tau: f64,
    s2: f64,
    tau2: f64,
) -> f64 {
    let d = u * s - u2 * s2;
    let a = u * tau;
    let b = u2 * tau2;
    let num = -model.variance((d + a - b).abs()) + model.variance((d + a).abs()) + model.variance((d - b).abs())
        - model.variance(d.abs());
    num / (2.0 * (model.variance(a) * model.variance(b)).sqrt())
}

/// Right side of the decorrelation bound for widely separated blocks:
/// (1 − 2ε)^{2(α_∞ − 1)}·(√(uτ·u'τ')/|us − u's'|)^{2λ}.
pub fn separated_correlation_bound(alpha_inf: f64, eps: f64, u: f64, u2: f64, s: f64, tau: f64, s2: f64, tau2: f64) -> f64 {
    let lambda = 1.0 - alpha_inf;
    (1.0 - 2.0 * eps).powf(2.0 * (alpha_inf - 1.0)) * ((u * tau * u2 * tau2).sqrt() / (u * s - u2 * s2).abs()).powf(2.0 * lambda)
}

/// g(t) = (|t + τ*|^{2α} + |t − τ*|^{2α} − 2|t|^{2α}) / (2τ*^{2α}).
pub fn g_limit(alpha_inf: f64, tau_star: f64, t: f64) -> f64 {
    let p = 2.0 * alpha_inf;
    let pw = |x: f64| if x == 0.0 { 0.0 } else { x.abs().powf(p) };
    (pw(t + tau_star) + pw(t - tau_star) - 2.0 * pw(t)) / (2.0 * tau_star.powf(p))
}

/// Largest c_δ ∈ (0, 1/2) (to grid resolution) with
/// inf_{|t|<c_δ} g(t) > δ and sup_{|t|>δ} g(t) < 1 − c_δ, or `None`. The
/// near side is also checked at c_δ itself, so the answer errs small.
pub fn g_window_constant(alpha_inf: f64, tau_star: f64, delta: f64) -> Option<f64> {
    let near: Vec<f64> = (0..=2000).map(|k| 0.5 * k as f64 / 2000.0).collect();
    let far_sup = (0..=10_000)
        .map(|k| delta * (1e6f64).powf(k as f64 / 10_000.0))
        .map(|t| g_limit(alpha_inf, tau_star, t))
        .chain(std::iter::once(g_limit(alpha_inf, tau_star, delta * (1.0 + 1e-12))))
        .fold(f64::MIN, f64::max);
    (1..500)
        .rev()
        .map(|k| k as f64 / 1000.0)
        .find(|&cd| {
            let inf_near = near
                .iter()
                .filter(|&&t| t < cd)
                .chain(std::iter::once(&cd))
                .map(|&t| g_limit(alpha_inf, tau_star, t))
                .fold(f64::MAX, f64::min);
            inf_near > delta && far_sup < 1.0 - cd
        })
}

/// m̂(u) = √(2Gu + 2G²G₁) for an integrated short-range process.
pub fn m_hat(corr: &SrdCorrelation, u: f64) -> f64 {
    let (g, g1) = (corr.g(), corr.g1());
    (2.0 * g * u + 2.0 * g * g * g1).sqrt()
}

/// ←m̂(v) = v²/(2G) − G·G₁.
pub fn m_hat_inverse(corr: &SrdCorrelation, v: f64) -> f64 {
    let (g, g1) = (corr.g(), corr.g1());
    v * v / (2.0 * g) - g * g1
}

/// f_p under the m̂ replacement: (ln t + (1 − p) ln ln t)/G − G·G₁.
pub fn f_p_hat(corr: &SrdCorrelation, p: f64, t: f64) -> Result<f64> {
    if !(t > std::f64::consts::E) {
        return Err(Error::Domain(format!("f_p needs t > e, got {t}")));
    }
    let (g, g1) = (corr.g(), corr.g1());
    let v = (t.ln() + (1.0 - p) * t.ln().ln()) / g - g * g1;
    if !(v > 0.0) {
        return Err(Error::Domain(format!("f_p is not positive at t = {t}, p = {p}")));
    }
    Ok(v)
}

/// Side-by-side m and m̂ for a short-range model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MHatComparison {
    pub u: f64,
    pub m: f64,
    pub m_hat: f64,
    pub relative_difference: f64,
}

pub fn compare_m_hat(asym: &Asymptotics, us: &[f64]) -> Result<Vec<MHatComparison>> {
    let corr = asym
        .model()
        .srd_correlation()
        .ok_or_else(|| Error::Parameter("m-hat is defined for integrated short-range models only".into()))?;
    us.iter()
        .map(|&u| {
            let m = asym.m(u)?;
            let mh = m_hat(&corr, u);
            Ok(MHatComparison { u, m, m_hat: mh, relative_difference: (mh - m) / m })
        })
        .collect()
}
