//! Analytic light-cone and clustering envelopes.
//!
//! Every envelope is evaluated in log space and exponentiated at the end, so
//! large `v t` does not overflow before the division by a power of `r`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// C (e^{vt} − 1) / r^α, α > d.
    Hk,
    /// C [e^{vt} / ((1−μ) r)^α + e^{vt − μr}], α > d.
    Zx,
    /// C (e^{Jt} − 1) / (J r^α), α ≤ d, finite N.
    SmallAlpha,
    /// C t^{α−d} / r^{α−2d}, α > 2d.
    PowerLaw,
    /// C t / r^{e(α,γ)}, d = 1, α > 3.
    Linear,
}

impl Regime {
    pub const ALL: [Regime; 5] = [Regime::Hk, Regime::Zx, Regime::SmallAlpha, Regime::PowerLaw, Regime::Linear];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Hk => "hk",
            Regime::Zx => "zx",
            Regime::SmallAlpha => "small_alpha",
            Regime::PowerLaw => "power_law",
            Regime::Linear => "linear",
        }
    }

    pub fn is_valid(self, alpha: f64, d: usize) -> bool {
        let d = d as f64;
        match self {
            Regime::Hk | Regime::Zx => alpha > d,
            Regime::SmallAlpha => alpha <= d,
            Regime::PowerLaw => alpha > 2.0 * d,
            Regime::Linear => d == 1.0 && alpha > 3.0,
        }
    }

    /// Regimes that apply to (α, d); never empty for α > 0.
    pub fn valid_for(alpha: f64, d: usize) -> Vec<Regime> {
        Regime::ALL.into_iter().filter(|r| r.is_valid(alpha, d)).collect()
    }

    fn check(self, alpha: f64, d: usize) -> Result<()> {
        if self.is_valid(alpha, d) {
            Ok(())
        } else {
            Err(Error::RegimeInvalid {
                regime: self.name().into(),
                alpha,
                d,
            })
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown regime {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundParams {
    pub alpha: f64,
    pub d: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub v: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub mu: f64,
    pub gamma_f: f64,
    pub lambda: f64,
    pub beta_ls: f64,
    pub n_sites: Option<usize>,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            alpha: 3.0,
            d: 1,
            c: 1.0,
            v: 1.0,
            k: 1.0,
            mu: 0.5,
            gamma_f: 0.25,
            lambda: 1.0,
            beta_ls: 1.0,
            n_sites: None,
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("C", self.c),
            ("v", self.v),
            ("K", self.k),
            ("lambda", self.lambda),
            ("beta_ls", self.beta_ls),
        ];
        for (name, x) in positive {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")));
            }
        }
        if self.d == 0 {
            return Err(Error::InvalidParameter("d must be positive".into()));
        }
        if !(self.mu > 0.0 && self.mu < 2.0) {
            return Err(Error::InvalidParameter(format!("mu must lie in (0, 2), got {}", self.mu)));
        }
        if !(self.gamma_f > 0.0 && self.gamma_f < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma_f must lie in (0, 1), got {}",
                self.gamma_f
            )));
        }
        Ok(())
    }

    /// Total coupling strength per site for α ≤ d: N^{1−α/d}, or ln N at α = d.
    pub fn small_alpha_j(&self) -> Result<f64> {
        let n = self
            .n_sites
            .ok_or_else(|| Error::InvalidParameter("small_alpha regime needs n_sites".into()))?;
        if n < 2 {
            return Err(Error::InvalidParameter("small_alpha regime needs n_sites >= 2".into()));
        }
        let n = n as f64;
        let d = self.d as f64;
        Ok(if self.alpha < d { n.powf(1.0 - self.alpha / d) } else { n.ln() })
    }
}

/// ln(e^x − 1) for x > 0.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// Exponentiates a log value; −∞ maps to 0.
fn from_log(l: f64) -> f64 {
    if l == f64::NEG_INFINITY {
        0.0
    } else {
        l.exp()
    }
}

fn ln_pow(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        if p > 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        p * t.ln()
    }
}

fn check_rt(r: f64, t: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be nonnegative, got {t}")));
    }
    Ok(())
}

/// Tail exponent of the linear-cone bound, 1 + (1−γ)(α−3−2γ).
pub fn linear_exponent(alpha: f64, gamma: f64) -> f64 {
    1.0 + (1.0 - gamma) * (alpha - 3.0 - 2.0 * gamma)
}

/// Light-cone envelope C(r, t) for a regime.
pub fn envelope_lr(p: &BoundParams, regime: Regime, r: f64, t: f64) -> Result<f64> {
    p.validate()?;
    check_rt(r, t)?;
    regime.check(p.alpha, p.d)?;
    let lc = p.c.ln();
    let lr = r.ln();
    let value = match regime {
        Regime::Hk => {
            if t == 0.0 {
                0.0
            } else {
                from_log(lc + ln_expm1(p.v * t) - p.alpha * lr)
            }
        }
        Regime::Zx => {
            if p.mu >= 1.0 {
                return Err(Error::InvalidParameter(format!("zx regime needs mu < 1, got {}", p.mu)));
            }
            let a = lc + p.v * t - p.alpha * ((1.0 - p.mu) * r).ln();
            let b = lc + p.v * t - p.mu * r;
            from_log(a.max(b) + (-(a - b).abs()).exp().ln_1p())
        }
        Regime::SmallAlpha => {
            let j = p.small_alpha_j()?;
            if t == 0.0 {
                0.0
            } else {
                from_log(lc + ln_expm1(j * t) - j.ln() - p.alpha * lr)
            }
        }
        Regime::PowerLaw => {
            let d = p.d as f64;
            from_log(lc + ln_pow(t, p.alpha - d) - (p.alpha - 2.0 * d) * lr)
        }
        Regime::Linear => from_log(lc + ln_pow(t, 1.0) - linear_exponent(p.alpha, p.gamma_f) * lr),
    };
    Ok(value)
}

/// Shape of the truncation-error envelope per regime: e^{vt}/r^{α−d} for the
/// exponential regimes, t^{α−d+1}/r^{α−3d}, t²/r^{α−3}, and (e^{Jt}−1)/J.
pub fn envelope_lemma1(p: &BoundParams, regime: Regime, r: f64, t: f64) -> Result<f64> {
    p.validate()?;
    check_rt(r, t)?;
    let d = p.d as f64;
    let lc = p.c.ln();
    let lr = r.ln();
    let value = match regime {
        Regime::Hk | Regime::Zx => {
            regime.check(p.alpha, p.d)?;
            from_log(lc + p.v * t - (p.alpha - d) * lr)
        }
        Regime::PowerLaw => {
            if !(p.alpha > 3.0 * d) {
                return Err(Error::RegimeInvalid {
                    regime: regime.name().into(),
                    alpha: p.alpha,
                    d: p.d,
                });
            }
            from_log(lc + ln_pow(t, p.alpha - d + 1.0) - (p.alpha - 3.0 * d) * lr)
        }
        Regime::Linear => {
            regime.check(p.alpha, p.d)?;
            from_log(lc + ln_pow(t, 2.0) - (p.alpha - 3.0) * lr)
        }
        Regime::SmallAlpha => {
            regime.check(p.alpha, p.d)?;
            let j = p.small_alpha_j()?;
            if t == 0.0 {
                0.0
            } else {
                from_log(lc + ln_expm1(j * t) - j.ln())
            }
        }
    };
    Ok(value)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HMinimum {
    pub t_star: f64,
    pub h_min: f64,
    /// Closed-form time: t̄ for the exponential case, 1 + (q/λ′) ln r otherwise.
    pub t_closed_form: f64,
    pub h_closed_form: f64,
    /// Constant c with h(t̄) = c (r^{α−d})^{−λ′/(λ′+v)} (exponential case only).
    pub envelope_constant: Option<f64>,
}

/// h(t) = e^{−λ′t} + K′ C(r, t) with λ′ = 2λ, K′ = K/4 and C the truncation shape.
pub fn h_function(p: &BoundParams, regime: Regime, r: f64, t: f64) -> Result<f64> {
    let lp = 2.0 * p.lambda;
    Ok((-lp * t).exp() + 0.25 * p.k * envelope_lemma1(p, regime, r, t)?)
}

/// Power-law exponents (time power, decay exponent) of the ansatz cases.
fn ansatz_powers(p: &BoundParams, regime: Regime) -> Result<(f64, f64)> {
    let d = p.d as f64;
    match regime {
        Regime::PowerLaw => Ok((p.alpha - d + 1.0, p.alpha - 3.0 * d)),
        Regime::Linear => Ok((2.0, p.alpha - 3.0)),
        _ => Err(Error::RegimeInvalid {
            regime: regime.name().into(),
            alpha: p.alpha,
            d: p.d,
        }),
    }
}

pub fn minimize_h(p: &BoundParams, regime: Regime, r: f64) -> Result<HMinimum> {
    p.validate()?;
    if !(r > 1.0) {
        return Err(Error::InvalidParameter(format!("minimize_h needs r > 1, got {r}")));
    }
    let lp = 2.0 * p.lambda;
    let kp = 0.25 * p.k;
    match regime {
        Regime::Hk | Regime::Zx => {
            regime.check(p.alpha, p.d)?;
            let d = p.d as f64;
            let big_r = r.powf(p.alpha - d);
            // dh/dt = 0 ⇔ λ′ e^{−λ′t} = K′ C v e^{vt} / R.
            let t_bar = ((lp * big_r / (kp * p.c * p.v)).ln() / (lp + p.v)).max(0.0);
            let h = h_function(p, regime, r, t_bar)?;
            let constant = (kp * p.c * p.v / lp).powf(lp / (lp + p.v)) * (1.0 + lp / p.v);
            Ok(HMinimum {
                t_star: t_bar,
                h_min: h,
                t_closed_form: t_bar,
                h_closed_form: h,
                envelope_constant: Some(constant),
            })
        }
        Regime::PowerLaw | Regime::Linear => {
            regime.check(p.alpha, p.d)?;
            let (pw, q) = ansatz_powers(p, regime)?;
            if q <= 0.0 {
                return Err(Error::NoDecay(q));
            }
            let t_ansatz = 1.0 + q / lp * r.ln();
            let h_ansatz = h_function(p, regime, r, t_ansatz)?;
            // h is convex with h′(0) < 0, so its unique critical point is the minimum.
            let dh = |t: f64| -> Result<f64> {
                let shape = envelope_lemma1(p, regime, r, t)?;
                let deriv = if t == 0.0 { 0.0 } else { pw * shape / t };
                Ok(-lp * (-lp * t).exp() + kp * deriv)
            };
            let mut hi = t_ansatz.max(1.0);
            while dh(hi)? < 0.0 {
                hi *= 2.0;
                if hi > 1e12 {
                    break;
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if dh(mid)? < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi.max(1.0) {
                    break;
                }
            }
            let t_star = 0.5 * (lo + hi);
            Ok(HMinimum {
                t_star,
                h_min: h_function(p, regime, r, t_star)?,
                t_closed_form: t_ansatz,
                h_closed_form: h_ansatz,
                envelope_constant: None,
            })
        }
        Regime::SmallAlpha => Err(Error::RegimeInvalid {
            regime: regime.name().into(),
            alpha: p.alpha,
            d: p.d,
        }),
    }
}

/// Largest shortfall h(t_star) − min over a uniform grid on [0, t_max].
pub fn audit_minimize_h(p: &BoundParams, regime: Regime, r: f64, points: usize) -> Result<f64> {
    let m = minimize_h(p, regime, r)?;
    let t_max = 3.0 * m.t_star.max(m.t_closed_form).max(1.0);
    let mut grid_min = f64::INFINITY;
    for i in 0..points {
        let t = t_max * i as f64 / (points - 1) as f64;
        grid_min = grid_min.min(h_function(p, regime, r, t)?);
    }
    Ok(m.h_min - grid_min)
}

/// K (q/rate)^p ln^p(r) / r^q, the leading term of h at the ansatz time.
pub fn ansatz_leading_term(k: f64, alpha: f64, d: usize, rate: f64, r: f64) -> f64 {
    let d = d as f64;
    let q = alpha - 3.0 * d;
    let p = alpha - d + 1.0;
    k * (q / rate).powf(p) * r.ln().powf(p) / r.powf(q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremKind {
    Covariance,
    Stability,
    MutualInfo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremCase {
    /// c (r^{α−d})^{−2ρ/(v+2ρ)}, α > d.
    Exponential,
    /// c ln(r)^{α−d+1} / r^{α−3d}, α > 3d.
    PowerLaw,
    /// c ln(r)² / r^{α−3}, α > 3, d = 1.
    Linear,
}

impl TheoremCase {
    pub fn is_valid(self, alpha: f64, d: usize) -> bool {
        let df = d as f64;
        match self {
            TheoremCase::Exponential => alpha > df,
            TheoremCase::PowerLaw => alpha > 3.0 * df,
            TheoremCase::Linear => d == 1 && alpha > 3.0,
        }
    }
}

/// Clustering envelope. `log_inv_norm` is ln‖ρ^{-1}‖ of the relevant state and
/// is only used by the stability and mutual-information forms.
pub fn envelope_theorem(
    p: &BoundParams,
    which: TheoremKind,
    case: TheoremCase,
    r: f64,
    log_inv_norm: f64,
) -> Result<f64> {
    p.validate()?;
    if !case.is_valid(p.alpha, p.d) {
        return Err(Error::RegimeInvalid {
            regime: format!("{case:?}"),
            alpha: p.alpha,
            d: p.d,
        });
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let d = p.d as f64;
    let rho = match which {
        TheoremKind::Covariance => p.lambda,
        TheoremKind::Stability | TheoremKind::MutualInfo => p.beta_ls,
    };
    let prefactor = match which {
        TheoremKind::Covariance => 1.0,
        TheoremKind::Stability => log_inv_norm.max(0.0).sqrt(),
        TheoremKind::MutualInfo => log_inv_norm.max(0.0).powf(1.5),
    };
    let shape = match case {
        TheoremCase::Exponential => r.powf(-(p.alpha - d) * 2.0 * rho / (p.v + 2.0 * rho)),
        TheoremCase::PowerLaw | TheoremCase::Linear => {
            if !(r > 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "logarithmic clustering forms need r > 1, got {r}"
                )));
            }
            let (pw, q) = if case == TheoremCase::PowerLaw {
                (p.alpha - d + 1.0, p.alpha - 3.0 * d)
            } else {
                (2.0, p.alpha - 3.0)
            };
            r.ln().powf(pw) / r.powf(q)
        }
    };
    Ok(p.c * prefactor * shape)
}

/// α′ = (α−d)·2λ/(v+2λ).
pub fn alpha_prime(alpha: f64, d: usize, v: f64, lambda: f64) -> f64 {
    (alpha - d as f64) * 2.0 * lambda / (v + 2.0 * lambda)
}

/// α̃ = α − 3d.
pub fn alpha_tilde(alpha: f64, d: usize) -> f64 {
    alpha - 3.0 * d as f64
}

/// (3x+4)d/x with x = v/λ: above it the power-law case decays faster.
pub fn dominance_threshold(v: f64, lambda: f64, d: usize) -> f64 {
    let x = v / lambda;
    (3.0 * x + 4.0) * d as f64 / x
}

// --- Finite-r series of the linear-cone bound --------------------------------

/// N_q = ⌈μ r / 2^{q(1+γ)}⌉.
pub fn n_q(mu: f64, gamma: f64, r: f64, q: u32) -> u64 {
    (mu * r / 2f64.powf(q as f64 * (1.0 + gamma))).ceil().max(0.0) as u64
}

/// Largest integer q with 2^{q(γ+1)} ≤ (μ r)^{1−γ}.
pub fn q_star(mu: f64, gamma: f64, r: f64) -> i64 {
    ((1.0 - gamma) * (mu * r).log2() / (1.0 + gamma)).floor() as i64
}

/// q₀ = ⌊log₂(μ r^κ)/(1+γ)⌋ with κ = 1 − γ.
pub fn q_zero(mu: f64, gamma: f64, r: f64) -> i64 {
    let kappa = 1.0 - gamma;
    ((mu.log2() + kappa * r.log2()) / (1.0 + gamma)).floor() as i64
}

/// Σ_{q=1}^{⌈log₂ r⌉} (N_q − 1) 2^q in exact integer arithmetic.
pub fn budget_sum(mu: f64, gamma: f64, r: u64) -> u128 {
    let q_max = (r as f64).log2().ceil() as u32;
    (1..=q_max)
        .map(|q| (n_q(mu, gamma, r as f64, q).saturating_sub(1) as u128) << q)
        .sum()
}

/// Largest μ in (0, 2) with budget_sum < r, by bisection to 1e-6.
pub fn auto_mu(gamma: f64, r: u64) -> Result<f64> {
    let ok = |mu: f64| budget_sum(mu, gamma, r) < r as u128;
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    if !ok(1e-9) {
        return Err(Error::OutsideValidity(format!("no admissible mu for r = {r}")));
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesBound {
    pub mu: f64,
    pub q_star: i64,
    pub q_zero: i64,
    /// (t/r) e^{−r^{1−κ}}.
    pub s1a: f64,
    /// (2e²/μ²) t / r^{1−κ(2γ+3−α)}.
    pub s1b: f64,
    /// μ^{(1−α)/(γ+1)} / (1−2^{−α}) · t / r^{(α−1)/(γ+1)−1}.
    pub s2: f64,
    pub total: f64,
    pub exponent: f64,
}

/// Finite-r evaluation of the linear-cone series with μ chosen automatically.
pub fn envelope_appendix_f(alpha: f64, gamma: f64, r: u64, t: f64) -> Result<SeriesBound> {
    if r < 2 {
        return Err(Error::OutsideValidity(format!("r >= 2 required, got {r}")));
    }
    let mu = auto_mu(gamma, r)?;
    envelope_appendix_f_with_mu(alpha, gamma, r, t, mu)
}

/// Same as [`envelope_appendix_f`] with a caller-fixed μ (which must still satisfy the budget).
pub fn envelope_appendix_f_with_mu(alpha: f64, gamma: f64, r: u64, t: f64, mu: f64) -> Result<SeriesBound> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::OutsideValidity(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if !(alpha > 3.0 + 2.0 * gamma) {
        return Err(Error::OutsideValidity(format!(
            "alpha > 3 + 2 gamma required, got alpha = {alpha}, gamma = {gamma}"
        )));
    }
    if r < 2 {
        return Err(Error::OutsideValidity(format!("r >= 2 required, got {r}")));
    }
    if budget_sum(mu, gamma, r) >= r as u128 {
        return Err(Error::OutsideValidity(format!("mu = {mu} violates the jump budget at r = {r}")));
    }
    let rf = r as f64;
    let e2 = std::f64::consts::E.powi(2);
    if !(t >= 0.0 && t <= mu * mu * rf / e2) {
        return Err(Error::OutsideValidity(format!(
            "t <= mu^2 r / e^2 = {} required, got t = {t}",
            mu * mu * rf / e2
        )));
    }
    let kappa = 1.0 - gamma;
    let exponent = linear_exponent(alpha, gamma);
    let s1a = t / rf * (-rf.powf(1.0 - kappa)).exp();
    let s1b = 2.0 * e2 / (mu * mu) * t / rf.powf(exponent);
    let s2 = mu.powf((1.0 - alpha) / (gamma + 1.0)) / (1.0 - 2f64.powf(-alpha)) * t
        / rf.powf((alpha - 1.0) / (gamma + 1.0) - 1.0);
    Ok(SeriesBound {
        mu,
        q_star: q_star(mu, gamma, rf),
        q_zero: q_zero(mu, gamma, rf),
        s1a,
        s1b,
        s2,
        total: s1a + s1b + s2,
        exponent,
    })
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64) -> BoundParams {
        BoundParams {
            alpha,
            ..BoundParams::default()
        }
    }

    #[test]
    fn hk_vanishes_at_t0() {
        assert_eq!(envelope_lr(&params(3.0), Regime::Hk, 4.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn power_law_halves_when_r_doubles() {
        let p = params(3.0);
        let a = envelope_lr(&p, Regime::PowerLaw, 5.0, 2.0).unwrap();
        let b = envelope_lr(&p, Regime::PowerLaw, 10.0, 2.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_alpha_example() {
        let p = BoundParams {
            alpha: 0.5,
            n_sites: Some(16),
            ..BoundParams::default()
        };
        let (r, t): (f64, f64) = (3.0, 0.7);
        let j: f64 = 4.0;
        let want = ((j * t).exp() - 1.0) / (j * r.powf(0.5));
        assert!((envelope_lr(&p, Regime::SmallAlpha, r, t).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn invalid_regimes_are_errors() {
        assert!(matches!(
            envelope_lr(&params(2.5), Regime::Linear, 3.0, 1.0),
            Err(Error::RegimeInvalid { .. })
        ));
        let p2 = BoundParams { d: 2, ..params(4.0) };
        assert!(envelope_lr(&p2, Regime::Linear, 3.0, 1.0).is_err());
        assert!(envelope_lr(&params(0.8), Regime::Hk, 3.0, 1.0).is_err());
        for alpha in [0.3, 1.0, 1.5, 2.5, 3.5, 7.0] {
            for d in 1..=3 {
                assert!(!Regime::valid_for(alpha, d).is_empty());
            }
        }
    }

    #[test]
    fn no_overflow_at_large_vt() {
        let p = BoundParams { v: 50.0, ..params(3.0) };
        let v = envelope_lr(&p, Regime::Hk, 1e6, 10.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
        let want = (500.0 - 18.0 * 10f64.ln()).exp();
        assert!((v / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lemma1_examples() {
        let p = params(4.0);
        assert_eq!(envelope_lemma1(&p, Regime::PowerLaw, 3.0, 0.0).unwrap(), 0.0);
        let a = envelope_lemma1(&p, Regime::PowerLaw, 3.0, 1.5).unwrap();
        let b = envelope_lemma1(&p, Regime::PowerLaw, 3.0, 3.0).unwrap();
        assert!((b / a - 16.0).abs() < 1e-10);
        for regime in [Regime::PowerLaw, Regime::Linear] {
            let x = envelope_lemma1(&p, regime, 10.0, 1.0).unwrap();
            let y = envelope_lemma1(&p, regime, 20.0, 1.0).unwrap();
            assert!((x / y - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_case_closed_form_example() {
        // K′v/(λ′R) = e^{-2} with λ′ = v = 1 gives t̄ = 1.
        let r: f64 = 4.0;
        let alpha = 3.0;
        let big_r = r.powf(alpha - 1.0);
        let k_prime = (-2.0f64).exp() * big_r;
        let p = BoundParams {
            alpha,
            k: 4.0 * k_prime,
            lambda: 0.5,
            v: 1.0,
            ..BoundParams::default()
        };
        let m = minimize_h(&p, Regime::Hk, r).unwrap();
        assert!((m.t_star - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_case_slope() {
        let p = BoundParams {
            alpha: 3.0,
            v: 1.5,
            lambda: 0.4,
            ..BoundParams::default()
        };
        let rs: Vec<f64> = (4..=12).map(|k| 2f64.powi(k)).collect();
        let hs: Vec<f64> = rs.iter().map(|&r| minimize_h(&p, Regime::Hk, r).unwrap().h_min).collect();
        let want = -(p.alpha - 1.0) * 2.0 * p.lambda / (p.v + 2.0 * p.lambda);
        assert!((loglog_slope(&rs, &hs) - want).abs() < 0.05);
    }

    #[test]
    fn ansatz_leading_term_example() {
        let r: f64 = 50.0;
        let v = ansatz_leading_term(2.0, 4.0, 1, 1.0, r);
        assert!((v - 2.0 * r.ln().powi(4) / r).abs() < 1e-12);
    }

    #[test]
    fn audit_holds_for_ansatz_cases() {
        let p = BoundParams {
            alpha: 4.5,
            k: 3.0,
            lambda: 0.3,
            ..BoundParams::default()
        };
        for regime in [Regime::PowerLaw, Regime::Linear, Regime::Hk] {
            assert!(audit_minimize_h(&p, regime, 20.0, 1000).unwrap() <= 1e-12);
        }
        let q0 = BoundParams { alpha: 2.5, ..p };
        assert!(matches!(minimize_h(&q0, Regime::PowerLaw, 20.0), Err(Error::NoDecay(_))));
    }

    #[test]
    fn theorem_envelopes() {
        let p = BoundParams {
            alpha: 4.0,
            v: 1e-9,
            lambda: 1.0,
            ..BoundParams::default()
        };
        let a = envelope_theorem(&p, TheoremKind::Covariance, TheoremCase::Exponential, 10.0, 0.0).unwrap();
        let b = envelope_theorem(&p, TheoremKind::Covariance, TheoremCase::Exponential, 20.0, 0.0).unwrap();
        assert!((loglog_slope(&[10.0, 20.0], &[a, b]) + 3.0).abs() < 1e-6);
        let q = BoundParams { beta_ls: 1.0, ..p };
        let ln_inv = 4.0 * 2f64.ln();
        for r in [2.0, 5.0, 9.0] {
            let c = envelope_theorem(&q, TheoremKind::Covariance, TheoremCase::Exponential, r, ln_inv).unwrap();
            let s = envelope_theorem(&q, TheoremKind::Stability, TheoremCase::Exponential, r, ln_inv).unwrap();
            assert!((s / c - ln_inv.sqrt()).abs() < 1e-12);
        }
        assert!(envelope_theorem(&p, TheoremKind::Covariance, TheoremCase::PowerLaw, 1.0, 0.0).is_err());
    }

    #[test]
    fn dominance_relation() {
        for &(alpha, v, lambda) in &[(5.0, 2.0, 1.0), (8.0, 1.0, 1.0), (4.0, 10.0, 0.5), (3.5, 0.5, 1.0)] {
            let lhs = alpha_prime(alpha, 1, v, lambda) < alpha_tilde(alpha, 1);
            let rhs = alpha > dominance_threshold(v, lambda, 1);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn series_arithmetic_examples() {
        assert_eq!(n_q(1.5, 0.5, 256.0, 4), 6);
        assert_eq!(q_star(1.5, 0.5, 256.0), 2);
        assert!((linear_exponent(5.0, 1e-12) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn series_validity_errors() {
        assert!(matches!(
            envelope_appendix_f(3.2, 0.25, 64, 0.01),
            Err(Error::OutsideValidity(_))
        ));
        assert!(matches!(
            envelope_appendix_f(5.0, 0.25, 64, 1e3),
            Err(Error::OutsideValidity(_))
        ));
    }

    #[test]
    fn auto_mu_respects_budget() {
        for k in 5..=14 {
            let r = 1u64 << k;
            let mu = auto_mu(0.25, r).unwrap();
            assert!(budget_sum(mu, 0.25, r) < r as u128);
            assert!(mu > 0.0 && mu < 2.0);
        }
    }
}
