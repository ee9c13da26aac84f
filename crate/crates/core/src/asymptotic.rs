//! High-SNR approximations and empirical diversity orders.
//!
//! Every gain threshold scales as `1/P_S`, so each is evaluated once at
//! `P_S = 1` (the normalized value `x̃ = P_S·x`) and the transmit power enters
//! only through explicit powers `P_S^{e}`.

use serde::Serialize;
use statrs::function::factorial::binomial;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::analytic::Variant;
use crate::model::{derive_stats, thresholds, SystemParams, ThresholdSet};

/// `Σ coefficient · P_S^{exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticDecomposition {
    pub terms: Vec<(f64, f64)>,
    /// Smallest `|exponent|` among non-zero terms: the diversity order.
    pub dominant_exponent: f64,
}

impl AsymptoticDecomposition {
    fn new(terms: Vec<(f64, f64)>) -> Self {
        let dominant_exponent = terms
            .iter()
            .filter(|t| t.0 != 0.0)
            .map(|t| t.1.abs())
            .fold(f64::INFINITY, f64::min);
        Self {
            terms,
            dominant_exponent,
        }
    }

    /// Certain outage at every SNR.
    fn certain() -> Self {
        Self::new(vec![(1.0, 0.0)])
    }

    pub fn evaluate(&self, p_s: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| c * p_s.powf(e)).sum()
    }
}

/// `x^k / Γ(k+1)` for the small-argument Gamma CDF.
fn small_cdf(x: f64, shape: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (shape * x.ln() - ln_gamma(shape + 1.0)).exp()
}

/// Thresholds at unit transmit power.
fn normalized(params: &SystemParams) -> ThresholdSet {
    thresholds(&SystemParams { p_s: 1.0, ..*params })
}

/// `P₂^∞ = (m/Ω₂)^{2m} / Γ(2m+1) · (β̃₁*^{2m} + min(τ̃₁*, β̃₁)^{2m} - β̃₁^{2m}) · P_S^{-2m}`.
///
/// The `min` covers parameter sets where the linear regime never decodes.
pub fn op_u2_asymptotic(params: &SystemParams) -> f64 {
    let th = normalized(params);
    let st = derive_stats(params);
    let k = st.h2.shape;
    let rate = 1.0 / st.h2.scale;
    let f = |x: f64| small_cdf(rate * x, k);
    let value = if th.beta1.is_infinite() {
        if th.tau1_star.is_infinite() {
            return 1.0;
        }
        f(th.tau1_star)
    } else if th.beta1_star.is_infinite() {
        return 1.0;
    } else {
        f(th.beta1_star) + f(th.tau1_star.min(th.beta1)) - f(th.beta1)
    };
    value * params.p_s.powi(-(k as i32))
}

/// Decomposition of `P₁^∞` without the direct link: the `P_S^{-2m}` group,
/// the saturation floor `C` at `P_S⁰`, and for `ν = m(2-N) = 0` a separate
/// `P_S^{-mN}` logarithmic term.
pub fn op_u1_asymptotic_nodirect(params: &SystemParams) -> AsymptoticDecomposition {
    op_u1_asymptotic_nodirect_with(params, Variant::Repaired)
}

pub fn op_u1_asymptotic_nodirect_with(params: &SystemParams, variant: Variant) -> AsymptoticDecomposition {
    let th = normalized(params);
    if !th.feasible_u1 || !th.tau2_star.is_finite() || !th.beta2.is_finite() {
        return AsymptoticDecomposition::certain();
    }
    let st = derive_stats(params);
    let m = params.m as f64;
    let two_m = st.h2.shape;
    let l = st.h0.shape;
    let r2 = 1.0 / st.h2.scale;
    let f2 = |x: f64| small_cdf(r2 * x, two_m);

    let a = f2(th.tau2_star);
    let b = match variant {
        Variant::Repaired => (f2(th.beta2) - f2(th.beta1)).max(0.0),
        Variant::Printed => f2(th.tau1) - f2(th.beta2),
    };
    let c = if params.p_th.is_finite() {
        small_cdf(th.saturated_relay_bound(params) / st.h0.scale, l)
    } else {
        0.0
    };
    // C·(1 - F₂^∞(β₃*)) expands to C - C·F₂^∞(β₃*) P_S^{-2m}
    let d = match variant {
        Variant::Repaired => -c * f2(th.beta3_star),
        Variant::Printed => c * f2(th.beta3_star),
    };

    let mut terms = vec![(a + b + d, -two_m), (c, 0.0)];
    if th.tau3_star < th.beta1 && th.tau3_star > 0.0 {
        // Υ₃^∞ = coef · ∫_{τ₃*}^{β₁} x^{ν-1} dx
        let nu = m * (2.0 - params.n as f64);
        let upper = match variant {
            Variant::Repaired => th.beta1,
            Variant::Printed => th.beta2,
        };
        let coef = (two_m * r2.ln() - ln_gamma(two_m)).exp()
            * small_cdf(m * th.gamma_th1 / (th.phi2 * st.omega0), l);
        if nu == 0.0 {
            terms.push((coef * (upper / th.tau3_star).ln(), -l));
        } else {
            let e = coef * (upper.powf(nu) - th.tau3_star.powf(nu)) / nu;
            terms[0].0 += e;
        }
    }
    AsymptoticDecomposition::new(terms)
}

/// `P₁^∞` with the direct link:
/// `χ₂^∞ + (F₂^∞(τ₂*) + [F₂^∞(β₂) - F₂^∞(β₁)]₊) F₁^∞(θ₁)`.
pub fn op_u1_asymptotic_direct(params: &SystemParams) -> f64 {
    op_u1_asymptotic_direct_with(params, Variant::Repaired)
}

pub fn op_u1_asymptotic_direct_with(params: &SystemParams, variant: Variant) -> f64 {
    let th = thresholds(params);
    if !th.feasible_u1 || !th.theta1.is_finite() {
        return 1.0;
    }
    let st = derive_stats(params);
    let r2 = 1.0 / st.h2.scale;
    let f2 = |x: f64| if x.is_finite() { small_cdf(r2 * x, st.h2.shape) } else { 1.0 };
    let f1_theta = small_cdf(th.theta1 / st.h1.scale, st.h1.shape);
    let (gate, relay_fail) = match variant {
        Variant::Repaired => (th.beta3_star, f2(th.tau2_star) + (f2(th.beta2) - f2(th.beta1)).max(0.0)),
        Variant::Printed => (th.beta2_star, f2(th.tau2_star) + f2(th.beta3) - f2(th.beta2)),
    };
    let chi2 = (1.0 - f2(gate)).max(0.0) * x21_asymptotic(params, &th);
    chi2 + relay_fail * f1_theta
}

/// `∫₀^{θ₁} f₁^∞(y) F₀^∞(μ(γ_th1 - β(y))) dy` after `u = a₂P_S y/2 + σ²`, with
/// both binomials expanded. The `u^{-1}` term (κ = p - t - 1 = 0) integrates
/// to a logarithm.
fn x21_asymptotic(params: &SystemParams, th: &ThresholdSet) -> f64 {
    let st = derive_stats(params);
    let m = params.m as f64;
    let k = st.h1.shape as i32;
    let l = st.h0.shape as i32;
    let s2 = params.sigma2;
    let omega = 2.0 * m / (params.a2 * params.p_s * st.omega1);
    let mu = m * s2 / (params.eta * params.p_th * st.omega0);
    let shift = th.gamma_th1 - params.a1 / params.a2;
    let ratio = params.a1 * s2 / params.a2;
    let upper = params.a2 * params.p_s / 2.0 * th.theta1 + s2;
    let ln_pref = k as f64 * omega.ln() + l as f64 * mu.ln() - ln_gamma(k as f64) - ln_gamma(l as f64 + 1.0);
    let mut sum = 0.0;
    for t in 0..k {
        let bt = binomial((k - 1) as u64, t as u64) * (-s2).powi(k - 1 - t);
        for p in 0..=l {
            let bp = binomial(l as u64, p as u64) * shift.powi(l - p) * ratio.powi(p);
            let kappa = p - t - 1;
            let integral = if kappa == 0 {
                (upper / s2).ln()
            } else {
                let e = -kappa;
                (upper.powi(e) - s2.powi(e)) / e as f64
            };
            sum += bt * bp * integral;
        }
    }
    (ln_pref.exp() * sum).max(0.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} points in the fit window, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("outage probability {op} at {snr_db} dB is not positive")]
    NonPositive { snr_db: f64, op: f64 },
    #[error("SNR values must be strictly increasing")]
    NotIncreasing,
}

/// Negated least-squares slope of `log10(op)` against `snr_db/10` over the
/// last `window` points.
pub fn diversity_order_fit(curve: &[(f64, f64)], window: usize) -> Result<f64, FitError> {
    if window < 2 || curve.len() < window.max(3) {
        return Err(FitError::TooFewPoints {
            need: window.max(3),
            got: curve.len(),
        });
    }
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(FitError::NotIncreasing);
    }
    let tail = &curve[curve.len() - window..];
    if let Some(&(snr_db, op)) = tail.iter().find(|p| !(p.1 > 0.0)) {
        return Err(FitError::NonPositive { snr_db, op });
    }
    let n = tail.len() as f64;
    let xs: Vec<f64> = tail.iter().map(|p| p.0 / 10.0).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(-sxy / sxx)
}

pub const DEFAULT_FIT_WINDOW: usize = 3;
