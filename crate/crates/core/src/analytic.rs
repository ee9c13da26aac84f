//! Exact outage probabilities.
//!
//! `P₂` is elementary. `P₁` needs two non-elementary integrals, Υ₃ (no direct
//! link) and X₂₁ (direct link). Both are evaluated as a Taylor series in the
//! fading rate, which alternates with terms of size `e^(c·u_max)` before it
//! settles; when `f64` cannot resolve the difference the same series is
//! re-summed in extended precision. [`op_u1_quadrature_oracle`] evaluates
//! the integrals directly and is the reference for both.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::binomial;
use statrs::function::gamma::ln_gamma;

use astro_float::BigFloat;

use crate::hp::{self, Hp};
use crate::model::{
    derive_stats, outage_flags, sinr_all, thresholds, ChannelGains, ChannelStats, GainLaw, Scenario, SystemParams,
    ThresholdSet,
};
use crate::quad::{integrate, QuadError, QuadTol};
use crate::specfun::{self, CompensatedSum, SeriesPolicy};

/// Which algebraic form of the series closed forms to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Term-for-term as typeset: Υ₃ = ΔF₂ · S, X₂₁ led by F_{h0}(θ₁),
    /// χ₂ gated by β₂*, χ₃ a difference of CDFs, χ₄ over (β₂, β₃).
    Printed,
    /// Forms that equal the event probabilities they are defined as.
    Repaired,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticOptions {
    pub rel_tol: f64,
    pub max_terms: usize,
    pub variant: Variant,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_terms: 2000,
            variant: Variant::Repaired,
        }
    }
}

/// How a series value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SeriesPath {
    /// No series needed (empty interval, infeasible, or saturation unreachable).
    None,
    Double,
    Extended { bits: usize },
    /// Did not converge within the term cap, or overflowed `f64`.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    /// Probability, clamped to [0, 1] when the series converged.
    pub value: f64,
    /// Value before clamping.
    pub raw_value: f64,
    pub u3_terms: usize,
    pub x21_terms: usize,
    pub converged: bool,
    pub variant: Variant,
    pub path: SeriesPath,
    /// Υ₁..Υ₄ or χ₁..χ₄.
    pub parts: [f64; 4],
}

impl SeriesReport {
    fn closed(value: f64, variant: Variant, parts: [f64; 4]) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            raw_value: value,
            u3_terms: 0,
            x21_terms: 0,
            converged: true,
            variant,
            path: SeriesPath::None,
            parts,
        }
    }
}

/// `P₂ = 1 - P(τ₁* < ‖h₂‖² < β₁) - P(‖h₂‖² > β₁*)`, rearranged so that no
/// near-one quantities are subtracted.
pub fn op_u2_exact(params: &SystemParams) -> f64 {
    let th = thresholds(params);
    let f2 = derive_stats(params).h2;
    u2_from(&th, &f2)
}

fn u2_from(th: &ThresholdSet, f2: &GainLaw) -> f64 {
    if th.tau1_star < th.beta1 {
        (f2.cdf(th.tau1_star) + f2.mass_between(th.beta1, th.beta1_star)).min(1.0)
    } else {
        f2.cdf(th.beta1_star)
    }
}

/// Which integral a [`KernelSeries`] expands; carries the raw constants so the
/// prefactor, weights and anchor can be rebuilt exactly in extended precision.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    /// Υ₃: weights `bⁿ/n!` at `j = n - 2m`, prefactor `μ₂^{2m}/Γ(2m)`.
    Upsilon3 { two_m: i64, l: i64, b: f64 },
    /// X₂₁: binomial weights over `(n, k, t)` at `j = k - t - 1`.
    X21 {
        k: i64,
        l: i64,
        sigma2: f64,
        mu0c: f64,
        shift: f64,
        ratio: f64,
    },
}

/// Series of the form
///
/// ```text
/// S = pref · Σ_p (-c)^p / p! Σ_j w_j D(j - p),   D(φ) = ∫_lo^hi v^{φ-1} e^{-λv} dv
/// ```
///
/// returned as `anchor - S`, where the anchor is the Gamma(shape, 1) mass that
/// `S` would equal without the relay-link factor.
#[derive(Debug, Clone, Copy)]
struct KernelSeries {
    kernel: Kernel,
    rate: f64,
    lam: f64,
    lo: f64,
    hi: f64,
    /// `f64` anchor, used only on the fast path.
    anchor: f64,
}

#[derive(Debug, Clone, Copy)]
struct KernelValue {
    /// `anchor - S`
    complement: f64,
    /// `S`
    series: f64,
    terms: usize,
    converged: bool,
    path: SeriesPath,
}

impl KernelValue {
    fn failed(terms: usize) -> Self {
        Self {
            complement: f64::NAN,
            series: f64::NAN,
            terms,
            converged: false,
            path: SeriesPath::Failed,
        }
    }
}

const MAX_EXTENDED_BITS: usize = 8192;
/// Relative accuracy assumed for the `f64` Gamma CDF anchor.
const ANCHOR_REL_ERR: f64 = 1e-12;

fn ln_factorial(n: i64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

impl KernelSeries {
    fn ln_pref(&self) -> f64 {
        match self.kernel {
            Kernel::Upsilon3 { two_m, .. } => two_m as f64 * self.rate.ln() - ln_factorial(two_m - 1),
            Kernel::X21 {
                k,
                sigma2,
                mu0c,
                shift,
                ..
            } => k as f64 * self.rate.ln() + self.rate * sigma2 - ln_factorial(k - 1) - mu0c * shift,
        }
    }

    /// `(j, w_j)` contributions, unaggregated.
    fn contributions(&self) -> Vec<(i64, Contribution)> {
        let mut out = Vec::new();
        match self.kernel {
            Kernel::Upsilon3 { two_m, l, .. } => {
                for n in 0..l {
                    out.push((n - two_m, Contribution::Upsilon3 { n }));
                }
            }
            Kernel::X21 { k, l, .. } => {
                for n in 0..l {
                    for kk in 0..=n {
                        for t in 0..k {
                            out.push((kk - t - 1, Contribution::X21 { n, kk, t }));
                        }
                    }
                }
            }
        }
        out
    }

    fn weight_f64(&self, c: Contribution) -> f64 {
        match (self.kernel, c) {
            (Kernel::Upsilon3 { b, .. }, Contribution::Upsilon3 { n }) => {
                (n as f64 * b.ln() - ln_factorial(n)).exp()
            }
            (
                Kernel::X21 {
                    k,
                    sigma2,
                    mu0c,
                    shift,
                    ratio,
                    ..
                },
                Contribution::X21 { n, kk, t },
            ) => {
                binomial(n as u64, kk as u64)
                    * binomial((k - 1) as u64, t as u64)
                    * (-sigma2).powi((k - 1 - t) as i32)
                    * mu0c.powi(n as i32)
                    * shift.powi((n - kk) as i32)
                    * ratio.powi(kk as i32)
                    / ln_factorial(n).exp()
            }
            _ => unreachable!("contribution kind matches kernel"),
        }
    }

    fn weights_f64(&self) -> Vec<(i64, f64)> {
        aggregate(self.contributions().into_iter().map(|(j, c)| (j, self.weight_f64(c))))
    }

    fn phi_range(&self, max_terms: usize) -> (i64, i64) {
        let js: Vec<i64> = self.contributions().iter().map(|c| c.0).collect();
        let jmin = js.iter().copied().min().unwrap_or(0);
        let jmax = js.iter().copied().max().unwrap_or(0);
        (jmin - max_terms as i64 + 1, jmax)
    }

    /// Index below which the Taylor terms are still growing.
    fn peak(&self) -> usize {
        (self.rate / self.lo).ceil().min(1e9) as usize
    }

    fn evaluate(&self, opts: &AnalyticOptions) -> KernelValue {
        // terms still grow past the cap, so summing cannot converge
        if self.peak() >= opts.max_terms {
            return KernelValue::failed(opts.max_terms);
        }
        let policy = SeriesPolicy {
            rel_tol: opts.rel_tol * 1e-2,
            max_terms: opts.max_terms,
            min_terms: self.peak() + 1,
            ..SeriesPolicy::default()
        };
        let (lo_phi, hi_phi) = self.phi_range(opts.max_terms);
        let width = (hi_phi - lo_phi + 1) as usize;
        // ln of lo^φ e^{-λ lo} G(φ, λ lo), and the same at hi
        let mut ln_lo = Vec::with_capacity(width);
        let mut ln_hi = Vec::with_capacity(width);
        let (x_lo, x_hi) = (self.lam * self.lo, self.lam * self.hi);
        for phi in lo_phi..=hi_phi {
            let f = phi as f64;
            let g_lo = specfun::scaled_upper_inc_gamma(f, x_lo);
            let g_hi = specfun::scaled_upper_inc_gamma(f, x_hi);
            match (g_lo, g_hi) {
                (Ok(a), Ok(b)) => {
                    ln_lo.push(f * self.lo.ln() - x_lo + a.ln());
                    ln_hi.push(f * self.hi.ln() - x_hi + b.ln());
                }
                _ => return KernelValue::failed(0),
            }
        }
        let weights = self.weights_f64();
        let ln_pref = self.ln_pref();
        let ln_rate = self.rate.ln();
        let term = |p: usize| -> f64 {
            let lp = ln_pref + p as f64 * ln_rate - ln_gamma(p as f64 + 1.0);
            let mut acc = CompensatedSum::default();
            for &(j, w) in &weights {
                let i = (j - p as i64 - lo_phi) as usize;
                acc.add(w * (lp + ln_lo[i]).exp());
                acc.add(-w * (lp + ln_hi[i]).exp());
            }
            let s = acc.value();
            // the series is subtracted from the anchor
            if p % 2 == 0 {
                -s
            } else {
                s
            }
        };
        let out = match specfun::sum_series_from(self.anchor, term, &policy) {
            Ok(o) => o,
            Err(_) => return KernelValue::failed(opts.max_terms),
        };
        if !out.converged {
            return KernelValue {
                complement: out.value,
                series: self.anchor - out.value,
                terms: out.terms_used,
                converged: false,
                path: SeriesPath::Failed,
            };
        }
        let bound = out.cancellation_bound() + ANCHOR_REL_ERR * self.anchor.abs() / out.value.abs();
        if bound <= opts.rel_tol * 0.1 {
            return KernelValue {
                complement: out.value,
                series: self.anchor - out.value,
                terms: out.terms_used,
                converged: true,
                path: SeriesPath::Double,
            };
        }
        // Precision for the magnitude spread, assuming the result is no
        // smaller than 1e-30 of the anchor; refined below if it is.
        let floor = (self.anchor.abs() * 1e-30).max(out.value.abs());
        let mut bits = (53.0 + (out.abs_sum / floor).log2().max(0.0) + 48.0) as usize;
        for _ in 0..4 {
            if bits > MAX_EXTENDED_BITS {
                break;
            }
            let ext = self.evaluate_extended(bits, opts);
            if !ext.converged {
                return KernelValue {
                    complement: ext.complement,
                    series: ext.series,
                    terms: ext.terms,
                    converged: false,
                    path: SeriesPath::Failed,
                };
            }
            let err = (ext.abs_log2 - (bits as f64 - 16.0)).exp2();
            let need = opts.rel_tol * 0.1 * ext.complement.abs();
            if err <= need {
                return KernelValue {
                    complement: ext.complement,
                    series: ext.series,
                    terms: ext.terms,
                    converged: true,
                    path: SeriesPath::Extended { bits },
                };
            }
            bits += ((err / need.max(f64::MIN_POSITIVE)).log2().ceil() as usize).max(32) + 32;
        }
        KernelValue::failed(opts.max_terms)
    }

    fn pref_hp(&self, hp: &mut Hp) -> BigFloat {
        let rate = hp.num(self.rate);
        match self.kernel {
            Kernel::Upsilon3 { two_m, .. } => {
                let num = powi(hp, &rate, two_m);
                hp.div(&num, &factorial_hp(hp, two_m - 1))
            }
            Kernel::X21 {
                k,
                sigma2,
                mu0c,
                shift,
                ..
            } => {
                let num = powi(hp, &rate, k);
                let e1 = hp.mul(&rate, &hp.num(sigma2));
                let e2 = hp.mul(&hp.num(mu0c), &hp.num(shift));
                let arg = hp.sub(&e1, &e2);
                let ex = hp.exp(&arg);
                hp.div(&hp.mul(&num, &ex), &factorial_hp(hp, k - 1))
            }
        }
    }

    fn weight_hp(&self, hp: &Hp, c: Contribution) -> BigFloat {
        match (self.kernel, c) {
            (Kernel::Upsilon3 { b, .. }, Contribution::Upsilon3 { n }) => {
                let bb = hp.num(b);
                hp.div(&powi(hp, &bb, n), &factorial_hp(hp, n))
            }
            (
                Kernel::X21 {
                    k,
                    sigma2,
                    mu0c,
                    shift,
                    ratio,
                    ..
                },
                Contribution::X21 { n, kk, t },
            ) => {
                let bin = binomial(n as u64, kk as u64) * binomial((k - 1) as u64, t as u64);
                let mut w = hp.num(bin);
                w = hp.mul(&w, &powi(hp, &hp.num(-sigma2), k - 1 - t));
                w = hp.mul(&w, &powi(hp, &hp.num(mu0c), n));
                w = hp.mul(&w, &powi(hp, &hp.num(shift), n - kk));
                w = hp.mul(&w, &powi(hp, &hp.num(ratio), kk));
                hp.div(&w, &factorial_hp(hp, n))
            }
            _ => unreachable!("contribution kind matches kernel"),
        }
    }

    /// Anchor over the effective limits `lo_eff..hi_eff` in `v = 1/u`, with
    /// the log2 size of the two tails it is the difference of.
    fn anchor_hp(&self, hp: &mut Hp, lo_eff: &BigFloat, hi_eff: &BigFloat) -> (BigFloat, f64) {
        let rate = hp.num(self.rate);
        let u_hi = hp.div(&hp.one(), lo_eff);
        let u_lo = hp.div(&hp.one(), hi_eff);
        match self.kernel {
            Kernel::Upsilon3 { two_m, .. } => {
                let za = hp.mul(&rate, &u_lo);
                let zb = hp.mul(&rate, &u_hi);
                let qa = gamma_q_int(hp, two_m, &za);
                let qb = gamma_q_int(hp, two_m, &zb);
                (hp.sub(&qa, &qb), log2_add(hp::log2_abs(&qa), hp::log2_abs(&qb)))
            }
            Kernel::X21 { k, sigma2, .. } => {
                let s2 = hp.num(sigma2);
                let za = hp.mul(&rate, &hp.sub(&u_lo, &s2));
                let zb = hp.mul(&rate, &hp.sub(&u_hi, &s2));
                let qa = gamma_q_int(hp, k, &za);
                let qb = gamma_q_int(hp, k, &zb);
                (hp.sub(&qa, &qb), log2_add(hp::log2_abs(&qa), hp::log2_abs(&qb)))
            }
        }
    }

    fn evaluate_extended(&self, bits: usize, opts: &AnalyticOptions) -> Extended {
        let mut hp = Hp::new(bits);
        let (lo_phi, hi_phi) = self.phi_range(opts.max_terms);
        let (x_lo, x_hi) = (self.lam * self.lo, self.lam * self.hi);
        let tab_lo = hp.upper_gamma_table(x_lo, lo_phi, hi_phi);
        let tab_hi = hp.upper_gamma_table(x_hi, lo_phi, hi_phi);
        let lam = hp.num(self.lam);
        let lo_eff = hp.div(&hp.num(x_lo), &lam);
        let hi_eff = hp.div(&hp.num(x_hi), &lam);
        // D(φ) = λ^{-φ} (Γ(φ, x_lo) - Γ(φ, x_hi))
        let inv_lam = hp.div(&hp.one(), &lam);
        // each D also carries the log2 size of its two tails, so that the
        // error estimate sees the cancellation inside it
        let (d, d_log2): (Vec<BigFloat>, Vec<f64>) = (lo_phi..=hi_phi)
            .map(|phi| {
                let i = (phi - lo_phi) as usize;
                let scale = if phi >= 0 {
                    powi(&hp, &inv_lam, phi)
                } else {
                    powi(&hp, &lam, -phi)
                };
                let size = hp::log2_abs(&scale) + log2_add(hp::log2_abs(&tab_lo[i]), hp::log2_abs(&tab_hi[i]));
                (hp.mul(&scale, &hp.sub(&tab_lo[i], &tab_hi[i])), size)
            })
            .unzip();
        let contributions = self.contributions();
        let mut weights: Vec<(i64, BigFloat, f64)> = Vec::new();
        for (j, c) in contributions {
            let w = self.weight_hp(&hp, c);
            let size = hp::log2_abs(&w);
            match weights.iter_mut().find(|e| e.0 == j) {
                Some(e) => {
                    e.1 = hp.add(&e.1, &w);
                    e.2 = log2_add(e.2, size);
                }
                None => weights.push((j, w, size)),
            }
        }
        let pref = self.pref_hp(&mut hp);
        let (anchor, anchor_log2) = self.anchor_hp(&mut hp, &lo_eff, &hi_eff);
        let rate = hp.num(self.rate);
        let mut coef = pref; // pref · c^p / p!
        let mut series = hp.zero();
        let mut abs_log2 = anchor_log2;
        let tol_log2 = (opts.rel_tol * 1e-2).log2();
        let mut small_run = 0;
        let min_terms = self.peak() + 1;
        for p in 0..opts.max_terms {
            if p > 0 {
                coef = hp.div(&hp.mul(&coef, &rate), &hp.int(p as i64));
            }
            let mut inner = hp.zero();
            let mut inner_log2 = f64::NEG_INFINITY;
            for (j, w, w_log2) in &weights {
                let i = (j - p as i64 - lo_phi) as usize;
                inner = hp.add(&inner, &hp.mul(w, &d[i]));
                inner_log2 = log2_add(inner_log2, w_log2 + d_log2[i]);
            }
            let mut t = hp.mul(&coef, &inner);
            if p % 2 == 1 {
                t = t.neg();
            }
            series = hp.add(&series, &t);
            let lt = hp::log2_abs(&t);
            abs_log2 = log2_add(abs_log2, hp::log2_abs(&coef) + inner_log2);
            let rest = hp.sub(&anchor, &series);
            let lr = hp::log2_abs(&rest);
            if lt <= tol_log2 + lr {
                small_run += 1;
                if small_run >= 3 && p + 1 >= min_terms {
                    return Extended {
                        complement: hp::to_f64(&rest),
                        series: hp::to_f64(&series),
                        abs_log2,
                        terms: p + 1,
                        converged: true,
                    };
                }
            } else {
                small_run = 0;
            }
        }
        let rest = hp.sub(&anchor, &series);
        Extended {
            complement: hp::to_f64(&rest),
            series: hp::to_f64(&series),
            abs_log2,
            terms: opts.max_terms,
            converged: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Contribution {
    Upsilon3 { n: i64 },
    X21 { n: i64, kk: i64, t: i64 },
}

#[derive(Debug, Clone, Copy)]
struct Extended {
    complement: f64,
    series: f64,
    abs_log2: f64,
    terms: usize,
    converged: bool,
}

fn aggregate(items: impl Iterator<Item = (i64, f64)>) -> Vec<(i64, f64)> {
    let mut acc: Vec<(i64, CompensatedSum)> = Vec::new();
    for (j, w) in items {
        match acc.iter_mut().find(|e| e.0 == j) {
            Some(e) => e.1.add(w),
            None => {
                let mut c = CompensatedSum::default();
                c.add(w);
                acc.push((j, c));
            }
        }
    }
    acc.into_iter().map(|(j, c)| (j, c.value())).collect()
}

fn powi(hp: &Hp, x: &BigFloat, n: i64) -> BigFloat {
    debug_assert!(n >= 0);
    let mut r = hp.one();
    for _ in 0..n {
        r = hp.mul(&r, x);
    }
    r
}

fn factorial_hp(hp: &Hp, n: i64) -> BigFloat {
    let mut r = hp.one();
    for i in 2..=n {
        r = hp.mul(&r, &hp.int(i));
    }
    r
}

/// `e^{-z} Σ_{j<k} z^j / j!`, the Gamma(k, 1) survival function, for any real `z`.
fn gamma_q_int(hp: &mut Hp, k: i64, z: &BigFloat) -> BigFloat {
    let mut term = hp.one();
    let mut sum = hp.one();
    for j in 1..k {
        term = hp.div(&hp.mul(&term, z), &hp.int(j));
        sum = hp.add(&sum, &term);
    }
    let ez = hp.exp(&z.neg());
    hp.mul(&ez, &sum)
}

fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// Υ₃ as `ΔF₂ - S`, with `S` the Taylor series of the outage-free mass.
fn upsilon3_series(params: &SystemParams, th: &ThresholdSet, stats: &ChannelStats) -> Option<KernelSeries> {
    let tau3 = th.tau3_star;
    if !(tau3 < th.beta1) || !th.beta1.is_finite() || tau3 <= 0.0 {
        return None;
    }
    let m = params.m as f64;
    let b = m * th.gamma_th1 / (th.phi2 * params.p_s * stats.omega0);
    Some(KernelSeries {
        kernel: Kernel::Upsilon3 {
            two_m: 2 * params.m as i64,
            l: stats.h0.shape as i64,
            b,
        },
        rate: 1.0 / stats.h2.scale,
        lam: b,
        lo: 1.0 / th.beta1,
        hi: 1.0 / tau3,
        anchor: stats.h2.mass_between(tau3, th.beta1),
    })
}

/// X₂₁ as `F₁(θ₁) - S`.
fn x21_series(params: &SystemParams, th: &ThresholdSet, stats: &ChannelStats) -> Option<KernelSeries> {
    if !th.theta1.is_finite() || !params.p_th.is_finite() {
        return None;
    }
    let SystemParams {
        p_s,
        sigma2,
        a1,
        a2,
        eta,
        p_th,
        ..
    } = *params;
    let m = params.m as f64;
    let omega = 2.0 * m / (a2 * p_s * stats.omega1);
    let mu0c = m * sigma2 / (eta * p_th * stats.omega0);
    let u_max = a2 * p_s / 2.0 * th.theta1 + sigma2;
    Some(KernelSeries {
        kernel: Kernel::X21 {
            k: stats.h1.shape as i64,
            l: stats.h0.shape as i64,
            sigma2,
            mu0c,
            shift: th.gamma_th1 - a1 / a2,
            ratio: a1 * sigma2 / a2,
        },
        rate: omega,
        lam: mu0c * a1 * sigma2 / a2,
        lo: 1.0 / u_max,
        hi: 1.0 / sigma2,
        anchor: stats.h1.cdf(th.theta1),
    })
}

fn finish(raw: f64, converged: bool, variant: Variant, path: SeriesPath, u3: usize, x21: usize, parts: [f64; 4]) -> SeriesReport {
    SeriesReport {
        value: if converged { raw.clamp(0.0, 1.0) } else { raw },
        raw_value: raw,
        u3_terms: u3,
        x21_terms: x21,
        converged,
        variant,
        path,
        parts,
    }
}

/// `P₁` without the direct link: `Υ₁ + Υ₂ + Υ₃ + Υ₄`.
pub fn op_u1_exact_nodirect(params: &SystemParams, opts: &AnalyticOptions) -> SeriesReport {
    let th = thresholds(params);
    let stats = derive_stats(params);
    let f2 = &stats.h2;
    if !th.feasible_u1 {
        return SeriesReport::closed(1.0, opts.variant, [1.0, 0.0, 0.0, 0.0]);
    }
    let y1 = f2.cdf(th.tau2_star);
    let y2 = f2.mass_between(th.beta1, th.beta2);
    let y4 = f2.sf(th.beta3_star) * stats.h0.cdf(th.saturated_relay_bound(params));
    let (y3, kv) = if th.tau3_star < th.beta1 && th.phi2 == 0.0 {
        // no harvested power: the relay link always fails
        (f2.mass_between(th.tau3_star, th.beta1), None)
    } else {
        match upsilon3_series(params, &th, &stats) {
            None if th.tau3_star < th.beta1 => (f64::NAN, Some(KernelValue::failed(0))),
            None => (0.0, None),
            Some(ks) => {
                let kv = ks.evaluate(opts);
                let y3 = match opts.variant {
                    Variant::Repaired => kv.complement,
                    Variant::Printed => ks.anchor * kv.series,
                };
                (y3, Some(kv))
            }
        }
    };
    let raw = y1 + y2 + y3 + y4;
    let (converged, path, terms) = match kv {
        None => (true, SeriesPath::None, 0),
        Some(k) => (k.converged, k.path, k.terms),
    };
    finish(raw, converged, opts.variant, path, terms, 0, [y1, y2, y3, y4])
}

/// `P₁` with the direct link: `χ₁ + χ₂ + χ₃ + χ₄`.
pub fn op_u1_exact_direct(params: &SystemParams, opts: &AnalyticOptions) -> SeriesReport {
    let th = thresholds(params);
    let stats = derive_stats(params);
    let (f2, f1) = (&stats.h2, &stats.h1);
    if !th.feasible_u1 {
        return SeriesReport::closed(1.0, opts.variant, [0.0, 0.0, 1.0, 0.0]);
    }
    let f1_theta = f1.cdf(th.theta1);
    let gate = match opts.variant {
        Variant::Repaired => th.beta3_star,
        Variant::Printed => th.beta2_star,
    };
    let gate_mass = f2.sf(gate);
    let (x21, kv) = if gate_mass == 0.0 {
        (0.0, None)
    } else {
        match x21_series(params, &th, &stats) {
            None => (0.0, None),
            Some(ks) => {
                let kv = ks.evaluate(opts);
                let v = match opts.variant {
                    Variant::Repaired => kv.complement,
                    Variant::Printed => stats.h0.cdf(th.theta1) - kv.series,
                };
                (v, Some(kv))
            }
        }
    };
    let chi2 = gate_mass * x21;
    let (chi1, chi3, chi4) = match opts.variant {
        Variant::Repaired => {
            let chi1 = chi1_quadrature(params, &th, &stats).unwrap_or(f64::NAN);
            (
                chi1,
                f2.cdf(th.tau2_star) * f1_theta,
                f2.mass_between(th.beta1, th.beta2) * f1_theta,
            )
        }
        Variant::Printed => (
            0.0,
            f2.cdf(th.tau2_star) - f1_theta,
            f2.mass_between(th.beta2, th.beta3) * f1_theta,
        ),
    };
    let raw = chi1 + chi2 + chi3 + chi4;
    let (mut converged, path, terms) = match kv {
        None => (true, SeriesPath::None, 0),
        Some(k) => (k.converged, k.path, k.terms),
    };
    if chi1.is_nan() {
        converged = false;
    }
    finish(raw, converged, opts.variant, path, 0, terms, [chi1, chi2, chi3, chi4])
}

/// Scenario dispatch for `P₁`.
pub fn op_u1_exact(params: &SystemParams, opts: &AnalyticOptions) -> SeriesReport {
    match params.scenario {
        Scenario::WithDirectLink => op_u1_exact_direct(params, opts),
        Scenario::WithoutDirectLink => op_u1_exact_nodirect(params, opts),
    }
}

fn oracle_tol() -> QuadTol {
    QuadTol {
        abs: 1e-20,
        rel: 1e-11,
        max_intervals: 4000,
    }
}

/// U₁ SINR from the BS as a function of ‖h₁‖².
fn direct_sinr(params: &SystemParams, y: f64) -> f64 {
    let rx = params.p_s / 2.0 * y;
    params.a1 * rx / (params.a2 * rx + params.sigma2)
}

/// Υ₃ = ∫_{τ₃*}^{β₁} f₂(x) F₀(γ_th1 / (φ₂ P_S x)) dx.
pub fn upsilon3_quadrature(params: &SystemParams) -> Result<f64, QuadError> {
    let th = thresholds(params);
    let stats = derive_stats(params);
    upsilon3_quad(params, &th, &stats)
}

fn upsilon3_quad(params: &SystemParams, th: &ThresholdSet, stats: &ChannelStats) -> Result<f64, QuadError> {
    if !(th.tau3_star < th.beta1) {
        return Ok(0.0);
    }
    if th.phi2 == 0.0 {
        return Ok(stats.h2.mass_between(th.tau3_star, th.beta1));
    }
    let k = th.gamma_th1 / (th.phi2 * params.p_s);
    let r = integrate(
        |x| stats.h2.pdf(x) * stats.h0.cdf(k / x),
        th.tau3_star,
        th.beta1,
        &oracle_tol(),
    )?;
    Ok(r.value)
}

/// X₂₁ = ∫_0^{θ₁} F₀((σ²/ηP_th)(γ_th1 - β(y))) f₁(y) dy.
pub fn x21_quadrature(params: &SystemParams) -> Result<f64, QuadError> {
    let th = thresholds(params);
    let stats = derive_stats(params);
    x21_quad(params, &th, &stats)
}

fn x21_quad(params: &SystemParams, th: &ThresholdSet, stats: &ChannelStats) -> Result<f64, QuadError> {
    if !(th.theta1 > 0.0) || !th.theta1.is_finite() || !params.p_th.is_finite() {
        return Ok(0.0);
    }
    let c = params.sigma2 / (params.eta * params.p_th);
    let r = integrate(
        |y| stats.h0.cdf(c * (th.gamma_th1 - direct_sinr(params, y))) * stats.h1.pdf(y),
        0.0,
        th.theta1,
        &oracle_tol(),
    )?;
    Ok(r.value)
}

/// χ₁: relay decodes below saturation but relay and direct branches together
/// fall short. Zero unless τ₁ < β₁.
fn chi1_quadrature(params: &SystemParams, th: &ThresholdSet, stats: &ChannelStats) -> Result<f64, QuadError> {
    if !(th.tau1 < th.beta1) || !th.theta1.is_finite() || th.phi2 == 0.0 {
        return Ok(0.0);
    }
    let k = th.phi2 * params.p_s;
    let inner_tol = QuadTol {
        abs: 1e-22,
        rel: 1e-12,
        max_intervals: 2000,
    };
    let mut err = None;
    let outer = integrate(
        |x| {
            let inner = integrate(
                |y| stats.h1.pdf(y) * stats.h0.cdf((th.gamma_th1 - direct_sinr(params, y)) / (k * x)),
                0.0,
                th.theta1,
                &inner_tol,
            );
            match inner {
                Ok(r) => stats.h2.pdf(x) * r.value,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        th.tau1,
        th.beta1,
        &oracle_tol(),
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(outer.value),
    }
}

/// `P₁` with every non-elementary integral evaluated by adaptive quadrature.
pub fn op_u1_quadrature_oracle(params: &SystemParams, scenario: Scenario) -> Result<f64, QuadError> {
    let th = thresholds(params);
    let stats = derive_stats(params);
    let f2 = &stats.h2;
    if !th.feasible_u1 {
        return Ok(1.0);
    }
    let value = match scenario {
        Scenario::WithoutDirectLink => {
            f2.cdf(th.tau2_star)
                + f2.mass_between(th.beta1, th.beta2)
                + upsilon3_quad(params, &th, &stats)?
                + f2.sf(th.beta3_star) * stats.h0.cdf(th.saturated_relay_bound(params))
        }
        Scenario::WithDirectLink => {
            let f1_theta = stats.h1.cdf(th.theta1);
            let x21 = if f2.sf(th.beta3_star) > 0.0 {
                x21_quad(params, &th, &stats)?
            } else {
                0.0
            };
            chi1_quadrature(params, &th, &stats)?
                + f2.sf(th.beta3_star) * x21
                + (f2.cdf(th.tau2_star) + f2.mass_between(th.beta1, th.beta2)) * f1_theta
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// `P₂` by integrating the density of ‖h₂‖² over the segments where the
/// event model reports an outage. Independent of the threshold algebra above:
/// the thresholds only place breakpoints, the SINR test decides each segment.
pub fn op_u2_quadrature_oracle(params: &SystemParams) -> Result<f64, QuadError> {
    let th = thresholds(params);
    let f2 = derive_stats(params).h2;
    let mut cuts: Vec<f64> = [th.tau1, th.tau2, th.beta1, th.beta2, th.beta3]
        .into_iter()
        .filter(|x| x.is_finite() && *x > 0.0)
        .collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.push(f64::INFINITY);
    let in_outage = |h2sq: f64| {
        let g = ChannelGains {
            h2sq,
            h1sq: 1.0,
            h0sq: 1.0,
        };
        outage_flags(&sinr_all(params, &g), th.gamma_th1, th.gamma_th2).u2
    };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let probe = if w[1].is_finite() { 0.5 * (w[0] + w[1]) } else { 2.0 * w[0] + 1.0 };
        if in_outage(probe) {
            total += integrate(|x| f2.pdf(x), w[0], w[1], &oracle_tol())?.value;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}
