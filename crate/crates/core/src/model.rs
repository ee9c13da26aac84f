//! System model: parameters, channel statistics, thresholds, harvested power,
//! SINRs and the per-realization outage events.
//!
//! All quantities are linear (powers in normalized watts, SINRs as ratios).
//! Conversion from dB happens at the configuration boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Relay operating mode at the near user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Duplex {
    Fd,
    Hd,
}

impl Duplex {
    /// ϖ: 1 for full duplex, 0 for half duplex.
    pub fn varpi(self) -> f64 {
        match self {
            Duplex::Fd => 1.0,
            Duplex::Hd => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Duplex::Fd => "fd",
            Duplex::Hd => "hd",
        }
    }
}

/// Whether the far user also receives the BS signal directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    WithDirectLink,
    WithoutDirectLink,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::WithDirectLink => "with-direct-link",
            Scenario::WithoutDirectLink => "without-direct-link",
        }
    }
}

/// Every physical and protocol parameter of the two-user network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// BS transmit power (linear). With `sigma2 = 1` this is the SNR.
    pub p_s: f64,
    /// Noise power σ².
    pub sigma2: f64,
    /// Power fraction of the far user U1.
    pub a1: f64,
    /// Power fraction of the near user U2.
    pub a2: f64,
    /// Power-splitting ratio sent to the energy harvester.
    pub rho: f64,
    /// Energy conversion efficiency.
    pub eta: f64,
    /// Harvester saturation input power.
    pub p_th: f64,
    /// Residual self-interference power Ω_SI = σ_SI² (linear).
    pub sigma_si2: f64,
    pub duplex: Duplex,
    /// Nakagami-m parameter.
    pub m: u32,
    /// Receive antennas at U1.
    pub n: u32,
    pub d_s1: f64,
    pub d_s2: f64,
    pub d_21: f64,
    /// Path-loss exponent.
    pub epsilon: f64,
    /// Target rate of U1 (bits per channel use).
    pub r1: f64,
    /// Target rate of U2 (bits per channel use).
    pub r2: f64,
    pub scenario: Scenario,
}

/// Default harvester saturation power. Not stated with the reference
/// parameter set; see the README for how it was chosen.
pub const DEFAULT_P_TH: f64 = 10.0;

impl Default for SystemParams {
    /// The common numerical-results parameter set: ε = 2, η = 0.7, m = 1,
    /// a1 = 0.8, a2 = 0.2, d_S1 = 1.5, d_S2 = 1, d_21 = 0.5, N = 2, ρ = 0.5,
    /// FD with σ_SI = -30 dB, direct-link rates R1 = 1, R2 = 2, SNR 0 dB.
    fn default() -> Self {
        Self {
            p_s: 1.0,
            sigma2: 1.0,
            a1: 0.8,
            a2: 0.2,
            rho: 0.5,
            eta: 0.7,
            p_th: DEFAULT_P_TH,
            sigma_si2: 1e-3,
            duplex: Duplex::Fd,
            m: 1,
            n: 2,
            d_s1: 1.5,
            d_s2: 1.0,
            d_21: 0.5,
            epsilon: 2.0,
            r1: 1.0,
            r2: 2.0,
            scenario: Scenario::WithDirectLink,
        }
    }
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> ModelError {
    ModelError::InvalidParam {
        name,
        value,
        reason,
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("p_s", self.p_s),
            ("sigma2", self.sigma2),
            ("d_s1", self.d_s1),
            ("d_s2", self.d_s2),
            ("d_21", self.d_21),
            ("r1", self.r1),
            ("r2", self.r2),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, v, "must be finite and > 0"));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(invalid("epsilon", self.epsilon, "must be finite and >= 0"));
        }
        if !(self.a2 > 0.0 && self.a1 > self.a2) {
            return Err(invalid("a1", self.a1, "need a1 > a2 > 0"));
        }
        if (self.a1 + self.a2 - 1.0).abs() > 1e-12 {
            return Err(invalid("a2", self.a2, "a1 + a2 must equal 1"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(invalid("rho", self.rho, "must lie in [0, 1)"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", self.eta, "must lie in (0, 1]"));
        }
        // p_th = +inf is allowed: a linear harvester that never saturates.
        if self.p_th.is_nan() || self.p_th <= 0.0 {
            return Err(invalid("p_th", self.p_th, "must be > 0"));
        }
        if !(self.sigma_si2.is_finite() && self.sigma_si2 >= 0.0) {
            return Err(invalid("sigma_si2", self.sigma_si2, "must be finite and >= 0"));
        }
        if self.m == 0 {
            return Err(invalid("m", 0.0, "must be a positive integer"));
        }
        if self.n == 0 {
            return Err(invalid("n", 0.0, "must be a positive integer"));
        }
        if self.si_loop_gain() >= 1.0 {
            return Err(invalid(
                "sigma_si2",
                self.sigma_si2,
                "eta * rho * sigma_si2 must be < 1 in FD mode",
            ));
        }
        Ok(())
    }

    /// `η ρ ϖ σ_SI²`, the self-recycling loop gain of the harvester.
    pub fn si_loop_gain(&self) -> f64 {
        self.eta * self.rho * self.duplex.varpi() * self.sigma_si2
    }

    /// Self-interference power as seen by the SINR formulas (zero in HD).
    pub fn effective_si2(&self) -> f64 {
        self.duplex.varpi() * self.sigma_si2
    }
}

/// Distribution of one squared Frobenius-norm gain: `Gamma(shape, scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainLaw {
    pub shape: f64,
    pub scale: f64,
}

impl GainLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        specfun::gamma_cdf(self.shape, self.scale, x).expect("validated gain law")
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        specfun::gamma_sf(self.shape, self.scale, x).expect("validated gain law")
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        specfun::gamma_pdf(self.shape, self.scale, x).expect("validated gain law")
    }

    /// Small-argument CDF `(x/scale)^shape / Γ(shape + 1)`.
    pub fn cdf_asymptotic(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (self.shape * (x / self.scale).ln() - statrs::function::gamma::ln_gamma(self.shape + 1.0))
            .exp()
    }

    /// `P(a < G < b)`, zero when `b <= a`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        if a > self.shape * self.scale {
            (self.sf(a) - self.sf(b)).max(0.0)
        } else {
            (self.cdf(b) - self.cdf(a)).max(0.0)
        }
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }
}

/// Mean link gains and the Gamma laws of ‖h_2‖², ‖h_1‖², ‖h_0‖².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelStats {
    pub omega2: f64,
    pub omega1: f64,
    pub omega0: f64,
    /// BS → U2, 2×1 Alamouti channel: shape 2m.
    pub h2: GainLaw,
    /// BS → U1, 2×N: shape 2mN.
    pub h1: GainLaw,
    /// U2 → U1, 1×N: shape mN.
    pub h0: GainLaw,
}

pub fn derive_stats(params: &SystemParams) -> ChannelStats {
    let m = params.m as f64;
    let n = params.n as f64;
    let omega2 = params.d_s2.powf(-params.epsilon);
    let omega1 = params.d_s1.powf(-params.epsilon);
    let omega0 = params.d_21.powf(-params.epsilon);
    ChannelStats {
        omega2,
        omega1,
        omega0,
        h2: GainLaw {
            shape: 2.0 * m,
            scale: omega2 / m,
        },
        h1: GainLaw {
            shape: 2.0 * m * n,
            scale: omega1 / m,
        },
        h0: GainLaw {
            shape: m * n,
            scale: omega0 / m,
        },
    }
}

/// Target SINRs `(γ_th1, γ_th2)`. HD needs two slots, hence `2^(2R) - 1`.
pub fn rate_thresholds(params: &SystemParams) -> (f64, f64) {
    let slots = match params.duplex {
        Duplex::Fd => 1.0,
        Duplex::Hd => 2.0,
    };
    (
        (slots * params.r1).exp2() - 1.0,
        (slots * params.r2).exp2() - 1.0,
    )
}

/// Gain thresholds on ‖h_2‖² and ‖h_1‖² that the outage events reduce to.
///
/// Thresholds whose defining denominator is non-positive are `+∞`: the
/// corresponding decoding event is impossible in that harvester regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSet {
    pub gamma_th1: f64,
    pub gamma_th2: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// U2 decodes x1 below saturation iff ‖h_2‖² > τ1.
    pub tau1: f64,
    /// U2 decodes x2 below saturation iff ‖h_2‖² > τ2.
    pub tau2: f64,
    pub tau1_star: f64,
    pub tau2_star: f64,
    pub tau3_star: f64,
    /// Harvester saturates iff ‖h_2‖² > β1.
    pub beta1: f64,
    /// U2 decodes x1 in saturation iff ‖h_2‖² > β2.
    pub beta2: f64,
    /// U2 decodes x2 in saturation iff ‖h_2‖² > β3.
    pub beta3: f64,
    pub beta1_star: f64,
    pub beta2_star: f64,
    pub beta3_star: f64,
    /// U1 decodes x1 over the direct link alone iff ‖h_1‖² > θ1.
    pub theta1: f64,
    /// `a1 > a2 γ_th1`: x1 decodable at all (saturated relay, direct link).
    pub sic_feasible: bool,
    /// `a1 > (a2 + 2φ1) γ_th1`: x1 decodable at U2 below saturation.
    pub linear_x1_feasible: bool,
    /// `a2 > 2φ1 γ_th2`: x2 decodable at U2 below saturation.
    pub linear_x2_feasible: bool,
    /// U2 can avoid outage in at least one harvester regime.
    pub feasible_u2: bool,
    /// U1 can avoid outage at all.
    pub feasible_u1: bool,
}

impl ThresholdSet {
    /// `γ_th1 σ² / (η P_th)`: the relay-link bound on ‖h_0‖² in saturation.
    pub fn saturated_relay_bound(&self, params: &SystemParams) -> f64 {
        self.gamma_th1 * params.sigma2 / (params.eta * params.p_th)
    }
}

fn positive_or_inf(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

pub fn thresholds(params: &SystemParams) -> ThresholdSet {
    let (g1, g2) = rate_thresholds(params);
    let SystemParams {
        p_s,
        sigma2,
        a1,
        a2,
        rho,
        eta,
        p_th,
        ..
    } = *params;
    let loop_gain = params.si_loop_gain();
    let si2 = params.effective_si2();
    let phi1 = loop_gain / (1.0 - loop_gain);
    let phi2 = eta * rho / (sigma2 * (1.0 - loop_gain));

    let lin1 = a1 - (a2 + 2.0 * phi1) * g1;
    let lin2 = a2 - 2.0 * phi1 * g2;
    let sat1 = a1 - a2 * g1;

    let tau1 = positive_or_inf(2.0 * g1 * sigma2, p_s * (1.0 - rho) * lin1);
    let tau2 = positive_or_inf(2.0 * g2 * sigma2, p_s * (1.0 - rho) * lin2);
    let beta1 = if rho > 0.0 {
        p_th * (1.0 - loop_gain) / (rho * p_s)
    } else {
        f64::INFINITY
    };
    // Interference-plus-noise once the relay transmits at η P_th.
    let sat_noise = if p_th.is_finite() {
        sigma2 + eta * (1.0 - rho) * si2 * p_th
    } else {
        sigma2
    };
    let beta2 = positive_or_inf(2.0 * g1 * sat_noise, p_s * (1.0 - rho) * sat1);
    let beta3 = 2.0 * g2 * sat_noise / (a2 * p_s * (1.0 - rho));
    let theta1 = positive_or_inf(2.0 * g1 * sigma2, p_s * sat1);

    let tau1_star = tau1.max(tau2).max(0.0);
    let beta1_star = beta1.max(beta2).max(beta3);
    let tau2_star = tau1.min(beta1);
    let tau3_star = tau1.max(0.0);
    let beta2_star = beta2.max(0.0);
    let beta3_star = beta1.max(beta2);

    let linear_ok = lin1 > 0.0 && lin2 > 0.0;
    ThresholdSet {
        gamma_th1: g1,
        gamma_th2: g2,
        phi1,
        phi2,
        tau1,
        tau2,
        tau1_star,
        tau2_star,
        tau3_star,
        beta1,
        beta2,
        beta3,
        beta1_star,
        beta2_star,
        beta3_star,
        theta1,
        sic_feasible: sat1 > 0.0,
        linear_x1_feasible: lin1 > 0.0,
        linear_x2_feasible: lin2 > 0.0,
        feasible_u2: (linear_ok && tau1_star < beta1) || beta1_star.is_finite(),
        feasible_u1: sat1 > 0.0,
    }
}

/// Power harvested at U2 (and spent relaying to U1) for a given ‖h_2‖².
///
/// Below saturation the self-recycled SI is included through the closed form
/// `η ρ P_S ‖h_2‖² / (1 - η ρ ϖ σ_SI²)`; above it the output is `η P_th`.
pub fn harvested_power(params: &SystemParams, h2sq: f64) -> f64 {
    let linear = (params.eta * params.rho * params.p_s * h2sq / (1.0 - params.si_loop_gain())).max(0.0);
    let p_in = params.rho * (params.p_s * h2sq + params.effective_si2() * linear);
    if p_in <= params.p_th {
        linear
    } else {
        params.eta * params.p_th
    }
}

/// One channel realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGains {
    pub h2sq: f64,
    pub h1sq: f64,
    pub h0sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSet {
    /// U2 decoding x1 (treating x2 as interference).
    pub g21: f64,
    /// U2 decoding x2 after SIC.
    pub g22: f64,
    /// U1 decoding x1 from the BS.
    pub g11: f64,
    /// U1 decoding the relayed x1.
    pub g12: f64,
    /// MRC output `g11 + g12`.
    pub g1: f64,
}

pub fn sinr_all(params: &SystemParams, gains: &ChannelGains) -> SinrSet {
    let p_r = harvested_power(params, gains.h2sq);
    let half = params.p_s / 2.0;
    let id = 1.0 - params.rho;
    let si_term = id * params.effective_si2() * p_r + params.sigma2;
    let rx2 = half * id * gains.h2sq;
    let g21 = params.a1 * rx2 / (params.a2 * rx2 + si_term);
    let g22 = params.a2 * rx2 / si_term;
    let rx1 = half * gains.h1sq;
    let g11 = params.a1 * rx1 / (params.a2 * rx1 + params.sigma2);
    let g12 = p_r * gains.h0sq / params.sigma2;
    SinrSet {
        g21,
        g22,
        g11,
        g12,
        g1: g11 + g12,
    }
}

/// Outage events of one realization, for both U1 scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutageFlags {
    pub u2: bool,
    pub u1_without_direct: bool,
    pub u1_with_direct: bool,
}

impl OutageFlags {
    pub fn u1(&self, scenario: Scenario) -> bool {
        match scenario {
            Scenario::WithDirectLink => self.u1_with_direct,
            Scenario::WithoutDirectLink => self.u1_without_direct,
        }
    }
}

pub fn outage_flags(sinr: &SinrSet, gamma_th1: f64, gamma_th2: f64) -> OutageFlags {
    let relay_decodes = sinr.g21 > gamma_th1;
    let relay_fails = sinr.g21 < gamma_th1;
    OutageFlags {
        u2: !(relay_decodes && sinr.g22 > gamma_th2),
        u1_without_direct: relay_fails || (relay_decodes && sinr.g12 < gamma_th1),
        u1_with_direct: (relay_decodes && sinr.g1 < gamma_th1)
            || (relay_fails && sinr.g11 < gamma_th1),
    }
}

/// `(u1_outage, u2_outage)` for the scenario configured in `params`.
pub fn outage_indicators(params: &SystemParams, gains: &ChannelGains) -> (bool, bool) {
    let (g1, g2) = rate_thresholds(params);
    let flags = outage_flags(&sinr_all(params, gains), g1, g2);
    (flags.u1(params.scenario), flags.u2)
}

/// dB → linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd() -> SystemParams {
        SystemParams::default()
    }

    fn hd() -> SystemParams {
        SystemParams {
            duplex: Duplex::Hd,
            ..SystemParams::default()
        }
    }

    #[test]
    fn default_params_validate() {
        fd().validate().unwrap();
        hd().validate().unwrap();
    }

    #[test]
    fn rejects_bad_allocation_and_loop_gain() {
        let p = SystemParams {
            a1: 0.4,
            a2: 0.6,
            ..fd()
        };
        assert!(p.validate().is_err());
        let p = SystemParams {
            a1: 0.8,
            a2: 0.3,
            ..fd()
        };
        assert!(p.validate().is_err());
        let p = SystemParams {
            sigma_si2: 1.0 / (0.7 * 0.5),
            ..fd()
        };
        assert!(p.validate().is_err());
        // the same SI is harmless in HD
        let p = SystemParams {
            sigma_si2: 1.0 / (0.7 * 0.5),
            ..hd()
        };
        assert!(p.validate().is_ok());
        let p = SystemParams { rho: 1.0, ..fd() };
        assert!(p.validate().is_err());
        let p = SystemParams { m: 0, ..fd() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn stats_from_distances() {
        let s = derive_stats(&fd());
        assert_relative_eq!(s.omega2, 1.0);
        assert_relative_eq!(s.omega1, 4.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(s.omega0, 4.0, max_relative = 1e-15);
        assert_relative_eq!(s.h2.mean(), 2.0 * s.omega2, max_relative = 1e-15);
        assert_relative_eq!(s.h1.mean(), 2.0 * 2.0 * s.omega1, max_relative = 1e-15);
        assert_relative_eq!(s.h0.mean(), 2.0 * s.omega0, max_relative = 1e-15);
    }

    #[test]
    fn target_sinrs() {
        assert_eq!(rate_thresholds(&fd()), (1.0, 3.0));
        let p = SystemParams { r1: 0.5, ..hd() };
        assert_relative_eq!(rate_thresholds(&p).0, 1.0);
    }

    #[test]
    fn harvested_power_cases() {
        let p = SystemParams { rho: 0.0, ..fd() };
        assert_eq!(harvested_power(&p, 3.0), 0.0);
        let p = SystemParams {
            p_s: 0.1,
            ..hd()
        };
        assert_relative_eq!(harvested_power(&p, 2.0), 0.7 * 0.5 * 0.1 * 2.0);
        // FD, input well above P_th: saturated.
        let p = SystemParams {
            p_s: 100.0,
            ..fd()
        };
        let h = 5.0;
        // fixed point P_R = ηρ(P_S h + P_R σ²) gives P_R = ηρ P_S h / (1 - ηρσ²)
        let fixed = 0.35 * 100.0 * h / (1.0 - 0.35e-3);
        let p_in = 0.5 * (100.0 * h + 1e-3 * fixed);
        assert!(p_in > p.p_th);
        assert_eq!(harvested_power(&p, h), 0.7 * p.p_th);
    }

    #[test]
    fn harvested_power_switches_at_beta1() {
        let p = fd();
        let th = thresholds(&p);
        let below = harvested_power(&p, th.beta1 * (1.0 - 1e-9));
        let above = harvested_power(&p, th.beta1 * (1.0 + 1e-9));
        assert!(below < p.eta * p.p_th * (1.0 + 1e-6));
        assert_eq!(above, p.eta * p.p_th);
        // below saturation the output is η P_in
        let h = 0.5 * th.beta1;
        let lin = harvested_power(&p, h);
        let p_in = p.rho * (p.p_s * h + p.sigma_si2 * lin);
        assert_relative_eq!(lin, p.eta * p_in, max_relative = 1e-14);
    }

    #[test]
    fn hd_thresholds_drop_si() {
        let p = hd();
        let th = thresholds(&p);
        assert_eq!(th.phi1, 0.0);
        let (g1, _) = rate_thresholds(&p);
        let expect = 2.0 * g1 * p.sigma2 / (p.p_s * (1.0 - p.rho) * (p.a1 - p.a2 * g1));
        assert_relative_eq!(th.tau1, expect, max_relative = 1e-15);
        // without SI the linear and saturated decoding thresholds coincide
        assert_relative_eq!(th.tau1, th.beta2, max_relative = 1e-15);
    }

    #[test]
    fn infeasible_allocation_marks_infinite() {
        let p = SystemParams {
            a1: 0.5 + 1e-9,
            a2: 0.5 - 1e-9,
            r1: 2.0,
            ..fd()
        };
        p.validate().unwrap();
        let th = thresholds(&p);
        assert!(!th.sic_feasible && !th.feasible_u1 && !th.feasible_u2);
        assert!(th.tau1.is_infinite() && th.beta2.is_infinite() && th.theta1.is_infinite());
    }

    #[test]
    fn feasible_at_reference_allocation() {
        let th = thresholds(&fd());
        assert!(th.sic_feasible && th.feasible_u2 && th.feasible_u1);
    }

    #[test]
    fn sinr_formulas() {
        let p = SystemParams { rho: 0.0, ..hd() };
        let gains = ChannelGains {
            h2sq: 1.7,
            h1sq: 0.3,
            h0sq: 2.0,
        };
        let s = sinr_all(&p, &gains);
        assert_relative_eq!(s.g22, 0.2 * 0.5 * 1.7, max_relative = 1e-15);
        assert_eq!(s.g1, s.g11 + s.g12);
        // HD interference-limited ceiling
        let huge = ChannelGains {
            h2sq: 1e12,
            ..gains
        };
        assert_relative_eq!(sinr_all(&hd(), &huge).g21, 4.0, max_relative = 1e-9);
    }

    #[test]
    fn sinr_regression_at_ten_db() {
        // ρ = 0.5, FD, σ_SI² = 1e-3, P_S = 10, all gains 1.
        // P_in = 0.5 * 10 / (1 - 3.5e-4) < P_th, so P_R = 3.5 / (1 - 3.5e-4).
        let p = SystemParams {
            p_s: 10.0,
            ..fd()
        };
        let g = ChannelGains {
            h2sq: 1.0,
            h1sq: 1.0,
            h0sq: 1.0,
        };
        let s = sinr_all(&p, &g);
        let p_r = 3.5 / (1.0 - 3.5e-4);
        let den = 0.5 * 1e-3 * p_r + 1.0;
        assert_relative_eq!(s.g21, 0.8 * 2.5 / (0.2 * 2.5 + den), max_relative = 1e-14);
        assert_relative_eq!(s.g22, 0.2 * 2.5 / den, max_relative = 1e-14);
        assert_relative_eq!(s.g11, 4.0 / 2.0, max_relative = 1e-14);
        assert_relative_eq!(s.g12, p_r, max_relative = 1e-14);
    }

    #[test]
    fn outage_event_logic() {
        let s = SinrSet {
            g21: 2.0,
            g22: 5.0,
            g11: 0.5,
            g12: 1.5,
            g1: 2.0,
        };
        let f = outage_flags(&s, 1.0, 3.0);
        assert!(!f.u2 && !f.u1_without_direct && !f.u1_with_direct);
        // relay fails but the direct link rescues U1
        let s = SinrSet {
            g21: 0.5,
            g22: 0.1,
            g11: 1.2,
            g12: 0.0,
            g1: 1.2,
        };
        let f = outage_flags(&s, 1.0, 3.0);
        assert!(f.u2 && f.u1_without_direct && !f.u1_with_direct);
        // vanishing targets: never in outage
        let f = outage_flags(
            &SinrSet {
                g21: 1e-9,
                g22: 1e-9,
                g11: 1e-9,
                g12: 1e-9,
                g1: 2e-9,
            },
            1e-12,
            1e-12,
        );
        assert!(!f.u2 && !f.u1_without_direct && !f.u1_with_direct);
    }

    #[test]
    fn db_roundtrip() {
        assert_relative_eq!(db_to_linear(-30.0), 1e-3, max_relative = 1e-15);
        assert_relative_eq!(linear_to_db(db_to_linear(17.3)), 17.3, max_relative = 1e-14);
    }
}
