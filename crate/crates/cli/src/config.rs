//! Run configuration: TOML files, embedded presets and flag overrides.
//!
//! Users write SNR and σ_SI in dB; they are converted to linear once, in
//! [`ParamSpec::to_params`].

use std::fmt;

use noma_outage::analytic::{AnalyticOptions, Variant};
use noma_outage::model::{db_to_linear, Duplex, ModelError, Scenario, SystemParams, DEFAULT_P_TH};
use noma_outage::montecarlo::McConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown preset {0:?} (expected one of fig2, fig3, fig4, fig5)")]
    UnknownPreset(String),
    #[error("curve {curve}: {reason}")]
    Curve { curve: String, reason: String },
    #[error("curve {curve}, point {index} ({axis} = {value}): {source}")]
    InvalidPoint {
        curve: String,
        index: usize,
        axis: Axis,
        value: f64,
        source: ModelError,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    Exact,
    Asymptotic,
    Mc,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    SnrDb,
    SigmaSiDb,
    Rho,
    DS2,
    NAntennas,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::SnrDb => "snr_db",
            Axis::SigmaSiDb => "sigma_si_db",
            Axis::Rho => "rho",
            Axis::DS2 => "d_s2",
            Axis::NAntennas => "n_antennas",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// User-facing parameters. `d_21` left unset means `d_S1 - d_S2` (users on
/// one line through the BS).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSpec {
    pub snr_db: f64,
    pub noise_power: f64,
    pub a1: f64,
    pub a2: f64,
    pub rho: f64,
    pub eta: f64,
    pub p_th: f64,
    pub sigma_si_db: f64,
    pub duplex: Duplex,
    pub m: u32,
    pub n_antennas: u32,
    pub d_s1: f64,
    pub d_s2: f64,
    pub d_21: Option<f64>,
    pub epsilon: f64,
    pub r1: f64,
    pub r2: f64,
    pub scenario: Scenario,
}

impl Default for ParamSpec {
    fn default() -> Self {
        let p = SystemParams::default();
        Self {
            snr_db: 0.0,
            noise_power: p.sigma2,
            a1: p.a1,
            a2: p.a2,
            rho: p.rho,
            eta: p.eta,
            p_th: DEFAULT_P_TH,
            sigma_si_db: -30.0,
            duplex: p.duplex,
            m: p.m,
            n_antennas: p.n,
            d_s1: p.d_s1,
            d_s2: p.d_s2,
            d_21: None,
            epsilon: p.epsilon,
            r1: p.r1,
            r2: p.r2,
            scenario: p.scenario,
        }
    }
}

impl ParamSpec {
    /// σ_SI in dB is read as a power ratio: σ_SI² = 10^(dB/10).
    pub fn to_params(&self) -> Result<SystemParams, ModelError> {
        let p = SystemParams {
            p_s: db_to_linear(self.snr_db),
            sigma2: self.noise_power,
            a1: self.a1,
            a2: self.a2,
            rho: self.rho,
            eta: self.eta,
            p_th: self.p_th,
            sigma_si2: db_to_linear(self.sigma_si_db),
            duplex: self.duplex,
            m: self.m,
            n: self.n_antennas,
            d_s1: self.d_s1,
            d_s2: self.d_s2,
            d_21: self.d_21.unwrap_or(self.d_s1 - self.d_s2),
            epsilon: self.epsilon,
            r1: self.r1,
            r2: self.r2,
            scenario: self.scenario,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn axis_value(&self, axis: Axis) -> f64 {
        match axis {
            Axis::SnrDb => self.snr_db,
            Axis::SigmaSiDb => self.sigma_si_db,
            Axis::Rho => self.rho,
            Axis::DS2 => self.d_s2,
            Axis::NAntennas => self.n_antennas as f64,
        }
    }

    pub fn with_axis(mut self, axis: Axis, v: f64) -> Result<Self, String> {
        match axis {
            Axis::SnrDb => self.snr_db = v,
            Axis::SigmaSiDb => self.sigma_si_db = v,
            Axis::Rho => self.rho = v,
            Axis::DS2 => self.d_s2 = v,
            Axis::NAntennas => {
                if v.fract() != 0.0 || !(1.0..=64.0).contains(&v) {
                    return Err(format!("n_antennas must be an integer in 1..=64, got {v}"));
                }
                self.n_antennas = v as u32;
            }
        }
        Ok(self)
    }
}

/// Explicit list, or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Values {
    pub fn expand(&self) -> Result<Vec<f64>, String> {
        match self {
            Values::List(v) => Ok(v.clone()),
            Values::Range { start, stop, step } => {
                if !(*step != 0.0 && step.is_finite()) || (stop - start) / step < 0.0 {
                    return Err(format!("range {start}..{stop} step {step} is empty"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                // snap to 1e-9 so that 0.1 + 2·0.1 prints as 0.3
                Ok((0..n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticSpec {
    pub series_tol: f64,
    pub max_terms: usize,
    pub variant: Variant,
}

impl Default for AnalyticSpec {
    fn default() -> Self {
        let o = AnalyticOptions::default();
        Self {
            series_tol: o.rel_tol,
            max_terms: o.max_terms,
            variant: o.variant,
        }
    }
}

impl AnalyticSpec {
    pub fn options(&self) -> AnalyticOptions {
        AnalyticOptions {
            rel_tol: self.series_tol,
            max_terms: self.max_terms,
            variant: self.variant,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    label: Option<String>,
    axis: Axis,
    values: Values,
    #[serde(default)]
    set: toml::Table,
}

fn default_evaluators() -> Vec<Evaluator> {
    vec![Evaluator::Exact, Evaluator::Asymptotic, Evaluator::Mc]
}

fn default_fit_points() -> usize {
    noma_outage::asymptotic::DEFAULT_FIT_WINDOW
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default = "default_evaluators")]
    evaluators: Vec<Evaluator>,
    #[serde(default = "default_fit_points")]
    fit_points: usize,
    #[serde(default)]
    analytic: AnalyticSpec,
    #[serde(default)]
    mc: McConfig,
    #[serde(default)]
    base: toml::Table,
    #[serde(default)]
    curves: Vec<RawCurve>,
}

/// One curve: a base parameter set swept along one axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub label: String,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub base: ParamSpec,
    pub evaluators: Vec<Evaluator>,
    pub mc: McConfig,
    pub analytic: AnalyticSpec,
}

impl SweepSpec {
    pub fn point(&self, index: usize) -> Result<(ParamSpec, SystemParams), ConfigError> {
        let value = self.values[index];
        let point_err = |source| ConfigError::InvalidPoint {
            curve: self.label.clone(),
            index,
            axis: self.axis,
            value,
            source,
        };
        let spec = self.base.with_axis(self.axis, value).map_err(|reason| ConfigError::Curve {
            curve: self.label.clone(),
            reason,
        })?;
        let params = spec.to_params().map_err(point_err)?;
        Ok((spec, params))
    }

    pub fn has(&self, e: Evaluator) -> bool {
        self.evaluators.contains(&e)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let err = |reason: &str| ConfigError::Curve {
            curve: self.label.clone(),
            reason: reason.to_string(),
        };
        if self.values.is_empty() {
            return Err(err("no axis values"));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(err("axis values must be strictly increasing or strictly decreasing"));
        }
        for i in 0..self.values.len() {
            self.point(i)?;
        }
        if self.has(Evaluator::Mc) {
            self.mc.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub name: String,
    pub description: String,
    pub evaluators: Vec<Evaluator>,
    pub fit_points: usize,
    pub analytic: AnalyticSpec,
    pub mc: McConfig,
    pub curves: Vec<SweepSpec>,
}

/// Flag values that replace the corresponding config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub evaluators: Option<Vec<Evaluator>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub series_tol: Option<f64>,
    pub fit_points: Option<usize>,
}

fn merge(base: &toml::Table, set: &toml::Table) -> toml::Table {
    let mut out = base.clone();
    for (k, v) in set {
        out.insert(k.clone(), v.clone());
    }
    out
}

fn label_of(set: &toml::Table) -> String {
    if set.is_empty() {
        return "base".to_string();
    }
    // toml::Table keeps keys sorted, so labels are stable
    set.iter()
        .map(|(k, v)| match v {
            toml::Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_with(text, &Overrides::default())
    }

    pub fn from_toml_with(text: &str, ov: &Overrides) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let mut evaluators = ov.evaluators.clone().unwrap_or(raw.evaluators);
        evaluators.sort();
        evaluators.dedup();
        let mut mc = raw.mc;
        if let Some(t) = ov.trials {
            mc.n_trials = t;
        }
        if let Some(s) = ov.seed {
            mc.seed = s;
        }
        let mut analytic = raw.analytic;
        if let Some(t) = ov.series_tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(ConfigError::Invalid(format!("series tolerance must be in (0, 1), got {t}")));
            }
            analytic.series_tol = t;
        }
        let fit_points = ov.fit_points.unwrap_or(raw.fit_points);
        if fit_points < 2 {
            return Err(ConfigError::Invalid(format!("fit_points must be at least 2, got {fit_points}")));
        }
        let mut curves = Vec::with_capacity(raw.curves.len());
        for c in raw.curves {
            let label = c.label.clone().unwrap_or_else(|| label_of(&c.set));
            let base: ParamSpec = toml::Value::Table(merge(&raw.base, &c.set))
                .try_into()
                .map_err(|e: toml::de::Error| ConfigError::Curve {
                    curve: label.clone(),
                    reason: e.message().to_string(),
                })?;
            let values = c.values.expand().map_err(|reason| ConfigError::Curve {
                curve: label.clone(),
                reason,
            })?;
            let spec = SweepSpec {
                label,
                axis: c.axis,
                values,
                base,
                evaluators: evaluators.clone(),
                mc,
                analytic,
            };
            spec.validate()?;
            curves.push(spec);
        }
        Ok(Self {
            name: raw.name,
            description: raw.description,
            evaluators,
            fit_points,
            analytic,
            mc,
            curves,
        })
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        Self::from_toml(preset_text(name)?)
    }
}

pub const PRESETS: [&str; 4] = ["fig2", "fig3", "fig4", "fig5"];

pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    Ok(match name {
        "fig2" => include_str!("../presets/fig2.toml"),
        "fig3" => include_str!("../presets/fig3.toml"),
        "fig4" => include_str!("../presets/fig4.toml"),
        "fig5" => include_str!("../presets/fig5.toml"),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_expand_inclusively() {
        let v = Values::Range {
            start: 0.1,
            stop: 1.4,
            step: 0.1,
        };
        let x = v.expand().unwrap();
        assert_eq!(x.len(), 14);
        assert_eq!(x[2], 0.3);
        assert_eq!(*x.last().unwrap(), 1.4);
        assert!(Values::Range {
            start: 1.0,
            stop: 0.0,
            step: 1.0
        }
        .expand()
        .is_err());
    }

    #[test]
    fn curve_overrides_and_labels() {
        let cfg = RunConfig::from_toml(
            r#"
            name = "t"
            [base]
            rho = 0.4
            [[curves]]
            axis = "snr_db"
            values = [0.0, 10.0]
            set = { duplex = "hd", rho = 0.7 }
            "#,
        )
        .unwrap();
        let c = &cfg.curves[0];
        assert_eq!(c.label, "duplex=hd,rho=0.7");
        assert_eq!(c.base.rho, 0.7);
        assert_eq!(c.base.duplex, Duplex::Hd);
        let (_, p) = c.point(1).unwrap();
        assert_eq!(p.p_s, 10.0);
    }

    #[test]
    fn invalid_point_reports_index() {
        let e = RunConfig::from_toml(
            r#"
            name = "t"
            [[curves]]
            axis = "rho"
            values = [0.2, 0.5, 1.5]
            "#,
        )
        .unwrap_err();
        match e {
            ConfigError::InvalidPoint { index, .. } => assert_eq!(index, 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn rejects_unordered_and_unknown_keys() {
        let unordered = "name = \"t\"\n[[curves]]\naxis = \"snr_db\"\nvalues = [0.0, 5.0, 5.0]\n";
        assert!(RunConfig::from_toml(unordered).is_err());
        let typo = "name = \"t\"\n[base]\nsnr = 3.0\n[[curves]]\naxis = \"snr_db\"\nvalues = [0.0]\n";
        assert!(RunConfig::from_toml(typo).is_err());
    }

    #[test]
    fn derived_relay_distance() {
        let p = ParamSpec {
            d_s2: 0.4,
            ..ParamSpec::default()
        };
        assert!((p.to_params().unwrap().d_21 - 1.1).abs() < 1e-15);
    }
}
