//! Cross-checks between evaluators and diversity-order fits.

use noma_outage::asymptotic::diversity_order_fit;
use serde::Serialize;

use crate::config::Axis;
use crate::sweep::{ExactMethod, PointResult, SweepResult, UserResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Both estimates below this count as agreeing regardless of the z-score.
pub const AGREEMENT_FLOOR: f64 = 1e-7;
pub const AGREEMENT_Z: f64 = 3.0;
/// Series-vs-quadrature gaps are only scored above this probability.
pub const GAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct UserComparison {
    /// `|exact - mc| / stderr`, `None` when either is missing.
    pub z_score: Option<f64>,
    pub agree: Option<bool>,
    /// Relative gap between the exact value and the quadrature oracle.
    pub series_quad_gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointComparison {
    pub u1: UserComparison,
    pub u2: UserComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveFit {
    pub curve: String,
    pub user: u8,
    pub diversity_order: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub max_z_score: Option<f64>,
    pub max_series_quad_gap: Option<f64>,
    pub agreement_checks: usize,
    pub disagreements: usize,
    pub series_fallbacks: usize,
    pub evaluator_errors: usize,
    pub diversity_orders: Vec<CurveFit>,
}

impl Summary {
    pub fn all_agree(&self) -> bool {
        self.disagreements == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub points: Vec<PointComparison>,
    pub summary: Summary,
}

/// Standard error for comparing an analytic value with a count over `n`
/// trials: the larger of the Bernoulli variances at the two probabilities,
/// so a zero count does not claim zero uncertainty.
pub fn comparison_stderr(exact: f64, mc: f64, n: u64) -> f64 {
    let var = |p: f64| p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0));
    (var(exact).max(var(mc)) / n as f64).sqrt()
}

/// `(z, agree)`; agreement is `|exact - mc| ≤ 3σ` or both below 1e-7.
pub fn agreement(exact: f64, mc: f64, n: u64) -> (f64, bool) {
    let diff = (exact - mc).abs();
    let se = comparison_stderr(exact, mc, n);
    let z = if diff == 0.0 { 0.0 } else { diff / se };
    let agree = diff <= AGREEMENT_Z * se || (exact < AGREEMENT_FLOOR && mc < AGREEMENT_FLOOR);
    (z, agree)
}

fn compare_user(u: &UserResult, trials: Option<u64>) -> UserComparison {
    let mut c = UserComparison::default();
    if let (Some(e), Some(m), Some(n)) = (u.exact, u.mc, trials) {
        let (z, agree) = agreement(e, m, n);
        c.z_score = Some(z);
        c.agree = Some(agree);
    }
    // a fallback value is the oracle itself, so there is nothing to compare
    if u.exact_method != Some(ExactMethod::QuadratureFallback) {
        if let (Some(e), Some(q)) = (u.exact, u.quadrature) {
            if q > GAP_FLOOR {
                c.series_quad_gap = Some((e - q).abs() / q);
            }
        }
    }
    c
}

fn max_opt(acc: Option<f64>, v: Option<f64>) -> Option<f64> {
    match (acc, v) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    }
}

/// Fit on the exact curve of each SNR sweep, over the last `window` points.
fn fits(result: &SweepResult, window: usize) -> Vec<CurveFit> {
    let mut out = Vec::new();
    for spec in result.config.curves.iter().filter(|c| c.axis == Axis::SnrDb) {
        let pts: Vec<&PointResult> = result.curve(&spec.label).collect();
        for user in [1u8, 2] {
            let curve: Option<Vec<(f64, f64)>> = pts.iter().map(|p| Some((p.axis_value, p.user(user).exact?))).collect();
            let (diversity_order, error) = match curve {
                None => (None, Some("exact values missing".to_string())),
                Some(c) => match diversity_order_fit(&c, window) {
                    Ok(d) => (Some(d), None),
                    Err(e) => (None, Some(e.to_string())),
                },
            };
            out.push(CurveFit {
                curve: spec.label.clone(),
                user,
                diversity_order,
                error,
            });
        }
    }
    out
}

pub fn compare_report(result: &SweepResult) -> ComparisonReport {
    let points: Vec<PointComparison> = result
        .points
        .iter()
        .map(|p| PointComparison {
            u1: compare_user(&p.u1, p.mc_trials),
            u2: compare_user(&p.u2, p.mc_trials),
        })
        .collect();
    let all = || points.iter().flat_map(|p| [p.u1, p.u2]);
    let users = || result.points.iter().flat_map(|p| [&p.u1, &p.u2]);
    let summary = Summary {
        max_z_score: all().fold(None, |a, c| max_opt(a, c.z_score)),
        max_series_quad_gap: all().fold(None, |a, c| max_opt(a, c.series_quad_gap)),
        agreement_checks: all().filter(|c| c.agree.is_some()).count(),
        disagreements: all().filter(|c| c.agree == Some(false)).count(),
        series_fallbacks: users()
            .filter(|u| u.exact_method == Some(ExactMethod::QuadratureFallback))
            .count(),
        evaluator_errors: users().map(|u| u.errors.len()).sum(),
        diversity_orders: fits(result, result.config.fit_points),
    };
    ComparisonReport { points, summary }
}
