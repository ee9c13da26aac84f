//! Evaluating every requested method at every sweep point.

use noma_outage::analytic::{
    op_u1_exact, op_u1_quadrature_oracle, op_u2_exact, op_u2_quadrature_oracle, SeriesPath,
};
use noma_outage::asymptotic::{op_u1_asymptotic_direct_with, op_u1_asymptotic_nodirect_with, op_u2_asymptotic};
use noma_outage::model::{Scenario, SystemParams};
use noma_outage::montecarlo::{estimate_counts, Proportion};
use serde::Serialize;

use crate::config::{Evaluator, ParamSpec, RunConfig, SweepSpec};

/// How `exact` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMethod {
    /// Closed form with no infinite series (U2, and U1 when no series applies).
    ClosedForm,
    Series,
    /// The series did not converge; the quadrature oracle stands in.
    QuadratureFallback,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UserResult {
    pub exact: Option<f64>,
    pub exact_method: Option<ExactMethod>,
    /// `None` where no series is involved.
    pub series_converged: Option<bool>,
    pub series_path: Option<SeriesPath>,
    pub asymptotic: Option<f64>,
    pub mc: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub mc_low_count: Option<bool>,
    pub quadrature: Option<f64>,
    /// Evaluator failures at this point; the sweep carries on.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub curve: String,
    pub index: usize,
    pub axis_value: f64,
    pub spec: ParamSpec,
    pub params: SystemParams,
    pub mc_trials: Option<u64>,
    pub u1: UserResult,
    pub u2: UserResult,
}

impl PointResult {
    pub fn user(&self, user: u8) -> &UserResult {
        if user == 1 {
            &self.u1
        } else {
            &self.u2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: RunConfig,
    /// Curve-major, in config order.
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn curve(&self, label: &str) -> impl Iterator<Item = &PointResult> {
        let label = label.to_string();
        self.points.iter().filter(move |p| p.curve == label)
    }
}

fn exact_u1(params: &SystemParams, spec: &SweepSpec, out: &mut UserResult) {
    let r = op_u1_exact(params, &spec.analytic.options());
    out.series_path = Some(r.path);
    if r.path == SeriesPath::None {
        out.exact = Some(r.value);
        out.exact_method = Some(ExactMethod::ClosedForm);
        return;
    }
    out.series_converged = Some(r.converged);
    if r.converged {
        out.exact = Some(r.value);
        out.exact_method = Some(ExactMethod::Series);
        return;
    }
    match op_u1_quadrature_oracle(params, params.scenario) {
        Ok(q) => {
            out.exact = Some(q);
            out.exact_method = Some(ExactMethod::QuadratureFallback);
        }
        Err(e) => out.errors.push(format!("exact: series diverged and quadrature failed: {e}")),
    }
}

fn asymptotic_u1(params: &SystemParams, spec: &SweepSpec) -> f64 {
    let v = spec.analytic.variant;
    match params.scenario {
        Scenario::WithDirectLink => op_u1_asymptotic_direct_with(params, v),
        Scenario::WithoutDirectLink => op_u1_asymptotic_nodirect_with(params, v).evaluate(params.p_s),
    }
}

/// Every evaluator in `spec` at axis index `index`.
pub fn evaluate_point(spec: &SweepSpec, index: usize) -> PointResult {
    let (pspec, params) = spec.point(index).expect("sweep specs are validated on construction");
    let mut u1 = UserResult::default();
    let mut u2 = UserResult::default();
    let mut mc_trials = None;
    if spec.has(Evaluator::Exact) {
        exact_u1(&params, spec, &mut u1);
        u2.exact = Some(op_u2_exact(&params));
        u2.exact_method = Some(ExactMethod::ClosedForm);
    }
    if spec.has(Evaluator::Asymptotic) {
        u1.asymptotic = Some(asymptotic_u1(&params, spec));
        u2.asymptotic = Some(op_u2_asymptotic(&params));
    }
    if spec.has(Evaluator::Quadrature) {
        match op_u1_quadrature_oracle(&params, params.scenario) {
            Ok(q) => u1.quadrature = Some(q),
            Err(e) => u1.errors.push(format!("quadrature: {e}")),
        }
        match op_u2_quadrature_oracle(&params) {
            Ok(q) => u2.quadrature = Some(q),
            Err(e) => u2.errors.push(format!("quadrature: {e}")),
        }
    }
    if spec.has(Evaluator::Mc) {
        match estimate_counts(&params, &spec.mc) {
            Ok(c) => {
                mc_trials = Some(c.trials);
                for (out, hits) in [(&mut u1, c.u1(params.scenario)), (&mut u2, c.u2)] {
                    let p = Proportion::from_counts(hits, c.trials);
                    out.mc = Some(p.p);
                    out.mc_stderr = Some(p.stderr);
                    out.mc_low_count = Some(p.low_count);
                }
            }
            Err(e) => {
                u1.errors.push(format!("mc: {e}"));
                u2.errors.push(format!("mc: {e}"));
            }
        }
    }
    PointResult {
        curve: spec.label.clone(),
        index,
        axis_value: spec.values[index],
        spec: pspec,
        params,
        mc_trials,
        u1,
        u2,
    }
}

/// All points of one curve, in axis order.
pub fn run_sweep(spec: &SweepSpec) -> Vec<PointResult> {
    let idx: Vec<usize> = (0..spec.values.len()).collect();
    map_points(&idx, |&i| evaluate_point(spec, i))
}

/// Every curve of a configuration. Points run in parallel; order is kept.
pub fn run(config: &RunConfig) -> SweepResult {
    let jobs: Vec<(usize, usize)> = config
        .curves
        .iter()
        .enumerate()
        .flat_map(|(c, s)| (0..s.values.len()).map(move |i| (c, i)))
        .collect();
    let points = map_points(&jobs, |&(c, i)| evaluate_point(&config.curves[c], i));
    SweepResult {
        config: config.clone(),
        points,
    }
}

#[cfg(feature = "parallel")]
fn map_points<T: Sync, F: Fn(&T) -> PointResult + Sync + Send>(items: &[T], f: F) -> Vec<PointResult> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_points<T: Sync, F: Fn(&T) -> PointResult + Sync + Send>(items: &[T], f: F) -> Vec<PointResult> {
    items.iter().map(f).collect()
}
