//! Special functions used by the outage closed forms.
//!
//! Everything here works in `f64`. The incomplete gamma routines are written
//! in terms of the scaled function
//!
//! ```text
//! G(s, x) = Γ(s, x) · eˣ · x⁻ˢ
//! ```
//!
//! which stays O(1/|s|) for large negative shapes, so the closed forms can
//! combine it with their own power factors in log space instead of overflowing
//! on `Γ(-200, 0.01)`.

use thiserror::Error;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFunError {
    #[error("{func}: argument {arg} is outside the domain")]
    Domain { func: &'static str, arg: f64 },
    #[error("series term p={index} is not finite ({value})")]
    NonFiniteTerm { index: usize, value: f64 },
    #[error("{func}: no convergence after {iterations} iterations")]
    NoConvergence {
        func: &'static str,
        iterations: usize,
    },
}

pub type Result<T> = std::result::Result<T, SpecFunError>;

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(SpecFunError::Domain {
            func: "log_gamma",
            arg: x,
        });
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Lower regularized incomplete gamma `P(a, x)` by its power series.
/// Only used for `x < a + 1`, where the series converges quickly.
fn reg_lower_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * f64::EPSILON * 0.5 {
            let ln_pref = -x + a * x.ln() - log_gamma(a)?;
            return Ok(sum * ln_pref.exp());
        }
    }
    Err(SpecFunError::NoConvergence {
        func: "incomplete gamma series",
        iterations: MAX_ITER,
    })
}

/// Legendre continued fraction for `G(s, x)` (modified Lentz).
/// Valid for every real `s`; converges fast once `x ≳ max(1, s)`.
fn scaled_upper_cf(s: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(SpecFunError::NoConvergence {
        func: "incomplete gamma continued fraction",
        iterations: MAX_ITER,
    })
}

/// Exponential integral `E₁(x)` for `0 < x < 1` by its convergent series.
fn e1_small(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < sum.abs() * f64::EPSILON * 0.25 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

fn check_upper_args(func: &'static str, s: f64, x: f64) -> Result<()> {
    if !s.is_finite() {
        return Err(SpecFunError::Domain { func, arg: s });
    }
    if !x.is_finite() || x <= 0.0 {
        return Err(SpecFunError::Domain { func, arg: x });
    }
    Ok(())
}

/// Scaled upper incomplete gamma `G(s, x) = Γ(s, x) eˣ x⁻ˢ`, any real `s`, `x > 0`.
pub fn scaled_upper_inc_gamma(s: f64, x: f64) -> Result<f64> {
    check_upper_args("scaled_upper_inc_gamma", s, x)?;
    if s > 0.0 && x < s + 1.0 {
        let q = 1.0 - reg_lower_series(s, x)?;
        return Ok((log_gamma(s)? + q.ln() + x - s * x.ln()).exp());
    }
    if x >= 1.0 {
        return scaled_upper_cf(s, x);
    }
    // s <= 0 and x < 1: anchor in (0, 1] (or at 0 for integer s) and recur
    // downward with G(σ) = (1 - x·G(σ+1)) / (-σ).
    let frac = s - s.floor();
    let (mut shape, mut g) = if frac == 0.0 {
        (0.0, e1_small(x) * x.exp())
    } else {
        let q = 1.0 - reg_lower_series(frac, x)?;
        (
            frac,
            (log_gamma(frac)? + q.ln() + x - frac * x.ln()).exp(),
        )
    };
    while shape > s + 0.5 {
        shape -= 1.0;
        g = (1.0 - x * g) / (-shape);
    }
    Ok(g)
}

/// `ln Γ(s, x)` for any real `s` and `x > 0`.
pub fn ln_upper_inc_gamma(s: f64, x: f64) -> Result<f64> {
    check_upper_args("ln_upper_inc_gamma", s, x)?;
    if s > 0.0 && x < s + 1.0 {
        let q = 1.0 - reg_lower_series(s, x)?;
        return Ok(log_gamma(s)? + q.ln());
    }
    Ok(s * x.ln() - x + scaled_upper_inc_gamma(s, x)?.ln())
}

/// Upper incomplete gamma `Γ(s, x) = ∫ₓ^∞ t^(s-1) e^(-t) dt` for any real `s`, `x > 0`.
///
/// Zero and negative shapes go through the downward recurrence
/// `Γ(s, x) = (Γ(s+1, x) - xˢ e⁻ˣ) / s`, anchored at `E₁(x)` for integer shapes.
pub fn upper_inc_gamma(s: f64, x: f64) -> Result<f64> {
    Ok(ln_upper_inc_gamma(s, x)?.exp())
}

fn check_gamma_dist(func: &'static str, shape: f64, scale: f64, x: f64) -> Result<()> {
    if !shape.is_finite() || shape <= 0.0 {
        return Err(SpecFunError::Domain { func, arg: shape });
    }
    if !scale.is_finite() || scale <= 0.0 {
        return Err(SpecFunError::Domain { func, arg: scale });
    }
    if x.is_nan() || x < 0.0 {
        return Err(SpecFunError::Domain { func, arg: x });
    }
    Ok(())
}

/// CDF of `Gamma(shape, scale)` at `x`. `x = +∞` gives 1.
pub fn gamma_cdf(shape: f64, scale: f64, x: f64) -> Result<f64> {
    check_gamma_dist("gamma_cdf", shape, scale, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let z = x / scale;
    if z < shape + 1.0 {
        return reg_lower_series(shape, z);
    }
    let ln_q = shape * z.ln() - z + scaled_upper_cf(shape, z)?.ln() - log_gamma(shape)?;
    Ok(-ln_q.exp_m1())
}

/// Complementary CDF `1 - F(x)`, accurate in the upper tail.
pub fn gamma_sf(shape: f64, scale: f64, x: f64) -> Result<f64> {
    check_gamma_dist("gamma_sf", shape, scale, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let z = x / scale;
    if z < shape + 1.0 {
        return Ok(1.0 - reg_lower_series(shape, z)?);
    }
    let ln_q = shape * z.ln() - z + scaled_upper_cf(shape, z)?.ln() - log_gamma(shape)?;
    Ok(ln_q.exp())
}

/// PDF of `Gamma(shape, scale)` at `x`.
pub fn gamma_pdf(shape: f64, scale: f64, x: f64) -> Result<f64> {
    check_gamma_dist("gamma_pdf", shape, scale, x)?;
    if x == 0.0 {
        return Ok(if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            1.0 / scale
        } else {
            0.0
        });
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let z = x / scale;
    Ok(((shape - 1.0) * z.ln() - z - log_gamma(shape)?).exp() / scale)
}

/// Truncation policy for infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy {
    pub rel_tol: f64,
    pub max_terms: usize,
    /// Number of consecutive small terms required before declaring convergence.
    pub window: usize,
    /// Terms that are always summed, whatever their size (skips a rising prefix).
    pub min_terms: usize,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_terms: 200,
            window: 3,
            min_terms: 0,
        }
    }
}

impl SeriesPolicy {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOutcome {
    /// Partial sum actually accumulated, converged or not.
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
    /// Σ|term_p|; `abs_sum * ε / |value|` bounds the cancellation loss.
    pub abs_sum: f64,
}

impl SeriesOutcome {
    /// Relative rounding error bound implied by cancellation across the terms.
    pub fn cancellation_bound(&self) -> f64 {
        if self.value == 0.0 {
            if self.abs_sum == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs_sum * f64::EPSILON / self.value.abs()
        }
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums `term(0) + term(1) + …` until `policy.window` consecutive terms satisfy
/// `|term_p| ≤ rel_tol · |partial sum|`, or `max_terms` terms have been used.
pub fn sum_series<F>(term: F, policy: &SeriesPolicy) -> Result<SeriesOutcome>
where
    F: FnMut(usize) -> f64,
{
    sum_series_from(0.0, term, policy)
}

/// Like [`sum_series`], but the accumulation starts at `initial` and the
/// stopping test is relative to `initial + Σ term_p`. Used when a series is
/// subtracted from a known quantity and the difference is what matters.
pub fn sum_series_from<F>(initial: f64, mut term: F, policy: &SeriesPolicy) -> Result<SeriesOutcome>
where
    F: FnMut(usize) -> f64,
{
    if !(policy.rel_tol > 0.0) || policy.max_terms == 0 {
        return Err(SpecFunError::Domain {
            func: "sum_series",
            arg: policy.rel_tol,
        });
    }
    let window = policy.window.max(1);
    let mut acc = CompensatedSum::default();
    acc.add(initial);
    let mut abs_sum = initial.abs();
    let mut small_run = 0;
    for p in 0..policy.max_terms {
        let t = term(p);
        if !t.is_finite() {
            return Err(SpecFunError::NonFiniteTerm { index: p, value: t });
        }
        acc.add(t);
        abs_sum += t.abs();
        if t.abs() <= policy.rel_tol * acc.value().abs() {
            small_run += 1;
            if small_run >= window && p + 1 >= policy.min_terms {
                return Ok(SeriesOutcome {
                    value: acc.value(),
                    terms_used: p + 1,
                    converged: true,
                    abs_sum,
                });
            }
        } else {
            small_run = 0;
        }
    }
    Ok(SeriesOutcome {
        value: acc.value(),
        terms_used: policy.max_terms,
        converged: false,
        abs_sum,
    })
}
