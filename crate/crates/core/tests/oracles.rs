//! Cross-checks against code paths that share nothing with the closed forms:
//! statrs distributions, brute-force Monte Carlo and direct integration.

use noma_outage::analytic::{op_u1_exact, op_u1_quadrature_oracle, op_u2_exact, AnalyticOptions};
use noma_outage::model::{db_to_linear, derive_stats, Duplex, Scenario, SystemParams};
use noma_outage::montecarlo::{estimate_op, sample_gains, McConfig};
use noma_outage::specfun::{gamma_cdf, gamma_pdf, log_gamma, upper_inc_gamma};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Gamma};

fn at(snr_db: f64) -> SystemParams {
    SystemParams {
        p_s: db_to_linear(snr_db),
        ..SystemParams::default()
    }
}

#[test]
fn gamma_laws_match_statrs() {
    for &(shape, scale) in &[(1.0, 1.0), (2.0, 0.444), (4.0, 1.0), (6.0, 4.0), (0.5, 2.0), (7.5, 0.1)] {
        let g = Gamma::new(shape, 1.0 / scale).unwrap();
        for &x in &[1e-3, 0.05, 0.3, 1.0, 2.7, 9.0, 30.0] {
            let cdf = gamma_cdf(shape, scale, x).unwrap();
            assert!((cdf - g.cdf(x)).abs() <= 1e-12 * g.cdf(x).max(1e-300) + 1e-15, "cdf {shape} {scale} {x}");
            let pdf = gamma_pdf(shape, scale, x).unwrap();
            assert!((pdf / g.pdf(x) - 1.0).abs() < 1e-10, "pdf {shape} {scale} {x}");
        }
    }
}

#[test]
fn log_gamma_matches_statrs() {
    for &x in &[0.1, 0.5, 1.0, 1.5, 3.0, 10.0, 57.3, 171.2] {
        let want = statrs::function::gamma::ln_gamma(x);
        assert!((log_gamma(x).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn upper_gamma_frozen_values() {
    // mpmath.gammainc(s, x) at 30 digits, rounded to f64
    let frozen = [
        (0.0, 1.0, 0.219_383_934_395_520_28),
        (-1.0, 1.0, 0.148_495_506_775_922_05),
        (-2.5, 0.5, 1.072_465_825_753_447_1),
        (2.0, 3.0, 0.199_148_273_471_455_77),
        (0.5, 2.0, 0.080_647_117_960_317_69),
    ];
    for (s, x, want) in frozen {
        let got = upper_inc_gamma(s, x).unwrap();
        assert!((got / want - 1.0).abs() < 1e-12, "Γ({s}, {x}) = {got}, want {want}");
    }
}

#[test]
fn monte_carlo_agrees_with_closed_forms_at_20_db() {
    let cfg = McConfig {
        n_trials: 2_000_000,
        seed: 20,
        ..McConfig::default()
    };
    for duplex in [Duplex::Fd, Duplex::Hd] {
        for scenario in [Scenario::WithDirectLink, Scenario::WithoutDirectLink] {
            let p = SystemParams {
                duplex,
                scenario,
                ..at(20.0)
            };
            let mc = estimate_op(&p, &cfg).unwrap();
            let u2 = op_u2_exact(&p);
            let u1 = op_u1_exact(&p, &AnalyticOptions::default());
            assert!(u1.converged);
            let band = |p: f64| 4.0 * (p * (1.0 - p) / cfg.n_trials as f64).sqrt() + 1e-6;
            assert!((mc.p_u2 - u2).abs() < band(u2), "{duplex:?} {scenario:?} u2 {} vs {u2}", mc.p_u2);
            assert!((mc.p_u1 - u1.value).abs() < band(u1.value), "{duplex:?} {scenario:?} u1 {} vs {}", mc.p_u1, u1.value);
        }
    }
}

#[test]
fn series_matches_quadrature_across_regimes() {
    for snr in [0.0, 10.0, 25.0, 40.0] {
        for duplex in [Duplex::Fd, Duplex::Hd] {
            for scenario in [Scenario::WithDirectLink, Scenario::WithoutDirectLink] {
                let p = SystemParams {
                    duplex,
                    scenario,
                    ..at(snr)
                };
                let s = op_u1_exact(&p, &AnalyticOptions::default());
                let q = op_u1_quadrature_oracle(&p, scenario).unwrap();
                assert!(s.converged);
                assert!((s.value - q).abs() <= 1e-8 * q + 1e-14, "{snr} {duplex:?} {scenario:?}: {} vs {q}", s.value);
            }
        }
    }
}

#[test]
fn sampled_gains_fit_their_laws() {
    let p = SystemParams { m: 2, n: 3, ..at(10.0) };
    let stats = derive_stats(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 20_000;
    let draws: Vec<_> = (0..n).map(|_| sample_gains(&stats, &mut rng)).collect();
    // DKW: P(sup |F_n - F| > eps) <= 2 exp(-2 n eps^2); eps below gives 1e-6
    let eps = ((2.0f64 / 1e-6).ln() / (2.0 * n as f64)).sqrt();
    for (law, pick) in [
        (stats.h2, (|g: &noma_outage::model::ChannelGains| g.h2sq) as fn(&_) -> f64),
        (stats.h1, |g| g.h1sq),
        (stats.h0, |g| g.h0sq),
    ] {
        let mut xs: Vec<f64> = draws.iter().map(pick).collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = law.cdf(x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < eps, "KS {ks} >= {eps} for {law:?}");
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (law.shape).sqrt() * law.scale;
        assert!((mean - law.mean()).abs() < 5.0 * sd / (n as f64).sqrt());
    }
}
