use noma_outage::model::{
    db_to_linear, harvested_power, outage_flags, outage_indicators, rate_thresholds, sinr_all, thresholds,
    ChannelGains, Duplex, Scenario, SystemParams,
};
use noma_outage::specfun::{gamma_cdf, log_gamma, sum_series, upper_inc_gamma, SeriesPolicy};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SystemParams> {
    (
        -10.0..50.0f64,
        0.05..0.9f64,
        prop_oneof![Just(Duplex::Fd), Just(Duplex::Hd)],
        -50.0..0.0f64,
        (1u32..=3, 1u32..=3),
        (0.2..1.4f64, 0.05..0.6f64),
        (0.55..0.95f64, 0.1..2.0f64, 0.1..3.5f64),
        (0.01..100.0f64, 0.3..1.0f64),
    )
        .prop_map(|(snr, rho, duplex, si_db, (n, m), (d_s2, d_21), (a1, r1, r2), (p_th, eta))| SystemParams {
            p_s: db_to_linear(snr),
            rho,
            duplex,
            sigma_si2: db_to_linear(si_db),
            n,
            m,
            d_s2,
            d_21,
            d_s1: d_s2 + d_21,
            a1,
            a2: 1.0 - a1,
            r1,
            r2,
            p_th,
            eta,
            ..SystemParams::default()
        })
        .prop_filter("valid", |p| p.validate().is_ok())
}

fn gains() -> impl Strategy<Value = ChannelGains> {
    (1e-4..30.0f64, 1e-4..30.0f64, 1e-4..30.0f64).prop_map(|(h2sq, h1sq, h0sq)| ChannelGains { h2sq, h1sq, h0sq })
}

proptest! {
    #[test]
    fn upper_gamma_recurrence(s in -10.0..3.0f64, x in 1e-3..20.0f64) {
        let next = upper_inc_gamma(s + 1.0, x).unwrap();
        let rhs = s * upper_inc_gamma(s, x).unwrap() + x.powf(s) * (-x).exp();
        prop_assume!(next > 0.0);
        prop_assert!((next - rhs).abs() <= 1e-9 * next, "{} vs {}", next, rhs);
    }

    #[test]
    fn gamma_cdf_is_a_cdf(k in 0.1..30.0f64, theta in 0.05..10.0f64, x in 0.0..100.0f64, dx in 0.0..5.0f64) {
        let f = gamma_cdf(k, theta, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(gamma_cdf(k, theta, x + dx).unwrap() >= f);
        prop_assume!(x > 0.0);
        let q = upper_inc_gamma(k, x / theta).unwrap() / log_gamma(k).unwrap().exp();
        prop_assert!((f + q - 1.0).abs() <= 1e-12, "{} + {}", f, q);
    }

    #[test]
    fn alternating_series_reach_their_limit(x in 0.01..8.0f64, rel_tol in 1e-14..1e-6f64) {
        // e^{-x} = Σ (-x)^p / p!
        let policy = SeriesPolicy { rel_tol, max_terms: 500, ..SeriesPolicy::default() };
        // by recurrence; a log-gamma form loses ~1e-14 per term near the peak
        let term = |p: usize| (1..=p).fold(1.0, |t, i| t * -x / i as f64);
        let out = sum_series(term, &policy).unwrap();
        prop_assert!(out.converged);
        let want = (-x).exp();
        let slack = 10.0 * rel_tol * want + out.abs_sum * 1e-15;
        prop_assert!((out.value - want).abs() <= slack, "{} vs {}", out.value, want);
    }

    #[test]
    fn mrc_output_is_the_exact_sum(p in params(), g in gains()) {
        let s = sinr_all(&p, &g);
        prop_assert_eq!(s.g1, s.g11 + s.g12);
        prop_assert!([s.g21, s.g22, s.g11, s.g12].iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn harvester_is_monotone_and_saturates(p in params(), h in 1e-4..50.0f64, dh in 0.0..10.0f64) {
        let a = harvested_power(&p, h);
        prop_assert!(harvested_power(&p, h + dh) >= a);
        prop_assert!(a <= p.eta * p.p_th * (1.0 + 1e-12));
    }

    #[test]
    fn hd_outage_never_appears_with_more_power(p in params(), g in gains(), step_db in 0.0..20.0f64) {
        let p = SystemParams { duplex: Duplex::Hd, ..p };
        let q = SystemParams { p_s: p.p_s * db_to_linear(step_db), ..p };
        for scenario in [Scenario::WithDirectLink, Scenario::WithoutDirectLink] {
            let (u1p, u2p) = outage_indicators(&SystemParams { scenario, ..p }, &g);
            let (u1q, u2q) = outage_indicators(&SystemParams { scenario, ..q }, &g);
            prop_assert!(!u1q || u1p);
            prop_assert!(!u2q || u2p);
        }
    }

    #[test]
    fn more_self_interference_never_helps_u2(p in params(), g in gains(), extra_db in 0.0..20.0f64) {
        let p = SystemParams { duplex: Duplex::Fd, ..p };
        let q = SystemParams { sigma_si2: p.sigma_si2 * db_to_linear(extra_db), ..p };
        prop_assume!(q.validate().is_ok());
        prop_assert!(sinr_all(&q, &g).g22 <= sinr_all(&p, &g).g22 * (1.0 + 1e-12));
    }

    #[test]
    fn fd_without_si_matches_hd_at_hd_thresholds(p in params(), g in gains()) {
        let hd = SystemParams { duplex: Duplex::Hd, ..p };
        let fd = SystemParams { duplex: Duplex::Fd, sigma_si2: 0.0, ..p };
        let (t1, t2) = rate_thresholds(&hd);
        prop_assert_eq!(outage_flags(&sinr_all(&fd, &g), t1, t2), outage_flags(&sinr_all(&hd, &g), t1, t2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn threshold_set_invariants(p in params()) {
        let t = thresholds(&p);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(t.tau1_star, max(&[0.0, t.tau1, t.tau2]));
        prop_assert_eq!(t.beta1_star, max(&[t.beta1, t.beta2, t.beta3]));
        prop_assert_eq!(t.tau2_star, t.tau1.min(t.beta1));
        prop_assert_eq!(t.tau3_star, t.tau1.max(0.0));
        prop_assert_eq!(t.beta2_star, t.beta2.max(0.0));
        prop_assert_eq!(t.beta3_star, t.beta1.max(t.beta2));
        let all = [t.tau1, t.tau2, t.beta1, t.beta2, t.beta3, t.theta1, t.tau1_star, t.tau2_star, t.tau3_star,
                   t.beta1_star, t.beta2_star, t.beta3_star];
        if t.feasible_u1 && t.feasible_u2 {
            prop_assert!(all.iter().all(|v| *v >= 0.0), "{:?}", t);
        }
        prop_assert!(all.iter().all(|v| !v.is_nan()));
        let slots = if p.duplex == Duplex::Hd { 2.0 } else { 1.0 };
        prop_assert_eq!(t.gamma_th1, (slots * p.r1).exp2() - 1.0);
        if p.duplex == Duplex::Hd {
            prop_assert_eq!(t.phi1, 0.0);
        }
    }
}
