use noma_outage::analytic::{op_u1_exact, op_u2_exact, AnalyticOptions};
use noma_outage::asymptotic::{op_u1_asymptotic_direct, op_u1_asymptotic_nodirect, op_u2_asymptotic};
use noma_outage::model::{db_to_linear, derive_stats, thresholds, Duplex, Scenario, SystemParams};
use noma_outage::specfun::log_gamma;
use proptest::prelude::*;

fn direct(duplex: Duplex, sigma_si_db: f64, n: u32) -> SystemParams {
    SystemParams {
        duplex,
        sigma_si2: db_to_linear(sigma_si_db),
        n,
        ..SystemParams::default()
    }
}

fn nodirect(duplex: Duplex, sigma_si_db: f64) -> SystemParams {
    SystemParams {
        scenario: Scenario::WithoutDirectLink,
        r1: 0.5,
        r2: 3.0,
        ..direct(duplex, sigma_si_db, 2)
    }
}

fn at(p: SystemParams, snr_db: f64) -> SystemParams {
    SystemParams {
        p_s: db_to_linear(snr_db),
        ..p
    }
}

fn reference_points() -> Vec<SystemParams> {
    let mut v = Vec::new();
    for duplex in [Duplex::Fd, Duplex::Hd] {
        for si in [0.0, -30.0] {
            v.push(direct(duplex, si, 2));
            v.push(nodirect(duplex, si));
        }
        for n in 1..=3 {
            v.push(direct(duplex, -30.0, n));
        }
    }
    v
}

proptest! {
    #[test]
    fn u2_asymptote_halves_by_four_per_doubling(snr in -5.0..45.0f64, m in 1u32..=3, rho in 0.1..0.9f64) {
        let p = SystemParams { m, rho, ..at(SystemParams::default(), snr) };
        let q = SystemParams { p_s: 2.0 * p.p_s, ..p };
        let (a, b) = (op_u2_asymptotic(&p), op_u2_asymptotic(&q));
        prop_assume!(a < 1.0);
        prop_assert_eq!(b, a * 2f64.powi(-2 * m as i32));
    }
}

#[test]
fn floor_coefficient_is_the_relay_link_cdf_leading_term() {
    for p in reference_points().into_iter().filter(|p| p.scenario == Scenario::WithoutDirectLink) {
        let d = op_u1_asymptotic_nodirect(&p);
        let (coef, exp) = d.terms[1];
        assert_eq!(exp, 0.0);
        let st = derive_stats(&p);
        let x = thresholds(&p).saturated_relay_bound(&p);
        let k = st.h0.shape;
        let want = (k * (x / st.h0.scale).ln() - log_gamma(k + 1.0).unwrap()).exp();
        assert!((coef / want - 1.0).abs() < 1e-14, "{coef} vs {want}");
    }
}

/// The leading term of a Gamma CDF bounds the CDF from above, so the exact
/// tail falls through C and settles on the true relay-link CDF just below it.
#[test]
fn exact_tail_settles_on_the_relay_link_cdf_below_the_floor() {
    for p in reference_points().into_iter().filter(|p| p.scenario == Scenario::WithoutDirectLink) {
        let c = op_u1_asymptotic_nodirect(&p).terms[1].0;
        let law = derive_stats(&p).h0;
        let limit = law.cdf(thresholds(&p).saturated_relay_bound(&p));
        assert!(limit < c);
        let tail: Vec<f64> = [30.0, 35.0, 40.0, 50.0, 60.0]
            .iter()
            .map(|&s| {
                let e = op_u1_exact(&at(p, s), &AnalyticOptions::default());
                assert!(e.converged);
                e.value
            })
            .collect();
        assert!(tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{tail:?}");
        assert!((tail[4] / limit - 1.0).abs() < 1e-3, "{tail:?} vs {limit}");
        assert!((c - limit) / c < 0.05);
    }
}

/// Lower-bound form of the floor check (exact − C ≥ −1e-9 from 30 dB). The
/// coefficient is the small-argument CDF, an upper bound, so this cannot
/// hold while the relay-link argument is finite; kept for the record.
#[test]
#[ignore = "the floor coefficient upper-bounds the relay-link CDF"]
fn floor_lower_bounds_the_exact_tail() {
    for p in reference_points().into_iter().filter(|p| p.scenario == Scenario::WithoutDirectLink) {
        let c = op_u1_asymptotic_nodirect(&p).terms[1].0;
        for s in [30.0, 32.0, 34.0, 36.0, 38.0, 40.0] {
            let e = op_u1_exact(&at(p, s), &AnalyticOptions::default()).value;
            assert!(e - c >= -1e-9, "{:?} at {s} dB: exact {e} vs C {c}", p.duplex);
        }
    }
}

fn asymptote_gaps(p: SystemParams, user: u8) -> [f64; 3] {
    let gap = |s: f64| {
        let q = at(p, s);
        let (a, e) = match (user, q.scenario) {
            (2, _) => (op_u2_asymptotic(&q), op_u2_exact(&q)),
            (_, Scenario::WithDirectLink) => {
                (op_u1_asymptotic_direct(&q), op_u1_exact(&q, &AnalyticOptions::default()).value)
            }
            (_, Scenario::WithoutDirectLink) => (
                op_u1_asymptotic_nodirect(&q).evaluate(q.p_s),
                op_u1_exact(&q, &AnalyticOptions::default()).value,
            ),
        };
        (a / e - 1.0).abs()
    };
    [gap(36.0), gap(38.0), gap(40.0)]
}

fn shrinking(g: &[f64; 3]) -> bool {
    g[1] <= g[0] && g[2] <= g[1]
}

/// Every curve, as the invariant is usually stated.
#[test]
#[ignore = "U1 gaps level off at the relay-link leading-term bias"]
fn asymptote_gap_shrinks_on_every_curve() {
    for p in reference_points() {
        for user in [1u8, 2] {
            let g = asymptote_gaps(p, user);
            assert!(shrinking(&g), "U{user} {:?} {:?} n={}: {g:?}", p.scenario, p.duplex, p.n);
        }
    }
}

/// Relative overshoot of the relay-link CDF's leading term at the saturated
/// relay bound. U1's asymptotes carry this bias, so their gap levels off
/// near it instead of vanishing.
fn relay_leading_term_bias(p: &SystemParams) -> f64 {
    let law = derive_stats(p).h0;
    let x = thresholds(p).saturated_relay_bound(p);
    let lead = (law.shape * (x / law.scale).ln() - log_gamma(law.shape + 1.0).unwrap()).exp();
    (lead - law.cdf(x)) / lead
}

#[test]
fn u2_gap_shrinks_and_u1_gap_stays_within_the_relay_bias() {
    for p in reference_points() {
        let g2 = asymptote_gaps(p, 2);
        assert!(shrinking(&g2), "U2 {:?} {:?} n={}: {g2:?}", p.scenario, p.duplex, p.n);
        let bias = relay_leading_term_bias(&p);
        let g1 = asymptote_gaps(p, 1);
        assert!(g1.iter().all(|g| *g <= bias + 1e-3), "U1 {:?} {:?} n={}: {g1:?} vs bias {bias}", p.scenario, p.duplex, p.n);
    }
}
