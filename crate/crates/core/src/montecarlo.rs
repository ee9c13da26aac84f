//! Seeded Monte Carlo estimates of the outage probabilities.
//!
//! Trials are split into batches of `batch_size`. Batch `b` draws from the
//! ChaCha8 stream `(seed, b)`, so a trial's samples depend only on its batch
//! index and its position inside the batch. Counts are reduced as integers,
//! which makes the result independent of the worker count.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    derive_stats, outage_flags, rate_thresholds, sinr_all, ChannelGains, ChannelStats, GainLaw, ModelError, Scenario,
    SystemParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid Monte Carlo configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_trials: u64,
    pub seed: u64,
    pub batch_size: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_trials: 1_000_000,
            seed: 0x5eed,
            batch_size: 65_536,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.n_trials == 0 {
            return Err(McError::Config("n_trials must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(McError::Config("batch_size must be at least 1"));
        }
        Ok(())
    }

    pub fn n_batches(&self) -> u64 {
        self.n_trials.div_ceil(self.batch_size)
    }

    fn batch_len(&self, b: u64) -> u64 {
        (self.n_trials - b * self.batch_size).min(self.batch_size)
    }
}

/// Raw outage counts. Both user-1 scenarios are counted on the same draws.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OutageCounts {
    pub trials: u64,
    pub u2: u64,
    pub u1_without_direct: u64,
    pub u1_with_direct: u64,
}

impl std::ops::Add for OutageCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            u2: self.u2 + o.u2,
            u1_without_direct: self.u1_without_direct + o.u1_without_direct,
            u1_with_direct: self.u1_with_direct + o.u1_with_direct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageResult {
    pub p_u1: f64,
    pub p_u2: f64,
    pub stderr_u1: f64,
    pub stderr_u2: f64,
    pub method: Method,
    pub n_trials: u64,
    /// Fewer than 100 expected outages; the normal interval is unreliable.
    pub low_count_u1: bool,
    pub low_count_u2: bool,
}

/// Estimate and standard error from a count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub p: f64,
    pub stderr: f64,
    pub low_count: bool,
}

impl Proportion {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p = hits as f64 / n;
        Self {
            p,
            stderr: (p * (1.0 - p) / n).sqrt(),
            low_count: p < 100.0 / n,
        }
    }
}

impl OutageCounts {
    pub fn u1(&self, scenario: Scenario) -> u64 {
        match scenario {
            Scenario::WithDirectLink => self.u1_with_direct,
            Scenario::WithoutDirectLink => self.u1_without_direct,
        }
    }

    pub fn result(&self, scenario: Scenario) -> OutageResult {
        let u1 = Proportion::from_counts(self.u1(scenario), self.trials);
        let u2 = Proportion::from_counts(self.u2, self.trials);
        OutageResult {
            p_u1: u1.p,
            p_u2: u2.p,
            stderr_u1: u1.stderr,
            stderr_u2: u2.stderr,
            method: Method::MonteCarlo,
            n_trials: self.trials,
            low_count_u1: u1.low_count,
            low_count_u2: u2.low_count,
        }
    }
}

/// Gamma samplers for the three channel gains.
#[derive(Debug, Clone, Copy)]
pub struct GainSampler {
    h2: Gamma<f64>,
    h1: Gamma<f64>,
    h0: Gamma<f64>,
}

fn gamma_of(law: &GainLaw) -> Gamma<f64> {
    Gamma::new(law.shape, law.scale).expect("validated parameters give a positive shape and scale")
}

impl GainSampler {
    pub fn new(stats: &ChannelStats) -> Self {
        Self {
            h2: gamma_of(&stats.h2),
            h1: gamma_of(&stats.h1),
            h0: gamma_of(&stats.h0),
        }
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> ChannelGains {
        ChannelGains {
            h2sq: self.h2.sample(rng),
            h1sq: self.h1.sample(rng),
            h0sq: self.h0.sample(rng),
        }
    }
}

/// One draw of `(‖h₂‖², ‖h₁‖², ‖h₀‖²)`.
pub fn sample_gains<R: rand::Rng + ?Sized>(stats: &ChannelStats, rng: &mut R) -> ChannelGains {
    GainSampler::new(stats).sample(rng)
}

/// The generator for batch `b`.
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

fn run_batch(params: &SystemParams, cfg: &McConfig, sampler: &GainSampler, th: (f64, f64), b: u64) -> OutageCounts {
    let mut rng = batch_rng(cfg.seed, b);
    let mut c = OutageCounts::default();
    for _ in 0..cfg.batch_len(b) {
        let g = sampler.sample(&mut rng);
        let f = outage_flags(&sinr_all(params, &g), th.0, th.1);
        c.trials += 1;
        c.u2 += f.u2 as u64;
        c.u1_without_direct += f.u1_without_direct as u64;
        c.u1_with_direct += f.u1_with_direct as u64;
    }
    c
}

fn prepare(params: &SystemParams, cfg: &McConfig) -> Result<(GainSampler, (f64, f64)), McError> {
    params.validate()?;
    cfg.validate()?;
    Ok((GainSampler::new(&derive_stats(params)), rate_thresholds(params)))
}

/// Counts on a single thread.
pub fn estimate_counts_sequential(params: &SystemParams, cfg: &McConfig) -> Result<OutageCounts, McError> {
    let (sampler, th) = prepare(params, cfg)?;
    Ok((0..cfg.n_batches())
        .map(|b| run_batch(params, cfg, &sampler, th, b))
        .fold(OutageCounts::default(), |a, c| a + c))
}

/// Counts with batches spread over the rayon pool.
#[cfg(feature = "parallel")]
pub fn estimate_counts_parallel(params: &SystemParams, cfg: &McConfig) -> Result<OutageCounts, McError> {
    use rayon::prelude::*;
    let (sampler, th) = prepare(params, cfg)?;
    Ok((0..cfg.n_batches())
        .into_par_iter()
        .map(|b| run_batch(params, cfg, &sampler, th, b))
        .reduce(OutageCounts::default, |a, c| a + c))
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn estimate_counts(params: &SystemParams, cfg: &McConfig) -> Result<OutageCounts, McError> {
    #[cfg(feature = "parallel")]
    {
        estimate_counts_parallel(params, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        estimate_counts_sequential(params, cfg)
    }
}

pub fn estimate_op(params: &SystemParams, cfg: &McConfig) -> Result<OutageResult, McError> {
    Ok(estimate_counts(params, cfg)?.result(params.scenario))
}

/// Output of the Alamouti combiner for one block, as linear gains on `(s₁, s₂)`
/// for both symbol estimates, plus the combined noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlamoutiGains {
    /// `ŝ₁ = g[0][0] s₁ + g[0][1] s₂ + noise`, and likewise for `ŝ₂`.
    pub g: [[Complex64; 2]; 2],
    pub noise_var: f64,
}

/// Apply Alamouti decoding plus MRC to a noiseless block over `h` (rows are
/// transmit antennas, one column per receive antenna), with per-antenna
/// amplitude `amp`. Noise at each receive sample has unit variance.
pub fn alamouti_combine(h: &[[Complex64; 2]], amp: f64) -> AlamoutiGains {
    let received = |s1: Complex64, s2: Complex64| -> Vec<(Complex64, Complex64)> {
        // slot 1 sends (s₁, s₂), slot 2 sends (-s₂*, s₁*)
        h.iter()
            .map(|[h1, h2]| {
                let r1 = (h1 * s1 + h2 * s2) * amp;
                let r2 = (-h1 * s2.conj() + h2 * s1.conj()) * amp;
                (r1, r2)
            })
            .collect()
    };
    let decode = |r: &[(Complex64, Complex64)]| -> (Complex64, Complex64) {
        let mut e1 = Complex64::new(0.0, 0.0);
        let mut e2 = Complex64::new(0.0, 0.0);
        for ([h1, h2], (r1, r2)) in h.iter().zip(r) {
            e1 += h1.conj() * r1 + h2 * r2.conj();
            e2 += h2.conj() * r1 - h1 * r2.conj();
        }
        (e1, e2)
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (a11, a21) = decode(&received(one, zero));
    let (a12, a22) = decode(&received(zero, one));
    // Each estimate weights every receive sample by one channel coefficient.
    let noise_var = h.iter().map(|[h1, h2]| h1.norm_sqr() + h2.norm_sqr()).sum();
    AlamoutiGains {
        g: [[a11, a12], [a21, a22]],
        noise_var,
    }
}

/// Post-combining per-symbol SNR for a unit-energy block at total transmit
/// SNR `snr` (split evenly over the two antennas), and the SNR-level model
/// value `(snr/2)·‖h‖_F²`.
///
/// `h` holds one `[h_1n, h_2n]` pair per receive antenna.
pub fn alamouti_effective_snr_check(h: &[[Complex64; 2]], snr: f64) -> (f64, f64) {
    let g = alamouti_combine(h, (snr / 2.0).sqrt());
    let frob: f64 = h.iter().map(|[a, b]| a.norm_sqr() + b.norm_sqr()).sum();
    let effective = if g.noise_var > 0.0 {
        g.g[0][0].norm_sqr() / g.noise_var
    } else {
        0.0
    };
    (effective, snr / 2.0 * frob)
}
