//! Outage probability of a two-user downlink NOMA network in which the near
//! user relays to the far user with harvested energy, over Nakagami-m fading.
//!
//! [`analytic`] holds the closed forms and quadrature oracles, [`asymptotic`]
//! the high-SNR expansions, and [`montecarlo`] the simulator. With the
//! `parallel` feature (on by default) the simulator spreads batches over a
//! rayon pool; results do not depend on the schedule.

pub mod analytic;
pub mod asymptotic;
pub mod hp;
pub mod model;
pub mod montecarlo;
pub mod quad;
pub mod specfun;
