//! Deterministic simulator and analyzer for a spatially distributed exchange
//! network, built around one physical fact: quote updates at different
//! exchanges are usually outside each other's light cones, so "which came
//! first" — and therefore any consolidated best price — depends on the
//! observer's frame.
//!
//! The crate provides:
//!
//! - [`spacetime`]: Minkowski intervals, causal classification, Lorentz
//!   boosts, and the constructive order-flipping boost for spacelike pairs.
//! - [`network`]: exchange geometry on a spherical Earth, link media, and
//!   seeded deterministic propagation delays with a hard light-speed floor.
//! - [`quotes`]: seeded synthetic quote streams and scripted fixtures,
//!   including the canonical two-quote flip fixture.
//! - [`sip`]: delivery to a consolidation point and best-bid/offer series
//!   under interchangeable simultaneity conventions, plus the
//!   interval-of-uncertainty consolidation that reports every answer
//!   consistent with clock error.
//! - [`causal`]: happened-before graphs, concurrency queries, logical clocks,
//!   and a brute-force check that no sub-luminal frame change reorders any
//!   causal edge.
//! - [`analysis`]: series divergence measurement, the frame-flip witness
//!   report, and latency-arbitrage race detection and accounting.
//! - [`config`] / [`run`]: TOML scenario configs and fully deterministic
//!   batch execution with checksum manifests.
//!
//! Everything is a pure function of the scenario config and its seed; running
//! a scenario twice produces byte-identical outputs.

pub mod analysis;
pub mod causal;
pub mod config;
pub mod error;
pub mod network;
pub mod quotes;
pub mod run;
pub mod sip;
pub mod spacetime;

pub use error::Error;
