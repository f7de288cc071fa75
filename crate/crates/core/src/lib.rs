//! Analytic and Monte Carlo tools for the throughput of a cognitive-radio
//! link that senses the channel before transmitting.
//!
//! The secondary link senses the licensed channel with an energy detector,
//! picks a power/rate pair according to the sensing outcome, and is subject
//! to a statistical queueing constraint: the tail of the transmit buffer must
//! decay at rate `theta`. The largest constant arrival rate compatible with
//! that constraint is the effective capacity of the link.
//!
//! The crate is organised around that pipeline:
//!
//! * [`numerics`] — incomplete gamma, Gaussian tail, adaptive quadrature over
//!   the fading distribution, bracketed root finding.
//! * [`sensing`] — energy-detection false-alarm/detection probabilities, a
//!   central-limit approximation, and a sample-level simulated detector.
//! * [`channel`] — link parameters, per-scenario SNRs, capacities and rates.
//! * [`markov`] — the four-state transition model and its rank-1 spectral
//!   radius.
//! * [`power_policy`] — QoS-aware water-filling power adaptation and the
//!   numerical solution of its cutoff thresholds.
//! * [`effective_capacity`] — the effective-capacity formula for optimal and
//!   fixed power transmission.
//! * [`queue_sim`] — a frame-level buffer simulator that checks the tail
//!   decay rate empirically.
//!
//! All analytic routines are pure functions of their inputs and safe to call
//! concurrently; the simulators are deterministic for a fixed seed.

// validation guards are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod effective_capacity;
pub mod error;
pub mod markov;
pub mod numerics;
pub mod power_policy;
pub mod queue_sim;
pub mod sensing;

pub use channel::{LinkParams, Scenario, SnrSet};
pub use effective_capacity::{EffCapResult, EqTerms};
pub use error::{Error, Result};
pub use markov::StateModel;
pub use power_policy::{Branch, Mode, PolicyKind, PowerPolicy};
pub use queue_sim::SimConfig;
pub use sensing::{SensingChar, SensingParams};
