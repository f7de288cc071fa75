//! Link parameters, per-scenario SNRs and instantaneous capacities/rates.
//!
//! The fading power `z = |h|^2` is exponentially distributed with mean
//! `fading_mean` (Rayleigh magnitude), constant within a frame and
//! independent across frames. Everything here is linear scale; dB conversion
//! belongs to the CLI boundary.

use crate::error::{Error, Result};

/// Physical and system constants of the secondary link.
#[derive(Debug, Clone, Copy)]
pub struct LinkParams {
    /// Channel bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Frame duration in seconds.
    pub frame_s: f64,
    /// Sensing duration in seconds, strictly inside the frame.
    pub sense_s: f64,
    /// Prior probability that a frame has active primary users.
    pub prior_busy: f64,
    /// Noise power at the secondary receiver.
    pub noise_power: f64,
    /// Aggregate received primary-user power.
    pub primary_power: f64,
    /// Mean of the fading power `z = |h|^2`.
    pub fading_mean: f64,
    /// Average power budget while the channel is detected busy.
    pub avg_power_busy: f64,
    /// Average power budget while the channel is detected idle.
    pub avg_power_idle: f64,
    /// QoS exponent `theta`: decay rate of the buffer tail distribution.
    pub qos_exponent: f64,
}

impl LinkParams {
    /// Seconds per frame left for data after sensing.
    pub fn data_time(&self) -> f64 {
        self.frame_s - self.sense_s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Param(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if !(self.sense_s > 0.0 && self.sense_s < self.frame_s) {
            return Err(Error::Param(format!(
                "sensing duration must satisfy 0 < N < T, got N = {}, T = {}",
                self.sense_s, self.frame_s
            )));
        }
        if !(0.0..=1.0).contains(&self.prior_busy) {
            return Err(Error::Param(format!(
                "prior busy probability must lie in [0, 1], got {}",
                self.prior_busy
            )));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::Param(format!(
                "noise power must be positive, got {}",
                self.noise_power
            )));
        }
        if self.primary_power < 0.0 {
            return Err(Error::Param(format!(
                "primary power must be nonnegative, got {}",
                self.primary_power
            )));
        }
        if !(self.fading_mean > 0.0) {
            return Err(Error::Param(format!(
                "fading mean must be positive, got {}",
                self.fading_mean
            )));
        }
        if self.avg_power_busy < 0.0 || !(self.avg_power_idle > 0.0) {
            return Err(Error::Param(format!(
                "power budgets must satisfy busy >= 0 and idle > 0, got {} and {}",
                self.avg_power_busy, self.avg_power_idle
            )));
        }
        if self.avg_power_busy > self.avg_power_idle {
            return Err(Error::Param(format!(
                "busy-state budget must not exceed the idle-state budget, got {} > {}",
                self.avg_power_busy, self.avg_power_idle
            )));
        }
        if self.qos_exponent < 0.0 {
            return Err(Error::Param(format!(
                "qos exponent must be nonnegative, got {}",
                self.qos_exponent
            )));
        }
        Ok(())
    }
}

/// Average SNRs of the four sensing-outcome scenarios.
///
/// Scenarios 1 and 2 see primary interference on top of noise (channel
/// actually busy); scenarios 3 and 4 see noise only. Odd scenarios use the
/// busy-state budget, even ones the idle-state budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSet {
    pub snr1: f64,
    pub snr2: f64,
    pub snr3: f64,
    pub snr4: f64,
}

/// The four average SNR ratios of a link.
pub fn snr_set(p: &LinkParams) -> Result<SnrSet> {
    if !(p.bandwidth_hz > 0.0) || !(p.noise_power > 0.0) {
        return Err(Error::Param(format!(
            "snr_set requires positive bandwidth and noise power, got B = {}, noise = {}",
            p.bandwidth_hz, p.noise_power
        )));
    }
    let with_primary = p.bandwidth_hz * (p.noise_power + p.primary_power);
    let noise_only = p.bandwidth_hz * p.noise_power;
    Ok(SnrSet {
        snr1: p.avg_power_busy / with_primary,
        snr2: p.avg_power_idle / with_primary,
        snr3: p.avg_power_busy / noise_only,
        snr4: p.avg_power_idle / noise_only,
    })
}

/// The four (channel state, sensing outcome) scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Busy channel, detected busy (reliable, reduced power).
    BusyDetectedBusy,
    /// Busy channel, detected idle (rate overshoots capacity; no goodput).
    BusyDetectedIdle,
    /// Idle channel, detected busy (reliable, conservative rate).
    IdleDetectedBusy,
    /// Idle channel, detected idle (reliable, full power).
    IdleDetectedIdle,
}

impl Scenario {
    /// 1-based index matching the state numbering of the transition model.
    pub fn index(self) -> usize {
        match self {
            Scenario::BusyDetectedBusy => 1,
            Scenario::BusyDetectedIdle => 2,
            Scenario::IdleDetectedBusy => 3,
            Scenario::IdleDetectedIdle => 4,
        }
    }

    pub fn snr(self, s: &SnrSet) -> f64 {
        match self {
            Scenario::BusyDetectedBusy => s.snr1,
            Scenario::BusyDetectedIdle => s.snr2,
            Scenario::IdleDetectedBusy => s.snr3,
            Scenario::IdleDetectedIdle => s.snr4,
        }
    }
}

/// Instantaneous channel capacity of a scenario in bits/second:
/// `B log2(1 + mu * z * SNR_k)`.
pub fn instantaneous_capacity(
    scenario: Scenario,
    z: f64,
    policy_value: f64,
    s: &SnrSet,
    bandwidth_hz: f64,
) -> f64 {
    bandwidth_hz * (policy_value * z * scenario.snr(s)).ln_1p() / std::f64::consts::LN_2
}

/// Rates actually chosen by the transmitter, in bits/second.
///
/// The transmitter trusts its detection outcome: the busy-branch rate is
/// pinned to scenario 1 (`SNR_1`) and the idle-branch rate to scenario 4
/// (`SNR_4`).
pub fn transmission_rates(
    z: f64,
    mu1_value: f64,
    mu2_value: f64,
    s: &SnrSet,
    bandwidth_hz: f64,
) -> (f64, f64) {
    let r1 = bandwidth_hz * (mu1_value * z * s.snr1).ln_1p() / std::f64::consts::LN_2;
    let r2 = bandwidth_hz * (mu2_value * z * s.snr4).ln_1p() / std::f64::consts::LN_2;
    (r1, r2)
}
