//! Energy-detection characterization of the primary users' channel activity.
//!
//! The secondary user listens for `N` seconds out of every frame and compares
//! the average received energy over the `N*B` complex samples against a
//! threshold. Under either hypothesis the test statistic is chi-square with
//! `2NB` degrees of freedom (scaled), which gives closed-form false-alarm and
//! detection probabilities. A central-limit approximation and a sample-level
//! Monte Carlo detector are provided alongside the exact formulas.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::LinkParams;
use crate::error::{Error, Result};
use crate::numerics::{gaussian_q, reg_gamma_pair};

/// Inputs of the energy detector.
#[derive(Debug, Clone, Copy)]
pub struct SensingParams {
    /// Sensing duration in seconds (the `N` first seconds of each frame).
    pub sense_duration_s: f64,
    /// Channel bandwidth in Hz; `N * B` is the number of complex samples.
    pub bandwidth_hz: f64,
    /// Noise power at the secondary receiver.
    pub noise_power: f64,
    /// Aggregate received power of the active primary users.
    pub primary_power: f64,
    /// Energy-detection threshold the average sample energy is compared to.
    pub threshold: f64,
}

impl SensingParams {
    pub fn from_link(p: &LinkParams, threshold: f64) -> Self {
        Self {
            sense_duration_s: p.sense_s,
            bandwidth_hz: p.bandwidth_hz,
            noise_power: p.noise_power,
            primary_power: p.primary_power,
            threshold,
        }
    }

    /// Number of complex samples collected while sensing (may be fractional
    /// in the analytic formulas).
    pub fn nb(&self) -> f64 {
        self.sense_duration_s * self.bandwidth_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nb() > 0.0) || !self.nb().is_finite() {
            return Err(Error::Param(format!(
                "sensing requires N*B > 0, got N = {}, B = {}",
                self.sense_duration_s, self.bandwidth_hz
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
        if !(self.threshold >= 0.0) {
            return Err(Error::Param(format!(
                "detection threshold must be nonnegative, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// A detector operating point: false-alarm and detection probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingChar {
    /// Probability of declaring the channel busy while it is idle.
    pub p_false_alarm: f64,
    /// Probability of declaring the channel busy while it is busy.
    pub p_detect: f64,
}

impl SensingChar {
    pub fn new(p_false_alarm: f64, p_detect: f64) -> Result<Self> {
        for (name, v) in [("p_false_alarm", p_false_alarm), ("p_detect", p_detect)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Param(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(Self {
            p_false_alarm,
            p_detect,
        })
    }
}

/// Exact false-alarm probability `P(Y > threshold | idle)`.
///
/// The average energy of `NB` noise-only samples follows a scaled chi-square
/// law, so the tail is `1 - P(NB*threshold/noise_power, NB)` in terms of the
/// regularized lower gamma function. Nonincreasing in the threshold.
pub fn false_alarm_prob(p: &SensingParams) -> Result<f64> {
    p.validate()?;
    let nb = p.nb();
    let (_, q) = reg_gamma_pair(nb * p.threshold / p.noise_power, nb)?;
    Ok(q)
}

/// Exact detection probability `P(Y > threshold | busy)`.
///
/// Same tail with the sample power raised to `noise_power + primary_power`;
/// collapses to [`false_alarm_prob`] when the primary power is zero.
pub fn detection_prob(p: &SensingParams) -> Result<f64> {
    p.validate()?;
    let nb = p.nb();
    let (_, q) = reg_gamma_pair(nb * p.threshold / (p.noise_power + p.primary_power), nb)?;
    Ok(q)
}

/// Both exact probabilities as a [`SensingChar`].
pub fn characterize(p: &SensingParams) -> Result<SensingChar> {
    Ok(SensingChar {
        p_false_alarm: false_alarm_prob(p)?,
        p_detect: detection_prob(p)?,
    })
}

/// Central-limit approximation of the detector, accurate for large `N*B`.
///
/// Each squared sample is exponential, so under either hypothesis the
/// statistic has mean equal to the per-sample power `s` and standard
/// deviation `s / sqrt(NB)`; the tails reduce to Gaussian Q-functions:
/// `P_f ≈ Q((threshold - s) sqrt(NB) / s)`.
pub fn gaussian_approx_char(p: &SensingParams) -> SensingChar {
    let nb = p.nb();
    let tail =
        |sample_power: f64| gaussian_q((p.threshold - sample_power) * nb.sqrt() / sample_power);
    SensingChar {
        p_false_alarm: tail(p.noise_power),
        p_detect: tail(p.noise_power + p.primary_power),
    }
}

/// Sample-level Monte Carlo detector.
///
/// Draws `round(N*B)` circularly symmetric complex Gaussian noise samples per
/// trial (plus an independent complex Gaussian primary signal under the busy
/// hypothesis), applies the average-energy test and returns the empirical
/// exceedance frequencies. Deterministic for a fixed seed.
pub fn simulate_detector(p: &SensingParams, trials: u64, seed: u64) -> Result<SensingChar> {
    p.validate()?;
    if trials == 0 {
        return Err(Error::Param(
            "simulate_detector requires trials >= 1".into(),
        ));
    }
    let nb = p.nb().round();
    if nb < 1.0 {
        return Err(Error::Param(format!(
            "sample count N*B rounds to zero (N*B = {})",
            p.nb()
        )));
    }
    let nb = nb as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // per-component standard deviations of the complex samples
    let sd_idle = (p.noise_power / 2.0).sqrt();
    let sd_busy = ((p.noise_power + p.primary_power) / 2.0).sqrt();

    let energy = |sd: f64, rng: &mut ChaCha8Rng| -> f64 {
        let mut sum = 0.0;
        for _ in 0..nb {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            sum += sd * sd * (re * re + im * im);
        }
        sum / nb as f64
    };

    let mut false_alarms = 0u64;
    let mut detections = 0u64;
    for _ in 0..trials {
        if energy(sd_idle, &mut rng) > p.threshold {
            false_alarms += 1;
        }
        if energy(sd_busy, &mut rng) > p.threshold {
            detections += 1;
        }
    }
    Ok(SensingChar {
        p_false_alarm: false_alarms as f64 / trials as f64,
        p_detect: detections as f64 / trials as f64,
    })
}
