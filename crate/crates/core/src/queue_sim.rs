//! Frame-level buffer simulation validating the QoS-exponent semantics.
//!
//! A constant number of bits arrives every frame; the service offered by the
//! link is drawn from the four-state sensing model with the power policy
//! under test. The buffer follows the Lindley recursion
//! `Q_{k+1} = max(Q_k + arrival - service_k, 0)` and the tail of its
//! stationary distribution is fitted on a log scale: at the effective
//! capacity the fitted decay rate should match the QoS exponent `theta`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::channel::{snr_set, transmission_rates, LinkParams, Scenario};
use crate::effective_capacity::effective_capacity;
use crate::error::{Error, Result};
use crate::power_policy::{Mode, PowerPolicy};
use crate::sensing::SensingChar;

/// Tail thresholds with fewer exceedances than this are dropped from the
/// decay fit; the tail law is asymptotic and sparse counts bias the slope.
pub const MIN_EXCEEDANCES: u64 = 30;

/// Configuration of one queue experiment.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Total simulated frames.
    pub frames: u64,
    /// Frames discarded before tail statistics are collected.
    pub warmup: u64,
    /// Constant arrival in bits per frame.
    pub arrival_bits_per_frame: f64,
    /// Queue thresholds (bits) used for the tail fit, strictly increasing.
    /// Leave empty to have validation pick thresholds from the empirical
    /// queue quantiles.
    pub q_grid: Vec<f64>,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames <= self.warmup {
            return Err(Error::Param(format!(
                "frames ({}) must exceed warmup ({})",
                self.frames, self.warmup
            )));
        }
        if self.arrival_bits_per_frame < 0.0 {
            return Err(Error::Param(format!(
                "arrival must be nonnegative, got {}",
                self.arrival_bits_per_frame
            )));
        }
        if !self.q_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Param("q_grid must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// One simulated frame: the sensing scenario, the fading draw and the bits
/// delivered.
#[derive(Debug, Clone, Copy)]
pub struct FrameSample {
    pub scenario: Scenario,
    pub z: f64,
    pub service_bits: f64,
}

/// Simulate the per-frame state/fading/service sequence.
///
/// Each frame draws the primary activity with the busy prior, the sensing
/// outcome with `Pd` (busy) or `Pf` (idle), and an exponential fading power.
/// States 1 and 3 deliver `r1 (T - N)` bits, state 4 delivers `r2 (T - N)`,
/// and the OFF state 2 delivers nothing. Deterministic for a fixed seed.
pub fn simulate_frames(
    p: &LinkParams,
    pp: &PowerPolicy,
    sc: &SensingChar,
    frames: u64,
    seed: u64,
) -> Vec<FrameSample> {
    p.validate().expect("valid link parameters");
    let s = snr_set(p).expect("validated link parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fading = Exp::new(1.0 / p.fading_mean).expect("positive fading mean");
    let data_time = p.data_time();

    let mut out = Vec::with_capacity(frames as usize);
    for _ in 0..frames {
        let busy = rng.random_bool(p.prior_busy);
        let detected = rng.random_bool(if busy { sc.p_detect } else { sc.p_false_alarm });
        let z = fading.sample(&mut rng);
        let scenario = match (busy, detected) {
            (true, true) => Scenario::BusyDetectedBusy,
            (true, false) => Scenario::BusyDetectedIdle,
            (false, true) => Scenario::IdleDetectedBusy,
            (false, false) => Scenario::IdleDetectedIdle,
        };
        let (r1, r2) = transmission_rates(z, pp.mu1(z), pp.mu2(z), &s, p.bandwidth_hz);
        let service_bits = match scenario {
            Scenario::BusyDetectedBusy | Scenario::IdleDetectedBusy => r1 * data_time,
            Scenario::IdleDetectedIdle => r2 * data_time,
            Scenario::BusyDetectedIdle => 0.0,
        };
        out.push(FrameSample {
            scenario,
            z,
            service_bits,
        });
    }
    out
}

/// Per-frame service amounts in bits; see [`simulate_frames`].
pub fn simulate_service_process(
    p: &LinkParams,
    pp: &PowerPolicy,
    sc: &SensingChar,
    frames: u64,
    seed: u64,
) -> Vec<f64> {
    simulate_frames(p, pp, sc, frames, seed)
        .into_iter()
        .map(|f| f.service_bits)
        .collect()
}

/// Buffer state with Neumaier-compensated accumulation, so the Lindley
/// recursion does not drift over tens of millions of frames.
#[derive(Debug, Clone, Copy, Default)]
struct Buffer {
    level: f64,
    compensation: f64,
}

impl Buffer {
    #[inline]
    fn step(&mut self, increment: f64) -> f64 {
        let t = self.level + increment;
        self.compensation += if self.level.abs() >= increment.abs() {
            (self.level - t) + increment
        } else {
            (increment - t) + self.level
        };
        self.level = t + self.compensation;
        self.compensation = if self.level > 0.0 {
            (t - self.level) + self.compensation
        } else {
            0.0
        };
        if self.level < 0.0 {
            self.level = 0.0;
        }
        self.level
    }
}

/// Result of a tail-decay estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum DecayEstimate {
    /// The queue never reached the smallest threshold; the tail decays
    /// faster than anything resolvable (reported instead of a number).
    NoTail,
    /// Fitted decay rate of `ln P(Q >= q)` per bit.
    Finite(f64),
}

/// One threshold of the tail fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub q: f64,
    pub exceedances: u64,
    /// `ln` of the empirical exceedance probability.
    pub log_prob: f64,
}

/// Tail fit summary.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub estimate: DecayEstimate,
    /// All thresholds with their counts, including those below the
    /// exceedance floor.
    pub points: Vec<TailPoint>,
    /// Number of thresholds that entered the regression.
    pub used_points: usize,
    pub mean_service: f64,
    pub frames_counted: u64,
}

/// Fit the decay rate of `ln P(Q >= q)` over the configured thresholds.
///
/// Runs the Lindley recursion over the service sequence, counts threshold
/// exceedances after warmup, and regresses `ln P` on `q` over the thresholds
/// with at least [`MIN_EXCEEDANCES`] hits. Errors if the queue is unstable
/// (arrival at or above the mean service) or if fewer than two thresholds
/// survive the floor.
pub fn estimate_decay_rate(service: &[f64], cfg: &SimConfig) -> Result<DecayReport> {
    cfg.validate()?;
    if service.len() < cfg.frames as usize {
        return Err(Error::Param(format!(
            "service sequence has {} frames, config wants {}",
            service.len(),
            cfg.frames
        )));
    }
    if cfg.q_grid.is_empty() {
        return Err(Error::Param("q_grid must not be empty".into()));
    }
    let service = &service[..cfg.frames as usize];
    let mean_service = compensated_mean(service);
    let arrival = cfg.arrival_bits_per_frame;
    if arrival >= mean_service {
        return Err(Error::Unstable {
            arrival,
            mean_service,
        });
    }

    let mut counts = vec![0u64; cfg.q_grid.len()];
    let mut buffer = Buffer::default();
    let mut counted = 0u64;
    for (k, s) in service.iter().enumerate() {
        let q = buffer.step(arrival - s);
        if (k as u64) < cfg.warmup {
            continue;
        }
        counted += 1;
        // thresholds are sorted: everything below the partition point is hit
        let hit = cfg.q_grid.partition_point(|&t| t <= q);
        for c in counts.iter_mut().take(hit) {
            *c += 1;
        }
    }

    let n = counted as f64;
    let points: Vec<TailPoint> = cfg
        .q_grid
        .iter()
        .zip(counts.iter())
        .map(|(&q, &c)| TailPoint {
            q,
            exceedances: c,
            log_prob: if c > 0 {
                (c as f64 / n).ln()
            } else {
                f64::NEG_INFINITY
            },
        })
        .collect();

    if counts[0] == 0 {
        return Ok(DecayReport {
            estimate: DecayEstimate::NoTail,
            points,
            used_points: 0,
            mean_service,
            frames_counted: counted,
        });
    }

    let usable: Vec<TailPoint> = points
        .iter()
        .filter(|pt| pt.exceedances >= MIN_EXCEEDANCES)
        .copied()
        .collect();
    if usable.len() < 2 {
        return Err(Error::InsufficientTail(format!(
            "only {} of {} thresholds have >= {MIN_EXCEEDANCES} exceedances over {counted} frames",
            usable.len(),
            points.len()
        )));
    }

    // least squares of ln P against q
    let k = usable.len() as f64;
    let mean_q: f64 = usable.iter().map(|pt| pt.q).sum::<f64>() / k;
    let mean_lp: f64 = usable.iter().map(|pt| pt.log_prob).sum::<f64>() / k;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for pt in &usable {
        sxx += (pt.q - mean_q) * (pt.q - mean_q);
        sxy += (pt.q - mean_q) * (pt.log_prob - mean_lp);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientTail(
            "degenerate threshold grid for regression".into(),
        ));
    }
    Ok(DecayReport {
        estimate: DecayEstimate::Finite(-sxy / sxx),
        points,
        used_points: usable.len(),
        mean_service,
        frames_counted: counted,
    })
}

fn compensated_mean(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    (sum + comp) / values.len() as f64
}

/// Pick tail thresholds from the empirical queue quantiles.
///
/// Thresholds are placed where the exceedance probability spans roughly
/// `1e-3` down to `max(1e-5, 100 / frames)`: the near-head of the
/// distribution is excluded because its curvature biases the fitted slope
/// upward, and every point stays clear of the exceedance floor.
pub fn auto_q_grid(service: &[f64], arrival: f64, warmup: u64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Param("auto grid needs at least 2 points".into()));
    }
    let mut buffer = Buffer::default();
    let mut samples = Vec::with_capacity(service.len() / 8 + 1);
    for (k, s) in service.iter().enumerate() {
        let q = buffer.step(arrival - s);
        if (k as u64) >= warmup && k % 8 == 0 {
            samples.push(q);
        }
    }
    if samples.is_empty() {
        return Err(Error::Param("no samples after warmup".into()));
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let p_hi = 1e-3;
    let p_lo = (100.0 / service.len() as f64).max(1e-5);
    if p_lo >= p_hi {
        return Err(Error::InsufficientTail(
            "run too short for automatic threshold placement".into(),
        ));
    }
    let mut grid = Vec::with_capacity(points);
    for i in 0..points {
        let f = i as f64 / (points - 1) as f64;
        let p = p_hi * (p_lo / p_hi).powf(f);
        let rank = ((1.0 - p) * n) as usize;
        let q = samples[rank.min(samples.len() - 1)];
        if q > *grid.last().unwrap_or(&0.0) {
            grid.push(q);
        }
    }
    if grid.len() < 2 {
        return Err(Error::InsufficientTail(
            "queue too short-tailed for a threshold grid".into(),
        ));
    }
    Ok(grid)
}

/// Outcome of one arrival-rate probe.
#[derive(Debug, Clone)]
pub enum RunOutcome {
    Decay(DecayReport),
    Unstable { arrival: f64, mean_service: f64 },
    Failed(String),
}

/// One probe of the queue at a fraction of the analytic capacity.
#[derive(Debug, Clone)]
pub struct ValidationRun {
    /// Arrival rate as a fraction of `T B r_e`.
    pub factor: f64,
    pub arrival_bits_per_frame: f64,
    pub outcome: RunOutcome,
}

/// End-to-end check of the effective-capacity semantics.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub theta: f64,
    pub r_e: f64,
    /// `T B r_e`: the analytic capacity in bits per frame.
    pub capacity_bits_per_frame: f64,
    pub mean_service_bits_per_frame: f64,
    pub runs: Vec<ValidationRun>,
}

/// Probe the queue at `{0.9, 0.99, 1.01} * T B r_e` and report the fitted
/// decay rates.
///
/// Below capacity the fitted decay should sit at or above `theta`; just above
/// capacity it should fall below `theta` (or the queue may lose stability
/// outright). One service sequence of `cfg.frames` frames is shared by the
/// three probes; `cfg.q_grid` is used when nonempty, otherwise thresholds
/// come from [`auto_q_grid`] per probe.
pub fn validate_effective_capacity(
    p: &LinkParams,
    sc: &SensingChar,
    mode: Mode,
    cfg: &SimConfig,
) -> Result<ValidationReport> {
    p.validate()?;
    let theta = p.qos_exponent;
    let cap = effective_capacity(p, sc, mode)?;
    let capacity = cap.r_e * p.frame_s * p.bandwidth_hz;
    let service = simulate_service_process(p, &cap.policy, sc, cfg.frames, cfg.seed);
    let mean_service = compensated_mean(&service);

    let mut runs = Vec::new();
    for factor in [0.9, 0.99, 1.01] {
        let arrival = factor * capacity;
        if arrival >= mean_service {
            runs.push(ValidationRun {
                factor,
                arrival_bits_per_frame: arrival,
                outcome: RunOutcome::Unstable {
                    arrival,
                    mean_service,
                },
            });
            continue;
        }
        let grid = if cfg.q_grid.is_empty() {
            match auto_q_grid(&service, arrival, cfg.warmup, 10) {
                Ok(g) => g,
                Err(e) => {
                    runs.push(ValidationRun {
                        factor,
                        arrival_bits_per_frame: arrival,
                        outcome: RunOutcome::Failed(e.to_string()),
                    });
                    continue;
                }
            }
        } else {
            cfg.q_grid.clone()
        };
        let run_cfg = SimConfig {
            arrival_bits_per_frame: arrival,
            q_grid: grid,
            ..cfg.clone()
        };
        let outcome = match estimate_decay_rate(&service, &run_cfg) {
            Ok(report) => RunOutcome::Decay(report),
            Err(Error::Unstable {
                arrival,
                mean_service,
            }) => RunOutcome::Unstable {
                arrival,
                mean_service,
            },
            Err(e) => RunOutcome::Failed(e.to_string()),
        };
        runs.push(ValidationRun {
            factor,
            arrival_bits_per_frame: arrival,
            outcome,
        });
    }

    Ok(ValidationReport {
        theta,
        r_e: cap.r_e,
        capacity_bits_per_frame: capacity,
        mean_service_bits_per_frame: mean_service,
        runs,
    })
}
