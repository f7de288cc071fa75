//! Effective capacity of the cognitive link under a QoS exponent `theta`.
//!
//! The per-frame service process is Markov-modulated by the four sensing
//! states, and its log-moment generating function reduces to the rank-1
//! spectral radius of the state model weighted by two fading moments. The
//! normalized effective capacity in bits/s/Hz is
//!
//! ```text
//! r_e = -ln( w_busy E{(1 + mu1 z SNR1)^-a}
//!          + w_idle E{(1 + mu2 z SNR4)^-a}
//!          + w_outage ) / (theta T B)
//! ```
//!
//! with `a = (T - N) B theta / ln 2`, `w_busy = rho Pd + (1 - rho) Pf`,
//! `w_idle = (1 - rho)(1 - Pf)` and `w_outage = rho (1 - Pd)`. The OFF state
//! carries no service, so its moment is exactly one and enters the sum as the
//! bare outage weight.

use crate::channel::{snr_set, LinkParams};
use crate::error::{Error, Result};
use crate::markov::build_state_model;
use crate::numerics::{integrate_expectation, Tolerance};
use crate::power_policy::{qos_exponent_scale, solve_thresholds, Branch, Mode, PowerPolicy};
use crate::sensing::SensingChar;

/// The three weighted terms inside the logarithm, in `(0, 1]` total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqTerms {
    /// Busy-rate term: `(rho Pd + (1 - rho) Pf) * E{e^(-theta (T-N) r1)}`.
    pub busy: f64,
    /// Idle-rate term: `(1 - rho)(1 - Pf) * E{e^(-theta (T-N) r2)}`.
    pub idle: f64,
    /// Outage term `rho (1 - Pd)` from the zero-service OFF state.
    pub outage: f64,
}

impl EqTerms {
    /// Argument of the logarithm.
    pub fn log_argument(&self) -> f64 {
        self.busy + self.idle + self.outage
    }
}

/// An effective-capacity evaluation together with everything that produced it.
#[derive(Debug, Clone)]
pub struct EffCapResult {
    /// Normalized effective capacity in bits/s/Hz.
    pub r_e: f64,
    pub policy: PowerPolicy,
    pub sensing: SensingChar,
    pub terms: EqTerms,
}

fn moment_integrand(pp: &PowerPolicy, branch: Branch, z: f64) -> f64 {
    let (snr, _) = pp.branch(branch);
    let x = pp.mu(branch, z) * z * snr;
    (-pp.a * x.ln_1p()).exp()
}

/// Service-rate moment `E_z{e^(-(T-N) theta r)} = E_z{(1 + mu z snr)^-a}`
/// of one branch.
///
/// For an adaptive policy the integrand collapses to `1` below the cutoff and
/// `(gamma/z)^(a/(a+1))` above it; both the raw and the simplified form are
/// integrated and cross-checked before the value is returned.
pub fn rate_moment(pp: &PowerPolicy, branch: Branch, fading_mean: f64) -> Result<f64> {
    if pp.a == 0.0 {
        return Ok(1.0);
    }
    let (snr, gamma) = pp.branch(branch);
    let quad = Tolerance::quadrature();
    match gamma {
        None => {
            // fixed power; the integrand varies on the scale 1/(a snr)
            if snr == 0.0 {
                return Ok(1.0);
            }
            let hint = 1.0 / (pp.a.max(1.0) * snr);
            integrate_expectation(
                |z| moment_integrand(pp, branch, z),
                fading_mean,
                &[hint],
                &quad,
            )
        }
        Some(g) if g.is_infinite() => Ok(1.0),
        Some(g) => {
            let raw = integrate_expectation(
                |z| moment_integrand(pp, branch, z),
                fading_mean,
                &[g],
                &quad,
            )?;
            let exponent = pp.a / (pp.a + 1.0);
            let simplified = integrate_expectation(
                |z| {
                    if z <= g {
                        1.0
                    } else {
                        (-exponent * (z.ln() - g.ln())).exp()
                    }
                },
                fading_mean,
                &[g],
                &quad,
            )?;
            if (raw - simplified).abs() > 1e-8 {
                return Err(Error::Convergence(format!(
                    "rate moment forms disagree: raw {raw} vs simplified {simplified}"
                )));
            }
            Ok(simplified)
        }
    }
}

/// Mean transmission rate `E_z{B log2(1 + mu z snr)}` of one branch in
/// bits/second.
pub fn mean_rate(
    pp: &PowerPolicy,
    branch: Branch,
    fading_mean: f64,
    bandwidth_hz: f64,
) -> Result<f64> {
    let (snr, gamma) = pp.branch(branch);
    if snr == 0.0 {
        return Ok(0.0);
    }
    let breakpoints: &[f64] = match gamma {
        Some(g) if g.is_infinite() => return Ok(0.0),
        Some(ref g) => std::slice::from_ref(g),
        None => &[],
    };
    let quad = Tolerance::quadrature();
    integrate_expectation(
        |z| bandwidth_hz * (pp.mu(branch, z) * z * snr).ln_1p() / std::f64::consts::LN_2,
        fading_mean,
        breakpoints,
        &quad,
    )
}

/// Normalized effective capacity of the link at `p.qos_exponent`.
///
/// In [`Mode::Optimal`] the power policy is solved from the average-power
/// constraints; in [`Mode::Fixed`] the transmitter spends its budget flat
/// (`mu = 1`). Requires `theta > 0`; the `theta -> 0` limit has its own
/// entry point, [`effective_capacity_limit_theta0`].
pub fn effective_capacity(p: &LinkParams, sc: &SensingChar, mode: Mode) -> Result<EffCapResult> {
    p.validate()?;
    let theta = p.qos_exponent;
    if !(theta > 0.0) {
        return Err(Error::Param(format!(
            "effective_capacity requires theta > 0 (got {theta}); \
             use effective_capacity_limit_theta0 for the limit"
        )));
    }
    let s = snr_set(p)?;
    let policy = match mode {
        Mode::Optimal => solve_thresholds(p, &s, theta)?,
        Mode::Fixed => PowerPolicy::fixed(qos_exponent_scale(p, theta), &s),
    };
    let m_busy = rate_moment(&policy, Branch::Busy, p.fading_mean)?;
    let m_idle = rate_moment(&policy, Branch::Idle, p.fading_mean)?;
    let model = build_state_model(p.prior_busy, sc);
    let terms = EqTerms {
        busy: model.busy_rate_weight() * m_busy,
        idle: model.idle_rate_weight() * m_idle,
        outage: model.outage_weight(),
    };
    let arg = terms.log_argument();
    if !(arg > 0.0) || !arg.is_finite() {
        return Err(Error::Convergence(format!(
            "log argument fell outside (0, 1]: {arg}"
        )));
    }
    let r_e = (-arg.min(1.0).ln() / (theta * p.frame_s * p.bandwidth_hz)).max(0.0);
    Ok(EffCapResult {
        r_e,
        policy,
        sensing: *sc,
        terms,
    })
}

/// Mean-service-rate limit of the effective capacity as `theta -> 0`, in
/// bits/s/Hz:
/// `(T - N)/(T B) * (w_busy E{r1} + w_idle E{r2})`.
///
/// The adaptive policy converges to classical water-filling in this limit, so
/// the optimal-mode rates are evaluated under the `a = 0` cutoffs.
pub fn effective_capacity_limit_theta0(
    p: &LinkParams,
    sc: &SensingChar,
    mode: Mode,
) -> Result<f64> {
    p.validate()?;
    let s = snr_set(p)?;
    let policy = match mode {
        Mode::Optimal => solve_thresholds(p, &s, 0.0)?,
        Mode::Fixed => PowerPolicy::fixed(0.0, &s),
    };
    let e_r1 = mean_rate(&policy, Branch::Busy, p.fading_mean, p.bandwidth_hz)?;
    let e_r2 = mean_rate(&policy, Branch::Idle, p.fading_mean, p.bandwidth_hz)?;
    let model = build_state_model(p.prior_busy, sc);
    Ok(p.data_time() / (p.frame_s * p.bandwidth_hz)
        * (model.busy_rate_weight() * e_r1 + model.idle_rate_weight() * e_r2))
}
