//! Four-state transition model of the sensing-based link.
//!
//! States: 1 busy/detected-busy (ON), 2 busy/detected-idle (OFF),
//! 3 idle/detected-busy (ON), 4 idle/detected-idle (ON). Because fading and
//! primary activity are independent across frames, the probability of landing
//! in a state does not depend on the current state: the transition matrix has
//! identical rows and rank one, and its spectral radius under a diagonal
//! moment scaling reduces to a weighted sum.

use crate::error::{Error, Result};
use crate::sensing::SensingChar;

/// Landing probabilities of the four states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateModel {
    /// `p[k]` is the probability of entering state `k + 1` on the next frame.
    pub probs: [f64; 4],
}

impl StateModel {
    /// Probability of transmitting on the busy-branch rate (states 1 and 3).
    pub fn busy_rate_weight(&self) -> f64 {
        self.probs[0] + self.probs[2]
    }

    /// Probability of the idle/detected-idle state 4.
    pub fn idle_rate_weight(&self) -> f64 {
        self.probs[3]
    }

    /// Probability of the OFF state 2 (missed detection, zero goodput).
    pub fn outage_weight(&self) -> f64 {
        self.probs[1]
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.probs.iter().sum();
        if self.probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Param(format!(
                "state probabilities out of range: {:?}",
                self.probs
            )));
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Param(format!(
                "state probabilities must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Landing probabilities from the busy prior and the detector operating
/// point: `(rho Pd, rho (1 - Pd), (1 - rho) Pf, (1 - rho)(1 - Pf))`.
pub fn build_state_model(prior_busy: f64, sc: &SensingChar) -> StateModel {
    let rho = prior_busy;
    StateModel {
        probs: [
            rho * sc.p_detect,
            rho * (1.0 - sc.p_detect),
            (1.0 - rho) * sc.p_false_alarm,
            (1.0 - rho) * (1.0 - sc.p_false_alarm),
        ],
    }
}

/// Spectral radius of `diag(moments) * R` for the rank-1 transition matrix
/// `R`: the moment-weighted sum of the landing probabilities.
pub fn spectral_radius_rank1(moments: [f64; 4], m: &StateModel) -> f64 {
    moments
        .iter()
        .zip(m.probs.iter())
        .map(|(phi, p)| phi * p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Power iteration on the dense 4x4 matrix `diag(phi) R`; test oracle for
    /// the rank-1 shortcut.
    fn dominant_eigenvalue(phi: [f64; 4], m: &StateModel) -> f64 {
        let a: Vec<[f64; 4]> = (0..4)
            .map(|i| {
                let mut row = [0.0; 4];
                for (j, r) in row.iter_mut().enumerate() {
                    *r = phi[i] * m.probs[j];
                }
                row
            })
            .collect();
        let mut v = [0.5; 4];
        let mut lambda = 0.0;
        for _ in 0..500 {
            let mut w = [0.0; 4];
            for i in 0..4 {
                for j in 0..4 {
                    w[i] += a[i][j] * v[j];
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            for x in w.iter_mut() {
                *x /= norm;
            }
            // Rayleigh quotient
            let mut av = [0.0; 4];
            for i in 0..4 {
                for j in 0..4 {
                    av[i] += a[i][j] * w[j];
                }
            }
            let new_lambda: f64 = w.iter().zip(av.iter()).map(|(x, y)| x * y).sum();
            if (new_lambda - lambda).abs() <= 1e-15 * new_lambda.abs().max(1.0) {
                return new_lambda;
            }
            lambda = new_lambda;
            v = w;
        }
        lambda
    }

    #[test]
    fn degenerate_priors() {
        let all_busy = build_state_model(
            1.0,
            &SensingChar {
                p_false_alarm: 0.3,
                p_detect: 1.0,
            },
        );
        assert_eq!(all_busy.probs, [1.0, 0.0, 0.0, 0.0]);

        let all_idle = build_state_model(
            0.0,
            &SensingChar {
                p_false_alarm: 0.0,
                p_detect: 0.9,
            },
        );
        assert_eq!(all_idle.probs, [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn reference_probabilities() {
        let m = build_state_model(
            0.1,
            &SensingChar {
                p_false_alarm: 0.2,
                p_detect: 0.9,
            },
        );
        let expected = [0.09, 0.01, 0.18, 0.72];
        for (got, want) in m.probs.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-15);
        }
        m.validate().unwrap();
    }

    #[test]
    fn spectral_radius_arithmetic() {
        let m = build_state_model(
            0.1,
            &SensingChar {
                p_false_alarm: 0.2,
                p_detect: 0.9,
            },
        );
        let sp = spectral_radius_rank1([0.5, 1.0, 0.5, 0.3], &m);
        assert!((sp - 0.361).abs() < 1e-15);

        let stochastic = spectral_radius_rank1([1.0; 4], &m);
        assert!((stochastic - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectral_radius_matches_power_iteration() {
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let phi = [0.05 + next(), 0.05 + next(), 0.05 + next(), 0.05 + next()];
            let m = build_state_model(
                next(),
                &SensingChar {
                    p_false_alarm: next(),
                    p_detect: next(),
                },
            );
            let shortcut = spectral_radius_rank1(phi, &m);
            let oracle = dominant_eigenvalue(phi, &m);
            assert!(
                (shortcut - oracle).abs() < 1e-12,
                "shortcut {shortcut} vs oracle {oracle}"
            );
            let max_phi = phi.iter().cloned().fold(0.0f64, f64::max);
            assert!(shortcut > 0.0 && shortcut <= max_phi + 1e-15);
        }
    }

    proptest! {
        #[test]
        fn probabilities_always_form_a_distribution(
            rho in 0.0f64..=1.0,
            pd in 0.0f64..=1.0,
            pf in 0.0f64..=1.0,
        ) {
            let m = build_state_model(rho, &SensingChar { p_false_alarm: pf, p_detect: pd });
            prop_assert!(m.validate().is_ok());
        }
    }
}
