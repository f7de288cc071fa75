//! First-order optimality of the solved power policy: no feasible,
//! budget-neutral perturbation of the adaptive policy may improve the
//! service-moment objective beyond second order.

use cogcap::channel::{snr_set, LinkParams};
use cogcap::numerics::{integrate_expectation, Tolerance};
use cogcap::power_policy::solve_thresholds;

fn base_link() -> LinkParams {
    LinkParams {
        bandwidth_hz: 1e4,
        frame_s: 0.1,
        sense_s: 0.01,
        prior_busy: 0.1,
        noise_power: 1.0,
        primary_power: 1.0,
        fading_mean: 1.0,
        avg_power_busy: 2e4,
        avg_power_idle: 1e5,
        qos_exponent: 0.01,
    }
}

/// Exponential interval weight `P(a < z <= b)` for unit fading mean.
fn interval_mass(a: f64, b: f64) -> f64 {
    (-a).exp() - (-b).exp()
}

#[test]
fn no_first_order_improvement_under_feasible_perturbations() {
    let p = base_link();
    let s = snr_set(&p).unwrap();
    let theta = 0.01;
    let pp = solve_thresholds(&p, &s, theta).unwrap();
    let a = pp.a;
    let snr = s.snr1;
    let gamma = pp.gamma1().unwrap();
    let quad = Tolerance::quadrature();

    let objective = |mu_fn: &dyn Fn(f64) -> f64, cuts: &[f64]| -> f64 {
        integrate_expectation(
            |z| (-a * (mu_fn(z) * z * snr).ln_1p()).exp(),
            p.fading_mean,
            cuts,
            &quad,
        )
        .unwrap()
    };

    let j_opt = objective(&|z| pp.mu1(z), &[gamma]);

    // bump pairs well above the cutoff, scaled so E{delta} = 0
    let regions = [
        ((0.5, 0.8), (1.5, 2.0)),
        ((0.3, 0.6), (2.5, 3.5)),
        ((1.0, 1.2), (1.2, 1.4)),
        ((0.2, 0.4), (4.0, 6.0)),
        ((0.9, 1.1), (3.0, 3.2)),
    ];
    for ((a1, b1), (a2, b2)) in regions {
        assert!(a1 > gamma && a2 > gamma);
        let ratio = interval_mass(a1, b1) / interval_mass(a2, b2);
        for sign in [1.0f64, -1.0] {
            let eps = 1e-4 * sign;
            let delta = move |z: f64| -> f64 {
                if z > a1 && z <= b1 {
                    1.0
                } else if z > a2 && z <= b2 {
                    -ratio
                } else {
                    0.0
                }
            };
            // feasibility: budget unchanged, power nonnegative
            let perturbed = |z: f64| (pp.mu1(z) + eps * delta(z)).max(0.0);
            let budget =
                integrate_expectation(perturbed, p.fading_mean, &[gamma, a1, b1, a2, b2], &quad)
                    .unwrap();
            assert!(
                (budget - 1.0).abs() < 2.0 * eps.abs(),
                "perturbation broke the power budget: {budget}"
            );

            let j_pert = objective(&perturbed, &[gamma, a1, b1, a2, b2]);
            // convexity: the solved policy is the constrained minimizer, so
            // the objective must not drop by more than quadrature noise...
            assert!(
                j_pert >= j_opt - 1e-9,
                "objective improved under perturbation ({a1},{b1})x({a2},{b2}) eps {eps}: {j_pert} < {j_opt}"
            );
            // ...and stationarity keeps the increase second order in eps
            assert!(
                j_pert - j_opt <= 1e-6,
                "first-order residual too large for eps {eps}: {}",
                j_pert - j_opt
            );
        }
    }
}
