//! End-to-end runs of the integrators and closed loops.

mod common;

use common::*;
use offhook_core::linalg::{norm, sub};
use offhook_core::sim::{nilpotent_period_map, within_initial_envelope, RunNote};
use offhook_core::{
    chen_fliess_order_study, coeffs, compute_params, decay_report, simulate_nilpotent_closed_loop,
    simulate_original_closed_loop, simulate_original_open_loop, z_to_x, ControlGains, ControlInput,
    Error, IntegratorConfig, LengthParams, StateX, StateZ,
};

#[test]
fn rk4_is_fourth_order_on_the_vehicle() {
    let p = LengthParams::SHORT_HOOKS;
    let u = |t: f64| ControlInput::new((3.0 * t).cos(), 0.8 * (5.0 * t).sin());
    let x0 = StateX([0.0, 0.1, 0.2, -0.1, 0.3]);
    let run = |n| {
        *simulate_original_open_loop(&p, &u, &x0, 2.0, &IntegratorConfig::new(n))
            .unwrap()
            .last_state()
            .unwrap()
    };
    let (coarse, fine, reference) = (run(40), run(80), run(320));
    let ratio = norm(&sub(&coarse, &reference)) / norm(&sub(&fine, &reference));
    assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn one_period_map_converges_at_least_at_fourth_order() {
    // Over a full period the leading error term of the periodic forcing
    // averages out, so the observed ratio is closer to 32 than 16.
    let a = compute_params(&LengthParams::UNIT);
    let g = ControlGains::REFERENCE;
    let reference = nilpotent_period_map(&a, &g, &REFERENCE_Z0, 1920).unwrap();
    let e = |n| {
        norm(&sub(
            &nilpotent_period_map(&a, &g, &REFERENCE_Z0, n).unwrap().0,
            &reference.0,
        ))
    };
    let ratio = e(240) / e(480);
    assert!(ratio >= 14.0, "ratio {ratio}");
}

#[test]
fn reference_run_decays() {
    let g = ControlGains::REFERENCE;
    let a = compute_params(&LengthParams::UNIT);
    let traj = simulate_nilpotent_closed_loop(
        &a,
        &g,
        &REFERENCE_Z0,
        300,
        &IntegratorConfig::for_gains(&g),
    )
    .unwrap();
    let r = decay_report(&traj).unwrap();
    assert!(r.fitted_rate > 0.0 && r.fit_quality >= 0.8);
    assert!(r.sampled_norms.last().unwrap() < &r.sampled_norms[0]);
    assert!(r.sampled_norms[250..].windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn small_epsilon_stays_inside_initial_envelope() {
    let g = ControlGains::REFERENCE.with_epsilon(0.0125);
    let a = compute_params(&LengthParams::UNIT);
    let cfg = IntegratorConfig {
        record_stride: 960,
        ..IntegratorConfig::for_gains(&g)
    };
    let traj = simulate_nilpotent_closed_loop(&a, &g, &REFERENCE_Z0, 400, &cfg).unwrap();
    let norms: Vec<f64> = traj.sampled_z().iter().map(norm).collect();
    assert!(within_initial_envelope(&norms));
    let r = decay_report(&traj).unwrap();
    assert!(r.fitted_rate > 0.0 && r.fit_quality >= 0.8);
}

#[test]
fn order_study_on_a_scaled_initial_state() {
    let a = compute_params(&LengthParams::UNIT);
    let z0 = StateZ(REFERENCE_Z0.0.map(|v| 0.1 * v));
    let s = chen_fliess_order_study(&a, 1.0, [8, 6, 5], &z0, &[0.1, 0.05, 0.025, 0.0125]).unwrap();
    assert!(s.slope.unwrap() >= 1.2333, "{s:?}");
}

#[test]
fn order_study_on_short_hooks() {
    let a = compute_params(&LengthParams::SHORT_HOOKS);
    let s = chen_fliess_order_study(
        &a,
        1.0,
        [8, 6, 5],
        &REFERENCE_Z0,
        &[0.1, 0.05, 0.025, 0.0125],
    )
    .unwrap();
    assert!(s.slope.unwrap() >= 1.2333, "{s:?}");
}

#[test]
fn blow_up_reports_last_good_time() {
    let g = ControlGains::REFERENCE;
    let a = compute_params(&LengthParams::UNIT);
    let z0 = StateZ([1e300, 1e300, 0.0, 0.0, 0.0]);
    match simulate_nilpotent_closed_loop(&a, &g, &z0, 5, &IntegratorConfig::new(100)) {
        Err(Error::BlowUp {
            node,
            last_good_time,
        }) => {
            assert_eq!(node, 1);
            assert_eq!(last_good_time, 0.0);
        }
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn exploratory_original_loop_shrinks_a_small_state() {
    let g = ControlGains::REFERENCE;
    let z0 = StateZ(REFERENCE_Z0.0.map(|v| 0.1 * v));
    for p in [LengthParams::SHORT_HOOKS, LengthParams::UNIT] {
        let x0 = z_to_x(&p, &z0).unwrap();
        let traj = simulate_original_closed_loop(&p, &g, &x0, 50, &IntegratorConfig::for_gains(&g))
            .unwrap();
        assert_eq!(traj.notes, vec![RunNote::Exploratory]);
        let zs = traj.sampled_z();
        assert!(norm(zs.last().unwrap()) < norm(&zs[0]));
    }
}

#[test]
fn heading_follows_steering_between_samples() {
    // The second privileged coordinate is the car heading, driven by u2
    // alone; over one period it advances by ε times the average of u2.
    let g = ControlGains::REFERENCE;
    let p = LengthParams::SHORT_HOOKS;
    let a = compute_params(&p);
    let x0 = z_to_x(&p, &StateZ(REFERENCE_Z0.0.map(|v| 0.1 * v))).unwrap();
    let traj =
        simulate_original_closed_loop(&p, &g, &x0, 10, &IntegratorConfig::for_gains(&g)).unwrap();
    let zs = traj.sampled_z();
    for w in zs.windows(2) {
        let a2 = coeffs(&a, g.gamma, &StateZ(w[0])).a2;
        assert!((w[1][1] - w[0][1] - g.epsilon * a2).abs() < 1e-10);
    }
}
