use std::f64::consts::PI;

use conflow::flow::{charges, flow_rhs_into};
use conflow::integrator::{integrate, max_drift, IntegratorConfig};
use conflow::stationary::{blaschke_state, family_a0, family_omega0, family_pm, one_mode, Branch};
use conflow::subspace::{lift, oscillation_of, SubspaceState};
use conflow::szego::{evolve_pole, single_pole_solution, szego_stationary, SzegoPoleState, SzegoStationaryKind};
use conflow::wave::{evolve_averaged, from_envelope, nonresonant_average, Oscillators};
use conflow::{Complex64, ModeSpectrum};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn oscillator_energy_is_conserved() {
    let eps = 0.1;
    let sys = Oscillators::quadrature(32);
    let beta = ModeSpectrum::from_real(&[1.0, 1.0]).resized(32).scaled(c(eps, 0.0));
    let fs = from_envelope(&beta, 0.0, eps);
    let e0 = sys.energy(&fs);
    let cfg = IntegratorConfig::default().sample_interval(0.5);
    let out = sys.evolve(&fs, 100.0, &cfg).unwrap();
    let drift = out.iter().map(|(_, f)| (sys.energy(f) - e0).abs() / e0).fold(0.0, f64::max);
    assert!(drift <= 1e-9, "{drift:e}");
}

#[test]
fn tensor_and_quadrature_trajectories_agree() {
    let eps = 0.2;
    let beta = ModeSpectrum::from_real(&[1.0, 0.5, 0.25]).resized(12).scaled(c(eps, 0.0));
    let fs = from_envelope(&beta, 0.0, eps);
    let cfg = IntegratorConfig::default().sample_interval(5.0);
    let a = Oscillators::tensor(12).unwrap().evolve(&fs, 20.0, &cfg).unwrap();
    let b = Oscillators::quadrature(12).evolve(&fs, 20.0, &cfg).unwrap();
    for ((_, x), (_, y)) in a.iter().zip(&b) {
        for k in 0..12 {
            assert!((x.c[k] - y.c[k]).abs() < 1e-9);
        }
    }
}

#[test]
fn nonresonant_terms_are_negligible_at_eps_0_1() {
    let eps: f64 = 0.1;
    let sys = Oscillators::quadrature(16);
    let beta = ModeSpectrum::from_real(&[1.0, 1.0]).scaled(c(eps, 0.0));
    assert!(nonresonant_average(&sys, &beta) < 1e-3 * eps.powi(3));
}

#[test]
fn averaged_system_is_the_flow_with_reversed_time() {
    // one subspace period in flow time
    let s0 = SubspaceState::real(1.0, 1.0, 0.5).unwrap();
    let period = oscillation_of(&s0).unwrap().period();
    let a0 = lift(&s0, 160).unwrap();
    let tau_end = period / 1.5;
    let cfg = IntegratorConfig::default();
    let slow = evolve_averaged(&a0, tau_end, &cfg.clone().sample_interval(tau_end / 8.0)).unwrap();
    let flow = integrate(flow_rhs_into, &a0, -period, &cfg.clone().sample_interval(period / 8.0), |_| ()).unwrap();
    assert_eq!(slow.len(), flow.states.len());
    for ((_, a), b) in slow.iter().zip(&flow.states) {
        assert!(a.max_distance(b) < 1e-8);
    }
}

#[test]
fn stationary_states_only_rotate() {
    let n = 64;
    let states = [
        one_mode(n, 1, c(2.0, 0.0)).unwrap(),
        family_a0(c(1.0, 0.0), c(0.3, 0.0), n).unwrap(),
        family_omega0(c(1.0, 0.0), c(0.3, 0.1), n).unwrap(),
        family_pm(c(1.0, 0.0), c(0.2, 0.0), Branch::Minus, n).unwrap(),
        blaschke_state(c(1.0, 0.0), &[c(0.3, 0.0)], n).unwrap(),
    ];
    let cfg = IntegratorConfig::default().sample_interval(1.0);
    for st in &states {
        let traj = integrate(flow_rhs_into, &st.amplitudes, 10.0, &cfg, |_| ()).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            for (x, y) in s.iter().zip(st.amplitudes.iter()) {
                assert!((x.norm() - y.norm()).abs() <= 1e-8);
            }
            // and the phases follow λ_n = λ − nω
            assert!(s.max_distance(&st.at(*t)) <= 1e-7);
        }
    }
}

#[test]
fn drift_shrinks_with_tolerance() {
    let s = ModeSpectrum::new((0..12).map(|k| c(0.3 * 0.8f64.powi(k), 0.1 * (k as f64).sin())).collect()).unwrap();
    let drift = |tol: f64| {
        let traj = integrate(flow_rhs_into, &s, 50.0, &IntegratorConfig::with_tol(tol), charges).unwrap();
        max_drift(&traj)
    };
    let d = [drift(1e-6), drift(1e-8), drift(1e-10)];
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn szego_two_mode_pole_follows_closed_form() {
    let eps: f64 = 0.1;
    let omega = 2.0 * eps * (1.0 + eps * eps).sqrt();
    let period = PI / omega;
    let s0 = SzegoPoleState::real(1.0, 2.0 * eps, 0.0).unwrap();
    let traj = evolve_pole(&s0, period, &IntegratorConfig::default().sample_interval(period / 64.0)).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let expect = (omega * t).sin().abs() / (1.0 + eps * eps).sqrt();
        assert!((s.p.norm() - expect).abs() < 1e-7);
        let closed = single_pole_solution(1.0, 2.0 * eps, 0.0, *t).unwrap();
        assert!((s.p - closed.p).norm() < 1e-7);
    }
}

#[test]
fn szego_stationary_relations() {
    let (cc, p, period) = (c(1.0, 0.0), c(0.4, 0.0), 2usize);
    let st = szego_stationary(&SzegoStationaryKind::Decimated { c: cc, p, period, shift: 1 }, 128).unwrap();
    let d = 1.0 - 0.4f64.powi(4);
    assert!((st.lambda - 1.0 / (d * d)).abs() < 1e-10);
    assert!((period as f64 * st.omega - 1.0 / d).abs() < 1e-10);
    assert!(st.residual <= 1e-10);
    let b = szego_stationary(&SzegoStationaryKind::Blaschke { c: cc, zeros: vec![c(0.3, 0.0)] }, 128).unwrap();
    assert!((b.lambda - 1.0).abs() < 1e-15 && b.residual <= 1e-8);
}
