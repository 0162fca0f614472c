use conflow::flow::{
    apply_symmetry, charge_gradients, charge_rates, charges, decimate, flow_rhs, flow_rhs_reference, hamiltonian,
    resonant_sum, resonant_sum_reference,
};
use conflow::genfunc::rhs_via_contour;
use conflow::integrator::{integrate_to, IntegratorConfig};
use conflow::interaction::{interaction_coefficient, quadrature_coefficient};
use conflow::subspace::{lift, oscillation_of, subspace_rhs, SubspaceState};
use conflow::szego::{szego_rhs_fft, szego_rhs_reference};
use conflow::wave::{from_envelope, to_envelope, FieldState};
use conflow::{Complex64, ModeSpectrum};
use proptest::prelude::*;

fn spectrum(max_len: usize, radius: f64) -> impl Strategy<Value = ModeSpectrum> {
    prop::collection::vec((-radius..radius, -radius..radius), 1..=max_len)
        .prop_map(|v| ModeSpectrum::new(v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect()).unwrap())
}

fn subspace_state(max_p: f64) -> impl Strategy<Value = SubspaceState> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..max_p, 0.0..std::f64::consts::TAU).prop_map(
        |(br, bi, ar, ai, r, th)| {
            SubspaceState::new(Complex64::new(br, bi), Complex64::new(ar, ai), Complex64::from_polar(r, th)).unwrap()
        },
    )
}

fn scale_of(v: &ModeSpectrum) -> f64 {
    v.max_abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficient_is_permutation_symmetric(j in 0usize..20, k in 0usize..20, l in 0usize..20, n in 0usize..20) {
        let s = interaction_coefficient(j, k, l, n);
        let idx = [j, k, l, n];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        if a != b && a != c && a != d && b != c && b != d && c != d {
                            prop_assert_eq!(interaction_coefficient(idx[a], idx[b], idx[c], idx[d]), s);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coefficient_matches_quadrature(j in 0usize..16, k in 0usize..16, l in 0usize..16, n in 0usize..16) {
        let s = interaction_coefficient(j, k, l, n) as f64;
        prop_assert!((s - quadrature_coefficient(j, k, l, n)).abs() < 1e-9);
    }

    #[test]
    fn fast_sum_matches_reference(s in spectrum(40, 1.0)) {
        let a = resonant_sum(&s);
        let b = resonant_sum_reference(&s);
        let scale = b.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() <= 1e-13 * scale * (s.truncation() as f64));
        }
    }

    #[test]
    fn rhs_is_cubic(s in spectrum(24, 1.0), c in 0.1..3.0f64) {
        let lhs = flow_rhs(&s.scaled(Complex64::new(c, 0.0)));
        let rhs = flow_rhs(&s).scaled(Complex64::new(c * c * c, 0.0));
        prop_assert!(lhs.max_distance(&rhs) <= 1e-12 * scale_of(&rhs));
    }

    #[test]
    fn charges_are_conserved_by_the_field(s in spectrum(24, 1.0)) {
        let ch = charges(&s);
        let rates = charge_rates(&s);
        let mags = [ch.q, ch.e, ch.h];
        for (r, m) in rates.iter().zip(mags) {
            // each rate is a sum of terms of size (n+1)² |α|⁴ at most
            prop_assert!(r.abs() <= 1e-11 * (1.0 + m) * (s.truncation() as f64).powi(2));
        }
    }

    #[test]
    fn symmetries_commute_with_the_flow(s in spectrum(20, 1.0), g in -3.0..3.0f64, m in -3.0..3.0f64) {
        let lhs = flow_rhs(&apply_symmetry(&s, 1.0, g, m));
        let rhs = apply_symmetry(&flow_rhs(&s), 1.0, g, m);
        prop_assert!(lhs.max_distance(&rhs) <= 1e-12 * scale_of(&rhs));
    }

    #[test]
    fn decimation_commutes_with_the_flow(s in spectrum(12, 1.0), step in 1usize..4) {
        let n = step + s.truncation() * (step + 1);
        let lhs = flow_rhs(&decimate(&s, step, n).unwrap());
        let rhs = decimate(&flow_rhs(&s), step, n).unwrap();
        prop_assert!(lhs.max_distance(&rhs) <= 1e-12 * scale_of(&rhs));
    }

    #[test]
    fn hamiltonian_gradient_matches_finite_differences(s in spectrum(8, 1.0), idx in 0usize..8) {
        let idx = idx % s.truncation();
        let g = charge_gradients(&s)[2][idx];
        let h = 1e-6;
        let shifted = |d: Complex64| {
            let mut v = s.clone();
            v.amps_mut()[idx] += d;
            hamiltonian(&v)
        };
        let dx = (shifted(Complex64::new(h, 0.0)) - shifted(Complex64::new(-h, 0.0))) / (2.0 * h);
        let dy = (shifted(Complex64::new(0.0, h)) - shifted(Complex64::new(0.0, -h))) / (2.0 * h);
        // ∂/∂x = 2 Re ∂/∂ᾱ, ∂/∂y = 2 Im ∂/∂ᾱ
        prop_assert!((dx - 2.0 * g.re).abs() < 1e-6 * (1.0 + g.norm()));
        prop_assert!((dy - 2.0 * g.im).abs() < 1e-6 * (1.0 + g.norm()));
    }

    #[test]
    fn reference_rhs_agrees(s in spectrum(30, 1.0)) {
        let a = flow_rhs(&s);
        let b = flow_rhs_reference(&s);
        prop_assert!(a.max_distance(&b) <= 1e-12 * scale_of(&b));
    }

    #[test]
    fn contour_rhs_agrees(s in spectrum(12, 1.0)) {
        let samples = (4 * s.truncation()).next_power_of_two().max(8);
        let a = rhs_via_contour(&s, samples, 0.8).unwrap();
        let b = flow_rhs_reference(&s);
        prop_assert!(a.max_distance(&b) <= 1e-9 * (1.0 + scale_of(&b)));
    }

    #[test]
    fn szego_fft_agrees(s in spectrum(80, 1.0)) {
        let a = szego_rhs_fft(&s);
        let b = szego_rhs_reference(&s);
        prop_assert!(a.max_distance(&b) <= 1e-12 * s.truncation() as f64 * (1.0 + scale_of(&b)));
    }

    #[test]
    fn lift_commutes_with_the_flow(st in subspace_state(0.5)) {
        let n = 96;
        let amps = lift(&st, n).unwrap();
        let full = flow_rhs(&amps);
        let r = subspace_rhs(&st).unwrap();
        // α_n = (b + a n) pⁿ
        let mut pn = Complex64::new(1.0, 0.0);
        for k in 0..n / 2 {
            let kf = k as f64;
            let pk1 = if k == 0 { Complex64::new(0.0, 0.0) } else { pn / st.p * kf };
            let expect = (r.b + r.a * kf) * pn + (st.b + st.a * kf) * pk1 * r.p;
            prop_assert!((full[k] - expect).norm() < 1e-9 * (1.0 + full[k].norm()));
            pn *= st.p;
        }
    }

    #[test]
    fn cascade_ratio_is_bounded(st in subspace_state(0.95)) {
        let osc = oscillation_of(&st).unwrap();
        prop_assert!(osc.cascade_ratio() <= 16.0 * (1.0 + 1e-12));
    }

    #[test]
    fn envelope_round_trip(c in prop::collection::vec(-1.0..1.0f64, 1..12), t in -50.0..50.0f64) {
        let cdot: Vec<f64> = c.iter().rev().copied().collect();
        let fs = FieldState::new(c.clone(), cdot.clone(), 0.1).unwrap();
        let back = from_envelope(&to_envelope(&fs, t), t, 0.1);
        for k in 0..c.len() {
            prop_assert!((back.c[k] - c[k]).abs() < 1e-14);
            prop_assert!((back.cdot[k] - cdot[k]).abs() < 1e-13 * (k + 1) as f64);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn backward_run_returns(s in spectrum(8, 0.5)) {
        let cfg = IntegratorConfig::default();
        let fwd = integrate_to(conflow::flow::flow_rhs_into, &s, 1.0, &cfg).unwrap();
        let cfg_back = IntegratorConfig { sample_interval: 1.0, ..IntegratorConfig::default() };
        let back = integrate_to(conflow::flow::flow_rhs_into, &fwd, -1.0, &cfg_back).unwrap();
        prop_assert!(back.max_distance(&s) <= 10.0 * cfg.rel_tol * (1.0 + s.max_abs()));
    }
}
