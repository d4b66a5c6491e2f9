use hillbands::boussinesq::cubic_roots;
use hillbands::fundsol::{integrate_fundamental, IntegratorConfig};
use hillbands::potentials::{ExpTerm, FourierProfile, PotentialSpec};
use hillbands::resolvent::green_dirichlet;
use hillbands::spectra::{dirichlet_spectrum, SpectrumConfig};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn profile() -> impl Strategy<Value = FourierProfile<f64>> {
    (
        -2.0..2.0f64,
        prop::collection::vec(-2.0..2.0f64, 0..3),
        prop::collection::vec(-2.0..2.0f64, 0..3),
    )
        .prop_map(|(a0, cos, sin)| FourierProfile { a0, cos, sin })
}

fn potential() -> impl Strategy<Value = PotentialSpec<f64>> {
    prop_oneof![
        profile().prop_map(PotentialSpec::LambdaIndependent),
        (profile(), 0.1..1.5f64).prop_map(|(q, kappa)| PotentialSpec::Exp(vec![ExpTerm { kappa, q }])),
        (profile(), 0.1..1.5f64).prop_map(|(q, kappa)| PotentialSpec::Cos(vec![ExpTerm { kappa, q }])),
        (profile(), 1.0..3.0f64).prop_map(|(q, shift)| PotentialSpec::RationalDecay { q, shift }),
    ]
}

fn lambda() -> impl Strategy<Value = C> {
    (-0.5..200.0f64, -2.0..2.0f64).prop_map(|(re, im)| C::new(re, im))
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wronskian_is_one(spec in potential(), lam in lambda()) {
        let fd = integrate_fundamental(&spec, lam, 1.0, &IntegratorConfig::default()).unwrap();
        let scale = (fd.theta1 * fd.dphi1).norm().max(1.0);
        prop_assert!(fd.wronskian_defect() < 1e-9 * scale);
    }

    #[test]
    fn discriminant_commutes_with_conjugation(spec in potential(), lam in lambda()) {
        let cfg = IntegratorConfig::default();
        let up = integrate_fundamental(&spec, lam, 1.0, &cfg).unwrap().delta();
        let down = integrate_fundamental(&spec, lam.conj(), 1.0, &cfg).unwrap().delta();
        prop_assert!(rel(up.conj(), down) < 1e-10);
    }

    #[test]
    fn constant_shift_moves_lambda(q in profile(), c in -3.0..3.0f64, lam in lambda()) {
        let cfg = IntegratorConfig::default();
        let mut shifted = q.clone();
        shifted.a0 += c;
        let base = integrate_fundamental(&PotentialSpec::LambdaIndependent(q), lam - c, 1.0, &cfg).unwrap();
        let moved = integrate_fundamental(&PotentialSpec::LambdaIndependent(shifted), lam, 1.0, &cfg).unwrap();
        prop_assert!(rel(base.delta(), moved.delta()) < 1e-9);
    }

    #[test]
    fn cubic_roots_match_coefficients(ar in -50.0..50.0f64, ai in -50.0..50.0f64, br in -50.0..50.0f64, bi in -50.0..50.0f64) {
        let (a, b) = (C::new(ar, ai), C::new(br, bi));
        let [t1, t2, t3] = cubic_roots(a, b);
        prop_assert!((t1 * t2 * t3 - 1.0).norm() < 1e-10);
        prop_assert!((t1 + t2 + t3 - a).norm() < 1e-10 * a.norm().max(1.0));
        prop_assert!((t1 * t2 + t2 * t3 + t3 * t1 - b).norm() < 1e-10 * b.norm().max(1.0));
    }

    #[test]
    fn config_round_trips(spec in potential()) {
        let text = serde_json::to_string(&spec.to_config()).unwrap();
        prop_assert_eq!(PotentialSpec::from_json(&text).unwrap(), spec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dirichlet_eigenvalues_lie_outside_bands(q in profile()) {
        let spec = PotentialSpec::LambdaIndependent(q);
        let cfg = SpectrumConfig::default();
        for e in dirichlet_spectrum(&spec, -20.0, 250.0, &cfg).unwrap() {
            let fd = integrate_fundamental(&spec, e.lam, 1.0, &IntegratorConfig::default()).unwrap();
            prop_assert!(fd.delta().re.powi(2) >= 1.0 - 1e-8, "Δ² = {} at {}", fd.delta().re.powi(2), e.lam);
        }
    }

    #[test]
    fn dirichlet_kernel_is_symmetric(spec in potential(), re in 1.0..60.0f64, im in 0.3..2.0f64) {
        let g = green_dirichlet(&spec, C::new(re, im), 16, &IntegratorConfig::default()).unwrap();
        for i in 1..16 {
            for j in 1..i {
                prop_assert!(rel(g.at_mesh(i, j), g.at_mesh(j, i)) < 1e-9);
            }
        }
    }
}
