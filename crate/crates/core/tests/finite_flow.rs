use entroflow::finite_flow::{
    de_bruijn_residual, eep_inequality_check, entropy_decay_check, integrate_flow, max_energy_increase,
    production_decay_check, PotentialSpec,
};
use proptest::prelude::*;

#[test]
fn quadratic_flow_is_the_equality_case() {
    let p = PotentialSpec::<f64>::quadratic(3).unwrap();
    let x0 = [1.5, -0.7, 2.0];
    let run = integrate_flow(&p, &x0, 0.01, 5.0).unwrap();
    for (&t, x) in run.trajectory.iter() {
        for (xi, x0i) in x.iter().zip(&x0) {
            assert!((xi - (-t).exp() * x0i).abs() < 1e-9, "t = {t}");
        }
        let eep = eep_inequality_check(&p, x).unwrap();
        assert!((eep.lhs - eep.rhs).abs() < 1e-9);
    }
    let prod = production_decay_check(&p, &run.trajectory);
    assert!(
        (prod.worst_ratio - 1.0).abs() < 1e-6 && (prod.best_ratio - 1.0).abs() < 1e-6,
        "{prod:?}"
    );
    let ent = entropy_decay_check(&p, &run.trajectory).unwrap();
    assert!(
        (ent.worst_ratio - 1.0).abs() < 1e-6 && (ent.best_ratio - 1.0).abs() < 1e-6,
        "{ent:?}"
    );
}

#[test]
fn step_halving_shows_at_least_fourth_order() {
    let p = PotentialSpec::<f64>::quartic().unwrap();
    let end = |dt: f64| integrate_flow(&p, &[1.2], dt, 2.0).unwrap().trajectory.last().1[0];
    let reference = end(1e-4);
    let e1 = (end(0.1) - reference).abs();
    let e2 = (end(0.05) - reference).abs();
    let order = (e1 / e2).log2();
    assert!(order > 3.7, "observed order {order}");
}

#[test]
fn bank_passes_every_check() {
    for p in PotentialSpec::<f64>::builtin_bank() {
        let x0: Vec<f64> = (0..p.dim()).map(|i| 1.0 - 0.6 * i as f64).collect();
        let coarse = integrate_flow(&p, &x0, 0.01, 4.0).unwrap();
        let run = integrate_flow(&p, &x0, 0.005, 4.0).unwrap();
        // centred time differences: second order in dt
        let r1 = de_bruijn_residual(&p, &coarse.trajectory).unwrap();
        let r2 = de_bruijn_residual(&p, &run.trajectory).unwrap();
        assert!(r2 < 2e-3 && r1 / r2 > 3.5, "{}: {r1} -> {r2}", p.name());
        assert!(production_decay_check(&p, &run.trajectory).passed(1e-6), "{}", p.name());
        assert!(
            entropy_decay_check(&p, &run.trajectory).unwrap().passed(1e-6),
            "{}",
            p.name()
        );
        for (_, x) in run.trajectory.iter().step_by(40) {
            assert!(eep_inequality_check(&p, x).unwrap().passed(1e-12), "{}", p.name());
        }
    }
}

#[test]
fn overstated_convexity_is_detected() {
    let p = PotentialSpec::<f64>::quartic().unwrap().with_rho(2.0).unwrap();
    let run = integrate_flow(&p, &[1.0], 0.005, 4.0).unwrap();
    assert!(!production_decay_check(&p, &run.trajectory).passed(1e-6));
    assert!(!entropy_decay_check(&p, &run.trajectory).unwrap().passed(1e-6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The energy never increases along a computed flow, and the
    /// entropy/entropy-production inequality holds at the start point.
    #[test]
    fn energy_is_nonincreasing(which in 0usize..3, a in -3.0f64..3.0, b in -3.0f64..3.0, dt in 0.001f64..0.02) {
        let p = PotentialSpec::<f64>::builtin_bank().swap_remove(which);
        let x0: Vec<f64> = [a, b][..p.dim()].to_vec();
        let run = integrate_flow(&p, &x0, dt, 2.0).unwrap();
        prop_assert!(max_energy_increase(&p, &run.trajectory) <= 1e-10);
        prop_assert!(eep_inequality_check(&p, &x0).unwrap().passed(1e-12));
    }
}
