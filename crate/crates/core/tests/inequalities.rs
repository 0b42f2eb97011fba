use entroflow::bank::BANK_SIZE;
use entroflow::inequalities::{
    eep_check_fd, eep_check_fp, eep_fd_grid, eep_fd_sweep, eep_fp_grid, eep_fp_sweep, lsi_check, lsi_grid, lsi_sweep,
    sobolev_check, sobolev_constant, sobolev_extremal, sobolev_grid, sobolev_sweep, zugmeyer_reference_problems,
    zugmeyer_sweep, CaseResult, TailPolicy, ZugmeyerProblem,
};
use entroflow::pde::stationary_fd;
use entroflow::{normalize, Error, Geometry, Grid, GridDensity};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

fn violations(rows: &[CaseResult<f64>]) -> Vec<&str> {
    rows.iter()
        .filter(|r| !r.check.passed())
        .map(|r| r.case_id.as_str())
        .collect()
}

#[test]
fn lsi_bank_has_no_violations() {
    let rows = lsi_sweep::<f64>(7, BANK_SIZE).unwrap();
    assert_eq!(rows.len(), BANK_SIZE);
    assert!(violations(&rows).is_empty(), "{:?}", violations(&rows));
}

#[test]
fn lsi_exponentials_are_equality_cases() {
    let g = lsi_grid::<f64>().unwrap();
    for &a in &[0.3, 0.7, -1.1] {
        let c = lsi_check(&g.map(|x| (a * x).exp()), &g).unwrap();
        // both sides equal (a^2/2) e^(a^2/2)
        let exact = a * a / 2.0 * (a * a / 2.0).exp();
        assert!((c.lhs - exact).abs() < 1e-9 * exact, "a = {a}: {} vs {exact}", c.lhs);
        assert!(c.ratio() >= 0.999 && c.ratio() <= 1.0, "a = {a}: {}", c.ratio());
        assert!(!c.with_rhs_scaled(0.9).passed());
    }
}

#[test]
fn sobolev_constant_matches_gamma_formula() {
    for n in 3..=6 {
        let nf = n as f64;
        let closed = (gamma(nf) / gamma(nf / 2.0)).powf(1.0 / nf) / (std::f64::consts::PI * nf * (nf - 2.0)).sqrt();
        let c: f64 = sobolev_constant(n).unwrap();
        assert!((c - closed).abs() < 1e-10 * closed, "n = {n}: {c} vs {closed}");
    }
}

#[test]
fn sobolev_extremal_attains_the_constant() {
    let g = sobolev_grid::<f64>().unwrap();
    for &scale in &[1.0, 2.0] {
        let f = g.map(|r| sobolev_extremal(3, r / scale));
        let c = sobolev_check(&f, &g, TailPolicy::HarmonicExtension).unwrap();
        assert!((c.ratio() - 1.0).abs() < 1e-2, "scale {scale}: {}", c.ratio());
        assert!(!c.with_rhs_scaled(0.9).passed());
        // the extremal is far from zero at R = 200
        assert!(matches!(
            sobolev_check(&f, &g, TailPolicy::Reject),
            Err(Error::BoundaryNotNegligible { .. })
        ));
    }
}

#[test]
fn sobolev_bank_stays_below_one() {
    let rows = sobolev_sweep::<f64>(7, 50).unwrap();
    assert!(rows.iter().all(|r| r.check.ratio() <= 1.0));
}

#[test]
fn sobolev_needs_a_radial_grid() {
    let g = lsi_grid::<f64>().unwrap();
    assert!(sobolev_check(&vec![1.0; g.len()], &g, TailPolicy::Reject).is_err());
}

#[test]
fn fokker_planck_eep_bank_and_translations() {
    let rows = eep_fp_sweep::<f64>(3, BANK_SIZE).unwrap();
    assert!(violations(&rows).is_empty(), "{:?}", violations(&rows));

    // translated Gaussian: F gap m^2/2, production m^2
    let g = eep_fp_grid::<f64>().unwrap();
    let m = 0.8;
    let mu = GridDensity::from_fn(&g, |x| (-(x - m) * (x - m) / 2.0).exp()).unwrap();
    let c = eep_check_fp(&mu).unwrap();
    assert!((c.lhs - m * m / 2.0).abs() < 1e-6, "{}", c.lhs);
    assert!((c.rhs - m * m / 2.0).abs() < 1e-4, "{}", c.rhs);
    assert!(!c.with_rhs_scaled(0.9).passed());
}

#[test]
fn fast_diffusion_eep_bank() {
    let rows = eep_fd_sweep::<f64>(5, BANK_SIZE).unwrap();
    assert!(violations(&rows).is_empty(), "{:?}", violations(&rows));
}

#[test]
fn fast_diffusion_eep_vanishes_at_the_profile_and_needs_equal_mass() {
    let g = eep_fd_grid::<f64>(3).unwrap();
    let s = stationary_fd(3, &g).unwrap();
    let c = eep_check_fd(3, &s.density).unwrap();
    assert!(c.lhs.abs() < 1e-12 && c.rhs < 1e-8, "{c:?}");
    let heavier = GridDensity::from_values(g.clone(), s.density.values().iter().map(|v| v * 1.01).collect()).unwrap();
    assert!(matches!(eep_check_fd(3, &heavier), Err(Error::MassMismatch(_))));
}

#[test]
fn relative_entropy_vanishes_at_the_reference() {
    for p in zugmeyer_reference_problems::<f64>().unwrap() {
        let c = p.check(p.reference()).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert_eq!(c.rhs, 0.0);
    }
}

#[test]
fn relative_entropy_bank_has_no_violations() {
    let rows = zugmeyer_sweep::<f64>(11, BANK_SIZE).unwrap();
    assert_eq!(rows.len(), BANK_SIZE);
    assert!(violations(&rows).is_empty(), "{:?}", violations(&rows));
}

#[test]
fn relative_entropy_translation_is_an_equality_case() {
    let g = Grid::<f64>::uniform(-8.0, 8.0, 1601, 1, Geometry::Line).unwrap();
    let p = ZugmeyerProblem::entropy_log_concave(&g, 1.0, 0.0).unwrap();
    let shift: f64 = 0.5;
    let u = normalize(&p.grid().map(|x| (-(x - shift) * (x - shift) / 2.0).exp()), p.grid())
        .unwrap()
        .into_values();
    let c = p.check(&u).unwrap();
    assert!((c.lhs - shift * shift / 2.0).abs() < 1e-6, "{}", c.lhs);
    assert!((c.ratio() - 1.0).abs() < 1e-4, "{}", c.ratio());
    assert!(!c.with_rhs_scaled(0.9).passed());
}

#[test]
fn too_large_curvature_constant_is_refused() {
    for p in zugmeyer_reference_problems::<f64>().unwrap() {
        let c = p.c();
        let p = p.with_c(c * 1.05);
        let u = p.reference().to_vec();
        match p.check(&u) {
            Err(Error::HypothesisViolated { name, .. }) => assert_eq!(name, "curvature_bound"),
            other => panic!("expected refusal, got {other:?}"),
        }
    }
}

#[test]
fn integrand_failing_displacement_convexity_is_refused() {
    // H(u) = -sqrt(u) in R^3: x U' - 2/3 U = -x^(1/2) / 12
    let g = Grid::radial_staggered(5.0, 200, 3).unwrap();
    let v = g.map(|r: f64| (-r * r).exp() + 0.1);
    let p = ZugmeyerProblem::new(
        "sqrt",
        |u: f64| -u.sqrt(),
        |u: f64| -0.5 / u.sqrt(),
        |u: f64| 0.25 * u.powf(-1.5),
        g,
        v,
        0.0,
    )
    .unwrap();
    let err = p.check_hypotheses().unwrap_err();
    assert!(matches!(
        err,
        Error::HypothesisViolated {
            name: "displacement_convexity",
            ..
        }
    ));
    assert!(err.to_string().contains("displacement_convexity"));
}

#[test]
fn relative_entropy_needs_matching_mass() {
    let problems = zugmeyer_reference_problems::<f64>().unwrap();
    let p = &problems[1];
    let u: Vec<f64> = p.reference().iter().map(|v| v * (1.0 + 1e-6)).collect();
    assert!(matches!(p.check(&u), Err(Error::MassMismatch(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Positive two-bump functions satisfy the log-Sobolev inequality.
    #[test]
    fn lsi_holds_for_random_bumps(
        base in 0.01f64..1.0,
        a1 in 0.0f64..5.0, c1 in -3.0f64..3.0, w1 in 0.2f64..3.0,
        a2 in 0.0f64..5.0, c2 in -3.0f64..3.0, w2 in 0.2f64..3.0,
    ) {
        let g = Grid::uniform(-10.0, 10.0, 2001, 1, Geometry::Line).unwrap();
        let f = g.map(|x| {
            base + a1 * (-(x - c1) * (x - c1) / (2.0 * w1 * w1)).exp()
                + a2 * (-(x - c2) * (x - c2) / (2.0 * w2 * w2)).exp()
        });
        let c = lsi_check(&f, &g).unwrap();
        prop_assert!(c.passed(), "{:?}", c);
        prop_assert!(c.lhs >= -1e-12);
    }

    /// Gaussians with any mean and spread satisfy the Fokker-Planck EEP;
    /// its two sides vanish together only at the standard Gaussian.
    #[test]
    fn fp_eep_holds_for_gaussians(m in -2.0f64..2.0, s in 0.4f64..2.0) {
        let g = Grid::uniform(-12.0, 12.0, 2401, 1, Geometry::Line).unwrap();
        let mu = GridDensity::from_fn(&g, |x| (-(x - m) * (x - m) / (2.0 * s * s)).exp()).unwrap();
        let c = eep_check_fp(&mu).unwrap();
        prop_assert!(c.passed(), "{:?}", c);
        // closed form of the gap: m^2/2 + (s^2 - 1)/2 - log s
        let gap = m * m / 2.0 + (s * s - 1.0) / 2.0 - s.ln();
        prop_assert!((c.lhs - gap).abs() < 1e-5, "{} vs {gap}", c.lhs);
    }
}
