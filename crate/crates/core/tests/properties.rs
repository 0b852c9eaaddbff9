use num_traits::Zero;
use proptest::prelude::*;

use gdrate::lab::{descent_ratio, performance_ratio, run_gd, FunctionSpec};
use gdrate::verifier::{check_balance, check_propositions};
use gdrate::{
    build_certificate, certify, eval_e, optimal_stepsize, rate_bound, surrogate_class, CertifyConfig,
    ProblemInstance, Rational, SolveOptions, VerificationReport,
};

fn rational(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn balance_holds_exactly_off_the_optimal_locus(
        n in 1usize..7,
        rho in -999i64..-1,
        excess in 1i64..3000,
        l in 1i64..50,
    ) {
        let rho = rational(rho, 1000);
        let eta = -rho.clone() + rational(excess, 1000);
        let cert = build_certificate(n, &rho, &eta, &rational(l, 10)).unwrap();
        prop_assert!(check_balance(&cert).iter().all(Zero::is_zero));
    }

    #[test]
    fn optimal_stepsize_scales_with_smoothness(n in 1usize..12, kappa in -0.9f64..0.95, l in 0.01f64..100.0) {
        let opts = SolveOptions::default();
        let g1 = optimal_stepsize(n, kappa, 1.0, &opts).unwrap();
        let gl = optimal_stepsize(n, kappa * l, l, &opts).unwrap();
        prop_assert!(g1 > 1.0 && g1 < 2.0);
        prop_assert!((gl * l - g1).abs() <= 1e-9 * g1);
    }

    #[test]
    fn max_and_min_forms_agree(n in 1usize..12, kappa in 0.0f64..0.95, gl in 0.01f64..1.99) {
        let r = rate_bound(&ProblemInstance::new(n, kappa, 1.0, gl).unwrap()).unwrap();
        let m = r.max_value.unwrap();
        prop_assert!(m >= r.branch_rho && m >= r.branch_mu.unwrap());
        prop_assert!((m * (1.0 + gl * r.min_form) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn surrogate_sits_on_the_optimal_locus(n in 1usize..11, kappa in -0.9f64..0.95, gl in 0.02f64..1.98) {
        let inst = ProblemInstance::new(n, kappa, 1.0, gl).unwrap();
        let s = surrogate_class(&inst, &SolveOptions::default()).unwrap();
        let e_rho = eval_e(&s.rho_eff, n as i64).unwrap();
        let e_eta = eval_e(&s.eta_eff, n as i64).unwrap();
        prop_assert!((e_rho - e_eta).abs() <= 1e-10 * e_rho.abs().max(1.0));
        prop_assert!(s.mu_eff <= kappa + 1e-12 && s.l_eff >= 1.0 - 1e-12);
        let a = check_propositions(n, &s.rho_eff, &s.eta_eff, 64);
        prop_assert!(a.sign_pass && a.gap_monotone_pass && a.gap_ratio_pass, "{:?}", a);
    }

    #[test]
    fn random_instances_certify(n in 1usize..9, kappa in -0.9f64..0.95, gl in 0.02f64..1.98, seed in any::<u64>()) {
        let cfg = CertifyConfig { oracle_trials: 10, seed, ..CertifyConfig::default() };
        let r = certify(&ProblemInstance::new(n, kappa, 1.0, gl).unwrap(), &cfg).unwrap();
        prop_assert!(r.certified, "{:?}", r.failing_stage);
        let back: VerificationReport = serde_json::from_str(&r.to_json()).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn quadratics_respect_the_bound(
        n in 1usize..10,
        kappa in 0.0f64..0.9,
        gl in 0.05f64..1.95,
        weights in prop::collection::vec(0.0f64..=1.0, 1..5),
        x0 in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let inst = ProblemInstance::new(n, kappa, 1.0, gl).unwrap();
        let eig: Vec<f64> = weights.iter().map(|w| kappa + w * (1.0 - kappa)).collect();
        let x0 = &x0[..eig.len()];
        prop_assume!(x0.iter().zip(&eig).any(|(x, l)| x.abs() > 1e-3 && *l > 1e-3));
        let t = run_gd(&FunctionSpec::quadratic(eig).unwrap(), x0, gl, n, 1.0).unwrap();
        let bound = 2.0 * rate_bound(&inst).unwrap().max_value.unwrap();
        prop_assert!(performance_ratio(&t, 0.0).unwrap() <= bound * (1.0 + 1e-9));
        for k in 0..n {
            prop_assert!(t.values[k + 1] <= t.values[k]);
        }
    }

    #[test]
    fn piecewise_functions_respect_the_min_form(
        n in 1usize..6,
        kappa in -0.9f64..0.5,
        gl in 0.05f64..1.95,
        breaks in prop::collection::btree_set(-200i32..200, 0..4),
        weights in prop::collection::vec(0.0f64..=1.0, 5),
        x0 in -3.0f64..3.0,
    ) {
        let inst = ProblemInstance::new(n, kappa, 1.0, gl).unwrap();
        let bp: Vec<f64> = breaks.iter().map(|b| *b as f64 / 100.0).collect();
        let curv: Vec<f64> = weights[..=bp.len()].iter().map(|w| kappa + w * (1.0 - kappa)).collect();
        let spec = FunctionSpec::piecewise_quadratic(bp, curv).unwrap();
        let t = run_gd(&spec, &[x0], gl, n, 1.0).unwrap();
        let min_form = rate_bound(&inst).unwrap().min_form;
        prop_assert!(descent_ratio(&t).unwrap() * gl * min_form / 2.0 <= 1.0 + 1e-9);
    }
}
