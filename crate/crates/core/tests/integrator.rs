mod common;

use common::*;
use logistic_dde::analysis::{comparison_ode_solution, genlog_residual, prop3_lower_bound};
use logistic_dde::history::{make_blowup_seed, make_thm2_family};
use logistic_dde::scenarios::random_history;
use logistic_dde::{integrate, integrate_gen, GenParams, HistoryFn, Params, Profile, SolverConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn order_against_comparison_ode() {
    for (r, c) in [(1.0, 0.5), (2.0, 1.0), (0.5, 2.0)] {
        let study = order_study(r, c);
        assert!(study.order >= MIN_ORDER, "r={r} c={c}: order {} {:?}", study.order, study.errors);
        assert!(study.monotone, "r={r} c={c}: {:?}", study.errors);
    }
}

#[test]
fn z_equation_matches_direct_integration() {
    for r in GRID_R {
        for c in GRID_C {
            for delta in GRID_DELTA {
                for below in [true, false] {
                    let gap = z_oracle_gap(r, c, delta, below);
                    assert!(gap <= Z_ORACLE_FACTOR, "r={r} c={c} delta={delta} below={below}: {gap} rtol");
                }
            }
        }
    }
}

#[test]
fn switch_threshold_does_not_change_the_answer() {
    for (r, alpha, h) in [(1.0, 1.0, 4.0), (2.0, 0.5, 3.0), (0.5, 2.0, 8.0)] {
        let p = Params::new(r, alpha).unwrap();
        let phi = make_blowup_seed(&p, h).unwrap();
        let run = |x_switch| {
            integrate(&p, &phi, &SolverConfig { x_switch, ..SolverConfig::with_t_end(5.0) }).unwrap()
        };
        let (a, b) = (run(1e3), run(1e6));
        let (ta, tb) = (a.blowup().unwrap().t_blowup, b.blowup().unwrap().t_blowup);
        let cfg = SolverConfig::default();
        assert!((ta - tb).abs() <= cfg.blowup_time_tol, "{ta} vs {tb}");
        for i in 0..=1000 {
            let t = 0.999 * ta.min(tb) * i as f64 / 1000.0;
            let (xa, xb) = (a.eval_x(t).unwrap(), b.eval_x(t).unwrap());
            assert!(((xa - xb) / xb).abs() <= 10.0 * cfg.rtol, "t={t}: {xa} vs {xb}");
        }
    }
}

#[test]
fn comparison_ode_dominates_locus_solutions() {
    for r in GRID_R {
        for c in GRID_C {
            for delta in GRID_DELTA {
                let p = Params::on_exponential_locus(r).unwrap();
                let phi = make_thm2_family(c, r, delta).unwrap();
                let tr = integrate(&p, &phi, &SolverConfig::with_t_end(10.0)).unwrap();
                let t_star = prop3_lower_bound(r, c).unwrap();
                let end = tr.end().min(0.999 * t_star);
                for i in 0..=500 {
                    let t = end * i as f64 / 500.0;
                    let y = comparison_ode_solution(r, c, t).unwrap();
                    assert!(tr.eval_x(t).unwrap() <= y * (1.0 + 1e-6), "r={r} c={c} delta={delta} t={t}");
                }
            }
        }
    }
}

#[test]
fn equilibrium_is_preserved() {
    for alpha in [-2.0, -0.5, 0.0, 0.5] {
        let p = Params::new(1.5, alpha).unwrap();
        let x_star = 1.0 / (1.0 - alpha);
        let tr = integrate(&p, &HistoryFn::constant(x_star).unwrap(), &SolverConfig::with_t_end(20.0)).unwrap();
        for (t, x) in tr.sample(0.1) {
            assert!((x / x_star - 1.0).abs() < 1e-12, "alpha={alpha} t={t} x={x}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn positive_until_escape(r in 0.1f64..3.0, alpha in -3.0f64..1.5, seed in any::<u64>()) {
        let p = Params::new(r, alpha).unwrap();
        let phi = random_history(&mut ChaCha8Rng::seed_from_u64(seed));
        let tr = integrate(&p, &phi, &SolverConfig::with_t_end(15.0)).unwrap();
        for (t, x) in tr.sample(0.01) {
            prop_assert!(x > 0.0 && x.is_finite(), "t={} x={}", t, x);
        }
    }

    #[test]
    fn single_term_general_model_matches_specialised_one(
        r in 0.2f64..3.0,
        alpha in -2.0f64..0.9,
        v in 0.2f64..3.0,
    ) {
        let p = Params::new(r, alpha).unwrap();
        let g = GenParams::new(r, vec![(alpha, 0.0), (-1.0, 1.0)]).unwrap();
        let phi = HistoryFn::constant(v).unwrap();
        let cfg = SolverConfig::with_t_end(8.0);
        let a = integrate(&p, &phi, &cfg).unwrap();
        let b = integrate_gen(&g, &phi, &cfg).unwrap();
        prop_assert_eq!(a.end(), b.end());
        for (t, x) in a.sample(0.05) {
            let y = b.eval_x(t).unwrap();
            prop_assert!(((x - y) / y).abs() <= 1e-10, "t={} {} vs {}", t, x, y);
        }
    }

    #[test]
    fn two_delay_exponential_solution(
        r in 0.3f64..2.0,
        a0 in 0.0f64..0.5,
        a1 in -1.0f64..1.0,
        tau1 in 0.2f64..0.8,
        tau2 in 1.0f64..2.0,
        c in 0.2f64..5.0,
    ) {
        let a2 = -(a0 + a1 * (-r * tau1).exp()) * (r * tau2).exp();
        let g = GenParams::new(r, vec![(a0, 0.0), (a1, tau1), (a2, tau2)]).unwrap();
        prop_assume!(genlog_residual(&g).abs() <= 1e-12);
        let phi = HistoryFn::exp_profile(c, r, Profile::zero()).unwrap().with_lower(-tau2).unwrap();
        let tr = integrate_gen(&g, &phi, &SolverConfig::with_t_end(5.0)).unwrap();
        prop_assert!(tr.is_completed());
        for (t, x) in tr.sample(0.01) {
            let exact = c * (r * t).exp();
            prop_assert!((x / exact - 1.0).abs() <= 1e-8, "t={} {} vs {}", t, x, exact);
        }
    }
}
