use proptest::prelude::*;

use turnpike_core::lq_solver::{dichotomy_solve, HorizonSpec};
use turnpike_core::model::{OscillatorSystem, StateVector};
use turnpike_core::static_opt::{solve_static, TargetSpec};
use turnpike_core::turnpike::{deviation_profile, envelope_constant, fit_decay_exponent, DeviationProfile};

fn system(gaps: &[f64], gains: &[f64]) -> OscillatorSystem {
    let mut om = Vec::new();
    let mut w = 0.5;
    for g in gaps {
        w += g;
        om.push(w);
    }
    OscillatorSystem::new(om, gains.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn envelope_is_homogeneous(scale in 0.01f64..100.0, beta in 0.1f64..1.0, p in 0.1f64..2.0) {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.3).collect();
        let horizon = 30.0;
        let dev: Vec<f64> = times.iter().map(|t| (t + 1.0).powf(-p) + (horizon - t + 1.0).powf(-p)).collect();
        let base = DeviationProfile { times: times.clone(), dev: dev.clone(), beta, denom: 1.0 };
        let scaled = DeviationProfile { dev: dev.iter().map(|d| d * scale).collect(), ..base.clone() };
        let c = envelope_constant(&base, horizon).unwrap();
        let cs = envelope_constant(&scaled, horizon).unwrap();
        prop_assert!((cs - scale * c).abs() <= 1e-12 * cs.max(1.0));
        // the profile lies under its own envelope everywhere
        for (t, d) in times.iter().zip(&dev) {
            prop_assert!(*d <= c * ((t + 1.0).powf(-beta) + (horizon - t + 1.0).powf(-beta)) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fit_recovers_power_law(c in 0.1f64..10.0, p in 0.05f64..3.0) {
        let times: Vec<f64> = (0..400).map(|i| i as f64 * 0.25).collect();
        let dev = times.iter().map(|t| c * (t + 1.0).powf(-p)).collect();
        let prof = DeviationProfile { times, dev, beta: 0.4, denom: 1.0 };
        let fit = fit_decay_exponent(&prof, (1.0, 50.0)).unwrap();
        prop_assert!((fit - p).abs() < 1e-9);
    }

    #[test]
    fn larger_beta_shrinks_deviation(
        gaps in prop::collection::vec(0.5f64..3.0, 3),
        gains in prop::collection::vec(0.05f64..1.0, 3),
        b1 in 0.1f64..0.9,
        b2 in 0.1f64..0.9,
    ) {
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        let sys = system(&gaps, &gains);
        let target = TargetSpec::new(StateVector::zeros(3), 1.0).unwrap();
        let st = solve_static(&target, &sys).unwrap();
        let mut x0 = st.xhat.clone();
        x0.xi[0] += 1.0;
        let hs = HorizonSpec::uniform(6.0, x0, 121).unwrap();
        let traj = dichotomy_solve(&sys, &target, &hs, &st).unwrap().trajectory(&hs.grid).unwrap();
        let p_lo = deviation_profile(&traj, &st, lo, &sys).unwrap();
        let p_hi = deviation_profile(&traj, &st, hi, &sys).unwrap();
        // all |b_k| < 1, so the weight |b|^{2(β+1)} decreases with β
        for (a, b) in p_lo.dev.iter().zip(&p_hi.dev) {
            prop_assert!(*b <= *a * (1.0 + 1e-12));
        }
        prop_assert_eq!(p_lo.denom, p_hi.denom);
    }
}
