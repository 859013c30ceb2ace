use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use proptest::prelude::*;
use pspin_qfc::analysis::{js_divergence, pearson, similarity};
use pspin_qfc::exact::{self, ExactPropagator};
use pspin_qfc::gaussian::{self, feedback_angles, sample_measurement, step, GaussianSpinState, ProtocolConfig};
use pspin_qfc::meanfield::{self, flow_rhs};
use pspin_qfc::spin_model::{dephasing_rate, extrema, pseudo_potential};
use pspin_qfc::{BlochVector, ModelParams, Trajectory};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit_vector() -> impl Strategy<Value = BlochVector> {
    (-1.0f64..1.0, -PI..PI).prop_map(|(c, phi)| BlochVector::from_angles(c.acos(), phi))
}

fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("all zero", |v| {
        let t: f64 = v.iter().sum();
        (t > 1e-9).then(|| v.iter().map(|x| x / t).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_parity(p in 2u32..=6, s in 0.0f64..=1.0, u in 0.0f64..=1.0) {
        let params = ModelParams::mean_field(p, s).unwrap();
        let a = pseudo_potential(u, FRAC_PI_2, &params).unwrap();
        let b = pseudo_potential(-u, FRAC_PI_2, &params).unwrap();
        if p % 2 == 0 {
            prop_assert!((a - b).abs() < 1e-14);
        } else {
            // the odd term flips sign: V(u) - V(-u) = -(2s/p) u^p
            prop_assert!((a - b + 2.0 * s / p as f64 * u.powi(p as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_is_always_an_extremum(p in 2u32..=5, s in 0.0f64..=1.0) {
        let params = ModelParams::mean_field(p, s).unwrap();
        prop_assert!(extrema(&params).contains(&0.0));
    }

    #[test]
    fn flow_is_tangent_and_conserves_energy(p in 2u32..=4, s in 0.0f64..=1.0, x in unit_vector()) {
        let params = ModelParams::mean_field(p, s).unwrap();
        let f = flow_rhs(x, &params);
        prop_assert!(f.dot(&x).abs() < 1e-12);
        let grad = BlochVector::new(0.0, -(1.0 - s), -s * x.z.powi(p as i32 - 1));
        prop_assert!(grad.dot(&f).abs() < 1e-12);
    }

    #[test]
    fn rk4_conserves_energy(p in 2u32..=4, s in 0.05f64..0.95, x in unit_vector()) {
        let params = ModelParams::mean_field(p, s).unwrap();
        let energy = |x: &BlochVector| -(1.0 - s) * x.y - s / p as f64 * x.z.powi(p as i32);
        let tr = meanfield::integrate_steps(x, &params, 0.01, 2000, 100).unwrap();
        let e0 = energy(&x);
        for q in &tr.points {
            prop_assert!((energy(q) - e0).abs() < 1e-8);
            prop_assert!((q.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_rate_is_minimal_at_two_lambda(lambda in 0.01f64..10.0, f in 0.05f64..20.0) {
        let best = dephasing_rate(2.0 * lambda, lambda).unwrap();
        prop_assert!((best - lambda).abs() < 1e-12 * lambda.max(1.0));
        prop_assert!(dephasing_rate(f * lambda, lambda).unwrap() >= best - 1e-12);
    }

    #[test]
    fn pearson_is_bounded(a in prop::collection::vec(-5.0f64..5.0, 3..40), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = a.iter().map(|x| x * rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
        let r = pearson(&a, &b).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
    }

    #[test]
    fn similarity_is_in_unit_interval(
        xs in prop::collection::vec(unit_vector(), 5..30),
        ys in prop::collection::vec(unit_vector(), 30),
    ) {
        let n = xs.len();
        let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let a = Trajectory::new(times.clone(), xs).unwrap();
        let b = Trajectory::new(times, ys[..n].to_vec()).unwrap();
        let s = similarity(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn js_is_symmetric_and_bounded(p in distribution(12), q in distribution(12)) {
        let a = js_divergence(&p, &q).unwrap();
        let b = js_divergence(&q, &p).unwrap();
        prop_assert!((a - b).abs() < 1e-14);
        prop_assert!((0.0..=LN_2).contains(&a));
        prop_assert!(js_divergence(&p, &p).unwrap() < 1e-14);
    }

    #[test]
    fn gaussian_step_invariants(
        p in 2u32..=4,
        s in 0.0f64..=1.0,
        x in unit_vector(),
        log_n in 2.0f64..7.0,
        seed in 0u64..10_000,
    ) {
        let n = 10f64.powf(log_n).round() as u64;
        let config = ProtocolConfig::new(ModelParams::new(p, s, n).unwrap(), 0.01, 25.0, 1, seed).unwrap();
        let sp = config.step_params(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = GaussianSpinState::coherent(x, config.params.j()).unwrap();
        for _ in 0..20 {
            let draw = sample_measurement(&state, &sp, &mut rng);
            // recorded noise variables are consistent with the outcome
            prop_assert!((draw.eta1 * sp.sigma * sp.sigma - draw.m_theta).abs() <= 1e-9 * draw.m_theta.abs().max(1.0));
            if sp.w() > 0.0 {
                prop_assert!((draw.eta2 * sp.j / sp.w() - draw.m_theta).abs() <= 1e-9 * draw.m_theta.abs().max(1.0));
            }
            state = step(&state, &draw, &sp).unwrap();
            prop_assert!(state.mean.norm() <= 1.0 + 1e-9);
            prop_assert!(state.frame.orthonormality_error() < 1e-9);
        }
    }

    #[test]
    fn feedback_rotation_preserves_length(p in 2u32..=4, s in 0.0f64..=1.0, m in -1e4f64..1e4, x in unit_vector()) {
        let config = ProtocolConfig::new(ModelParams::new(p, s, 20_000).unwrap(), 0.01, 25.0, 1, 0).unwrap();
        let a = feedback_angles(m, &config.step_params(0));
        prop_assert!((a.apply(x).norm() - 1.0).abs() < 1e-12);
        prop_assert!((a.gamma - a.alpha.hypot(a.beta)).abs() < 1e-15);
    }

    #[test]
    fn trajectories_are_determined_by_the_seed(p in 2u32..=4, s in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut config = ProtocolConfig::new(ModelParams::new(p, s, 500).unwrap(), 0.01, 25.0, 30, seed).unwrap();
        config.record_stride = 7;
        let a = gaussian::run_trajectory(BlochVector::X, &config).unwrap();
        let b = gaussian::run_trajectory(BlochVector::X, &config).unwrap();
        prop_assert_eq!(&a, &b);
        let prop = ExactPropagator::new(40).unwrap();
        config.params.n = 40;
        let c = prop.run_trajectory(BlochVector::X, &config).unwrap();
        let d = prop.run_trajectory(BlochVector::X, &config).unwrap();
        prop_assert_eq!(c, d);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_step_keeps_the_norm(
        n in 2u64..=120,
        p in 2u32..=4,
        s in 0.0f64..=1.0,
        theta in 0.0f64..PI,
        phi in -PI..PI,
        seed in 0u64..1000,
    ) {
        let prop = ExactPropagator::new(n).unwrap();
        let config = ProtocolConfig::new(ModelParams::new(p, s, n).unwrap(), 0.01, 5.0, 1, seed).unwrap();
        let mut state = exact::scs_state(theta, phi, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            prop.qfc_step(&mut state, &config.step_params(0), &mut rng).unwrap();
            prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
