use gstore::asymptotics::{correlation_field, g_limit, Asymptotics};
use gstore::io::{decode_gsp1, encode_gsp1, to_json};
use gstore::mc::McEstimate;
use gstore::queue::{brute_force_sup, reflect_lindley};
use gstore::sampling::{GridSpec, SampledPath};
use gstore::variance::VarianceModel;
use proptest::prelude::*;

fn path_from(values: Vec<f64>, step: f64) -> SampledPath {
    let grid = GridSpec::new(step, values.len(), 0.0).unwrap();
    SampledPath { grid, values, seed: None }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gsp1_round_trips(values in prop::collection::vec(-1e6f64..1e6, 2..200), step in 1e-6f64..10.0, origin in -100f64..100.0) {
        let grid = GridSpec::new(step, values.len(), origin).unwrap();
        let (g, v) = decode_gsp1(&encode_gsp1(&grid, &values)).unwrap();
        prop_assert_eq!(g, grid);
        prop_assert_eq!(v, values);
    }

    #[test]
    fn json_floats_round_trip(xs in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..50)) {
        let back: Vec<f64> = serde_json::from_str(&to_json(&xs).unwrap()).unwrap();
        prop_assert_eq!(back, xs);
    }

    #[test]
    fn lindley_matches_brute_force(steps in prop::collection::vec(-2f64..2.0, 1..300), c in 0.01f64..5.0) {
        let mut x = vec![0.0];
        for s in &steps {
            x.push(x.last().unwrap() + s);
        }
        let path = path_from(x, 0.1);
        let a = reflect_lindley(&path, c, 0.0).unwrap();
        let b = brute_force_sup(&path, c).unwrap();
        for (p, q) in a.values.iter().zip(&b.values) {
            prop_assert!(*p >= 0.0);
            prop_assert!((p - q).abs() <= 1e-9 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn lindley_is_monotone_in_initial_content(steps in prop::collection::vec(-2f64..2.0, 1..200), q0 in 0f64..5.0, extra in 0f64..5.0) {
        let mut x = vec![0.0];
        for s in &steps {
            x.push(x.last().unwrap() + s);
        }
        let path = path_from(x, 0.1);
        let lo = reflect_lindley(&path, 1.0, q0).unwrap();
        let hi = reflect_lindley(&path, 1.0, q0 + extra).unwrap();
        for (a, b) in lo.values.iter().zip(&hi.values) {
            prop_assert!(b >= a);
            prop_assert!(b - a <= extra + 1e-12);
        }
    }

    #[test]
    fn pooling_equals_joint_estimate(xs in prop::collection::vec(0f64..10.0, 4..200), cut in 0.1f64..0.9) {
        let k = ((xs.len() as f64 * cut) as usize).clamp(2, xs.len() - 2);
        let joint = McEstimate::from_samples(&xs, 1, "").unwrap();
        let a = McEstimate::from_samples(&xs[..k], 1, "").unwrap();
        let b = McEstimate::from_samples(&xs[k..], 1, "").unwrap();
        let pooled = McEstimate::pool(&[a, b]).unwrap();
        prop_assert_eq!(pooled.replicas, joint.replicas);
        prop_assert!((pooled.value - joint.value).abs() <= 1e-12 * (1.0 + joint.value.abs()));
        prop_assert!((pooled.stderr - joint.stderr).abs() <= 1e-9 * (1.0 + joint.stderr));
    }

    #[test]
    fn level_inverse_round_trips(h in 0.05f64..0.95, c in 0.1f64..10.0, lu in -3f64..12.0) {
        let model = VarianceModel::fbm(h).unwrap();
        let asym = Asymptotics::new(&model, c).unwrap();
        let u = 10f64.powf(lu);
        let m = asym.m(u).unwrap();
        let back = asym.m_inverse(m).unwrap();
        prop_assert!(((back - u) / u).abs() < 1e-10);
        prop_assert!(asym.m(u * 1.01).unwrap() > m);
    }

    #[test]
    fn sigma_u_is_at_most_one(h in 0.1f64..0.9, lu in 0f64..6.0, tau in 0.01f64..20.0) {
        let model = VarianceModel::fbm(h).unwrap();
        let asym = Asymptotics::new(&model, 1.0).unwrap();
        let s = asym.sigma_u(10f64.powf(lu), tau).unwrap();
        prop_assert!(s > 0.0 && s <= 1.0 + 1e-12);
    }

    #[test]
    fn g_is_even_and_bounded(alpha in 0.05f64..0.95, t in 0f64..50.0) {
        let ts = alpha / (1.0 - alpha);
        let g = g_limit(alpha, ts, t);
        prop_assert!((g - g_limit(alpha, ts, -t)).abs() < 1e-12);
        prop_assert!(g <= 1.0 + 1e-12 && g >= -1.0);
    }

    #[test]
    fn correlation_is_one_on_the_diagonal(h in 0.1f64..0.9, u in 1f64..1e4, s in 0f64..5.0, tau in 0.1f64..5.0) {
        let model = VarianceModel::fbm(h).unwrap();
        let r = correlation_field(&model, u, u, s, tau, s, tau);
        prop_assert!((r - 1.0).abs() < 1e-9);
    }
}

#[test]
fn g_starts_at_one() {
    for alpha in [0.2, 0.5, 0.8] {
        assert!((g_limit(alpha, 1.0, 0.0) - 1.0).abs() < 1e-15);
    }
}
