use pauli_tomo::experiment::{check_design_angles, reduce_design_angles, sample_counts_trial};
use pauli_tomo::model::reduce_channel_angles;
use pauli_tomo::risk::analytic_h_tilde;
use pauli_tomo::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn lambda_strategy() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0f64..1.0)
        .prop_map(|mut l| {
            l.sort_by(|a, b| b.partial_cmp(a).unwrap());
            l
        })
        .prop_filter("complete positivity", |l| cp_check(&ContractionTriple(*l)))
}

fn angle_strategy() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-10.0f64..10.0)
}

proptest! {
    #[test]
    fn rotations_are_proper_orthogonal(a in angle_strategy()) {
        let r = AngleTriple::from_array(a).rotation();
        prop_assert!(r.orthogonality_defect() < 1e-14);
        prop_assert!((r.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn composed_matrix_is_symmetric_with_the_given_spectrum(l in lambda_strategy(), a in angle_strategy()) {
        let m = compose_channel_matrix(&ChannelParams::new(l, a)).unwrap();
        prop_assert_eq!(m.0.asymmetry(), 0.0);
        let e = eig3_symmetric(&m.0).unwrap();
        for k in 0..3 {
            prop_assert!((e.values[k] - l[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_reduction_keeps_the_channel(l in lambda_strategy(), a in angle_strategy()) {
        let p = ChannelParams::new(l, a);
        let reduced = reduce_channel_angles(p.angles);
        for v in reduced.to_array() {
            prop_assert!((0.0..PI).contains(&v));
        }
        let q = ChannelParams { angles: reduced, ..p };
        let d = compose_channel_matrix(&p).unwrap().0.max_abs_diff(&compose_channel_matrix(&q).unwrap().0);
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn canonical_form_is_idempotent(l in lambda_strategy(), a in angle_strategy()) {
        let first = extract_params(&compose_channel_matrix(&ChannelParams::new(l, a)).unwrap()).unwrap();
        let again = extract_params(&compose_channel_matrix(&ChannelParams {
            contraction: first.lambda_hat,
            angles: first.phi_hat,
        }).unwrap()).unwrap();
        for k in 0..3 {
            prop_assert!((first.lambda_hat.0[k] - again.lambda_hat.0[k]).abs() < 1e-12);
            prop_assert!(angle_distance(first.phi_hat.to_array()[k], again.phi_hat.to_array()[k]) < 1e-6);
        }
    }

    #[test]
    fn cp_channels_map_states_to_states(l in lambda_strategy(), a in angle_strategy(), v in prop::array::uniform3(-1.0f64..1.0)) {
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() <= 1.0);
        let m = compose_channel_matrix(&ChannelParams::new(l, a)).unwrap();
        let out = apply_channel(&m, &BlochVector::state(Vec3(v)).unwrap());
        prop_assert!(out.norm() <= 1.0 + 1e-12);
        let rho = bloch_to_density(&out).unwrap();
        let ev = rho.eigenvalues();
        prop_assert!(ev[1] >= -1e-12);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn design_reduction_lands_in_range_and_keeps_the_loss(tau in angle_strategy(), vartheta in angle_strategy()) {
        let lambda = ContractionTriple([0.8, 0.65, 0.5]);
        let (t, v) = (AngleTriple::from_array(tau), AngleTriple::from_array(vartheta));
        let (rt, rv) = (reduce_design_angles(&t).unwrap(), reduce_design_angles(&v).unwrap());
        prop_assert!(check_design_angles(&rt).is_ok());
        prop_assert!(check_design_angles(&rv).is_ok());
        let h = |m: &AngleTriple<f64>, th: &AngleTriple<f64>| {
            analytic_h_tilde(
                &lambda,
                &OrthogonalFrame::from_angles(th).unwrap(),
                &OrthogonalFrame::from_angles(m).unwrap(),
                1000,
            )
            .unwrap()
        };
        prop_assert!((h(&t, &v) - h(&rt, &rv)).abs() < 1e-14);
    }

    #[test]
    fn counts_stay_within_shots(l in lambda_strategy(), a in angle_strategy(), seed in any::<u64>(), shots in 1u64..100_000) {
        let m = compose_channel_matrix(&ChannelParams::new(l, a)).unwrap();
        let (theta, meas) = ExperimentDesign::symmetric(AngleTriple::new(0.3, 0.2, 0.1), shots).unwrap().frames();
        let c = sample_counts_trial(&forward_outcomes(&m, &theta, &meas), shots, seed, 0).unwrap();
        for row in c.n {
            for n in row {
                prop_assert!(n <= shots);
            }
        }
    }
}

#[test]
fn outcomes_are_measurement_probabilities() {
    let p = ChannelParams::new([0.8f64, 0.65, 0.5], [0.3, 0.7, 0.2]);
    let a = compose_channel_matrix(&p).unwrap();
    let design = ExperimentDesign::new(AngleTriple::new(0.5, 1.0, 0.2), AngleTriple::new(2.5, 0.4, 1.3), 10).unwrap();
    let (theta, meas) = design.frames();
    let x = forward_outcomes(&a, &theta, &meas);
    for i in 0..3 {
        for j in 0..3 {
            let input = BlochVector::unit(theta.matrix().col(j)).unwrap();
            let m = BlochVector::unit(meas.matrix().col(i)).unwrap();
            let prob = measurement_probability(&m, &apply_channel(&a, &input)).unwrap();
            assert!((2.0 * prob - 1.0 - x.0[(i, j)]).abs() < 1e-15);
        }
    }
}

#[test]
fn f32_pipeline_tracks_f64() {
    let p64 = ChannelParams::new([0.8f64, 0.65, 0.5], [0.3, 0.7, 0.2]);
    let p32 = ChannelParams::new([0.8f32, 0.65, 0.5], [0.3, 0.7, 0.2]);
    let e64 = extract_params(&compose_channel_matrix(&p64).unwrap()).unwrap();
    let e32 = extract_params(&compose_channel_matrix(&p32).unwrap()).unwrap();
    for k in 0..3 {
        assert!((e64.lambda_hat.0[k] - e32.lambda_hat.0[k] as f64).abs() < 1e-5);
        assert!((e64.phi_hat.to_array()[k] - e32.phi_hat.to_array()[k] as f64).abs() < 1e-4);
    }
}
