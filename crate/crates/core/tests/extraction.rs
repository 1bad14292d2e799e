use pauli_tomo::experiment::{estimate_x_from_real_counts, expected_counts};
use pauli_tomo::extraction::signed_angle_difference;
use pauli_tomo::model::reduce_channel_angles;
use pauli_tomo::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

fn random_rotation(rng: &mut StdRng) -> Mat3<f64> {
    AngleTriple::new(
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    )
    .rotation()
}

/// CP-valid, descending, with every gap at least `min_gap`.
fn random_lambda(rng: &mut StdRng, min_gap: f64) -> [f64; 3] {
    loop {
        let mut l = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        l.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if l[0] - l[1] >= min_gap && l[1] - l[2] >= min_gap && cp_check(&ContractionTriple(l)) {
            return l;
        }
    }
}

fn random_symmetric(rng: &mut StdRng) -> Mat3<f64> {
    let mut s = Mat3::zero();
    for i in 0..3 {
        for j in i..3 {
            let v = rng.random_range(-1.0..1.0);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// det(S − μI) by cofactor expansion.
fn char_poly(s: &Mat3<f64>, mu: f64) -> f64 {
    let m = |i: usize, j: usize| s[(i, j)] - if i == j { mu } else { 0.0 };
    m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
}

/// Roots of the characteristic polynomial by sign-change scan and
/// bisection; `None` when fewer than three sign changes are found.
fn cubic_roots_by_bisection(s: &Mat3<f64>) -> Option<[f64; 3]> {
    let bound = (0..3)
        .map(|i| (0..3).map(|j| s[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1e-9;
    let steps = 20_000;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev_f = char_poly(s, prev_x);
    for k in 1..=steps {
        let x = -bound + 2.0 * bound * k as f64 / steps as f64;
        let fx = char_poly(s, x);
        if prev_f == 0.0 {
            roots.push(prev_x);
        } else if prev_f.signum() != fx.signum() && fx != 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if char_poly(s, mid).signum() == char_poly(s, lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_f = fx;
    }
    if roots.len() != 3 {
        return None;
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Some([roots[0], roots[1], roots[2]])
}

#[test]
fn eigenvalues_match_characteristic_cubic_roots() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..500 {
        let s = random_symmetric(&mut rng);
        let Some(oracle) = cubic_roots_by_bisection(&s) else { continue };
        let e = eig3_symmetric(&s).unwrap();
        for k in 0..3 {
            assert!((e.values[k] - oracle[k]).abs() < 1e-10, "{:?} vs {oracle:?}", e.values);
        }
        checked += 1;
    }
    assert!(checked > 400);
}

#[test]
fn similarity_keeps_eigenvalues() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..200 {
        let l = random_lambda(&mut rng, 0.0);
        let r = random_rotation(&mut rng);
        let e = eig3_symmetric(&(r * Mat3::diag(l) * r.transpose())).unwrap();
        for k in 0..3 {
            assert!((e.values[k] - l[k]).abs() < 1e-13);
        }
    }
}

#[test]
fn symmetrize_is_a_projection() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..1000 {
        let a = Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let b = random_symmetric(&mut rng);
        let s = symmetrize(&ChannelMatrix(a));
        assert!((s - b).frobenius() <= (a - b).frobenius() + 1e-15);
    }
}

#[test]
fn round_trip_on_random_canonical_parameters() {
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..10_000 {
        let l = random_lambda(&mut rng, 1e-3);
        let phi = [
            rng.random_range(0.0..PI),
            rng.random_range(0.0..PI),
            rng.random_range(0.0..PI),
        ];
        let p = ChannelParams::new(l, phi);
        let est = extract_params(&compose_channel_matrix(&p).unwrap()).unwrap();
        for k in 0..3 {
            assert!((est.lambda_hat.0[k] - l[k]).abs() <= 1e-9, "{p:?} -> {est:?}");
            assert!(
                angle_distance(est.phi_hat.to_array()[k], phi[k]) <= 1e-9,
                "{p:?} -> {est:?}"
            );
        }
    }
}

#[test]
fn noise_free_counts_recover_parameters() {
    let p = ChannelParams::new([0.8f64, 0.65, 0.5], [0.3, 0.7, 0.2]);
    let a = compose_channel_matrix(&p).unwrap();
    let design = ExperimentDesign::new(
        AngleTriple::new(0.4, 1.0, 0.3),
        AngleTriple::new(2.0, 0.5, 1.2),
        1000,
    )
    .unwrap();
    let (theta, meas) = design.frames();
    let x = forward_outcomes(&a, &theta, &meas);
    let x_hat = estimate_x_from_real_counts(&expected_counts(&x, 1000), 1000);
    let est = extract_params(&estimate_channel_matrix(&x_hat, &theta, &meas)).unwrap();
    for k in 0..3 {
        assert!((est.lambda_hat.0[k] - p.lambda()[k]).abs() < 1e-9);
        assert!(angle_distance(est.phi_hat.to_array()[k], p.angles.to_array()[k]) < 1e-9);
    }
}

fn params_of(a: &Mat3<f64>) -> ([f64; 3], [f64; 3]) {
    let e = extract_params(&ChannelMatrix(*a)).unwrap();
    (e.lambda_hat.0, e.phi_hat.to_array())
}

#[test]
fn derivative_table_matches_finite_differences() {
    let h = 1e-6;
    for l in [[0.8, 0.65, 0.5], [0.9, 0.67, 0.6], [0.3, -0.1, -0.6]] {
        let lambda = ContractionTriple(l);
        let table = derivative_table(&lambda).unwrap();
        let base = Mat3::diag(l);

        for i in 0..3 {
            let mut plus = base;
            let mut minus = base;
            plus[(i, i)] += h;
            minus[(i, i)] -= h;
            let d = (params_of(&plus).0[i] - params_of(&minus).0[i]) / (2.0 * h);
            assert!((d - table.d_lambda[i]).abs() < 1e-4);
        }

        // Symmetric off-diagonal bump: â_{ab,s} moves by h.
        let expected = [(0, 1, 0, table.d_phi_z), (0, 2, 1, table.d_phi_y), (1, 2, 2, table.d_phi_x)];
        for (a, b, which, want) in expected {
            let mut plus = base;
            let mut minus = base;
            plus[(a, b)] += h;
            plus[(b, a)] += h;
            minus[(a, b)] -= h;
            minus[(b, a)] -= h;
            let (lp, pp) = params_of(&plus);
            let (lm, pm) = params_of(&minus);
            for k in 0..3 {
                let d = signed_angle_difference(pp[k], pm[k]) / (2.0 * h);
                let target = if k == which { want } else { 0.0 };
                assert!(
                    (d - target).abs() <= 1e-4 * want.abs(),
                    "λ={l:?} pair ({a},{b}) angle {k}: {d} vs {target}"
                );
                assert!(((lp[k] - lm[k]) / (2.0 * h)).abs() < 1e-4);
            }

            // The antisymmetric part is discarded by symmetrization.
            let mut skew = base;
            skew[(a, b)] += h;
            skew[(b, a)] -= h;
            let (ls, ps) = params_of(&skew);
            for k in 0..3 {
                assert!((ls[k] - l[k]).abs() < 1e-14);
                assert!(angle_distance(ps[k], 0.0) < 1e-14);
            }
        }
    }
}

#[test]
fn linearization_agrees_to_second_order() {
    let mut rng = StdRng::seed_from_u64(15);
    let eps = 1e-6;
    for _ in 0..200 {
        let l = random_lambda(&mut rng, 0.1);
        let a = ChannelMatrix::diag(l);
        let e = random_symmetric(&mut rng);
        let a_hat = ChannelMatrix(a.0 + e.scale(eps));
        let est = extract_params(&a_hat).unwrap();
        let (lt, pt) = linearized_estimates(&a, &a_hat).unwrap();
        // Small negative angles map to the canonical domain with sign flips
        // on the later angles; reduce the linearized angles the same way.
        let pt = reduce_channel_angles(pt);
        for k in 0..3 {
            assert!((est.lambda_hat.0[k] - lt.0[k]).abs() <= 1e-9);
            let d = signed_angle_difference(est.phi_hat.to_array()[k], pt.to_array()[k]);
            assert!(d.abs() <= 1e-9, "{d}");
        }
    }
}

#[test]
fn linearized_estimates_are_unbiased() {
    let l = [0.8f64, 0.65, 0.5];
    let a = ChannelMatrix::diag(l);
    let design = ExperimentDesign::new(
        AngleTriple::new(0.7, 0.3, 0.2),
        AngleTriple::new(1.9, 2.4, 1.1),
        1000,
    )
    .unwrap();
    let (theta, meas) = design.frames();
    let trials = 10_000u64;
    let samples: Vec<[f64; 6]> = (0..trials)
        .map(|t| {
            let (_, a_hat) = simulate_channel_estimate(&a, &theta, &meas, 1000, 1, t).unwrap();
            let (lt, pt) = linearized_estimates(&a, &a_hat).unwrap();
            [lt.0[0], lt.0[1], lt.0[2], pt.z, pt.y, pt.x]
        })
        .collect();
    let truth = [l[0], l[1], l[2], 0.0, 0.0, 0.0];
    for k in 0..6 {
        let (mean, se) = pauli_tomo::risk::mean_and_std_err(samples.iter().map(|s| s[k]));
        let se = se.unwrap();
        assert!((mean - truth[k]).abs() <= 3.0 * se, "component {k}: {mean} vs {} (se {se})", truth[k]);
    }
}

#[test]
fn linearization_error_shrinks_like_one_over_n() {
    let l = [0.8f64, 0.65, 0.5];
    let a = ChannelMatrix::diag(l);
    let (theta, meas) = ExperimentDesign::aligned(1).unwrap().frames();
    let mean_gap = |shots: u64| -> f64 {
        let trials = 2000;
        (0..trials)
            .map(|t| {
                let (_, a_hat) = simulate_channel_estimate(&a, &theta, &meas, shots, 5, t).unwrap();
                let est = extract_params(&a_hat).unwrap();
                let (lt, _) = linearized_estimates(&a, &a_hat).unwrap();
                (0..3).map(|k| (est.lambda_hat.0[k] - lt.0[k]).abs()).sum::<f64>()
            })
            .sum::<f64>()
            / trials as f64
    };
    let gaps = [mean_gap(1_000), mean_gap(10_000), mean_gap(100_000)];
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((6.0..16.0).contains(&ratio), "{gaps:?}");
    }
}

proptest! {
    #[test]
    fn eigen_residual_and_order(entries in prop::array::uniform6(-1.0f64..1.0), near in 0usize..3, tiny in -1e-7f64..1e-7) {
        let [a, b, c, d, e, f] = entries;
        let mut s = Mat3([[a, b, c], [b, d, e], [c, e, f]]);
        // Push some inputs close to a repeated eigenvalue.
        if near == 1 {
            let r = AngleTriple::new(a, b, c).rotation();
            s = r * Mat3::diag([d, d + tiny, f]) * r.transpose();
            s = symmetrize(&ChannelMatrix(s));
        }
        let eig = eig3_symmetric(&s).unwrap();
        prop_assert!(eig.residual(&s) <= 1e-10);
        prop_assert!(eig.values[0] >= eig.values[1] && eig.values[1] >= eig.values[2]);
        prop_assert!((eig.vectors.det() - 1.0).abs() < 1e-10);
        prop_assert!(eig.vectors.orthogonality_defect() < 1e-10);
    }

    #[test]
    fn extracted_contractions_are_sorted(entries in prop::array::uniform9(-1.0f64..1.0)) {
        let m = Mat3([[entries[0], entries[1], entries[2]], [entries[3], entries[4], entries[5]], [entries[6], entries[7], entries[8]]]);
        let est = extract_params(&ChannelMatrix(m)).unwrap();
        prop_assert!(est.lambda_hat.is_sorted_desc());
        for a in est.phi_hat.to_array() {
            prop_assert!((0.0..PI).contains(&a));
        }
    }

    #[test]
    fn angle_distance_range(a in -20.0f64..20.0, b in -20.0f64..20.0) {
        let d = angle_distance(a, b);
        prop_assert!((0.0..=PI / 2.0).contains(&d));
        prop_assert!((angle_distance(a + PI, b) - d).abs() < 1e-12);
    }
}
