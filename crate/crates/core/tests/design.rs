use pauli_tomo::design::*;
use pauli_tomo::risk::*;
use pauli_tomo::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

fn h_at(lambda: &ContractionTriple<f64>, tau: &AngleTriple<f64>, vartheta: &AngleTriple<f64>, shots: u64) -> f64 {
    analytic_h_tilde(
        lambda,
        &OrthogonalFrame::from_angles(vartheta).unwrap(),
        &OrthogonalFrame::from_angles(tau).unwrap(),
        shots,
    )
    .unwrap()
}

/// Distance between two angles on the circle of circumference `π/2`.
fn quarter_turn_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(FRAC_PI_2);
    d.min(FRAC_PI_2 - d)
}

#[test]
fn optimum_for_the_reference_channel() {
    let lambda = ContractionTriple([0.8f64, 0.65, 0.5]);
    let cfg = OptimizerConfig::default();
    let opt = optimize_angle_risk(&lambda, 1000, &cfg, false).unwrap();
    assert!((opt.h_min - 0.03634).abs() <= 5e-5, "{}", opt.h_min);
    // The reported design really has the reported loss.
    assert!((h_at(&lambda, &opt.tau, &opt.vartheta, 1000) - opt.h_min).abs() < 1e-12);
    assert!(experiment::check_design_angles(&opt.tau).is_ok());
    assert!(experiment::check_design_angles(&opt.vartheta).is_ok());

    let report = conjecture_report(&lambda, 1000, &cfg).unwrap();
    assert!(report.optimum.h_min <= report.h_zero_design);
    assert!(report.optimum.h_min <= report.h_candidate_a + 1e-15);
    assert!(report.optimum.h_min <= report.h_candidate_b + 1e-15);
    assert!((report.h_zero_design - 0.05).abs() < 1e-12);
}

#[test]
fn optimum_scales_inversely_with_shots_and_is_deterministic() {
    let lambda = ContractionTriple([0.6f64, 0.2, -0.1]);
    let cfg = OptimizerConfig::default();
    let a = optimize_angle_risk(&lambda, 1000, &cfg, false).unwrap();
    let b = optimize_angle_risk(&lambda, 10_000, &cfg, false).unwrap();
    assert!((a.h_min / b.h_min - 10.0).abs() < 1e-9);
    let again = optimize_angle_risk(&lambda, 1000, &cfg, false).unwrap();
    assert_eq!(a.h_min.to_bits(), again.h_min.to_bits());
    assert_eq!(a.tau, again.tau);
    assert_eq!(a.vartheta, again.vartheta);
}

#[test]
fn surface_covers_the_grid() {
    let lambda = ContractionTriple([0.8f64, 0.65, 0.5]);
    let cfg = OptimizerConfig { grid: 4, ..OptimizerConfig::default() };
    let opt = optimize_angle_risk(&lambda, 1000, &cfg, true).unwrap();
    let surface = opt.surface.unwrap();
    assert_eq!(surface.len(), 4usize.pow(6));
    for p in &surface {
        assert!((h_at(&lambda, &p.tau, &p.vartheta, 1000) - p.h).abs() < 1e-12);
        assert!(p.h >= opt.h_min - 1e-12);
    }
}

#[test]
fn planar_search_agrees_with_closed_form() {
    let cfg = OptimizerConfig::default();
    for (l1, l2) in [(1.0, 0.0), (0.6, -0.3), (0.9, 0.5), (0.5, -0.45), (0.2, -0.7), (0.95, 0.9)] {
        let search = optimize_planar::<f64>(l1, l2, 1000, &cfg, false).unwrap();
        let cf = search.closed_form;
        assert!((search.h_min - cf.value).abs() <= 1e-8 * cf.value, "{l1} {l2}: {} vs {}", search.h_min, cf.value);
        for found in [search.tau, search.vartheta] {
            let d = quarter_turn_distance(found, cf.tau).min(quarter_turn_distance(found, cf.mirror));
            assert!(d < 1e-4, "{l1} {l2}: {found} vs {} / {}", cf.tau, cf.mirror);
        }
        let expected_regime = if (l1 + l2) * (l1 + l2) >= 2.0 * (l1 - l2) * (l1 - l2) {
            PlanarRegime::Diagonal
        } else {
            PlanarRegime::Split
        };
        assert_eq!(cf.regime, expected_regime);
    }
    let cf = h2_optimal_design(1.0f64, 0.0, 1).unwrap();
    assert!((cf.value - 2.875 / 8.0).abs() < 1e-12);
    let diag = h2_optimal_design(0.9f64, 0.5, 1).unwrap();
    assert!((diag.tau - FRAC_PI_4).abs() < 1e-15);
}

#[test]
fn two_step_aligns_with_an_unrotated_channel() {
    let p = ChannelParams::new([0.8f64, 0.65, 0.5], [0.0, 0.0, 0.0]);
    let budget = 9_000_000;
    let cfg = TwoStepConfig::default();
    let (n1, n2) = split_budget(budget, cfg.split).unwrap();
    assert_eq!((n1, n2), (200_000, 800_000));
    let run = two_step_tomography(&p, budget, &cfg, 5, 0).unwrap();
    let zero = AngleTriple::new(0.0, 0.0, 0.0);
    assert!(design_distance(&run.stage2_design.meas_angles, &zero).unwrap() < 0.02);
    assert_eq!(run.stage2_design.shots, n2);

    let report = two_step_risk(&p, budget, &cfg, 200, 5).unwrap();
    let bound = bound_g(&p.contraction, n2);
    assert_eq!(report.g_bound, bound);
    assert!((report.g - bound).abs() <= 4.0 * report.g_std_err.unwrap(), "{} vs {bound}", report.g);
}

#[test]
fn two_step_beats_a_misaligned_single_step() {
    // A channel close to a unitary: aligning the design pays for the first step.
    let p = ChannelParams::new([0.9f64, -0.8, -0.9], [0.3, 0.7, 0.2]);
    let budget = 90_000;
    let single = ExperimentDesign::symmetric(AngleTriple::new(0.4, 0.4, 0.4), budget / 9).unwrap();
    let single_g = analytic_report(&p, &single).unwrap().g;
    let single_mc = mc_loss(&p, &single, 200, 9).unwrap();
    assert!((single_mc.g - single_g).abs() <= 4.0 * single_mc.g_std_err.unwrap());
    let two = two_step_risk(&p, budget, &TwoStepConfig::default(), 200, 9).unwrap();
    let se = two.g_std_err.unwrap().hypot(single_mc.g_std_err.unwrap());
    assert!(two.g + 4.0 * se < single_mc.g, "two-step {} vs single {}", two.g, single_mc.g);
}
