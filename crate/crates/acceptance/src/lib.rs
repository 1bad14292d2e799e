//! Pass/fail checks of the library against reference values and independent
//! reference computations.

pub mod oracle;

use pauli_tomo::design::{conjecture_report, OptimizerConfig};
use pauli_tomo::risk::{
    analytic_f, analytic_g_tilde, analytic_h2, analytic_h_tilde, analytic_losses, analytic_report, bound_f, bound_g,
    h2_optimal_design, mc_loss, output_error_ratio, PlanarRegime,
};
use pauli_tomo::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} [{:>2}] {}: {}", self.id, self.name, self.detail)
    }
}

pub type Criterion = fn() -> Verdict;

pub const CRITERIA: [Criterion; 12] = [
    zero_design_value,
    conjecture_points,
    reference_optimum,
    second_channel_values,
    matrix_loss_bound,
    contraction_loss_bound,
    planar_closed_form,
    unbiased_estimator,
    monte_carlo_agreement,
    round_trip,
    rotational_invariance,
    output_error_proportionality,
];

pub fn run_all() -> Vec<Verdict> {
    CRITERIA.iter().map(|c| c()).collect()
}

const SHOTS: u64 = 1000;
const FIRST_CHANNEL: [f64; 3] = [0.8, 0.65, 0.5];
const SECOND_CHANNEL: [f64; 3] = [0.9, 0.67, 0.6];

fn frame(z: f64, y: f64, x: f64) -> OrthogonalFrame<f64> {
    OrthogonalFrame::from_angles(&AngleTriple::new(z, y, x)).expect("finite angles")
}

fn as_m3(m: &Mat3<f64>) -> oracle::M3 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn h_symmetric(lambda: [f64; 3], angles: (f64, f64, f64)) -> f64 {
    let f = frame(angles.0, angles.1, angles.2);
    analytic_h_tilde(&ContractionTriple(lambda), &f, &f, SHOTS).expect("separated spectrum")
}

fn random_lambda(rng: &mut StdRng, min_gap: f64) -> [f64; 3] {
    loop {
        let mut l: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        l.sort_by(|a, b| b.total_cmp(a));
        if l[0] - l[1] >= min_gap && l[1] - l[2] >= min_gap && cp_check(&ContractionTriple(l)) {
            return l;
        }
    }
}

fn random_angles(rng: &mut StdRng) -> (f64, f64, f64) {
    (
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    )
}

fn rel_err(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

pub fn zero_design_value() -> Verdict {
    let h = h_symmetric(FIRST_CHANNEL, (0.0, 0.0, 0.0));
    Verdict {
        id: 1,
        name: "reference channel, zero design",
        passed: (h - 0.05).abs() <= 1e-12,
        detail: format!("h̃ = {h} (expected 0.05 ± 1e-12)"),
    }
}

pub fn conjecture_points() -> Verdict {
    let a = h_symmetric(FIRST_CHANNEL, (FRAC_PI_4, FRAC_PI_4, 0.0));
    let b = h_symmetric(FIRST_CHANNEL, (FRAC_PI_4, 0.0, FRAC_PI_4));
    Verdict {
        id: 2,
        name: "reference channel, conjectured designs",
        passed: (a - 0.03676).abs() <= 5e-5 && (b - 0.03676).abs() <= 5e-5,
        detail: format!("h̃(π/4,π/4,0) = {a:.7}, h̃(π/4,0,π/4) = {b:.7} (expected 0.03676 ± 5e-5)"),
    }
}

pub fn reference_optimum() -> Verdict {
    let lambda = ContractionTriple(FIRST_CHANNEL);
    let report = match conjecture_report(&lambda, SHOTS, &OptimizerConfig::default()) {
        Ok(r) => r,
        Err(e) => return failed(3, "reference channel, optimum", e),
    };
    let opt = &report.optimum;
    let (t, v) = (opt.tau, opt.vartheta);
    let q = oracle::mul(
        &oracle::transpose(&oracle::rotation(t.z, t.y, t.x)),
        &oracle::rotation(v.z, v.y, v.x),
    );
    let frame_defect = oracle::signed_permutation_defect(&q);
    let passed = (opt.h_min - 0.03634).abs() <= 5e-5 && report.symmetry_residual <= 1e-3 && frame_defect <= 1e-3;
    Verdict {
        id: 3,
        name: "reference channel, optimum",
        passed,
        detail: format!(
            "h_min = {:.7} (expected 0.03634 ± 5e-5), τ* = ({:.4}, {:.4}, {:.4}), ϑ* = ({:.4}, {:.4}, {:.4}), \
             τ*−ϑ* residual = {:.1e} up to relabelling, frame defect = {frame_defect:.1e} (≤ 1e-3)",
            opt.h_min, t.z, t.y, t.x, v.z, v.y, v.x, report.symmetry_residual
        ),
    }
}

pub fn second_channel_values() -> Verdict {
    let lambda = ContractionTriple(SECOND_CHANNEL);
    let report = match conjecture_report(&lambda, SHOTS, &OptimizerConfig::default()) {
        Ok(r) => r,
        Err(e) => return failed(4, "second channel, optimum and conjectured designs", e),
    };
    let id = oracle::diag([1.0; 3]);
    let (_, _, h_zero_oracle) = oracle::losses(SECOND_CHANNEL, &id, &id, SHOTS);
    let zero_ok = (report.h_zero_design - h_zero_oracle).abs() <= 1e-12;
    let min_ok = (report.optimum.h_min - 0.01659).abs() <= 5e-5;
    let conj_ok = (report.h_candidate_a - 0.01675).abs() <= 5e-5 && (report.h_candidate_b - 0.01675).abs() <= 5e-5;
    Verdict {
        id: 4,
        name: "second channel, optimum and conjectured designs",
        passed: zero_ok && min_ok && conj_ok,
        detail: format!(
            "h_min = {:.7} (expected 0.01659 ± 5e-5), conjectured designs {:.7} / {:.7} (expected 0.01675 ± 5e-5), \
             zero design {:.7} vs reference computation {:.7}",
            report.optimum.h_min, report.h_candidate_a, report.h_candidate_b, report.h_zero_design, h_zero_oracle
        ),
    }
}

/// Bound check shared by the matrix loss and (with `contraction`) the
/// contraction loss.
fn bound_criterion(id: u32, name: &'static str, seed: u64, contraction: bool) -> Verdict {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst_slack = f64::INFINITY;
    let mut worst_equality: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for _ in 0..100 {
        let l = random_lambda(&mut rng, 0.0);
        let lambda = ContractionTriple(l);
        let bound = if contraction { bound_g(&lambda, SHOTS) } else { bound_f(&lambda, SHOTS) };
        let loss = |t: &OrthogonalFrame<f64>, m: &OrthogonalFrame<f64>| {
            if contraction {
                analytic_g_tilde(&lambda, t, m, SHOTS)
            } else {
                analytic_f(&lambda, t, m, SHOTS)
            }
        };
        let id = OrthogonalFrame::identity();
        worst_equality = worst_equality.max((loss(&id, &id) - bound).abs());
        for _ in 0..100 {
            let (a, b) = (random_angles(&mut rng), random_angles(&mut rng));
            let (t, m) = (frame(a.0, a.1, a.2), frame(b.0, b.1, b.2));
            let value = loss(&t, &m);
            worst_slack = worst_slack.min(value - bound);
            let (f, g, _) = oracle::losses(l, &as_m3(t.matrix()), &as_m3(m.matrix()), SHOTS);
            let reference = if contraction { g } else { f };
            worst_oracle = worst_oracle.max(rel_err(value, reference));
        }
    }
    Verdict {
        id,
        name,
        passed: worst_slack >= -1e-12 && worst_equality <= 1e-12 && worst_oracle <= 1e-12,
        detail: format!(
            "min(loss − bound) = {worst_slack:.3e} (≥ −1e-12), |loss − bound| at aligned design ≤ {worst_equality:.1e}, \
             relative deviation from covariance computation ≤ {worst_oracle:.1e}"
        ),
    }
}

pub fn matrix_loss_bound() -> Verdict {
    bound_criterion(5, "matrix loss bound and attainment", 5, false)
}

pub fn contraction_loss_bound() -> Verdict {
    bound_criterion(6, "contraction loss bound and attainment", 6, true)
}

/// Sampling margins on `r = (λ₁+λ₂)²/(λ₁−λ₂)²`. Near the regime boundary
/// `r = 2` the minimum is too flat for a 1e-4 grid to locate to 2e-4. Near
/// `r = 0` (λ₁ ≈ −λ₂) the minimizers spread into a curve of near-equal
/// values, a continuum at `r = 0`, so the location is not identifiable.
const REGIME_MARGIN: f64 = 0.05;
const ANTIPODAL_MARGIN: f64 = 0.05;

fn quarter_turn_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(FRAC_PI_2);
    d.min(FRAC_PI_2 - d)
}

/// Brute-force minimum of the planar loss over `[0, π/2)²`: a 1e-2 grid,
/// then a 1e-4 grid over ±0.02 around each coarse local minimum.
fn planar_grid_minimum(l1: f64, l2: f64) -> (f64, f64, f64) {
    let coarse_n = (FRAC_PI_2 / 1e-2).ceil() as usize;
    let step = FRAC_PI_2 / coarse_n as f64;
    let coarse: Vec<Vec<f64>> = (0..coarse_n)
        .map(|i| {
            (0..coarse_n)
                .map(|j| oracle::planar_loss(l1, l2, i as f64 * step, j as f64 * step, SHOTS))
                .collect()
        })
        .collect();
    let mut seeds = Vec::new();
    for i in 0..coarse_n {
        for j in 0..coarse_n {
            let v = coarse[i][j];
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    let ii = (i as i64 + di).rem_euclid(coarse_n as i64) as usize;
                    let jj = (j as i64 + dj).rem_euclid(coarse_n as i64) as usize;
                    coarse[ii][jj] >= v
                })
            });
            if is_min {
                seeds.push((v, i as f64 * step, j as f64 * step));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    seeds.truncate(4);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &(_, ti, vi) in &seeds {
        for a in -200..=200 {
            for b in -200..=200 {
                let (t, v) = (ti + a as f64 * 1e-4, vi + b as f64 * 1e-4);
                let h = oracle::planar_loss(l1, l2, t, v, SHOTS);
                if h < best.0 {
                    best = (h, t, v);
                }
            }
        }
    }
    best
}

pub fn planar_closed_form() -> Verdict {
    let name = "planar closed-form optimum";
    let mut rng = StdRng::seed_from_u64(7);
    let mut pairs = Vec::new();
    let (mut diagonal, mut split) = (0, 0);
    while diagonal + split < 50 {
        let l1: f64 = rng.random_range(-1.0..1.0);
        let l2: f64 = rng.random_range(-1.0..l1);
        if (l1 + l2).abs() > 1.0 || (l1 - l2).abs() > 1.0 {
            continue;
        }
        let r = (l1 + l2).powi(2) / (l1 - l2).powi(2);
        if (r - 2.0).abs() < REGIME_MARGIN || r < ANTIPODAL_MARGIN {
            continue;
        }
        if r > 2.0 && diagonal < 25 {
            diagonal += 1;
            pairs.push((l1, l2));
        } else if r < 2.0 && split < 25 {
            split += 1;
            pairs.push((l1, l2));
        }
    }
    let results: Vec<Result<(f64, f64, bool)>> = pairs
        .par_iter()
        .map(|&(l1, l2)| {
            let cf = h2_optimal_design(l1, l2, SHOTS)?;
            let regime_ok = (cf.regime == PlanarRegime::Diagonal) == ((l1 + l2).powi(2) >= 2.0 * (l1 - l2).powi(2));
            let (h, t, v) = planar_grid_minimum(l1, l2);
            let loc = |a: f64| quarter_turn_distance(a, cf.tau).min(quarter_turn_distance(a, cf.mirror));
            let value_at_cf = analytic_h2(l1, l2, cf.tau, cf.vartheta, SHOTS)?;
            let consistent = rel_err(value_at_cf, cf.value) <= 1e-12
                && rel_err(oracle::planar_loss(l1, l2, cf.tau, cf.vartheta, SHOTS), cf.value) <= 1e-12;
            Ok((loc(t).max(loc(v)), rel_err(h, cf.value), regime_ok && consistent))
        })
        .collect();
    let mut worst_loc: f64 = 0.0;
    let mut worst_val: f64 = 0.0;
    let mut consistent = true;
    for r in results {
        match r {
            Ok((l, v, ok)) => {
                worst_loc = worst_loc.max(l);
                worst_val = worst_val.max(v);
                consistent &= ok;
            }
            Err(e) => return failed(7, name, e),
        }
    }
    let fixed = (|| -> Result<(bool, bool)> {
        let a = h2_optimal_design(0.8, 0.2, SHOTS)?;
        let b = h2_optimal_design(1.0, 0.0, SHOTS)?;
        let a_ok = a.regime == PlanarRegime::Diagonal && (a.tau - FRAC_PI_4).abs() <= 1e-15;
        let b_ok = b.regime == PlanarRegime::Split
            && ((b.tau - FRAC_PI_6).abs() <= 1e-15 || (b.tau - FRAC_PI_3).abs() <= 1e-15)
            && ((b.mirror - FRAC_PI_6).abs() <= 1e-15 || (b.mirror - FRAC_PI_3).abs() <= 1e-15);
        Ok((a_ok, b_ok))
    })();
    let (a_ok, b_ok) = match fixed {
        Ok(v) => v,
        Err(e) => return failed(7, name, e),
    };
    Verdict {
        id: 7,
        name,
        passed: worst_loc <= 2e-4 && worst_val <= 1e-8 && consistent && a_ok && b_ok,
        detail: format!(
            "50 pairs ({diagonal} diagonal, {split} split): location error ≤ {worst_loc:.2e} (≤ 2e-4), \
             relative value error ≤ {worst_val:.2e} (≤ 1e-8); (0.8, 0.2) → π/4: {a_ok}; (1, 0) → π/6 | π/3: {b_ok}"
        ),
    }
}

pub fn unbiased_estimator() -> Verdict {
    let name = "estimator unbiasedness";
    let mut rng = StdRng::seed_from_u64(8);
    const TRIALS: u64 = 100_000;
    let mut worst: f64 = 0.0;
    for case in 0..3u64 {
        let l = random_lambda(&mut rng, 0.0);
        let phi = random_angles(&mut rng);
        let truth = oracle::channel(l, &oracle::rotation(phi.0, phi.1, phi.2));
        let a = ChannelMatrix(Mat3::from_fn(|i, j| truth[i][j]));
        let (ta, ma) = (random_angles(&mut rng), random_angles(&mut rng));
        let (t, m) = (frame(ta.0, ta.1, ta.2), frame(ma.0, ma.1, ma.2));
        let sums = (0..TRIALS)
            .into_par_iter()
            .map(|trial| {
                let (_, a_hat) = simulate_channel_estimate(&a, &t, &m, SHOTS, 100 + case, trial)?;
                Ok((a_hat.0, Mat3::from_fn(|i, j| a_hat.0[(i, j)] * a_hat.0[(i, j)])))
            })
            .try_reduce(|| (Mat3::zero(), Mat3::zero()), |x, y| Ok((x.0 + y.0, x.1 + y.1)));
        let (sum, sum_sq) = match sums {
            Ok(s) => s,
            Err(e) => return failed(8, name, e),
        };
        let n = TRIALS as f64;
        for i in 0..3 {
            for j in 0..3 {
                let mean = sum[(i, j)] / n;
                let var = (sum_sq[(i, j)] / n - mean * mean) * n / (n - 1.0);
                let se = (var / n).sqrt();
                worst = worst.max((mean - truth[i][j]).abs() / se);
            }
        }
    }
    Verdict {
        id: 8,
        name,
        passed: worst <= 4.0,
        detail: format!("3 channels × 9 entries, 1e5 trials at N = 1000: largest deviation {worst:.2} standard errors (≤ 4)"),
    }
}

pub fn monte_carlo_agreement() -> Verdict {
    let name = "Monte Carlo vs analytic losses";
    let run = || -> Result<(f64, f64, f64, f64)> {
        let rotated = ChannelParams::new(FIRST_CHANNEL, [0.3, 0.7, 0.2]);
        let design = ExperimentDesign::new(AngleTriple::new(0.4, 1.0, 0.3), AngleTriple::new(2.0, 0.5, 1.2), SHOTS)?;
        let exact = analytic_report(&rotated, &design)?;
        let mc = mc_loss(&rotated, &design, 100_000, 9)?;
        let f_sigma = (mc.f - exact.f).abs() / mc.f_std_err.unwrap_or(f64::NAN);

        let aligned = ChannelParams::new(FIRST_CHANNEL, [0.0, 0.0, 0.0]);
        let design = ExperimentDesign::new(AngleTriple::new(2.5, 0.4, 1.3), AngleTriple::new(0.5, 1.0, 0.2), 100_000)?;
        let exact_h = analytic_report(&aligned, &design)?.h.unwrap_or(f64::NAN);
        let mc = mc_loss(&aligned, &design, 100_000, 10)?;
        let mc_h = mc.h.unwrap_or(f64::NAN);
        let h_sigma = (mc_h - exact_h).abs() / mc.h_std_err.unwrap_or(f64::NAN);
        Ok((f_sigma, h_sigma, exact.f, exact_h))
    };
    match run() {
        Ok((fs, hs, f, h)) => Verdict {
            id: 9,
            name,
            passed: fs <= 4.0 && hs <= 4.0,
            detail: format!(
                "f = {f:.6e} at N = 1000: MC off by {fs:.2}σ; h̃ = {h:.6e} at N = 1e5: MC off by {hs:.2}σ (≤ 4σ, 1e5 trials each)"
            ),
        },
        Err(e) => failed(9, name, e),
    }
}

pub fn round_trip() -> Verdict {
    let name = "parameter round trip";
    let mut rng = StdRng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let l = random_lambda(&mut rng, 1e-3);
        let phi: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..PI));
        let p = ChannelParams::new(l, phi);
        let est = match compose_channel_matrix(&p).and_then(|a| extract_params(&a)) {
            Ok(e) => e,
            Err(e) => return failed(10, name, e),
        };
        for k in 0..3 {
            worst = worst.max((est.lambda_hat.0[k] - l[k]).abs());
            worst = worst.max(angle_distance(est.phi_hat.to_array()[k], phi[k]));
        }
    }
    Verdict {
        id: 10,
        name,
        passed: worst <= 1e-9,
        detail: format!("10⁴ canonical parameter sets: largest component error {worst:.2e} (≤ 1e-9)"),
    }
}

pub fn rotational_invariance() -> Verdict {
    let name = "rotational invariance";
    let mut rng = StdRng::seed_from_u64(11);
    let mut run = || -> Result<f64> {
        let a = ChannelMatrix::diag(FIRST_CHANNEL);
        let (ta, ma) = (random_angles(&mut rng), random_angles(&mut rng));
        let (t, m) = (frame(ta.0, ta.1, ta.2), frame(ma.0, ma.1, ma.2));
        let base = analytic_losses(&a, &t, &m, SHOTS)?;
        let base_h = base.h.unwrap_or(f64::NAN);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let oa = random_angles(&mut rng);
            let o = *frame(oa.0, oa.1, oa.2).matrix();
            let moved = analytic_losses(&a.conjugate(&o), &t.rotated(&o)?, &m.rotated(&o)?, SHOTS)?;
            worst = worst
                .max((moved.f - base.f).abs())
                .max((moved.g - base.g).abs())
                .max((moved.h.unwrap_or(f64::NAN) - base_h).abs());
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => Verdict {
            id: 11,
            name,
            passed: worst <= 1e-12,
            detail: format!("50 rotations: largest change in f, g̃, h̃ = {worst:.2e} (≤ 1e-12)"),
        },
        Err(e) => failed(11, name, e),
    }
}

pub fn output_error_proportionality() -> Verdict {
    let name = "output-state error proportional to matrix error";
    let mut rng = StdRng::seed_from_u64(12);
    let pairs: Vec<(ChannelMatrix<f64>, ChannelMatrix<f64>)> = (0..20)
        .map(|_| {
            let mut draw = || ChannelMatrix(Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
            (draw(), draw())
        })
        .collect();
    let ratios: Result<Vec<f64>> = pairs
        .iter()
        .enumerate()
        .map(|(k, (a, b))| output_error_ratio(a, b, 1_000_000, k as u64))
        .collect();
    let ratios = match ratios {
        Ok(r) => r,
        Err(e) => return failed(12, name, e),
    };
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    // Half the squared Bloch distance, averaged over the ball where E[θθᵀ] = I/5.
    let expected = 0.5 / 5.0;
    let spread = hi / lo - 1.0;
    let passed = spread <= 0.01 && ratios.iter().all(|r| (r - expected).abs() <= 0.005);
    Verdict {
        id: 12,
        name,
        passed,
        detail: format!("20 pairs, 1e6 inputs each: ratios in [{lo:.5}, {hi:.5}], spread {:.2}% (≤ 1%), expected {expected}", spread * 100.0),
    }
}

fn failed(id: u32, name: &'static str, e: Error) -> Verdict {
    Verdict { id, name, passed: false, detail: format!("error: {e}") }
}
