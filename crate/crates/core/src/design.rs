//! Choosing input and measurement frames: numerical minimization of the
//! linearized angle risk, comparison with the symmetric candidate designs,
//! and the two-step protocol that first locates the channel axes and then
//! measures along them.
//!
//! Measurement angles are called `tau` (`M = R(τ)`) and input angles
//! `vartheta` (`Θ = R(ϑ)`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::experiment::{
    estimate_channel_matrix, estimate_x, forward_outcomes, reduce_design_angles,
    sample_counts_trial, ExperimentDesign, OrthogonalFrame,
};
use crate::extraction::{angle_distance, extract_params, ParamEstimate};
use crate::linalg::Mat3;
use crate::model::{compose_channel_matrix, cp_check, euler_zyx, AngleTriple, ChannelParams, ContractionTriple};
use crate::risk::{
    analytic_h2, analytic_h_tilde, bound_f, bound_g, h2_optimal_design, mean_and_std_err,
    trial_losses, PlanarOptimum, RiskMode, RiskReport,
};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Grid nodes per design angle for the six-angle search.
    pub grid: usize,
    /// Grid nodes per angle for the planar two-angle search.
    pub planar_grid: usize,
    /// Number of best grid nodes refined by Nelder–Mead.
    pub starts: usize,
    /// Stop when the simplex values agree to this relative tolerance.
    pub tolerance: f64,
    /// Stop when every vertex is this close (radians) to the best one.
    pub simplex_size: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid: 8,
            planar_grid: 64,
            starts: 5,
            tolerance: 1e-10,
            simplex_size: 1e-9,
            max_iterations: 20_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 4 || self.planar_grid < 4 {
            return Err(invalid("optimizer grid needs at least 4 nodes per angle"));
        }
        if self.starts == 0 {
            return Err(invalid("optimizer needs at least one start"));
        }
        if !(self.tolerance > 0.0) || !(self.simplex_size > 0.0) {
            return Err(invalid("optimizer tolerances must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("optimizer needs at least one iteration"));
        }
        Ok(())
    }
}

/// Result of a Nelder–Mead run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum<T, const D: usize> {
    pub x: [T; D],
    pub value: T,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Nelder–Mead with the standard coefficients (reflection 1, expansion 2,
/// contraction ½, shrink ½), started from `x0` with a simplex of edge
/// `step` along each axis.
pub fn nelder_mead<T: Real, const D: usize>(
    f: impl Fn(&[T; D]) -> T,
    x0: [T; D],
    step: T,
    tolerance: T,
    simplex_size: T,
    max_iterations: usize,
) -> Minimum<T, D> {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut evaluations = 0usize;
    let mut eval = |x: &[T; D]| {
        evaluations += 1;
        f(x)
    };

    let mut simplex: Vec<([T; D], T)> = Vec::with_capacity(D + 1);
    simplex.push((x0, eval(&x0)));
    for k in 0..D {
        let mut x = x0;
        x[k] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    while iterations < max_iterations {
        // Stable sort keeps the order of equal values deterministic.
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[D].1;
        let spread = (worst - best).abs();
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| {
                (0..D)
                    .map(|k| (x[k] - simplex[0].0[k]).abs())
                    .fold(T::zero(), T::max)
            })
            .fold(T::zero(), T::max);
        if spread <= tolerance * best.abs().max(T::min_positive_value()) && size <= simplex_size {
            break;
        }
        iterations += 1;

        let mut centroid = [T::zero(); D];
        for (x, _) in &simplex[..D] {
            for k in 0..D {
                centroid[k] += x[k];
            }
        }
        let inv = T::one() / T::lit(D as f64);
        centroid.iter_mut().for_each(|c| *c *= inv);
        let along = |t: T| -> [T; D] {
            std::array::from_fn(|k| centroid[k] + t * (simplex[D].0[k] - centroid[k]))
        };

        let xr = along(-T::one());
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-two);
            let fe = eval(&xe);
            simplex[D] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[D - 1].1 {
            simplex[D] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[D].1 {
                let xc = along(-half);
                (xc, eval(&xc))
            } else {
                let xc = along(half);
                (xc, eval(&xc))
            };
            if fc < simplex[D].1.min(fr) {
                simplex[D] = (xc, fc);
            } else {
                let x_best = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    let x: [T; D] = std::array::from_fn(|k| x_best[k] + half * (vertex.0[k] - x_best[k]));
                    *vertex = (x, eval(&x));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    Minimum {
        x: simplex[0].0,
        value: simplex[0].1,
        iterations,
        evaluations,
    }
}

/// Grid over a box followed by Nelder–Mead from the best `starts` nodes.
/// Each refinement is restarted once from its end point with a fresh
/// simplex. Returns the best refined point and the grid values in node
/// order (last axis fastest).
fn grid_then_refine<T: Real, const D: usize>(
    f: &(impl Fn(&[T; D]) -> T + Sync),
    widths: [T; D],
    nodes: usize,
    config: &OptimizerConfig,
) -> (Minimum<T, D>, Vec<([T; D], T)>) {
    let total = nodes.pow(D as u32);
    let node = |mut idx: usize| -> [T; D] {
        let mut x = [T::zero(); D];
        for k in (0..D).rev() {
            x[k] = widths[k] * T::lit((idx % nodes) as f64) / T::lit(nodes as f64);
            idx /= nodes;
        }
        x
    };
    let grid: Vec<([T; D], T)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let x = node(i);
            (x, f(&x))
        })
        .collect();

    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| {
        grid[a]
            .1
            .partial_cmp(&grid[b].1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let tol = T::lit(config.tolerance);
    let size = T::lit(config.simplex_size);
    let step = widths.iter().copied().fold(T::infinity(), T::min) / T::lit(2.0 * nodes as f64);
    let runs: Vec<Minimum<T, D>> = order
        .iter()
        .take(config.starts.min(total))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|&i| {
            let first = nelder_mead(f, grid[i].0, step, tol, size, config.max_iterations);
            let second = nelder_mead(f, first.x, step / T::lit(16.0), tol, size, config.max_iterations);
            let mut best = if second.value <= first.value { second } else { first };
            best.iterations = first.iterations + second.iterations;
            best.evaluations = first.evaluations + second.evaluations;
            best
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one start");
    (best, grid)
}

/// One node of an emitted loss surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint<T> {
    pub tau: AngleTriple<T>,
    pub vartheta: AngleTriple<T>,
    pub h: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleRiskOptimum<T> {
    pub tau: AngleTriple<T>,
    pub vartheta: AngleTriple<T>,
    pub h_min: T,
    pub iterations: usize,
    pub evaluations: usize,
    /// All grid-node values, when requested.
    pub surface: Option<Vec<SurfacePoint<T>>>,
}

/// `N · h̃` at the design whose measurement angles are `v[0..3]` and input
/// angles `v[3..6]`.
fn unit_shot_h<T: Real>(lambda: &ContractionTriple<T>, v: &[T; 6]) -> T {
    let meas = OrthogonalFrame::from_angles(&AngleTriple::new(v[0], v[1], v[2]))
        .expect("finite angles");
    let theta = OrthogonalFrame::from_angles(&AngleTriple::new(v[3], v[4], v[5]))
        .expect("finite angles");
    analytic_h_tilde(lambda, &theta, &meas, 1).unwrap_or(T::infinity())
}

fn check_channel<T: Real>(lambda: &ContractionTriple<T>, shots: u64) -> Result<()> {
    if shots == 0 {
        return Err(invalid("shots per pair must be at least 1"));
    }
    if !lambda.is_finite() || !lambda.is_sorted_desc() {
        return Err(invalid("contraction parameters must be finite and sorted descending"));
    }
    lambda.require_distinct()?;
    if !cp_check(lambda) {
        return Err(invalid("contraction parameters violate complete positivity"));
    }
    Ok(())
}

/// Minimizes `h̃` over the six design angles.
///
/// The search runs on `N · h̃`, which does not depend on `N`, so the located
/// design is the same for every shot count and `h_min` scales exactly as
/// `1/N`. The returned angles are brought into the design ranges.
pub fn optimize_angle_risk<T: Real>(
    lambda: &ContractionTriple<T>,
    shots: u64,
    config: &OptimizerConfig,
    emit_surface: bool,
) -> Result<AngleRiskOptimum<T>> {
    config.validate()?;
    check_channel(lambda, shots)?;
    let pi = T::PI();
    let half_pi = T::FRAC_PI_2();
    let widths = [pi, pi, half_pi, pi, pi, half_pi];
    let f = |v: &[T; 6]| unit_shot_h(lambda, v);
    let (best, grid) = grid_then_refine(&f, widths, config.grid, config);

    let tau = reduce_design_angles(&AngleTriple::new(best.x[0], best.x[1], best.x[2]))?;
    let vartheta = reduce_design_angles(&AngleTriple::new(best.x[3], best.x[4], best.x[5]))?;
    let n = T::lit(shots as f64);
    let design = ExperimentDesign::new(vartheta, tau, shots)?;
    let (theta, meas) = design.frames();
    let h_min = analytic_h_tilde(lambda, &theta, &meas, 1)? / n;

    let surface = emit_surface.then(|| {
        grid.iter()
            .map(|(x, v)| SurfacePoint {
                tau: AngleTriple::new(x[0], x[1], x[2]),
                vartheta: AngleTriple::new(x[3], x[4], x[5]),
                h: *v / n,
            })
            .collect()
    });
    Ok(AngleRiskOptimum {
        tau,
        vartheta,
        h_min,
        iterations: best.iterations,
        evaluations: best.evaluations + grid.len(),
        surface,
    })
}

/// Planar counterpart of [`optimize_angle_risk`] for `λ₃ = 0` known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarSearch<T> {
    pub tau: T,
    pub vartheta: T,
    pub h_min: T,
    /// Closed-form optimum for comparison.
    pub closed_form: PlanarOptimum<T>,
    /// `(τ, ϑ, h̃₂)` at every grid node, when requested.
    pub surface: Option<Vec<[T; 3]>>,
}

/// Minimizes the planar angle risk over `τ, ϑ ∈ [0, π/2)` (the loss has
/// period `π/2` in each angle).
pub fn optimize_planar<T: Real>(
    lambda1: T,
    lambda2: T,
    shots: u64,
    config: &OptimizerConfig,
    emit_surface: bool,
) -> Result<PlanarSearch<T>> {
    config.validate()?;
    let closed_form = h2_optimal_design(lambda1, lambda2, shots)?;
    let half_pi = T::FRAC_PI_2();
    let f = |v: &[T; 2]| analytic_h2(lambda1, lambda2, v[0], v[1], 1).unwrap_or(T::infinity());
    let (best, grid) = grid_then_refine(&f, [half_pi; 2], config.planar_grid, config);
    let wrap = |a: T| {
        let r = a - (a / half_pi).floor() * half_pi;
        if r >= half_pi {
            T::zero()
        } else {
            r
        }
    };
    let n = T::lit(shots as f64);
    let (tau, vartheta) = (wrap(best.x[0]), wrap(best.x[1]));
    Ok(PlanarSearch {
        tau,
        vartheta,
        h_min: analytic_h2(lambda1, lambda2, tau, vartheta, 1)? / n,
        closed_form,
        surface: emit_surface.then(|| grid.iter().map(|(x, v)| [x[0], x[1], *v / n]).collect()),
    })
}

/// The optimized design set against the two symmetric candidates
/// `τ = ϑ = (π/4, π/4, 0)` and `τ = ϑ = (π/4, 0, π/4)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport<T> {
    pub lambda: ContractionTriple<T>,
    pub shots: u64,
    pub optimum: AngleRiskOptimum<T>,
    pub h_zero_design: T,
    pub h_candidate_a: T,
    pub h_candidate_b: T,
    /// `h̃(candidate) − h_min` for each candidate.
    pub gap_a: T,
    pub gap_b: T,
    /// `gap / h_min`.
    pub relative_gap_a: T,
    pub relative_gap_b: T,
    /// Distance between the optimal input and measurement frames in design
    /// angles, minimized over relabellings of the frame vectors.
    pub symmetry_residual: T,
}

pub fn conjecture_report<T: Real>(
    lambda: &ContractionTriple<T>,
    shots: u64,
    config: &OptimizerConfig,
) -> Result<ConjectureReport<T>> {
    let optimum = optimize_angle_risk(lambda, shots, config, false)?;
    let q = T::FRAC_PI_4();
    let at = |a: AngleTriple<T>| -> Result<T> {
        let f = OrthogonalFrame::from_angles(&a)?;
        analytic_h_tilde(lambda, &f, &f, shots)
    };
    let h_zero_design = at(AngleTriple::zero())?;
    let h_candidate_a = at(AngleTriple::new(q, q, T::zero()))?;
    let h_candidate_b = at(AngleTriple::new(q, T::zero(), q))?;
    let gap_a = h_candidate_a - optimum.h_min;
    let gap_b = h_candidate_b - optimum.h_min;
    let symmetry_residual = design_distance(&optimum.tau, &optimum.vartheta)?;
    Ok(ConjectureReport {
        lambda: *lambda,
        shots,
        h_zero_design,
        h_candidate_a,
        h_candidate_b,
        gap_a,
        gap_b,
        relative_gap_a: gap_a / optimum.h_min,
        relative_gap_b: gap_b / optimum.h_min,
        symmetry_residual,
        optimum,
    })
}

/// The 24 rotations that permute the coordinate axes, possibly reversing
/// some of them.
pub fn axis_permutations<T: Real>() -> Vec<Mat3<T>> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    for p in PERMS {
        for signs in 0..8u32 {
            let m = Mat3::from_fn(|i, j| {
                if p[j] == i {
                    if signs & (1 << j) != 0 {
                        -T::one()
                    } else {
                        T::one()
                    }
                } else {
                    T::zero()
                }
            });
            if m.det() > T::zero() {
                out.push(m);
            }
        }
    }
    out
}

/// Euclidean distance between design angles, per component modulo π for
/// `z, y` and modulo π/2 for `x`, minimized over relabellings `F ↦ F P` of
/// the second frame (which leave every loss unchanged).
pub fn design_distance<T: Real>(a: &AngleTriple<T>, b: &AngleTriple<T>) -> Result<T> {
    let fb = b.rotation();
    let two = T::lit(2.0);
    let mut best = T::infinity();
    for p in axis_permutations::<T>() {
        let c = reduce_design_angles(&euler_zyx(&(fb * p)))?;
        let d = (angle_distance(a.z, c.z).powi(2)
            + angle_distance(a.y, c.y).powi(2)
            + (angle_distance(two * a.x, two * c.x) / two).powi(2))
        .sqrt();
        best = best.min(d);
    }
    Ok(best)
}

/// Two-step protocol settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepConfig<T> {
    /// Fraction of the total budget spent on the first step.
    pub split: f64,
    /// Design (same for inputs and measurements) of the first step.
    pub stage1_angles: AngleTriple<T>,
}

impl<T: Real> Default for TwoStepConfig<T> {
    fn default() -> Self {
        let q = T::FRAC_PI_4();
        TwoStepConfig {
            split: 0.2,
            stage1_angles: AngleTriple::new(q, q, T::zero()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepOutcome<T> {
    pub stage1_design: ExperimentDesign<T>,
    pub stage1: ParamEstimate<T>,
    /// Inputs and measurements along the axes found in the first step.
    pub stage2_design: ExperimentDesign<T>,
    /// Final estimate; both `λ̂` and `φ̂` come from the second step, which
    /// has the larger share of the budget.
    pub estimate: ParamEstimate<T>,
}

/// Shots per pair `(N₁, N₂)` for a total budget over both steps.
pub fn split_budget(total_budget: u64, split: f64) -> Result<(u64, u64)> {
    if !(split > 0.0 && split < 1.0) {
        return Err(invalid(format!("split must lie in (0, 1), got {split}")));
    }
    if total_budget < 18 {
        return Err(invalid(format!(
            "two-step budget {total_budget} is below 18 (one shot per pair in each step)"
        )));
    }
    let n1 = ((total_budget as f64 * split) / 9.0).floor() as u64;
    let n2 = (total_budget - 9 * n1) / 9;
    if n1 == 0 || n2 == 0 {
        return Err(invalid(format!(
            "budget {total_budget} with split {split} leaves a step without shots"
        )));
    }
    Ok((n1, n2))
}

/// One run of the two-step protocol. Step one uses the count streams of
/// trial `2·replication`, step two those of `2·replication + 1`.
pub fn two_step_tomography<T: Real>(
    true_params: &ChannelParams<T>,
    total_budget: u64,
    config: &TwoStepConfig<T>,
    seed: u64,
    replication: u64,
) -> Result<TwoStepOutcome<T>> {
    let (n1, n2) = split_budget(total_budget, config.split)?;
    let a = compose_channel_matrix(true_params)?;

    let stage1_design = ExperimentDesign::symmetric(config.stage1_angles, n1)?;
    let stage1 = run_stage(&a, &stage1_design, seed, 2 * replication)?;

    let aligned = reduce_design_angles(&stage1.phi_hat)?;
    let stage2_design = ExperimentDesign::symmetric(aligned, n2)?;
    let estimate = run_stage(&a, &stage2_design, seed, 2 * replication + 1)?;
    Ok(TwoStepOutcome {
        stage1_design,
        stage1,
        stage2_design,
        estimate,
    })
}

fn run_stage<T: Real>(
    a: &crate::model::ChannelMatrix<T>,
    design: &ExperimentDesign<T>,
    seed: u64,
    trial: u64,
) -> Result<ParamEstimate<T>> {
    let (theta, meas) = design.frames();
    let counts = sample_counts_trial(&forward_outcomes(a, &theta, &meas), design.shots, seed, trial)?;
    extract_params(&estimate_channel_matrix(&estimate_x(&counts), &theta, &meas))
}

/// Monte-Carlo losses of the two-step estimate over `replications` runs.
/// Bounds refer to the second step's shots per pair.
pub fn two_step_risk<T: Real>(
    true_params: &ChannelParams<T>,
    total_budget: u64,
    config: &TwoStepConfig<T>,
    replications: u64,
    seed: u64,
) -> Result<RiskReport> {
    if replications == 0 {
        return Err(invalid("two-step risk needs at least one replication"));
    }
    let (_, n2) = split_budget(total_budget, config.split)?;
    let samples: Vec<[f64; 3]> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let out = two_step_tomography(true_params, total_budget, config, seed, r)?;
            let a_hat = compose_channel_matrix(&ChannelParams {
                contraction: out.estimate.lambda_hat,
                angles: out.estimate.phi_hat,
            })?;
            trial_losses(true_params, &a_hat)
        })
        .collect::<Result<_>>()?;
    let stats: [(f64, Option<f64>); 3] =
        std::array::from_fn(|k| mean_and_std_err(samples.iter().map(|s| s[k])));
    let lambda = true_params.contraction.sorted_desc();
    Ok(RiskReport {
        mode: RiskMode::MonteCarlo { trials: replications },
        f: stats[0].0,
        g: stats[1].0,
        h: Some(stats[2].0),
        f_std_err: stats[0].1,
        g_std_err: stats[1].1,
        h_std_err: stats[2].1,
        f_bound: bound_f(&lambda, n2).to_f64_lossy(),
        g_bound: bound_g(&lambda, n2).to_f64_lossy(),
    })
}
