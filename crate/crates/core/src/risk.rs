//! Expected losses of the estimators: exact values from the variance algebra
//! of the linear-inversion estimator, Monte-Carlo estimates from the full
//! sample → estimate → extract pipeline, and the closed-form lower bounds.
//!
//! All analytic losses take the channel in its own frame (`A = diag(λ)`); a
//! rotated channel `R Λ Rᵀ` measured with frames `(Θ, M)` has the same
//! losses as `Λ` measured with `(RᵀΘ, RᵀM)`. [`analytic_losses`] performs
//! that rotation for a general symmetric `A`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::symmetric_eigen;
use crate::error::{invalid, Error, Result};
use crate::experiment::{
    estimate_channel_matrix, estimate_x, forward_outcomes, sample_counts_trial,
    ExperimentDesign, OrthogonalFrame, OutcomeMatrix,
};
use crate::extraction::{angle_distance, extract_params};
use crate::linalg::Mat3;
use crate::model::{
    compose_channel_matrix, density_unchecked, ChannelMatrix, ChannelParams, ContractionTriple,
};
use crate::rng::CounterRng;
use crate::scalar::{CompensatedSum, Real};

/// Linear map from the nine outcome estimates `x̂_kl` to the nine entries
/// `â_ij` of the channel-matrix estimate, `â_(ij) = Σ c_(ij),(kl) x̂_(kl)`.
/// Pairs are flattened row-major: `(i, j) ↦ 3i + j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientMatrix<T> {
    pub c: [[T; 9]; 9],
}

/// `c_(ij),(kl) = M_ik Θ_jl`, so that `Â = M X̂ Θᵀ`.
pub fn coefficient_matrix<T: Real>(
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
) -> CoefficientMatrix<T> {
    let (th, m) = (theta_frame.matrix(), meas_frame.matrix());
    let mut c = [[T::zero(); 9]; 9];
    for (row, cr) in c.iter_mut().enumerate() {
        let (i, j) = (row / 3, row % 3);
        for (col, v) in cr.iter_mut().enumerate() {
            let (k, l) = (col / 3, col % 3);
            *v = m[(i, k)] * th[(j, l)];
        }
    }
    CoefficientMatrix { c }
}

impl<T: Real> CoefficientMatrix<T> {
    /// `Â` assembled entrywise from `X̂`.
    pub fn apply(&self, x_hat: &OutcomeMatrix<T>) -> Mat3<T> {
        Mat3::from_fn(|i, j| {
            (0..9)
                .map(|l| self.c[3 * i + j][l] * x_hat.0[(l / 3, l % 3)])
                .sum()
        })
    }

    /// `max |C Cᵀ − I|`.
    pub fn orthogonality_defect(&self) -> T {
        let mut worst = T::zero();
        for a in 0..9 {
            for b in 0..9 {
                let dot: T = (0..9).map(|l| self.c[a][l] * self.c[b][l]).sum();
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Row and column sums of the entrywise square `c²`.
    pub fn hadamard_square_sums(&self) -> ([T; 9], [T; 9]) {
        let rows = std::array::from_fn(|k| (0..9).map(|l| self.c[k][l].powi(2)).sum());
        let cols = std::array::from_fn(|l| (0..9).map(|k| self.c[k][l].powi(2)).sum());
        (rows, cols)
    }
}

/// `Var(Σ_k d_k â_k) = Σ_l (Σ_k d_k c_kl)² (1 − x_l²) / N`.
pub fn var_linear_combination<T: Real>(
    d: &[T; 9],
    c: &CoefficientMatrix<T>,
    x: &OutcomeMatrix<T>,
    shots: u64,
) -> T {
    let n = T::lit(shots as f64);
    (0..9)
        .map(|l| {
            let w: T = (0..9).map(|k| d[k] * c.c[k][l]).sum();
            let xl = x.0[(l / 3, l % 3)];
            w * w * (T::one() - xl * xl)
        })
        .sum::<T>()
        / n
}

/// Indicator of entry `(i, j)` plus, when different, entry `(j, i)`.
fn pair_weights<T: Real>(i: usize, j: usize) -> [T; 9] {
    let mut d = [T::zero(); 9];
    d[3 * i + j] += T::one();
    if i != j {
        d[3 * j + i] += T::one();
    }
    d
}

/// Variances of `â_ii` and of `â_ij + â_ji` for the pairs (1,2), (1,3), (2,3),
/// for the channel matrix `a`.
struct EntryVariances<T> {
    diag: [T; 3],
    sym: [T; 3],
}

const OFF_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn entry_variances<T: Real>(
    a: &ChannelMatrix<T>,
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
    shots: u64,
) -> EntryVariances<T> {
    let c = coefficient_matrix(theta_frame, meas_frame);
    let x = forward_outcomes(a, theta_frame, meas_frame);
    EntryVariances {
        diag: std::array::from_fn(|i| var_linear_combination(&pair_weights(i, i), &c, &x, shots)),
        sym: OFF_PAIRS.map(|(i, j)| var_linear_combination(&pair_weights(i, j), &c, &x, shots)),
    }
}

/// `E‖Â_s − A‖²` for `A = diag(λ)`:
/// `Σ_i Var(â_ii) + ½ Σ_{i<j} Var(â_ij + â_ji)`.
pub fn analytic_f<T: Real>(
    lambda: &ContractionTriple<T>,
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
    shots: u64,
) -> T {
    analytic_f_matrix(&ChannelMatrix::diag(lambda.0), theta_frame, meas_frame, shots)
}

/// [`analytic_f`] for an arbitrary symmetric channel matrix. The loss is
/// invariant under rotations, so no change of frame is needed.
pub fn analytic_f_matrix<T: Real>(
    a: &ChannelMatrix<T>,
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
    shots: u64,
) -> T {
    let v = entry_variances(a, theta_frame, meas_frame, shots);
    v.diag.iter().copied().sum::<T>() + T::lit(0.5) * v.sym.iter().copied().sum::<T>()
}

/// Linearized contraction-parameter risk `Var(â₁₁) + Var(â₂₂) + Var(â₃₃)`
/// for `A = diag(λ)`.
pub fn analytic_g_tilde<T: Real>(
    lambda: &ContractionTriple<T>,
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
    shots: u64,
) -> T {
    entry_variances(&ChannelMatrix::diag(lambda.0), theta_frame, meas_frame, shots)
        .diag
        .iter()
        .copied()
        .sum()
}

/// Linearized angle risk
/// `Σ_{a<b} Var(â_ab + â_ba) / (4 (λ_a − λ_b)²)` for `A = diag(λ)`.
pub fn analytic_h_tilde<T: Real>(
    lambda: &ContractionTriple<T>,
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
    shots: u64,
) -> Result<T> {
    require_separated(lambda)?;
    let v = entry_variances(&ChannelMatrix::diag(lambda.0), theta_frame, meas_frame, shots);
    Ok(h_from_sym(lambda, &v.sym))
}

fn h_from_sym<T: Real>(lambda: &ContractionTriple<T>, sym: &[T; 3]) -> T {
    let l = lambda.0;
    OFF_PAIRS
        .iter()
        .zip(sym)
        .map(|(&(a, b), &v)| v / (T::lit(4.0) * (l[a] - l[b]).powi(2)))
        .sum()
}

fn require_separated<T: Real>(lambda: &ContractionTriple<T>) -> Result<()> {
    let [l1, l2, l3] = lambda.0;
    if !lambda.is_finite() || !(l1 > l2 && l2 > l3) {
        return Err(Error::DegenerateSpectrum {
            lambda: lambda.0.map(Real::to_f64_lossy),
        });
    }
    lambda.require_distinct()
}

/// `(6 − Σλ²) / N`.
pub fn bound_f<T: Real>(lambda: &ContractionTriple<T>, shots: u64) -> T {
    (T::lit(6.0) - lambda.sum_squares()) / T::lit(shots as f64)
}

/// `(3 − Σλ²) / N`.
pub fn bound_g<T: Real>(lambda: &ContractionTriple<T>, shots: u64) -> T {
    (T::lit(3.0) - lambda.sum_squares()) / T::lit(shots as f64)
}

/// The three analytic losses of one channel/design pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticLosses<T> {
    pub f: T,
    pub g: T,
    /// `None` when the spectrum is degenerate.
    pub h: Option<T>,
    /// Eigenvalues of `A`, descending.
    pub lambda: ContractionTriple<T>,
}

/// Analytic losses for a general symmetric `A`, measured in the channel's
/// eigenframe: with `A = V Λ Vᵀ`, the frames become `(VᵀΘ, VᵀM)`.
pub fn analytic_losses<T: Real>(
    a: &ChannelMatrix<T>,
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
    shots: u64,
) -> Result<AnalyticLosses<T>> {
    if shots == 0 {
        return Err(invalid("shots per pair must be at least 1"));
    }
    if !a.0.is_finite() || a.0.asymmetry() > T::lit(T::EPS_SYM) * a.0.max_abs().max(T::one()) {
        return Err(invalid("analytic losses need a finite symmetric channel matrix"));
    }
    let eig = symmetric_eigen(&a.0);
    let vt = eig.vectors.transpose();
    let theta = theta_frame.rotated(&vt)?;
    let meas = meas_frame.rotated(&vt)?;
    let lambda = ContractionTriple(eig.values);
    let v = entry_variances(&ChannelMatrix::diag(eig.values), &theta, &meas, shots);
    let h = require_separated(&lambda).ok().map(|_| h_from_sym(&lambda, &v.sym));
    Ok(AnalyticLosses {
        f: v.diag.iter().copied().sum::<T>() + T::lit(0.5) * v.sym.iter().copied().sum::<T>(),
        g: v.diag.iter().copied().sum(),
        h,
        lambda,
    })
}

/// Analytic losses of a parametrized channel under a design.
pub fn analytic_report<T: Real>(
    params: &ChannelParams<T>,
    design: &ExperimentDesign<T>,
) -> Result<RiskReport> {
    let a = compose_channel_matrix(params)?;
    let (theta, meas) = design.frames();
    let l = analytic_losses(&a, &theta, &meas, design.shots)?;
    Ok(RiskReport {
        mode: RiskMode::Analytic,
        f: l.f.to_f64_lossy(),
        g: l.g.to_f64_lossy(),
        h: l.h.map(Real::to_f64_lossy),
        f_std_err: None,
        g_std_err: None,
        h_std_err: None,
        f_bound: bound_f(&l.lambda, design.shots).to_f64_lossy(),
        g_bound: bound_g(&l.lambda, design.shots).to_f64_lossy(),
    })
}

/// Planar angle risk with `λ₃ = 0` known: the channel `diag(λ₁, λ₂)` in the
/// plane, inputs along the columns of `R(ϑ)` and measurements along the
/// columns of `R(τ)`, `R(α) = [[cos α, −sin α], [sin α, cos α]]`.
/// Equals `Var(â₁₂ + â₂₁) / (4 (λ₁ − λ₂)²)`.
pub fn analytic_h2<T: Real>(lambda1: T, lambda2: T, tau: T, vartheta: T, shots: u64) -> Result<T> {
    check_planar(lambda1, lambda2, shots)?;
    if !tau.is_finite() || !vartheta.is_finite() {
        return Err(invalid("planar design angles must be finite"));
    }
    let rot = |a: T| [[a.cos(), -a.sin()], [a.sin(), a.cos()]];
    let (m, th) = (rot(tau), rot(vartheta));
    let lam = [lambda1, lambda2];
    // x_kl = Σ_a M_ak λ_a Θ_al
    let x = |k: usize, l: usize| -> T { (0..2).map(|a| m[a][k] * lam[a] * th[a][l]).sum() };
    // â₁₂ + â₂₁ = Σ_kl (M_1k Θ_2l + M_2k Θ_1l) x̂_kl
    let mut var = T::zero();
    for k in 0..2 {
        for l in 0..2 {
            let w = m[0][k] * th[1][l] + m[1][k] * th[0][l];
            let xkl = x(k, l);
            var += w * w * (T::one() - xkl * xkl);
        }
    }
    var /= T::lit(shots as f64);
    Ok(var / (T::lit(4.0) * (lambda1 - lambda2).powi(2)))
}

fn check_planar<T: Real>(l1: T, l2: T, shots: u64) -> Result<()> {
    if !l1.is_finite() || !l2.is_finite() {
        return Err(invalid("planar contractions must be finite"));
    }
    if l1 <= l2 {
        return Err(invalid(format!("planar loss needs λ₁ > λ₂ (got {l1}, {l2})")));
    }
    if (l1 + l2).abs() <= T::lit(T::EPS_DEG) {
        return Err(invalid("planar loss needs λ₁ ≠ −λ₂"));
    }
    if shots == 0 {
        return Err(invalid("shots per pair must be at least 1"));
    }
    Ok(())
}

/// Which closed form describes the planar optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanarRegime {
    /// `(λ₁ + λ₂)² ≥ 2 (λ₁ − λ₂)²`: the optimum is `τ = ϑ = π/4`.
    Diagonal,
    /// Otherwise the optimum is at `x` or `π/2 − x`, modulo `π/2`.
    Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarOptimum<T> {
    pub tau: T,
    pub vartheta: T,
    /// The other optimal angle, `π/2 − x` (equal to `tau` in the diagonal
    /// regime).
    pub mirror: T,
    pub value: T,
    pub regime: PlanarRegime,
}

/// Closed-form minimizer of [`analytic_h2`] over `τ, ϑ`.
pub fn h2_optimal_design<T: Real>(lambda1: T, lambda2: T, shots: u64) -> Result<PlanarOptimum<T>> {
    check_planar(lambda1, lambda2, shots)?;
    let sum2 = (lambda1 + lambda2).powi(2);
    let diff2 = (lambda1 - lambda2).powi(2);
    let n = T::lit(shots as f64);
    let prefactor = T::one() / (T::lit(4.0) * diff2) / (T::lit(2.0) * n);
    let quarter_pi = T::FRAC_PI_4();
    if sum2 >= T::lit(2.0) * diff2 {
        Ok(PlanarOptimum {
            tau: quarter_pi,
            vartheta: quarter_pi,
            mirror: quarter_pi,
            value: prefactor * (T::lit(4.0) - sum2),
            regime: PlanarRegime::Diagonal,
        })
    } else {
        let arg = (-sum2 / (T::lit(2.0) * diff2)).max(-T::one());
        let x = arg.acos() / T::lit(4.0);
        let value = prefactor
            * (T::lit(4.0)
                - (lambda1.powi(2) + lambda2.powi(2))
                - sum2 * sum2 / (T::lit(8.0) * diff2));
        Ok(PlanarOptimum {
            tau: x,
            vartheta: x,
            mirror: T::FRAC_PI_2() - x,
            value,
            regime: PlanarRegime::Split,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RiskMode {
    Analytic,
    MonteCarlo { trials: u64 },
}

/// Loss values in squared-error units. Standard errors are present for
/// Monte-Carlo reports with at least two trials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub mode: RiskMode,
    pub f: f64,
    pub g: f64,
    pub h: Option<f64>,
    pub f_std_err: Option<f64>,
    pub g_std_err: Option<f64>,
    pub h_std_err: Option<f64>,
    pub f_bound: f64,
    pub g_bound: f64,
}

/// Squared errors `(f, g, h)` of one channel-matrix estimate: the matrix
/// rebuilt from the extracted parameters against `A`, the contraction
/// parameters, and the angles (each via [`angle_distance`]).
pub fn trial_losses<T: Real>(params: &ChannelParams<T>, a_hat: &ChannelMatrix<T>) -> Result<[f64; 3]> {
    let a = compose_channel_matrix(params)?;
    let est = extract_params(a_hat)?;
    let rebuilt = compose_channel_matrix(&ChannelParams {
        contraction: est.lambda_hat,
        angles: est.phi_hat,
    })?;
    let f = (rebuilt.0 - a.0).frobenius_squared().to_f64_lossy();
    let g = (0..3)
        .map(|k| (est.lambda_hat.0[k] - params.contraction.0[k]).powi(2))
        .sum::<T>()
        .to_f64_lossy();
    let (ph, p) = (est.phi_hat.to_array(), params.angles.to_array());
    let h = (0..3)
        .map(|k| angle_distance(ph[k], p[k]).powi(2))
        .sum::<T>()
        .to_f64_lossy();
    Ok([f, g, h])
}

/// Monte-Carlo losses over `trials` seeded runs of the full pipeline.
///
/// Trial `t` draws its counts from the streams `(seed, t, i, j)`, so the
/// result does not depend on how trials are spread over threads.
pub fn mc_loss<T: Real>(
    params: &ChannelParams<T>,
    design: &ExperimentDesign<T>,
    trials: u64,
    seed: u64,
) -> Result<RiskReport> {
    if trials == 0 {
        return Err(invalid("Monte-Carlo risk needs at least one trial"));
    }
    let a = compose_channel_matrix(params)?;
    let (theta, meas) = design.frames();
    let x = forward_outcomes(&a, &theta, &meas);
    let samples: Vec<[f64; 3]> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let counts = sample_counts_trial(&x, design.shots, seed, t)?;
            let a_hat = estimate_channel_matrix(&estimate_x(&counts), &theta, &meas);
            trial_losses(params, &a_hat)
        })
        .collect::<Result<_>>()?;

    let stats: [(f64, Option<f64>); 3] = std::array::from_fn(|k| mean_and_std_err(samples.iter().map(|s| s[k])));
    let lambda = params.contraction.sorted_desc();
    Ok(RiskReport {
        mode: RiskMode::MonteCarlo { trials },
        f: stats[0].0,
        g: stats[1].0,
        h: Some(stats[2].0),
        f_std_err: stats[0].1,
        g_std_err: stats[1].1,
        h_std_err: stats[2].1,
        f_bound: bound_f(&lambda, design.shots).to_f64_lossy(),
        g_bound: bound_g(&lambda, design.shots).to_f64_lossy(),
    })
}

/// Sample mean and `sd/√n` (the latter only for `n ≥ 2`).
pub fn mean_and_std_err(xs: impl Iterator<Item = f64> + Clone) -> (f64, Option<f64>) {
    let mut n = 0u64;
    let sum: CompensatedSum = xs.clone().inspect(|_| n += 1).collect();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = sum.value() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let ss: CompensatedSum = xs.map(|x| (x - mean).powi(2)).collect();
    let var = ss.value() / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

/// Mean Hilbert–Schmidt distance² between the output states `ρ(Aθ)` and
/// `ρ(Âθ)` over `samples` inputs drawn uniformly from the Bloch ball,
/// divided by `‖A − Â‖²`.
pub fn output_error_ratio<T: Real>(
    a: &ChannelMatrix<T>,
    a_hat: &ChannelMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    use rand_distr::{Distribution, UnitBall};
    let denom = (a.0 - a_hat.0).frobenius_squared();
    if !(denom > T::zero()) || samples == 0 {
        return Err(invalid("output error ratio needs A ≠ Â and at least one sample"));
    }
    const CHUNK: u64 = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = CounterRng::for_trial(seed, c, 0);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len)
                .map(|_| {
                    let p: [f64; 3] = UnitBall.sample(&mut rng);
                    let theta = crate::linalg::Vec3(p.map(T::lit));
                    let out = density_unchecked(&a.0.mul_vec(&theta));
                    let est = density_unchecked(&a_hat.0.mul_vec(&theta));
                    out.hs_distance_squared(&est).to_f64_lossy()
                })
                .collect::<CompensatedSum>()
                .value()
        })
        .collect();
    let total: CompensatedSum = partial.into_iter().collect();
    Ok(total.value() / samples as f64 / denom.to_f64_lossy())
}
