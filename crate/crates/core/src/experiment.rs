//! Input/measurement frames, exact outcome statistics, simulated counts and
//! the linear-inversion estimate of the channel matrix.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::Mat3;
use crate::model::{reduce_channel_angles, AngleTriple, ChannelMatrix};
use crate::rng::{sample_binomial, CounterRng};
use crate::scalar::Real;

/// Three orthonormal Bloch vectors as the columns of a proper rotation.
///
/// For inputs, column `j` is the pure input state `θ⁽ʲ⁾`; for measurements,
/// column `i` is the direction `m⁽ⁱ⁾`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalFrame<T>(Mat3<T>);

impl<T: Real> OrthogonalFrame<T> {
    pub fn identity() -> Self {
        OrthogonalFrame(Mat3::identity())
    }

    /// Validates `FᵀF = I` and `det F = +1`.
    pub fn from_matrix(m: Mat3<T>) -> Result<Self> {
        if !m.is_finite() || m.orthogonality_defect() > T::lit(T::EPS_ORTHO) {
            return Err(invalid("frame is not orthogonal"));
        }
        if m.det() < T::zero() {
            return Err(invalid("frame has determinant -1"));
        }
        Ok(OrthogonalFrame(m))
    }

    /// `R_z R_y R_x` for arbitrary finite angles (no range check).
    pub fn from_angles(angles: &AngleTriple<T>) -> Result<Self> {
        if !angles.is_finite() {
            return Err(invalid("frame angles must be finite"));
        }
        Ok(OrthogonalFrame(angles.rotation()))
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.0
    }

    /// `O F`.
    pub fn rotated(&self, o: &Mat3<T>) -> Result<Self> {
        Self::from_matrix(*o * self.0)
    }
}

/// `R_z(ϑ_z) R_y(ϑ_y) R_x(ϑ_x)` for design angles in the ranges
/// `[0, π) × [0, π) × [0, π/2)`.
pub fn build_frame<T: Real>(angles: &AngleTriple<T>) -> Result<OrthogonalFrame<T>> {
    check_design_angles(angles)?;
    OrthogonalFrame::from_angles(angles)
}

pub fn check_design_angles<T: Real>(a: &AngleTriple<T>) -> Result<()> {
    let pi = T::PI();
    let ok = a.is_finite()
        && a.z >= T::zero()
        && a.z < pi
        && a.y >= T::zero()
        && a.y < pi
        && a.x >= T::zero()
        && a.x < T::FRAC_PI_2();
    if ok {
        Ok(())
    } else {
        Err(invalid(format!(
            "design angles ({}, {}, {}) outside [0,π)×[0,π)×[0,π/2)",
            a.z, a.y, a.x
        )))
    }
}

/// Brings arbitrary finite angles into the design ranges.
///
/// The returned frame equals the original up to a signed permutation of its
/// columns (a relabelling of the three inputs or measurements, some with the
/// opposite orientation), which no loss in this crate distinguishes.
pub fn reduce_design_angles<T: Real>(a: &AngleTriple<T>) -> Result<AngleTriple<T>> {
    if !a.is_finite() {
        return Err(invalid("design angles must be finite"));
    }
    let mut r = reduce_channel_angles(*a);
    // R_x(π/2) permutes e₂ → e₃ → −e₂.
    let half_pi = T::FRAC_PI_2();
    if r.x >= half_pi {
        r.x -= half_pi;
    }
    if r.x >= half_pi - T::lit(T::EPS_ANGLE) {
        r.x = T::zero();
    }
    Ok(r)
}

/// Input and measurement frames plus the number of shots `N` spent on each
/// of the nine (measurement, input) pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign<T> {
    pub input_angles: AngleTriple<T>,
    pub meas_angles: AngleTriple<T>,
    pub shots: u64,
}

impl<T: Real> ExperimentDesign<T> {
    pub fn new(input_angles: AngleTriple<T>, meas_angles: AngleTriple<T>, shots: u64) -> Result<Self> {
        check_design_angles(&input_angles)?;
        check_design_angles(&meas_angles)?;
        if shots == 0 {
            return Err(invalid("shots per pair must be at least 1"));
        }
        Ok(ExperimentDesign {
            input_angles,
            meas_angles,
            shots,
        })
    }

    /// Inputs and measurements along the coordinate axes.
    pub fn aligned(shots: u64) -> Result<Self> {
        Self::new(AngleTriple::zero(), AngleTriple::zero(), shots)
    }

    /// The same angles for inputs and measurements.
    pub fn symmetric(angles: AngleTriple<T>, shots: u64) -> Result<Self> {
        Self::new(angles, angles, shots)
    }

    pub fn frames(&self) -> (OrthogonalFrame<T>, OrthogonalFrame<T>) {
        (
            OrthogonalFrame(self.input_angles.rotation()),
            OrthogonalFrame(self.meas_angles.rotation()),
        )
    }
}

/// `x_ij = m⁽ⁱ⁾ · ξ⁽ʲ⁾`, exact or estimated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMatrix<T>(pub Mat3<T>);

/// Measurement successes `n_ij ≤ N` with the stream that produced them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsMatrix {
    pub n: [[u64; 3]; 3],
    pub shots: u64,
    pub seed: u64,
    pub trial: u64,
}

/// `X = Mᵀ A Θ`.
pub fn forward_outcomes<T: Real>(
    a: &ChannelMatrix<T>,
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
) -> OutcomeMatrix<T> {
    OutcomeMatrix(meas_frame.0.transpose() * a.0 * theta_frame.0)
}

/// Nine independent draws `n_ij ~ Binom(N, (1 + x_ij)/2)` for trial 0.
pub fn sample_counts<T: Real>(x: &OutcomeMatrix<T>, shots: u64, seed: u64) -> Result<CountsMatrix> {
    sample_counts_trial(x, shots, seed, 0)
}

/// As [`sample_counts`], with cell `(i, j)` drawn from the stream
/// `(seed, trial, i, j)`.
pub fn sample_counts_trial<T: Real>(
    x: &OutcomeMatrix<T>,
    shots: u64,
    seed: u64,
    trial: u64,
) -> Result<CountsMatrix> {
    if shots == 0 {
        return Err(invalid("shots per pair must be at least 1"));
    }
    let slack = T::EPS_NUM;
    let mut n = [[0u64; 3]; 3];
    for (i, row) in n.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let xij = x.0[(i, j)].to_f64_lossy();
            let p = 0.5 * (1.0 + xij);
            if !p.is_finite() || p < -slack || p > 1.0 + slack {
                return Err(invalid(format!(
                    "outcome x[{i}][{j}] = {xij} gives probability {p} outside [0, 1]"
                )));
            }
            let mut rng = CounterRng::for_cell(seed, trial, i, j);
            *cell = sample_binomial(&mut rng, shots, p.clamp(0.0, 1.0));
        }
    }
    Ok(CountsMatrix {
        n,
        shots,
        seed,
        trial,
    })
}

/// `x̂_ij = 2 n_ij / N − 1`.
pub fn estimate_x<T: Real>(counts: &CountsMatrix) -> OutcomeMatrix<T> {
    let shots = T::lit(counts.shots as f64);
    let two = T::lit(2.0);
    OutcomeMatrix(Mat3::from_fn(|i, j| {
        two * T::lit(counts.n[i][j] as f64) / shots - T::one()
    }))
}

/// Expected counts `N (1 + x_ij) / 2` (not rounded).
pub fn expected_counts<T: Real>(x: &OutcomeMatrix<T>, shots: u64) -> Mat3<T> {
    let half_n = T::lit(shots as f64 * 0.5);
    Mat3::from_fn(|i, j| half_n * (T::one() + x.0[(i, j)]))
}

/// The estimator `2 n / N − 1` applied to real-valued counts.
pub fn estimate_x_from_real_counts<T: Real>(counts: &Mat3<T>, shots: u64) -> OutcomeMatrix<T> {
    let n = T::lit(shots as f64);
    let two = T::lit(2.0);
    OutcomeMatrix(Mat3::from_fn(|i, j| two * counts[(i, j)] / n - T::one()))
}

/// `Â = M X̂ Θᵀ`.
pub fn estimate_channel_matrix<T: Real>(
    x_hat: &OutcomeMatrix<T>,
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
) -> ChannelMatrix<T> {
    ChannelMatrix(meas_frame.0 * x_hat.0 * theta_frame.0.transpose())
}

/// One simulated run of the measurement stage: exact outcomes, sampled
/// counts, and the channel-matrix estimate.
pub fn simulate_channel_estimate<T: Real>(
    a: &ChannelMatrix<T>,
    theta_frame: &OrthogonalFrame<T>,
    meas_frame: &OrthogonalFrame<T>,
    shots: u64,
    seed: u64,
    trial: u64,
) -> Result<(CountsMatrix, ChannelMatrix<T>)> {
    let x = forward_outcomes(a, theta_frame, meas_frame);
    let counts = sample_counts_trial(&x, shots, seed, trial)?;
    let a_hat = estimate_channel_matrix(&estimate_x(&counts), theta_frame, meas_frame);
    Ok((counts, a_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChannelParams, Axis, rotation_matrix};
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn build_frame_examples() {
        let f = build_frame(&AngleTriple::<f64>::zero()).unwrap();
        assert_eq!(*f.matrix(), Mat3::identity());

        let f = build_frame(&AngleTriple::new(FRAC_PI_4, FRAC_PI_4, 0.0)).unwrap();
        let expected = rotation_matrix(Axis::Z, FRAC_PI_4).unwrap()
            * rotation_matrix(Axis::Y, FRAC_PI_4).unwrap();
        assert!(f.matrix().max_abs_diff(&expected) < 1e-15);

        for bad in [
            AngleTriple::new(PI, 0.0, 0.0),
            AngleTriple::new(0.0, -0.1, 0.0),
            AngleTriple::new(0.0, 0.0, 1.6),
            AngleTriple::new(f64::NAN, 0.0, 0.0),
        ] {
            assert!(build_frame(&bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn forward_examples() {
        let lam = [0.8, 0.65, 0.5];
        let a = ChannelMatrix::diag(lam);
        let id = OrthogonalFrame::identity();
        assert_eq!(forward_outcomes(&a, &id, &id).0, Mat3::diag(lam));

        let f = build_frame(&AngleTriple::new(0.3, 2.0, 1.2)).unwrap();
        let x = forward_outcomes(&ChannelMatrix::diag([1.0; 3]), &f, &f);
        assert!(x.0.max_abs_diff(&Mat3::identity()) < 1e-15);
    }

    #[test]
    fn counts_are_deterministic_per_seed() {
        let a = ChannelParams::new([0.8, 0.65, 0.5], [0.3, 0.7, 0.2]).matrix().unwrap();
        let id = OrthogonalFrame::identity();
        let x = forward_outcomes(&a, &id, &id);
        let c1 = sample_counts(&x, 1000, 42).unwrap();
        let c2 = sample_counts(&x, 1000, 42).unwrap();
        let c3 = sample_counts(&x, 1000, 43).unwrap();
        assert_eq!(c1, c2);
        assert_ne!(c1.n, c3.n);
        assert!(c1.n.iter().flatten().all(|&n| n <= 1000));
    }

    #[test]
    fn extreme_outcomes_are_deterministic() {
        let x = OutcomeMatrix(Mat3::diag([1.0, -1.0, 1.0]));
        let c = sample_counts(&x, 500, 5).unwrap();
        assert_eq!(c.n[0][0], 500);
        assert_eq!(c.n[1][1], 0);
        assert_eq!(c.n[2][2], 500);
    }

    #[test]
    fn out_of_range_probability_is_rejected() {
        let x = OutcomeMatrix(Mat3::diag([1.2, 0.0, 0.0]));
        assert!(sample_counts(&x, 10, 0).is_err());
        // rounding noise past ±1 is clamped
        let x = OutcomeMatrix(Mat3::diag([1.0 + 1e-14, 0.0, 0.0]));
        assert_eq!(sample_counts(&x, 10, 0).unwrap().n[0][0], 10);
        assert!(sample_counts(&OutcomeMatrix(Mat3::<f64>::zero()), 0, 0).is_err());
    }

    #[test]
    fn estimate_x_examples() {
        let counts = CountsMatrix {
            n: [[10, 5, 0], [5, 10, 5], [0, 5, 10]],
            shots: 10,
            seed: 0,
            trial: 0,
        };
        let x: OutcomeMatrix<f64> = estimate_x(&counts);
        assert_eq!(x.0[(0, 0)], 1.0);
        assert_eq!(x.0[(0, 1)], 0.0);
        assert_eq!(x.0[(0, 2)], -1.0);
    }

    #[test]
    fn noise_free_inversion_recovers_channel() {
        let a = ChannelParams::new([0.8, 0.65, 0.5], [0.3, 0.7, 0.2]).matrix().unwrap();
        let th = build_frame(&AngleTriple::new(0.4, 1.9, 0.3)).unwrap();
        let m = build_frame(&AngleTriple::new(2.8, 0.6, 1.1)).unwrap();
        let x = forward_outcomes(&a, &th, &m);
        let x_back = estimate_x_from_real_counts(&expected_counts(&x, 1000), 1000);
        let a_hat = estimate_channel_matrix(&x_back, &th, &m);
        assert!(a_hat.0.max_abs_diff(&a.0) < 1e-12);

        let id = OrthogonalFrame::identity();
        assert_eq!(estimate_channel_matrix(&x, &id, &id).0, x.0);
    }
}
