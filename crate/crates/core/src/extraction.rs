//! From an estimated channel matrix back to channel parameters, and the
//! first-order expansion of that map around a diagonal channel.

use serde::{Deserialize, Serialize};

use crate::eigen::{symmetric_eigen, SymmetricEigen};
use crate::error::{invalid, Error, Result};
use crate::experiment::OrthogonalFrame;
use crate::linalg::Mat3;
use crate::model::{canonicalize, cp_check, AngleTriple, ChannelMatrix, ContractionTriple};
use crate::scalar::Real;

/// Parameters recovered from a channel-matrix estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate<T> {
    /// Eigenvalues of the symmetrized estimate, descending. Not clamped to
    /// `[−1, 1]`.
    pub lambda_hat: ContractionTriple<T>,
    pub phi_hat: AngleTriple<T>,
    /// Eigenvectors as columns, ordered like `lambda_hat`.
    pub frame: OrthogonalFrame<T>,
    /// Whether `lambda_hat` satisfies complete positivity.
    pub cp_valid: bool,
}

/// `½(Â + Âᵀ)`.
pub fn symmetrize<T: Real>(a_hat: &ChannelMatrix<T>) -> Mat3<T> {
    let half = T::lit(0.5);
    let a = &a_hat.0;
    Mat3::from_fn(|i, j| half * (a[(i, j)] + a[(j, i)]))
}

/// Eigenvalues (descending) and a proper orthonormal eigenvector frame of a
/// symmetric matrix.
pub fn eig3_symmetric<T: Real>(s: &Mat3<T>) -> Result<SymmetricEigen<T>> {
    if !s.is_finite() {
        return Err(invalid("eig3_symmetric: non-finite entry"));
    }
    let tol = T::lit(T::EPS_SYM) * s.max_abs().max(T::one());
    if s.asymmetry() > tol {
        return Err(invalid(format!(
            "eig3_symmetric: matrix is not symmetric (max |s_ij − s_ji| = {})",
            s.asymmetry()
        )));
    }
    Ok(symmetric_eigen(s))
}

/// Channel angles of an eigenvector frame ordered by descending eigenvalue.
pub fn extract_angles<T: Real>(
    frame: &OrthogonalFrame<T>,
    lambda_hat: &ContractionTriple<T>,
) -> Result<AngleTriple<T>> {
    Ok(canonicalize(lambda_hat, frame.matrix())?.angles)
}

/// Symmetrize, diagonalize, and read off the canonical parameters.
pub fn extract_params<T: Real>(a_hat: &ChannelMatrix<T>) -> Result<ParamEstimate<T>> {
    let eig = eig3_symmetric(&symmetrize(a_hat))?;
    let lambda_hat = ContractionTriple(eig.values);
    let frame = OrthogonalFrame::from_matrix(eig.vectors)?;
    let phi_hat = extract_angles(&frame, &lambda_hat)?;
    Ok(ParamEstimate {
        lambda_hat,
        phi_hat,
        frame,
        cp_valid: cp_check(&lambda_hat),
    })
}

/// Nonzero first derivatives of the parameter map at `diag(λ)`.
///
/// Angle derivatives are with respect to the symmetrized off-diagonal entry
/// `â_{ab,s} = ½(â_ab + â_ba)`. Every partial not listed is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTable<T> {
    /// `∂λ̂_i/∂â_ii`.
    pub d_lambda: [T; 3],
    /// `∂φ̂_z/∂â_{12,s} = 1/(λ₁ − λ₂)`.
    pub d_phi_z: T,
    /// `∂φ̂_y/∂â_{13,s} = 1/(λ₁ − λ₃)`.
    pub d_phi_y: T,
    /// `∂φ̂_x/∂â_{23,s} = 1/(λ₂ − λ₃)`.
    pub d_phi_x: T,
}

pub fn derivative_table<T: Real>(lambda: &ContractionTriple<T>) -> Result<DerivativeTable<T>> {
    if !lambda.is_finite() {
        return Err(invalid("derivative_table: non-finite eigenvalue"));
    }
    let [l1, l2, l3] = lambda.0;
    if !(l1 > l2 && l2 > l3) {
        return Err(Error::DegenerateSpectrum {
            lambda: lambda.0.map(Real::to_f64_lossy),
        });
    }
    lambda.require_distinct()?;
    Ok(DerivativeTable {
        d_lambda: [T::one(); 3],
        d_phi_z: T::one() / (l1 - l2),
        d_phi_y: T::one() / (l1 - l3),
        d_phi_x: T::one() / (l2 - l3),
    })
}

/// First-order estimates `(λ̃, φ̃)` around a diagonal true channel.
///
/// `a_true` must be `diag(λ₁, λ₂, λ₃)` with a strictly decreasing diagonal;
/// a general channel is first brought to this form by conjugating both
/// matrices with the transpose of its rotation. Angles are returned as signed
/// deviations from zero and are not reduced.
pub fn linearized_estimates<T: Real>(
    a_true: &ChannelMatrix<T>,
    a_hat: &ChannelMatrix<T>,
) -> Result<(ContractionTriple<T>, AngleTriple<T>)> {
    let a = &a_true.0;
    if !a.is_finite() || !a_hat.0.is_finite() {
        return Err(invalid("linearized_estimates: non-finite input"));
    }
    let off = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| a[(i, j)].abs().max(a[(j, i)].abs()))
        .fold(T::zero(), T::max);
    if off > T::lit(T::EPS_NUM) {
        return Err(invalid(
            "linearized_estimates: true channel must be diagonal (rotate into its eigenframe first)",
        ));
    }
    let lambda = ContractionTriple([a[(0, 0)], a[(1, 1)], a[(2, 2)]]);
    let table = derivative_table(&lambda)?;
    let s = symmetrize(a_hat);
    let lambda_tilde = ContractionTriple(std::array::from_fn(|i| {
        lambda.0[i] + table.d_lambda[i] * (s[(i, i)] - lambda.0[i])
    }));
    let phi_tilde = AngleTriple::new(
        table.d_phi_z * s[(0, 1)],
        table.d_phi_y * s[(0, 2)],
        table.d_phi_x * s[(1, 2)],
    );
    Ok((lambda_tilde, phi_tilde))
}

/// `min_k |a − (b + kπ)|`, in `[0, π/2]`.
pub fn angle_distance<T: Real>(a: T, b: T) -> T {
    signed_angle_difference(a, b).abs()
}

/// `a − b` shifted by a multiple of π into `[−π/2, π/2]`.
pub fn signed_angle_difference<T: Real>(a: T, b: T) -> T {
    let pi = T::PI();
    let d = a - b;
    let r = d - (d / pi).round() * pi;
    r.max(-T::FRAC_PI_2()).min(T::FRAC_PI_2())
}
