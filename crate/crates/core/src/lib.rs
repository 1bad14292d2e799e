//! Pauli-channel tomography for a single qubit when the channel's principal
//! axes are unknown.
//!
//! A Pauli channel in an unknown orientation acts on Bloch vectors as
//! `A = R Λ Rᵀ`, with contraction parameters `Λ = diag(λ₁, λ₂, λ₃)` and a
//! rotation `R = R_z(φ_z) R_y(φ_y) R_x(φ_x)`. The crate covers the forward
//! model, simulated measurement counts, linear-inversion estimation of `A`,
//! recovery of `(λ, φ)` from the estimate, analytic and Monte-Carlo risk of
//! the estimators, and optimization of the input/measurement frames.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the scalar.

pub mod design;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod extraction;
pub mod linalg;
pub mod model;
pub mod risk;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use experiment::{
    build_frame, estimate_channel_matrix, estimate_x, forward_outcomes, sample_counts,
    sample_counts_trial, simulate_channel_estimate, CountsMatrix, ExperimentDesign,
    OrthogonalFrame, OutcomeMatrix,
};
pub use extraction::{
    angle_distance, derivative_table, eig3_symmetric, extract_angles, extract_params,
    linearized_estimates, symmetrize, DerivativeTable, ParamEstimate,
};
pub use linalg::{Mat3, Vec3};
pub use model::{
    apply_channel, bloch_to_density, canonicalize, compose_channel_matrix, cp_check,
    measurement_probability, rotation_matrix, AngleTriple, Axis, BlochVector, ChannelMatrix,
    ChannelParams, ContractionTriple, Degeneracy, DensityMatrix,
};
pub use scalar::Real;

pub type Mat3f64 = Mat3<f64>;
pub type AngleTriple64 = AngleTriple<f64>;
pub type ContractionTriple64 = ContractionTriple<f64>;
pub type ChannelParams64 = ChannelParams<f64>;
pub type ChannelMatrix64 = ChannelMatrix<f64>;
pub type OrthogonalFrame64 = OrthogonalFrame<f64>;
pub type ExperimentDesign64 = ExperimentDesign<f64>;
pub type ParamEstimate64 = ParamEstimate<f64>;

pub type Mat3f32 = Mat3<f32>;
pub type AngleTriple32 = AngleTriple<f32>;
pub type ContractionTriple32 = ContractionTriple<f32>;
pub type ChannelParams32 = ChannelParams<f32>;
pub type ChannelMatrix32 = ChannelMatrix<f32>;
pub type OrthogonalFrame32 = OrthogonalFrame<f32>;
pub type ExperimentDesign32 = ExperimentDesign<f32>;
pub type ParamEstimate32 = ParamEstimate<f32>;
