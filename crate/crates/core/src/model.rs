//! Bloch-picture primitives: states, measurements, rotations and the
//! Pauli-channel matrix `A = R Λ Rᵀ` with `R = R_z(φ_z) R_y(φ_y) R_x(φ_x)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Rotation by `angle` about a coordinate axis.
///
/// `R_z` and `R_x` are right-handed. `R_y` has `+sin` in entry (3,1) and
/// `-sin` in (1,3), so `R_y(π/2)` takes `e₁` to `e₃`.
pub fn rotation_matrix<T: Real>(axis: Axis, angle: T) -> Result<Mat3<T>> {
    if !angle.is_finite() {
        return Err(invalid(format!("rotation angle must be finite, got {angle}")));
    }
    Ok(rotation_unchecked(axis, angle))
}

pub(crate) fn rotation_unchecked<T: Real>(axis: Axis, angle: T) -> Mat3<T> {
    let (s, c) = angle.sin_cos();
    let (o, z) = (T::one(), T::zero());
    match axis {
        Axis::Z => Mat3([[c, -s, z], [s, c, z], [z, z, o]]),
        Axis::Y => Mat3([[c, z, -s], [z, o, z], [s, z, c]]),
        Axis::X => Mat3([[o, z, z], [z, c, -s], [z, s, c]]),
    }
}

/// A point of the Bloch ball (states) or sphere (pure states, measurement
/// directions).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlochVector<T>(pub Vec3<T>);

impl<T: Real> BlochVector<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        BlochVector(Vec3::new(x, y, z))
    }

    /// A physical state: norm at most one.
    pub fn state(v: Vec3<T>) -> Result<Self> {
        let norm = v.norm();
        if !v.is_finite() || norm > T::one() + T::lit(T::EPS_NUM) {
            return Err(Error::InvalidState {
                norm: norm.to_f64_lossy(),
            });
        }
        Ok(BlochVector(v))
    }

    /// A unit vector, e.g. a measurement direction.
    pub fn unit(v: Vec3<T>) -> Result<Self> {
        let norm = v.norm();
        if !v.is_finite() || (norm - T::one()).abs() > T::lit(T::EPS_NUM) {
            return Err(invalid(format!("expected a unit Bloch vector, norm is {norm}")));
        }
        Ok(BlochVector(v))
    }

    pub fn norm(&self) -> T {
        self.0.norm()
    }
}

/// Contraction parameters `(λ₁, λ₂, λ₃)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContractionTriple<T>(pub [T; 3]);

impl<T: Real> ContractionTriple<T> {
    pub fn new(l1: T, l2: T, l3: T) -> Self {
        ContractionTriple([l1, l2, l3])
    }

    pub fn sorted_desc(&self) -> Self {
        let mut l = self.0;
        l.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        ContractionTriple(l)
    }

    pub fn is_sorted_desc(&self) -> bool {
        self.0[0] >= self.0[1] && self.0[1] >= self.0[2]
    }

    pub fn sum_squares(&self) -> T {
        self.0.iter().map(|&l| l * l).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|l| l.is_finite())
    }

    pub fn degeneracy(&self) -> Degeneracy {
        let [a, b, c] = self.0;
        match (nearly_equal(a, b), nearly_equal(b, c)) {
            (true, true) => Degeneracy::Triple,
            (true, false) => Degeneracy::TopPair,
            (false, true) => Degeneracy::BottomPair,
            (false, false) if nearly_equal(a, c) => Degeneracy::Triple,
            (false, false) => Degeneracy::Distinct,
        }
    }

    /// `Ok` when all three eigenvalues are separated by more than the
    /// degeneracy threshold.
    pub fn require_distinct(&self) -> Result<()> {
        match self.degeneracy() {
            Degeneracy::Distinct => Ok(()),
            _ => Err(Error::DegenerateSpectrum {
                lambda: self.0.map(Real::to_f64_lossy),
            }),
        }
    }
}

/// Which eigenvalues of a sorted triple coincide (within `EPS_DEG`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    Distinct,
    /// `λ₁ = λ₂ > λ₃`
    TopPair,
    /// `λ₁ > λ₂ = λ₃`
    BottomPair,
    Triple,
}

fn nearly_equal<T: Real>(a: T, b: T) -> bool {
    let scale = T::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= T::lit(T::EPS_DEG) * scale
}

/// Euler angles `(α_z, α_y, α_x)` in radians, composed as `R_z R_y R_x`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AngleTriple<T> {
    pub z: T,
    pub y: T,
    pub x: T,
}

impl<T: Real> AngleTriple<T> {
    pub fn new(z: T, y: T, x: T) -> Self {
        AngleTriple { z, y, x }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.z, self.y, self.x]
    }

    pub fn from_array([z, y, x]: [T; 3]) -> Self {
        Self::new(z, y, x)
    }

    pub fn is_finite(&self) -> bool {
        self.z.is_finite() && self.y.is_finite() && self.x.is_finite()
    }

    /// `R_z(z) R_y(y) R_x(x)`.
    pub fn rotation(&self) -> Mat3<T> {
        rotation_unchecked(Axis::Z, self.z)
            * rotation_unchecked(Axis::Y, self.y)
            * rotation_unchecked(Axis::X, self.x)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    pub contraction: ContractionTriple<T>,
    pub angles: AngleTriple<T>,
}

impl<T: Real> ChannelParams<T> {
    pub fn new(lambda: [T; 3], phi: [T; 3]) -> Self {
        ChannelParams {
            contraction: ContractionTriple(lambda),
            angles: AngleTriple::from_array(phi),
        }
    }

    pub fn lambda(&self) -> [T; 3] {
        self.contraction.0
    }

    pub fn matrix(&self) -> Result<ChannelMatrix<T>> {
        compose_channel_matrix(self)
    }
}

/// Real 3×3 matrix by which a channel acts on Bloch vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix<T>(pub Mat3<T>);

impl<T: Real> ChannelMatrix<T> {
    pub fn diag(lambda: [T; 3]) -> Self {
        ChannelMatrix(Mat3::diag(lambda))
    }

    pub fn mat(&self) -> &Mat3<T> {
        &self.0
    }

    /// `O A Oᵀ`.
    pub fn conjugate(&self, o: &Mat3<T>) -> Self {
        ChannelMatrix(*o * self.0 * o.transpose())
    }
}

/// `A = R Λ Rᵀ` with `R = R_z(φ_z) R_y(φ_y) R_x(φ_x)`.
///
/// Defined for any finite reals; complete positivity is not checked here.
pub fn compose_channel_matrix<T: Real>(params: &ChannelParams<T>) -> Result<ChannelMatrix<T>> {
    if !params.contraction.is_finite() || !params.angles.is_finite() {
        return Err(invalid("channel parameters must be finite"));
    }
    let r = params.angles.rotation();
    let l = params.contraction.0;
    // Σ_k λ_k r_k r_kᵀ over the columns r_k keeps the result exactly symmetric.
    Ok(ChannelMatrix(Mat3::from_fn(|i, j| {
        (0..3).map(|k| l[k] * (r[(i, k)] * r[(j, k)])).sum()
    })))
}

/// Complete positivity: `1 ± λ₃ ≥ |λ₁ ± λ₂|`.
pub fn cp_check<T: Real>(lambda: &ContractionTriple<T>) -> bool {
    let [l1, l2, l3] = lambda.0;
    let eps = T::lit(T::EPS_CP);
    T::one() + l3 + eps >= (l1 + l2).abs() && T::one() - l3 + eps >= (l1 - l2).abs()
}

pub fn apply_channel<T: Real>(a: &ChannelMatrix<T>, theta: &BlochVector<T>) -> BlochVector<T> {
    BlochVector(a.0.mul_vec(&theta.0))
}

/// Probability of the outcome along `m` for the state `theta`: `½(1 + m·θ)`.
pub fn measurement_probability<T: Real>(m: &BlochVector<T>, theta: &BlochVector<T>) -> Result<T> {
    let m = BlochVector::unit(m.0)?;
    let theta = BlochVector::state(theta.0)?;
    let half = T::lit(0.5);
    Ok((half * (T::one() + m.0.dot(&theta.0))).max(T::zero()).min(T::one()))
}

/// 2×2 density matrix `ρ(θ) = ½(I + θ₁σ₁ + θ₂σ₂ + θ₃σ₃)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix<T>(pub [[Complex<T>; 2]; 2]);

impl<T: Real> DensityMatrix<T> {
    pub fn trace(&self) -> Complex<T> {
        self.0[0][0] + self.0[1][1]
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> [T; 2] {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = self.0[0][1];
        let half = T::lit(0.5);
        let disc = ((a - d) * (a - d) + T::lit(4.0) * b.norm_sqr()).sqrt();
        [half * (a + d + disc), half * (a + d - disc)]
    }

    /// Squared Hilbert–Schmidt distance `Tr (ρ−σ)†(ρ−σ)`.
    pub fn hs_distance_squared(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                acc += (self.0[i][j] - other.0[i][j]).norm_sqr();
            }
        }
        acc
    }
}

pub fn bloch_to_density<T: Real>(theta: &BlochVector<T>) -> Result<DensityMatrix<T>> {
    let v = BlochVector::state(theta.0)?.0;
    Ok(density_unchecked(&v))
}

pub(crate) fn density_unchecked<T: Real>(v: &Vec3<T>) -> DensityMatrix<T> {
    let half = T::lit(0.5);
    let (x, y, z) = (v[0] * half, v[1] * half, v[2] * half);
    DensityMatrix([
        [Complex::new(half + z, T::zero()), Complex::new(x, -y)],
        [Complex::new(x, y), Complex::new(half - z, T::zero())],
    ])
}

/// Maps a sorted spectrum and its eigenvector frame to the unique channel
/// parameters in the canonical domain.
///
/// Frame columns must be unit eigenvectors ordered like `lambda_sorted`. An
/// improper frame (det −1) is accepted and made proper by negating its third
/// column. Angles land in `[0, π)³` and follow the degenerate-spectrum
/// conventions: a triple eigenvalue has all angles zero, `λ₁ > λ₂ = λ₃` has
/// `φ_x = 0`, `λ₁ = λ₂ > λ₃` has `φ_x = 0` unless `φ_y = π/2`, any
/// `φ_y = π/2` has `φ_z = 0`, and `φ_x = φ_y = 0` with `λ₁ = λ₂` forces
/// `φ_z = 0`.
pub fn canonicalize<T: Real>(
    lambda_sorted: &ContractionTriple<T>,
    frame: &Mat3<T>,
) -> Result<ChannelParams<T>> {
    if !lambda_sorted.is_finite() || !frame.is_finite() {
        return Err(invalid("canonicalize: non-finite input"));
    }
    let [l1, l2, l3] = lambda_sorted.0;
    let slack = T::lit(T::EPS_DEG);
    if l1 + slack < l2 || l2 + slack < l3 {
        return Err(invalid("canonicalize: eigenvalues must be sorted in descending order"));
    }
    if frame.orthogonality_defect() > T::lit(T::EPS_ORTHO) {
        return Err(invalid("canonicalize: frame is not orthogonal"));
    }
    let mut r = *frame;
    if r.det() < T::zero() {
        r.set_col(2, -r.col(2));
    }

    let class = lambda_sorted.degeneracy();
    let raw = match class {
        Degeneracy::Triple => AngleTriple::zero(),
        Degeneracy::Distinct => euler_zyx(&r),
        Degeneracy::BottomPair => {
            let (z, y) = leading_axis_angles(&r.col(0));
            AngleTriple::new(z, y, T::zero())
        }
        Degeneracy::TopPair => trailing_axis_angles(&r.col(2)),
    };
    let mut a = reduce_channel_angles(raw);

    let eps = T::lit(T::EPS_ANGLE);
    let half_pi = T::FRAC_PI_2();
    if (a.y - half_pi).abs() <= eps {
        // R_z(a) R_y(π/2) = R_y(π/2) R_x(a)
        a.y = half_pi;
        a.x = wrap_pi(a.x + a.z, eps);
        a.z = T::zero();
    }
    match class {
        Degeneracy::Triple => a = AngleTriple::zero(),
        Degeneracy::BottomPair => a.x = T::zero(),
        Degeneracy::TopPair if a.y == T::zero() && a.x == T::zero() => a.z = T::zero(),
        _ => {}
    }
    Ok(ChannelParams {
        contraction: *lambda_sorted,
        angles: a,
    })
}

/// Euler angles of a proper rotation, `R = R_z R_y R_x`, with
/// `φ_y ∈ [−π/2, π/2]`. At gimbal lock `φ_z = 0`.
pub(crate) fn euler_zyx<T: Real>(r: &Mat3<T>) -> AngleTriple<T> {
    let (z, y) = leading_axis_angles(&r.col(0));
    let partial = rotation_unchecked(Axis::Z, z) * rotation_unchecked(Axis::Y, y);
    let rx = partial.transpose() * *r;
    let x = rx[(2, 1)].atan2(rx[(1, 1)]);
    AngleTriple::new(z, y, x)
}

/// `(φ_z, φ_y)` such that `R_z R_y e₁ = v` for a unit `v`:
/// `v = (cos φ_z cos φ_y, sin φ_z cos φ_y, sin φ_y)`.
fn leading_axis_angles<T: Real>(v: &Vec3<T>) -> (T, T) {
    let horiz = v[0].hypot(v[1]);
    let y = v[2].atan2(horiz);
    let z = if horiz <= T::lit(T::EPS_ANGLE) {
        T::zero()
    } else {
        v[1].atan2(v[0])
    };
    (z, y)
}

/// Angles with `φ_x = 0` and `R_z R_y e₃ = w`:
/// `w = (−cos φ_z sin φ_y, −sin φ_z sin φ_y, cos φ_y)`.
fn trailing_axis_angles<T: Real>(w: &Vec3<T>) -> AngleTriple<T> {
    let horiz = w[0].hypot(w[1]);
    if horiz <= T::lit(T::EPS_ANGLE) {
        return AngleTriple::zero();
    }
    let y = horiz.atan2(w[2]);
    let z = (-w[1]).atan2(-w[0]);
    AngleTriple::new(z, y, T::zero())
}

/// Brings channel angles into `[0, π)³` without changing `A`.
///
/// Uses the identities (all from right-multiplying the frame by a diagonal
/// sign matrix of determinant one):
/// `(z, y, x) ~ (z, y, x + π) ~ (z, y + π, −x) ~ (z + π, −y, −x)`.
pub fn reduce_channel_angles<T: Real>(a: AngleTriple<T>) -> AngleTriple<T> {
    let pi = T::PI();
    let eps = T::lit(T::EPS_ANGLE);
    let AngleTriple { mut z, mut y, mut x } = a;

    let (rz, odd) = floor_mod_pi(z);
    z = rz;
    if odd {
        y = -y;
        x = -x;
    }
    if z >= pi - eps {
        z = T::zero();
        y = -y;
        x = -x;
    } else if z <= eps {
        z = T::zero();
    }

    let (ry, odd) = floor_mod_pi(y);
    y = ry;
    if odd {
        x = -x;
    }
    if y >= pi - eps {
        y = T::zero();
        x = -x;
    } else if y <= eps {
        y = T::zero();
    }

    x = wrap_pi(x, eps);
    AngleTriple { z, y, x }
}

/// `a mod π` into `[0, π)` plus whether an odd number of π was removed.
fn floor_mod_pi<T: Real>(a: T) -> (T, bool) {
    let pi = T::PI();
    let k = (a / pi).floor();
    let mut r = a - k * pi;
    // a - kπ can round to π itself
    let mut odd = k.to_f64_lossy().rem_euclid(2.0) != 0.0;
    if r >= pi {
        r -= pi;
        odd = !odd;
    }
    if r < T::zero() {
        r = T::zero();
    }
    (r, odd)
}

/// `a mod π` into `[0, π)`, snapping values within `eps` of 0 or π to 0.
pub(crate) fn wrap_pi<T: Real>(a: T, eps: T) -> T {
    let (r, _) = floor_mod_pi(a);
    if r <= eps || r >= T::PI() - eps {
        T::zero()
    } else {
        r
    }
}
