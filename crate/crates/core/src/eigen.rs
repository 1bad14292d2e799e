//! Eigen-decomposition of real symmetric 3×3 matrices.
//!
//! The eigenvalues come from the trigonometric solution of the
//! characteristic cubic, each polished by one Newton step. Eigenvectors are
//! cross products of rows of `S − λI`. When two roots are closer than
//! [`CLOSE_ROOTS`] (relative to the matrix scale) or the cross-product
//! vectors leave a residual above [`RESIDUAL_LIMIT`], the cyclic Jacobi
//! method is used instead.

use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Relative root separation below which the closed form is not trusted
/// (raised to `√ε` for types coarser than `f64`).
pub const CLOSE_ROOTS: f64 = 1e-6;
/// Residual `‖S v − λ v‖ / ‖S‖` accepted from the closed form, in units of
/// machine epsilon.
pub const RESIDUAL_ULPS: f64 = 512.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricEigen<T> {
    /// Descending.
    pub values: [T; 3],
    /// Unit eigenvectors as columns, ordered like `values`; det +1.
    pub vectors: Mat3<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// Largest `‖S v_k − λ_k v_k‖` over the three pairs.
    pub fn residual(&self, s: &Mat3<T>) -> T {
        (0..3)
            .map(|k| {
                let v = self.vectors.col(k);
                (s.mul_vec(&v) - v.scale(self.values[k])).norm()
            })
            .fold(T::zero(), T::max)
    }
}

/// Decomposes a symmetric matrix (symmetry is the caller's responsibility).
pub fn symmetric_eigen<T: Real>(s: &Mat3<T>) -> SymmetricEigen<T> {
    let scale = s.max_abs();
    if scale == T::zero() {
        return finish([T::zero(); 3], Mat3::identity());
    }
    let b = s.scale(T::one() / scale);
    let decomposed = closed_form(&b).unwrap_or_else(|| jacobi(&b));
    finish(decomposed.values.map(|l| l * scale), decomposed.vectors)
}

fn closed_form<T: Real>(b: &Mat3<T>) -> Option<SymmetricEigen<T>> {
    let mut roots = cubic_roots(b)?;
    let close = T::lit(CLOSE_ROOTS).max(T::epsilon().sqrt());
    if roots[0] - roots[1] < close || roots[1] - roots[2] < close {
        return None;
    }
    for r in roots.iter_mut() {
        *r = newton_polish(b, *r);
    }
    roots.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));

    let v1 = null_vector(b, roots[0])?;
    let mut v3 = null_vector(b, roots[2])?;
    v3 = (v3 - v1.scale(v1.dot(&v3))).normalized();
    let v2 = v3.cross(&v1);
    let eig = SymmetricEigen {
        values: roots,
        vectors: Mat3::from_cols([v1, v2, v3]),
    };
    (eig.residual(b) <= T::lit(RESIDUAL_ULPS) * T::epsilon()).then_some(eig)
}

/// Roots of `det(B − μI)` by the trigonometric formula, descending.
pub fn cubic_roots<T: Real>(b: &Mat3<T>) -> Option<[T; 3]> {
    let q = b.trace() / T::lit(3.0);
    let p1 = b[(0, 1)].powi(2) + b[(0, 2)].powi(2) + b[(1, 2)].powi(2);
    let p2 = (b[(0, 0)] - q).powi(2)
        + (b[(1, 1)] - q).powi(2)
        + (b[(2, 2)] - q).powi(2)
        + T::lit(2.0) * p1;
    let p = (p2 / T::lit(6.0)).sqrt();
    if p <= T::lit(T::EPS_DEG) {
        return None;
    }
    let shifted = (*b - Mat3::identity().scale(q)).scale(T::one() / p);
    let r = (shifted.det() / T::lit(2.0)).max(-T::one()).min(T::one());
    let phi = r.acos() / T::lit(3.0);
    let two_pi_3 = T::lit(2.0) * T::PI() / T::lit(3.0);
    let e1 = q + T::lit(2.0) * p * phi.cos();
    let e3 = q + T::lit(2.0) * p * (phi + two_pi_3).cos();
    let e2 = T::lit(3.0) * q - e1 - e3;
    Some([e1, e2, e3])
}

fn newton_polish<T: Real>(b: &Mat3<T>, mu: T) -> T {
    // det(B − μI) = −μ³ + c2 μ² − c1 μ + c0
    let c2 = b.trace();
    let c1 = b[(0, 0)] * b[(1, 1)] + b[(0, 0)] * b[(2, 2)] + b[(1, 1)] * b[(2, 2)]
        - b[(0, 1)].powi(2)
        - b[(0, 2)].powi(2)
        - b[(1, 2)].powi(2);
    let c0 = b.det();
    let f = ((-mu + c2) * mu - c1) * mu + c0;
    let df = (T::lit(-3.0) * mu + T::lit(2.0) * c2) * mu - c1;
    if df.abs() <= T::epsilon() {
        mu
    } else {
        mu - f / df
    }
}

/// Unit vector spanning the kernel of `B − μI` (rank two), from the
/// largest cross product of its rows.
fn null_vector<T: Real>(b: &Mat3<T>, mu: T) -> Option<Vec3<T>> {
    let m = *b - Mat3::identity().scale(mu);
    let (r0, r1, r2) = (m.row(0), m.row(1), m.row(2));
    let best = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)]
        .into_iter()
        .max_by(|x, y| {
            x.norm_squared()
                .partial_cmp(&y.norm_squared())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
    let n = best.norm();
    (n > T::epsilon()).then(|| best.scale(T::one() / n))
}

/// Cyclic Jacobi rotations until the off-diagonal part vanishes.
pub fn jacobi<T: Real>(s: &Mat3<T>) -> SymmetricEigen<T> {
    let mut a = *s;
    let mut v = Mat3::<T>::identity();
    let tiny = T::epsilon() * T::epsilon();
    for _sweep in 0..64 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off <= tiny * a.frobenius_squared().max(T::min_positive_value()) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == T::zero() {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let sn = t * c;
            // A ← Jᵀ A J, V ← V J with J the (p, q) plane rotation.
            for k in 0..3 {
                let akp = a[(k, p)];
                let akq = a[(k, q)];
                a[(k, p)] = c * akp - sn * akq;
                a[(k, q)] = sn * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[(p, k)];
                let aqk = a[(q, k)];
                a[(p, k)] = c * apk - sn * aqk;
                a[(q, k)] = sn * apk + c * aqk;
            }
            for k in 0..3 {
                let vkp = v[(k, p)];
                let vkq = v[(k, q)];
                v[(k, p)] = c * vkp - sn * vkq;
                v[(k, q)] = sn * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    SymmetricEigen {
        values: order.map(|k| a[(k, k)]),
        vectors: Mat3::from_cols(order.map(|k| v.col(k))),
    }
}

/// Sign convention: first non-negligible component of each column positive,
/// then the third column negated if needed for det +1.
fn finish<T: Real>(values: [T; 3], vectors: Mat3<T>) -> SymmetricEigen<T> {
    let mut cols = [vectors.col(0), vectors.col(1), vectors.col(2)];
    let tol = T::lit(T::EPS_NUM);
    for c in cols.iter_mut() {
        if let Some(&lead) = c.0.iter().find(|x| x.abs() > tol) {
            if lead < T::zero() {
                *c = -*c;
            }
        }
    }
    let mut m = Mat3::from_cols(cols);
    if m.det() < T::zero() {
        m.set_col(2, -m.col(2));
    }
    SymmetricEigen { values, vectors: m }
}
