//! Reference computations on plain arrays, written without the library's
//! matrix types or loss code.

pub type M3 = [[f64; 3]; 3];

pub fn mul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn transpose(a: &M3) -> M3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn diag(d: [f64; 3]) -> M3 {
    [[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]]
}

/// `R_z(z) R_y(y) R_x(x)`; `R_y(π/2)` takes `e₁` to `e₃`.
pub fn rotation(z: f64, y: f64, x: f64) -> M3 {
    let (sz, cz) = z.sin_cos();
    let (sy, cy) = y.sin_cos();
    let (sx, cx) = x.sin_cos();
    let rz = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
    let ry = [[cy, 0.0, -sy], [0.0, 1.0, 0.0], [sy, 0.0, cy]];
    let rx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
    mul(&rz, &mul(&ry, &rx))
}

/// `R Λ Rᵀ`.
pub fn channel(lambda: [f64; 3], r: &M3) -> M3 {
    mul(r, &mul(&diag(lambda), &transpose(r)))
}

/// Covariance of the nine entries of `Â = M X̂ Θᵀ` (row-major), where the
/// outcome estimates are independent with variance `(1 − x_kl²)/N`.
pub fn estimate_covariance(a: &M3, theta: &M3, meas: &M3, shots: u64) -> [[f64; 9]; 9] {
    let x = mul(&transpose(meas), &mul(a, theta));
    let mut cov = [[0.0; 9]; 9];
    for (p, row) in cov.iter_mut().enumerate() {
        for (q, entry) in row.iter_mut().enumerate() {
            let (i, j, u, v) = (p / 3, p % 3, q / 3, q % 3);
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    s += meas[i][k] * theta[j][l] * meas[u][k] * theta[v][l] * (1.0 - x[k][l] * x[k][l]);
                }
            }
            *entry = s / shots as f64;
        }
    }
    cov
}

/// Matrix, contraction and angle losses of a diagonal channel read off the
/// entry covariance.
pub fn losses(lambda: [f64; 3], theta: &M3, meas: &M3, shots: u64) -> (f64, f64, f64) {
    let cov = estimate_covariance(&diag(lambda), theta, meas, shots);
    let at = |i: usize, j: usize| 3 * i + j;
    let pair = |i: usize, j: usize| {
        let (p, q) = (at(i, j), at(j, i));
        cov[p][p] + cov[q][q] + 2.0 * cov[p][q]
    };
    let g: f64 = (0..3).map(|i| cov[at(i, i)][at(i, i)]).sum();
    let (mut f, mut h) = (g, 0.0);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        f += pair(i, j) / 2.0;
        h += pair(i, j) / (4.0 * (lambda[i] - lambda[j]).powi(2));
    }
    (f, g, h)
}

/// Planar angle loss with inputs `R(ϑ)` and measurements `R(τ)` in the plane.
pub fn planar_loss(l1: f64, l2: f64, tau: f64, vartheta: f64, shots: u64) -> f64 {
    let rot = |a: f64| {
        let (s, c) = a.sin_cos();
        [[c, -s], [s, c]]
    };
    let (m, t) = (rot(tau), rot(vartheta));
    let lam = [l1, l2];
    let mut var = 0.0;
    for k in 0..2 {
        for l in 0..2 {
            let x = m[0][k] * lam[0] * t[0][l] + m[1][k] * lam[1] * t[1][l];
            let w = m[0][k] * t[1][l] + m[1][k] * t[0][l];
            var += w * w * (1.0 - x * x);
        }
    }
    var / shots as f64 / (4.0 * (l1 - l2).powi(2))
}

/// Largest entrywise distance between `Q` and the nearest signed
/// permutation matrix.
pub fn signed_permutation_defect(q: &M3) -> f64 {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS
        .iter()
        .map(|p| {
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let target = if p[i] == j { q[i][j].signum() } else { 0.0 };
                    worst = worst.max((q[i][j] - target).abs());
                }
            }
            worst
        })
        .fold(f64::INFINITY, f64::min)
}
