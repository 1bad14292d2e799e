//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits as nt;

/// Real floating-point types the tomography routines are generic over.
///
/// Besides the usual arithmetic, each type carries the tolerances used for
/// boundary decisions (complete positivity, eigenvalue degeneracy, angle
/// snapping). They are tuned to the precision of the type, so `f32` gets
/// coarser thresholds than `f64`.
pub trait Real:
    nt::Float
    + nt::FloatConst
    + nt::FromPrimitive
    + nt::ToPrimitive
    + nt::NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Slack allowed on the complete-positivity inequalities.
    const EPS_CP: f64;
    /// Relative gap below which two eigenvalues are treated as equal.
    const EPS_DEG: f64;
    /// Round-trip tolerance for composed/extracted channel matrices.
    const EPS_NUM: f64;
    /// Allowed deviation of `FᵀF` from the identity for a frame.
    const EPS_ORTHO: f64;
    /// Angles closer than this to a domain boundary are snapped onto it.
    const EPS_ANGLE: f64;
    /// Allowed asymmetry of a matrix handed to the symmetric eigensolver.
    const EPS_SYM: f64;

    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in the implementing types, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const EPS_CP: f64 = 1e-12;
    const EPS_DEG: f64 = 1e-9;
    const EPS_NUM: f64 = 1e-9;
    const EPS_ORTHO: f64 = 1e-9;
    const EPS_ANGLE: f64 = 1e-12;
    const EPS_SYM: f64 = 1e-12;
}

impl Real for f32 {
    const EPS_CP: f64 = 1e-5;
    const EPS_DEG: f64 = 1e-4;
    const EPS_NUM: f64 = 1e-4;
    const EPS_ORTHO: f64 = 1e-4;
    const EPS_ANGLE: f64 = 1e-5;
    const EPS_SYM: f64 = 1e-5;
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn literals_convert() {
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(f64::lit(0.1), 0.1);
    }
}
