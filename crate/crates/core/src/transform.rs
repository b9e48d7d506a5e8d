//! 2-D affine transforms stored as a 2x3 matrix `[a b tx; c d ty]`.
//!
//! `apply` maps `(x, y)` to `(a*x + b*y + tx, c*x + d*y + ty)`. Throughout the
//! pipeline a transform forward-maps moving-image coordinates to fixed-image
//! coordinates; resampling onto the fixed grid goes through [`Self::invert`].

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Determinant magnitude below which a transform is treated as singular.
pub const SINGULARITY_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineTransform2D {
    // [a, b, tx, c, d, ty]
    m: [f64; 6],
}

impl AffineTransform2D {
    /// Builds a transform from rows `[[a, b, tx], [c, d, ty]]`, validating
    /// finiteness and invertibility.
    pub fn new(rows: [[f64; 3]; 2]) -> Result<Self> {
        let t = Self::from_rows_unchecked(rows);
        if !t.m.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite transform entry".into()));
        }
        if t.det().abs() < SINGULARITY_EPS {
            return Err(Error::Singular);
        }
        Ok(t)
    }

    pub(crate) fn from_rows_unchecked(rows: [[f64; 3]; 2]) -> Self {
        Self {
            m: [rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2]],
        }
    }

    pub fn identity() -> Self {
        Self { m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0] }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self { m: [1.0, 0.0, tx, 0.0, 1.0, ty] }
    }

    /// Rotation by `degrees` (counter-clockwise in the y-down pixel frame
    /// this would appear clockwise on screen) about the point `(cx, cy)`.
    pub fn rotation_about(degrees: f64, cx: f64, cy: f64) -> Self {
        let r = degrees.to_radians();
        let (s, c) = r.sin_cos();
        Self::linear_about([[c, -s], [s, c]], cx, cy)
    }

    /// `linear * (p - center) + center`.
    pub fn linear_about(l: [[f64; 2]; 2], cx: f64, cy: f64) -> Self {
        let tx = cx - l[0][0] * cx - l[0][1] * cy;
        let ty = cy - l[1][0] * cx - l[1][1] * cy;
        Self { m: [l[0][0], l[0][1], tx, l[1][0], l[1][1], ty] }
    }

    pub fn rows(&self) -> [[f64; 3]; 2] {
        [[self.m[0], self.m[1], self.m[2]], [self.m[3], self.m[4], self.m[5]]]
    }

    pub fn det(&self) -> f64 {
        self.m[0] * self.m[4] - self.m[1] * self.m[3]
    }

    pub fn is_identity(&self) -> bool {
        self.m == [1.0, 0.0, 0.0, 0.0, 1.0, 0.0]
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.m[0] * x + self.m[1] * y + self.m[2],
            self.m[3] * x + self.m[4] * y + self.m[5],
        )
    }

    /// Composition: the result applies `other` first, then `self`.
    /// Composing with an exact identity returns the other operand unchanged.
    pub fn compose(&self, other: &Self) -> Self {
        if self.is_identity() {
            return *other;
        }
        if other.is_identity() {
            return *self;
        }
        let a = self.m;
        let b = other.m;
        Self {
            m: [
                a[0] * b[0] + a[1] * b[3],
                a[0] * b[1] + a[1] * b[4],
                a[0] * b[2] + a[1] * b[5] + a[2],
                a[3] * b[0] + a[4] * b[3],
                a[3] * b[1] + a[4] * b[4],
                a[3] * b[2] + a[4] * b[5] + a[5],
            ],
        }
    }

    /// Inverse transform; errors with [`Error::Singular`] when `|det| < 1e-12`.
    pub fn invert(&self) -> Result<Self> {
        let det = self.det();
        if det.abs() < SINGULARITY_EPS {
            return Err(Error::Singular);
        }
        if self.is_identity() {
            return Ok(*self);
        }
        let [a, b, tx, c, d, ty] = self.m;
        let ia = d / det;
        let ib = -b / det;
        let ic = -c / det;
        let id = a / det;
        Self::new([[ia, ib, -(ia * tx + ib * ty)], [ic, id, -(ic * tx + id * ty)]])
    }

    /// Largest absolute entry-wise difference between two transforms.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Conjugation by uniform scale: returns `S . self . S^-1` where
    /// `S = diag(s, s)`. Used to lift a transform estimated at a coarser
    /// pyramid level back to full resolution (linear part unchanged,
    /// translation scaled).
    pub fn rescaled(&self, s: f64) -> Self {
        let [a, b, tx, c, d, ty] = self.m;
        Self { m: [a, b, tx * s, c, d, ty * s] }
    }
}

// Serialized as {"matrix": [[a, b, tx], [c, d, ty]]}.
impl Serialize for AffineTransform2D {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            matrix: [[f64; 3]; 2],
        }
        Repr { matrix: self.rows() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AffineTransform2D {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            matrix: [[f64; 3]; 2],
        }
        let r = Repr::deserialize(deserializer)?;
        AffineTransform2D::new(r.matrix).map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_with_identity_is_exact() {
        let t = AffineTransform2D::new([[1.3, -0.2, 4.0], [0.1, 0.9, -2.5]]).unwrap();
        let id = AffineTransform2D::identity();
        assert_eq!(id.compose(&t), t);
        assert_eq!(t.compose(&id), t);
    }

    #[test]
    fn compose_then_invert_is_identity() {
        let t = AffineTransform2D::new([[1.3, -0.2, 4.0], [0.1, 0.9, -2.5]]).unwrap();
        let round = t.compose(&t.invert().unwrap());
        assert!(round.max_abs_diff(&AffineTransform2D::identity()) < 1e-12);
    }

    #[test]
    fn rotations_compose() {
        let r30 = AffineTransform2D::rotation_about(30.0, 0.0, 0.0);
        let r60 = AffineTransform2D::rotation_about(60.0, 0.0, 0.0);
        let r90 = AffineTransform2D::rotation_about(90.0, 0.0, 0.0);
        assert!(r30.compose(&r60).max_abs_diff(&r90) < 1e-12);
    }

    #[test]
    fn invert_translation() {
        let t = AffineTransform2D::translation(3.0, -2.0);
        let inv = t.invert().unwrap();
        assert_eq!(inv.rows(), [[1.0, 0.0, -3.0], [0.0, 1.0, 2.0]]);
        assert_eq!(
            AffineTransform2D::identity().invert().unwrap(),
            AffineTransform2D::identity()
        );
    }

    #[test]
    fn singular_is_rejected() {
        assert!(matches!(
            AffineTransform2D::new([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]]),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn json_round_trip() {
        let t = AffineTransform2D::new([[1.25, 0.5, -3.0], [-0.5, 1.25, 7.5]]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"matrix\""));
        let back: AffineTransform2D = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
