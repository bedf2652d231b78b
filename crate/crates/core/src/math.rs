//! Minimal 4x4 matrix support for scene-graph transform flattening.
//!
//! Matrices are row-major with column-vector convention (`p' = M * p`), so a
//! node's world transform is `parent_world * local`.

/// Row-major 4x4 transform matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[f64; 4]; 4]);

impl Mat4 {
    pub const IDENTITY: Mat4 = Mat4([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);

    /// Builds from a glTF column-major 16-element array.
    pub fn from_column_major(m: &[f64; 16]) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for row in 0..4 {
            for col in 0..4 {
                out[row][col] = m[col * 4 + row];
            }
        }
        Mat4(out)
    }

    pub fn from_translation(t: [f64; 3]) -> Mat4 {
        let mut m = Mat4::IDENTITY;
        m.0[0][3] = t[0];
        m.0[1][3] = t[1];
        m.0[2][3] = t[2];
        m
    }

    pub fn from_scale(s: [f64; 3]) -> Mat4 {
        let mut m = Mat4::IDENTITY;
        m.0[0][0] = s[0];
        m.0[1][1] = s[1];
        m.0[2][2] = s[2];
        m
    }

    /// Rotation from a glTF quaternion `[x, y, z, w]`.
    ///
    /// Uses the norm-scaled form (`s = 2 / |q|^2`) so non-normalized inputs
    /// still produce a pure rotation without needing a square root.
    pub fn from_quaternion(q: [f64; 4]) -> Mat4 {
        let [x, y, z, w] = q;
        let n = x * x + y * y + z * z + w * w;
        if n == 0.0 {
            return Mat4::IDENTITY;
        }
        let s = 2.0 / n;
        Mat4([
            [
                1.0 - s * (y * y + z * z),
                s * (x * y - z * w),
                s * (x * z + y * w),
                0.0,
            ],
            [
                s * (x * y + z * w),
                1.0 - s * (x * x + z * z),
                s * (y * z - x * w),
                0.0,
            ],
            [
                s * (x * z - y * w),
                s * (y * z + x * w),
                1.0 - s * (x * x + y * y),
                0.0,
            ],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    /// `translation * rotation * scale`, the glTF TRS composition order.
    pub fn from_trs(t: [f64; 3], r: [f64; 4], s: [f64; 3]) -> Mat4 {
        Mat4::from_translation(t) * Mat4::from_quaternion(r) * Mat4::from_scale(s)
    }

    pub fn translation(&self) -> [f64; 3] {
        [self.0[0][3], self.0[1][3], self.0[2][3]]
    }

    /// Componentwise comparison within `eps`.
    pub fn approx_eq(&self, other: &Mat4, eps: f64) -> bool {
        for row in 0..4 {
            for col in 0..4 {
                let d = self.0[row][col] - other.0[row][col];
                if d.abs() > eps {
                    return false;
                }
            }
        }
        true
    }
}

impl core::ops::Mul for Mat4 {
    type Output = Mat4;

    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for row in 0..4 {
            for col in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += self.0[row][k] * rhs.0[k][col];
                }
                out[row][col] = acc;
            }
        }
        Mat4(out)
    }
}

impl Default for Mat4 {
    fn default() -> Self {
        Mat4::IDENTITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_quaternion_is_identity() {
        assert!(Mat4::from_quaternion([0.0, 0.0, 0.0, 1.0]).approx_eq(&Mat4::IDENTITY, 1e-12));
    }

    #[test]
    fn translations_compose() {
        let parent = Mat4::from_translation([1.0, 0.0, 0.0]);
        let child = Mat4::from_translation([0.0, 2.0, 0.0]);
        let world = parent * child;
        assert_eq!(world.translation(), [1.0, 2.0, 0.0]);
    }

    #[test]
    fn quarter_turn_about_z() {
        // 90 degrees about +Z: (1,0,0) -> (0,1,0). sin(45deg) = cos(45deg).
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let r = Mat4::from_quaternion([0.0, 0.0, h, h]);
        let x = [r.0[0][0], r.0[1][0], r.0[2][0]];
        assert!((x[0] - 0.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
        assert!((x[2] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_quaternion_matches_normalized() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let a = Mat4::from_quaternion([0.0, 0.0, h, h]);
        let b = Mat4::from_quaternion([0.0, 0.0, 3.0 * h, 3.0 * h]);
        assert!(a.approx_eq(&b, 1e-12));
    }

    #[test]
    fn column_major_round_trip() {
        let t = Mat4::from_trs([1.0, 2.0, 3.0], [0.0, 0.0, 0.0, 1.0], [2.0, 2.0, 2.0]);
        let mut cm = [0.0; 16];
        for row in 0..4 {
            for col in 0..4 {
                cm[col * 4 + row] = t.0[row][col];
            }
        }
        assert!(Mat4::from_column_major(&cm).approx_eq(&t, 0.0));
    }
}
