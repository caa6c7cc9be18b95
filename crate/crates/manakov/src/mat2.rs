//! Small dense 2x2 complex matrices.
//!
//! Everything the propagators need is closed-form at this size: products,
//! inverses, and the Cayley transform stay exact up to a couple of rounding
//! operations, which is what makes the one-step operators isometries in
//! practice and not just in theory.

use num_complex::Complex64;

/// A 2x2 complex matrix in row-major order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub m: [[Complex64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 {
        m: [[Complex64::ZERO; 2]; 2],
    };

    pub const IDENTITY: Mat2 = Mat2 {
        m: [
            [Complex64::ONE, Complex64::ZERO],
            [Complex64::ZERO, Complex64::ONE],
        ],
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    /// Real multiple of the identity.
    pub fn scalar(s: f64) -> Self {
        Mat2::new(
            Complex64::new(s, 0.0),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(s, 0.0),
        )
    }

    pub fn add(self, o: Mat2) -> Mat2 {
        Mat2 {
            m: [
                [self.m[0][0] + o.m[0][0], self.m[0][1] + o.m[0][1]],
                [self.m[1][0] + o.m[1][0], self.m[1][1] + o.m[1][1]],
            ],
        }
    }

    pub fn sub(self, o: Mat2) -> Mat2 {
        Mat2 {
            m: [
                [self.m[0][0] - o.m[0][0], self.m[0][1] - o.m[0][1]],
                [self.m[1][0] - o.m[1][0], self.m[1][1] - o.m[1][1]],
            ],
        }
    }

    pub fn scale(self, s: Complex64) -> Mat2 {
        Mat2 {
            m: [
                [self.m[0][0] * s, self.m[0][1] * s],
                [self.m[1][0] * s, self.m[1][1] * s],
            ],
        }
    }

    pub fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2 {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
        }
    }

    pub fn apply(self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn det(self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Closed-form inverse; `None` when the determinant underflows to zero.
    pub fn inverse(self) -> Option<Mat2> {
        let det = self.det();
        if det.norm_sqr() == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = det.inv();
        Some(Mat2::new(
            self.m[1][1] * inv,
            -self.m[0][1] * inv,
            -self.m[1][0] * inv,
            self.m[0][0] * inv,
        ))
    }

    pub fn adjoint(self) -> Mat2 {
        Mat2::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    /// Largest entry magnitude, used by tests as a cheap matrix norm.
    pub fn max_abs(self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}
