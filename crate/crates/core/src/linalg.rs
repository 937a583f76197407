//! Small dense helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
///
/// Also used for scalar node blocks, in which case only `xx` is populated.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        match (a, b) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            _ => self.xy,
        }
    }

    pub fn add(&mut self, a: usize, b: usize, v: f64) {
        match (a, b) {
            (0, 0) => self.xx += v,
            (1, 1) => self.yy += v,
            (0, 1) => self.xy += v,
            _ => {}
        }
    }

    /// Determinant of the leading `width x width` block.
    pub fn det(&self, width: usize) -> f64 {
        if width == 1 {
            self.xx
        } else {
            self.xx * self.yy - self.xy * self.xy
        }
    }

    /// Inverse of the leading `width x width` block.
    pub fn inverse(&self, width: usize) -> Option<Sym2> {
        let det = self.det(width);
        if !(det.is_finite() && det > 0.0) {
            return None;
        }
        Some(if width == 1 {
            Sym2::new(1.0 / self.xx, 0.0, 0.0)
        } else {
            Sym2::new(self.yy / det, -self.xy / det, self.xx / det)
        })
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.xy * s, self.yy * s)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Solve `A x = b` for symmetric positive definite `A`, falling back to LU.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    a.clone().lu().solve(b)
}

/// Inverse of a symmetric positive definite matrix, falling back to LU.
pub fn inverse_spd(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.inverse());
    }
    a.clone().try_inverse()
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
