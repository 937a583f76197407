//! Hybrid approximation `S` to the inverse fixed-effect information:
//! block-diagonal inverse plus a low-rank correction along the aggregate
//! directions `u+ = (1, ..., 1)` and `u- = (1, -1, ..., 1, -1)`.

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::linalg::Sym2;
use crate::model::HessianParts;
use crate::penalty::inverse_blocks;

#[derive(Debug, Clone)]
pub struct HybridInverse {
    pub width: usize,
    pub blocks_inv: Vec<Sym2>,
    /// `U' (-H_lambda_lambda) U`, 2x2 (1x1 in the undirected model).
    pub core: DMatrix<f64>,
    pub core_inv: DMatrix<f64>,
}

impl HybridInverse {
    pub fn new(h: &HessianParts) -> Result<Self, ModelError> {
        let w = h.width;
        let blocks_inv = inverse_blocks(&h.blocks, w)?;
        let m = h.dim_lambda();
        let r = w;
        let mut hu = Vec::with_capacity(r);
        for b in 0..r {
            hu.push(h.neg_hll_matvec(&Self::basis(w, m, b)));
        }
        let mut core = DMatrix::zeros(r, r);
        for a in 0..r {
            let ua = Self::basis(w, m, a);
            for b in 0..r {
                core[(a, b)] = ua.dot(&hu[b]);
            }
        }
        let core_inv = core
            .clone()
            .try_inverse()
            .filter(|c| c.iter().all(|v| v.is_finite()))
            .ok_or(ModelError::Singular("hybrid inverse core"))?;
        Ok(Self {
            width: w,
            blocks_inv,
            core,
            core_inv,
        })
    }

    /// Aggregate direction `b`: `u+` for `b = 0`, `u-` for `b = 1`.
    pub fn basis(width: usize, m: usize, b: usize) -> DVector<f64> {
        DVector::from_fn(m, |r, _| if b == 1 && r % width == 1 { -1.0 } else { 1.0 })
    }

    #[inline]
    fn u(&self, b: usize, r: usize) -> f64 {
        if b == 1 && r % self.width == 1 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks_inv.len() * self.width
    }

    /// `S f`.
    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        let w = self.width;
        let m = self.dim();
        let mut out = DVector::zeros(m);
        let mut uf = [0.0; 2];
        for r in 0..m {
            for (b, acc) in uf.iter_mut().enumerate().take(w) {
                *acc += self.u(b, r) * f[r];
            }
        }
        let mut coef = [0.0; 2];
        for a in 0..w {
            for b in 0..w {
                coef[a] += self.core_inv[(a, b)] * uf[b];
            }
        }
        for (i, e) in self.blocks_inv.iter().enumerate() {
            for a in 0..w {
                let mut acc = 0.0;
                for b in 0..w {
                    acc += e.get(a, b) * f[i * w + b];
                }
                let r = i * w + a;
                for (c, cf) in coef.iter().enumerate().take(w) {
                    acc += self.u(c, r) * cf;
                }
                out[r] = acc;
            }
        }
        out
    }

    /// Entry `S[r, c]`.
    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let w = self.width;
        let mut v = 0.0;
        if r / w == c / w {
            v += self.blocks_inv[r / w].get(r % w, c % w);
        }
        for a in 0..w {
            for b in 0..w {
                v += self.u(a, r) * self.core_inv[(a, b)] * self.u(b, c);
            }
        }
        v
    }

    /// Low-rank part only: `(U M^{-1} U')[r, c]`, which depends on the
    /// effect types of `r` and `c` but not their nodes.
    #[inline]
    pub fn low_rank(&self, kr: usize, kc: usize) -> f64 {
        let mut v = 0.0;
        for a in 0..self.width {
            for b in 0..self.width {
                v += self.u(a, kr) * self.core_inv[(a, b)] * self.u(b, kc);
            }
        }
        v
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |r, c| self.entry(r, c))
    }
}

/// `S f` for the information held in `h`.
pub fn hybrid_inverse_apply(h: &HessianParts, f: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
    Ok(HybridInverse::new(h)?.apply(f))
}
