//! Fundamental solution of the Laplace operator, `ΔG + δ = 0`, and the
//! derivatives the boundary integral estimators need.
//!
//! With `r = y − x`, `r = |r|` and `c = 2π` (2D) or `4π` (3D):
//!
//! | kernel              | 2D                         | 3D                  |
//! |---------------------|----------------------------|---------------------|
//! | `G`                 | `−log(r) / 2π`             | `1 / 4πr`           |
//! | `∂G/∂x_k`           | `r·e_k / c r^d`            | same                |
//! | `∂G/∂n_y`           | `−r·n_y / c r^d`           | same                |
//! | `∂G/∂n_x`           | `r·n_x / c r^d`            | same                |
//! | `∂²G/∂x_k∂n_y`      | `[n_y·e_k/r^d − d (r·n_y)(r·e_k)/r^{d+2}] / c` |  |

use thiserror::Error;

use crate::math::{Dim, Vec3};

/// Kernel evaluations closer than this (relative to the scene scale) are rejected.
pub const SINGULAR_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum KernelError {
    #[error("kernel singularity: |y - x| = {distance:e}")]
    Singularity { distance: f64 },
}

/// Which kernel to evaluate, with its auxiliary unit vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelKind {
    G,
    DxK { e_k: Vec3 },
    DnY { n_y: Vec3 },
    DnX { n_x: Vec3 },
    DxKDnY { e_k: Vec3, n_y: Vec3 },
}

/// Laplace fundamental solution for a given dimension and scene scale.
#[derive(Clone, Copy, Debug)]
pub struct Green {
    dim: Dim,
    /// `1 / c`.
    inv_c: f64,
    min_r2: f64,
}

impl Green {
    pub fn new(dim: Dim, scale: f64) -> Green {
        let min_r = SINGULAR_REL * scale;
        Green {
            dim,
            inv_c: 1.0 / dim.sphere_measure(),
            min_r2: min_r * min_r,
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// `r = y − x` and `r²`, rejecting near-coincident points.
    #[inline]
    fn offset(&self, x: &Vec3, y: &Vec3) -> Result<(Vec3, f64), KernelError> {
        let r = y - x;
        let r2 = r.norm_squared();
        if r2 < self.min_r2 {
            return Err(KernelError::Singularity { distance: r2.sqrt() });
        }
        Ok((r, r2))
    }

    /// `1 / (c r^d)` from `r²`.
    #[inline]
    fn inv_c_rd(&self, r2: f64) -> f64 {
        match self.dim {
            Dim::Two => self.inv_c / r2,
            Dim::Three => self.inv_c / (r2 * r2.sqrt()),
        }
    }

    #[inline]
    pub fn g(&self, x: &Vec3, y: &Vec3) -> Result<f64, KernelError> {
        let (_, r2) = self.offset(x, y)?;
        Ok(match self.dim {
            // −log(r)/2π = −log(r²)/4π
            Dim::Two => -0.5 * self.inv_c * r2.ln(),
            Dim::Three => self.inv_c / r2.sqrt(),
        })
    }

    /// `∇_x G(x, y)`.
    #[inline]
    pub fn grad_x(&self, x: &Vec3, y: &Vec3) -> Result<Vec3, KernelError> {
        let (r, r2) = self.offset(x, y)?;
        Ok(r * self.inv_c_rd(r2))
    }

    #[inline]
    pub fn dg_dny(&self, x: &Vec3, y: &Vec3, n_y: &Vec3) -> Result<f64, KernelError> {
        let (r, r2) = self.offset(x, y)?;
        Ok(-r.dot(n_y) * self.inv_c_rd(r2))
    }

    #[inline]
    pub fn dg_dnx(&self, x: &Vec3, y: &Vec3, n_x: &Vec3) -> Result<f64, KernelError> {
        let (r, r2) = self.offset(x, y)?;
        Ok(r.dot(n_x) * self.inv_c_rd(r2))
    }

    /// `∇_x ∂G/∂n_y(x, y)`, i.e. the vector of `∂²G/∂x_k∂n_y` over k.
    #[inline]
    pub fn grad_x_dg_dny(&self, x: &Vec3, y: &Vec3, n_y: &Vec3) -> Result<Vec3, KernelError> {
        let (r, r2) = self.offset(x, y)?;
        let d = self.dim.n() as f64;
        let base = self.inv_c_rd(r2);
        Ok(base * (n_y - r * (d * r.dot(n_y) / r2)))
    }

    /// Generic entry point over [`KernelKind`].
    pub fn eval(&self, kind: &KernelKind, x: &Vec3, y: &Vec3) -> Result<f64, KernelError> {
        match kind {
            KernelKind::G => self.g(x, y),
            KernelKind::DxK { e_k } => Ok(self.grad_x(x, y)?.dot(e_k)),
            KernelKind::DnY { n_y } => self.dg_dny(x, y, n_y),
            KernelKind::DnX { n_x } => self.dg_dnx(x, y, n_x),
            KernelKind::DxKDnY { e_k, n_y } => Ok(self.grad_x_dg_dny(x, y, n_y)?.dot(e_k)),
        }
    }
}

/// Free-function form with unit scene scale.
pub fn eval_kernel(kind: &KernelKind, dim: Dim, x: &Vec3, y: &Vec3) -> Result<f64, KernelError> {
    Green::new(dim, 1.0).eval(kind, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn closed_form_values() {
        let g3 = Green::new(Dim::Three, 1.0);
        let g2 = Green::new(Dim::Two, 1.0);
        let o = Vec3::zeros();
        assert!((g3.g(&o, &v(2.0, 0.0, 0.0)).unwrap() - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!((g3.g(&o, &v(2.0, 0.0, 0.0)).unwrap() - 0.039_788_7).abs() < 1e-7);
        assert_eq!(g2.g(&o, &v(1.0, 0.0, 0.0)).unwrap(), 0.0);
        let x = v(1.0, 0.0, 0.0);
        assert!((g3.dg_dny(&o, &x, &x).unwrap() + 1.0 / (4.0 * PI)).abs() < 1e-15);
        let z = v(0.0, 0.0, 1.0);
        let val = g3
            .eval(&KernelKind::DxKDnY { e_k: z, n_y: z }, &o, &z)
            .unwrap();
        assert!((val + 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn singularity_is_an_error() {
        let g = Green::new(Dim::Two, 1.0);
        let x = v(0.3, 0.1, 0.0);
        assert!(matches!(g.g(&x, &x), Err(KernelError::Singularity { .. })));
        assert!(g.g(&x, &(x + v(1e-11, 0.0, 0.0))).is_ok());
    }

    #[test]
    fn finite_difference_derivatives() {
        let h = 1e-5;
        for dim in [Dim::Two, Dim::Three] {
            let g = Green::new(dim, 1.0);
            let x = dim.project(v(0.1, -0.2, 0.3));
            let y = dim.project(v(0.7, 0.4, -0.5));
            let n_y = dim.project(v(0.3, -0.8, 0.5)).normalize();
            for k in 0..dim.n() {
                let mut e = Vec3::zeros();
                e[k] = 1.0;
                let fd = (g.g(&(x + h * e), &y).unwrap() - g.g(&(x - h * e), &y).unwrap()) / (2.0 * h);
                let an = g.eval(&KernelKind::DxK { e_k: e }, &x, &y).unwrap();
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "{dim:?} k={k}: {fd} vs {an}");

                let fd2 = (g.dg_dny(&(x + h * e), &y, &n_y).unwrap()
                    - g.dg_dny(&(x - h * e), &y, &n_y).unwrap())
                    / (2.0 * h);
                let an2 = g.eval(&KernelKind::DxKDnY { e_k: e, n_y }, &x, &y).unwrap();
                assert!((fd2 - an2).abs() <= 1e-5 * an2.abs().max(1e-3), "{dim:?} k={k}: {fd2} vs {an2}");
            }
            // ∂G/∂n_y is the derivative along n_y with respect to y.
            let fd = (g.g(&x, &(y + h * n_y)).unwrap() - g.g(&x, &(y - h * n_y)).unwrap()) / (2.0 * h);
            let an = g.dg_dny(&x, &y, &n_y).unwrap();
            assert!((fd - an).abs() <= 1e-5 * an.abs());
        }
    }

    #[test]
    fn normal_derivative_antisymmetry() {
        for dim in [Dim::Two, Dim::Three] {
            let g = Green::new(dim, 1.0);
            let x = dim.project(v(0.2, 0.5, -0.1));
            let y = dim.project(v(-0.4, 0.1, 0.6));
            let n = dim.project(v(0.6, 0.0, 0.8)).normalize();
            // Moving the normal from y to x flips the sign; swapping the
            // points as well restores it.
            let a = g.dg_dnx(&x, &y, &n).unwrap();
            let b = g.dg_dny(&x, &y, &n).unwrap();
            assert!((a + b).abs() < 1e-15 * a.abs().max(1.0));
            let c = g.dg_dny(&y, &x, &n).unwrap();
            assert!((a - c).abs() < 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn harmonic_away_from_source() {
        let h = 1e-3;
        for dim in [Dim::Two, Dim::Three] {
            let g = Green::new(dim, 1.0);
            let y = Vec3::zeros();
            let x = dim.project(v(0.6, 0.8, 0.0));
            let mut lap = -2.0 * dim.n() as f64 * g.g(&x, &y).unwrap();
            for k in 0..dim.n() {
                let mut e = Vec3::zeros();
                e[k] = h;
                lap += g.g(&(x + e), &y).unwrap() + g.g(&(x - e), &y).unwrap();
            }
            lap /= h * h;
            assert!(lap.abs() < 1e-4, "{dim:?}: {lap}");
        }
    }
}
