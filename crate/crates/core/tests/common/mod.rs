//! Independent oracles shared by the integration tests. Nothing here calls
//! into the estimators; kernels are written out from their closed forms.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use wob::geometry::Boundary;
use wob::math::Vec3;
use wob::problem::{BoundaryCondition, ProblemSpec};

/// 8-point Gauss-Legendre rule on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

fn g2(x: &Vec3, y: &Vec3) -> f64 {
    -(y - x).norm().ln() / (2.0 * PI)
}

fn dg_dnx2(x: &Vec3, y: &Vec3, nx: &Vec3) -> f64 {
    let r = y - x;
    r.dot(nx) / (2.0 * PI * r.norm_squared())
}

/// `(∫_e G(x, y) dy, ∫_e ∂G/∂n_x(x, y) dy)` over segment `e`, where `x`
/// is the midpoint of element `i`. Neighbouring segments are split into
/// sub-intervals; the self term of `G` is integrated in closed form and the
/// self term of `∂G/∂n_x` vanishes on a straight segment.
fn segment_integrals(b: &Boundary, i: usize, e: usize, x: &Vec3, nx: &Vec3) -> (f64, f64) {
    let el = b.element(e);
    let a = b.vertices()[el.vertices[0] as usize];
    let c = b.vertices()[el.vertices[1] as usize];
    let h = el.area;
    if i == e {
        return (-(h / (2.0 * PI)) * ((0.5 * h).ln() - 1.0), 0.0);
    }
    let dist = (b.centroid(e) - x).norm();
    let pieces = if dist < 4.0 * h { 16 } else { 1 };
    let (mut s, mut k) = (0.0, 0.0);
    for p in 0..pieces {
        let (t0, t1) = (p as f64 / pieces as f64, (p + 1) as f64 / pieces as f64);
        for (xi, w) in GL8 {
            let t = t0 + 0.5 * (xi + 1.0) * (t1 - t0);
            let y = a + t * (c - a);
            let wt = w * 0.5 * (t1 - t0) * h;
            s += g2(x, &y) * wt;
            k += dg_dnx2(x, &y, nx) * wt;
        }
    }
    (s, k)
}

/// Piecewise-constant single-layer density from midpoint collocation of
/// the boundary integral equations, one row per element:
///
/// * Dirichlet: `S μ = ū_D`
/// * Neumann: `μ + 2φ K' μ = 2φ q̄_N`
/// * Robin: `μ + 2φ (K' + ᾱ S) μ = 2φ ḡ_R`
pub struct BemSolution {
    pub mu: Vec<f64>,
}

impl BemSolution {
    pub fn solve(b: &Boundary, spec: &ProblemSpec) -> BemSolution {
        let n = b.len();
        let phi = spec.phi();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..n {
            let x = b.centroid(i);
            let nx = b.element(i).normal;
            let row: Vec<(f64, f64)> = (0..n).map(|e| segment_integrals(b, i, e, &x, &nx)).collect();
            match spec.condition(b, i) {
                BoundaryCondition::Dirichlet(u) => {
                    for (j, (s, _)) in row.iter().enumerate() {
                        a[(i, j)] = *s;
                    }
                    rhs[i] = u(&x, &nx);
                }
                BoundaryCondition::Neumann(q) => {
                    for (j, (_, k)) in row.iter().enumerate() {
                        a[(i, j)] = 2.0 * phi * k;
                    }
                    a[(i, i)] += 1.0;
                    rhs[i] = 2.0 * phi * q(&x, &nx);
                }
                BoundaryCondition::Robin { alpha, g } => {
                    let al = alpha(&x, &nx);
                    for (j, (s, k)) in row.iter().enumerate() {
                        a[(i, j)] = 2.0 * phi * (k + al * s);
                    }
                    a[(i, i)] += 1.0;
                    rhs[i] = 2.0 * phi * g(&x, &nx);
                }
            }
        }
        let mu = a.lu().solve(&rhs).expect("collocation matrix is nonsingular");
        BemSolution { mu: mu.iter().copied().collect() }
    }

    /// `u(x) = Σ_j μ_j ∫_{e_j} G(x, y) dy` for `x` off the boundary.
    pub fn potential(&self, b: &Boundary, x: &Vec3) -> f64 {
        (0..b.len())
            .map(|e| {
                let el = b.element(e);
                let a = b.vertices()[el.vertices[0] as usize];
                let c = b.vertices()[el.vertices[1] as usize];
                let s: f64 = GL8
                    .iter()
                    .map(|(xi, w)| g2(x, &(a + 0.5 * (xi + 1.0) * (c - a))) * w * 0.5 * el.area)
                    .sum();
                s * self.mu[e]
            })
            .sum()
    }
}

/// Expected value of the `M`-vertex density walk (last term halved) under
/// the collocation discretisation: `Σ_j c_j T^j f` with `T` the mean
/// transition operator and `f` the source of each row.
pub fn truncated_density(b: &Boundary, spec: &ProblemSpec, k: f64, m: usize) -> Vec<f64> {
    let n = b.len();
    let phi = spec.phi();
    let mut t = DMatrix::<f64>::zeros(n, n);
    let mut f = DVector::<f64>::zeros(n);
    for i in 0..n {
        let x = b.centroid(i);
        let nx = b.element(i).normal;
        for e in 0..n {
            let (s, kk) = segment_integrals(b, i, e, &x, &nx);
            t[(i, e)] = match spec.condition(b, i) {
                BoundaryCondition::Dirichlet(_) => -k * s + if i == e { 1.0 } else { 0.0 },
                BoundaryCondition::Neumann(_) => -2.0 * phi * kk,
                BoundaryCondition::Robin { alpha, .. } => -2.0 * phi * (kk + alpha(&x, &nx) * s),
            };
        }
        f[i] = match spec.condition(b, i) {
            BoundaryCondition::Dirichlet(u) => k * u(&x, &nx),
            BoundaryCondition::Neumann(q) => 2.0 * phi * q(&x, &nx),
            BoundaryCondition::Robin { g, .. } => 2.0 * phi * g(&x, &nx),
        };
    }
    let mut term = f.clone();
    let mut sum = DVector::<f64>::zeros(n);
    for j in 0..m {
        sum += if j + 1 == m { 0.5 * &term } else { term.clone() };
        term = &t * term;
    }
    sum.iter().copied().collect()
}

/// `sqrt(Σ (a − b)² / Σ b²)`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
