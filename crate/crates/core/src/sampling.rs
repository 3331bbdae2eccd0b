//! Direction sampling, ray-based next-point selection, resampled importance
//! sampling and the MIS balance heuristic.
//!
//! Every ray-based step uses the same bookkeeping: for a direction drawn
//! uniformly from the full sphere and one of the `m` crossings picked
//! uniformly, the area-measure density of the chosen point `y` is
//! `|cos θ_y| / (c r^{d−1} m)`. The kernel `∂G/∂n_y` has exactly that
//! magnitude up to the factor `m`, so the kernel/pdf ratio is `∓m` and is
//! returned without ever forming the two quantities separately.

use std::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::geometry::{Boundary, BoundaryPoint, Hit};
use crate::math::{Dim, Vec3};

/// Uniform direction on the unit circle (2D) or sphere (3D).
pub fn sample_sphere_direction<R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> Vec3 {
    match dim {
        Dim::Two => {
            let a = 2.0 * PI * rng.random::<f64>();
            Vec3::new(a.cos(), a.sin(), 0.0)
        }
        Dim::Three => {
            let z = 1.0 - 2.0 * rng.random::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            let a = 2.0 * PI * rng.random::<f64>();
            Vec3::new(s * a.cos(), s * a.sin(), z)
        }
    }
}

/// Solid-angle density of [`sample_sphere_direction`].
pub fn sphere_direction_pdf(dim: Dim) -> f64 {
    1.0 / dim.sphere_measure()
}

/// Uniform direction on the hemisphere `{d : d · axis > 0}`.
pub fn sample_hemisphere_direction<R: Rng + ?Sized>(dim: Dim, axis: &Vec3, rng: &mut R) -> Vec3 {
    let d = sample_sphere_direction(dim, rng);
    if d.dot(axis) < 0.0 {
        -d
    } else {
        d
    }
}

/// A sampled boundary point with the ratio `kernel / pdf_area` of the
/// transition that produced it.
#[derive(Clone, Copy, Debug)]
pub struct NextPoint {
    pub point: BoundaryPoint,
    /// `∂G/∂n_y(from, y) / pdf_area(y)` for backward steps, which equals
    /// `∂G/∂n_x(y, from) / pdf_area(y)` for forward (adjoint) steps:
    /// `−sign(d · n_y) · m` for all-hits sampling and `−sign(d · n_y) / 2`
    /// for hemisphere sampling.
    pub weight: f64,
    /// Number of crossings along the sampled ray.
    pub hits: usize,
}

impl NextPoint {
    fn from_hit(hit: &Hit, m: usize, weight_scale: f64) -> NextPoint {
        NextPoint {
            point: BoundaryPoint {
                position: hit.point,
                normal: hit.normal,
                element: hit.element,
                pdf_area: f64::NAN,
            },
            weight: -hit.cos_theta.signum() * weight_scale,
            hits: m,
        }
    }
}

/// Scratch buffer for ray queries so hot loops do not allocate.
#[derive(Default)]
pub struct HitBuffer(Vec<Hit>);

/// Full-sphere direction, all crossings, one picked uniformly.
///
/// Returns `None` when the ray leaves without crossing Γ; such a step
/// contributes zero to the integral (directions are never redrawn, which
/// would bias steps launched from the boundary where only part of the
/// sphere sees Γ).
pub fn next_point_all_hits<R: Rng + ?Sized>(
    boundary: &Boundary,
    from: &Vec3,
    exclude: Option<usize>,
    buf: &mut HitBuffer,
    rng: &mut R,
) -> Option<NextPoint> {
    let d = sample_sphere_direction(boundary.dim(), rng);
    next_point_along(boundary, from, &d, exclude, buf, rng)
}

/// All-hits selection along a given direction.
pub fn next_point_along<R: Rng + ?Sized>(
    boundary: &Boundary,
    from: &Vec3,
    d: &Vec3,
    exclude: Option<usize>,
    buf: &mut HitBuffer,
    rng: &mut R,
) -> Option<NextPoint> {
    boundary.all_hits_into(from, d, exclude, &mut buf.0);
    let m = buf.0.len();
    if m == 0 {
        return None;
    }
    let pick = if m == 1 { 0 } else { rng.random_range(0..m) };
    let mut np = NextPoint::from_hit(&buf.0[pick], m, m as f64);
    np.point.pdf_area = area_pdf_all_hits(boundary.dim(), from, &np.point, m);
    Some(np)
}

/// Area density of reaching `y` from `from` by all-hits ray sampling, given
/// the crossing count `m` of that ray.
pub fn area_pdf_all_hits(dim: Dim, from: &Vec3, y: &BoundaryPoint, m: usize) -> f64 {
    let r = y.position - from;
    let r2 = r.norm_squared();
    let cos = (r.dot(&y.normal)).abs() / r2.sqrt();
    let rd1 = match dim {
        Dim::Two => r2.sqrt(),
        Dim::Three => r2,
    };
    sphere_direction_pdf(dim) * cos / (rd1 * m as f64)
}

/// Convex-domain step: uniform direction over the inward hemisphere at a
/// boundary point, first crossing.
pub fn next_point_hemisphere<R: Rng + ?Sized>(
    boundary: &Boundary,
    from: &BoundaryPoint,
    rng: &mut R,
) -> Option<NextPoint> {
    let d = sample_hemisphere_direction(boundary.dim(), &(-from.normal), rng);
    let hit = boundary.first_hit_beyond(&from.position, &d, Some(from.element), 0.0)?;
    let mut np = NextPoint::from_hit(&hit, 1, 0.5);
    np.point.pdf_area = 2.0 * area_pdf_all_hits(boundary.dim(), &from.position, &np.point, 1);
    Some(np)
}

/// Outcome of resampled importance sampling.
#[derive(Clone, Copy, Debug)]
pub struct RisSample {
    pub point: BoundaryPoint,
    /// Multiply the integrand at `point` by this to estimate its integral:
    /// `(Σ_j target_j / pdf_j) / (C · target_chosen)`.
    pub weight: f64,
}

/// Selects one candidate with probability ∝ target.
///
/// All-zero targets fall back to a uniform pick with the plain importance
/// weight `1 / pdf`.
pub fn ris_select<R: Rng + ?Sized>(candidates: &[(BoundaryPoint, f64)], rng: &mut R) -> RisSample {
    assert!(!candidates.is_empty(), "RIS needs at least one candidate");
    let mut reservoir = Reservoir::default();
    for (p, t) in candidates {
        reservoir.update(*p, *t, rng);
    }
    reservoir.finish(rng)
}

/// Streaming single-slot reservoir used by [`ris_select`] and the estimators.
#[derive(Default)]
pub struct Reservoir {
    chosen: Option<(BoundaryPoint, f64)>,
    first: Option<BoundaryPoint>,
    /// Σ target / pdf.
    w_sum: f64,
    count: usize,
}

impl Reservoir {
    #[inline]
    pub fn update<R: Rng + ?Sized>(&mut self, p: BoundaryPoint, target: f64, rng: &mut R) {
        debug_assert!(target >= 0.0 && target.is_finite(), "RIS target must be finite and nonnegative");
        self.count += 1;
        if self.first.is_none() {
            self.first = Some(p);
        }
        let w = target / p.pdf_area;
        if w <= 0.0 {
            return;
        }
        self.w_sum += w;
        if rng.random::<f64>() * self.w_sum < w {
            self.chosen = Some((p, target));
        }
    }

    pub fn finish<R: Rng + ?Sized>(self, _rng: &mut R) -> RisSample {
        match self.chosen {
            Some((p, t)) => RisSample {
                point: p,
                weight: self.w_sum / (self.count as f64 * t),
            },
            None => {
                // Candidates are i.i.d., so the first one is a uniform pick.
                let p = self.first.expect("reservoir saw no candidates");
                RisSample {
                    point: p,
                    weight: 1.0 / p.pdf_area,
                }
            }
        }
    }
}

/// Draws `count` uniform boundary candidates and resamples one by `target`.
pub fn ris_uniform<R: Rng + ?Sized>(
    boundary: &Boundary,
    count: usize,
    mut target: impl FnMut(&BoundaryPoint) -> f64,
    rng: &mut R,
) -> RisSample {
    let mut reservoir = Reservoir::default();
    for _ in 0..count.max(1) {
        let p = boundary.sample_uniform(rng);
        let t = target(&p);
        reservoir.update(p, if t.is_finite() { t.abs() } else { 0.0 }, rng);
    }
    reservoir.finish(rng)
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("no technique covers sample")]
pub struct NoTechnique;

/// Balance heuristic weight of technique `a`.
pub fn mis_balance(pdf_a: f64, pdf_b: f64) -> Result<f64, NoTechnique> {
    let s = pdf_a + pdf_b;
    if !(s > 0.0) {
        return Err(NoTechnique);
    }
    Ok(pdf_a / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Green;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn directions_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [Dim::Two, Dim::Three] {
            for _ in 0..1000 {
                let d = sample_sphere_direction(dim, &mut rng);
                assert!((d.norm() - 1.0).abs() < 1e-12);
                if dim == Dim::Two {
                    assert_eq!(d.z, 0.0);
                }
            }
        }
    }

    #[test]
    fn mis_balance_cases() {
        assert_eq!(mis_balance(2.0, 2.0), Ok(0.5));
        assert_eq!(mis_balance(2.0, 0.0), Ok(1.0));
        assert_eq!(mis_balance(0.0, 0.0), Err(NoTechnique));
        let (a, b) = (0.3, 1.7);
        assert!((mis_balance(a, b).unwrap() + mis_balance(b, a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn convex_interior_step_has_one_hit_and_unit_factor() {
        let b = Boundary::circle(Vec3::zeros(), 1.0, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut buf = HitBuffer::default();
        let x = Vec3::new(0.2, -0.3, 0.0);
        let green = Green::new(Dim::Two, b.diameter());
        for _ in 0..200 {
            let np = next_point_all_hits(&b, &x, None, &mut buf, &mut rng).unwrap();
            assert_eq!(np.hits, 1);
            assert_eq!(np.weight, -1.0);
            let kernel = green.dg_dny(&x, &np.point.position, &np.point.normal).unwrap();
            assert!((kernel / np.point.pdf_area - np.weight).abs() < 1e-9);
        }
    }

    #[test]
    fn hemisphere_step_never_returns_launch_element() {
        let b = Boundary::circle(Vec3::zeros(), 1.0, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let from = b.point_on(0, b.element_point(0, 0.5, 0.0));
        let green = Green::new(Dim::Two, b.diameter());
        for _ in 0..500 {
            let np = next_point_hemisphere(&b, &from, &mut rng).unwrap();
            assert_ne!(np.point.element, 0);
            assert_eq!(np.weight, -0.5);
            let kernel = green.dg_dny(&from.position, &np.point.position, &np.point.normal).unwrap();
            assert!((kernel / np.point.pdf_area - np.weight).abs() < 1e-9);
        }
    }

    #[test]
    fn ris_single_candidate_is_importance_sampling() {
        let b = Boundary::circle(Vec3::zeros(), 1.0, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = b.sample_uniform(&mut rng);
        let s = ris_select(&[(p, 0.7)], &mut rng);
        assert!((s.weight - 1.0 / p.pdf_area).abs() < 1e-12);
        let z = ris_select(&[(p, 0.0), (p, 0.0)], &mut rng);
        assert!((z.weight - 1.0 / p.pdf_area).abs() < 1e-12);
    }
}
