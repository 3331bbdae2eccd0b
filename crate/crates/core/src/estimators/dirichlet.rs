//! Double-layer Dirichlet walks, with optional next-event estimation and
//! its balance-heuristic combination with the plain backward walk.

use rand::Rng;

use super::{EstimatorError, PathVolume, SamplingMode, Solver, Technique, WalkSample, DIVERGENCE_LIMIT};
use crate::geometry::BoundaryPoint;
use crate::math::Vec3;
use crate::sampling::{
    area_pdf_all_hits, mis_balance, next_point_all_hits, next_point_hemisphere, HitBuffer, NextPoint,
};

impl Solver<'_> {
    /// Density with which the continuation strategy reaches `y` from `from`.
    fn continuation_pdf(&self, from: &Vec3, from_element: Option<usize>, y: &BoundaryPoint, rays: &mut u64) -> f64 {
        let r = y.position - from;
        let dist = r.norm();
        let d = r / dist;
        match self.cfg.sampling_mode {
            SamplingMode::AllHitsSphere => {
                *rays += 1;
                let m = self.boundary.count_hits(from, &d, from_element);
                if m == 0 {
                    0.0
                } else {
                    area_pdf_all_hits(self.boundary.dim(), from, y, m)
                }
            }
            SamplingMode::ConvexHemisphere => match from_element {
                Some(e) if d.dot(&self.boundary.element(e).normal) < 0.0 => {
                    2.0 * area_pdf_all_hits(self.boundary.dim(), from, y, 1)
                }
                Some(_) => 0.0,
                None => area_pdf_all_hits(self.boundary.dim(), from, y, 1),
            },
        }
    }

    fn step<R: Rng + ?Sized>(&self, from: &BoundaryPoint, buf: &mut HitBuffer, rng: &mut R) -> Option<NextPoint> {
        match self.cfg.sampling_mode {
            SamplingMode::AllHitsSphere => next_point_all_hits(self.boundary, &from.position, Some(from.element), buf, rng),
            SamplingMode::ConvexHemisphere => next_point_hemisphere(self.boundary, from, rng),
        }
    }

    /// Weight applied to emission found by a ray landing on `y` with
    /// continuation density `pdf_ray`.
    fn ray_emission_weight(&self, y: &BoundaryPoint, pdf_ray: f64) -> Result<f64, EstimatorError> {
        Ok(match self.cfg.technique {
            Technique::Backward => 1.0,
            Technique::NextEvent => 0.0,
            Technique::Mis => {
                let p_b = self.nee.as_ref().map_or(0.0, |s| s.pdf(y.element));
                mis_balance(pdf_ray, p_b)?
            }
        })
    }

    /// Next-event contribution from `from` (element `from_element`, if on
    /// Γ): `(∂G/∂n_y(from, y_b) / p_b, ∇_x ∂G/∂n_y / p_b, emission × MIS weight)`.
    fn next_event<R: Rng + ?Sized>(
        &self,
        from: &Vec3,
        from_element: Option<usize>,
        vol: &PathVolume,
        rays: &mut u64,
        rng: &mut R,
    ) -> Result<Option<(f64, Vec3, f64)>, EstimatorError> {
        let Some(sampler) = &self.nee else { return Ok(None) };
        let yb = self.boundary.sample_with(sampler, rng);
        if Some(yb.element) == from_element {
            // Flat element: the double-layer kernel vanishes in-plane.
            return Ok(None);
        }
        let kernel = self.green.dg_dny(from, &yb.position, &yb.normal)?;
        let grad = if from_element.is_none() && self.cfg.quantity == super::Quantity::Gradient {
            self.green.grad_x_dg_dny(from, &yb.position, &yb.normal)?
        } else {
            Vec3::zeros()
        };
        let w = match self.cfg.technique {
            Technique::NextEvent => 1.0,
            _ => {
                let p_ray = self.continuation_pdf(from, from_element, &yb, rays);
                mis_balance(yb.pdf_area, p_ray)?
            }
        };
        let emission = 2.0 * self.spec.phi() * self.dirichlet_data(&yb, vol);
        Ok(Some((kernel / yb.pdf_area, grad / yb.pdf_area, emission * w)))
    }

    /// `u(x0) = −∫ ∂G/∂n_y ν dA` with `ν = 2φ ∫ ∂G/∂n_y ν dA + 2φ ū_D`,
    /// expanded along one path of `M` boundary vertices whose last emission
    /// is halved.
    pub(crate) fn dirichlet<R: Rng + ?Sized>(
        &self,
        x0: &Vec3,
        vol: &PathVolume,
        rng: &mut R,
    ) -> Result<WalkSample, EstimatorError> {
        let m = self.cfg.path_length;
        let phi = self.spec.phi();
        let want_grad = self.cfg.quantity == super::Quantity::Gradient;
        let mut buf = HitBuffer::default();
        let mut rays = 1u64;
        let mut value = 0.0;
        let mut grad = Vec3::zeros();
        let mut diverged = false;
        let half = |j: usize| if j == m { 0.5 } else { 1.0 };

        // Next-event connection from x0 to the first vertex.
        if let Some((k, kg, e)) = self.next_event(x0, None, vol, &mut rays, rng)? {
            value += -k * e * half(1);
            grad += -kg * e * half(1);
        }

        let Some(first) = next_point_all_hits(self.boundary, x0, None, &mut buf, rng) else {
            return Ok(WalkSample {
                value,
                gradient: want_grad.then_some(grad),
                path_length_used: 0,
                rays_cast: rays,
                diverged,
                truncated: false,
            });
        };
        let head_u = -first.weight;
        let head_g = if want_grad {
            -self.green.grad_x_dg_dny(x0, &first.point.position, &first.point.normal)? / first.point.pdf_area
        } else {
            Vec3::zeros()
        };

        let mut y = first.point;
        // Throughput from x1, excluding the head factor.
        let mut rel = 1.0;
        let mut used = 1;
        let mut pdf_ray = y.pdf_area;
        for j in 1..=m {
            let w = self.ray_emission_weight(&y, pdf_ray)?;
            if w != 0.0 {
                let e = 2.0 * phi * self.dirichlet_data(&y, vol) * half(j) * w * rel;
                value += head_u * e;
                grad += head_g * e;
            }
            if j == m {
                break;
            }
            if let Some((k, _, e)) = self.next_event(&y.position, Some(y.element), vol, &mut rays, rng)? {
                let c = rel * 2.0 * phi * k * e * half(j + 1);
                value += head_u * c;
                grad += head_g * c;
            }
            rays += 1;
            let Some(next) = self.step(&y, &mut buf, rng) else { break };
            rel *= 2.0 * phi * next.weight;
            diverged |= (rel * head_u).abs() > DIVERGENCE_LIMIT;
            y = next.point;
            pdf_ray = y.pdf_area;
            used += 1;
        }
        Ok(WalkSample {
            value,
            gradient: want_grad.then_some(grad),
            path_length_used: used,
            rays_cast: rays,
            diverged,
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::estimators::{EstimatorConfig, EvalPoint, SamplingMode, Solver, Technique};
    use crate::geometry::Boundary;
    use crate::math::{Dim, Vec3};
    use crate::problem::{constant_fn, ProblemSpec, Side};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn stats(solver: &Solver, x: Vec3, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = solver.sample(&EvalPoint::Domain(x), &mut rng).unwrap().value;
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        (mean, ((s2 / n as f64 - mean * mean).max(0.0) / n as f64).sqrt())
    }

    #[test]
    fn convex_constant_data_has_zero_variance() {
        let b = Boundary::circle(Vec3::zeros(), 1.0, 128).unwrap();
        let spec = ProblemSpec::dirichlet(Dim::Two, Side::Interior, constant_fn(2.5));
        for m in 1..=6 {
            let cfg = EstimatorConfig {
                path_length: m,
                sampling_mode: SamplingMode::ConvexHemisphere,
                ..Default::default()
            };
            let solver = Solver::new(&b, &spec, &cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            for _ in 0..200 {
                let s = solver.sample(&EvalPoint::Domain(Vec3::new(0.3, 0.1, 0.0)), &mut rng).unwrap();
                assert_eq!(s.value, 2.5, "M = {m}");
            }
        }
    }

    #[test]
    fn linear_data_on_star_all_techniques() {
        let b = Boundary::star(Vec3::zeros(), 5, 0.5, 1.0, 8).unwrap();
        let spec = ProblemSpec::dirichlet(Dim::Two, Side::Interior, Arc::new(|p: &Vec3, _: &Vec3| p.x));
        let x = Vec3::new(0.2, 0.1, 0.0);
        for technique in [Technique::Backward, Technique::NextEvent, Technique::Mis] {
            let cfg = EstimatorConfig {
                path_length: 6,
                technique,
                ..Default::default()
            };
            let solver = Solver::new(&b, &spec, &cfg).unwrap();
            let (mean, sigma) = stats(&solver, x, 40_000, 5);
            assert!((mean - 0.2).abs() < 4.0 * sigma + 5e-3, "{technique:?}: {mean} ± {sigma}");
        }
    }
}
