//! Direct boundary integral walks for pure Neumann problems.
//!
//! On Γ: `u = −2φ ∫ ∂G/∂n_y u dA + 2φ ∫ G q̄ dA`; off Γ the factors are `φ`.
//! Each vertex draws one extra boundary point for the source integral by
//! RIS on `|G q̄|`.

use rand::Rng;

use super::{EstimatorError, EvalPoint, PathVolume, Quantity, Solver, WalkSample, DIVERGENCE_LIMIT};
use crate::geometry::BoundaryPoint;
use crate::math::Vec3;
use crate::sampling::{next_point_all_hits, ris_uniform, HitBuffer};

impl Solver<'_> {
    /// `∫ G(x, y) q̄(y) dA_y` from one RIS draw.
    fn neumann_source<R: Rng + ?Sized>(&self, x: &Vec3, vol: &PathVolume, rng: &mut R) -> Result<f64, EstimatorError> {
        let s = ris_uniform(
            self.boundary,
            self.cfg.ris_candidates,
            |y| Self::ok_or_zero(self.green.g(x, &y.position)) * self.neumann_data(y, vol),
            rng,
        );
        let y = &s.point;
        Ok(self.green.g(x, &y.position)? * self.neumann_data(y, vol) * s.weight)
    }

    /// `∫ ∇_x G(x, y) q̄(y) dA_y` from one RIS draw.
    fn neumann_source_grad<R: Rng + ?Sized>(&self, x: &Vec3, vol: &PathVolume, rng: &mut R) -> Result<Vec3, EstimatorError> {
        let s = ris_uniform(
            self.boundary,
            self.cfg.ris_candidates,
            |y| self.green.grad_x(x, &y.position).map_or(0.0, |g| g.norm()) * self.neumann_data(y, vol),
            rng,
        );
        let y = &s.point;
        Ok(self.green.grad_x(x, &y.position)? * (self.neumann_data(y, vol) * s.weight))
    }

    /// Estimate of the boundary trace `u(y1)` along a walk of `M` vertices
    /// starting at `y1`, the last source term halved. Returns the estimate,
    /// vertices used, rays cast and the divergence flag.
    fn neumann_trace<R: Rng + ?Sized>(
        &self,
        y1: BoundaryPoint,
        vertices: usize,
        vol: &PathVolume,
        buf: &mut HitBuffer,
        rng: &mut R,
    ) -> Result<(f64, usize, u64, bool), EstimatorError> {
        let two_phi = 2.0 * self.spec.phi();
        let mut y = y1;
        let mut t = 1.0;
        let mut sum = 0.0;
        let mut rays = 0;
        let mut used = 0;
        let mut diverged = false;
        for j in 1..=vertices {
            used = j;
            let half = if j == vertices { 0.5 } else { 1.0 };
            sum += t * half * two_phi * self.neumann_source(&y.position, vol, rng)?;
            if j == vertices {
                break;
            }
            rays += 1;
            let Some(next) = next_point_all_hits(self.boundary, &y.position, Some(y.element), buf, rng) else {
                break;
            };
            t *= -two_phi * next.weight;
            diverged |= t.abs() > DIVERGENCE_LIMIT;
            y = next.point;
        }
        Ok((sum, used, rays, diverged))
    }

    pub(crate) fn neumann_direct<R: Rng + ?Sized>(
        &self,
        x: &EvalPoint,
        vol: &PathVolume,
        rng: &mut R,
    ) -> Result<WalkSample, EstimatorError> {
        let phi = self.spec.phi();
        let m = self.cfg.path_length;
        let mut buf = HitBuffer::default();
        let (origin, exclude, c) = match x {
            EvalPoint::Domain(p) => (*p, None, phi),
            EvalPoint::OnBoundary(b) => (b.position, Some(b.element), 2.0 * phi),
        };
        let want_grad = self.cfg.quantity == Quantity::Gradient;
        if want_grad && exclude.is_some() {
            return Err(EstimatorError::Config("gradients are only defined off the boundary".into()));
        }

        let mut value = c * self.neumann_source(&origin, vol, rng)?;
        let mut grad = if want_grad {
            Some(phi * self.neumann_source_grad(&origin, vol, rng)?)
        } else {
            None
        };
        let mut rays = 1;
        let mut used = 0;
        let mut diverged = false;
        // On Γ the evaluation point is itself the first vertex of the
        // series, so the walk below has one vertex fewer.
        let walk_len = if exclude.is_some() { m.saturating_sub(1) } else { m };
        if walk_len > 0 {
            if let Some(first) = next_point_all_hits(self.boundary, &origin, exclude, &mut buf, rng) {
                let (trace, u, r, d) = self.neumann_trace(first.point, walk_len, vol, &mut buf, rng)?;
                value += -c * first.weight * trace;
                if let Some(g) = grad.as_mut() {
                    let y = &first.point;
                    *g += -phi * self.green.grad_x_dg_dny(&origin, &y.position, &y.normal)? / y.pdf_area * trace;
                }
                used = u;
                rays += r;
                diverged = d;
            }
        } else {
            value *= 0.5;
        }
        Ok(WalkSample {
            value,
            gradient: grad,
            path_length_used: used,
            rays_cast: rays,
            diverged,
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::estimators::{EstimatorConfig, EvalPoint, Formulation, Solver};
    use crate::geometry::Boundary;
    use crate::math::{Dim, Vec3};
    use crate::problem::{constant_fn, ProblemSpec, Side};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_flux_gives_zero() {
        let b = Boundary::circle(Vec3::zeros(), 1.0, 128).unwrap();
        let spec = ProblemSpec::neumann(Dim::Two, Side::Interior, constant_fn(0.0));
        let cfg = EstimatorConfig {
            formulation: Formulation::NeumannDirect,
            ..Default::default()
        };
        let solver = Solver::new(&b, &spec, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(solver.sample(&EvalPoint::Domain(Vec3::new(0.1, 0.2, 0.0)), &mut rng).unwrap().value, 0.0);
        }
    }
}
