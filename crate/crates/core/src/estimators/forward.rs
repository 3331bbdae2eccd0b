//! Forward (adjoint) single-layer walks for Neumann and Robin problems.
//!
//! Paths start on Γ where the data live and move by the transpose of the
//! density kernel; every vertex is connected to the evaluation points
//! through `G` and `∇G`. In reuse mode one set of paths serves all points.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EstimatorError, EvalPoint, PathVolume, Quantity, Solver, WalkSample, DIVERGENCE_LIMIT};
use crate::geometry::{Boundary, ElementSampler};
use crate::math::Vec3;
use crate::problem::{quadrature, BcKind, BoundaryCondition, ProblemSpec};
use crate::sampling::{next_point_all_hits, HitBuffer};

/// Start-point distribution of forward paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForwardStart {
    /// Elements chosen ∝ `∫_e |q̄|`.
    SourceWeighted,
    Uniform,
}

/// Per-point sums over forward paths.
#[derive(Clone, Debug, Default)]
pub struct ForwardField {
    pub sum: Vec<f64>,
    pub sum2: Vec<f64>,
    pub grad_sum: Vec<Vec3>,
    pub grad_sum2: Vec<Vec3>,
    pub paths: u64,
    pub rays: u64,
    pub diverged: u64,
}

impl ForwardField {
    pub fn new(points: usize) -> ForwardField {
        ForwardField {
            sum: vec![0.0; points],
            sum2: vec![0.0; points],
            grad_sum: vec![Vec3::zeros(); points],
            grad_sum2: vec![Vec3::zeros(); points],
            ..Default::default()
        }
    }

    /// Adds another accumulator over the same points.
    pub fn merge(&mut self, other: &ForwardField) {
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum2[i] += other.sum2[i];
            self.grad_sum[i] += other.grad_sum[i];
            self.grad_sum2[i] += other.grad_sum2[i];
        }
        self.paths += other.paths;
        self.rays += other.rays;
        self.diverged += other.diverged;
    }
}

/// Sampler of path starts, or `None` when the data vanish everywhere.
pub(crate) fn start_sampler(boundary: &Boundary, spec: &ProblemSpec, start: ForwardStart) -> Option<ElementSampler> {
    let weights: Vec<f64> = (0..boundary.len())
        .map(|e| {
            let el = boundary.element(e);
            let f = match spec.condition(boundary, e) {
                BoundaryCondition::Neumann(q) => q,
                BoundaryCondition::Robin { g, .. } => g,
                BoundaryCondition::Dirichlet(_) => return 0.0,
            };
            let mass: f64 = quadrature(boundary, e).iter().map(|(p, w)| f(p, &el.normal).abs() * w).sum();
            match start {
                ForwardStart::SourceWeighted => mass / el.area,
                ForwardStart::Uniform if mass > 0.0 => 1.0,
                ForwardStart::Uniform => 0.0,
            }
        })
        .collect();
    match start {
        // Uniform starts cover all of Γ; zero data anywhere simply yields
        // zero-weight paths.
        ForwardStart::Uniform if weights.iter().any(|&w| w > 0.0) => {
            ElementSampler::new(boundary, &vec![1.0; boundary.len()]).ok()
        }
        _ => ElementSampler::new(boundary, &weights).ok(),
    }
}

impl Solver<'_> {
    fn forward_start(&self) -> Result<&ElementSampler, EstimatorError> {
        self.forward_start.as_ref().ok_or(EstimatorError::EmptyForwardSource)
    }

    /// Walks one forward path, calling `splat(vertex, weight)` at every
    /// vertex. Returns rays cast and the divergence flag.
    fn forward_path<R: Rng + ?Sized>(
        &self,
        start: &ElementSampler,
        vol: &PathVolume,
        buf: &mut HitBuffer,
        rng: &mut R,
        mut splat: impl FnMut(&Vec3, f64) -> Result<(), EstimatorError>,
    ) -> Result<(u64, bool), EstimatorError> {
        let m = self.cfg.path_length;
        let two_phi = 2.0 * self.spec.phi();
        let has_robin = self.spec.any_of(self.boundary, BcKind::Robin);
        let p_ray = if has_robin { 0.5 } else { 1.0 };
        let mut y = self.boundary.sample_with(start, rng);
        let source = match self.spec.condition(self.boundary, y.element) {
            BoundaryCondition::Neumann(_) => self.neumann_data(&y, vol),
            BoundaryCondition::Robin { g, .. } => g(&y.position, &y.normal),
            BoundaryCondition::Dirichlet(_) => 0.0,
        };
        let mut w = two_phi * source / y.pdf_area;
        let mut rays = 0;
        let mut diverged = false;
        for j in 1..=m {
            if w == 0.0 {
                break;
            }
            let half = if j == m { 0.5 } else { 1.0 };
            splat(&y.position, w * half)?;
            if j == m {
                break;
            }
            if rng.random::<f64>() < p_ray {
                rays += 1;
                let Some(next) = next_point_all_hits(self.boundary, &y.position, Some(y.element), buf, rng) else {
                    break;
                };
                w *= -two_phi * next.weight / p_ray;
                y = next.point;
            } else {
                let z = self.boundary.sample_uniform(rng);
                let BoundaryCondition::Robin { alpha, .. } = self.spec.condition(self.boundary, z.element) else {
                    break;
                };
                let a = alpha(&z.position, &z.normal);
                w *= -two_phi * a * self.green.g(&z.position, &y.position)? / (z.pdf_area * (1.0 - p_ray));
                y = z;
            }
            diverged |= w.abs() > DIVERGENCE_LIMIT;
        }
        Ok((rays, diverged))
    }

    /// Plain forward estimator: a fresh path per evaluation sample.
    pub(crate) fn forward_single_point<R: Rng + ?Sized>(
        &self,
        x: &EvalPoint,
        vol: &PathVolume,
        rng: &mut R,
    ) -> Result<WalkSample, EstimatorError> {
        let start = self.forward_start()?;
        let p = x.position();
        let want_grad = self.cfg.quantity == Quantity::Gradient;
        let mut value = 0.0;
        let mut grad = Vec3::zeros();
        let mut used = 0;
        let mut buf = HitBuffer::default();
        let (rays, diverged) = self.forward_path(start, vol, &mut buf, rng, |y, w| {
            used += 1;
            value += w * self.green.g(&p, y)?;
            if want_grad {
                grad += self.green.grad_x(&p, y)? * w;
            }
            Ok(())
        })?;
        Ok(WalkSample {
            value,
            gradient: want_grad.then_some(grad),
            path_length_used: used,
            rays_cast: rays,
            diverged,
            truncated: false,
        })
    }

    /// Reuse mode: `paths` forward paths, each connected to every point.
    pub fn forward_field<R: Rng + ?Sized>(
        &self,
        points: &[EvalPoint],
        paths: usize,
        rng: &mut R,
    ) -> Result<ForwardField, EstimatorError> {
        let start = self.forward_start()?;
        let mut acc = ForwardField::new(points.len());
        let mut value = vec![0.0; points.len()];
        let mut grad = vec![Vec3::zeros(); points.len()];
        let want_grad = self.cfg.quantity == Quantity::Gradient;
        let vol = PathVolume::empty();
        let mut buf = HitBuffer::default();
        for _ in 0..paths {
            value.iter_mut().for_each(|v| *v = 0.0);
            grad.iter_mut().for_each(|g| *g = Vec3::zeros());
            let (rays, diverged) = self.forward_path(start, &vol, &mut buf, rng, |y, w| {
                for (i, e) in points.iter().enumerate() {
                    let p = e.position();
                    value[i] += w * self.green.g(&p, y)?;
                    if want_grad {
                        grad[i] += self.green.grad_x(&p, y)? * w;
                    }
                }
                Ok(())
            })?;
            for i in 0..points.len() {
                acc.sum[i] += value[i];
                acc.sum2[i] += value[i] * value[i];
                acc.grad_sum[i] += grad[i];
                acc.grad_sum2[i] += grad[i].component_mul(&grad[i]);
            }
            acc.paths += 1;
            acc.rays += rays;
            acc.diverged += diverged as u64;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{EstimatorConfig, Formulation};
    use crate::math::Dim;
    use crate::problem::{constant_fn, Side};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_flux_is_an_empty_source() {
        let b = Boundary::circle(Vec3::zeros(), 1.0, 64).unwrap();
        let spec = ProblemSpec::neumann(Dim::Two, Side::Interior, constant_fn(0.0));
        let cfg = EstimatorConfig {
            formulation: Formulation::NeumannSingleLayerForward,
            ..Default::default()
        };
        let solver = Solver::new(&b, &spec, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts = [EvalPoint::Domain(Vec3::zeros())];
        assert!(matches!(
            solver.forward_field(&pts, 10, &mut rng),
            Err(EstimatorError::EmptyForwardSource)
        ));
    }
}
