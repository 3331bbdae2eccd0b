//! Single-layer density walks for mixed Dirichlet/Neumann/Robin problems.
//!
//! Density rows, with `x` the current vertex:
//!
//! * Dirichlet: `μ = μ − k ∫ G μ dA + k ū_D` (first-kind row made recursive)
//! * Neumann: `μ = −2φ ∫ ∂G/∂n_x μ dA + 2φ q̄_N`
//! * Robin: `μ = −2φ ∫ (∂G/∂n_x + ᾱ G) μ dA + 2φ ḡ_R`
//!
//! and the field is rebuilt from `u = ∫ G μ dA`.

use rand::Rng;

use super::{
    EstimatorError, EvalPoint, Formulation, PathVolume, Quantity, Solver, WalkSample, DIVERGENCE_LIMIT, SINGULAR_RETRIES,
};
use crate::geometry::BoundaryPoint;
use crate::problem::BoundaryCondition;
use crate::sampling::ris_uniform;

/// Result of one density walk.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DensitySample {
    pub mu: f64,
    pub used: usize,
    pub diverged: bool,
}

impl Solver<'_> {
    /// Source term of the density equation at `y`.
    fn density_source(&self, y: &BoundaryPoint, vol: &PathVolume) -> f64 {
        let two_phi = 2.0 * self.spec.phi();
        let (p, n) = (&y.position, &y.normal);
        match self.spec.condition(self.boundary, y.element) {
            BoundaryCondition::Dirichlet(u) => self.cfg.k * (u(p, n) + vol.v0_or_zero(&self.green, p)),
            BoundaryCondition::Neumann(q) => two_phi * (q(p, n) + vol.dv0_dn_or_zero(&self.green, p, n)),
            BoundaryCondition::Robin { alpha, g } => {
                let a = alpha(p, n);
                two_phi * (g(p, n) + vol.dv0_dn_or_zero(&self.green, p, n) + a * vol.v0_or_zero(&self.green, p))
            }
        }
    }

    /// Recursive estimate of `μ(y0)` over `M` vertices (stay-in-place
    /// Dirichlet steps count as vertices), last source halved.
    pub(crate) fn density<R: Rng + ?Sized>(
        &self,
        y0: BoundaryPoint,
        vol: &PathVolume,
        rng: &mut R,
    ) -> Result<DensitySample, EstimatorError> {
        let m = self.cfg.path_length;
        let two_phi = 2.0 * self.spec.phi();
        let c = self.cfg.ris_candidates;
        let mut y = y0;
        let mut t = 1.0;
        let mut mu = 0.0;
        let mut diverged = false;
        let mut used = 0;
        for j in 1..=m {
            used = j;
            let half = if j == m { 0.5 } else { 1.0 };
            mu += t * half * self.density_source(&y, vol);
            if j == m || t == 0.0 {
                break;
            }
            let x = y.position;
            let nx = y.normal;
            match self.spec.condition(self.boundary, y.element) {
                BoundaryCondition::Dirichlet(_) => {
                    let pk = self.cfg.p_k;
                    if rng.random::<f64>() < pk {
                        let s = ris_uniform(self.boundary, c, |z| Self::ok_or_zero(self.green.g(&x, &z.position)), rng);
                        t *= -(self.cfg.k / pk) * self.green.g(&x, &s.point.position)? * s.weight;
                        y = s.point;
                    } else {
                        t /= 1.0 - pk;
                    }
                }
                BoundaryCondition::Neumann(_) => {
                    let s = ris_uniform(
                        self.boundary,
                        c,
                        |z| Self::ok_or_zero(self.green.dg_dnx(&x, &z.position, &nx)),
                        rng,
                    );
                    t *= -two_phi * self.green.dg_dnx(&x, &s.point.position, &nx)? * s.weight;
                    y = s.point;
                }
                BoundaryCondition::Robin { alpha, .. } => {
                    let a = alpha(&x, &nx);
                    let s = ris_uniform(
                        self.boundary,
                        c,
                        |z| {
                            Self::ok_or_zero(self.green.dg_dnx(&x, &z.position, &nx)).abs()
                                + a.abs() * Self::ok_or_zero(self.green.g(&x, &z.position)).abs()
                        },
                        rng,
                    );
                    let z = &s.point.position;
                    t *= -two_phi * (self.green.dg_dnx(&x, z, &nx)? + a * self.green.g(&x, z)?) * s.weight;
                    y = s.point;
                }
            }
            diverged |= t.abs() > DIVERGENCE_LIMIT;
        }
        Ok(DensitySample { mu, used, diverged })
    }

    /// One sample of the density `μ̂(y)` behind the single-layer
    /// representation, with the same singular-draw retries as
    /// [`Solver::sample`].
    pub fn sample_density<R: Rng + ?Sized>(&self, y: &BoundaryPoint, rng: &mut R) -> Result<f64, EstimatorError> {
        if self.cfg.formulation != Formulation::SingleLayerMixed {
            return Err(EstimatorError::Config("densities come from the single-layer-mixed formulation".into()));
        }
        let mut last = None;
        for _ in 0..=SINGULAR_RETRIES {
            let vol = self.path_volume(rng)?;
            match self.density(*y, &vol, rng) {
                Ok(d) => return Ok(d.mu),
                Err(EstimatorError::Kernel(e)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(EstimatorError::Kernel(last.expect("at least one attempt")))
    }

    pub(crate) fn single_layer<R: Rng + ?Sized>(
        &self,
        x: &EvalPoint,
        vol: &PathVolume,
        rng: &mut R,
    ) -> Result<WalkSample, EstimatorError> {
        let p = x.position();
        let c = self.cfg.ris_candidates;
        let quantity = self.cfg.quantity;
        match (quantity, x) {
            (Quantity::Gradient, EvalPoint::OnBoundary(_)) => {
                return Err(EstimatorError::Config("gradients are only defined off the boundary".into()))
            }
            (Quantity::NormalDerivative, EvalPoint::Domain(_)) => {
                return Err(EstimatorError::Config("normal derivatives are only defined on the boundary".into()))
            }
            _ => {}
        }

        if let (Quantity::NormalDerivative, EvalPoint::OnBoundary(b)) = (quantity, x) {
            // ∂u/∂n = ½ φ μ(x) + ∫ ∂G/∂n_x μ dA, with independent μ walks.
            let d1 = self.density(*b, vol, rng)?;
            let s = ris_uniform(self.boundary, c, |z| Self::ok_or_zero(self.green.dg_dnx(&p, &z.position, &b.normal)), rng);
            let d2 = self.density(s.point, vol, rng)?;
            let k = self.green.dg_dnx(&p, &s.point.position, &b.normal)? * s.weight;
            return Ok(WalkSample {
                value: 0.5 * self.spec.phi() * d1.mu + k * d2.mu,
                gradient: None,
                path_length_used: d1.used.max(d2.used),
                rays_cast: 0,
                diverged: d1.diverged || d2.diverged,
                truncated: false,
            });
        }

        // With a gradient requested, one RIS draw on |∇G| serves both the
        // value and the gradient integrals.
        let want_grad = quantity == Quantity::Gradient;
        let s = if want_grad {
            ris_uniform(self.boundary, c, |z| self.green.grad_x(&p, &z.position).map_or(0.0, |g| g.norm()), rng)
        } else {
            ris_uniform(self.boundary, c, |z| Self::ok_or_zero(self.green.g(&p, &z.position)), rng)
        };
        let d = self.density(s.point, vol, rng)?;
        let z = &s.point.position;
        let value = self.green.g(&p, z)? * s.weight * d.mu;
        let gradient = if want_grad {
            Some(self.green.grad_x(&p, z)? * (s.weight * d.mu))
        } else {
            None
        };
        Ok(WalkSample {
            value,
            gradient,
            path_length_used: d.used,
            rays_cast: 0,
            diverged: d.diverged,
            truncated: false,
        })
    }
}
