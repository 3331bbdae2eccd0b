//! Walk-on-Spheres baseline for interior Dirichlet problems.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimators::{EstimatorError, PathVolume, VolumeSampler, WalkSample};
use crate::geometry::Boundary;
use crate::kernels::Green;
use crate::math::Vec3;
use crate::problem::{BcKind, BoundaryCondition, ProblemSpec, Side};
use crate::sampling::sample_sphere_direction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WosConfig {
    /// Absolute shell thickness.
    pub epsilon: f64,
    pub max_steps: usize,
    /// Volume samples per walk for Poisson problems.
    pub volume_samples: usize,
    pub seed: u64,
}

impl Default for WosConfig {
    fn default() -> Self {
        WosConfig {
            epsilon: 1e-4,
            max_steps: 10_000,
            volume_samples: 16,
            seed: 0,
        }
    }
}

pub struct WosSolver<'a> {
    boundary: &'a Boundary,
    spec: &'a ProblemSpec,
    cfg: WosConfig,
    green: Green,
    volume: Option<VolumeSampler>,
}

impl<'a> WosSolver<'a> {
    pub fn new(boundary: &'a Boundary, spec: &'a ProblemSpec, cfg: &WosConfig) -> Result<WosSolver<'a>, EstimatorError> {
        spec.validate(boundary)?;
        let bad = |m: &str| Err(EstimatorError::Config(m.to_string()));
        if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
            return bad("WoS epsilon must be positive");
        }
        if cfg.max_steps == 0 {
            return bad("WoS max_steps must be at least 1");
        }
        if spec.side != Side::Interior || !spec.all_of(boundary, BcKind::Dirichlet) {
            return bad("walk on spheres supports interior Dirichlet problems only");
        }
        let volume = match spec.source() {
            Some(_) if cfg.volume_samples == 0 => return bad("Poisson problems need at least one volume sample"),
            Some(_) => Some(VolumeSampler::new(boundary)?),
            None => None,
        };
        Ok(WosSolver {
            boundary,
            spec,
            cfg: cfg.clone(),
            green: Green::new(boundary.dim(), boundary.diameter()),
            volume,
        })
    }

    pub fn config(&self) -> &WosConfig {
        &self.cfg
    }

    /// One walk from `x0`. `path_length_used` holds the number of sphere
    /// jumps; `truncated` is set when the step cap was reached, in which case
    /// the value at the current closest boundary point is returned.
    pub fn sample<R: Rng + ?Sized>(&self, x0: &Vec3, rng: &mut R) -> Result<WalkSample, EstimatorError> {
        let vol = match (&self.volume, self.spec.source()) {
            (Some(v), Some(src)) => v.draw(self.boundary, src, self.cfg.volume_samples, rng),
            _ => PathVolume::empty(),
        };
        let dim = self.boundary.dim();
        let mut x = *x0;
        let mut steps = 0;
        let (cp, truncated) = loop {
            let cp = self.boundary.closest_point(&x);
            if cp.distance < self.cfg.epsilon {
                break (cp, false);
            }
            if steps == self.cfg.max_steps {
                break (cp, true);
            }
            x += cp.distance * sample_sphere_direction(dim, rng);
            steps += 1;
        };
        let el = self.boundary.element(cp.element);
        let BoundaryCondition::Dirichlet(u) = self.spec.condition(self.boundary, cp.element) else {
            unreachable!("validated as pure Dirichlet");
        };
        let mut value = u(&cp.point, &el.normal);
        if !vol.is_empty() {
            value += vol.v0_or_zero(&self.green, &cp.point) - vol.v0(&self.green, x0)?;
        }
        Ok(WalkSample {
            value,
            gradient: None,
            path_length_used: steps,
            rays_cast: vol.rays_cast,
            diverged: false,
            truncated,
        })
    }
}

/// Single-walk convenience wrapper around [`WosSolver`].
pub fn wos_dirichlet<R: Rng + ?Sized>(
    boundary: &Boundary,
    spec: &ProblemSpec,
    cfg: &WosConfig,
    x0: &Vec3,
    rng: &mut R,
) -> Result<WalkSample, EstimatorError> {
    WosSolver::new(boundary, spec, cfg)?.sample(x0, rng)
}
