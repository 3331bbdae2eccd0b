//! Walk-on-boundary estimators.
//!
//! A [`Solver`] binds a boundary, a problem and an [`EstimatorConfig`] after
//! checking that they fit together, and then produces one [`WalkSample`] per
//! call. Poisson source terms are handled by converting to a Laplace problem
//! for `u = v + V0` and subtracting `V0` at the evaluation point; every path
//! draws its own small set of volume samples that all `V0` evaluations on
//! that path share.

mod dirichlet;
mod forward;
mod neumann;
mod single_layer;
mod volume;

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Boundary, BoundaryPoint, ElementSampler, GeometryError};
use crate::kernels::{Green, KernelError};
use crate::math::Vec3;
use crate::problem::{quadrature, BcKind, BoundaryCondition, ProblemSpec, SpecError};
use crate::sampling::NoTechnique;

pub use forward::{ForwardField, ForwardStart};
pub use volume::{PathVolume, VolumeSampler};

/// Running `|throughput|` above this flags the sample as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// Whole-path redraws allowed after a singular kernel evaluation.
pub const SINGULAR_RETRIES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// Double-layer potential, backward walks; pure Dirichlet.
    DirichletDoubleLayer,
    /// Direct BIE, backward walks; pure Neumann.
    NeumannDirect,
    /// Single-layer potential, forward (adjoint) walks; Neumann and Robin.
    NeumannSingleLayerForward,
    /// Single-layer potential, backward walks; any mix of conditions.
    SingleLayerMixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    AllHitsSphere,
    ConvexHemisphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Solution,
    Gradient,
    NormalDerivative,
    BoundarySolution,
}

/// How Dirichlet emission is gathered along a double-layer path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Technique {
    /// Emission only where rays land.
    Backward,
    /// Emission only through explicit boundary samples drawn ∝ |ū_D|.
    NextEvent,
    /// Balance-heuristic combination of the two.
    Mis,
}

macro_rules! kebab_from_str {
    ($t:ty, $what:literal) => {
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t>::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s))
                    .map_err(|_| format!("unknown {} {s:?}", $what))
            }
        }
    };
}
kebab_from_str!(Formulation, "formulation");
kebab_from_str!(SamplingMode, "sampling mode");
kebab_from_str!(Quantity, "quantity");
kebab_from_str!(Technique, "technique");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub formulation: Formulation,
    /// Path length `M`: number of boundary vertices per walk.
    pub path_length: usize,
    /// Samples per evaluation point `N`.
    pub samples: usize,
    pub sampling_mode: SamplingMode,
    pub ris_candidates: usize,
    /// First-kind scaling constant for Dirichlet rows of the mixed estimator.
    pub k: f64,
    pub p_k: f64,
    pub volume_samples: usize,
    pub quantity: Quantity,
    pub technique: Technique,
    pub forward_start: ForwardStart,
    pub forward_reuse: bool,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            formulation: Formulation::DirichletDoubleLayer,
            path_length: 4,
            samples: 1000,
            sampling_mode: SamplingMode::AllHitsSphere,
            ris_candidates: 16,
            k: 4.0,
            p_k: 2.0 / 3.0,
            volume_samples: 16,
            quantity: Quantity::Solution,
            technique: Technique::Backward,
            forward_start: ForwardStart::SourceWeighted,
            forward_reuse: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0} (after {SINGULAR_RETRIES} redraws)")]
    Kernel(#[from] KernelError),
    #[error("empty forward source: the Neumann/Robin data vanish everywhere")]
    EmptyForwardSource,
    #[error("thin domain; volume sampling ineffective (acceptance {0:e})")]
    ThinDomain(f64),
    #[error(transparent)]
    NoTechnique(#[from] NoTechnique),
}

/// Where an estimate is requested.
#[derive(Clone, Copy, Debug)]
pub enum EvalPoint {
    Domain(Vec3),
    OnBoundary(BoundaryPoint),
}

impl EvalPoint {
    pub fn position(&self) -> Vec3 {
        match self {
            EvalPoint::Domain(p) => *p,
            EvalPoint::OnBoundary(b) => b.position,
        }
    }
}

/// One path's contribution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WalkSample {
    pub value: f64,
    pub gradient: Option<Vec3>,
    pub path_length_used: usize,
    pub rays_cast: u64,
    /// Set when the running path weight exceeded [`DIVERGENCE_LIMIT`].
    pub diverged: bool,
    /// Set when a walk hit its step cap before terminating.
    pub truncated: bool,
}

/// A validated (boundary, problem, configuration) triple.
pub struct Solver<'a> {
    pub(crate) boundary: &'a Boundary,
    pub(crate) spec: &'a ProblemSpec,
    pub(crate) cfg: EstimatorConfig,
    pub(crate) green: Green,
    pub(crate) volume: Option<VolumeSampler>,
    /// Boundary sampling ∝ |ū_D| for next-event estimation.
    pub(crate) nee: Option<ElementSampler>,
    /// Start distribution of forward paths; `None` when the data vanish.
    pub(crate) forward_start: Option<ElementSampler>,
}

impl<'a> Solver<'a> {
    pub fn new(boundary: &'a Boundary, spec: &'a ProblemSpec, cfg: &EstimatorConfig) -> Result<Solver<'a>, EstimatorError> {
        spec.validate(boundary)?;
        let cfg = cfg.clone();
        let bad = |m: &str| Err(EstimatorError::Config(m.to_string()));
        if cfg.path_length == 0 {
            return bad("path length M must be at least 1");
        }
        if cfg.ris_candidates == 0 {
            return bad("RIS candidate count must be at least 1");
        }
        if spec.source().is_some() && cfg.volume_samples == 0 {
            return bad("Poisson problems need at least one volume sample");
        }
        if cfg.sampling_mode == SamplingMode::ConvexHemisphere {
            if !boundary.is_convex() {
                return bad("convex hemisphere sampling requested on a non-convex boundary");
            }
            if cfg.formulation != Formulation::DirichletDoubleLayer || spec.side != crate::problem::Side::Interior {
                return bad("convex hemisphere sampling applies to interior Dirichlet double-layer walks only");
            }
        }
        let only = |kind: BcKind, name: &str| -> Result<(), EstimatorError> {
            if spec.all_of(boundary, kind) {
                Ok(())
            } else {
                Err(EstimatorError::Config(format!("{name} formulation requires {kind:?} conditions on every element")))
            }
        };
        match cfg.formulation {
            Formulation::DirichletDoubleLayer => {
                only(BcKind::Dirichlet, "double-layer")?;
                if !matches!(cfg.quantity, Quantity::Solution | Quantity::Gradient) {
                    return bad("double-layer walks estimate the solution or gradient off the boundary");
                }
            }
            Formulation::NeumannDirect => {
                only(BcKind::Neumann, "direct Neumann")?;
                if cfg.quantity == Quantity::NormalDerivative {
                    return bad("the normal derivative of a Neumann problem is given data");
                }
            }
            Formulation::NeumannSingleLayerForward => {
                if spec.any_of(boundary, BcKind::Dirichlet) {
                    return bad("forward single-layer walks support Neumann and Robin conditions only");
                }
                if !matches!(cfg.quantity, Quantity::Solution | Quantity::Gradient | Quantity::BoundarySolution) {
                    return bad("forward walks estimate the solution or gradient");
                }
                if spec.source().is_some() {
                    return bad("forward walks do not support Poisson source terms");
                }
            }
            Formulation::SingleLayerMixed => {
                if !(cfg.p_k > 0.0 && cfg.p_k < 1.0) {
                    return bad("p_k must lie in (0, 1)");
                }
                if cfg.k == 0.0 || !cfg.k.is_finite() {
                    return bad("k must be a nonzero finite number");
                }
            }
        }
        if cfg.technique != Technique::Backward && cfg.formulation != Formulation::DirichletDoubleLayer {
            return bad("next-event and MIS techniques apply to the double-layer Dirichlet estimator");
        }

        let volume = match spec.source() {
            Some(_) => Some(VolumeSampler::new(boundary)?),
            None => None,
        };
        let nee = if cfg.formulation == Formulation::DirichletDoubleLayer && cfg.technique != Technique::Backward {
            if spec.source().is_some() {
                return bad("next-event estimation is not supported for Poisson problems");
            }
            Some(data_sampler(boundary, spec).map_err(|_| {
                EstimatorError::Config("next-event estimation needs nonzero Dirichlet data".into())
            })?)
        } else {
            None
        };
        let forward_start = if cfg.formulation == Formulation::NeumannSingleLayerForward {
            forward::start_sampler(boundary, spec, cfg.forward_start)
        } else {
            None
        };
        Ok(Solver {
            boundary,
            spec,
            green: Green::new(boundary.dim(), boundary.diameter()),
            cfg,
            volume,
            nee,
            forward_start,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn boundary(&self) -> &Boundary {
        self.boundary
    }

    pub fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    /// Draws one sample at `x`. A singular kernel evaluation redraws the
    /// whole path, at most [`SINGULAR_RETRIES`] times.
    pub fn sample<R: Rng + ?Sized>(&self, x: &EvalPoint, rng: &mut R) -> Result<WalkSample, EstimatorError> {
        let mut last = None;
        for _ in 0..=SINGULAR_RETRIES {
            match self.sample_once(x, rng) {
                Err(EstimatorError::Kernel(e)) => last = Some(e),
                other => return other,
            }
        }
        Err(EstimatorError::Kernel(last.expect("at least one attempt")))
    }

    fn sample_once<R: Rng + ?Sized>(&self, x: &EvalPoint, rng: &mut R) -> Result<WalkSample, EstimatorError> {
        let vol = self.path_volume(rng)?;
        let q = self.cfg.quantity;
        let mut s = match (self.cfg.formulation, x) {
            (Formulation::DirichletDoubleLayer, EvalPoint::Domain(p)) => self.dirichlet(p, &vol, rng)?,
            (Formulation::DirichletDoubleLayer, EvalPoint::OnBoundary(b)) => {
                // The solution on a Dirichlet boundary is the data itself.
                WalkSample {
                    value: self.dirichlet_data(b, &vol),
                    ..Default::default()
                }
            }
            (Formulation::NeumannDirect, _) => self.neumann_direct(x, &vol, rng)?,
            (Formulation::SingleLayerMixed, _) => self.single_layer(x, &vol, rng)?,
            (Formulation::NeumannSingleLayerForward, _) => self.forward_single_point(x, &vol, rng)?,
        };
        if self.spec.source().is_some() {
            // v = u − V0, and likewise for its derivatives.
            let p = x.position();
            match (q, x) {
                (Quantity::NormalDerivative, EvalPoint::OnBoundary(b)) => {
                    s.value -= vol.dv0_dn(&self.green, &p, &b.normal)?;
                }
                _ => s.value -= vol.v0(&self.green, &p)?,
            }
            if let Some(g) = s.gradient.as_mut() {
                *g -= vol.grad_v0(&self.green, &p)?;
            }
        }
        s.rays_cast += vol.rays_cast;
        Ok(s)
    }

    pub(crate) fn path_volume<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PathVolume, EstimatorError> {
        match (&self.volume, self.spec.source()) {
            (Some(v), Some(src)) => Ok(v.draw(self.boundary, src, self.cfg.volume_samples, rng)),
            _ => Ok(PathVolume::empty()),
        }
    }

    /// `ū_D + V0` at a Dirichlet point.
    pub(crate) fn dirichlet_data(&self, y: &BoundaryPoint, vol: &PathVolume) -> f64 {
        match self.spec.condition(self.boundary, y.element) {
            BoundaryCondition::Dirichlet(u) => u(&y.position, &y.normal) + vol.v0_or_zero(&self.green, &y.position),
            _ => 0.0,
        }
    }

    /// `q̄_N + ∂V0/∂n` at a Neumann point.
    pub(crate) fn neumann_data(&self, y: &BoundaryPoint, vol: &PathVolume) -> f64 {
        match self.spec.condition(self.boundary, y.element) {
            BoundaryCondition::Neumann(q) => q(&y.position, &y.normal) + vol.dv0_dn_or_zero(&self.green, &y.position, &y.normal),
            _ => 0.0,
        }
    }

    /// Singular-kernel-safe helper: kernel errors on RIS candidates only
    /// remove that candidate (its target becomes zero).
    pub(crate) fn ok_or_zero(v: Result<f64, KernelError>) -> f64 {
        v.unwrap_or(0.0)
    }
}

/// Element sampler ∝ `∫_e |ū_D|` (by quadrature), used for next-event
/// estimation. Elements whose data vanish at every node get weight zero.
pub(crate) fn data_sampler(boundary: &Boundary, spec: &ProblemSpec) -> Result<ElementSampler, GeometryError> {
    let weights: Vec<f64> = (0..boundary.len())
        .map(|e| {
            let el = boundary.element(e);
            let f = match spec.condition(boundary, e) {
                BoundaryCondition::Dirichlet(u) => u,
                _ => return 0.0,
            };
            let nodes = quadrature(boundary, e);
            nodes.iter().map(|(p, w)| f(p, &el.normal).abs() * w).sum::<f64>() / el.area
        })
        .collect();
    ElementSampler::new(boundary, &weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse_in_kebab_case() {
        assert_eq!("neumann-direct".parse::<Formulation>(), Ok(Formulation::NeumannDirect));
        assert_eq!("mis".parse::<Technique>(), Ok(Technique::Mis));
        assert_eq!("boundary-solution".parse::<Quantity>(), Ok(Quantity::BoundarySolution));
        assert!("nope".parse::<Formulation>().is_err());
    }
}
