//! Boundary value problem description: side, PDE, and per-element boundary
//! conditions.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::Boundary;
use crate::math::{Dim, Vec3};

/// Scalar data on Γ, evaluated at a position with the outward normal there.
pub type BoundaryFn = Arc<dyn Fn(&Vec3, &Vec3) -> f64 + Send + Sync>;
/// Scalar field over space (Poisson source term).
pub type FieldFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;

pub fn constant_fn(c: f64) -> BoundaryFn {
    Arc::new(move |_, _| c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Interior,
    Exterior,
}

impl Side {
    /// `+1` for interior problems, `−1` for exterior ones.
    pub fn phi(self) -> f64 {
        match self {
            Side::Interior => 1.0,
            Side::Exterior => -1.0,
        }
    }
}

#[derive(Clone)]
pub enum Pde {
    Laplace,
    /// `Δv = b̄`.
    Poisson { source: FieldFn },
}

impl fmt::Debug for Pde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pde::Laplace => f.write_str("Laplace"),
            Pde::Poisson { .. } => f.write_str("Poisson"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Robin,
}

/// `v = ū_D`, `∂v/∂n = q̄_N`, or `∂v/∂n + ᾱ v = ḡ_R`.
#[derive(Clone)]
pub enum BoundaryCondition {
    Dirichlet(BoundaryFn),
    Neumann(BoundaryFn),
    Robin { alpha: BoundaryFn, g: BoundaryFn },
}

impl BoundaryCondition {
    pub fn kind(&self) -> BcKind {
        match self {
            BoundaryCondition::Dirichlet(_) => BcKind::Dirichlet,
            BoundaryCondition::Neumann(_) => BcKind::Neumann,
            BoundaryCondition::Robin { .. } => BcKind::Robin,
        }
    }
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind())
    }
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("element {element} has tag {tag} but only {count} boundary conditions are defined")]
    MissingCondition { element: usize, tag: usize, count: usize },
    #[error("compatibility violated: boundary flux integrates to {flux:e} (relative {relative:e})")]
    Compatibility { flux: f64, relative: f64 },
    #[error("dimension mismatch: boundary is {boundary:?}, problem is {problem:?}")]
    Dimension { boundary: Dim, problem: Dim },
    #[error("Poisson problems require a bounded (interior) domain")]
    UnboundedPoisson,
    #[error("Robin weight must be nonzero")]
    ZeroRobinWeight,
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub dim: Dim,
    pub side: Side,
    pub pde: Pde,
    /// Indexed by element tag.
    pub conditions: Vec<BoundaryCondition>,
}

/// Relative tolerance of the pure-Neumann compatibility check.
pub const COMPATIBILITY_TOL: f64 = 1e-6;

impl ProblemSpec {
    pub fn new(dim: Dim, side: Side, conditions: Vec<BoundaryCondition>) -> ProblemSpec {
        ProblemSpec {
            dim,
            side,
            pde: Pde::Laplace,
            conditions,
        }
    }

    pub fn dirichlet(dim: Dim, side: Side, u: BoundaryFn) -> ProblemSpec {
        ProblemSpec::new(dim, side, vec![BoundaryCondition::Dirichlet(u)])
    }

    pub fn neumann(dim: Dim, side: Side, q: BoundaryFn) -> ProblemSpec {
        ProblemSpec::new(dim, side, vec![BoundaryCondition::Neumann(q)])
    }

    pub fn with_source(mut self, source: FieldFn) -> ProblemSpec {
        self.pde = Pde::Poisson { source };
        self
    }

    pub fn phi(&self) -> f64 {
        self.side.phi()
    }

    pub fn condition(&self, boundary: &Boundary, element: usize) -> &BoundaryCondition {
        &self.conditions[boundary.element(element).tag]
    }

    pub fn source(&self) -> Option<&FieldFn> {
        match &self.pde {
            Pde::Laplace => None,
            Pde::Poisson { source } => Some(source),
        }
    }

    /// True when every element carries a condition of `kind`.
    pub fn all_of(&self, boundary: &Boundary, kind: BcKind) -> bool {
        boundary.tags().all(|t| self.conditions[t].kind() == kind)
    }

    pub fn any_of(&self, boundary: &Boundary, kind: BcKind) -> bool {
        boundary.tags().any(|t| self.conditions[t].kind() == kind)
    }

    /// Checks tag coverage, dimensions and, for interior pure-Neumann Laplace
    /// problems, that the prescribed flux integrates to zero.
    pub fn validate(&self, boundary: &Boundary) -> Result<(), SpecError> {
        if boundary.dim() != self.dim {
            return Err(SpecError::Dimension {
                boundary: boundary.dim(),
                problem: self.dim,
            });
        }
        for (i, e) in boundary.elements().iter().enumerate() {
            if e.tag >= self.conditions.len() {
                return Err(SpecError::MissingCondition {
                    element: i,
                    tag: e.tag,
                    count: self.conditions.len(),
                });
            }
        }
        if self.source().is_some() && self.side == Side::Exterior {
            return Err(SpecError::UnboundedPoisson);
        }
        for (i, e) in boundary.elements().iter().enumerate() {
            if let BoundaryCondition::Robin { alpha, .. } = &self.conditions[e.tag] {
                if alpha(&boundary.centroid(i), &e.normal) == 0.0 {
                    return Err(SpecError::ZeroRobinWeight);
                }
            }
        }
        if self.side == Side::Interior && self.source().is_none() && self.all_of(boundary, BcKind::Neumann) {
            let (flux, abs) = self.flux_integral(boundary);
            let relative = if abs > 0.0 { flux.abs() / abs } else { 0.0 };
            if relative > COMPATIBILITY_TOL {
                return Err(SpecError::Compatibility { flux, relative });
            }
        }
        Ok(())
    }

    /// `(∫ q̄_N dA, ∫ |q̄_N| dA)` over Neumann elements by per-element Gauss
    /// quadrature (3 points on segments, 6 on triangles).
    pub fn flux_integral(&self, boundary: &Boundary) -> (f64, f64) {
        let mut flux = 0.0;
        let mut abs = 0.0;
        for (i, e) in boundary.elements().iter().enumerate() {
            let BoundaryCondition::Neumann(q) = &self.conditions[e.tag] else {
                continue;
            };
            for (p, w) in quadrature(boundary, i) {
                let v = q(&p, &e.normal) * w;
                flux += v;
                abs += v.abs();
            }
        }
        (flux, abs)
    }
}

/// Quadrature nodes and weights (already multiplied by the element measure).
pub fn quadrature(boundary: &Boundary, e: usize) -> Vec<(Vec3, f64)> {
    let el = boundary.element(e);
    let v = |k: usize| boundary.vertices()[el.vertices[k] as usize];
    match boundary.dim() {
        Dim::Two => {
            let (a, b) = (v(0), v(1));
            let s = (0.6f64).sqrt();
            [(-s, 5.0 / 18.0), (0.0, 8.0 / 18.0), (s, 5.0 / 18.0)]
                .iter()
                .map(|&(t, w)| (a + 0.5 * (1.0 + t) * (b - a), w * el.area))
                .collect()
        }
        Dim::Three => {
            // Strang–Fix degree-4 rule.
            let (a, b, c) = (v(0), v(1), v(2));
            let (p1, p2, w1) = (0.816_847_572_980_459, 0.091_576_213_509_771, 0.109_951_743_655_322);
            let (q1, q2, w2) = (0.108_103_018_168_070, 0.445_948_490_915_965, 0.223_381_589_678_011);
            let mut out = Vec::with_capacity(6);
            for (l1, l2, w) in [
                (p1, p2, w1),
                (p2, p1, w1),
                (p2, p2, w1),
                (q1, q2, w2),
                (q2, q1, w2),
                (q2, q2, w2),
            ] {
                out.push((l1 * a + l2 * b + (1.0 - l1 - l2) * c, w * el.area));
            }
            out
        }
    }
}
