//! Uniform volume sampling of the interior domain and the Newton potential
//! `V0(x) = ∫_Ω G(x, y) b̄(y) dV_y`.

use rand::Rng;

use super::EstimatorError;
use crate::geometry::Boundary;
use crate::kernels::{Green, KernelError};
use crate::math::{Dim, Vec3};
use crate::problem::FieldFn;
use crate::sampling::sample_sphere_direction;

/// Rejection sampler over the bounding box, accepting by ray parity.
#[derive(Clone, Debug)]
pub struct VolumeSampler {
    min: Vec3,
    extent: Vec3,
    measure: f64,
}

impl VolumeSampler {
    /// The enclosed measure comes from the divergence theorem over the
    /// boundary elements, which is exact for polygons and meshes.
    pub fn new(boundary: &Boundary) -> Result<VolumeSampler, EstimatorError> {
        let measure = enclosed_measure(boundary);
        let b = boundary.bounds();
        let dim = boundary.dim();
        let mut extent = b.extent();
        if dim == Dim::Two {
            extent.z = 0.0;
        }
        let box_measure: f64 = (0..dim.n()).map(|k| extent[k]).product();
        let acceptance = measure / box_measure;
        if !(acceptance >= 1e-4) {
            return Err(EstimatorError::ThinDomain(acceptance));
        }
        Ok(VolumeSampler {
            min: b.min,
            extent,
            measure,
        })
    }

    /// `|Ω|`.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Uniform point in Ω, and the number of rays spent on the parity tests.
    pub fn sample<R: Rng + ?Sized>(&self, boundary: &Boundary, rng: &mut R) -> (Vec3, u64) {
        let dim = boundary.dim();
        let mut rays = 0;
        loop {
            let mut p = self.min;
            for k in 0..dim.n() {
                p[k] += rng.random::<f64>() * self.extent[k];
            }
            let d = sample_sphere_direction(dim, rng);
            rays += 1;
            if boundary.count_hits(&p, &d, None) % 2 == 1 {
                return (p, rays);
            }
        }
    }

    /// Draws `n` source samples shared by every `V0` evaluation along one path.
    pub fn draw<R: Rng + ?Sized>(&self, boundary: &Boundary, source: &FieldFn, n: usize, rng: &mut R) -> PathVolume {
        let mut points = Vec::with_capacity(n);
        let mut rays_cast = 0;
        for _ in 0..n {
            let (y, r) = self.sample(boundary, rng);
            rays_cast += r;
            points.push((y, source(&y) * self.measure / n as f64));
        }
        PathVolume { points, rays_cast }
    }
}

/// `|Ω| = (1/d) ∫_Γ y · n dA`.
pub fn enclosed_measure(boundary: &Boundary) -> f64 {
    let c = boundary.bounds().center();
    let dim = boundary.dim().n() as f64;
    boundary
        .elements()
        .iter()
        .enumerate()
        .map(|(i, e)| (boundary.centroid(i) - c).dot(&e.normal) * e.area)
        .sum::<f64>()
        / dim
}

/// Weighted volume samples `(y_s, b̄(y_s) |Ω| / n)`.
#[derive(Clone, Debug, Default)]
pub struct PathVolume {
    points: Vec<(Vec3, f64)>,
    pub rays_cast: u64,
}

impl PathVolume {
    pub fn empty() -> PathVolume {
        PathVolume::default()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn v0(&self, green: &Green, x: &Vec3) -> Result<f64, KernelError> {
        self.points.iter().map(|(y, w)| Ok(green.g(x, y)? * w)).sum()
    }

    pub fn grad_v0(&self, green: &Green, x: &Vec3) -> Result<Vec3, KernelError> {
        self.points.iter().map(|(y, w)| Ok(green.grad_x(x, y)? * *w)).sum()
    }

    pub fn dv0_dn(&self, green: &Green, x: &Vec3, n: &Vec3) -> Result<f64, KernelError> {
        self.points.iter().map(|(y, w)| Ok(green.dg_dnx(x, y, n)? * w)).sum()
    }

    /// [`PathVolume::v0`] with singular draws contributing zero; used at
    /// boundary points, which volume samples cannot coincide with.
    pub fn v0_or_zero(&self, green: &Green, x: &Vec3) -> f64 {
        self.points.iter().map(|(y, w)| green.g(x, y).unwrap_or(0.0) * w).sum()
    }

    pub fn dv0_dn_or_zero(&self, green: &Green, x: &Vec3, n: &Vec3) -> f64 {
        self.points.iter().map(|(y, w)| green.dg_dnx(x, y, n).unwrap_or(0.0) * w).sum()
    }
}
