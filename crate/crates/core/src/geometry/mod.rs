//! Boundary representation: oriented segment loops in 2D and closed triangle
//! meshes in 3D, with all-hits ray queries, closest-point queries and
//! area-measure sampling of boundary points.

mod bvh;
mod io;
mod primitives;

use std::collections::HashMap;
use std::path::PathBuf;

use rand::Rng;
use thiserror::Error;

pub use bvh::Bvh;
pub use io::{load_loops_csv, load_obj, parse_loops_csv, parse_obj};

use crate::math::{closest_on_segment, closest_on_triangle, cross2, Aabb, Dim, Vec3};

/// Ray directions closer than this to tangential are discarded.
pub const GRAZING_COS: f64 = 1e-9;
/// Self-intersection guard, relative to the scene diameter.
pub const T_MIN_REL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("non-watertight boundary: {0}")]
    NonWatertight(String),
    #[error("orientation error: {0}")]
    Orientation(String),
    #[error("degenerate element {element} (measure {measure:e})")]
    DegenerateElement { element: usize, measure: f64 },
    #[error("empty sampling support")]
    EmptySupport,
    #[error("invalid primitive: {0}")]
    InvalidPrimitive(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

/// One boundary element: a segment (2D, first two vertex slots used) or a triangle.
#[derive(Clone, Debug)]
pub struct Element {
    pub vertices: [u32; 3],
    /// Outward unit normal with respect to the interior domain.
    pub normal: Vec3,
    /// Length (2D) or area (3D).
    pub area: f64,
    /// Boundary-condition tag; an index into the problem's condition list.
    pub tag: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    pub element: usize,
    pub normal: Vec3,
    /// `direction · normal`; negative when the ray enters the interior domain.
    pub cos_theta: f64,
}

impl Hit {
    pub fn front_facing(&self) -> bool {
        self.cos_theta < 0.0
    }
}

/// A point on Γ together with the density it was sampled with (area measure).
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPoint {
    pub position: Vec3,
    pub normal: Vec3,
    pub element: usize,
    pub pdf_area: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ClosestPoint {
    pub point: Vec3,
    pub distance: f64,
    pub element: usize,
}

/// Discrete distribution over elements proportional to `weight × measure`.
#[derive(Clone, Debug)]
pub struct ElementSampler {
    cdf: Vec<f64>,
    /// Σ weight × measure.
    total: f64,
    weights: Vec<f64>,
}

impl ElementSampler {
    pub fn new(boundary: &Boundary, weights: &[f64]) -> Result<ElementSampler, GeometryError> {
        assert_eq!(weights.len(), boundary.elements.len());
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for (w, e) in weights.iter().zip(&boundary.elements) {
            assert!(*w >= 0.0 && w.is_finite(), "element weights must be finite and nonnegative");
            acc += w * e.area;
            cdf.push(acc);
        }
        if acc <= 0.0 {
            return Err(GeometryError::EmptySupport);
        }
        Ok(ElementSampler {
            cdf,
            total: acc,
            weights: weights.to_vec(),
        })
    }

    fn uniform(boundary: &Boundary) -> ElementSampler {
        let w = vec![1.0; boundary.elements.len()];
        ElementSampler::new(boundary, &w).expect("boundary has positive measure")
    }

    #[inline]
    fn pick(&self, u: f64) -> usize {
        let target = u * self.total;
        self.cdf
            .partition_point(|&c| c <= target)
            .min(self.cdf.len() - 1)
    }

    /// Area-measure density of points on element `e`.
    #[inline]
    pub fn pdf(&self, e: usize) -> f64 {
        self.weights[e] / self.total
    }
}

/// Closed, consistently oriented boundary with an acceleration structure.
#[derive(Clone, Debug)]
pub struct Boundary {
    dim: Dim,
    vertices: Vec<Vec3>,
    elements: Vec<Element>,
    bvh: Bvh,
    bounds: Aabb,
    total_area: f64,
    t_min: f64,
    uniform: ElementSampler,
}

impl Boundary {
    /// Builds a 2D boundary from closed loops of vertices. Loops must be
    /// counter-clockwise for outer boundaries and clockwise for holes.
    pub fn from_loops(loops: &[Vec<[f64; 2]>]) -> Result<Boundary, GeometryError> {
        let mut vertices = Vec::new();
        let mut segments = Vec::new();
        for lp in loops {
            if lp.len() < 3 {
                return Err(GeometryError::NonWatertight(format!(
                    "loop with {} vertices",
                    lp.len()
                )));
            }
            let base = vertices.len() as u32;
            let n = lp.len() as u32;
            vertices.extend(lp.iter().map(|p| Vec3::new(p[0], p[1], 0.0)));
            segments.extend((0..n).map(|i| [base + i, base + (i + 1) % n]));
        }
        Boundary::from_segments(vertices, &segments)
    }

    /// Builds a 2D boundary from indexed directed segments.
    pub fn from_segments(vertices: Vec<Vec3>, segments: &[[u32; 2]]) -> Result<Boundary, GeometryError> {
        let nv = vertices.len();
        let mut outgoing = vec![0u32; nv];
        let mut incoming = vec![0u32; nv];
        for s in segments {
            for &v in s {
                if v as usize >= nv {
                    return Err(GeometryError::NonWatertight(format!("vertex index {v} out of range")));
                }
            }
            outgoing[s[0] as usize] += 1;
            incoming[s[1] as usize] += 1;
        }
        for v in 0..nv {
            let degree = outgoing[v] + incoming[v];
            if degree == 0 {
                continue;
            }
            if degree != 2 {
                return Err(GeometryError::NonWatertight(format!(
                    "vertex {v} has degree {degree}"
                )));
            }
            if outgoing[v] != 1 {
                return Err(GeometryError::Orientation(format!(
                    "segments meeting at vertex {v} are inconsistently wound"
                )));
            }
        }

        let mut elements = Vec::with_capacity(segments.len());
        for (i, s) in segments.iter().enumerate() {
            let a = vertices[s[0] as usize];
            let b = vertices[s[1] as usize];
            let t = b - a;
            let len = t.norm();
            if len <= 0.0 || !len.is_finite() {
                return Err(GeometryError::DegenerateElement { element: i, measure: len });
            }
            elements.push(Element {
                vertices: [s[0], s[1], s[1]],
                normal: Vec3::new(t.y / len, -t.x / len, 0.0),
                area: len,
                tag: 0,
            });
        }
        Boundary::finish(Dim::Two, vertices, elements)
    }

    /// Builds a 3D boundary from a triangle mesh; normals follow the winding.
    pub fn from_triangles(vertices: Vec<Vec3>, faces: &[[u32; 3]]) -> Result<Boundary, GeometryError> {
        let nv = vertices.len();
        // (undirected edge) -> (use count, net direction)
        let mut edges: HashMap<(u32, u32), (u32, i32)> = HashMap::with_capacity(faces.len() * 3);
        for f in faces {
            for &v in f {
                if v as usize >= nv {
                    return Err(GeometryError::NonWatertight(format!("vertex index {v} out of range")));
                }
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let (key, dir) = if a < b { ((a, b), 1) } else { ((b, a), -1) };
                let e = edges.entry(key).or_insert((0, 0));
                e.0 += 1;
                e.1 += dir;
            }
        }
        for (&(a, b), &(count, net)) in &edges {
            if count != 2 {
                return Err(GeometryError::NonWatertight(format!(
                    "edge ({a}, {b}) is shared by {count} triangles"
                )));
            }
            if net != 0 {
                return Err(GeometryError::Orientation(format!(
                    "edge ({a}, {b}) is traversed twice in the same direction"
                )));
            }
        }

        let mut elements = Vec::with_capacity(faces.len());
        for (i, f) in faces.iter().enumerate() {
            let a = vertices[f[0] as usize];
            let b = vertices[f[1] as usize];
            let c = vertices[f[2] as usize];
            let n = (b - a).cross(&(c - a));
            let twice = n.norm();
            if twice <= 0.0 || !twice.is_finite() {
                return Err(GeometryError::DegenerateElement { element: i, measure: 0.5 * twice });
            }
            elements.push(Element {
                vertices: *f,
                normal: n / twice,
                area: 0.5 * twice,
                tag: 0,
            });
        }
        Boundary::finish(Dim::Three, vertices, elements)
    }

    fn finish(dim: Dim, vertices: Vec<Vec3>, elements: Vec<Element>) -> Result<Boundary, GeometryError> {
        if elements.is_empty() {
            return Err(GeometryError::NonWatertight("no elements".into()));
        }
        let bounds = Aabb::from_points(
            elements
                .iter()
                .flat_map(|e| e.vertices.iter().map(|&v| &vertices[v as usize])),
        );
        let scale = bounds.diagonal();
        for (i, e) in elements.iter().enumerate() {
            let rel = match dim {
                Dim::Two => e.area / scale,
                Dim::Three => e.area / (scale * scale),
            };
            if rel < 1e-14 {
                return Err(GeometryError::DegenerateElement { element: i, measure: e.area });
            }
        }

        // Signed area/volume via the divergence theorem must be positive for
        // outward normals.
        let signed: f64 = elements
            .iter()
            .map(|e| {
                let p = &vertices[e.vertices[0] as usize];
                (p - bounds.center()).dot(&e.normal) * e.area
            })
            .sum::<f64>()
            / dim.n() as f64;
        if signed <= 0.0 {
            return Err(GeometryError::Orientation(
                "enclosed measure is negative; normals point into the domain".into(),
            ));
        }

        let boxes: Vec<Aabb> = elements
            .iter()
            .map(|e| Aabb::from_points(e.vertices.iter().map(|&v| &vertices[v as usize])))
            .collect();
        let bvh = Bvh::build(dim, &boxes);
        let total_area = elements.iter().map(|e| e.area).sum();
        let mut b = Boundary {
            dim,
            vertices,
            elements,
            bvh,
            bounds,
            total_area,
            t_min: T_MIN_REL * scale,
            uniform: ElementSampler {
                cdf: Vec::new(),
                total: 1.0,
                weights: Vec::new(),
            },
        };
        b.uniform = ElementSampler::uniform(&b);
        Ok(b)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Element {
        &self.elements[i]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn diameter(&self) -> f64 {
        self.bounds.diagonal()
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    /// Assigns boundary-condition tags, one per element.
    pub fn set_tags(&mut self, tags: &[usize]) {
        assert_eq!(tags.len(), self.elements.len());
        for (e, &t) in self.elements.iter_mut().zip(tags) {
            e.tag = t;
        }
    }

    pub fn tags(&self) -> impl Iterator<Item = usize> + '_ {
        self.elements.iter().map(|e| e.tag)
    }

    pub fn centroid(&self, e: usize) -> Vec3 {
        let el = &self.elements[e];
        let n = self.dim.n() as u32;
        let sum: Vec3 = el.vertices[..n as usize]
            .iter()
            .map(|&v| self.vertices[v as usize])
            .sum();
        sum / n as f64
    }

    /// Point on element `e` from barycentric-style parameters in `[0,1]^2`
    /// (only `s` is used in 2D).
    pub fn element_point(&self, e: usize, s: f64, t: f64) -> Vec3 {
        let el = &self.elements[e];
        let a = self.vertices[el.vertices[0] as usize];
        let b = self.vertices[el.vertices[1] as usize];
        match self.dim {
            Dim::Two => a + s * (b - a),
            Dim::Three => {
                let c = self.vertices[el.vertices[2] as usize];
                let r = s.sqrt();
                (1.0 - r) * a + r * (1.0 - t) * b + r * t * c
            }
        }
    }

    #[inline]
    fn intersect_element(&self, e: usize, o: &Vec3, d: &Vec3, t_min: f64) -> Option<Hit> {
        let el = &self.elements[e];
        let cos_theta = d.dot(&el.normal);
        if cos_theta.abs() < GRAZING_COS {
            return None;
        }
        let a = &self.vertices[el.vertices[0] as usize];
        let b = &self.vertices[el.vertices[1] as usize];
        let t = match self.dim {
            Dim::Two => {
                let edge = b - a;
                let denom = cross2(d, &edge);
                let ao = a - o;
                let t = cross2(&ao, &edge) / denom;
                let s = cross2(&ao, d) / denom;
                // Half-open so a ray through a shared vertex is counted once.
                if !(0.0..1.0).contains(&s) {
                    return None;
                }
                t
            }
            Dim::Three => {
                let c = &self.vertices[el.vertices[2] as usize];
                let e1 = b - a;
                let e2 = c - a;
                let p = d.cross(&e2);
                let inv_det = 1.0 / e1.dot(&p);
                let s = o - a;
                let u = s.dot(&p) * inv_det;
                if !(0.0..=1.0).contains(&u) {
                    return None;
                }
                let q = s.cross(&e1);
                let v = d.dot(&q) * inv_det;
                if v < 0.0 || u + v > 1.0 {
                    return None;
                }
                e2.dot(&q) * inv_det
            }
        };
        if !(t > t_min) || !t.is_finite() {
            return None;
        }
        Some(Hit {
            t,
            point: o + t * d,
            element: e,
            normal: el.normal,
            cos_theta,
        })
    }

    /// Every boundary crossing of the half-line `o + t d`, `t > t_min`,
    /// sorted by `t`. `d` must be a unit vector.
    pub fn all_hits(&self, o: &Vec3, d: &Vec3, exclude: Option<usize>) -> Vec<Hit> {
        let mut out = Vec::new();
        self.all_hits_into(o, d, exclude, &mut out);
        out
    }

    /// Allocation-free variant of [`Boundary::all_hits`]; `out` is cleared first.
    pub fn all_hits_into(&self, o: &Vec3, d: &Vec3, exclude: Option<usize>, out: &mut Vec<Hit>) {
        out.clear();
        self.bvh.for_each_ray_candidate(self.dim, o, d, f64::INFINITY, |e| {
            if Some(e) == exclude {
                return;
            }
            if let Some(h) = self.intersect_element(e, o, d, self.t_min) {
                out.push(h);
            }
        });
        out.sort_unstable_by(|a, b| a.t.total_cmp(&b.t));
    }

    /// Number of crossings along the half-line.
    pub fn count_hits(&self, o: &Vec3, d: &Vec3, exclude: Option<usize>) -> usize {
        let mut n = 0;
        self.bvh.for_each_ray_candidate(self.dim, o, d, f64::INFINITY, |e| {
            if Some(e) != exclude && self.intersect_element(e, o, d, self.t_min).is_some() {
                n += 1;
            }
        });
        n
    }

    /// Closest crossing along the half-line.
    pub fn first_hit(&self, o: &Vec3, d: &Vec3, exclude: Option<usize>) -> Option<Hit> {
        self.first_hit_beyond(o, d, exclude, self.t_min)
    }

    /// [`Boundary::first_hit`] with a caller-chosen guard distance. Rays
    /// leaving a flat element that is excluded cannot hit it again, so a
    /// guard of zero is safe there and keeps crossings on a neighbouring
    /// element within `t_min` of a shared vertex.
    pub fn first_hit_beyond(&self, o: &Vec3, d: &Vec3, exclude: Option<usize>, t_min: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        self.bvh.for_each_ray_candidate(self.dim, o, d, f64::INFINITY, |e| {
            if Some(e) == exclude {
                return;
            }
            if let Some(h) = self.intersect_element(e, o, d, t_min) {
                if best.is_none_or(|b| h.t < b.t) {
                    best = Some(h);
                }
            }
        });
        best
    }

    /// Brute-force reference for [`Boundary::all_hits`]; loops over every element.
    pub fn all_hits_brute_force(&self, o: &Vec3, d: &Vec3, exclude: Option<usize>) -> Vec<Hit> {
        let mut out: Vec<Hit> = (0..self.elements.len())
            .filter(|&e| Some(e) != exclude)
            .filter_map(|e| self.intersect_element(e, o, d, self.t_min))
            .collect();
        out.sort_unstable_by(|a, b| a.t.total_cmp(&b.t));
        out
    }

    fn element_distance2(&self, e: usize, x: &Vec3) -> (Vec3, f64) {
        let el = &self.elements[e];
        let a = &self.vertices[el.vertices[0] as usize];
        let b = &self.vertices[el.vertices[1] as usize];
        let p = match self.dim {
            Dim::Two => closest_on_segment(x, a, b).0,
            Dim::Three => closest_on_triangle(x, a, b, &self.vertices[el.vertices[2] as usize]),
        };
        (p, (p - x).norm_squared())
    }

    pub fn closest_point(&self, x: &Vec3) -> ClosestPoint {
        let (element, d2) = self
            .bvh
            .nearest(x, |e| self.element_distance2(e, x).1)
            .expect("non-empty boundary");
        ClosestPoint {
            point: self.element_distance2(element, x).0,
            distance: d2.sqrt(),
            element,
        }
    }

    /// Parity point classification, voted over three fixed directions.
    pub fn is_inside(&self, x: &Vec3) -> bool {
        const DIRS: [[f64; 3]; 3] = [
            [0.642_787_609_686_539_3, 0.766_044_443_118_978, 0.0],
            [-0.913_545_457_642_600_9, 0.406_736_643_075_800_2, 0.0],
            [0.275_637_355_816_999_2, -0.961_261_695_938_318_9, 0.0],
        ];
        const DIRS3: [[f64; 3]; 3] = [
            [0.267_261_241_912_424_4, 0.534_522_483_824_848_8, 0.801_783_725_737_273_2],
            [-0.707_106_781_186_547_6, 0.408_248_290_463_863, -0.577_350_269_189_625_8],
            [0.371_390_676_354_103_7, -0.928_476_690_885_259_3, 0.0],
        ];
        let dirs = match self.dim {
            Dim::Two => &DIRS,
            Dim::Three => &DIRS3,
        };
        let votes = dirs
            .iter()
            .filter(|d| {
                let d = Vec3::new(d[0], d[1], d[2]).normalize();
                self.count_hits(x, &d, None) % 2 == 1
            })
            .count();
        votes >= 2
    }

    /// True when every vertex lies on the inner side of every element plane.
    pub fn is_convex(&self) -> bool {
        let tol = 1e-9 * self.diameter();
        self.elements.iter().all(|el| {
            let p = self.vertices[el.vertices[0] as usize];
            self.vertices.iter().all(|v| (v - p).dot(&el.normal) <= tol)
        })
    }

    /// Uniform sample in area measure; the point is strictly inside its element.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> BoundaryPoint {
        self.sample_with(&self.uniform, rng)
    }

    /// Samples an element with probability ∝ weight × measure, then a uniform
    /// point inside it.
    pub fn sample_boundary<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        weights: Option<&[f64]>,
    ) -> Result<BoundaryPoint, GeometryError> {
        match weights {
            None => Ok(self.sample_uniform(rng)),
            Some(w) => Ok(self.sample_with(&ElementSampler::new(self, w)?, rng)),
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, sampler: &ElementSampler, rng: &mut R) -> BoundaryPoint {
        let e = sampler.pick(rng.random::<f64>());
        let s = open_unit(rng);
        let t = open_unit(rng);
        BoundaryPoint {
            position: self.element_point(e, s, t),
            normal: self.elements[e].normal,
            element: e,
            pdf_area: sampler.pdf(e),
        }
    }

    /// Uniform density `1 / |Γ|`.
    pub fn uniform_pdf(&self) -> f64 {
        1.0 / self.total_area
    }

    /// Wraps a known position on element `e` as a boundary point with the
    /// uniform density.
    pub fn point_on(&self, e: usize, position: Vec3) -> BoundaryPoint {
        BoundaryPoint {
            position,
            normal: self.elements[e].normal,
            element: e,
            pdf_area: self.uniform_pdf(),
        }
    }

    /// Snaps `x` to the closest point on Γ, nudged off vertices into the
    /// element interior.
    pub fn snap_to_boundary(&self, x: &Vec3) -> BoundaryPoint {
        let c = self.closest_point(x);
        let el = &self.elements[c.element];
        let centroid = self.centroid(c.element);
        let mut p = c.point;
        let to_vertex = el.vertices[..self.dim.n()]
            .iter()
            .map(|&v| (self.vertices[v as usize] - p).norm())
            .fold(f64::INFINITY, f64::min);
        let h = el.area.powf(1.0 / (self.dim.n() - 1) as f64);
        if to_vertex < 1e-6 * h {
            p += 1e-3 * (centroid - p);
        }
        self.point_on(c.element, p)
    }
}

#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
