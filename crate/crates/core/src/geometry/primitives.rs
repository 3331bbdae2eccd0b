//! Analytic boundary primitives.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{Boundary, GeometryError};
use crate::math::Vec3;

fn positive(name: &str, v: f64) -> Result<(), GeometryError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::InvalidPrimitive(format!("{name} must be positive, got {v}")))
    }
}

/// Splits every edge of a closed polygon into `per_edge` equal segments.
fn subdivide_loop(corners: &[[f64; 2]], per_edge: usize) -> Vec<[f64; 2]> {
    let n = corners.len();
    let mut out = Vec::with_capacity(n * per_edge);
    for i in 0..n {
        let a = corners[i];
        let b = corners[(i + 1) % n];
        for k in 0..per_edge {
            let s = k as f64 / per_edge as f64;
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    out
}

impl Boundary {
    /// Regular `n`-gon inscribed in the circle; counter-clockwise.
    pub fn circle(center: Vec3, radius: f64, n: usize) -> Result<Boundary, GeometryError> {
        positive("radius", radius)?;
        if n < 3 {
            return Err(GeometryError::InvalidPrimitive(format!("circle needs at least 3 segments, got {n}")));
        }
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                [center.x + radius * a.cos(), center.y + radius * a.sin()]
            })
            .collect();
        Boundary::from_loops(&[pts])
    }

    /// Axis-aligned rectangle with `per_edge` segments along each side.
    pub fn rectangle(min: [f64; 2], max: [f64; 2], per_edge: usize) -> Result<Boundary, GeometryError> {
        positive("width", max[0] - min[0])?;
        positive("height", max[1] - min[1])?;
        let corners = [min, [max[0], min[1]], max, [min[0], max[1]]];
        Boundary::from_loops(&[subdivide_loop(&corners, per_edge.max(1))])
    }

    /// Square of side `side` centred at `center`.
    pub fn square(center: Vec3, side: f64, per_edge: usize) -> Result<Boundary, GeometryError> {
        positive("side", side)?;
        let h = 0.5 * side;
        Boundary::rectangle([center.x - h, center.y - h], [center.x + h, center.y + h], per_edge)
    }

    /// `k`-pointed star alternating between `outer` and `inner` radii, with
    /// `per_edge` segments per star edge. The first tip points along +x.
    pub fn star(center: Vec3, k: usize, inner: f64, outer: f64, per_edge: usize) -> Result<Boundary, GeometryError> {
        positive("inner radius", inner)?;
        positive("outer radius", outer)?;
        if k < 2 {
            return Err(GeometryError::InvalidPrimitive(format!("star needs at least 2 points, got {k}")));
        }
        if inner >= outer {
            return Err(GeometryError::InvalidPrimitive("star inner radius must be below the outer radius".into()));
        }
        let corners: Vec<[f64; 2]> = (0..2 * k)
            .map(|i| {
                let a = PI * i as f64 / k as f64;
                let r = if i % 2 == 0 { outer } else { inner };
                [center.x + r * a.cos(), center.y + r * a.sin()]
            })
            .collect();
        Boundary::from_loops(&[subdivide_loop(&corners, per_edge.max(1))])
    }

    /// Combines a 2D outer boundary with boundaries of holes, reversing the
    /// winding of each hole so its normals point into the hole.
    pub fn with_holes(&self, holes: &[Boundary]) -> Result<Boundary, GeometryError> {
        let mut vertices = self.vertices.clone();
        let mut segments: Vec<[u32; 2]> = self.elements.iter().map(|e| [e.vertices[0], e.vertices[1]]).collect();
        for h in holes {
            if h.dim != super::Dim::Two || self.dim != super::Dim::Two {
                return Err(GeometryError::InvalidPrimitive("holes are supported for 2D boundaries only".into()));
            }
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&h.vertices);
            segments.extend(h.elements.iter().map(|e| [base + e.vertices[1], base + e.vertices[0]]));
        }
        Boundary::from_segments(vertices, &segments)
    }

    /// Icosphere: subdivided icosahedron projected onto the sphere.
    pub fn icosphere(center: Vec3, radius: f64, subdivisions: u32) -> Result<Boundary, GeometryError> {
        positive("radius", radius)?;
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<Vec3> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .iter()
        .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
        .collect();
        let mut faces: Vec<[u32; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
            let mut mid = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
                let key = (a.min(b), a.max(b));
                *midpoint.entry(key).or_insert_with(|| {
                    verts.push((verts[a as usize] + verts[b as usize]).normalize());
                    (verts.len() - 1) as u32
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for f in &faces {
                let ab = mid(f[0], f[1], &mut verts);
                let bc = mid(f[1], f[2], &mut verts);
                let ca = mid(f[2], f[0], &mut verts);
                next.push([f[0], ab, ca]);
                next.push([f[1], bc, ab]);
                next.push([f[2], ca, bc]);
                next.push([ab, bc, ca]);
            }
            faces = next;
        }
        let verts = verts.into_iter().map(|v| center + radius * v).collect();
        Boundary::from_triangles(verts, &faces)
    }

    /// Axis-aligned box with each face split into `per_edge × per_edge`
    /// quads (two triangles each).
    pub fn cuboid(min: Vec3, max: Vec3, per_edge: usize) -> Result<Boundary, GeometryError> {
        for k in 0..3 {
            positive("box extent", max[k] - min[k])?;
        }
        let n = per_edge.max(1);
        let mut verts: Vec<Vec3> = Vec::new();
        let mut index: HashMap<[i64; 3], u32> = HashMap::new();
        let mut vid = |g: [i64; 3], verts: &mut Vec<Vec3>| -> u32 {
            *index.entry(g).or_insert_with(|| {
                let p = Vec3::new(
                    min.x + (max.x - min.x) * g[0] as f64 / n as f64,
                    min.y + (max.y - min.y) * g[1] as f64 / n as f64,
                    min.z + (max.z - min.z) * g[2] as f64 / n as f64,
                );
                verts.push(p);
                (verts.len() - 1) as u32
            })
        };
        let n_i = n as i64;
        let mut faces = Vec::new();
        // For each axis and side, (u, v) span the face so that u × v points outward.
        for axis in 0..3 {
            let (u_ax, v_ax) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in [0i64, n_i] {
                for i in 0..n_i {
                    for j in 0..n_i {
                        let corner = |du: i64, dv: i64| {
                            let mut g = [0i64; 3];
                            g[axis] = side;
                            g[u_ax] = i + du;
                            g[v_ax] = j + dv;
                            g
                        };
                        let a = vid(corner(0, 0), &mut verts);
                        let b = vid(corner(1, 0), &mut verts);
                        let c = vid(corner(1, 1), &mut verts);
                        let d = vid(corner(0, 1), &mut verts);
                        if side == n_i {
                            faces.push([a, b, c]);
                            faces.push([a, c, d]);
                        } else {
                            faces.push([a, c, b]);
                            faces.push([a, d, c]);
                        }
                    }
                }
            }
        }
        Boundary::from_triangles(verts, &faces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hole_normals_point_into_the_hole() {
        let outer = Boundary::square(Vec3::zeros(), 4.0, 8).unwrap();
        let hole = Boundary::circle(Vec3::new(0.5, 0.0, 0.0), 0.5, 32).unwrap();
        let b = outer.with_holes(&[hole]).unwrap();
        assert_eq!(b.len(), 32 + 32);
        let c = Vec3::new(0.5, 0.0, 0.0);
        for e in 32..64 {
            assert!((b.centroid(e) - c).dot(&b.element(e).normal) < 0.0);
        }
        assert!(b.is_inside(&Vec3::new(-1.5, 0.0, 0.0)));
        assert!(!b.is_inside(&c));
    }

    #[test]
    fn primitive_sizes_are_validated() {
        assert!(Boundary::circle(Vec3::zeros(), -1.0, 16).is_err());
        assert!(Boundary::star(Vec3::zeros(), 5, 1.0, 0.5, 2).is_err());
        assert!(Boundary::cuboid(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0), 1).is_err());
    }

    #[test]
    fn cuboid_is_closed_with_exact_area() {
        let b = Boundary::cuboid(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 2.0, 1.0), 3).unwrap();
        assert_eq!(b.len(), 6 * 9 * 2);
        assert!((b.total_area() - 2.0 * (2.0 * 3.0 + 3.0 * 2.0 + 2.0 * 2.0)).abs() < 1e-12);
        assert!(b.is_convex());
    }

    #[test]
    fn icosphere_area_approaches_sphere() {
        let b = Boundary::icosphere(Vec3::zeros(), 1.0, 4).unwrap();
        assert_eq!(b.len(), 20 * 256);
        assert!((b.total_area() - 4.0 * PI).abs() / (4.0 * PI) < 5e-3);
    }

    #[test]
    fn star_perimeter() {
        let b = Boundary::star(Vec3::zeros(), 5, 0.5, 1.0, 3).unwrap();
        let edge = (1.0f64 + 0.25 - 2.0 * 0.5 * (PI / 5.0).cos()).sqrt();
        assert!((b.total_area() - 10.0 * edge).abs() < 1e-12);
        assert_eq!(b.len(), 30);
    }
}
