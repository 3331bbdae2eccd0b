//! Scene files: geometry, boundary conditions, evaluation points and
//! default solver settings, in TOML.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use super::reference::Reference;
use crate::estimators::{EstimatorConfig, EvalPoint, SamplingMode};
use crate::geometry::{load_loops_csv, load_obj};
use crate::geometry::{Boundary, GeometryError};
use crate::math::{Dim, Vec3};
use crate::problem::{quadrature, BoundaryCondition, BoundaryFn, FieldFn, ProblemSpec, Side, SpecError};
use crate::wos::WosConfig;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SceneError> {
    Err(SceneError::Invalid(msg.into()))
}

// ---- file format -------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    name: Option<String>,
    geometry: GeometryCfg,
    problem: ProblemCfg,
    grid: Option<GridCfg>,
    #[serde(default)]
    estimator: EstimatorConfig,
    #[serde(default)]
    wos: WosConfig,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct GeometryCfg {
    shape: Shape,
    #[serde(default)]
    holes: Vec<Shape>,
    /// Declares the domain convex; checked against the geometry.
    #[serde(default)]
    convex: bool,
}

fn one() -> f64 {
    1.0
}
fn segments() -> usize {
    512
}
fn per_edge() -> usize {
    128
}
fn star_points() -> usize {
    5
}
fn subdivisions() -> u32 {
    4
}

#[derive(Deserialize, Debug, Clone)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum Shape {
    Circle {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "segments")]
        segments: usize,
    },
    Rectangle {
        min: [f64; 2],
        max: [f64; 2],
        #[serde(default = "per_edge")]
        per_edge: usize,
    },
    Star {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "star_points")]
        points: usize,
        inner: f64,
        outer: f64,
        #[serde(default = "per_edge")]
        per_edge: usize,
    },
    Sphere {
        #[serde(default)]
        center: [f64; 3],
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "subdivisions")]
        subdivisions: u32,
    },
    Cuboid {
        min: [f64; 3],
        max: [f64; 3],
        #[serde(default = "per_edge")]
        per_edge: usize,
    },
    /// Triangle mesh in OBJ format.
    Mesh { file: PathBuf },
    /// 2D loops, one `x,y` row per vertex and a blank line between loops.
    Loops { file: PathBuf },
}

impl Shape {
    fn build(&self, base: &Path) -> Result<Boundary, GeometryError> {
        let v2 = |c: [f64; 2]| Vec3::new(c[0], c[1], 0.0);
        match self {
            Shape::Circle { center, radius, segments } => Boundary::circle(v2(*center), *radius, *segments),
            Shape::Rectangle { min, max, per_edge } => Boundary::rectangle(*min, *max, *per_edge),
            Shape::Star {
                center,
                points,
                inner,
                outer,
                per_edge,
            } => Boundary::star(v2(*center), *points, *inner, *outer, *per_edge),
            Shape::Sphere {
                center,
                radius,
                subdivisions,
            } => Boundary::icosphere(Vec3::from(*center), *radius, *subdivisions),
            Shape::Cuboid { min, max, per_edge } => Boundary::cuboid(Vec3::from(*min), Vec3::from(*max), *per_edge),
            Shape::Mesh { file } => load_obj(&base.join(file)),
            Shape::Loops { file } => load_loops_csv(&base.join(file)),
        }
    }
}

#[derive(Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SideSelection {
    Interior,
    Exterior,
    /// Interior points use the interior problem, exterior points the
    /// exterior one, sharing the boundary data.
    Both,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ProblemCfg {
    side: SideSelection,
    reference: Option<Reference>,
    /// Constant Poisson source `b̄` (`Δv = b̄`).
    source: Option<f64>,
    #[serde(default)]
    assignment: Assignment,
    conditions: Vec<ConditionCfg>,
}

#[derive(Deserialize, Debug, Default, Clone, Copy)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
enum Assignment {
    /// Every element gets condition 0.
    #[default]
    Single,
    /// Each element draws a condition uniformly at random.
    Random { seed: u64 },
    /// Condition 1 where the element centroid has `p[axis] > at`,
    /// condition 0 elsewhere.
    Split { axis: usize, at: f64 },
    /// Condition `i` on the `i`-th of equal angular sectors around
    /// `center`, counted from the negative x axis (2D only).
    Sectors {
        #[serde(default)]
        center: [f64; 2],
    },
}

#[derive(Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum KindCfg {
    Dirichlet,
    Neumann,
    Robin,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ConditionCfg {
    kind: KindCfg,
    #[serde(default)]
    data: DataCfg,
    alpha: Option<f64>,
}

fn spot_count() -> usize {
    6
}

#[derive(Deserialize, Debug, Default, Clone)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum DataCfg {
    /// Derived from the scene reference: `u`, `∂u/∂n` or `∂u/∂n + α u`.
    #[default]
    Reference,
    Constant { value: f64 },
    /// `value` where `p[axis] > at`, zero elsewhere.
    Step { axis: usize, at: f64, value: f64 },
    /// Compactly supported bumps centred on a circle (2D) or the equator
    /// (3D), with alternating signs. `balance` removes the mean so the data
    /// integrate to zero over Γ.
    Spots {
        #[serde(default = "spot_count")]
        count: usize,
        #[serde(default)]
        center: [f64; 3],
        radius: f64,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        alternate: bool,
        #[serde(default)]
        balance: bool,
    },
    /// Uniform flow along `axis`: `speed · n[axis]` on elements lying in the
    /// planes `p[axis] = at[0]` or `p[axis] = at[1]`, zero elsewhere.
    AxisFlux { axis: usize, speed: f64, at: [f64; 2] },
}

#[derive(Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Plane {
    #[default]
    Xy,
    Xz,
    Yz,
}

#[derive(Deserialize, Debug, Clone)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridCfg {
    /// Cell-centred `W × H` window, masked by side.
    Window {
        min: [f64; 2],
        max: [f64; 2],
        resolution: [usize; 2],
        #[serde(default)]
        plane: Plane,
        #[serde(default)]
        offset: f64,
    },
    /// `count` points on Γ, at centroids of evenly spaced elements.
    Boundary { count: usize },
    /// Explicit points, classified by side.
    Points { points: Vec<[f64; 3]> },
}

// ---- loaded scene ------------------------------------------------------

/// An evaluation location with the side whose problem it belongs to.
#[derive(Clone, Copy, Debug)]
pub struct ScenePoint {
    pub eval: EvalPoint,
    pub side: Side,
    /// `(column, row)` in the image, rows counted from the bottom.
    pub cell: Option<(usize, usize)>,
}

pub struct Scene {
    pub name: String,
    pub boundary: Boundary,
    /// One problem per side in use.
    pub problems: Vec<ProblemSpec>,
    pub sides: SideSelection,
    pub reference: Option<Reference>,
    pub grid: GridCfg,
    pub points: Vec<ScenePoint>,
    /// Image size for window grids.
    pub image: Option<(usize, usize)>,
    pub estimator: EstimatorConfig,
    pub wos: WosConfig,
    pub declared_convex: bool,
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let text = fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut scene = Scene::from_toml_str(&text, base).map_err(|e| match e {
        SceneError::Parse { msg, .. } => SceneError::Parse {
            path: path.to_path_buf(),
            msg,
        },
        other => other,
    })?;
    if scene.name.is_empty() {
        scene.name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    }
    Ok(scene)
}

impl Scene {
    /// Parses and validates a scene; relative file paths resolve against `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Scene, SceneError> {
        let file: SceneFile = toml::from_str(text).map_err(|e| SceneError::Parse {
            path: PathBuf::from("<scene>"),
            msg: e.to_string(),
        })?;
        let mut boundary = file.geometry.shape.build(base)?;
        if !file.geometry.holes.is_empty() {
            let holes = file
                .geometry
                .holes
                .iter()
                .map(|h| h.build(base))
                .collect::<Result<Vec<_>, _>>()?;
            boundary = boundary.with_holes(&holes)?;
        }
        if file.geometry.convex && !boundary.is_convex() {
            return invalid("[geometry] declares convex = true but the boundary is not convex");
        }
        if file.estimator.sampling_mode == SamplingMode::ConvexHemisphere && !file.geometry.convex {
            return invalid("[estimator] convex-hemisphere sampling requires [geometry] convex = true");
        }

        let p = &file.problem;
        if p.conditions.is_empty() {
            return invalid("[problem] needs at least one [[problem.conditions]] entry");
        }
        if let Some(r) = p.reference {
            if r.dim() != boundary.dim() {
                return invalid(format!("[problem] reference {} is {:?} but the geometry is {:?}", r.id(), r.dim(), boundary.dim()));
            }
        }
        let tags: Vec<usize> = match p.assignment {
            Assignment::Single => vec![0; boundary.len()],
            Assignment::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..boundary.len()).map(|_| rng.random_range(0..p.conditions.len())).collect()
            }
            Assignment::Split { axis, at } => {
                if axis >= boundary.dim().n() || p.conditions.len() < 2 {
                    return invalid("[problem] split assignment needs a valid axis and two conditions");
                }
                (0..boundary.len()).map(|e| (boundary.centroid(e)[axis] > at) as usize).collect()
            }
            Assignment::Sectors { center } => {
                if boundary.dim() != Dim::Two {
                    return invalid("[problem] sector assignment is for 2D boundaries");
                }
                let n = p.conditions.len();
                (0..boundary.len())
                    .map(|e| {
                        let c = boundary.centroid(e);
                        let a = (c.y - center[1]).atan2(c.x - center[0]) + PI;
                        ((a / (2.0 * PI) * n as f64) as usize).min(n - 1)
                    })
                    .collect()
            }
        };
        boundary.set_tags(&tags);
        let conditions = p
            .conditions
            .iter()
            .enumerate()
            .map(|(i, c)| build_condition(i, c, p.reference, &boundary))
            .collect::<Result<Vec<_>, _>>()?;
        let source = match (p.source, p.reference.and_then(Reference::source)) {
            (Some(a), Some(b)) if a != b => {
                return invalid(format!("[problem] source = {a} contradicts the reference source {b}"))
            }
            (a, b) => a.or(b),
        };
        let sides = match p.side {
            SideSelection::Interior => vec![Side::Interior],
            SideSelection::Exterior => vec![Side::Exterior],
            SideSelection::Both => vec![Side::Interior, Side::Exterior],
        };
        let mut problems = Vec::new();
        for side in sides {
            let mut spec = ProblemSpec::new(boundary.dim(), side, conditions.clone());
            if let Some(b) = source {
                let f: FieldFn = Arc::new(move |_| b);
                spec = spec.with_source(f);
            }
            spec.validate(&boundary)?;
            problems.push(spec);
        }

        let grid = file.grid.clone().unwrap_or_else(|| default_grid(&boundary));
        let mut scene = Scene {
            name: file.name.unwrap_or_default(),
            boundary,
            problems,
            sides: p.side,
            reference: p.reference,
            grid: grid.clone(),
            points: Vec::new(),
            image: None,
            estimator: file.estimator,
            wos: file.wos,
            declared_convex: file.geometry.convex,
        };
        scene.set_grid(grid)?;
        Ok(scene)
    }

    pub fn problem(&self, side: Side) -> &ProblemSpec {
        self.problems
            .iter()
            .find(|p| p.side == side)
            .expect("points only carry sides the scene defines")
    }

    /// Replaces the evaluation grid and recomputes the points.
    pub fn set_grid(&mut self, grid: GridCfg) -> Result<(), SceneError> {
        let b = &self.boundary;
        let tol = 1e-9 * b.diameter().max(1.0);
        let side_of = |x: &Vec3| if b.is_inside(x) { Side::Interior } else { Side::Exterior };
        let wanted = |s: Side| match self.sides {
            SideSelection::Interior => s == Side::Interior,
            SideSelection::Exterior => s == Side::Exterior,
            SideSelection::Both => true,
        };
        let mut points = Vec::new();
        let mut image = None;
        match &grid {
            GridCfg::Window {
                min,
                max,
                resolution,
                plane,
                offset,
            } => {
                let [w, h] = *resolution;
                if w == 0 || h == 0 {
                    return invalid("[grid] resolution must be at least 1×1");
                }
                if !(max[0] > min[0] && max[1] > min[1]) {
                    return invalid("[grid] window max must exceed min");
                }
                image = Some((w, h));
                for j in 0..h {
                    for i in 0..w {
                        let u = min[0] + (i as f64 + 0.5) * (max[0] - min[0]) / w as f64;
                        let v = min[1] + (j as f64 + 0.5) * (max[1] - min[1]) / h as f64;
                        let x = match (b.dim(), plane) {
                            (Dim::Two, _) | (Dim::Three, Plane::Xy) => Vec3::new(u, v, if b.dim() == Dim::Two { 0.0 } else { *offset }),
                            (Dim::Three, Plane::Xz) => Vec3::new(u, *offset, v),
                            (Dim::Three, Plane::Yz) => Vec3::new(*offset, u, v),
                        };
                        if b.closest_point(&x).distance <= tol {
                            continue;
                        }
                        let side = side_of(&x);
                        if wanted(side) {
                            points.push(ScenePoint {
                                eval: EvalPoint::Domain(x),
                                side,
                                cell: Some((i, j)),
                            });
                        }
                    }
                }
            }
            GridCfg::Boundary { count } => {
                if *count == 0 || *count > b.len() {
                    return invalid(format!("[grid] boundary count must lie in 1..={}", b.len()));
                }
                let side = if wanted(Side::Interior) { Side::Interior } else { Side::Exterior };
                for k in 0..*count {
                    let e = k * b.len() / count;
                    points.push(ScenePoint {
                        eval: EvalPoint::OnBoundary(b.point_on(e, b.centroid(e))),
                        side,
                        cell: None,
                    });
                }
            }
            GridCfg::Points { points: list } => {
                for p in list {
                    let x = Vec3::from(*p);
                    if b.closest_point(&x).distance <= tol {
                        return invalid(format!("[grid] point {p:?} lies on the boundary"));
                    }
                    let side = side_of(&x);
                    if !wanted(side) {
                        return invalid(format!("[grid] point {p:?} is on the {side:?} side, which the scene does not solve"));
                    }
                    points.push(ScenePoint {
                        eval: EvalPoint::Domain(x),
                        side,
                        cell: None,
                    });
                }
            }
        }
        if points.is_empty() {
            return invalid("[grid] produces no evaluation points");
        }
        self.grid = grid;
        self.points = points;
        self.image = image;
        Ok(())
    }

    /// Changes the window resolution (window grids only).
    pub fn set_resolution(&mut self, w: usize, h: usize) -> Result<(), SceneError> {
        match self.grid.clone() {
            GridCfg::Window { min, max, plane, offset, .. } => self.set_grid(GridCfg::Window {
                min,
                max,
                resolution: [w, h],
                plane,
                offset,
            }),
            _ => invalid("--grid applies to window grids only"),
        }
    }
}

fn default_grid(b: &Boundary) -> GridCfg {
    let bb = b.bounds();
    let c = bb.center();
    let e = bb.extent() * 0.6;
    GridCfg::Window {
        min: [c.x - e.x, c.y - e.y],
        max: [c.x + e.x, c.y + e.y],
        resolution: [32, 32],
        plane: Plane::Xy,
        offset: c.z,
    }
}

fn build_condition(
    index: usize,
    c: &ConditionCfg,
    reference: Option<Reference>,
    boundary: &Boundary,
) -> Result<BoundaryCondition, SceneError> {
    let alpha = match (c.kind, c.alpha) {
        (KindCfg::Robin, Some(a)) if a != 0.0 && a.is_finite() => a,
        (KindCfg::Robin, _) => return invalid(format!("condition {index}: robin needs a nonzero finite alpha")),
        (_, Some(_)) => return invalid(format!("condition {index}: alpha applies to robin conditions only")),
        (_, None) => 0.0,
    };
    let data: BoundaryFn = match &c.data {
        DataCfg::Reference => {
            let Some(r) = reference else {
                return invalid(format!("condition {index}: data type \"reference\" needs [problem] reference"));
            };
            match c.kind {
                KindCfg::Dirichlet => Arc::new(move |p, _| r.value(p)),
                KindCfg::Neumann => Arc::new(move |p, n| r.gradient(p).dot(n)),
                KindCfg::Robin => Arc::new(move |p, n| r.gradient(p).dot(n) + alpha * r.value(p)),
            }
        }
        DataCfg::Constant { value } => {
            let v = *value;
            Arc::new(move |_, _| v)
        }
        DataCfg::Step { axis, at, value } => {
            let (axis, at, v) = (*axis, *at, *value);
            if axis >= boundary.dim().n() {
                return invalid(format!("condition {index}: axis {axis} out of range"));
            }
            Arc::new(move |p, _| if p[axis] > at { v } else { 0.0 })
        }
        DataCfg::Spots {
            count,
            center,
            radius,
            width,
            amplitude,
            alternate,
            balance,
        } => {
            if *count == 0 || !(*width > 0.0) {
                return invalid(format!("condition {index}: spots need count ≥ 1 and width > 0"));
            }
            let c0 = Vec3::from(*center);
            let centres: Vec<(Vec3, f64)> = (0..*count)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / *count as f64;
                    let s = if *alternate && k % 2 == 1 { -1.0 } else { 1.0 };
                    (c0 + *radius * Vec3::new(a.cos(), a.sin(), 0.0), s * amplitude)
                })
                .collect();
            let w = *width;
            let bump = move |p: &Vec3| -> f64 {
                centres
                    .iter()
                    .map(|(q, a)| {
                        let t = (p - q).norm_squared() / (w * w);
                        if t < 1.0 { a * (1.0 - t).powi(2) } else { 0.0 }
                    })
                    .sum()
            };
            let mean = if *balance {
                let (mut total, mut area) = (0.0, 0.0);
                for e in 0..boundary.len() {
                    for (p, wq) in quadrature(boundary, e) {
                        total += bump(&p) * wq;
                        area += wq;
                    }
                }
                total / area
            } else {
                0.0
            };
            Arc::new(move |p, _| bump(p) - mean)
        }
        DataCfg::AxisFlux { axis, speed, at } => {
            let (axis, speed, at) = (*axis, *speed, *at);
            if axis >= boundary.dim().n() {
                return invalid(format!("condition {index}: axis {axis} out of range"));
            }
            let tol = 1e-9 * boundary.diameter();
            Arc::new(move |p, n| {
                if (p[axis] - at[0]).abs() < tol || (p[axis] - at[1]).abs() < tol {
                    speed * n[axis]
                } else {
                    0.0
                }
            })
        }
    };
    Ok(match c.kind {
        KindCfg::Dirichlet => BoundaryCondition::Dirichlet(data),
        KindCfg::Neumann => BoundaryCondition::Neumann(data),
        KindCfg::Robin => BoundaryCondition::Robin {
            alpha: Arc::new(move |_, _| alpha),
            g: data,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRCLE: &str = r#"
        [geometry]
        shape = { kind = "circle" }
        [problem]
        side = "interior"
        reference = "linear-x"
        [[problem.conditions]]
        kind = "dirichlet"
    "#;

    #[test]
    fn minimal_circle_defaults() {
        let s = Scene::from_toml_str(CIRCLE, Path::new(".")).unwrap();
        assert_eq!(s.boundary.len(), 512);
        assert_eq!(s.image, Some((32, 32)));
        assert!(s.points.iter().all(|p| p.side == Side::Interior));
    }

    #[test]
    fn random_assignment_is_seeded() {
        let text = r#"
            [geometry]
            shape = { kind = "circle", radius = 0.8 }
            [problem]
            side = "interior"
            reference = "saddle"
            assignment = { mode = "random", seed = 7 }
            [[problem.conditions]]
            kind = "dirichlet"
            [[problem.conditions]]
            kind = "neumann"
            [[problem.conditions]]
            kind = "robin"
            alpha = 1.0
        "#;
        let a: Vec<usize> = Scene::from_toml_str(text, Path::new(".")).unwrap().boundary.tags().collect();
        let b: Vec<usize> = Scene::from_toml_str(text, Path::new(".")).unwrap().boundary.tags().collect();
        assert_eq!(a, b);
        for t in 0..3 {
            assert!(a.iter().filter(|&&x| x == t).count() > 100);
        }
    }

    #[test]
    fn incompatible_flux_is_rejected() {
        let text = r#"
            [geometry]
            shape = { kind = "circle" }
            [problem]
            side = "interior"
            [[problem.conditions]]
            kind = "neumann"
            data = { type = "constant", value = 1.0 }
        "#;
        let err = Scene::from_toml_str(text, Path::new(".")).err().unwrap().to_string();
        assert!(err.contains("compatibility violated"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_context() {
        let err = Scene::from_toml_str("[geometry]\nshape = { kind = \"blob\" }\n", Path::new("."))
            .err()
            .unwrap()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn both_sides_route_points() {
        let text = r#"
            [geometry]
            shape = { kind = "circle" }
            [problem]
            side = "both"
            [[problem.conditions]]
            kind = "dirichlet"
            data = { type = "constant", value = 0.0 }
            [grid]
            kind = "window"
            min = [-2.0, -2.0]
            max = [2.0, 2.0]
            resolution = [16, 16]
        "#;
        let s = Scene::from_toml_str(text, Path::new(".")).unwrap();
        assert_eq!(s.points.len(), 256);
        for p in &s.points {
            let inside = p.eval.position().norm() < 1.0;
            assert_eq!(p.side == Side::Interior, inside);
        }
    }

    #[test]
    fn balanced_spots_integrate_to_zero() {
        let text = r#"
            [geometry]
            shape = { kind = "circle" }
            [problem]
            side = "interior"
            [[problem.conditions]]
            kind = "neumann"
            data = { type = "spots", radius = 1.0, width = 0.3, balance = true }
        "#;
        let s = Scene::from_toml_str(text, Path::new(".")).unwrap();
        let (flux, abs) = s.problems[0].flux_integral(&s.boundary);
        assert!(flux.abs() < 1e-9 * abs);
    }

    #[test]
    fn declared_convexity_is_checked() {
        let text = r#"
            [geometry]
            shape = { kind = "star", inner = 0.5, outer = 1.0 }
            convex = true
            [problem]
            side = "interior"
            [[problem.conditions]]
            kind = "dirichlet"
            data = { type = "constant", value = 1.0 }
        "#;
        assert!(Scene::from_toml_str(text, Path::new(".")).is_err());
    }
}
