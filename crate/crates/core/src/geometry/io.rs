//! Mesh and loop file readers.
//!
//! * Triangle meshes: Wavefront-style text with `v x y z` and `f i j k`
//!   records (1-based, negative indices relative, `i/t/n` forms accepted;
//!   polygons are fan-triangulated). Other records are ignored.
//! * 2D loops: CSV with `x,y` rows; blank lines separate loops. Lines
//!   starting with `#` and a leading `x,y` header are skipped.

use std::fs;
use std::path::Path;

use super::{Boundary, GeometryError};
use crate::math::Vec3;

pub fn load_obj(path: &Path) -> Result<Boundary, GeometryError> {
    let text = fs::read_to_string(path).map_err(|source| GeometryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_obj(&text, path)
}

pub fn parse_obj(text: &str, path: &Path) -> Result<Boundary, GeometryError> {
    let err = |line: usize, msg: String| GeometryError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|e| err(line, format!("bad coordinate {s:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if c.len() != 3 {
                    return Err(err(line, "vertex needs three coordinates".into()));
                }
                verts.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = it
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        let i: i64 = head
                            .parse()
                            .map_err(|e| err(line, format!("bad face index {tok:?}: {e}")))?;
                        let resolved = if i < 0 { verts.len() as i64 + i } else { i - 1 };
                        if resolved < 0 || resolved >= verts.len() as i64 {
                            return Err(err(line, format!("face index {i} out of range")));
                        }
                        Ok(resolved as u32)
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(err(line, "face needs at least three vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Boundary::from_triangles(verts, &faces)
}

pub fn load_loops_csv(path: &Path) -> Result<Boundary, GeometryError> {
    let text = fs::read_to_string(path).map_err(|source| GeometryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_loops_csv(&text, path)
}

pub fn parse_loops_csv(text: &str, path: &Path) -> Result<Boundary, GeometryError> {
    let mut loops: Vec<Vec<[f64; 2]>> = vec![Vec::new()];
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !loops.last().is_some_and(|l| l.is_empty()) {
                loops.push(Vec::new());
            }
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (x, y) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
        match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(x), Ok(y)) => loops.last_mut().expect("non-empty").push([x, y]),
            _ if ln == 0 => continue, // header
            _ => {
                return Err(GeometryError::Parse {
                    path: path.to_path_buf(),
                    line: ln + 1,
                    msg: format!("expected `x,y`, got {line:?}"),
                })
            }
        }
    }
    loops.retain(|l| !l.is_empty());
    Boundary::from_loops(&loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_tetrahedron_with_quad_syntax() {
        let text = "# tet\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1/1/1 2/2/2 4/4/4\nf 2 3 4\nf -4 -1 -2\n";
        let b = parse_obj(text, Path::new("tet.obj")).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.is_convex());
    }

    #[test]
    fn obj_errors_carry_line_numbers() {
        let text = "v 0 0 0\nv 1 0 zero\n";
        let e = parse_obj(text, Path::new("bad.obj")).unwrap_err();
        assert!(e.to_string().contains("bad.obj:2"), "{e}");
    }

    #[test]
    fn loops_csv_with_hole() {
        let text = "x,y\n-1,-1\n1,-1\n1,1\n-1,1\n\n-0.5,-0.5\n-0.5,0.5\n0.5,0.5\n0.5,-0.5\n";
        let b = parse_loops_csv(text, Path::new("holes.csv")).unwrap();
        assert_eq!(b.len(), 8);
        assert!((b.total_area() - 12.0).abs() < 1e-12);
        assert!(b.is_inside(&Vec3::new(0.75, 0.0, 0.0)));
        assert!(!b.is_inside(&Vec3::new(0.0, 0.0, 0.0)));
    }
}
