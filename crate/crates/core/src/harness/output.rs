//! CSV tables, PFM float images and colour-mapped PNG previews.
//!
//! Field CSV columns: `px,py,pz,mean,var,n,grad_x,grad_y,grad_z,ref,abs_err`.
//! `var` is the unbiased per-sample variance, `n` the successful sample
//! count, and empty cells stand for absent gradients or references. Floats
//! are printed with Rust's shortest round-trip formatting, so parsing the
//! text recovers the exact doubles.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::run::{ConvergenceRow, EfficiencyRow, FieldGrid, HarnessError};

pub const FIELD_HEADER: &str = "px,py,pz,mean,var,n,grad_x,grad_y,grad_z,ref,abs_err";
pub const CONVERGENCE_HEADER: &str = "formulation,M,N,rmse,noise,wall_time,rays";
pub const EFFICIENCY_HEADER: &str = "method,param,N,rmse,wall_time,work";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn field_csv(grid: &FieldGrid) -> String {
    let mut s = String::from(FIELD_HEADER);
    s.push('\n');
    for p in &grid.points {
        let x = p.position();
        let g = p.stats.gradient_mean();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            x.x,
            x.y,
            x.z,
            p.mean(),
            p.stats.value.variance(),
            p.stats.value.n(),
            opt(g.map(|g| g.x)),
            opt(g.map(|g| g.y)),
            opt(g.map(|g| g.z)),
            opt(p.reference),
            opt(p.abs_err()),
        );
    }
    s
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for r in rows {
        let f = serde_id(&r.formulation);
        let _ = writeln!(s, "{f},{},{},{},{},{},{}", r.m, r.n, r.rmse, r.noise, r.wall_time, r.rays);
    }
    s
}

pub fn efficiency_csv(rows: &[EfficiencyRow]) -> String {
    let mut s = String::from(EFFICIENCY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.method, r.param, r.n, r.rmse, r.wall_time, r.work);
    }
    s
}

fn serde_id<T: serde::Serialize>(v: &T) -> String {
    toml::Value::try_from(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Row-major image of the field means (row 0 at the bottom); cells without
/// an evaluation point are NaN.
pub fn field_image(grid: &FieldGrid) -> Option<(usize, usize, Vec<f32>)> {
    let (w, h) = grid.image?;
    let mut data = vec![f32::NAN; w * h];
    for p in &grid.points {
        if let Some((i, j)) = p.point.cell {
            data[j * w + i] = p.mean() as f32;
        }
    }
    Some((w, h, data))
}

/// Grayscale PFM: little-endian (negative scale) with scanlines stored
/// bottom to top, which matches the row order of [`field_image`].
pub fn encode_pfm(w: usize, h: usize, data: &[f32]) -> Vec<u8> {
    assert_eq!(data.len(), w * h);
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>), String> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PFM header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "Pf" {
        return Err(format!("unsupported PFM type {:?}", fields[0]));
    }
    let w: usize = fields[1].parse().map_err(|_| "bad width")?;
    let h: usize = fields[2].parse().map_err(|_| "bad height")?;
    let scale: f64 = fields[3].parse().map_err(|_| "bad scale")?;
    let body = &bytes[pos.min(bytes.len())..];
    if body.len() != 4 * w * h {
        return Err(format!("expected {} data bytes, found {}", 4 * w * h, body.len()));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if scale < 0.0 { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
        })
        .collect();
    Ok((w, h, data))
}

/// How values map onto the colour ramp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RangeMode {
    /// `[-a, a]` with `a` the largest magnitude.
    #[default]
    Symmetric,
    /// `[min, max]` of the data.
    Extrema,
}

/// Blue-white-red ramp on `t ∈ [0, 1]`.
pub fn diverging(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, s: f64| (a + (b - a) * s).round() as u8;
    let (blue, white, red) = ([33.0, 102.0, 172.0], [247.0, 247.0, 247.0], [178.0, 24.0, 43.0]);
    let (a, b, s) = if t < 0.5 { (blue, white, 2.0 * t) } else { (white, red, 2.0 * t - 1.0) };
    [lerp(a[0], b[0], s), lerp(a[1], b[1], s), lerp(a[2], b[2], s)]
}

/// Finite data extrema and the colour mapping range.
pub fn color_range(data: &[f32], mode: RangeMode) -> ((f64, f64), (f64, f64)) {
    let (lo, hi) = data
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v as f64), hi.max(v as f64)));
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (0.0, 0.0) };
    let map = match mode {
        RangeMode::Symmetric => {
            let a = lo.abs().max(hi.abs());
            (-a, a)
        }
        RangeMode::Extrema => (lo, hi),
    };
    ((lo, hi), map)
}

/// RGB8 pixels, top row first; NaN cells are mid grey.
pub fn colorize(w: usize, h: usize, data: &[f32], map: (f64, f64)) -> Vec<u8> {
    let mut px = Vec::with_capacity(w * h * 3);
    let span = map.1 - map.0;
    for row in (0..h).rev() {
        for col in 0..w {
            let v = data[row * w + col];
            let rgb = if v.is_finite() {
                let t = if span > 0.0 { (v as f64 - map.0) / span } else { 0.5 };
                diverging(t)
            } else {
                [128, 128, 128]
            };
            px.extend_from_slice(&rgb);
        }
    }
    px
}

/// Paths written by [`write_field`].
#[derive(Clone, Debug)]
pub struct FieldFiles {
    pub csv: PathBuf,
    pub pfm: Option<PathBuf>,
    pub png: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
}

/// Writes `<stem>.csv` and, for window grids, `<stem>.pfm`, `<stem>.png`
/// and `<stem>.range.txt`.
pub fn write_field(grid: &FieldGrid, dir: &Path, stem: &str, mode: RangeMode) -> Result<FieldFiles, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join(format!("{stem}.csv"));
    write_text(&csv, &field_csv(grid))?;
    let mut files = FieldFiles {
        csv,
        pfm: None,
        png: None,
        sidecar: None,
    };
    if let Some((w, h, data)) = field_image(grid) {
        let pfm = dir.join(format!("{stem}.pfm"));
        fs::write(&pfm, encode_pfm(w, h, &data)).map_err(io_err(&pfm))?;
        let ((lo, hi), map) = color_range(&data, mode);
        let png = dir.join(format!("{stem}.png"));
        image::save_buffer(&png, &colorize(w, h, &data, map), w as u32, h as u32, image::ExtendedColorType::Rgb8)
            .map_err(|e| HarnessError::Image(format!("{}: {e}", png.display())))?;
        let sidecar = dir.join(format!("{stem}.range.txt"));
        let mode_name = match mode {
            RangeMode::Symmetric => "symmetric",
            RangeMode::Extrema => "extrema",
        };
        write_text(
            &sidecar,
            &format!("colormap blue-white-red\nmode {mode_name}\nmap_min {}\nmap_max {}\ndata_min {lo}\ndata_max {hi}\n", map.0, map.1),
        )?;
        files.pfm = Some(pfm);
        files.png = Some(png);
        files.sidecar = Some(sidecar);
    }
    Ok(files)
}
