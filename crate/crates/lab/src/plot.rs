//! SVG rendering of Dirichlet domains in the Klein model.

use std::fmt::Write as _;

use dirichlet_core::error::{GeomError, Result};

const SIZE: f64 = 480.0;
const RADIUS_PX: f64 = 220.0;
const BOUNDARY_SEGMENTS: usize = 360;

/// Plane `x_axis = value` of the Klein ball, for sections of `H^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub axis: usize,
    pub value: f64,
}

impl std::str::FromStr for Plane {
    type Err = GeomError;

    /// Parses `x<k>=<value>` with `k` in `1..=3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || GeomError::InvalidInput(format!("plane must look like x3=0.25, got {s:?}"));
        let (lhs, rhs) = s.split_once('=').ok_or_else(bad)?;
        let axis: usize = lhs.trim().strip_prefix('x').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let value: f64 = rhs.trim().parse().map_err(|_| bad())?;
        if !(1..=3).contains(&axis) || !(value.abs() < 1.0) {
            return Err(bad());
        }
        Ok(Plane { axis, value })
    }
}

/// One bounding half-space `{p : p . normal >= 0}` with its label.
#[derive(Debug, Clone)]
pub struct Side {
    pub label: String,
    pub normal: Vec<f64>,
}

/// Half-plane `a u + b v + c >= 0` in section coordinates.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    a: f64,
    b: f64,
    c: f64,
}

impl HalfPlane {
    fn value(&self, p: (f64, f64)) -> f64 {
        self.a * p.0 + self.b * p.1 + self.c
    }
}

/// Section coordinates `(u, v)` are the two Klein coordinates other than the
/// plane's axis.
fn free_axes(dim: usize, plane: Option<Plane>) -> Result<[usize; 2]> {
    match (dim, plane) {
        (2, _) => Ok([1, 2]),
        (3, Some(p)) => {
            let f: Vec<usize> = (1..=3).filter(|&k| k != p.axis).collect();
            Ok([f[0], f[1]])
        }
        (3, None) => Err(GeomError::InvalidInput("a plane is required in dimension 3".into())),
        (d, _) => Err(GeomError::InvalidInput(format!("cannot draw dimension {d}"))),
    }
}

fn section(normal: &[f64], axes: [usize; 2], plane: Option<Plane>) -> HalfPlane {
    // p = (1, k): p . n = -n0 + sum k_j n_j
    let mut c = -normal[0];
    if let Some(p) = plane {
        c += normal[p.axis] * p.value;
    }
    HalfPlane { a: normal[axes[0]], b: normal[axes[1]], c }
}

fn clip(poly: &[(f64, f64)], h: &HalfPlane) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (fp, fq) = (h.value(p), h.value(q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out
}

/// Endpoints of the chord `a u + b v + c = 0` of the disk of radius `r`.
fn chord(h: &HalfPlane, r: f64) -> Option<((f64, f64), (f64, f64))> {
    let n2 = h.a * h.a + h.b * h.b;
    if n2 == 0.0 {
        return None;
    }
    let foot = (-h.c * h.a / n2, -h.c * h.b / n2);
    let d2 = foot.0 * foot.0 + foot.1 * foot.1;
    if d2 >= r * r {
        return None;
    }
    let s = ((r * r - d2) / n2).sqrt();
    Some(((foot.0 - s * h.b, foot.1 + s * h.a), (foot.0 + s * h.b, foot.1 - s * h.a)))
}

fn px(p: (f64, f64)) -> (f64, f64) {
    (SIZE / 2.0 + RADIUS_PX * p.0, SIZE / 2.0 - RADIUS_PX * p.1)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the section of the domain `{p : p . n_i >= 0}` through `plane`.
pub fn domain_svg(dim: usize, base: &[f64], sides: &[Side], plane: Option<Plane>) -> Result<String> {
    let axes = free_axes(dim, plane)?;
    let r = plane.map_or(1.0, |p| (1.0 - p.value * p.value).sqrt());
    let mut region: Vec<(f64, f64)> = (0..BOUNDARY_SEGMENTS)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / BOUNDARY_SEGMENTS as f64;
            (r * t.cos(), r * t.sin())
        })
        .collect();
    let halves: Vec<HalfPlane> = sides.iter().map(|s| section(&s.normal, axes, plane)).collect();
    for h in &halves {
        region = clip(&region, h);
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let c = SIZE / 2.0;
    let _ = writeln!(
        svg,
        r##"<circle cx="{c}" cy="{c}" r="{:.3}" fill="none" stroke="#000000" stroke-width="1.5"/>"##,
        RADIUS_PX * r
    );
    if region.len() >= 3 {
        let mut d = String::new();
        for (i, p) in region.iter().enumerate() {
            let (x, y) = px(*p);
            let _ = write!(d, "{}{x:.3},{y:.3} ", if i == 0 { "M" } else { "L" });
        }
        d.push('Z');
        let _ = writeln!(svg, r##"<path d="{d}" fill="#cfe3f7" stroke="#1f5f9e" stroke-width="1.5"/>"##);
    }
    for (s, h) in sides.iter().zip(&halves) {
        let Some((p, q)) = chord(h, r) else { continue };
        let (x1, y1) = px(p);
        let (x2, y2) = px(q);
        let _ = writeln!(
            svg,
            r##"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="#888888" stroke-width="0.8"/>"##
        );
        let (mx, my) = ((x1 + x2) / 2.0, (y1 + y2) / 2.0);
        let _ = writeln!(svg, r#"<text x="{mx:.3}" y="{my:.3}" font-size="11" font-family="sans-serif">{}</text>"#, escape(&s.label));
    }
    if base.len() == dim + 1 && base[0] > 0.0 {
        let k = (base[axes[0]] / base[0], base[axes[1]] / base[0]);
        let (x, y) = px(k);
        let _ = writeln!(svg, r##"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="#b22222"/>"##);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
