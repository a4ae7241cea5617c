//! Raster and vector pictures of a tessellation.
//!
//! The raster colours each pixel by its nearest site in the hyperbolic
//! metric. Nearest sites are found by greedy descent on the Delaunay graph:
//! the geodesic from a non-nearest site to the pixel leaves its cell through
//! an edge whose other site is closer, so descent always ends at the nearest
//! site.

use anyhow::{bail, Result};
use hpv_core::delaunay::DelaunayGraph;
use hpv_core::geometry::{dist, Point};
use image::{ImageBuffer, Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Disk,
    Halfplane,
}

impl std::str::FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Model, String> {
        match s {
            "disk" => Ok(Model::Disk),
            "halfplane" | "half-plane" => Ok(Model::Halfplane),
            _ => Err(format!("unknown model {s:?} (disk or halfplane)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    /// Image width; the half-plane picture is half as tall.
    pub pixels: u32,
    pub model: Model,
    pub highlight_origin: bool,
    /// Pixels beyond this hyperbolic radius are shaded as unsampled.
    pub window_radius: f64,
}

pub const MAX_PIXELS: u32 = 4096;
/// Half-width of the half-plane viewport.
const HALFPLANE_SPAN: f64 = 4.0;
const OUTSIDE: u32 = u32::MAX;

/// Nearest-site labels, row-major; `u32::MAX` outside the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u32>,
    /// Pixel centres in polar form (`None` outside the model).
    pub centres: Vec<Option<Point>>,
}

fn dims(opts: &RenderOptions) -> (u32, u32) {
    match opts.model {
        Model::Disk => (opts.pixels, opts.pixels),
        Model::Halfplane => (opts.pixels, (opts.pixels / 2).max(1)),
    }
}

/// The point shown at pixel `(i, j)`, if any.
pub fn pixel_point(opts: &RenderOptions, i: u32, j: u32) -> Option<Point> {
    let (w, h) = dims(opts);
    let (fx, fy) = ((i as f64 + 0.5) / w as f64, (j as f64 + 0.5) / h as f64);
    let (x, y) = match opts.model {
        Model::Disk => (2.0 * fx - 1.0, 1.0 - 2.0 * fy),
        Model::Halfplane => {
            // Cayley transform z = (w - i)/(w + i) from the upper half-plane.
            let (a, b) = (
                (2.0 * fx - 1.0) * HALFPLANE_SPAN,
                (1.0 - fy) * HALFPLANE_SPAN,
            );
            let den = a * a + (b + 1.0) * (b + 1.0);
            ((a * a + b * b - 1.0) / den, -2.0 * a / den)
        }
    };
    Point::from_euclidean(x, y).ok()
}

fn nearest_brute(sites: &[Point], x: &Point) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, s) in sites.iter().enumerate() {
        let d = dist(s, x);
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

fn descend(g: &DelaunayGraph, mut cur: usize, x: &Point) -> usize {
    let mut d = dist(&g.vertices[cur], x);
    loop {
        let mut moved = false;
        for &n in &g.adjacency[cur] {
            let dn = dist(&g.vertices[n], x);
            if dn < d {
                (cur, d, moved) = (n, dn, true);
            }
        }
        if !moved {
            return cur;
        }
    }
}

/// Labels every pixel with the index of its nearest vertex of `g`.
pub fn label_raster(g: &DelaunayGraph, opts: &RenderOptions) -> Result<Raster> {
    if g.is_empty() {
        bail!("nothing to render");
    }
    if opts.pixels == 0 || opts.pixels > MAX_PIXELS {
        bail!("pixels must lie in 1..={MAX_PIXELS}, got {}", opts.pixels);
    }
    let (w, h) = dims(opts);
    let rows: Vec<(Vec<u32>, Vec<Option<Point>>)> = (0..h)
        .into_par_iter()
        .map(|j| {
            let mut labels = Vec::with_capacity(w as usize);
            let mut centres = Vec::with_capacity(w as usize);
            let mut last: Option<usize> = None;
            for i in 0..w {
                let p = pixel_point(opts, i, j);
                let label = match &p {
                    None => OUTSIDE,
                    Some(x) => {
                        let start = last.unwrap_or_else(|| nearest_brute(&g.vertices, x));
                        let k = descend(g, start, x);
                        last = Some(k);
                        k as u32
                    }
                };
                labels.push(label);
                centres.push(p);
            }
            (labels, centres)
        })
        .collect();
    let (labels, centres): (Vec<Vec<u32>>, Vec<Vec<Option<Point>>>) = rows.into_iter().unzip();
    Ok(Raster {
        width: w,
        height: h,
        labels: labels.concat(),
        centres: centres.concat(),
    })
}

const BLACK_CELL: [u8; 3] = [52, 52, 58];
const WHITE_CELL: [u8; 3] = [250, 250, 247];
const ORIGIN_CELL: [u8; 3] = [206, 62, 48];
const BORDER: [u8; 3] = [140, 140, 140];
const BACKGROUND: [u8; 3] = [255, 255, 255];

fn shade(c: [u8; 3]) -> [u8; 3] {
    c.map(|v| ((v as u16 + 2 * 214) / 3) as u8)
}

/// Colours a label raster: black and white cells, grey borders, the origin
/// cell in red when requested, and a pale wash beyond the sampled window.
pub fn colour(r: &Raster, black: &[bool], opts: &RenderOptions) -> RgbImage {
    let (w, h) = (r.width as usize, r.height as usize);
    ImageBuffer::from_fn(r.width, r.height, |i, j| {
        let (i, j) = (i as usize, j as usize);
        let k = j * w + i;
        let l = r.labels[k];
        if l == OUTSIDE {
            return Rgb(BACKGROUND);
        }
        let border = (i + 1 < w && r.labels[k + 1] != l && r.labels[k + 1] != OUTSIDE)
            || (j + 1 < h && r.labels[k + w] != l && r.labels[k + w] != OUTSIDE);
        let mut c = if border {
            BORDER
        } else if opts.highlight_origin && l == 0 {
            ORIGIN_CELL
        } else if black[l as usize] {
            BLACK_CELL
        } else {
            WHITE_CELL
        };
        if r.centres[k].is_some_and(|x| x.rho > opts.window_radius) {
            c = shade(c);
        }
        Rgb(c)
    })
}

/// PNG bytes of the raster picture.
pub fn render_png(g: &DelaunayGraph, black: &[bool], opts: &RenderOptions) -> Result<Vec<u8>> {
    let img = colour(&label_raster(g, opts)?, black, opts);
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// SVG of the disk model: unit circle, certified Delaunay edges as
/// geodesic arcs, and the sites.
pub fn render_svg(g: &DelaunayGraph, black: &[bool], opts: &RenderOptions) -> String {
    let size = opts.pixels as f64;
    let half = 0.5 * size;
    let map = |p: &Point| {
        let [x, y] = p.to_euclidean();
        (half + half * x, half - half * y)
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        s,
        r#"<circle cx="{half}" cy="{half}" r="{half}" fill="white" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<g fill="none" stroke="gray" stroke-width="0.5">"#);
    for (u, v, certified) in g.edges() {
        if !certified {
            continue;
        }
        let (a, b) = (g.vertices[u].to_euclidean(), g.vertices[v].to_euclidean());
        let (pa, pb) = (map(&g.vertices[u]), map(&g.vertices[v]));
        // Circle orthogonal to the unit circle through a and b.
        let det = a[0] * b[1] - a[1] * b[0];
        if det.abs() < 1e-12 {
            let _ = writeln!(
                s,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                pa.0, pa.1, pb.0, pb.1
            );
            continue;
        }
        let (ka, kb) = (
            0.5 * (a[0] * a[0] + a[1] * a[1] + 1.0),
            0.5 * (b[0] * b[0] + b[1] * b[1] + 1.0),
        );
        let c = [(ka * b[1] - kb * a[1]) / det, (a[0] * kb - b[0] * ka) / det];
        let rad = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt() * half;
        let sweep = u8::from(det < 0.0);
        let _ = writeln!(
            s,
            r#"<path d="M {:.3} {:.3} A {rad:.3} {rad:.3} 0 0 {sweep} {:.3} {:.3}"/>"#,
            pa.0, pa.1, pb.0, pb.1
        );
    }
    let _ = writeln!(s, "</g>");
    for (k, p) in g.vertices.iter().enumerate() {
        let (x, y) = map(p);
        let r = (1.5 * (1.0 - p.euclidean_norm().powi(2))).max(0.3);
        let fill = if k == 0 && opts.highlight_origin {
            "rgb(206,62,48)"
        } else if black[k] {
            "black"
        } else {
            "white"
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r:.3}" fill="{fill}" stroke="black" stroke-width="0.3"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}
