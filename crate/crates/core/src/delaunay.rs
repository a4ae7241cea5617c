//! Delaunay graph of a sample (plus optionally the origin) and the typical
//! degree.
//!
//! Adjacency is computed from the Euclidean Delaunay triangulation of the
//! Poincaré coordinates: circles inside the unit disk are exactly hyperbolic
//! circles, so the empty-circle structure is the same in both geometries.
//! Each edge is then certified in hyperbolic terms: some empty disk through
//! its endpoints must fit inside the sampled window.

use crate::error::{Error, Result};
use crate::geometry::pencil::{EmptyRange, Pencil};
use crate::geometry::{Point, DEFAULT_PRECISION_FLOOR};
use crate::ppp::{sample_ball, Sample, DEFAULT_COUNT_CAP};
use crate::stats::{derive_seed, Estimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug)]
struct Site {
    pos: Point2<f64>,
    id: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

#[derive(Clone, Debug)]
pub struct DelaunayGraph {
    /// Vertex 0 is the origin when `has_origin`.
    pub vertices: Vec<Point>,
    pub has_origin: bool,
    pub window_radius: f64,
    /// Sorted neighbour lists.
    pub adjacency: Vec<Vec<usize>>,
    /// `certified[u][k]` belongs to the edge `u -> adjacency[u][k]`.
    pub certified: Vec<Vec<bool>>,
    /// The whole cell is known: the vertex is interior to the triangulation
    /// and every incident circumdisk lies in the window.
    pub cell_certified: Vec<bool>,
}

impl DelaunayGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn is_certified(&self, u: usize, v: usize) -> Option<bool> {
        let k = self.adjacency[u].binary_search(&v).ok()?;
        Some(self.certified[u][k])
    }

    /// Undirected edges `(u, v, certified)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        self.adjacency.iter().enumerate().flat_map(move |(u, nb)| {
            nb.iter()
                .zip(&self.certified[u])
                .filter(move |(&v, _)| u < v)
                .map(move |(&v, &c)| (u, v, c))
        })
    }

    /// One line per vertex: `id n1:c1 n2:c2 ...` with `c` in {0, 1}.
    pub fn to_adjacency_text(&self) -> String {
        let mut s = String::new();
        for (u, nb) in self.adjacency.iter().enumerate() {
            let _ = write!(s, "{u}");
            for (v, c) in nb.iter().zip(&self.certified[u]) {
                let _ = write!(s, " {v}:{}", u8::from(*c));
            }
            s.push('\n');
        }
        s
    }
}

/// Delaunay graph of `s` (with `o` as vertex 0 if `include_origin`).
pub fn build_graph(s: &Sample, include_origin: bool) -> Result<DelaunayGraph> {
    let mut pts = Vec::with_capacity(s.len() + 1);
    if include_origin {
        pts.push(Point::ORIGIN);
    }
    pts.extend_from_slice(&s.points);
    build_graph_from_points(pts, include_origin, s.window_radius)
}

pub fn build_graph_from_points(
    mut vertices: Vec<Point>,
    has_origin: bool,
    window_radius: f64,
) -> Result<DelaunayGraph> {
    if vertices.is_empty() {
        return Err(Error::DegenerateInput("no vertices".into()));
    }
    for x in &vertices {
        if x.boundary_gap() < DEFAULT_PRECISION_FLOOR {
            return Err(Error::Precision {
                rho: x.rho,
                max_rho: crate::geometry::max_rho_for_floor(DEFAULT_PRECISION_FLOOR),
            });
        }
    }
    let tri = loop {
        let sites: Vec<Site> = vertices
            .iter()
            .enumerate()
            .map(|(id, x)| {
                let [a, b] = x.to_euclidean();
                Site {
                    pos: Point2::new(flush(a), flush(b)),
                    id,
                }
            })
            .collect();
        let tri: DelaunayTriangulation<Site> = DelaunayTriangulation::bulk_load_stable(sites)
            .map_err(|e| Error::Geometry(format!("triangulation failed: {e:?}")))?;
        if tri.num_vertices() == vertices.len() {
            break tri;
        }
        jitter_duplicates(&mut vertices, &tri);
    };

    let n = vertices.len();
    let mut adjacency = vec![Vec::new(); n];
    for e in tri.undirected_edges() {
        let d = e.as_directed();
        let (u, v) = (d.from().data().id, d.to().data().id);
        let mut range = EmptyRange::new();
        let ok = match Pencil::new(&vertices[u], &vertices[v]) {
            Ok(pencil) => {
                for w in [d.opposite_vertex(), d.rev().opposite_vertex()]
                    .into_iter()
                    .flatten()
                {
                    range.push(pencil.position(&vertices[w.data().id]));
                }
                witness_fits(&pencil, &range, window_radius)
            }
            Err(_) => false,
        };
        adjacency[u].push((v, ok));
        adjacency[v].push((u, ok));
    }

    let radius_e = (0.5 * window_radius).tanh();
    let mut cell_certified = vec![false; n];
    for vh in tri.vertices() {
        let id = vh.data().id;
        let mut ok = true;
        let mut any = false;
        for e in vh.out_edges() {
            any = true;
            if e.is_outer_edge() {
                ok = false;
                break;
            }
            let f = e.face();
            let pos = f
                .as_inner()
                .map(|f| f.positions())
                .expect("inner edge has an inner face");
            if !circumcircle_inside(pos, radius_e) {
                ok = false;
                break;
            }
        }
        cell_certified[id] = ok && any;
    }

    let mut adj = Vec::with_capacity(n);
    let mut cert = Vec::with_capacity(n);
    for mut list in adjacency {
        list.sort_by_key(|&(v, _)| v);
        cert.push(list.iter().map(|&(_, c)| c).collect());
        adj.push(list.into_iter().map(|(v, _)| v).collect());
    }
    Ok(DelaunayGraph {
        vertices,
        has_origin,
        window_radius,
        adjacency: adj,
        certified: cert,
        cell_certified,
    })
}

fn flush(x: f64) -> f64 {
    if x.abs() < 1e-40 {
        0.0
    } else {
        x
    }
}

fn jitter_duplicates(vertices: &mut [Point], tri: &DelaunayTriangulation<Site>) {
    let mut kept = vec![false; vertices.len()];
    for v in tri.vertices() {
        kept[v.data().id] = true;
    }
    for (i, x) in vertices.iter_mut().enumerate() {
        if !kept[i] {
            *x = Point::new(x.alpha + 1e-12, x.rho + 1e-12);
        }
    }
}

/// The Euclidean circumcircle of a triangle lies inside the centred disk of
/// radius `r`.
fn circumcircle_inside(p: [Point2<f64>; 3], r: f64) -> bool {
    let (ax, ay) = (p[0].x, p[0].y);
    let (bx, by) = (p[1].x - ax, p[1].y - ay);
    let (cx, cy) = (p[2].x - ax, p[2].y - ay);
    let d = 2.0 * (bx * cy - by * cx);
    if d == 0.0 {
        return false;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    let rad = (ux * ux + uy * uy).sqrt();
    let (ox, oy) = (ax + ux, ay + uy);
    (ox * ox + oy * oy).sqrt() + rad < r
}

/// Interval of pencil parameters whose disk lies in `B(o, window)`.
pub fn window_interval(pencil: &Pencil, window: f64) -> Option<(f64, f64)> {
    let q = pencil.to_frame(&Point::ORIGIN);
    let a = (0.25 * pencil.chord_length()).tanh();
    // The window is the Euclidean disk on the ray through q with these two
    // signed diameter endpoints.
    let e1 = (0.5 * (q.rho + window)).tanh();
    let e2 = (0.5 * (q.rho - window)).tanh();
    let rw = 0.5 * (e1 - e2);
    let cy = 0.5 * (e1 + e2) * q.alpha.sin();
    let k = a * a - e1 * e2;
    let qa = 4.0 * (cy * cy - rw * rw);
    let qb = 4.0 * k * cy;
    let qc = k * k - 4.0 * rw * rw * a * a;
    let disc = qb * qb - 4.0 * qa * qc;
    if !(qa < 0.0) || disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let r1 = (-qb + sq) / (2.0 * qa);
    let r2 = (-qb - sq) / (2.0 * qa);
    let (mut lo, mut hi) = (r1.min(r2), r1.max(r2));
    if cy > 0.0 {
        lo = lo.max(-k / (2.0 * cy));
    } else if cy < 0.0 {
        hi = hi.min(-k / (2.0 * cy));
    } else if k < 0.0 {
        return None;
    }
    (lo < hi).then_some((lo, hi))
}

fn witness_fits(pencil: &Pencil, range: &EmptyRange, window: f64) -> bool {
    match window_interval(pencil, window) {
        Some((lo, hi)) => range.right.max(lo) < range.left.min(hi),
        None => false,
    }
}

/// Hyperbolic adjacency of `points[u]` and `points[v]` within `points`: some
/// disk with both on its boundary contains no other point.
pub fn is_adjacent(u: usize, v: usize, points: &[Point]) -> bool {
    let Ok(pencil) = Pencil::new(&points[u], &points[v]) else {
        return false;
    };
    let mut acc = EmptyRange::new();
    for (i, x) in points.iter().enumerate() {
        if i != u && i != v {
            acc.push(pencil.position(x));
        }
    }
    acc.has_empty_within(pencil.hyperbolic_limit())
}

/// Degree of the origin, provided its whole cell is certified.
pub fn typical_degree(g: &DelaunayGraph) -> Result<usize> {
    if !g.has_origin {
        return Err(Error::DegenerateInput("graph has no origin vertex".into()));
    }
    if g.len() == 2 {
        // A single sample point: the one edge is always a true edge.
        return Ok(1);
    }
    if !g.cell_certified[0] {
        return Err(Error::UncertifiedBoundary(format!(
            "origin cell not certified in window of radius {}",
            g.window_radius
        )));
    }
    Ok(g.degree(0))
}

/// Default initial window for typical-degree trials.
pub fn default_degree_window(lambda: f64) -> f64 {
    let r = 2.0 * (1.0 / lambda).ln();
    (r + 5.0).max(5.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeTrial {
    pub degree: usize,
    /// Window radius at which the origin cell was certified.
    pub window_radius: f64,
    /// Number of ×1.5 enlargements needed.
    pub enlargements: u32,
}

/// One typical-degree trial: sample `B(o, r0)`, enlarge by ×1.5 (up to the
/// precision floor) until the origin cell is certified.
pub fn degree_trial(lambda: f64, r0: f64, seed: u64) -> Result<DegreeTrial> {
    let max_r = crate::geometry::max_rho_for_floor(DEFAULT_PRECISION_FLOOR);
    let mut s = sample_ball(lambda, r0, seed)?;
    let mut enlargements = 0;
    loop {
        if s.is_empty() {
            // No neighbours at all: enlarge like any other uncertified case.
        } else {
            let g = build_graph(&s, true)?;
            match typical_degree(&g) {
                Ok(degree) => {
                    return Ok(DegreeTrial {
                        degree,
                        window_radius: s.window_radius,
                        enlargements,
                    })
                }
                Err(Error::UncertifiedBoundary(_)) => {}
                Err(e) => return Err(e),
            }
        }
        if s.window_radius >= max_r {
            return Err(Error::UncertifiedBoundary(format!(
                "origin cell uncertified at the precision limit R = {max_r:.2}"
            )));
        }
        s.extend_to((1.5 * s.window_radius).min(max_r), DEFAULT_COUNT_CAP)?;
        enlargements += 1;
    }
}

/// Mean typical degree `6 + 3/(πλ)` of the Poisson-Voronoi tessellation.
pub fn exact_mean_degree(lambda: f64) -> f64 {
    6.0 + 3.0 / (std::f64::consts::PI * lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeEstimate {
    pub lambda: f64,
    pub initial_window: f64,
    pub estimate: Estimate,
    /// Trials whose origin cell stayed uncertified at the precision limit.
    pub rejections: usize,
    pub mean_enlargements: f64,
}

/// Mean typical degree over `trials` certified trials. Rejected trials are
/// replaced by further seeds, so the result does not depend on scheduling.
pub fn estimate_degree(
    lambda: f64,
    r0: Option<f64>,
    seed: u64,
    trials: usize,
) -> Result<DegreeEstimate> {
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be > 0, got {lambda}")));
    }
    let r0 = r0.unwrap_or_else(|| default_degree_window(lambda));
    let mut done: Vec<DegreeTrial> = Vec::with_capacity(trials);
    let mut rejections = 0;
    let mut next = 0u64;
    while done.len() < trials {
        let want = (trials - done.len()) as u64;
        let batch: Vec<Result<DegreeTrial>> = (next..next + want)
            .into_par_iter()
            .map(|i| degree_trial(lambda, r0, derive_seed(seed, &[0xde, i])))
            .collect();
        next += want;
        for t in batch {
            match t {
                Ok(t) => done.push(t),
                Err(Error::UncertifiedBoundary(_)) => rejections += 1,
                Err(e) => return Err(e),
            }
        }
        if rejections > 10 * trials.max(1) {
            return Err(Error::Inconclusive(format!(
                "{rejections} uncertified trials"
            )));
        }
    }
    let degrees: Vec<f64> = done.iter().map(|t| t.degree as f64).collect();
    let enl: f64 = done.iter().map(|t| t.enlargements as f64).sum();
    Ok(DegreeEstimate {
        lambda,
        initial_window: r0,
        estimate: Estimate::from_samples(&degrees),
        rejections,
        mean_enlargements: enl / done.len().max(1) as f64,
    })
}
