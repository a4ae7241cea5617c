//! Exact Voronoi cells computed locally, one site at a time.
//!
//! Around a site `x`, every other point `y` at local polar position `(β, d)`
//! contributes the bisector half-plane `k · e(β) <= tanh(d/2)` in Klein
//! coordinates centred at `x`. The cell is the intersection of those
//! half-planes with the unit disk. Points are added in order of distance and
//! the search ball grows until no unseen point can cut the cell.

use crate::error::{Error, Result};
use crate::geometry::{bearing, dist, Point};

/// The Voronoi cell of one site.
#[derive(Clone, Debug)]
pub struct LocalCell {
    pub site: Point,
    /// Neighbouring sites in global coordinates.
    pub neighbours: Vec<Point>,
    /// Largest distance from the site to a cell vertex.
    pub radius: f64,
    /// Radius of the final search ball.
    pub search_radius: f64,
}

#[derive(Clone, Copy, Debug)]
struct Vertex {
    k: [f64; 2],
    /// Constraint generating the edge that starts here; `None` for the
    /// bounding square.
    edge: Option<usize>,
}

/// Clips the polygon to `k · n <= c`, labelling the new edge `label`.
fn clip(poly: &[Vertex], n: [f64; 2], c: f64, label: usize) -> Vec<Vertex> {
    let side = |v: &Vertex| v.k[0] * n[0] + v.k[1] * n[1] - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (sc, sn) = (side(&cur), side(&next));
        let cross = || {
            let t = sc / (sc - sn);
            [
                cur.k[0] + t * (next.k[0] - cur.k[0]),
                cur.k[1] + t * (next.k[1] - cur.k[1]),
            ]
        };
        match (sc <= 0.0, sn <= 0.0) {
            (true, true) => out.push(cur),
            (true, false) => {
                out.push(cur);
                out.push(Vertex {
                    k: cross(),
                    edge: Some(label),
                });
            }
            (false, true) => out.push(Vertex {
                k: cross(),
                edge: cur.edge,
            }),
            (false, false) => {}
        }
    }
    out
}

fn norm(k: [f64; 2]) -> f64 {
    k[0].hypot(k[1])
}

/// Euclidean distance from the origin to the segment `a b`.
fn segment_gap(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (-(a[0] * d[0] + a[1] * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm([a[0] + t * d[0], a[1] + t * d[1]])
}

/// Voronoi cell of `site` among the points returned by `ball(c, s)` (all
/// points within `s` of `c`; the site itself may be included and is skipped).
/// The first search uses radius `s0`; it grows by ×1.5 up to `max_search`.
pub fn local_cell(
    site: &Point,
    s0: f64,
    max_search: f64,
    ball: &mut dyn FnMut(&Point, f64) -> Result<Vec<Point>>,
) -> Result<LocalCell> {
    let mut s = s0;
    loop {
        let mut pts: Vec<(f64, f64, Point)> = ball(site, s)?
            .into_iter()
            .filter_map(|y| {
                let d = dist(site, &y);
                (d > 0.0).then(|| (d, bearing(site, &y), y))
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut poly = vec![
            Vertex {
                k: [-1.0, -1.0],
                edge: None,
            },
            Vertex {
                k: [1.0, -1.0],
                edge: None,
            },
            Vertex {
                k: [1.0, 1.0],
                edge: None,
            },
            Vertex {
                k: [-1.0, 1.0],
                edge: None,
            },
        ];
        let mut reach = f64::INFINITY;
        for (i, &(d, beta, _)) in pts.iter().enumerate() {
            let c = (0.5 * d).tanh();
            if c >= reach {
                break;
            }
            poly = clip(&poly, [beta.cos(), beta.sin()], c, i);
            let m = poly.iter().map(|v| norm(v.k)).fold(0.0, f64::max);
            if m < 1.0 {
                reach = m;
            }
        }
        if reach < 1.0 {
            let radius = reach.atanh();
            if 2.0 * radius <= s {
                let mut ids: Vec<usize> = (0..poly.len())
                    .filter_map(|i| {
                        let a = poly[i];
                        let b = poly[(i + 1) % poly.len()];
                        let e = a.edge?;
                        (segment_gap(a.k, b.k) < 1.0 && norm(a.k).max(norm(b.k)) > 0.0).then_some(e)
                    })
                    .collect();
                ids.sort_unstable();
                ids.dedup();
                return Ok(LocalCell {
                    site: *site,
                    neighbours: ids.into_iter().map(|i| pts[i].2).collect(),
                    radius,
                    search_radius: s,
                });
            }
            s = s.max(2.0 * radius * (1.0 + 1e-9) + 1e-9);
            continue;
        }
        if s >= max_search {
            return Err(Error::Precision {
                rho: site.rho + s,
                max_rho: site.rho + max_search,
            });
        }
        s = (1.5 * s).min(max_search);
    }
}

/// Initial search radius holding about 40 expected points at intensity
/// `lambda`.
pub fn default_search_radius(lambda: f64) -> f64 {
    (1.0 + 40.0 / (std::f64::consts::TAU * lambda)).acosh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::build_graph_from_points;
    use crate::ppp::sample_ball;

    #[test]
    fn matches_triangulation_on_certified_cells() {
        let s = sample_ball(0.5, 7.0, 23).unwrap();
        let mut pts = vec![Point::ORIGIN];
        pts.extend_from_slice(&s.points);
        let g = build_graph_from_points(pts.clone(), true, 7.0).unwrap();
        let mut checked = 0;
        for u in 0..g.len() {
            if !g.cell_certified[u] || checked > 60 {
                continue;
            }
            let mut ball = |c: &Point, r: f64| -> Result<Vec<Point>> {
                Ok(pts.iter().filter(|y| dist(c, y) <= r).copied().collect())
            };
            let cell = local_cell(&pts[u], 2.0, 14.0, &mut ball).unwrap();
            let mut got: Vec<usize> = cell
                .neighbours
                .iter()
                .map(|y| pts.iter().position(|z| z == y).unwrap())
                .collect();
            got.sort_unstable();
            assert_eq!(got, g.adjacency[u], "site {u}");
            checked += 1;
        }
        assert!(checked > 20);
    }

    #[test]
    fn square_of_four() {
        let pts: Vec<Point> = (0..4)
            .map(|i| Point::new(i as f64 * std::f64::consts::FRAC_PI_2, 1.0))
            .collect();
        let mut ball = |c: &Point, r: f64| -> Result<Vec<Point>> {
            Ok(pts.iter().filter(|y| dist(c, y) <= r).copied().collect())
        };
        let cell = local_cell(&Point::ORIGIN, 1.5, 4.0, &mut ball).unwrap();
        assert_eq!(cell.neighbours.len(), 4);
        // Unbounded cells are refused.
        let err = local_cell(&pts[0], 1.5, 4.0, &mut ball).unwrap_err();
        assert!(matches!(err, Error::Precision { .. }));
    }
}
