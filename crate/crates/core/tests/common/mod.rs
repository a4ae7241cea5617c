//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here calls the pencil machinery of the library.
#![allow(dead_code)]

use hpv_core::geometry::{
    angle, dist, double_disk, double_disk_offset, gabriel_side, isometry_to_origin, midpoint,
    GabrielSide, Point,
};
use hpv_core::pseudopath::{EdgeType, PseudoEdgeParams};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::Rng;
use std::f64::consts::PI;

/// Points uniform (w.r.t. hyperbolic area) in `B(o, radius)`.
pub fn uniform_ball<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let rho = 2.0 * (u.sqrt() * (0.5 * radius).sinh()).asinh();
            Point::new(rng.random::<f64>() * 2.0 * PI, rho)
        })
        .collect()
}

/// Scans disks through `u, z` with centres on the perpendicular bisector.
/// A disk with centre offset `s` has `cosh R = cosh(d/2) cosh s`; the scan
/// covers all disks of diameter below `diam`.
pub fn grid_empty_disk(u: &Point, z: &Point, diam: f64, pts: &[Point], steps: usize) -> bool {
    let d = dist(u, z);
    if d >= diam {
        return false;
    }
    let smax = double_disk_offset(d, diam);
    let m = midpoint(u, z).unwrap();
    let back = isometry_to_origin(&m, z).unwrap().inverse();
    (1..steps).any(|i| {
        let s = -smax + 2.0 * smax * i as f64 / steps as f64;
        let c = back.apply(&Point::new(
            if s >= 0.0 { 0.5 * PI } else { 1.5 * PI },
            s.abs(),
        ));
        let r = ((0.5 * d).cosh() * s.cosh()).acosh();
        pts.iter()
            .filter(|x| *x != u && *x != z)
            .all(|x| dist(&c, x) > r)
    })
}

// ---------------------------------------------------------------------------
// Exact Euclidean Delaunay oracle.

/// Exact integer image of a set of doubles under a common power-of-two scale.
fn exact_coords(xs: &[[f64; 2]]) -> Vec<[BigInt; 2]> {
    let parts = |x: f64| -> (BigInt, i32) {
        if x == 0.0 {
            return (BigInt::zero(), 0);
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let m = BigInt::from(m);
        (if x < 0.0 { -m } else { m }, e)
    };
    let split: Vec<[(BigInt, i32); 2]> = xs.iter().map(|p| [parts(p[0]), parts(p[1])]).collect();
    let emin = split
        .iter()
        .flat_map(|p| p.iter().filter(|(m, _)| !m.is_zero()).map(|(_, e)| *e))
        .min()
        .unwrap_or(0);
    split
        .into_iter()
        .map(|p| {
            p.map(|(m, e)| {
                if m.is_zero() {
                    m
                } else {
                    m << ((e - emin) as usize)
                }
            })
        })
        .collect()
}

fn orient(a: &[BigInt; 2], b: &[BigInt; 2], c: &[BigInt; 2]) -> BigInt {
    (&b[0] - &a[0]) * (&c[1] - &a[1]) - (&b[1] - &a[1]) * (&c[0] - &a[0])
}

/// Positive iff `d` is strictly inside the circle through `a, b, c` when
/// `a b c` is counter-clockwise.
fn incircle(a: &[BigInt; 2], b: &[BigInt; 2], c: &[BigInt; 2], d: &[BigInt; 2]) -> BigInt {
    let row = |p: &[BigInt; 2]| {
        let x = &p[0] - &d[0];
        let y = &p[1] - &d[1];
        let n = &x * &x + &y * &y;
        (x, y, n)
    };
    let (ax, ay, an) = row(a);
    let (bx, by, bn) = row(b);
    let (cx, cy, cn) = row(c);
    &ax * (&by * &cn - &bn * &cy) - &ay * (&bx * &cn - &bn * &cx) + &an * (&bx * &cy - &by * &cx)
}

/// Edge set of the Euclidean Delaunay graph by brute force: `uv` is an edge
/// iff the diametral disk or some circumdisk through `u, v, w` has no point
/// strictly inside. Coordinates are the Poincaré embeddings, taken exactly.
pub fn delaunay_oracle(points: &[Point]) -> Vec<Vec<usize>> {
    let flush = |x: f64| if x.abs() < 1e-40 { 0.0 } else { x };
    let raw: Vec<[f64; 2]> = points
        .iter()
        .map(|p| {
            let [a, b] = p.to_euclidean();
            [flush(a), flush(b)]
        })
        .collect();
    let q = exact_coords(&raw);
    let n = q.len();
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            let others = || (0..n).filter(move |&x| x != u && x != v);
            let diametral = others().all(|x| {
                let dot = (&q[x][0] - &q[u][0]) * (&q[x][0] - &q[v][0])
                    + (&q[x][1] - &q[u][1]) * (&q[x][1] - &q[v][1]);
                !dot.is_negative()
            });
            let edge = diametral
                || others().any(|w| {
                    let o = orient(&q[u], &q[v], &q[w]);
                    if o.is_zero() {
                        return false;
                    }
                    others().filter(|&x| x != w).all(|x| {
                        let s = incircle(&q[u], &q[v], &q[w], &q[x]);
                        let inside = if o.is_positive() {
                            s.is_positive()
                        } else {
                            s.is_negative()
                        };
                        !inside
                    })
                });
            if edge {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

// ---------------------------------------------------------------------------
// Clause-literal pseudo-edge classifier.

/// Evaluates the four clauses in order, straight from their wording: a
/// bisector grid for small witness disks, point-in-half tests for the double
/// disk and the Gabriel disk.
pub fn classify_literal(
    prev: Option<&Point>,
    u: &Point,
    v: &Point,
    z: &[Point],
    p: &PseudoEdgeParams,
    steps: usize,
) -> Option<EdgeType> {
    let d = dist(u, v);
    let others = || z.iter().filter(|x| *x != u && *x != v);
    let big = p.r + p.w2;
    if d > p.r - p.w1 && d < big {
        let angle_ok = prev.is_none_or(|q| angle(q, u, v).unwrap() >= p.theta);
        if !angle_ok {
            return Some(EdgeType::III);
        }
        let dd = double_disk(u, v, big).unwrap();
        let witness = others().all(|x| !dd.contains_minus_half(x))
            || others().all(|x| !dd.contains_plus_half(x))
            || grid_empty_disk(u, v, big, z, steps);
        return witness.then_some(EdgeType::I);
    }
    if d <= p.r - p.w1 {
        return Some(EdgeType::II);
    }
    let sides: Vec<GabrielSide> = others().map(|x| gabriel_side(u, v, x).unwrap()).collect();
    let half_empty = !sides.contains(&GabrielSide::Minus) || !sides.contains(&GabrielSide::Plus);
    half_empty.then_some(EdgeType::IV)
}

/// A random pseudo-edge `u v` with optional predecessor, and 30 other points.
pub struct EdgeFixture {
    pub prev: Option<Point>,
    pub u: Point,
    pub v: Point,
    pub z: Vec<Point>,
}

pub fn fixture_params() -> PseudoEdgeParams {
    PseudoEdgeParams::new(3.0, 1.0, 1.0, 0.5).unwrap()
}

/// Edge lengths span every clause; the point density varies between fixtures
/// so that witnesses are sometimes blocked and sometimes not.
pub fn edge_fixture<R: Rng>(rng: &mut R, p: &PseudoEdgeParams) -> EdgeFixture {
    let radius = rng.random_range(3.5..6.5);
    let z = uniform_ball(rng, 30, radius);
    let u = uniform_ball(rng, 1, 1.5)[0];
    let len = rng.random_range(0.3..p.r + p.w2 + 3.0);
    let frame = if u.is_origin() {
        hpv_core::geometry::Isometry::identity()
    } else {
        isometry_to_origin(&u, &Point::ORIGIN).unwrap().inverse()
    };
    let v = frame.apply(&Point::new(rng.random::<f64>() * 2.0 * PI, len));
    let prev = (rng.random::<f64>() < 0.8).then(|| z[rng.random_range(0..z.len())]);
    EdgeFixture { prev, u, v, z }
}
pub mod geom;
