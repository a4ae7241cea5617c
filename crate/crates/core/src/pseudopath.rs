//! Pseudo-edges, their certificates, chunks, and counts of good
//! pseudopaths from the origin.
//!
//! A pseudo-edge `uv` (with optional predecessor `prev`) has one of four
//! types, tested in order:
//!
//! * I: length in `(r - w1, r + w2)`, angle at `u` at least `θ`, and either a
//!   point-free disk through `u, v` of diameter below `r + w2`, or an empty
//!   half of `DD(u, v, r + w2)`;
//! * II: length at most `r - w1`;
//! * III: length in the window but angle below `θ`;
//! * IV: length at least `r + w2` and an empty Gabriel half.
//!
//! Point sets never include the endpoints themselves: points equal to `u` or
//! `v` are skipped.

use crate::error::{Error, Result};
use crate::exploration::visit_double_disk;
use crate::geometry::pencil::{EmptyRange, Pencil, PencilPos};
use crate::geometry::{
    angle, dist, double_disk, gabriel_disk, isometry_to_origin, DoubleDisk, HDisk, Point,
};
use crate::ppp::{PointSource, SliceSource, SplitSource};
use crate::stats::{derive_seed, rng_for, Estimate};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default cap on classified tuples in [`count_good_pseudopaths`].
pub const DEFAULT_TUPLE_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoEdgeParams {
    pub r: f64,
    pub w1: f64,
    pub w2: f64,
    pub theta: f64,
}

impl PseudoEdgeParams {
    pub fn new(r: f64, w1: f64, w2: f64, theta: f64) -> Result<PseudoEdgeParams> {
        let p = PseudoEdgeParams { r, w1, w2, theta };
        if [r, w1, w2, theta].iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(p)
        } else {
            Err(Error::Config(format!(
                "pseudo-edge parameters must be positive: {p:?}"
            )))
        }
    }

    /// `r = 2 ln(1/λ)`.
    pub fn for_lambda(lambda: f64, w1: f64, w2: f64, theta: f64) -> Result<PseudoEdgeParams> {
        PseudoEdgeParams::new(2.0 * (1.0 / lambda).ln(), w1, w2, theta)
    }

    fn in_window(&self, d: f64) -> bool {
        d > self.r - self.w1 && d < self.r + self.w2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeType {
    I,
    II,
    III,
    IV,
}

impl EdgeType {
    pub fn is_good(&self) -> bool {
        *self == EdgeType::I
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertKind {
    DoubleDisk,
    Gabriel,
    Empty,
}

/// The region whose points decide a pseudo-edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    DoubleDisk(DoubleDisk),
    Gabriel(HDisk),
    Empty,
}

impl Certificate {
    pub fn kind(&self) -> CertKind {
        match self {
            Certificate::DoubleDisk(_) => CertKind::DoubleDisk,
            Certificate::Gabriel(_) => CertKind::Gabriel,
            Certificate::Empty => CertKind::Empty,
        }
    }

    /// The certificate as a union of closed disks.
    pub fn disks(&self) -> Vec<HDisk> {
        match self {
            Certificate::DoubleDisk(dd) => vec![dd.minus, dd.plus],
            Certificate::Gabriel(g) => vec![*g],
            Certificate::Empty => Vec::new(),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.disks().iter().any(|b| b.contains(x))
    }

    pub fn meets_disk(&self, b: &HDisk) -> bool {
        self.disks().iter().any(|c| c.meets(b))
    }

    pub fn meets(&self, other: &Certificate) -> bool {
        other.disks().iter().any(|b| self.meets_disk(b))
    }

    /// Distance from `x` to the region; infinite for the empty certificate.
    pub fn distance_to(&self, x: &Point) -> f64 {
        self.disks()
            .iter()
            .map(|b| b.distance_to(x))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn certificate(u: &Point, v: &Point, params: &PseudoEdgeParams) -> Result<Certificate> {
    let d = dist(u, v);
    if d == 0.0 {
        return Err(Error::DegenerateInput(
            "certificate of coincident points".into(),
        ));
    }
    Ok(if params.in_window(d) {
        Certificate::DoubleDisk(double_disk(u, v, params.r + params.w2)?)
    } else if d >= params.r + params.w2 {
        Certificate::Gabriel(gabriel_disk(u, v)?)
    } else {
        Certificate::Empty
    })
}

/// Union of the certificates along a sequence.
pub fn path_certificate(seq: &[Point], params: &PseudoEdgeParams) -> Result<Vec<Certificate>> {
    seq.windows(2)
        .map(|e| certificate(&e[0], &e[1], params))
        .collect()
}

/// Does some disk of diameter below `r + w2` through `u, v`, or some half of
/// `DD(u, v, r + w2)`, avoid every point?
fn clause_one_witness(pencil: &Pencil, t: f64, source: &mut dyn PointSource) -> Result<bool> {
    let (u, v) = (pencil.z1, pencil.z2);
    let mut acc = EmptyRange::new();
    let alive = |acc: &EmptyRange| acc.has_empty_within(t) || acc.left > t || acc.right < -t;
    visit_double_disk(pencil, t, source, &mut |x| {
        if *x != u && *x != v {
            acc.push(pencil.position(x));
        }
        alive(&acc)
    })?;
    Ok(alive(&acc))
}

/// Is one half of the Gabriel disk of `u, v` free of points?
fn gabriel_half_empty(pencil: &Pencil, source: &mut dyn PointSource) -> Result<bool> {
    let (u, v) = (pencil.z1, pencil.z2);
    let g = gabriel_disk(&u, &v)?;
    let (mut minus, mut plus) = (false, false);
    source.visit_ball(&g.center, g.radius, false, &mut |x, _| {
        if *x != u && *x != v {
            match pencil.position(x) {
                PencilPos::Left(t) if t <= 0.0 => minus = true,
                PencilPos::Right(t) if t >= 0.0 => plus = true,
                _ => {}
            }
        }
        !(minus && plus)
    })?;
    Ok(!(minus && plus))
}

/// Type of the pseudo-edge `uv` with predecessor `prev`, or `None` when no
/// clause applies.
pub fn classify(
    prev: Option<&Point>,
    u: &Point,
    v: &Point,
    source: &mut dyn PointSource,
    params: &PseudoEdgeParams,
) -> Result<Option<EdgeType>> {
    let d = dist(u, v);
    if d == 0.0 {
        return Err(Error::DegenerateInput(
            "pseudo-edge with coincident ends".into(),
        ));
    }
    let angle_ok = match prev {
        Some(q) => angle(q, u, v)? >= params.theta,
        None => true,
    };
    if params.in_window(d) {
        if angle_ok {
            let pencil = Pencil::new(u, v)?;
            let t = pencil.param_for_diameter(params.r + params.w2);
            if clause_one_witness(&pencil, t, source)? {
                return Ok(Some(EdgeType::I));
            }
            return Ok(None);
        }
        return Ok(Some(EdgeType::III));
    }
    if d <= params.r - params.w1 {
        return Ok(Some(EdgeType::II));
    }
    let pencil = Pencil::new(u, v)?;
    Ok(gabriel_half_empty(&pencil, source)?.then_some(EdgeType::IV))
}

/// [`classify`] against an explicit point list.
pub fn classify_in(
    prev: Option<&Point>,
    u: &Point,
    v: &Point,
    z: &[Point],
    params: &PseudoEdgeParams,
) -> Result<Option<EdgeType>> {
    let black = vec![true; z.len()];
    classify(
        prev,
        u,
        v,
        &mut SliceSource {
            points: z,
            black: &black,
        },
        params,
    )
}

/// Types of every pseudo-edge along `seq`, with each edge's predecessor.
pub fn classify_sequence(
    seq: &[Point],
    z: &[Point],
    params: &PseudoEdgeParams,
) -> Result<Vec<Option<EdgeType>>> {
    (1..seq.len())
        .map(|i| {
            let prev = (i >= 2).then(|| &seq[i - 2]);
            classify_in(prev, &seq[i - 1], &seq[i], z, params)
        })
        .collect()
}

fn distinct(seq: &[Point]) -> bool {
    (0..seq.len()).all(|i| (i + 1..seq.len()).all(|j| seq[i] != seq[j]))
}

/// Is `seq` a pseudopath (distinct points, every edge typed)?
pub fn is_pseudopath(seq: &[Point], z: &[Point], params: &PseudoEdgeParams) -> Result<bool> {
    Ok(distinct(seq)
        && classify_sequence(seq, z, params)?
            .iter()
            .all(Option::is_some))
}

/// All edges good except a bad final one.
pub fn is_chunk(seq: &[Point], z: &[Point], params: &PseudoEdgeParams) -> Result<bool> {
    if seq.len() < 2 {
        return Err(Error::Config("a chunk needs at least two points".into()));
    }
    if !distinct(seq) {
        return Ok(false);
    }
    let types = classify_sequence(seq, z, params)?;
    let (last, body) = types.split_last().expect("nonempty");
    Ok(body.iter().all(|t| *t == Some(EdgeType::I))
        && matches!(last, Some(EdgeType::II | EdgeType::III | EdgeType::IV)))
}

fn certs_meet(a: &[Certificate], b: &[Certificate]) -> bool {
    a.iter().any(|x| b.iter().any(|y| x.meets(y)))
}

fn distance_to_certs(x: &Point, certs: &[Certificate]) -> f64 {
    certs
        .iter()
        .map(|c| c.distance_to(x))
        .fold(f64::INFINITY, f64::min)
}

/// Checks the linking rules of a sequence of chunks. Distance to a union of
/// certificates is the minimum over its member disks.
pub fn is_linked_sequence(
    chunks: &[Vec<Point>],
    z: &[Point],
    params: &PseudoEdgeParams,
) -> Result<bool> {
    for c in chunks {
        if !is_chunk(c, z, params)? {
            return Ok(false);
        }
    }
    let certs: Vec<Vec<Certificate>> = chunks
        .iter()
        .map(|c| path_certificate(c, params))
        .collect::<Result<_>>()?;
    let slack = params.r / 1000.0;
    for i in 0..chunks.len() {
        for j in i + 2..chunks.len() {
            let shared = chunks[i].iter().any(|x| chunks[j].contains(x));
            if shared || certs_meet(&certs[i], &certs[j]) {
                return Ok(false);
            }
        }
        if i == 0 {
            continue;
        }
        let (prev, cur) = (&chunks[i - 1], &chunks[i]);
        let prev_certs = &certs[i - 1];
        if cur[1..].iter().any(|x| prev.contains(x))
            || certs_meet(&certs[i][1..], prev_certs)
            || cur[1..]
                .iter()
                .any(|x| distance_to_certs(x, prev_certs) < slack)
        {
            return Ok(false);
        }
        let start = cur[0];
        let linked = start == *prev.last().expect("chunk")
            || (!prev.contains(&start) && certs_meet(&certs[i][..1], prev_certs))
            || (!prev.contains(&start) && distance_to_certs(&start, prev_certs) < slack);
        if !linked {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Numbers of black, good pseudopaths from `o` of each length `1..=k`.
/// The origin is not a point of the source and does not block disks.
pub fn count_good_pseudopaths(
    source: &mut dyn PointSource,
    k: usize,
    params: &PseudoEdgeParams,
    budget: u64,
) -> Result<Vec<u64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut counts = vec![0u64; k];
    let mut used = 0u64;
    let mut path = vec![Point::ORIGIN];
    extend(&mut path, k, source, params, budget, &mut used, &mut counts)?;
    Ok(counts)
}

fn extend(
    path: &mut Vec<Point>,
    k: usize,
    source: &mut dyn PointSource,
    params: &PseudoEdgeParams,
    budget: u64,
    used: &mut u64,
    counts: &mut [u64],
) -> Result<()> {
    let u = *path.last().expect("path");
    let reach = params.r + params.w2;
    // Only black points in the length window can extend a good path.
    let cands: Vec<Point> = source
        .collect_ball(&u, reach, true)?
        .into_iter()
        .map(|(x, _)| x)
        .filter(|x| params.in_window(dist(&u, x)) && !path.contains(x))
        .collect();
    for v in cands {
        *used += 1;
        if *used > budget {
            return Err(Error::BudgetExceeded(format!("more than {budget} tuples")));
        }
        let prev = (path.len() >= 2).then(|| path[path.len() - 2]);
        if classify(prev.as_ref(), &u, &v, source, params)? != Some(EdgeType::I) {
            continue;
        }
        counts[path.len() - 1] += 1;
        if path.len() < k {
            path.push(v);
            extend(path, k, source, params, budget, used, counts)?;
            path.pop();
        }
    }
    Ok(())
}

/// Monte Carlo means of `G_1..G_k` over independent samples.
pub fn estimate_good_counts(
    lambda: f64,
    p: f64,
    params: &PseudoEdgeParams,
    k: usize,
    seed: u64,
    trials: usize,
) -> Result<Vec<Estimate>> {
    let max_rho = k as f64 * (params.r + params.w2) + 1.0;
    let rows: Vec<Vec<u64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut src =
                SplitSource::new(lambda, p, derive_seed(seed, &[0x96, i])).with_max_rho(max_rho);
            count_good_pseudopaths(&mut src, k, params, DEFAULT_TUPLE_BUDGET)
        })
        .collect::<Result<_>>()?;
    Ok((0..k)
        .map(|j| {
            let xs: Vec<f64> = rows.iter().map(|r| r[j] as f64).collect();
            Estimate::from_samples(&xs)
        })
        .collect())
}

/// Bound on `E G_k` for `p <= (1 - ε)(π/3)λ` at small λ.
pub fn good_count_bound(eps: f64, w2: f64, k: usize) -> f64 {
    (1.0 - 0.5 * eps + 1e4 * w2.exp() * (-(0.5 * w2).exp()).exp()).powi(k as i32)
}

/// Random sequence from `o` whose edges have length in the window and turn
/// by at least `θ`, built in the frame of its first vertex.
fn random_good_walk(
    rng: &mut impl Rng,
    params: &PseudoEdgeParams,
    edges: usize,
) -> Result<Vec<Point>> {
    let mut pts = vec![Point::ORIGIN];
    for i in 0..edges {
        let len = params.r - params.w1 + rng.random::<f64>() * (params.w1 + params.w2);
        let len = len.clamp(params.r - params.w1 + 1e-9, params.r + params.w2 - 1e-9);
        let u = pts[i];
        let p = if i == 0 {
            Point::new(rng.random::<f64>() * 2.0 * PI, len)
        } else {
            // In the frame of `u` with the previous vertex on the +x axis.
            let beta = params.theta + rng.random::<f64>() * (2.0 * PI - 2.0 * params.theta);
            let back = isometry_to_origin(&u, &pts[i - 1])?.inverse();
            back.apply(&Point::new(beta, len))
        };
        pts.push(p);
    }
    Ok(pts)
}

/// Result of probing certificate overlaps at the junction of a good path
/// and a new edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertBallAudit {
    pub theta2: f64,
    /// Largest distance from the junction to a sampled point lying in both
    /// the path's certificate and the new edge's, over cases whose closing
    /// angle is at least `theta2`.
    pub h_emp: f64,
    pub cases: usize,
    pub qualifying: usize,
}

/// Samples good walks `u_0..u_{k-1}` (built backwards from the junction
/// `u_{k-1} = o`) and a new edge `o u_k` with length in the window.
pub fn audit_cert_ball(
    params: &PseudoEdgeParams,
    theta2: f64,
    edges: usize,
    cases: usize,
    samples: usize,
    seed: u64,
) -> Result<CertBallAudit> {
    let mut rng = rng_for(seed, &[0xcb]);
    let mut h_emp: f64 = 0.0;
    let mut qualifying = 0;
    for _ in 0..cases {
        let back = random_good_walk(&mut rng, params, edges)?;
        let len = params.r - params.w1 + rng.random::<f64>() * (params.w1 + params.w2);
        let len = len.clamp(params.r - params.w1 + 1e-9, params.r + params.w2 - 1e-9);
        let uk = Point::new(rng.random::<f64>() * 2.0 * PI, len);
        if edges >= 1 && angle(&back[1], &Point::ORIGIN, &uk)? < theta2 {
            continue;
        }
        qualifying += 1;
        let path_certs = path_certificate(&back, params)?;
        let new_cert = certificate(&Point::ORIGIN, &uk, params)?;
        let reach = params.r + params.w2;
        for _ in 0..samples {
            // Radii uniform (not area-uniform) so the region near the
            // junction is sampled too.
            let x = Point::new(rng.random::<f64>() * 2.0 * PI, rng.random::<f64>() * reach);
            if new_cert.contains(&x) && path_certs.iter().any(|c| c.contains(&x)) {
                h_emp = h_emp.max(x.rho);
            }
        }
    }
    Ok(CertBallAudit {
        theta2,
        h_emp,
        cases,
        qualifying,
    })
}

/// Result of counting certificate hits of random balls along pre-chunks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectAudit {
    pub cases: usize,
    pub violations: usize,
    /// Largest observed `hits - 4s/r`.
    pub worst_excess: f64,
}

/// For random pre-chunks and balls, checks that at most `4s/r + 10` edge
/// certificates meet a ball of radius `s`. Walks are built from their
/// middle vertex outward to keep coordinates moderate.
pub fn audit_bounded_intersections(
    params: &PseudoEdgeParams,
    max_edges: usize,
    cases: usize,
    seed: u64,
) -> Result<IntersectAudit> {
    let mut rng = rng_for(seed, &[0xb1]);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let k = rng.random_range(1..=max_edges.max(1));
        let head = k / 2;
        // Good part u_0..u_{k-1}: two walks glued at o, the second reversed.
        let a = random_good_walk(&mut rng, params, k - 1 - head.min(k - 1))?;
        let mut b = random_good_walk(&mut rng, params, head.min(k - 1))?;
        if a.len() >= 2 && b.len() >= 2 && angle(&a[1], &Point::ORIGIN, &b[1])? <= params.theta {
            continue;
        }
        b.reverse();
        b.pop();
        let mut seq = b;
        seq.extend_from_slice(&a);
        // Bad final edge: short, long, or sharp.
        let last = *seq.last().expect("walk");
        let before = if seq.len() >= 2 {
            Some(seq[seq.len() - 2])
        } else {
            None
        };
        let (beta, len) = match rng.random_range(0..3) {
            0 => (
                rng.random::<f64>() * 2.0 * PI,
                rng.random::<f64>() * (params.r - params.w1).max(0.1),
            ),
            1 => (
                rng.random::<f64>() * 2.0 * PI,
                params.r + params.w2 + 3.0 * rng.random::<f64>(),
            ),
            _ => (
                (2.0 * rng.random::<f64>() - 1.0) * params.theta,
                params.r - params.w1 + rng.random::<f64>() * (params.w1 + params.w2),
            ),
        };
        let frame = match before {
            Some(q) => isometry_to_origin(&last, &q)?,
            None => isometry_to_origin(&last, &Point::new(0.0, 1.0))?,
        };
        let end = frame.inverse().apply(&Point::new(beta, len.max(1e-3)));
        if end == last {
            continue;
        }
        seq.push(end);
        let certs = path_certificate(&seq, params)?;
        let c = seq[rng.random_range(0..seq.len())];
        let offset = Point::new(
            rng.random::<f64>() * 2.0 * PI,
            rng.random::<f64>() * params.r,
        );
        let c = if c.is_origin() {
            offset
        } else {
            isometry_to_origin(&c, &Point::ORIGIN)?
                .inverse()
                .apply(&offset)
        };
        let s = rng.random::<f64>() * 3.0 * params.r;
        let ball = HDisk::new(c, s);
        let hits = certs.iter().filter(|ct| ct.meets_disk(&ball)).count() as f64;
        worst = worst.max(hits - 4.0 * s / params.r);
        if hits > 4.0 * s / params.r + 10.0 {
            violations += 1;
        }
    }
    Ok(IntersectAudit {
        cases,
        violations,
        worst_excess: worst,
    })
}
