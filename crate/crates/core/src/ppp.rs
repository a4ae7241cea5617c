//! Homogeneous Poisson processes on the hyperbolic plane.
//!
//! [`sample_ball`] draws a finite window in one shot. [`LazyProcess`] realises
//! an unbounded process cell by cell, so arbitrarily placed ball queries see a
//! single consistent configuration without materialising the whole plane.

use crate::error::{Error, Result};
use crate::geometry::{
    ball_area, dist, max_rho_for_floor, wrap_tau, Point, DEFAULT_PRECISION_FLOOR,
};
use crate::stats::{derive_seed, rng_for};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

/// Default cap on the expected number of points in one window.
pub const DEFAULT_COUNT_CAP: f64 = 1e7;

const STREAM_BALL: u64 = 0xba11;
const STREAM_ANNULUS: u64 = 0xa22;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub points: Vec<Point>,
    pub color_uniforms: Vec<f64>,
    pub lambda: f64,
    /// Colour probability used by [`Sample::is_black`].
    pub p: f64,
    pub window_radius: f64,
    pub seed: u64,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_p(mut self, p: f64) -> Sample {
        self.p = p;
        self
    }

    pub fn is_black(&self, i: usize) -> bool {
        self.color_uniforms[i] <= self.p
    }

    /// Appends the points of an independent annulus `window_radius < ρ <= outer`
    /// and grows the window.
    pub fn extend_to(&mut self, outer: f64, cap: f64) -> Result<()> {
        if outer <= self.window_radius {
            return Ok(());
        }
        let mean = self.lambda * (ball_area(outer) - ball_area(self.window_radius));
        check_cap(mean + self.len() as f64, cap)?;
        let mut rng = rng_for(
            self.seed,
            &[
                STREAM_ANNULUS,
                self.window_radius.to_bits(),
                outer.to_bits(),
            ],
        );
        let n = poisson(&mut rng, mean);
        let (sa, sb) = (
            (0.5 * self.window_radius).sinh().powi(2),
            (0.5 * outer).sinh().powi(2),
        );
        for _ in 0..n {
            let alpha = TAU * rng.random::<f64>();
            let rho = 2.0 * (sa + rng.random::<f64>() * (sb - sa)).sqrt().asinh();
            let u = rng.random::<f64>();
            self.points.push(Point::new(alpha, rho.min(outer)));
            self.color_uniforms.push(u);
        }
        self.window_radius = outer;
        Ok(())
    }

    /// Columnar text: a `#` header line with the parameters, a column line,
    /// then one `alpha rho u` row per point. Floats use round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(64 * (self.len() + 2));
        let _ = writeln!(
            s,
            "# lambda={:?} p={:?} R={:?} seed={}",
            self.lambda, self.p, self.window_radius, self.seed
        );
        s.push_str("alpha rho color_uniform\n");
        for (x, u) in self.points.iter().zip(&self.color_uniforms) {
            let _ = writeln!(s, "{:?} {:?} {:?}", x.alpha, x.rho, u);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Sample> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Parse("missing '#' header".into()))?;
        let mut lambda = None;
        let mut p = None;
        let mut radius = None;
        let mut seed = None;
        for kv in header.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field {kv:?}")))?;
            match k {
                "lambda" => lambda = Some(parse_f64(v)?),
                "p" => p = Some(parse_f64(v)?),
                "R" => radius = Some(parse_f64(v)?),
                "seed" => {
                    seed = Some(
                        v.parse::<u64>()
                            .map_err(|e| Error::Parse(format!("seed: {e}")))?,
                    )
                }
                _ => return Err(Error::Parse(format!("unknown header field {k:?}"))),
            }
        }
        let missing = |n: &str| Error::Parse(format!("header lacks {n}"));
        let mut sample = Sample {
            points: Vec::new(),
            color_uniforms: Vec::new(),
            lambda: lambda.ok_or_else(|| missing("lambda"))?,
            p: p.ok_or_else(|| missing("p"))?,
            window_radius: radius.ok_or_else(|| missing("R"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        };
        match lines.next() {
            Some(l) if l.split_whitespace().eq(["alpha", "rho", "color_uniform"]) => {}
            other => return Err(Error::Parse(format!("bad column line {other:?}"))),
        }
        for (i, l) in lines.enumerate() {
            let cols: Vec<&str> = l.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("row {i}: expected 3 columns")));
            }
            let (a, r, u) = (
                parse_f64(cols[0])?,
                parse_f64(cols[1])?,
                parse_f64(cols[2])?,
            );
            if !(0.0..=sample.window_radius).contains(&r) || !(0.0..=1.0).contains(&u) {
                return Err(Error::Parse(format!("row {i}: value out of range")));
            }
            sample.points.push(Point::new(a, r));
            sample.color_uniforms.push(u);
        }
        Ok(sample)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

fn check_cap(mean: f64, cap: f64) -> Result<()> {
    if mean > cap {
        return Err(Error::Config(format!(
            "expected point count {mean:.3e} exceeds cap {cap:.3e}"
        )));
    }
    Ok(())
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0)
}

/// Parameters shared by the simulation front ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub lambda: f64,
    pub p: f64,
    /// Window radius; `None` lets each experiment pick its default.
    pub window_radius: Option<f64>,
    pub seed: u64,
    pub trials: usize,
    /// Boundary guard length.
    pub margin: f64,
    /// Use `r = 2 ln(1/λ)` instead of `r_override`.
    pub r_convention: bool,
    pub r_override: Option<f64>,
}

impl SimConfig {
    pub fn new(lambda: f64) -> SimConfig {
        SimConfig {
            lambda,
            p: 0.5,
            window_radius: None,
            seed: 0,
            trials: 1,
            margin: 2.0,
            r_convention: true,
            r_override: None,
        }
    }

    pub fn r(&self) -> f64 {
        match (self.r_convention, self.r_override) {
            (false, Some(r)) => r,
            _ => 2.0 * (1.0 / self.lambda).ln(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!(
                "p must lie in [0,1], got {}",
                self.p
            )));
        }
        if let Some(r) = self.window_radius {
            if !(r > 0.0) {
                return Err(Error::Config(format!("window radius must be > 0, got {r}")));
            }
        }
        if !self.r_convention && self.r_override.is_none() {
            return Err(Error::Config("r convention disabled but no r given".into()));
        }
        Ok(())
    }
}

/// Points of intensity `lambda` in `B(o, radius)`, all initially black
/// (`p = 1`); recolour with [`Sample::with_p`] or [`color_points`].
pub fn sample_ball(lambda: f64, radius: f64, seed: u64) -> Result<Sample> {
    sample_ball_capped(lambda, radius, seed, DEFAULT_COUNT_CAP)
}

pub fn sample_ball_capped(lambda: f64, radius: f64, seed: u64, cap: f64) -> Result<Sample> {
    if !(lambda > 0.0) || !(radius > 0.0) {
        return Err(Error::Config(format!(
            "need lambda > 0 and R > 0, got lambda={lambda} R={radius}"
        )));
    }
    let mean = lambda * ball_area(radius);
    check_cap(mean, cap)?;
    let mut rng = rng_for(seed, &[STREAM_BALL]);
    let n = poisson(&mut rng, mean) as usize;
    let mut points = Vec::with_capacity(n);
    let mut color_uniforms = Vec::with_capacity(n);
    // cosh ρ - 1 = 2 sinh²(ρ/2), so the inversion of (cosh ρ - 1)/(cosh R - 1)
    // is ρ = 2 asinh(√U sinh(R/2)).
    let sr = (0.5 * radius).sinh();
    for _ in 0..n {
        let alpha = TAU * rng.random::<f64>();
        let rho = 2.0 * (rng.random::<f64>().sqrt() * sr).asinh();
        let u = rng.random::<f64>();
        points.push(Point::new(alpha, rho.min(radius)));
        color_uniforms.push(u);
    }
    Ok(Sample {
        points,
        color_uniforms,
        lambda,
        p: 1.0,
        window_radius: radius,
        seed,
    })
}

/// Splits indices into black (`u <= p`) and white.
pub fn color_points(s: &Sample, p: f64) -> (Vec<usize>, Vec<usize>) {
    (0..s.len()).partition(|&i| s.color_uniforms[i] <= p)
}

/// A point with its colour uniform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Marked {
    pub point: Point,
    pub mark: f64,
}

/// Region removed from a [`LazyProcess`]: the ball `B(o, inner)` together with
/// the points whose angle lies within `half_angle` of zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exclusion {
    pub inner: f64,
    pub half_angle: f64,
}

impl Exclusion {
    pub fn excludes(&self, x: &Point) -> bool {
        if x.rho <= self.inner {
            return true;
        }
        let a = if x.alpha > PI { x.alpha - TAU } else { x.alpha };
        x.rho > 0.0 && a.abs() <= self.half_angle
    }
}

/// Lazily realised Poisson process on the whole plane.
///
/// The plane is cut into annuli of width `ring_width` and each annulus into
/// equal sectors holding about `cell_mean` expected points. Each cell draws
/// its points from its own generator keyed by `(seed, ring, sector)`, so the
/// configuration does not depend on query order.
#[derive(Clone, Debug)]
pub struct LazyProcess {
    intensity: f64,
    seed: u64,
    ring_width: f64,
    cell_mean: f64,
    max_rho: f64,
    exclusion: Option<Exclusion>,
    cells: HashMap<(u32, u64), (u32, u32)>,
    points: Vec<Marked>,
    /// `[cosh ρ, sinh ρ, cos α, sin α]` per point, for fast ball tests.
    trig: Vec<[f64; 4]>,
    rings: Vec<Ring>,
}

/// Per-annulus constants.
#[derive(Clone, Copy, Debug)]
struct Ring {
    sectors: u64,
    cell_mean: f64,
    inner: Probe,
    outer: Probe,
}

/// Hyperbolic functions of one radius, for angular-reach bounds.
#[derive(Clone, Copy, Debug)]
struct Probe {
    rho: f64,
    sinh: f64,
    sinh_half: f64,
    cosh_half: f64,
}

impl Probe {
    fn new(rho: f64) -> Probe {
        Probe {
            rho,
            sinh: rho.sinh(),
            sinh_half: (0.5 * rho).sinh(),
            cosh_half: (0.5 * rho).cosh(),
        }
    }
}

impl LazyProcess {
    pub fn new(intensity: f64, seed: u64) -> LazyProcess {
        // One ring per unit of ρ is fine at low intensity; denser processes
        // want thinner rings so the angular cells stay compact near o.
        let ring_width = (4.0 / intensity.max(1e-300)).sqrt().clamp(0.05, 1.0);
        LazyProcess {
            intensity,
            seed,
            ring_width,
            cell_mean: 6.0,
            max_rho: max_rho_for_floor(DEFAULT_PRECISION_FLOOR),
            exclusion: None,
            cells: HashMap::new(),
            points: Vec::new(),
            trig: Vec::new(),
            rings: Vec::new(),
        }
    }

    pub fn with_exclusion(mut self, ex: Exclusion) -> LazyProcess {
        self.exclusion = Some(ex);
        self.cells.clear();
        self.points.clear();
        self.trig.clear();
        self
    }

    pub fn with_max_rho(mut self, max_rho: f64) -> LazyProcess {
        self.max_rho = max_rho;
        self
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn max_rho(&self) -> f64 {
        self.max_rho
    }

    /// Number of points realised so far.
    pub fn realised(&self) -> usize {
        self.points.len()
    }

    fn ring(&mut self, k: u32) -> Ring {
        while self.rings.len() <= k as usize {
            let i = self.rings.len();
            let a = i as f64 * self.ring_width;
            let b = a + self.ring_width;
            let mass = self.intensity * (ball_area(b) - ball_area(a));
            let sectors = (mass / self.cell_mean).ceil().clamp(1.0, 1e15) as u64;
            let inner = match self.rings.last() {
                Some(r) => r.outer,
                None => Probe::new(a),
            };
            self.rings.push(Ring {
                sectors,
                cell_mean: mass / sectors as f64,
                inner,
                outer: Probe::new(b),
            });
        }
        self.rings[k as usize]
    }

    fn cell(&mut self, k: u32, j: u64) -> (u32, u32) {
        if let Some(&r) = self.cells.get(&(k, j)) {
            return r;
        }
        let ring = self.ring(k);
        let width = TAU / ring.sectors as f64;
        let mean = ring.cell_mean;
        let mut rng = rng_for(self.seed, &[k as u64, j]);
        let n = poisson(&mut rng, mean);
        let (sa, sb) = (ring.inner.sinh_half.powi(2), ring.outer.sinh_half.powi(2));
        let start = self.points.len() as u32;
        for _ in 0..n {
            let alpha = wrap_tau((j as f64 + rng.random::<f64>()) * width);
            let rho = 2.0 * (sa + rng.random::<f64>() * (sb - sa)).sqrt().asinh();
            let mark = rng.random::<f64>();
            let point = Point::new(alpha, rho);
            if self.exclusion.is_some_and(|e| e.excludes(&point)) {
                continue;
            }
            self.points.push(Marked { point, mark });
            self.trig.push(trig_of(&point));
        }
        let r = (start, self.points.len() as u32);
        self.cells.insert((k, j), r);
        r
    }

    /// Calls `f` on every point within distance `s` of `c` until it returns
    /// `false`. Returns `Ok(true)` when the visit ran to completion.
    pub fn visit_ball(
        &mut self,
        c: &Point,
        s: f64,
        f: &mut dyn FnMut(&Marked) -> bool,
    ) -> Result<bool> {
        let lo = (c.rho - s).max(0.0);
        let hi = c.rho + s;
        if hi > self.max_rho {
            return Err(Error::Precision {
                rho: hi,
                max_rho: self.max_rho,
            });
        }
        let ct = trig_of(c);
        // Slightly generous so that boundary points are not lost to rounding
        // in the cosh form.
        let cs = s.cosh() * (1.0 + 1e-12);
        let k0 = (lo / self.ring_width).floor() as u32;
        let k1 = (hi / self.ring_width).floor() as u32;
        // Outer rings first: most of a disk's mass sits near its far rim,
        // so early-exit visits stop sooner.
        let query = Reach::new(c, s);
        for k in (k0..=k1).rev() {
            let ring = self.ring(k);
            let n_k = ring.sectors;
            let inner = if ring.inner.rho < lo {
                Probe::new(lo)
            } else {
                ring.inner
            };
            let outer = if ring.outer.rho > hi {
                Probe::new(hi)
            } else {
                ring.outer
            };
            let half = query.angular(&inner, &outer);
            let width = TAU / n_k as f64;
            let (j_lo, count) = if half >= PI {
                (0i64, n_k)
            } else {
                let j_lo = ((c.alpha - half) / width).floor() as i64;
                let j_hi = ((c.alpha + half) / width).floor() as i64;
                let count = (j_hi - j_lo + 1) as u64;
                (j_lo, count.min(n_k))
            };
            for step in 0..count {
                let j = (j_lo + step as i64).rem_euclid(n_k as i64) as u64;
                let (i0, i1) = self.cell(k, j);
                for i in i0..i1 {
                    let m = self.points[i as usize];
                    let [ch, sh, ca, sa] = self.trig[i as usize];
                    let cd = ct[0] * ch - ct[1] * sh * (ct[2] * ca + ct[3] * sa);
                    if cd <= cs && !f(&m) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Every point of `B(c, s)`.
    pub fn ball(&mut self, c: &Point, s: f64) -> Result<Vec<Marked>> {
        let mut out = Vec::new();
        self.visit_ball(c, s, &mut |m| {
            out.push(*m);
            true
        })?;
        Ok(out)
    }
}

fn trig_of(x: &Point) -> [f64; 4] {
    [x.rho.cosh(), x.rho.sinh(), x.alpha.cos(), x.alpha.sin()]
}

/// Angular extent of a ball `B(c, s)` as seen from `o`.
struct Reach {
    c_rho: f64,
    /// `sinh^2(s/2)`.
    ss: f64,
    sinh_c: f64,
    sinh_half_c: f64,
    cosh_half_c: f64,
    /// Radius at which the angular extent peaks, if `o` is outside the ball.
    star: Option<Probe>,
}

impl Reach {
    fn new(c: &Point, s: f64) -> Reach {
        Reach {
            c_rho: c.rho,
            ss: (0.5 * s).sinh().powi(2),
            sinh_c: c.rho.sinh(),
            sinh_half_c: (0.5 * c.rho).sinh(),
            cosh_half_c: (0.5 * c.rho).cosh(),
            star: (c.rho > s).then(|| Probe::new((c.rho.cosh() / s.cosh()).acosh())),
        }
    }

    /// `sin^2` of half the angular deviation at radius `p.rho`.
    fn ratio(&self, p: &Probe) -> f64 {
        if p.rho <= 0.0 {
            return f64::INFINITY;
        }
        let d = p.sinh_half * self.cosh_half_c - p.cosh_half * self.sinh_half_c;
        (self.ss - d * d) / (p.sinh * self.sinh_c)
    }

    /// Largest angular deviation from `c.alpha` of a ball point with radius
    /// between the two probes, padded; `>= π` means the whole circle. The
    /// deviation is unimodal in the radius, so endpoints and the peak suffice.
    fn angular(&self, a: &Probe, b: &Probe) -> f64 {
        if self.c_rho <= 0.0 {
            return PI;
        }
        if a.rho > b.rho {
            return 0.0;
        }
        let mut best = self.ratio(a).max(self.ratio(b));
        if let Some(star) = &self.star {
            if star.rho > a.rho && star.rho < b.rho {
                best = best.max(self.ratio(star));
            }
        }
        if best >= 1.0 {
            return PI;
        }
        if best <= 0.0 {
            // Only tangential contact: keep a sliver for rounding.
            return 1e-9;
        }
        2.0 * best.sqrt().asin() * (1.0 + 1e-9) + 1e-12
    }
}

/// Colour-aware ball queries, implemented by the finite and lazy processes.
pub trait PointSource {
    /// Calls `f(x, is_black)` for points within `s` of `c` (black ones only if
    /// `black_only`) until it returns `false`. Returns whether the visit ran
    /// to completion.
    fn visit_ball(
        &mut self,
        c: &Point,
        s: f64,
        black_only: bool,
        f: &mut dyn FnMut(&Point, bool) -> bool,
    ) -> Result<bool>;

    fn collect_ball(&mut self, c: &Point, s: f64, black_only: bool) -> Result<Vec<(Point, bool)>> {
        let mut out = Vec::new();
        self.visit_ball(c, s, black_only, &mut |x, b| {
            out.push((*x, b));
            true
        })?;
        Ok(out)
    }
}

/// One marked lazy process, black iff mark `<= p`.
#[derive(Clone, Debug)]
pub struct MarkedSource {
    pub process: LazyProcess,
    pub p: f64,
}

impl PointSource for MarkedSource {
    fn visit_ball(
        &mut self,
        c: &Point,
        s: f64,
        black_only: bool,
        f: &mut dyn FnMut(&Point, bool) -> bool,
    ) -> Result<bool> {
        let p = self.p;
        self.process.visit_ball(c, s, &mut |m| {
            let b = m.mark <= p;
            if black_only && !b {
                true
            } else {
                f(&m.point, b)
            }
        })
    }
}

/// Independent black and white lazy processes.
#[derive(Clone, Debug)]
pub struct SplitSource {
    pub black: LazyProcess,
    pub white: LazyProcess,
}

impl SplitSource {
    /// Black intensity `p λ`, white intensity `(1 - p) λ`, seeds derived from
    /// `seed`.
    pub fn new(lambda: f64, p: f64, seed: u64) -> SplitSource {
        SplitSource {
            black: LazyProcess::new(p * lambda, derive_seed(seed, &[1])),
            white: LazyProcess::new((1.0 - p) * lambda, derive_seed(seed, &[2])),
        }
    }

    /// Raises the radius limit of both processes. Polar coordinates stay
    /// accurate well beyond the Euclidean precision floor.
    pub fn with_max_rho(self, max_rho: f64) -> SplitSource {
        SplitSource {
            black: self.black.with_max_rho(max_rho),
            white: self.white.with_max_rho(max_rho),
        }
    }

    pub fn with_exclusion(self, ex: Exclusion) -> SplitSource {
        SplitSource {
            black: self.black.with_exclusion(ex),
            white: self.white.with_exclusion(ex),
        }
    }
}

impl PointSource for SplitSource {
    fn visit_ball(
        &mut self,
        c: &Point,
        s: f64,
        black_only: bool,
        f: &mut dyn FnMut(&Point, bool) -> bool,
    ) -> Result<bool> {
        if self.black.intensity() > 0.0
            && !self.black.visit_ball(c, s, &mut |m| f(&m.point, true))?
        {
            return Ok(false);
        }
        if black_only || self.white.intensity() <= 0.0 {
            return Ok(true);
        }
        self.white.visit_ball(c, s, &mut |m| f(&m.point, false))
    }
}

/// Brute-force source over an explicit point list.
#[derive(Clone, Debug)]
pub struct SliceSource<'a> {
    pub points: &'a [Point],
    pub black: &'a [bool],
}

impl PointSource for SliceSource<'_> {
    fn visit_ball(
        &mut self,
        c: &Point,
        s: f64,
        black_only: bool,
        f: &mut dyn FnMut(&Point, bool) -> bool,
    ) -> Result<bool> {
        for (x, &b) in self.points.iter().zip(self.black) {
            if (b || !black_only) && dist(c, x) <= s && !f(x, b) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
