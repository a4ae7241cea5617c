//! The one-parameter family of disks whose boundary passes through two points.
//!
//! In the frame sending the midpoint of `z1 z2` to the origin and `z2` to the
//! positive x-axis, the pair sits at `(±a, 0)` with `a = tanh(d/4)` and every
//! disk of the family is a Euclidean circle centered at `(0, t)`. A point left
//! of `z1 -> z2` lies in the disk with parameter `t` iff `t >= τ(x)`; a point
//! on the right lies in it iff `t <= τ(x)`. Emptiness questions over the whole
//! family therefore reduce to a min over left points and a max over right
//! points.

use super::{dist, double_disk_offset, isometry_to_origin, midpoint, HDisk, Isometry, Point};
use crate::error::Result;
use std::f64::consts::PI;

/// Where a point sits relative to the family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PencilPos {
    /// Left of `z1 -> z2` (or on the geodesic); inside the disk `t` iff `t >= τ`.
    Left(f64),
    /// Right of `z1 -> z2`; inside the disk `t` iff `t <= τ`.
    Right(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct Pencil {
    pub z1: Point,
    pub z2: Point,
    frame: Isometry,
    a: f64,
    d: f64,
}

impl Pencil {
    pub fn new(z1: &Point, z2: &Point) -> Result<Pencil> {
        let m = midpoint(z1, z2)?;
        let frame = isometry_to_origin(&m, z2)?;
        let d = dist(z1, z2);
        Ok(Pencil {
            z1: *z1,
            z2: *z2,
            frame,
            a: (0.25 * d).tanh(),
            d,
        })
    }

    pub fn chord_length(&self) -> f64 {
        self.d
    }

    /// Image of `x` in the midpoint frame.
    pub fn to_frame(&self, x: &Point) -> Point {
        self.frame.apply(x)
    }

    /// Parameter of `x`. Must not be called with `z1` or `z2` themselves.
    /// Points on the open segment block every disk and report `Left(-inf)`;
    /// points on the geodesic outside the segment block none.
    pub fn position(&self, x: &Point) -> PencilPos {
        let y = self.frame.apply(x);
        let r = y.euclidean_norm();
        let ey = r * y.alpha.sin();
        if ey == 0.0 {
            return if r < self.a {
                PencilPos::Left(f64::NEG_INFINITY)
            } else {
                PencilPos::Left(f64::INFINITY)
            };
        }
        // |x|^2 - a^2 = (r - a)(r + a), keeping the difference exact-ish.
        let tau = (r - self.a) * (r + self.a) / (2.0 * ey);
        if ey > 0.0 {
            PencilPos::Left(tau)
        } else {
            PencilPos::Right(tau)
        }
    }

    /// Parameter of the left disk with hyperbolic diameter `diam`; the right
    /// disk of the same diameter has the negated parameter.
    pub fn param_for_diameter(&self, diam: f64) -> f64 {
        if diam <= self.d {
            return 0.0;
        }
        let h = double_disk_offset(self.d, diam);
        let top = (0.5 * (h + 0.5 * diam)).tanh();
        let bot = (0.5 * (h - 0.5 * diam)).tanh();
        0.5 * (top + bot)
    }

    /// Parameters with `|t|` below this value describe genuine hyperbolic disks.
    pub fn hyperbolic_limit(&self) -> f64 {
        0.5 * (1.0 - self.a) * (1.0 + self.a)
    }

    /// The disk with parameter `t`, in the original coordinates.
    pub fn disk(&self, t: f64) -> HDisk {
        let re = (self.a * self.a + t * t).sqrt();
        let (top, bot) = (t + re, t - re);
        let (rt, rb) = (2.0 * top.atanh(), 2.0 * bot.atanh());
        let center = Point::new(0.5 * PI, 0.5 * (rt + rb));
        HDisk::new(self.frame.inverse().apply(&center), 0.5 * (rt - rb))
    }

    /// Folds points into `(R, L)`: the max right parameter and min left
    /// parameter. The empty disks of the family are exactly those with
    /// `R < t < L`. Points equal to `z1` or `z2` are skipped.
    pub fn empty_range<'a, I>(&self, points: I) -> (f64, f64)
    where
        I: IntoIterator<Item = &'a Point>,
    {
        let mut acc = EmptyRange::new();
        for x in points {
            if *x == self.z1 || *x == self.z2 {
                continue;
            }
            acc.push(self.position(x));
        }
        (acc.right, acc.left)
    }
}

/// Running `(R, L)` accumulator for [`Pencil::empty_range`].
#[derive(Clone, Copy, Debug)]
pub struct EmptyRange {
    pub right: f64,
    pub left: f64,
}

impl EmptyRange {
    pub fn new() -> EmptyRange {
        EmptyRange {
            right: f64::NEG_INFINITY,
            left: f64::INFINITY,
        }
    }

    pub fn push(&mut self, pos: PencilPos) {
        match pos {
            PencilPos::Left(t) => self.left = self.left.min(t),
            PencilPos::Right(t) => self.right = self.right.max(t),
        }
    }

    /// Some disk with parameter in `(-limit, limit)` is empty.
    pub fn has_empty_within(&self, limit: f64) -> bool {
        self.right.max(-limit) < self.left.min(limit)
    }
}

impl Default for EmptyRange {
    fn default() -> Self {
        EmptyRange::new()
    }
}
