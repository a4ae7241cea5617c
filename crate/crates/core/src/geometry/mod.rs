//! Hyperbolic plane primitives on the Poincaré disk.
//!
//! Points are stored in polar-hyperbolic form `(alpha, rho)`: `rho` is the
//! hyperbolic distance to the origin and `alpha` the polar angle. Euclidean
//! (Poincaré) and Klein coordinates are derived on demand. Every formula here
//! avoids differences of large hyperbolic functions, so results stay accurate
//! far from the origin where `1 - |z|` is below double precision.

pub mod pencil;

pub use pencil::{Pencil, PencilPos};

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Smallest admissible `1 - |z|` for a Poincaré embedding.
pub const DEFAULT_PRECISION_FLOOR: f64 = 1e-12;

/// Largest hyperbolic radius whose Poincaré embedding keeps `1 - |z| >= floor`.
pub fn max_rho_for_floor(floor: f64) -> f64 {
    (2.0 / floor - 1.0).ln()
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_tau(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let w = wrap_tau(a);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// A point of the hyperbolic plane in polar-hyperbolic coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    /// Polar angle in `[0, 2π)`.
    pub alpha: f64,
    /// Hyperbolic distance to the origin.
    pub rho: f64,
}

impl Point {
    pub const ORIGIN: Point = Point {
        alpha: 0.0,
        rho: 0.0,
    };

    /// Builds a point, normalizing the angle. A negative radius is reflected
    /// through the origin.
    pub fn new(alpha: f64, rho: f64) -> Point {
        if rho < 0.0 {
            return Point::new(alpha + PI, -rho);
        }
        if rho == 0.0 {
            return Point::ORIGIN;
        }
        Point {
            alpha: wrap_tau(alpha),
            rho,
        }
    }

    /// Point with Poincaré coordinates `(x, y)`.
    pub fn from_euclidean(x: f64, y: f64) -> Result<Point> {
        let r = x.hypot(y);
        if !(r < 1.0) {
            return Err(Error::Geometry(format!(
                "({x}, {y}) is not inside the unit disk"
            )));
        }
        if r == 0.0 {
            return Ok(Point::ORIGIN);
        }
        Ok(Point::new(y.atan2(x), 2.0 * r.atanh()))
    }

    /// Poincaré coordinates.
    pub fn to_euclidean(&self) -> [f64; 2] {
        let r = (0.5 * self.rho).tanh();
        [r * self.alpha.cos(), r * self.alpha.sin()]
    }

    /// Klein (projective) coordinates.
    pub fn to_klein(&self) -> [f64; 2] {
        let r = self.rho.tanh();
        [r * self.alpha.cos(), r * self.alpha.sin()]
    }

    /// Euclidean norm of the Poincaré embedding.
    pub fn euclidean_norm(&self) -> f64 {
        (0.5 * self.rho).tanh()
    }

    /// `1 - |z|` of the Poincaré embedding, evaluated without cancellation.
    pub fn boundary_gap(&self) -> f64 {
        2.0 / (self.rho.exp() + 1.0)
    }

    pub fn is_origin(&self) -> bool {
        self.rho == 0.0
    }
}

/// `ln(sinh x)` for `x > 0`.
fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Returns `sinh^2(d/2)` for the side `d` opposite the angle `gamma` in a
/// triangle with sides `a`, `b` around it.
fn sinh2_half_side(a: f64, b: f64, gamma: f64) -> f64 {
    let sh = (0.5 * (a - b)).sinh();
    let sg = (0.5 * gamma).sin();
    sh * sh + a.sinh() * b.sinh() * sg * sg
}

/// Side length from `sinh^2(d/2)`, switching to the log domain when the
/// direct evaluation would overflow.
fn side_from_terms(a: f64, b: f64, gamma: f64) -> f64 {
    if a + b < 600.0 {
        return 2.0 * sinh2_half_side(a, b, gamma).sqrt().asinh();
    }
    let sg = (0.5 * gamma).sin().abs();
    let t1 = if a == b {
        f64::NEG_INFINITY
    } else {
        2.0 * ln_sinh(0.5 * (a - b).abs())
    };
    let t2 = if sg == 0.0 || a == 0.0 || b == 0.0 {
        f64::NEG_INFINITY
    } else {
        ln_sinh(a) + ln_sinh(b) + 2.0 * sg.ln()
    };
    let m = t1.max(t2);
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    let ln_s2 = m + ((t1 - m).exp() + (t2 - m).exp()).ln();
    // asinh(y) = ln(y + sqrt(y^2 + 1)) with y = exp(ln_s2 / 2) very large.
    2.0 * (0.5 * ln_s2 + std::f64::consts::LN_2 + (-ln_s2).exp() * 0.25)
}

/// Hyperbolic distance.
pub fn dist(u: &Point, v: &Point) -> f64 {
    side_from_terms(u.rho, v.rho, wrap_pi(u.alpha - v.alpha))
}

/// Hyperbolic area of a ball of radius `r`: `2π(cosh r - 1)`.
pub fn ball_area(r: f64) -> f64 {
    let s = (0.5 * r).sinh();
    4.0 * PI * s * s
}

/// Third side of a triangle with sides `a`, `b` enclosing the angle `gamma`.
pub fn law_of_cosines_side(a: f64, b: f64, gamma: f64) -> f64 {
    side_from_terms(a, b, gamma)
}

/// Lower bound `a + b + ln((1 - cos γ0)/4)` on the side opposite an angle of
/// at least `gamma0`.
pub fn cosines_lower_bound(a: f64, b: f64, gamma0: f64) -> f64 {
    a + b + ((1.0 - gamma0.cos()) / 4.0).ln()
}

/// Direction in which `x` is seen from `p`, measured in the frame obtained by
/// the Möbius translation sending `p` to the origin (no rotation).
///
/// Undefined (returns `p.alpha`) when `x == p`.
pub fn bearing(p: &Point, x: &Point) -> f64 {
    if p.rho == 0.0 {
        return x.alpha;
    }
    if x.rho == 0.0 {
        return wrap_tau(p.alpha + PI);
    }
    let a = wrap_pi(x.alpha - p.alpha);
    let (c, b) = (p.rho, x.rho);
    let sa2 = (0.5 * a).sin();
    // Four-part formula at p, with the denominator rewritten as a sum of
    // nonnegative-or-exact terms; both terms are scaled by 1/(cosh c sinh b).
    let (num, den) = if c + b < 600.0 {
        (
            a.sin() * b.sinh(),
            (c - b).sinh() + 2.0 * c.cosh() * b.sinh() * sa2 * sa2,
        )
    } else {
        let scale = -(ln_sinh(b) + c - std::f64::consts::LN_2);
        let s_cb = if c > b {
            (ln_sinh(c - b) + scale).exp()
        } else if c < b {
            -(ln_sinh(b - c) + scale).exp()
        } else {
            0.0
        };
        (
            a.sin() * (-c + std::f64::consts::LN_2).exp(),
            s_cb + 2.0 * sa2 * sa2,
        )
    };
    if num == 0.0 && den == 0.0 {
        return p.alpha;
    }
    wrap_tau(p.alpha + PI - num.atan2(den))
}

/// Angle at `b` of the triangle `a b c`, in `[0, π]`.
pub fn angle(a: &Point, b: &Point, c: &Point) -> Result<f64> {
    if dist(a, b) == 0.0 || dist(c, b) == 0.0 {
        return Err(Error::DegenerateInput(
            "angle needs both rays to be nondegenerate".into(),
        ));
    }
    Ok(wrap_pi(bearing(b, a) - bearing(b, c)).abs())
}

/// Orientation of `x` with respect to the directed geodesic `z1 -> z2`:
/// positive on the left, negative on the right, zero on the geodesic.
pub fn side_of(z1: &Point, z2: &Point, x: &Point) -> f64 {
    if dist(z1, x) == 0.0 {
        return 0.0;
    }
    let s = wrap_pi(bearing(z1, x) - bearing(z1, z2)).sin();
    if s.abs() < 1e-300 {
        0.0
    } else {
        s
    }
}

/// Disk automorphism `z -> e^{i rotation} (z - c)/(1 - conj(c) z)` where `c`
/// is the Poincaré embedding of `center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    /// Point sent to the origin.
    pub center: Point,
    /// Rotation applied after the translation.
    pub rotation: f64,
}

impl Isometry {
    pub fn identity() -> Isometry {
        Isometry {
            center: Point::ORIGIN,
            rotation: 0.0,
        }
    }

    pub fn rotation(phi: f64) -> Isometry {
        Isometry {
            center: Point::ORIGIN,
            rotation: phi,
        }
    }

    pub fn apply(&self, x: &Point) -> Point {
        if self.center.is_origin() {
            return Point::new(x.alpha + self.rotation, x.rho);
        }
        let rho = dist(&self.center, x);
        if rho == 0.0 {
            return Point::ORIGIN;
        }
        Point::new(bearing(&self.center, x) + self.rotation, rho)
    }

    pub fn inverse(&self) -> Isometry {
        if self.center.is_origin() {
            return Isometry::rotation(-self.rotation);
        }
        Isometry {
            center: Point::new(self.center.alpha + self.rotation + PI, self.center.rho),
            rotation: -self.rotation,
        }
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &Isometry) -> Isometry {
        let center = inner.inverse().apply(&self.center);
        let image_of_origin = self.apply(&inner.apply(&Point::ORIGIN));
        let rotation = if center.is_origin() {
            let probe = Point::new(0.0, 1.0);
            self.apply(&inner.apply(&probe)).alpha - probe.alpha
        } else {
            image_of_origin.alpha - (center.alpha + PI)
        };
        Isometry {
            center,
            rotation: wrap_pi(rotation),
        }
    }
}

/// Isometry sending `p` to the origin and `align_with` to the positive x-axis.
pub fn isometry_to_origin(p: &Point, align_with: &Point) -> Result<Isometry> {
    if dist(p, align_with) == 0.0 {
        return Err(Error::DegenerateInput(
            "cannot align with the point being moved to the origin".into(),
        ));
    }
    Ok(Isometry {
        center: *p,
        rotation: -bearing(p, align_with),
    })
}

/// Closed hyperbolic disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HDisk {
    pub center: Point,
    pub radius: f64,
}

/// Euclidean disk in Poincaré coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EDisk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl HDisk {
    pub fn new(center: Point, radius: f64) -> HDisk {
        HDisk { center, radius }
    }

    /// Closed-disk membership (boundary counts as inside).
    pub fn contains(&self, x: &Point) -> bool {
        dist(&self.center, x) <= self.radius
    }

    pub fn area(&self) -> f64 {
        ball_area(self.radius)
    }

    /// The same point set as a Euclidean disk of the Poincaré model.
    pub fn to_euclidean(&self) -> EDisk {
        let lo = (0.5 * (self.center.rho - self.radius)).tanh();
        let hi = (0.5 * (self.center.rho + self.radius)).tanh();
        let mid = 0.5 * (lo + hi);
        let (s, c) = self.center.alpha.sin_cos();
        EDisk {
            center: [mid * c, mid * s],
            radius: 0.5 * (hi - lo),
        }
    }

    /// Whether `self` is contained in `other`.
    pub fn inside(&self, other: &HDisk) -> bool {
        dist(&self.center, &other.center) + self.radius <= other.radius
    }

    /// Whether the two closed disks meet.
    pub fn meets(&self, other: &HDisk) -> bool {
        dist(&self.center, &other.center) <= self.radius + other.radius
    }

    /// Distance from `x` to the disk (zero inside).
    pub fn distance_to(&self, x: &Point) -> f64 {
        (dist(&self.center, x) - self.radius).max(0.0)
    }
}

/// Points whose ray from `apex` makes an angle of at most `half_angle` with
/// the ray towards `through`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub apex: Point,
    pub through: Point,
    pub half_angle: f64,
}

impl Sector {
    pub fn new(apex: Point, through: Point, half_angle: f64) -> Result<Sector> {
        if dist(&apex, &through) == 0.0 {
            return Err(Error::DegenerateInput(
                "sector apex equals its direction point".into(),
            ));
        }
        Ok(Sector {
            apex,
            through,
            half_angle,
        })
    }

    /// The apex itself is contained.
    pub fn contains(&self, x: &Point) -> bool {
        if dist(&self.apex, x) == 0.0 {
            return true;
        }
        wrap_pi(bearing(&self.apex, x) - bearing(&self.apex, &self.through)).abs()
            <= self.half_angle
    }
}

/// Euclidean radius of the circle through `u` (on the x-axis, `|u| = u_norm`)
/// meeting the x-axis at angle `theta` and the unit circle orthogonally.
pub fn orthocircle_radius(u_norm: f64, theta: f64) -> Result<f64> {
    if u_norm <= 0.0 || u_norm >= 1.0 {
        return Err(Error::DegenerateInput(format!(
            "orthocircle needs 0 < |u| < 1, got {u_norm}"
        )));
    }
    let s = theta.sin();
    if s <= 0.0 {
        return Err(Error::DegenerateInput(format!(
            "theta {theta} not in (0, π)"
        )));
    }
    Ok((1.0 - u_norm * u_norm) / (2.0 * u_norm * s))
}

/// Point at distance `t` from `a` along the geodesic towards `b`.
pub fn along_geodesic(a: &Point, b: &Point, t: f64) -> Result<Point> {
    let iso = isometry_to_origin(a, b)?;
    Ok(iso.inverse().apply(&Point::new(0.0, t)))
}

/// Hyperbolic midpoint of a segment.
pub fn midpoint(a: &Point, b: &Point) -> Result<Point> {
    along_geodesic(a, b, 0.5 * dist(a, b))
}

/// Smallest disk with both points on its boundary.
pub fn gabriel_disk(z1: &Point, z2: &Point) -> Result<HDisk> {
    Ok(HDisk::new(midpoint(z1, z2)?, 0.5 * dist(z1, z2)))
}

/// Position of a point relative to the Gabriel disk of an oriented pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GabrielSide {
    /// Inside the Gabriel disk, left of `z1 -> z2` or on the geodesic.
    Minus,
    /// Inside the Gabriel disk, strictly right of `z1 -> z2`.
    Plus,
    Outside,
}

/// Classifies `x` against the Gabriel disk of `z1 -> z2`.
pub fn gabriel_side(z1: &Point, z2: &Point, x: &Point) -> Result<GabrielSide> {
    let g = gabriel_disk(z1, z2)?;
    if !g.contains(x) {
        return Ok(GabrielSide::Outside);
    }
    Ok(if side_of(z1, z2, x) >= 0.0 {
        GabrielSide::Minus
    } else {
        GabrielSide::Plus
    })
}

/// The two disks of a given diameter through a pair of points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleDisk {
    /// Disk whose center lies left of `z1 -> z2`; its left part is `DD^-`.
    pub minus: HDisk,
    /// Disk whose center lies right of `z1 -> z2`; its right part is `DD^+`.
    pub plus: HDisk,
    pub chord_ends: (Point, Point),
}

/// Offset of the double-disk centers from the chord midpoint.
pub fn double_disk_offset(d: f64, rho: f64) -> f64 {
    ((0.5 * rho).cosh() / (0.5 * d).cosh()).max(1.0).acosh()
}

/// Double disk `DD(z1, z2, rho)`.
pub fn double_disk(z1: &Point, z2: &Point, rho: f64) -> Result<DoubleDisk> {
    let d = dist(z1, z2);
    if d == 0.0 {
        return Err(Error::DegenerateInput(
            "double disk of coincident points".into(),
        ));
    }
    if d >= rho {
        return Err(Error::Geometry(format!(
            "double disk needs dist {d} < diameter {rho}"
        )));
    }
    let h = double_disk_offset(d, rho);
    let mid = midpoint(z1, z2)?;
    let back = isometry_to_origin(&mid, z2)?.inverse();
    Ok(DoubleDisk {
        minus: HDisk::new(back.apply(&Point::new(0.5 * PI, h)), 0.5 * rho),
        plus: HDisk::new(back.apply(&Point::new(1.5 * PI, h)), 0.5 * rho),
        chord_ends: (*z1, *z2),
    })
}

impl DoubleDisk {
    pub fn contains(&self, x: &Point) -> bool {
        self.minus.contains(x) || self.plus.contains(x)
    }

    /// Membership in `DD^-`: the left half (geodesic included).
    pub fn contains_minus_half(&self, x: &Point) -> bool {
        let (z1, z2) = &self.chord_ends;
        side_of(z1, z2, x) >= 0.0 && self.minus.contains(x)
    }

    /// Membership in `DD^+`: the strictly right half.
    pub fn contains_plus_half(&self, x: &Point) -> bool {
        let (z1, z2) = &self.chord_ends;
        side_of(z1, z2, x) < 0.0 && self.plus.contains(x)
    }
}

/// `sup_{x in b2} dist(x, b1)` for disks: `max(0, d(c1,c2) + r2 - r1)`.
pub fn ahd_disks(b1: &HDisk, b2: &HDisk) -> f64 {
    (dist(&b1.center, &b2.center) + b2.radius - b1.radius).max(0.0)
}

/// Strict upper bound `2π exp((d(x1,x2) - ρ1 - ρ2)/2)` on the angle `x1 o x2`.
pub fn angle_upper_bound(x1: &Point, x2: &Point) -> Result<f64> {
    if x1.is_origin() || x2.is_origin() {
        return Err(Error::DegenerateInput("angle bound at the origin".into()));
    }
    Ok(TAU * (0.5 * (dist(x1, x2) - x1.rho - x2.rho)).exp())
}

/// Margin `d0` such that `dist(u, v) > r + d0` puts all of `B(u, r)` inside
/// `Sect(v, u, θ)`: the ball subtends a half-angle `asin(sinh r / sinh d)`
/// at `v`, and `sinh r / sinh(r + d0) <= e^{-d0}`.
pub fn sector_subset_margin(theta: f64) -> f64 {
    if theta >= 0.5 * PI {
        0.0
    } else {
        -theta.sin().ln()
    }
}

/// Distance `d0(θ)` beyond which everything outside `Sect(u, v, θ)` lies in
/// `Sect(v, u, θ)`. The extreme case is an ideal triangle vertex with angles
/// `θ` at both ends: `cosh d0 = (1 + cos²θ) / sin²θ`.
pub fn sector_containment_distance(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    ((1.0 + c * c) / (s * s)).max(1.0).acosh()
}

/// Radius `h(w, θ)` such that for `r - w < dist(u, v) < r + w`, every point of
/// `B(u, r + w)` lies in `B(v, h) ∪ Sect(v, u, θ)`. From the cosines bound,
/// `dist(v, x) <= r + w - dist(u, v) + K(θ) < 2w + K(θ)`.
pub fn bounding_radius(w: f64, theta: f64) -> f64 {
    2.0 * w - ((1.0 - theta.cos()) / 4.0).ln()
}
