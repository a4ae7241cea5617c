//! Geometry properties as plain check functions of explicit inputs. The
//! proptest suite drives them with shrinking strategies; the acceptance
//! runner drives them with seeded random inputs.

use hpv_core::geometry::{
    ahd_disks, angle, angle_upper_bound, bounding_radius, cosines_lower_bound, dist, double_disk,
    double_disk_offset, gabriel_disk, gabriel_side, isometry_to_origin, law_of_cosines_side,
    midpoint, sector_containment_distance, sector_subset_margin, GabrielSide, HDisk, Isometry,
    Point, Sector,
};
use rand::Rng;
use std::f64::consts::{PI, TAU};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Map sending the origin to `c` (identity when `c` is the origin).
fn from_origin(c: &Point) -> Isometry {
    if c.is_origin() {
        Isometry::identity()
    } else {
        isometry_to_origin(c, &Point::ORIGIN).unwrap().inverse()
    }
}

/// Point at distance `len` from `u`, in direction `beta` of the frame at `u`.
fn offset(u: &Point, beta: f64, len: f64) -> Point {
    from_origin(u).apply(&Point::new(beta, len))
}

/// Deterministic polar grid over a disk, boundary included.
fn disk_grid(b: &HDisk, rings: usize, spokes: usize) -> Vec<Point> {
    let f = from_origin(&b.center);
    let mut pts = vec![b.center];
    for i in 1..=rings {
        let rad = b.radius * i as f64 / rings as f64;
        for j in 0..spokes {
            pts.push(f.apply(&Point::new(TAU * j as f64 / spokes as f64, rad)));
        }
    }
    pts
}

/// Disk through `z1, z2` whose centre sits at signed offset `s` from the
/// chord midpoint, positive to the left of `z1 -> z2`.
fn pencil_disk(z1: &Point, z2: &Point, s: f64) -> HDisk {
    let d = dist(z1, z2);
    let back = isometry_to_origin(&midpoint(z1, z2).unwrap(), z2)
        .unwrap()
        .inverse();
    let c = back.apply(&Point::new(
        if s >= 0.0 { 0.5 * PI } else { 1.5 * PI },
        s.abs(),
    ));
    HDisk::new(c, ((0.5 * d).cosh() * s.cosh()).acosh())
}

fn within(b: &HDisk, x: &Point) -> bool {
    dist(&b.center, x) <= b.radius + 1e-9 * (1.0 + b.radius)
}

pub fn isometry_invariance(center: Point, align: Point, x: Point, y: Point, half: f64) -> Check {
    if dist(&center, &align) < 1e-6 {
        return Ok(());
    }
    let phi = isometry_to_origin(&center, &align).unwrap();
    let (fx, fy, fc) = (phi.apply(&x), phi.apply(&y), phi.apply(&center));
    let (d0, d1) = (dist(&x, &y), dist(&fx, &fy));
    ensure((d0 - d1).abs() < 1e-9, || format!("dist {d0} -> {d1}"))?;
    ensure(fc.rho < 1e-12, || format!("centre maps to {fc:?}"))?;
    let fa = phi.apply(&align);
    ensure(wrap(fa.alpha) < 1e-9, || format!("align maps to {fa:?}"))?;
    if dist(&x, &y) < 1e-3 || dist(&x, &center) < 1e-3 {
        return Ok(());
    }
    let (a0, a1) = (
        angle(&y, &x, &center).unwrap(),
        angle(&fy, &fx, &fc).unwrap(),
    );
    ensure((a0 - a1).abs() < 1e-9, || format!("angle {a0} -> {a1}"))?;
    if (a0 - half).abs() > 1e-7 {
        let s0 = Sector::new(x, y, half).unwrap().contains(&center);
        let s1 = Sector::new(fx, fy, half).unwrap().contains(&fc);
        ensure(s0 == s1, || "sector membership changed".into())?;
        ensure(s0 == (a0 <= half), || "sector disagrees with angle".into())?;
    }
    Ok(())
}

/// Distance of an angle to 0 on the circle.
fn wrap(a: f64) -> f64 {
    a.min(TAU - a)
}

pub fn polar_round_trip(alpha: f64, rho: f64) -> Check {
    let z = Point::new(alpha, rho).to_euclidean();
    let back = Point::from_euclidean(z[0], z[1])
        .map_err(|e| e.to_string())?
        .to_euclidean();
    let err = (back[0] - z[0]).hypot(back[1] - z[1]);
    ensure(err < 1e-12, || {
        format!("round trip error {err} at rho {rho}")
    })
}

pub fn conformal_disk(center: Point, radius: f64) -> Check {
    let b = HDisk::new(center, radius);
    let e = b.to_euclidean();
    for j in 0..64 {
        let t = TAU * j as f64 / 64.0;
        let x = e.center[0] + e.radius * t.cos();
        let y = e.center[1] + e.radius * t.sin();
        let p = Point::from_euclidean(x, y).map_err(|e| e.to_string())?;
        let d = dist(&p, &center);
        ensure((d - radius).abs() < 1e-8, || {
            format!("boundary sample at {d}, radius {radius}")
        })?;
    }
    Ok(())
}

pub fn cosines_degenerate(a: f64, b: f64) -> Check {
    let c0 = law_of_cosines_side(a, b, 0.0);
    let cpi = law_of_cosines_side(a, b, PI);
    ensure((c0 - (a - b).abs()).abs() < 1e-9, || {
        format!("gamma 0: {c0}")
    })?;
    ensure((cpi - (a + b)).abs() < 1e-9, || format!("gamma pi: {cpi}"))
}

pub fn cosines_bound(a: f64, b: f64, gamma0: f64, t: f64) -> Check {
    let gamma = gamma0 + t * (PI - gamma0);
    let c = law_of_cosines_side(a, b, gamma);
    let lb = cosines_lower_bound(a, b, gamma0);
    ensure(c >= lb - 1e-9, || format!("c {c} below {lb}"))
}

/// Polar grid of the half of `B(o, radius)` with angles in `[from, from + π]`,
/// boundary included.
fn half_grid(radius: f64, from: f64) -> impl Iterator<Item = Point> {
    (1..=12).flat_map(move |i| {
        (0..=24).map(move |j| Point::new(from + PI * j as f64 / 24.0, radius * i as f64 / 12.0))
    })
}

/// Any disk through `z1, z2` contains one of the two Gabriel halves. Sampled
/// in the chord frame, where the halves are the upper and lower half-disks.
pub fn gabriel_half_inside(z1: Point, z2: Point, s: f64) -> Check {
    let d = dist(&z1, &z2);
    if d < 1e-3 {
        return Ok(());
    }
    let b = pencil_disk(&z1, &z2, s);
    let g = gabriel_disk(&z1, &z2).unwrap();
    let frame = isometry_to_origin(&midpoint(&z1, &z2).unwrap(), &z2).unwrap();
    let gc = frame.apply(&g.center);
    ensure(gc.rho < 1e-9 && (g.radius - 0.5 * d).abs() < 1e-9, || {
        format!("gabriel disk {g:?}")
    })?;
    let bf = HDisk::new(frame.apply(&b.center), b.radius);
    let inside = [0.0, PI].map(|from| half_grid(g.radius, from).all(|x| within(&bf, &x)));
    ensure(inside[0] || inside[1], || {
        format!("offset {s}: neither Gabriel half inside")
    })?;
    // The frame's upper and lower halves are the two Gabriel sides.
    let back = frame.inverse();
    let sides = [0.5 * PI, 1.5 * PI]
        .map(|a| gabriel_side(&z1, &z2, &back.apply(&Point::new(a, 0.5 * g.radius))).unwrap());
    ensure(
        sides[0] != sides[1] && !sides.contains(&GabrielSide::Outside),
        || format!("sides {sides:?}"),
    )
}

/// Any disk through `z1, z2` of diameter at least `rho` contains one of
/// the two double-disk halves. Each half is sampled in the frame of its own
/// disk, where it is the part on the near side of the Klein line through
/// the chord.
pub fn double_half_inside(z1: Point, z2: Point, rho_excess: f64, t: f64) -> Check {
    let d = dist(&z1, &z2);
    if d < 1e-3 {
        return Ok(());
    }
    let rho = d + rho_excess;
    let dd = double_disk(&z1, &z2, rho).unwrap();
    // Offsets beyond the double-disk offset give diameters of at least rho.
    let h = double_disk_offset(d, rho);
    let s = (h + t.abs()) * t.signum();
    let b = pencil_disk(&z1, &z2, s);
    let mid = midpoint(&z1, &z2).unwrap();
    let half_inside = |disk: &HDisk| {
        let frame = isometry_to_origin(&disk.center, &mid).unwrap();
        let bf = HDisk::new(frame.apply(&b.center), b.radius);
        let line = frame.apply(&mid).rho.tanh();
        half_grid(disk.radius, 0.0)
            .chain(half_grid(disk.radius, PI))
            .filter(|x| x.rho.tanh() * x.alpha.cos() <= line)
            .all(|x| within(&bf, &x))
    };
    ensure(half_inside(&dd.minus) || half_inside(&dd.plus), || {
        format!("offset {s}: neither half inside")
    })?;
    // Both disks pass through the chord ends with the requested diameter.
    for disk in [dd.minus, dd.plus] {
        for z in [z1, z2] {
            let e = dist(&disk.center, &z) - 0.5 * rho;
            ensure(e.abs() < 1e-9, || format!("chord end off boundary by {e}"))?;
        }
    }
    // The point of each disk farthest from the chord lies in its own half only.
    for (disk, minus) in [(dd.minus, true), (dd.plus, false)] {
        let back = isometry_to_origin(&disk.center, &mid).unwrap().inverse();
        let far = back.apply(&Point::new(PI, 0.999 * disk.radius));
        let got = (dd.contains_minus_half(&far), dd.contains_plus_half(&far));
        ensure(got == (minus, !minus), || {
            format!("far point of {disk:?} classified {got:?}")
        })?;
    }
    Ok(())
}

pub fn sector_subset(
    u: Point,
    beta: f64,
    r: f64,
    theta: f64,
    extra: f64,
    xb: f64,
    xr: f64,
) -> Check {
    let v = offset(&u, beta, r + sector_subset_margin(theta) + extra);
    let x = offset(&u, xb, xr * r);
    let a = angle(&u, &v, &x).unwrap();
    ensure(a <= theta + 1e-9, || format!("angle {a} > {theta}"))
}

pub fn sector_contain(u: Point, beta: f64, theta: f64, extra: f64, xb: f64, xr: f64) -> Check {
    let v = offset(&u, beta, sector_containment_distance(theta) + extra);
    let x = offset(&u, xb, xr);
    if dist(&x, &u) < 1e-9 || dist(&x, &v) < 1e-9 {
        return Ok(());
    }
    if angle(&v, &u, &x).unwrap() <= theta {
        return Ok(());
    }
    let a = angle(&u, &v, &x).unwrap();
    ensure(a <= theta + 1e-9, || {
        format!("outside both sectors: {a} > {theta}")
    })
}

#[allow(clippy::too_many_arguments)]
pub fn bounding(
    u: Point,
    beta: f64,
    r: f64,
    w: f64,
    theta: f64,
    t: f64,
    xb: f64,
    xr: f64,
) -> Check {
    let v = offset(&u, beta, r - w + t * 2.0 * w);
    let x = offset(&u, xb, xr * (r + w));
    let h = bounding_radius(w, theta);
    if dist(&v, &x) <= h + 1e-9 || dist(&v, &x) < 1e-9 {
        return Ok(());
    }
    let a = angle(&u, &v, &x).unwrap();
    ensure(a <= theta + 1e-9, || {
        format!("{x:?} outside B(v, {h}) and the sector")
    })
}

pub fn angle_bound(x1: Point, x2: Point) -> Check {
    if x1.rho < 1e-9 || x2.rho < 1e-9 {
        return Ok(());
    }
    let a = angle(&x1, &Point::ORIGIN, &x2).unwrap();
    let b = angle_upper_bound(&x1, &x2).unwrap();
    ensure(b > a, || format!("bound {b} <= angle {a}"))
}

pub fn ahd_matches_sampling(c1: Point, r1: f64, c2: Point, r2: f64) -> Check {
    let (b1, b2) = (HDisk::new(c1, r1), HDisk::new(c2, r2));
    let want = ahd_disks(&b1, &b2);
    // Sample B(c2, r2) in the frame centred at c2.
    let c = if dist(&c1, &c2) > 0.0 {
        isometry_to_origin(&c2, &c1).unwrap().apply(&c1)
    } else {
        Point::ORIGIN
    };
    let sup = disk_grid(&HDisk::new(Point::ORIGIN, r2), 4, 256)
        .iter()
        .map(|x| (dist(x, &c) - r1).max(0.0))
        .fold(0.0, f64::max);
    ensure(
        sup <= want + 1e-9 && sup >= want - 1e-3 * (1.0 + want),
        || format!("sampled {sup} vs {want}"),
    )
}

pub fn gabriel_endpoints(z1: Point, z2: Point) -> Check {
    if dist(&z1, &z2) < 1e-6 {
        return Ok(());
    }
    let g = gabriel_disk(&z1, &z2).unwrap();
    let (e1, e2) = (
        dist(&g.center, &z1) - g.radius,
        dist(&g.center, &z2) - g.radius,
    );
    ensure(e1.abs() < 1e-9 && e2.abs() < 1e-9, || {
        format!("endpoint errors {e1} {e2}")
    })
}

fn point<R: Rng>(rng: &mut R, max_rho: f64) -> Point {
    Point::new(rng.random::<f64>() * TAU, rng.random::<f64>() * max_rho)
}

/// Names of the checks, in the order used by [`random_case`].
pub const CHECKS: [&str; 13] = [
    "isometry invariance",
    "polar round trip",
    "conformal disk",
    "cosines degeneracies",
    "cosines bound",
    "gabriel half inside (spade)",
    "double-disk half inside (club)",
    "sector subset",
    "sector containment",
    "bounding ball",
    "angle upper bound",
    "ahd identity",
    "gabriel endpoints",
];

/// Runs check `which` on random inputs.
pub fn random_case<R: Rng>(which: usize, rng: &mut R) -> Check {
    let mut f = || rng.random::<f64>();
    match which {
        0 => {
            let mut r = || f();
            let (c, a, x, y) = (
                Point::new(r() * TAU, r() * 6.0),
                Point::new(r() * TAU, r() * 6.0),
                Point::new(r() * TAU, r() * 6.0),
                Point::new(r() * TAU, r() * 6.0),
            );
            isometry_invariance(c, a, x, y, 0.05 + r() * 3.0)
        }
        1 => polar_round_trip(f() * TAU, f() * 30.0),
        2 => {
            let c = point(rng, 8.0);
            conformal_disk(c, rng.random::<f64>() * 4.0)
        }
        3 => cosines_degenerate(f() * 10.0, f() * 10.0),
        4 => cosines_bound(f() * 10.0, f() * 10.0, 1e-3 + f() * (PI - 1e-3), f()),
        5 => {
            let (z1, z2) = (point(rng, 6.0), point(rng, 6.0));
            gabriel_half_inside(z1, z2, (rng.random::<f64>() - 0.5) * 8.0)
        }
        6 => {
            let (z1, z2) = (point(rng, 5.0), point(rng, 5.0));
            let e = 0.01 + rng.random::<f64>() * 4.0;
            double_half_inside(z1, z2, e, (rng.random::<f64>() - 0.5) * 6.0)
        }
        7 => {
            let u = point(rng, 4.0);
            let mut r = || rng.random::<f64>();
            sector_subset(
                u,
                r() * TAU,
                0.1 + 4.0 * r(),
                0.05 + r() * 1.5,
                3.0 * r(),
                r() * TAU,
                r(),
            )
        }
        8 => {
            let u = point(rng, 4.0);
            let mut r = || rng.random::<f64>();
            sector_contain(
                u,
                r() * TAU,
                0.05 + r() * 1.5,
                2.0 * r(),
                r() * TAU,
                12.0 * r(),
            )
        }
        9 => {
            let u = point(rng, 3.0);
            let mut r = || rng.random::<f64>();
            let rr = 1.0 + 7.0 * r();
            bounding(
                u,
                r() * TAU,
                rr,
                0.05 + r() * (rr - 0.05),
                0.05 + r() * 1.5,
                r(),
                r() * TAU,
                r(),
            )
        }
        10 => {
            let x1 = point(rng, 12.0);
            angle_bound(x1, point(rng, 12.0))
        }
        11 => {
            let c1 = point(rng, 5.0);
            let c2 = point(rng, 5.0);
            let mut r = || rng.random::<f64>();
            ahd_matches_sampling(c1, 3.0 * r(), c2, 3.0 * r())
        }
        12 => {
            let z1 = point(rng, 10.0);
            gabriel_endpoints(z1, point(rng, 10.0))
        }
        _ => Ok(()),
    }
}
