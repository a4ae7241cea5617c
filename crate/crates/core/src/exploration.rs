//! Branching exploration of black Voronoi neighbours along C-shaped regions,
//! and Monte Carlo estimators for the offspring count and its error terms.
//!
//! Each explored node sees a fresh Poisson process in its own frame (node at
//! `o`, parent on the positive x-axis). Non-root nodes see the process with
//! `B(o, h)` and the sector of half-angle `θ - θ'` around the parent removed,
//! which is the part of the plane not revealed by earlier steps. Offspring
//! counts are therefore independent, and i.i.d. after the root.

use crate::error::{Error, Result};
use crate::geometry::pencil::{EmptyRange, Pencil};
use crate::geometry::{
    angle, ball_area, bearing, dist, isometry_to_origin, midpoint, wrap_pi, Isometry, Point,
};
use crate::ppp::{Exclusion, PointSource, SplitSource};
use crate::stats::{derive_seed, Estimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::PI;

/// `C(u, v, r, w, θ)`: points at distance in `(r - w, r + w)` from `u` making
/// an angle greater than `θ` with the ray `u -> v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CRegion {
    pub u: Point,
    pub v: Point,
    pub r: f64,
    pub w: f64,
    pub theta: f64,
}

impl CRegion {
    pub fn new(u: Point, v: Point, r: f64, w: f64, theta: f64) -> Result<CRegion> {
        if dist(&u, &v) == 0.0 {
            return Err(Error::DegenerateInput("C-region needs u != v".into()));
        }
        Ok(CRegion { u, v, r, w, theta })
    }

    pub fn contains(&self, x: &Point) -> bool {
        let d = dist(&self.u, x);
        if !(d > self.r - self.w && d < self.r + self.w) {
            return false;
        }
        angle(&self.v, &self.u, x).is_ok_and(|a| a > self.theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationParams {
    pub lambda: f64,
    pub p: f64,
    pub r: f64,
    pub w: f64,
    pub theta: f64,
    /// Angular slack of the excluded sector: non-root nodes lose the sector
    /// of half-angle `theta - theta_prime` around their parent.
    pub theta_prime: f64,
    pub h: f64,
}

impl ExplorationParams {
    /// `r = 2 ln(1/λ)`, `θ' = θ/2`.
    pub fn new(lambda: f64, p: f64, w: f64, theta: f64, h: f64) -> ExplorationParams {
        ExplorationParams {
            lambda,
            p,
            r: 2.0 * (1.0 / lambda).ln(),
            w,
            theta,
            theta_prime: 0.5 * theta,
            h,
        }
    }

    /// Desk-scale parameter recipe for target slack `eps`: `w` balances the
    /// budgets `e^{-w}` and `e^w e^{-e^{w/2}}` (root of `e^{w/2} = 2w`),
    /// `θ e^{2w} = eps/100`, and `λ·area(B(o,h)) = eps/10`.
    pub fn tuned(lambda: f64, p: f64, eps: f64) -> ExplorationParams {
        let (mut lo, mut hi) = (2.0f64, 10.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (0.5 * mid).exp() < 2.0 * mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = 0.5 * (lo + hi);
        let theta = 0.01 * eps * (-2.0 * w).exp();
        let h = (1.0 + 0.1 * eps / (lambda * 2.0 * PI)).acosh();
        ExplorationParams::new(lambda, p, w, theta, h)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda > 0.0
            && (0.0..=1.0).contains(&self.p)
            && self.r > 0.0
            && self.w > 0.0
            && self.theta > 0.0
            && self.theta < PI
            && (0.0..self.theta).contains(&self.theta_prime)
            && self.h > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid exploration parameters {self:?}"
            )))
        }
    }

    /// Parent direction used at the root: the point at distance `r` on the
    /// positive x-axis.
    pub fn root_direction(&self) -> Point {
        Point::new(0.0, self.r)
    }

    fn exclusion(&self) -> Exclusion {
        Exclusion {
            inner: self.h,
            half_angle: self.theta - self.theta_prime,
        }
    }
}

/// Is there a disk with `u, z` on its boundary, of diameter below `diam`,
/// containing no point of the source?
pub fn small_empty_disk(
    u: &Point,
    z: &Point,
    diam: f64,
    source: &mut dyn PointSource,
) -> Result<bool> {
    let pencil = Pencil::new(u, z)?;
    let d = pencil.chord_length();
    if d >= diam {
        return Ok(false);
    }
    let limit = pencil.param_for_diameter(diam);
    let m = midpoint(u, z)?;
    let mut acc = EmptyRange::new();
    // The Gabriel disk first: points in both of its halves rule out every
    // disk through the pair, which settles most pairs cheaply.
    let done = source.visit_ball(&m, 0.5 * d, false, &mut |x, _| {
        if x != u && x != z {
            acc.push(pencil.position(x));
        }
        acc.has_empty_within(limit)
    })?;
    if !done {
        return Ok(false);
    }
    let done = visit_double_disk(&pencil, limit, source, &mut |x| {
        if x != u && x != z {
            acc.push(pencil.position(x));
        }
        acc.has_empty_within(limit)
    })?;
    Ok(done && acc.has_empty_within(limit))
}

/// Visits the two pencil disks with parameters `±t`, whose union contains
/// every disk of the pencil with parameter in `[-t, t]`. Points in both are
/// seen twice.
pub fn visit_double_disk(
    pencil: &Pencil,
    t: f64,
    source: &mut dyn PointSource,
    f: &mut dyn FnMut(&Point) -> bool,
) -> Result<bool> {
    for s in [t, -t] {
        let disk = pencil.disk(s);
        if !source.visit_ball(
            &disk.center,
            disk.radius * (1.0 + 1e-9) + 1e-12,
            false,
            &mut |x, _| f(x),
        )? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The offspring set of `u` with parent direction `v`: black points of the
/// C-region that are angularly separated from all other black C-region
/// points, alone in their `h`-ball, and joined to `u` by an empty disk of
/// diameter below `r + w`.
pub fn offspring_set(
    u: &Point,
    v: &Point,
    params: &ExplorationParams,
    source: &mut dyn PointSource,
) -> Result<Vec<Point>> {
    let c = CRegion::new(*u, *v, params.r, params.w, params.theta)?;
    let mut cand: Vec<(f64, Point)> = source
        .collect_ball(u, params.r + params.w, true)?
        .into_iter()
        .filter(|(x, _)| c.contains(x))
        .map(|(x, _)| (bearing(u, &x), x))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.rho.total_cmp(&b.1.rho)));
    let n = cand.len();
    let mut out = Vec::new();
    for i in 0..n {
        if n > 1 {
            let prev = cand[(i + n - 1) % n].0;
            let next = cand[(i + 1) % n].0;
            let a = cand[i].0;
            if wrap_pi(a - prev).abs() <= params.theta || wrap_pi(next - a).abs() <= params.theta {
                continue;
            }
        }
        let z = cand[i].1;
        let alone = source.visit_ball(&z, params.h, false, &mut |x, _| *x == z)?;
        if !alone {
            continue;
        }
        if small_empty_disk(u, &z, params.r + params.w, source)? {
            out.push(z);
        }
    }
    Ok(out)
}

fn node_source(params: &ExplorationParams, seed: u64, root: bool) -> SplitSource {
    let s = SplitSource::new(params.lambda, params.p, seed);
    if root {
        s
    } else {
        s.with_exclusion(params.exclusion())
    }
}

/// Offspring of one node in its own frame (node at `o`, parent towards +x).
pub fn node_offspring(params: &ExplorationParams, seed: u64, root: bool) -> Result<Vec<Point>> {
    let mut src = node_source(params, seed, root);
    offspring_set(&Point::ORIGIN, &params.root_direction(), params, &mut src)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub parent: Option<usize>,
    /// Position in the parent's frame (parent at `o`, grandparent on the
    /// positive x-axis). The root has `o`.
    pub local: Point,
    pub generation: u32,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationTree {
    pub nodes: Vec<TreeNode>,
    pub params: ExplorationParams,
    pub seed: u64,
    /// Every node was explored and none has children left.
    pub extinct: bool,
    /// Stopped at the node budget.
    pub budget_exceeded: bool,
}

impl ExplorationTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Frame map of node `i` expressed in its parent's frame: sends `i` to
    /// `o` and the parent to the positive x-axis.
    fn frame_in_parent(&self, i: usize) -> Isometry {
        isometry_to_origin(&self.nodes[i].local, &Point::ORIGIN).expect("child differs from parent")
    }

    /// Position of `node` in the frame of its ancestor `anc`.
    pub fn position_in(&self, anc: usize, node: usize) -> Point {
        let mut x = Point::ORIGIN;
        let mut cur = node;
        while cur != anc {
            let back = self.frame_in_parent(cur).inverse();
            x = back.apply(&x);
            cur = self.nodes[cur]
                .parent
                .expect("anc must be an ancestor of node");
        }
        x
    }

    /// Offspring counts grouped by generation of the parent.
    pub fn generation_counts(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for n in &self.nodes {
            if self.budget_exceeded && n.children.is_empty() {
                // Unexplored leaves of a truncated run carry no count.
                continue;
            }
            let g = n.generation as usize;
            if out.len() <= g {
                out.resize(g + 1, Vec::new());
            }
            out[g].push(n.children.len());
        }
        out
    }
}

/// Runs the exploration breadth-first until extinction or `max_nodes` nodes.
pub fn run_exploration(
    params: &ExplorationParams,
    seed: u64,
    max_nodes: usize,
) -> Result<ExplorationTree> {
    params.validate()?;
    let mut nodes = vec![TreeNode {
        parent: None,
        local: Point::ORIGIN,
        generation: 0,
        children: Vec::new(),
    }];
    let mut queue = VecDeque::from([0usize]);
    let mut budget_exceeded = false;
    while let Some(i) = queue.pop_front() {
        if nodes.len() >= max_nodes {
            budget_exceeded = true;
            break;
        }
        let kids = node_offspring(params, derive_seed(seed, &[i as u64]), i == 0)?;
        let g = nodes[i].generation + 1;
        for z in kids {
            let id = nodes.len();
            nodes.push(TreeNode {
                parent: Some(i),
                local: z,
                generation: g,
                children: Vec::new(),
            });
            nodes[i].children.push(id);
            queue.push_back(id);
        }
    }
    Ok(ExplorationTree {
        nodes,
        params: *params,
        seed,
        extinct: !budget_exceeded,
        budget_exceeded,
    })
}

/// Results of checking a tree's geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeAudit {
    /// Every edge length lies in `(r - w, r + w)`.
    pub edge_lengths_ok: bool,
    /// Every pair of edges at a node makes an angle of at least `θ`.
    pub angles_ok: bool,
    /// No two audited nodes coincide.
    pub distinct: bool,
    /// Pairs at tree distance 2 or 3 checked.
    pub pairs_checked: usize,
    /// Smallest `K` with `dist >= dist_T (r - K)` on the checked pairs.
    pub k_emp: f64,
    /// Smallest `h` such that every node of the subtree past each edge
    /// `v -> u` (three levels deep) lies in `B(v, h) ∪ Sect(v, u, θ')`.
    pub h_emp: f64,
}

impl TreeAudit {
    pub fn passed(&self) -> bool {
        self.edge_lengths_ok && self.angles_ok && self.distinct
    }
}

/// Audits the tree in local frames, up to three edges away from each node.
pub fn audit_tree(t: &ExplorationTree) -> TreeAudit {
    let p = &t.params;
    let mut edge_ok = true;
    let mut angles_ok = true;
    let mut distinct = true;
    let mut pairs = 0;
    let mut k_emp: f64 = f64::NEG_INFINITY;
    let mut h_emp: f64 = 0.0;
    for (i, n) in t.nodes.iter().enumerate() {
        if n.parent.is_some() {
            let l = n.local.rho;
            edge_ok &= l > p.r - p.w && l < p.r + p.w;
        }
        // Directions of all incident edges, in the node's frame.
        let mut dirs: Vec<f64> = n.children.iter().map(|&c| t.nodes[c].local.alpha).collect();
        if n.parent.is_some() {
            dirs.push(0.0);
        } else {
            // The root's reference direction is not an edge, but its children
            // avoid it by at least θ as well.
            dirs.push(p.root_direction().alpha);
        }
        for a in 0..dirs.len() {
            for b in a + 1..dirs.len() {
                angles_ok &= wrap_pi(dirs[a] - dirs[b]).abs() >= p.theta;
            }
        }

        // Pairs through node i as an interior vertex: (x, i, y) with x, y
        // among parent and children, and length-3 paths (x, i, c, y).
        // Entries are (position, depth, branch); the parent has branch
        // `usize::MAX`.
        let mut all: Vec<(Point, usize, usize)> = n
            .children
            .iter()
            .map(|&c| (t.nodes[c].local, 1, c))
            .collect();
        if n.parent.is_some() {
            all.push((Point::new(0.0, n.local.rho), 1, usize::MAX));
        }
        for &c in &n.children {
            for &g in &t.nodes[c].children {
                all.push((t.position_in(i, g), 2, c));
            }
        }
        for a in 0..all.len() {
            for b in a + 1..all.len() {
                let (x, dx, bx) = all[a];
                let (y, dy, by) = all[b];
                if bx == by || dx + dy > 3 {
                    continue;
                }
                let d = dist(&x, &y);
                distinct &= d > 0.0;
                pairs += 1;
                k_emp = k_emp.max(p.r - d / (dx + dy) as f64);
            }
        }

        // Sector containment for the edges leaving node i.
        for &c in &n.children {
            let dir = t.nodes[c].local;
            let mut stack = vec![c];
            let mut depth = vec![1usize];
            while let (Some(x), Some(dd)) = (stack.pop(), depth.pop()) {
                let pos = t.position_in(i, x);
                let off = wrap_pi(pos.alpha - dir.alpha).abs();
                if off > p.theta_prime {
                    h_emp = h_emp.max(pos.rho);
                }
                if dd < 3 {
                    for &y in &t.nodes[x].children {
                        stack.push(y);
                        depth.push(dd + 1);
                    }
                }
            }
        }
    }
    TreeAudit {
        edge_lengths_ok: edge_ok,
        angles_ok,
        distinct,
        pairs_checked: pairs,
        k_emp: if pairs == 0 { 0.0 } else { k_emp },
        h_emp,
    }
}

/// Monte Carlo mean of the root offspring count.
pub fn estimate_ex(params: &ExplorationParams, seed: u64, trials: usize) -> Result<Estimate> {
    params.validate()?;
    let xs: Result<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            node_offspring(params, derive_seed(seed, &[0xe7, i]), true).map(|v| v.len() as f64)
        })
        .collect();
    Ok(Estimate::from_samples(&xs?))
}

/// Offspring counts of independent root and non-root nodes.
pub fn offspring_samples(
    params: &ExplorationParams,
    seed: u64,
    trials: usize,
    root: bool,
) -> Result<Vec<usize>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            node_offspring(params, derive_seed(seed, &[0xe8, u64::from(root), i]), root)
                .map(|v| v.len())
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalStats {
    pub runs: usize,
    /// Runs that reached the node budget.
    pub reached: usize,
    pub extinct: usize,
}

pub fn survival_statistics(
    params: &ExplorationParams,
    seed: u64,
    runs: usize,
    max_nodes: usize,
) -> Result<SurvivalStats> {
    let res: Result<Vec<bool>> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            run_exploration(params, derive_seed(seed, &[0x5a, i]), max_nodes)
                .map(|t| t.budget_exceeded)
        })
        .collect();
    let res = res?;
    let reached = res.iter().filter(|&&b| b).count();
    Ok(SurvivalStats {
        runs,
        reached,
        extinct: runs - reached,
    })
}

/// The six error terms bounding the gap between black degree and offspring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum XiKind {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl XiKind {
    pub const ALL: [XiKind; 6] = [
        XiKind::I,
        XiKind::II,
        XiKind::III,
        XiKind::IV,
        XiKind::V,
        XiKind::VI,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            XiKind::I => "I",
            XiKind::II => "II",
            XiKind::III => "III",
            XiKind::IV => "IV",
            XiKind::V => "V",
            XiKind::VI => "VI",
        }
    }

    /// Upper bound on the expectation.
    pub fn bound(&self, p: &ExplorationParams) -> f64 {
        let w = p.w;
        match self {
            XiKind::I => 1000.0 * (-w).exp(),
            XiKind::II => 1000.0 * p.theta * w.exp(),
            XiKind::III => 1000.0 * p.theta * (2.0 * w).exp(),
            XiKind::IV => 1000.0 * p.lambda * p.lambda * (w + p.h).exp(),
            XiKind::V | XiKind::VI => 1000.0 * w.exp() * (-(0.5 * w).exp()).exp(),
        }
    }

    /// Exact expectation where it has a closed form.
    pub fn closed_form(&self, p: &ExplorationParams) -> Option<f64> {
        let pl = p.p * p.lambda;
        let big = ball_area(p.r + p.w);
        match self {
            XiKind::I => Some(if p.r > p.w {
                pl * ball_area(p.r - p.w)
            } else {
                0.0
            }),
            XiKind::II => Some(pl * p.theta / PI * big),
            XiKind::III => Some(pl * pl * p.theta / PI * big * big),
            XiKind::IV => Some(pl * pl * big * ball_area(p.h)),
            XiKind::V | XiKind::VI => None,
        }
    }
}

impl std::str::FromStr for XiKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<XiKind> {
        XiKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown term {s:?} (expected I..VI)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub kind: XiKind,
    pub estimate: Estimate,
    pub bound: f64,
    pub closed_form: Option<f64>,
}

/// Radius beyond which the far-neighbour count is truncated: there a Gabriel
/// half holds about 20 expected points or more, so an empty one has
/// probability below `e^{-20}`.
pub fn far_cutoff(lambda: f64) -> f64 {
    2.0 * (40.0 / lambda).ln()
}

/// One sample of the chosen error term at the root configuration.
pub fn sample_xi(kind: XiKind, params: &ExplorationParams, seed: u64) -> Result<f64> {
    let mut src = SplitSource::new(params.lambda, params.p, seed);
    xi_count(kind, params, &mut src).map(|n| n as f64)
}

/// The chosen error term for the configuration `src`, with `u = o` and `v`
/// on the positive x-axis.
pub fn xi_count(
    kind: XiKind,
    params: &ExplorationParams,
    src: &mut dyn PointSource,
) -> Result<usize> {
    let p = params;
    let o = Point::ORIGIN;
    let big = p.r + p.w;
    let count = match kind {
        XiKind::I => {
            if p.r <= p.w {
                0
            } else {
                src.collect_ball(&o, p.r - p.w, true)?.len()
            }
        }
        XiKind::II => src
            .collect_ball(&o, big, true)?
            .iter()
            .filter(|(x, _)| x.rho == 0.0 || wrap_pi(x.alpha).abs() <= p.theta)
            .count(),
        XiKind::III => {
            let mut a: Vec<f64> = src
                .collect_ball(&o, big, true)?
                .iter()
                .map(|(x, _)| x.alpha)
                .collect();
            a.sort_by(f64::total_cmp);
            let n = a.len();
            let mut pairs = 0;
            // For each point, count the later points (cyclically) within θ.
            for i in 0..n {
                let mut k = 1;
                while k < n && (a[(i + k) % n] - a[i]).rem_euclid(2.0 * PI) < p.theta {
                    pairs += 1;
                    k += 1;
                }
            }
            2 * pairs
        }
        XiKind::IV => {
            let inner = src.collect_ball(&o, big, true)?;
            let mut pairs = 0;
            for (z, _) in &inner {
                src.visit_ball(z, p.h, true, &mut |x, _| {
                    if x != z && dist(x, z) < p.h {
                        pairs += 1;
                    }
                    true
                })?;
            }
            pairs
        }
        XiKind::V => {
            let cut = far_cutoff(p.lambda).max(big);
            let far: Vec<Point> = src
                .collect_ball(&o, cut, true)?
                .into_iter()
                .map(|(x, _)| x)
                .filter(|x| x.rho >= big)
                .collect();
            let mut n = 0;
            for z in &far {
                let pencil = Pencil::new(&o, z)?;
                let m = midpoint(&o, z)?;
                let mut acc = EmptyRange::new();
                src.visit_ball(&m, 0.5 * pencil.chord_length(), false, &mut |x, _| {
                    if x != z {
                        acc.push(pencil.position(x));
                    }
                    !(acc.left <= 0.0 && acc.right >= 0.0)
                })
                .map(|_| ())?;
                if !(acc.left <= 0.0 && acc.right >= 0.0) {
                    n += 1;
                }
            }
            n
        }
        XiKind::VI => {
            let ring: Vec<Point> = src
                .collect_ball(&o, big, true)?
                .into_iter()
                .map(|(x, _)| x)
                .filter(|x| x.rho > p.r - p.w && x.rho < big)
                .collect();
            let mut n = 0;
            for z in &ring {
                let pencil = Pencil::new(&o, z)?;
                let t = pencil.param_for_diameter(big);
                let mut acc = EmptyRange::new();
                visit_double_disk(&pencil, t, src, &mut |x| {
                    if x != z {
                        acc.push(pencil.position(x));
                    }
                    !(acc.left <= t && acc.right >= -t)
                })?;
                if acc.left > t || acc.right < -t {
                    n += 1;
                }
            }
            n
        }
    };
    Ok(count)
}

/// Monte Carlo estimate of one error term; requires `p <= 10 λ`.
pub fn estimate_xi(
    kind: XiKind,
    params: &ExplorationParams,
    seed: u64,
    trials: usize,
) -> Result<XiEstimate> {
    params.validate()?;
    if params.p > 10.0 * params.lambda * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "p = {} exceeds 10 λ = {}",
            params.p,
            10.0 * params.lambda
        )));
    }
    let xs: Result<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| sample_xi(kind, params, derive_seed(seed, &[0x71, i])))
        .collect();
    Ok(XiEstimate {
        kind,
        estimate: Estimate::from_samples(&xs?),
        bound: kind.bound(params),
        closed_form: kind.closed_form(params),
    })
}
