//! Percolation of black cells: the cluster of the origin, radius crossings,
//! and bisection estimates of the critical colour probability.
//!
//! Crossing experiments run on a lazily realised process (no window, hence no
//! boundary), computing Voronoi neighbours on demand. For each trial the
//! invasion threshold `p*` is the smallest `p` at which the black cluster of
//! `o` reaches radius `r_target`; crossing at `p` is then just `p* <= p`, so
//! all probes of a bisection share the same trials exactly.

use crate::delaunay::DelaunayGraph;
use crate::error::{Error, Result};
use crate::geometry::{dist, max_rho_for_floor, Point, DEFAULT_PRECISION_FLOOR};
use crate::ppp::{LazyProcess, SimConfig};
use crate::stats::{derive_seed, wilson_interval};
use crate::voronoi::{default_search_radius, local_cell};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

/// Normal quantile used for reported intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub cluster_vertices: Vec<usize>,
    pub reached_radius: f64,
    pub touched_uncertified: bool,
}

/// Black cluster of the origin (vertex 0, always black) in a window graph.
pub fn black_cluster(g: &DelaunayGraph, black: &[bool]) -> ClusterResult {
    let mut seen = vec![false; g.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut cluster = Vec::new();
    let mut reached: f64 = 0.0;
    let mut touched = false;
    while let Some(u) = queue.pop_front() {
        cluster.push(u);
        reached = reached.max(g.vertices[u].rho);
        for (&v, &c) in g.adjacency[u].iter().zip(&g.certified[u]) {
            touched |= !c;
            if !seen[v] && black[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    cluster.sort_unstable();
    ClusterResult {
        cluster_vertices: cluster,
        reached_radius: reached,
        touched_uncertified: touched,
    }
}

type Key = (u64, u64);

fn key(x: &Point) -> Key {
    (x.alpha.to_bits(), x.rho.to_bits())
}

/// Marked process plus the origin, with cached Voronoi neighbourhoods.
pub struct LazyTessellation {
    process: LazyProcess,
    marks: HashMap<Key, f64>,
    cells: HashMap<Key, Vec<Point>>,
    s0: f64,
    max_rho: f64,
}

impl LazyTessellation {
    pub fn new(lambda: f64, seed: u64) -> LazyTessellation {
        LazyTessellation {
            process: LazyProcess::new(lambda, seed),
            marks: HashMap::from([(key(&Point::ORIGIN), -1.0)]),
            cells: HashMap::new(),
            s0: default_search_radius(lambda),
            max_rho: max_rho_for_floor(DEFAULT_PRECISION_FLOOR),
        }
    }

    /// Colour uniform of a realised point; the origin has mark -1.
    pub fn mark(&self, x: &Point) -> f64 {
        self.marks[&key(x)]
    }

    pub fn neighbours(&mut self, site: &Point) -> Result<Vec<Point>> {
        if let Some(n) = self.cells.get(&key(site)) {
            return Ok(n.clone());
        }
        let (process, marks) = (&mut self.process, &mut self.marks);
        let mut ball = |c: &Point, s: f64| -> Result<Vec<Point>> {
            let mut out = Vec::new();
            process.visit_ball(c, s, &mut |m| {
                marks.insert(key(&m.point), m.mark);
                out.push(m.point);
                true
            })?;
            if dist(c, &Point::ORIGIN) <= s {
                out.push(Point::ORIGIN);
            }
            Ok(out)
        };
        let cell = local_cell(site, self.s0, self.max_rho - site.rho, &mut ball)?;
        self.cells.insert(key(site), cell.neighbours.clone());
        Ok(cell.neighbours)
    }
}

#[derive(Clone, Copy, Debug)]
struct ByMark(f64, Point);

impl PartialEq for ByMark {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for ByMark {}
impl PartialOrd for ByMark {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for ByMark {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0
            .total_cmp(&o.0)
            .then(self.1.rho.total_cmp(&o.1.rho))
            .then(self.1.alpha.total_cmp(&o.1.alpha))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invasion {
    /// Smallest `p` whose black cluster of `o` reaches the target radius, or
    /// `None` if it exceeds the cap.
    pub threshold: Option<f64>,
    /// Cells invaded.
    pub invaded: usize,
}

/// Invasion percolation from `o` until a vertex with `ρ >= r_target` is
/// invaded or the smallest frontier mark exceeds `cap`.
pub fn invasion_threshold(lambda: f64, seed: u64, r_target: f64, cap: f64) -> Result<Invasion> {
    let mut t = LazyTessellation::new(lambda, seed);
    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<Key> = HashSet::from([key(&Point::ORIGIN)]);
    heap.push(Reverse(ByMark(-1.0, Point::ORIGIN)));
    let mut worst: f64 = 0.0;
    let mut invaded = 0;
    while let Some(Reverse(ByMark(m, x))) = heap.pop() {
        if m > cap {
            return Ok(Invasion {
                threshold: None,
                invaded,
            });
        }
        worst = worst.max(m);
        if x.rho >= r_target {
            return Ok(Invasion {
                threshold: Some(worst),
                invaded,
            });
        }
        invaded += 1;
        for y in t.neighbours(&x)? {
            if seen.insert(key(&y)) {
                heap.push(Reverse(ByMark(t.mark(&y), y)));
            }
        }
    }
    Err(Error::DegenerateInput(
        "invasion ran out of vertices".into(),
    ))
}

/// Whether the black cluster of `o` at colour probability `p` reaches
/// `r_target`, by breadth-first search. Stops after `max_cells` cells.
pub fn crosses_bfs(
    lambda: f64,
    p: f64,
    seed: u64,
    r_target: f64,
    max_cells: usize,
) -> Result<bool> {
    let mut t = LazyTessellation::new(lambda, seed);
    let mut seen: HashSet<Key> = HashSet::from([key(&Point::ORIGIN)]);
    let mut queue = VecDeque::from([Point::ORIGIN]);
    let mut visited = 0;
    while let Some(x) = queue.pop_front() {
        if x.rho >= r_target {
            return Ok(true);
        }
        visited += 1;
        if visited > max_cells {
            return Err(Error::BudgetExceeded(format!(
                "more than {max_cells} cells"
            )));
        }
        for y in t.neighbours(&x)? {
            if t.mark(&y) <= p && seen.insert(key(&y)) {
                queue.push_back(y);
            }
        }
    }
    Ok(false)
}

/// Invasion thresholds of independent trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub lambda: f64,
    pub r_target: f64,
    pub cap: f64,
    /// `Err` entries are rejected trials (precision limit hit).
    pub trials: Vec<std::result::Result<Option<f64>, String>>,
}

/// One bisection probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub lambda: f64,
    pub p: f64,
    pub trials: usize,
    pub crossings: usize,
    pub rejections: usize,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl Probe {
    pub fn fraction(&self) -> f64 {
        self.crossings as f64 / self.trials.max(1) as f64
    }

    pub const CSV_HEADER: &'static str =
        "lambda,p,trials,crossings,rejections,wilson_low,wilson_high";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.lambda,
            self.p,
            self.trials,
            self.crossings,
            self.rejections,
            self.wilson_low,
            self.wilson_high
        )
    }
}

impl ThresholdSet {
    /// Runs `trials` invasions with seeds derived from `seed`.
    pub fn run(lambda: f64, seed: u64, trials: usize, r_target: f64, cap: f64) -> ThresholdSet {
        let trials = (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                invasion_threshold(lambda, derive_seed(seed, &[0x9e7c, i]), r_target, cap)
                    .map(|inv| inv.threshold)
                    .map_err(|e| e.to_string())
            })
            .collect();
        ThresholdSet {
            lambda,
            r_target,
            cap,
            trials,
        }
    }

    pub fn probe(&self, p: f64) -> Probe {
        let mut crossings = 0;
        let mut rejections = 0;
        for t in &self.trials {
            match t {
                Ok(Some(th)) if *th <= p => crossings += 1,
                Ok(_) => {}
                Err(_) => rejections += 1,
            }
        }
        let n = self.trials.len() - rejections;
        let (wilson_low, wilson_high) = wilson_interval(crossings, n, Z95);
        Probe {
            lambda: self.lambda,
            p,
            trials: n,
            crossings,
            rejections,
            wilson_low,
            wilson_high,
        }
    }
}

/// Fraction of trials whose black cluster of `o` reaches `r_target`.
pub fn crossing_probability(cfg: &SimConfig, p: f64, r_target: f64) -> Result<Probe> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("p must lie in [0,1], got {p}")));
    }
    let set = ThresholdSet::run(cfg.lambda, cfg.seed, cfg.trials, r_target, p.max(1e-12));
    Ok(set.probe(p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcEstimate {
    pub p_hat: f64,
    pub low: f64,
    pub high: f64,
    pub trials_per_probe: usize,
    pub trace: Vec<Probe>,
}

/// Upper end of the bisection bracket; `p_c < 1/2` for every intensity.
pub const PC_BRACKET_HIGH: f64 = 0.5;
pub const MAX_BISECTION_DEPTH: usize = 12;

/// Bisection on `p` of "crossing probability >= 1/2 at the Wilson lower
/// bound", with `r_target` defaulting to `2r`.
pub fn estimate_pc(cfg: &SimConfig, trials_per_probe: usize, tol: f64) -> Result<PcEstimate> {
    cfg.validate()?;
    let r_target = 2.0 * cfg.r();
    let set = ThresholdSet::run(
        cfg.lambda,
        cfg.seed,
        trials_per_probe,
        r_target,
        PC_BRACKET_HIGH,
    );
    pc_from_thresholds(&set, tol)
}

pub fn pc_from_thresholds(set: &ThresholdSet, tol: f64) -> Result<PcEstimate> {
    let supercritical = |pr: &Probe| pr.wilson_low >= 0.5;
    let mut trace = Vec::new();
    let top = set.probe(PC_BRACKET_HIGH);
    trace.push(top);
    if top.trials == 0 || !supercritical(&top) {
        return Err(Error::Inconclusive(format!(
            "p = {PC_BRACKET_HIGH} not supercritical: {} of {} trials crossed",
            top.crossings, top.trials
        )));
    }
    let (mut lo, mut hi) = (0.0, PC_BRACKET_HIGH);
    for _ in 0..MAX_BISECTION_DEPTH {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pr = set.probe(mid);
        trace.push(pr);
        if supercritical(&pr) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PcEstimate {
        p_hat: 0.5 * (lo + hi),
        low: lo,
        high: hi,
        trials_per_probe: set.trials.len(),
        trace,
    })
}
